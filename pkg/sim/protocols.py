"""
Per-vertex beeping algorithms.

* ``CollisionDetectionAutomaton``  collision detection on BL (Monte Carlo)
* ``ColouringAutomaton``           colouring on B_cd L without knowledge (Las Vegas)
* ``BoundedColouringAutomaton``    (K+1)-colouring on B_cd L knowing K >= max degree
* ``TwoHopColouringAutomaton``     2-hop-colouring on B_cd L_cd (Las Vegas)
* ``DegreeAutomaton``              degree computation on B_cd L_cd (Las Vegas)

The B_cd L_cd automata also run on BL through ``virtual_slot_adapter``; the
``*_bl`` entry points below do that and return a Monte Carlo verdict.

Beeping probabilities are exact powers of one half, stored as the exponent
``e`` with ``p = 2**-e``; ``e`` never drops below 1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from core.config import CONFIG
from network.channel import BCD_L, BCD_LCD, BL, ModelSpec, SlotAction, SlotFeedback
from network.graph import Graph, metrics
from network.oracle import Verdict, check_degrees, is_proper_colouring, is_two_hop_colouring
from sim.emulation import (
    EmulatedInput,
    EmulationParams,
    DetectionSlotAutomaton,
    Signature,
    virtual_slot_adapter,
)
from sim.engine import (
    AutomatonFactory,
    PhaseBudgetKind,
    ProtocolAutomaton,
    coin,
    default_slot_budget,
    phase_budget,
    run,
)
from sim.trace_protocol import JSONPayload, RunResult, Trace


# ---- collision-detection length ----


class KPolicy(str, enum.Enum):
    PER_VERTEX = "per-vertex"
    WHP_LOCAL = "whp-local"
    PER_GRAPH = "per-graph"


def k_for(
    policy: KPolicy | str, *, eps: Optional[float] = None, n: Optional[int] = None
) -> int:
    """Number of detection phases for the requested error guarantee."""
    policy = KPolicy(policy)
    if policy is not KPolicy.WHP_LOCAL and (eps is None or not 0.0 < eps < 1.0):
        raise ValueError(f"epsilon must satisfy 0 < eps < 1, got {eps}")
    if policy is not KPolicy.PER_VERTEX and (n is None or n < 1):
        raise ValueError(f"n must be >= 1, got {n}")
    if policy is KPolicy.PER_VERTEX:
        return math.ceil(math.log2(1.0 / eps)) + 1  # type: ignore[operator]
    if policy is KPolicy.WHP_LOCAL:
        return math.ceil(2 * math.log2(n)) + 1  # type: ignore[arg-type]
    return math.ceil(math.log2(n / eps)) + 1  # type: ignore[operator]


# ---- vertex state ----


class ColourState(str, enum.Enum):
    ACTIVE = "active"
    COLOURED = "coloured"
    TURNED_OFF = "turned-off"


class BoundedState(str, enum.Enum):
    ACTIVE = "Active"
    INACTIVE = "Inactive"


class DegreeState(str, enum.Enum):
    ACTIVE = "active"
    PASSIVE = "passive"
    TURNED_OFF = "turned-off"


class PaletteVariant(str, enum.Enum):
    BASIC = "basic"
    MODIFIED = "modified"


@dataclass
class VertexState:
    state: enum.Enum
    candidate: bool = False
    p_exponent: int = 1
    colour: int = 0
    counter: int = 0
    palette: Set[int] = field(default_factory=set)
    deg: int = 0
    collision: bool = False

    @property
    def p(self) -> float:
        return math.ldexp(1.0, -self.p_exponent)

    def double_p(self) -> None:
        if self.p_exponent > 1:
            self.p_exponent -= 1

    def halve_p(self) -> None:
        self.p_exponent += 1

    def digest(self, value: Any) -> str:
        return f"{self.state.value}|{self.p_exponent}|{value}"


# ---- automata ----


class CollisionDetectionAutomaton(ProtocolAutomaton):
    name = "collide"
    slots_per_phase = 2

    def __init__(self, k: int, wishes: Any = False) -> None:
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        self.k = k
        self.wishes = bool(wishes)
        self.vs = VertexState(state=ColourState.ACTIVE)
        self._phase = 0
        self._bit = 0
        self._heard = [False, False]

    def act(self, slot: int, rng: np.random.Generator) -> SlotAction:
        if slot == 0:
            self._heard = [False, False]
            if self.wishes:
                self._bit = int(rng.integers(0, 2))
        if self.wishes and slot == self._bit:
            return SlotAction.BEEP
        return SlotAction.LISTEN

    def observe(self, slot: int, feedback: SlotFeedback) -> None:
        if feedback.action is SlotAction.LISTEN:
            self._heard[slot] = feedback.heard_beep
        if slot == 1:
            # A wisher listened in one slot only; a non-wisher needs both.
            if self.wishes:
                hit = any(self._heard)
            else:
                hit = all(self._heard)
            self.vs.collision = self.vs.collision or hit
            self._phase += 1

    @property
    def terminated(self) -> bool:
        return self._phase >= self.k

    def payload(self) -> Any:
        return self.vs.collision

    def digest(self) -> str:
        return f"{'W' if self.wishes else 'N'}|{self._phase}|{int(self.vs.collision)}"


class ColouringAutomaton(ProtocolAutomaton):
    name = "colour"
    detection_slots = frozenset({0})

    def __init__(self, *, local_termination: bool = False) -> None:
        self.local_termination = local_termination
        self.slots_per_phase = 2 if local_termination else 1
        self.vs = VertexState(state=ColourState.ACTIVE)
        self._confirmed = False

    def act(self, slot: int, rng: np.random.Generator) -> SlotAction:
        active = self.vs.state is ColourState.ACTIVE
        if slot == 1:
            return SlotAction.BEEP if active else SlotAction.LISTEN
        if not active:
            return SlotAction.LISTEN
        self.vs.colour += 1
        self.vs.candidate = coin(rng, self.vs.p_exponent)
        return SlotAction.BEEP if self.vs.candidate else SlotAction.LISTEN

    def observe(self, slot: int, feedback: SlotFeedback) -> None:
        if slot == 1:
            if (
                self.vs.state is ColourState.COLOURED
                and feedback.action is SlotAction.LISTEN
                and not feedback.heard_beep
            ):
                self._confirmed = True
            return
        if self.vs.state is not ColourState.ACTIVE:
            return
        if self.vs.candidate:
            if not feedback.internal_collision:
                self.vs.state = ColourState.COLOURED
                return
            self.vs.halve_p()
        elif feedback.heard_beep:
            self.vs.halve_p()
        else:
            self.vs.double_p()

    @property
    def terminated(self) -> bool:
        if self.local_termination:
            return self._confirmed
        return self.vs.state is ColourState.COLOURED

    def payload(self) -> Any:
        return self.vs.colour if self.vs.state is ColourState.COLOURED else None

    def digest(self) -> str:
        return self.vs.digest(self.vs.colour)


class BoundedColouringAutomaton(ProtocolAutomaton):
    name = "colour-k"
    slots_per_phase = 2
    detection_slots = frozenset({0})

    def __init__(self, cap: int, variant: PaletteVariant | str = PaletteVariant.BASIC) -> None:
        if cap < 0:
            raise ValueError(f"degree bound K must be >= 0, got {cap}")
        self.cap = cap
        self.variant = PaletteVariant(variant)
        self.vs = VertexState(state=BoundedState.ACTIVE, palette=set(range(cap + 1)))
        self._cycle_size = cap + 1
        self._won = False

    def _palette_size(self) -> int:
        if self.variant is PaletteVariant.MODIFIED:
            return self._cycle_size
        return len(self.vs.palette)

    def act(self, slot: int, rng: np.random.Generator) -> SlotAction:
        if slot == 1:
            if self._won:
                self.vs.colour = self.vs.counter
                self.vs.state = BoundedState.INACTIVE
                return SlotAction.BEEP
            return SlotAction.LISTEN
        self._won = False
        self.vs.candidate = False
        size = self._palette_size()
        if self.vs.counter in self.vs.palette and size > 0:
            self.vs.candidate = int(rng.integers(0, 2 * size)) == 0
        return SlotAction.BEEP if self.vs.candidate else SlotAction.LISTEN

    def observe(self, slot: int, feedback: SlotFeedback) -> None:
        if slot == 0:
            if self.vs.candidate:
                self._won = not feedback.internal_collision
            return
        if feedback.action is SlotAction.LISTEN and feedback.heard_beep:
            self.vs.palette.discard(self.vs.counter)
        # Cycles run over all K+1 colours so every colour keeps being proposed.
        self.vs.counter = (self.vs.counter + 1) % (self.cap + 1)
        if self.vs.counter == 0:
            self._cycle_size = len(self.vs.palette)

    @property
    def terminated(self) -> bool:
        return self.vs.state is BoundedState.INACTIVE

    def payload(self) -> Any:
        return self.vs.colour if self.vs.state is BoundedState.INACTIVE else None

    def digest(self) -> str:
        return f"{self.vs.state.value}|{len(self.vs.palette)}|{self.vs.colour}"


class _DistanceTwoAutomaton(ProtocolAutomaton):
    """Shared slot-1 bookkeeping of the 2-hop-colouring and degree automata."""

    detection_slots = frozenset({0})

    def __init__(self, initial: enum.Enum) -> None:
        self.vs = VertexState(state=initial)
        self._internal = False
        self._heard1 = False
        self._peripheral = False
        self._heard2 = False
        self._heard3 = False

    def _candidate_slot(self, rng: np.random.Generator, active: bool) -> SlotAction:
        self._internal = self._heard1 = self._peripheral = False
        self._heard2 = self._heard3 = False
        self.vs.candidate = active and coin(rng, self.vs.p_exponent)
        return SlotAction.BEEP if self.vs.candidate else SlotAction.LISTEN

    def _observe_candidate_slot(self, feedback: SlotFeedback) -> None:
        if feedback.action is SlotAction.BEEP:
            self._internal = feedback.internal_collision
        else:
            self._heard1 = feedback.heard_beep
            self._peripheral = feedback.peripheral_collision

    @staticmethod
    def _heard(feedback: SlotFeedback) -> bool:
        return feedback.action is SlotAction.LISTEN and feedback.heard_beep

    def _alone_within_two(self) -> bool:
        return self.vs.candidate and not self._internal and not self._heard2

    def _adjust_p(self) -> None:
        if not self.vs.candidate and not self._heard1 and not self._heard3:
            self.vs.double_p()
        else:
            self.vs.halve_p()


class TwoHopColouringAutomaton(_DistanceTwoAutomaton):
    name = "two-hop"
    slots_per_phase = 4

    def __init__(self) -> None:
        super().__init__(ColourState.ACTIVE)

    def act(self, slot: int, rng: np.random.Generator) -> SlotAction:
        active = self.vs.state is ColourState.ACTIVE
        if slot == 0:
            if active:
                self.vs.colour += 1
            return self._candidate_slot(rng, active)
        if slot == 1:
            return SlotAction.BEEP if self._peripheral else SlotAction.LISTEN
        if slot == 2:
            return SlotAction.BEEP if self._heard1 else SlotAction.LISTEN
        return SlotAction.BEEP if active else SlotAction.LISTEN

    def observe(self, slot: int, feedback: SlotFeedback) -> None:
        if slot == 0:
            self._observe_candidate_slot(feedback)
        elif slot == 1:
            self._heard2 = self._heard(feedback)
            if self._alone_within_two():
                self.vs.state = ColourState.COLOURED
        elif slot == 2:
            self._heard3 = self._heard(feedback)
            if self.vs.state is ColourState.ACTIVE:
                self._adjust_p()
        elif (
            self.vs.state is ColourState.COLOURED
            and feedback.action is SlotAction.LISTEN
            and not feedback.heard_beep
        ):
            self.vs.state = ColourState.TURNED_OFF

    @property
    def terminated(self) -> bool:
        return self.vs.state is ColourState.TURNED_OFF

    def payload(self) -> Any:
        if self.vs.state is ColourState.ACTIVE:
            return None
        return self.vs.colour

    def digest(self) -> str:
        return self.vs.digest(self.vs.colour)


class DegreeAutomaton(_DistanceTwoAutomaton):
    name = "degree"
    slots_per_phase = 5

    def __init__(self) -> None:
        super().__init__(DegreeState.ACTIVE)

    def act(self, slot: int, rng: np.random.Generator) -> SlotAction:
        active = self.vs.state is DegreeState.ACTIVE
        if slot == 0:
            return self._candidate_slot(rng, active)
        if slot == 1:
            return SlotAction.BEEP if self._peripheral else SlotAction.LISTEN
        if slot == 2:
            return SlotAction.BEEP if self._heard1 else SlotAction.LISTEN
        if slot == 3:
            if self._alone_within_two():
                self.vs.state = DegreeState.PASSIVE
                return SlotAction.BEEP
            return SlotAction.LISTEN
        return SlotAction.BEEP if active else SlotAction.LISTEN

    def observe(self, slot: int, feedback: SlotFeedback) -> None:
        if slot == 0:
            self._observe_candidate_slot(feedback)
        elif slot == 1:
            self._heard2 = self._heard(feedback)
        elif slot == 2:
            self._heard3 = self._heard(feedback)
        elif slot == 3:
            if self._heard(feedback):
                self.vs.deg += 1
            if self.vs.state is DegreeState.ACTIVE:
                self._adjust_p()
        elif (
            self.vs.state is DegreeState.PASSIVE
            and feedback.action is SlotAction.LISTEN
            and not feedback.heard_beep
        ):
            self.vs.state = DegreeState.TURNED_OFF

    @property
    def terminated(self) -> bool:
        return self.vs.state is DegreeState.TURNED_OFF

    def payload(self) -> Any:
        return self.vs.deg

    def digest(self) -> str:
        return self.vs.digest(self.vs.deg)


# ---- entry points ----


@dataclass(frozen=True)
class ProtocolRun:
    values: Tuple[Any, ...]
    result: RunResult
    trace: Trace
    verdict: Optional[Verdict] = None


def bounded_cycle_budget(n: int, cap: int, constant: Optional[int] = None) -> int:
    """Cycle envelope C * (log2 n + log2(K)^2) for bounded colouring."""
    c = CONFIG.bounded_cycle_constant if constant is None else constant
    log_k = math.log2(cap) if cap > 1 else 0.0
    return math.ceil(c * (math.log2(max(1, n)) + log_k**2))


def _envelope(g: Graph, kind: PhaseBudgetKind) -> int:
    return phase_budget(kind, max(1, g.n), metrics(g).max_degree)


def _execute(
    g: Graph,
    factory: AutomatonFactory,
    model: ModelSpec,
    seed: int,
    budget: int,
    *,
    protocol: str,
    params: Optional[JSONPayload] = None,
    local_inputs: Optional[Sequence[Any]] = None,
    record_trace: bool = False,
) -> ProtocolRun:
    trace, result = run(
        g,
        factory,
        model,
        seed,
        budget,
        local_inputs=local_inputs,
        record_trace=record_trace,
        protocol=protocol,
        params=params,
    )
    return ProtocolRun(values=result.payloads, result=result, trace=trace)


def _check_vertices(g: Graph, vertices: Iterable[int], label: str) -> Set[int]:
    chosen = set(int(v) for v in vertices)
    bad = sorted(v for v in chosen if not 0 <= v < g.n)
    if bad:
        raise ValueError(f"{label} outside 0..{g.n - 1}: {bad}")
    return chosen


def detect_collision_bl(
    g: Graph,
    wishers: Iterable[int],
    k: int,
    seed: int,
    *,
    record_trace: bool = False,
) -> ProtocolRun:
    wishing = _check_vertices(g, wishers, "wishers")
    return _execute(
        g,
        lambda wishes: CollisionDetectionAutomaton(k, wishes),
        BL,
        seed,
        CollisionDetectionAutomaton.slots_per_phase * k,
        protocol="collide",
        params={"k": k, "wishers": sorted(wishing)},
        local_inputs=[v in wishing for v in range(g.n)],
        record_trace=record_trace,
    )


def colour_bcdl(
    g: Graph,
    seed: int,
    budget: Optional[int] = None,
    *,
    local_termination: bool = False,
    record_trace: bool = False,
) -> ProtocolRun:
    slots = 2 if local_termination else 1
    if budget is None:
        budget = default_slot_budget(_envelope(g, PhaseBudgetKind.COLOURING), slots)
    return _execute(
        g,
        lambda _: ColouringAutomaton(local_termination=local_termination),
        BCD_L,
        seed,
        budget,
        protocol="colour",
        params={"local_termination": local_termination},
        record_trace=record_trace,
    )


def colour_bcdl_bounded(
    g: Graph,
    cap: int,
    variant: PaletteVariant | str,
    seed: int,
    budget: Optional[int] = None,
    *,
    record_trace: bool = False,
) -> ProtocolRun:
    variant = PaletteVariant(variant)
    if budget is None:
        budget = default_slot_budget(
            bounded_cycle_budget(g.n, cap) * (cap + 1),
            BoundedColouringAutomaton.slots_per_phase,
        )
    return _execute(
        g,
        lambda _: BoundedColouringAutomaton(cap, variant),
        BCD_L,
        seed,
        budget,
        protocol="colour-k",
        params={"K": cap, "variant": variant.value},
        record_trace=record_trace,
    )


def two_hop_colour_bcdlcd(
    g: Graph,
    seed: int,
    budget: Optional[int] = None,
    *,
    record_trace: bool = False,
) -> ProtocolRun:
    if budget is None:
        budget = default_slot_budget(
            _envelope(g, PhaseBudgetKind.TWO_HOP),
            TwoHopColouringAutomaton.slots_per_phase,
        )
    return _execute(
        g,
        lambda _: TwoHopColouringAutomaton(),
        BCD_LCD,
        seed,
        budget,
        protocol="two-hop",
        record_trace=record_trace,
    )


def degree_bcdlcd(
    g: Graph,
    seed: int,
    budget: Optional[int] = None,
    *,
    record_trace: bool = False,
) -> ProtocolRun:
    if budget is None:
        budget = default_slot_budget(
            _envelope(g, PhaseBudgetKind.DEGREE), DegreeAutomaton.slots_per_phase
        )
    return _execute(
        g,
        lambda _: DegreeAutomaton(),
        BCD_LCD,
        seed,
        budget,
        protocol="degree",
        record_trace=record_trace,
    )


def _emulated(
    g: Graph,
    inner: AutomatonFactory,
    params: EmulationParams,
    seed: int,
    budget: Optional[int],
    kind: PhaseBudgetKind,
    *,
    protocol: str,
    signatures: Optional[Sequence[Signature]],
    fresh_signatures: bool,
    record_trace: bool,
    extra_params: Optional[JSONPayload] = None,
    inner_inputs: Optional[Sequence[Any]] = None,
) -> ProtocolRun:
    factory = virtual_slot_adapter(inner, params, fresh_signatures=fresh_signatures)
    if signatures is not None and len(signatures) != g.n:
        raise ValueError(f"{len(signatures)} forced signatures for {g.n} vertices")
    local_inputs: Optional[List[Any]] = None
    if signatures is not None or inner_inputs is not None:
        local_inputs = [
            EmulatedInput(
                inner=inner_inputs[v] if inner_inputs is not None else None,
                signature=signatures[v] if signatures is not None else None,
            )
            for v in range(g.n)
        ]
    slots = factory(local_inputs[0] if local_inputs else None).slots_per_phase if g.n else 1
    if budget is None:
        budget = default_slot_budget(_envelope(g, kind), slots)
    run_params: JSONPayload = {
        "k": params.k,
        "fresh_signatures": fresh_signatures,
        "forced_signatures": signatures is not None,
    }
    run_params.update(extra_params or {})
    return _execute(
        g,
        factory,
        BL,
        seed,
        budget,
        protocol=protocol,
        params=run_params,
        local_inputs=local_inputs,
        record_trace=record_trace,
    )


def degree_bl(
    g: Graph,
    params: EmulationParams,
    seed: int,
    budget: Optional[int] = None,
    *,
    signatures: Optional[Sequence[Signature]] = None,
    fresh_signatures: bool = False,
    record_trace: bool = False,
) -> ProtocolRun:
    outcome = _emulated(
        g,
        lambda _: DegreeAutomaton(),
        params,
        seed,
        budget,
        PhaseBudgetKind.DEGREE,
        protocol="degree-bl",
        signatures=signatures,
        fresh_signatures=fresh_signatures,
        record_trace=record_trace,
    )
    verdict = check_degrees(g, outcome.values) if outcome.result.terminated else None
    return ProtocolRun(outcome.values, outcome.result, outcome.trace, verdict)


def colour_bl(
    g: Graph,
    params: EmulationParams,
    seed: int,
    budget: Optional[int] = None,
    *,
    signatures: Optional[Sequence[Signature]] = None,
    fresh_signatures: bool = False,
    record_trace: bool = False,
) -> ProtocolRun:
    outcome = _emulated(
        g,
        lambda _: ColouringAutomaton(),
        params,
        seed,
        budget,
        PhaseBudgetKind.COLOURING,
        protocol="colour-bl",
        signatures=signatures,
        fresh_signatures=fresh_signatures,
        record_trace=record_trace,
    )
    verdict = is_proper_colouring(g, outcome.values) if outcome.result.terminated else None
    return ProtocolRun(outcome.values, outcome.result, outcome.trace, verdict)


def two_hop_colour_bl(
    g: Graph,
    params: EmulationParams,
    seed: int,
    budget: Optional[int] = None,
    *,
    signatures: Optional[Sequence[Signature]] = None,
    fresh_signatures: bool = False,
    record_trace: bool = False,
) -> ProtocolRun:
    outcome = _emulated(
        g,
        lambda _: TwoHopColouringAutomaton(),
        params,
        seed,
        budget,
        PhaseBudgetKind.TWO_HOP,
        protocol="two-hop-bl",
        signatures=signatures,
        fresh_signatures=fresh_signatures,
        record_trace=record_trace,
    )
    verdict = (
        is_two_hop_colouring(g, outcome.values) if outcome.result.terminated else None
    )
    return ProtocolRun(outcome.values, outcome.result, outcome.trace, verdict)


def emulated_detection(
    g: Graph,
    wishers: Iterable[int],
    params: EmulationParams,
    virtual_slots: int,
    seed: int,
    *,
    fresh_signatures: bool = True,
    record_trace: bool = False,
) -> ProtocolRun:
    """Repeat one emulated virtual slot; payloads count detected collisions per vertex."""
    wishing = _check_vertices(g, wishers, "wishers")
    return _emulated(
        g,
        lambda wishes: DetectionSlotAutomaton(virtual_slots, wishes),
        params,
        seed,
        virtual_slots * params.physical_slots,
        PhaseBudgetKind.COLOURING,
        protocol="emulate",
        signatures=None,
        fresh_signatures=fresh_signatures,
        record_trace=record_trace,
        extra_params={"virtual_slots": virtual_slots, "wishers": sorted(wishing)},
        inner_inputs=[v in wishing for v in range(g.n)],
    )
