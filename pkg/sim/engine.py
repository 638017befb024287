"""
Lockstep slot scheduler.

Every vertex runs an identical automaton built by the same factory. Within a
slot the engine first collects every intent, then resolves the channel, then
hands each vertex its own feedback. Automata never see their vertex index, the
topology or each other's state; their only inputs are the slot position inside
the phase, a private generator and the feedback.
"""

from __future__ import annotations

import abc
import enum
import math
from typing import Any, Callable, ClassVar, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from core.config import CONFIG
from core.logger import get_logger
from network.channel import CapabilityFault, ModelSpec, SlotAction, SlotFeedback, resolve_slot
from network.graph import Graph
from sim.trace_protocol import JSONPayload, RunOutcome, RunResult, SlotRecord, Trace

logger = get_logger("engine")

_SEED_LIMIT = 1 << 64


class ProtocolAutomaton(abc.ABC):
    """Per-vertex protocol state machine driven by the engine."""

    name: str = "automaton"
    slots_per_phase: int = 1
    # Slots (within a phase) whose feedback needs B_cd or L_cd detail.
    detection_slots: ClassVar[FrozenSet[int]] = frozenset()

    @abc.abstractmethod
    def act(self, slot: int, rng: np.random.Generator) -> SlotAction:
        ...

    @abc.abstractmethod
    def observe(self, slot: int, feedback: SlotFeedback) -> None:
        ...

    @property
    @abc.abstractmethod
    def terminated(self) -> bool:
        ...

    @abc.abstractmethod
    def payload(self) -> Any:
        ...

    def digest(self) -> str:
        return ""

    def describe_slot(self, slot: int) -> Optional[JSONPayload]:
        return None


AutomatonFactory = Callable[[Any], ProtocolAutomaton]


def vertex_rng(seed: int, vertex: int) -> np.random.Generator:
    """Private stream for one vertex: a Philox counter generator keyed by (seed, vertex)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, vertex])))


def coin(rng: np.random.Generator, exponent: int) -> bool:
    """True with probability exactly 2**-exponent."""
    remaining = exponent
    while remaining > 0:
        chunk = min(remaining, 62)
        if int(rng.integers(0, 1 << chunk)) != 0:
            return False
        remaining -= chunk
    return True


class PhaseBudgetKind(str, enum.Enum):
    COLOURING = "colouring"
    TWO_HOP = "two_hop"
    DEGREE = "degree"


def phase_budget(kind: PhaseBudgetKind | str, n: int, max_degree: int) -> int:
    kind = PhaseBudgetKind(kind)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if max_degree < 0:
        raise ValueError(f"max degree must be >= 0, got {max_degree}")
    degree_term = max_degree if kind is PhaseBudgetKind.COLOURING else max_degree**2
    return math.ceil(76 * math.log2(n) + 112 * degree_term)


def default_slot_budget(
    phases: int, slots_per_phase: int, factor: Optional[int] = None
) -> int:
    multiplier = CONFIG.budget_factor if factor is None else factor
    return multiplier * max(1, phases) * slots_per_phase


def _refault(exc: CapabilityFault, slot: int, slots_per_phase: int) -> CapabilityFault:
    return CapabilityFault(
        f"slot {slot} (phase {slot // slots_per_phase}, position {slot % slots_per_phase}): {exc}"
    )


def run(
    g: Graph,
    factory: AutomatonFactory,
    model: ModelSpec,
    seed: int,
    slot_budget: int,
    *,
    local_inputs: Optional[Sequence[Any]] = None,
    record_trace: bool = True,
    protocol: str = "",
    params: Optional[JSONPayload] = None,
) -> Tuple[Trace, RunResult]:
    if slot_budget < 1:
        raise ValueError(f"slot_budget must be >= 1, got {slot_budget}")
    if not 0 <= seed < _SEED_LIMIT:
        raise ValueError(f"seed must be a 64-bit unsigned value, got {seed}")
    inputs: Sequence[Any] = local_inputs if local_inputs is not None else [None] * g.n
    if len(inputs) != g.n:
        raise ValueError(f"local_inputs has {len(inputs)} entries, graph has {g.n} vertices")

    automata: List[ProtocolAutomaton] = [factory(inputs[v]) for v in range(g.n)]
    rngs = [vertex_rng(seed, v) for v in range(g.n)]
    slots_per_phase = automata[0].slots_per_phase if automata else 1
    trace = Trace()

    slot = 0
    live: List[bool] = [not a.terminated for a in automata]
    done = not any(live)
    while not done and slot < slot_budget:
        position = slot % slots_per_phase
        if position == 0:
            live = [not a.terminated for a in automata]
        try:
            intents = [
                automata[v].act(position, rngs[v]) if live[v] else SlotAction.LISTEN
                for v in range(g.n)
            ]
            feedback = resolve_slot(g, intents, model)
            for v in range(g.n):
                if live[v]:
                    automata[v].observe(position, feedback[v])
        except CapabilityFault as exc:
            raise _refault(exc, slot, slots_per_phase) from exc
        if record_trace:
            trace.records.append(
                SlotRecord(
                    slot=slot,
                    intents=tuple(int(i) for i in intents),
                    feedback=tuple(f.code for f in feedback),
                    digest=tuple(a.digest() for a in automata),
                    virtual_slot=automata[0].describe_slot(position),
                )
            )
        slot += 1
        if position == slots_per_phase - 1:
            done = all(a.terminated for a in automata)

    outcome = RunOutcome.TERMINATED if done else RunOutcome.BUDGET_EXHAUSTED
    result = RunResult(
        outcome=outcome,
        slots_used=slot,
        phases_used=math.ceil(slot / slots_per_phase),
        slots_per_phase=slots_per_phase,
        payloads=tuple(a.payload() for a in automata),
        model=model.alias,
        protocol=protocol or (automata[0].name if automata else ""),
        params=dict(params or {}),
    )
    trace.result = result
    if outcome is RunOutcome.BUDGET_EXHAUSTED:
        logger.warning(
            "Run of %s on n=%s exhausted its budget of %s slots (seed=%s)",
            result.protocol,
            g.n,
            slot_budget,
            seed,
        )
    else:
        logger.debug(
            "Run of %s on n=%s terminated after %s slots / %s phases (seed=%s)",
            result.protocol,
            g.n,
            result.slots_used,
            result.phases_used,
            seed,
        )
    return trace, result
