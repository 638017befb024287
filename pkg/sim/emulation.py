"""
Emulating B_cd beeps and L_cd listens on the weak BL channel.

One virtual slot that needs collision detection becomes a window of ``k``
two-slot phases. A beeping vertex uses its private ``k``-bit signature to pick
which slot of each phase it beeps in and listens in the other; a listening
vertex listens in both. Two beepers are told apart as soon as their signatures
differ in one bit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Any, ClassVar, FrozenSet, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from network.channel import (
    BCD_LCD,
    Heard,
    SlotAction,
    SlotFeedback,
    Tristate,
    make_feedback,
)
from sim.engine import AutomatonFactory, ProtocolAutomaton
from sim.trace_protocol import JSONPayload


class KDerivation(str, enum.Enum):
    PER_GRAPH = "per-graph"
    PER_VERTEX = "per-vertex"
    WHP = "whp"


def _check_eps(eps: Optional[float]) -> float:
    if eps is None or not 0.0 < eps < 1.0:
        raise ValueError(f"epsilon must satisfy 0 < eps < 1, got {eps}")
    return eps


def _check_n(n: Optional[int]) -> int:
    if n is None or n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return n


@dataclass(frozen=True)
class EmulationParams:
    k: int
    derivation: Optional[KDerivation] = None

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"emulation length k must be >= 1, got {self.k}")

    @classmethod
    def derive(
        cls,
        derivation: KDerivation | str,
        *,
        n: Optional[int] = None,
        eps: Optional[float] = None,
    ) -> "EmulationParams":
        derivation = KDerivation(derivation)
        if derivation is KDerivation.PER_GRAPH:
            k = math.ceil(math.log2(_check_n(n) / _check_eps(eps)))
        elif derivation is KDerivation.PER_VERTEX:
            k = math.ceil(math.log2(1.0 / _check_eps(eps)))
        else:
            k = math.ceil(2 * math.log2(_check_n(n)))
        # n = 1 gives k = 0 under the whp rule; one phase is the smallest window.
        return cls(k=max(1, k), derivation=derivation)

    @property
    def physical_slots(self) -> int:
        return 2 * self.k


@dataclass(frozen=True)
class Signature:
    bits: Tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.bits:
            raise ValueError("signature needs at least one bit")
        if any(bit not in (0, 1) for bit in self.bits):
            raise ValueError(f"signature bits must be 0 or 1, got {self.bits}")

    @property
    def k(self) -> int:
        return len(self.bits)


def gen_signature(k: int, rng: np.random.Generator) -> Signature:
    return Signature(bits=tuple(int(b) for b in rng.integers(0, 2, size=k)))


def beep_window(signature: Signature) -> Tuple[SlotAction, ...]:
    """Physical actions of a beeper over its 2k-slot window."""
    actions: List[SlotAction] = []
    for bit in signature.bits:
        if bit == 0:
            actions.extend((SlotAction.BEEP, SlotAction.LISTEN))
        else:
            actions.extend((SlotAction.LISTEN, SlotAction.BEEP))
    return tuple(actions)


def emulate_beep_cd(signature: Signature, heard: Sequence[bool]) -> bool:
    """collision_B: a beep was heard in one of the slots the beeper listened in."""
    window = beep_window(signature)
    if len(heard) != len(window):
        raise ValueError(f"expected {len(window)} slot observations, got {len(heard)}")
    return any(
        heard[j] for j, action in enumerate(window) if action is SlotAction.LISTEN
    )


class ListenOutcome(NamedTuple):
    collision_l: bool
    heard_any: bool


def emulate_listen_cd(k: int, heard: Sequence[bool]) -> ListenOutcome:
    """collision_L: both slots of some phase carried a beep."""
    if len(heard) != 2 * k:
        raise ValueError(f"expected {2 * k} slot observations, got {len(heard)}")
    return ListenOutcome(
        collision_l=any(heard[2 * i] and heard[2 * i + 1] for i in range(k)),
        heard_any=any(heard),
    )


def reconstruct_feedback(
    action: SlotAction,
    *,
    collision_b: bool = False,
    listen: Optional[ListenOutcome] = None,
) -> SlotFeedback:
    if action is SlotAction.BEEP:
        internal = Tristate.YES if collision_b else Tristate.NO
        return make_feedback(SlotAction.BEEP, internal, Heard.UNAVAILABLE, BCD_LCD)
    outcome = listen or ListenOutcome(False, False)
    if not outcome.heard_any:
        heard = Heard.SILENCE
    elif outcome.collision_l:
        heard = Heard.TWO_OR_MORE
    else:
        heard = Heard.EXACTLY_ONE
    return make_feedback(SlotAction.LISTEN, Tristate.UNAVAILABLE, heard, BCD_LCD)


class EmulatedInput(NamedTuple):
    inner: Any = None
    signature: Optional[Signature] = None


class EmulatedAutomaton(ProtocolAutomaton):
    """Runs a B_cd L_cd automaton on BL by expanding its detection slots."""

    def __init__(
        self,
        inner: ProtocolAutomaton,
        params: EmulationParams,
        *,
        forced_signature: Optional[Signature] = None,
        fresh_signatures: bool = False,
    ) -> None:
        if not inner.detection_slots:
            raise ValueError(f"{inner.name} marks no slot as needing collision detection")
        if forced_signature is not None and forced_signature.k != params.k:
            raise ValueError(
                f"forced signature has {forced_signature.k} bits, emulation uses k={params.k}"
            )
        self.inner = inner
        self.k = params.k
        self.name = f"{inner.name}-bl"
        layout: List[Tuple[int, Optional[int]]] = []
        for virtual in range(inner.slots_per_phase):
            if virtual in inner.detection_slots:
                layout.extend((virtual, w) for w in range(2 * self.k))
            else:
                layout.append((virtual, None))
        self._layout: Tuple[Tuple[int, Optional[int]], ...] = tuple(layout)
        self.slots_per_phase = len(layout)
        self._fresh = fresh_signatures and forced_signature is None
        self._signature: Optional[Signature] = forced_signature
        self._virtual_action = SlotAction.LISTEN
        self._window: Tuple[SlotAction, ...] = ()
        self._heard: List[bool] = []

    def act(self, slot: int, rng: np.random.Generator) -> SlotAction:
        virtual, w = self._layout[slot]
        if w == 0 and self._fresh:
            self._signature = None
        if self._signature is None:
            self._signature = gen_signature(self.k, rng)
        if w is None:
            return self.inner.act(virtual, rng)
        if w == 0:
            self._virtual_action = self.inner.act(virtual, rng)
            self._window = beep_window(self._signature)
            self._heard = [False] * (2 * self.k)
        if self._virtual_action is SlotAction.BEEP:
            return self._window[w]
        return SlotAction.LISTEN

    def observe(self, slot: int, feedback: SlotFeedback) -> None:
        virtual, w = self._layout[slot]
        if w is None:
            self.inner.observe(virtual, feedback)
            return
        if feedback.action is SlotAction.LISTEN:
            self._heard[w] = feedback.heard_beep
        if w < 2 * self.k - 1:
            return
        assert self._signature is not None
        if self._virtual_action is SlotAction.BEEP:
            virtual_feedback = reconstruct_feedback(
                SlotAction.BEEP,
                collision_b=emulate_beep_cd(self._signature, self._heard),
            )
        else:
            virtual_feedback = reconstruct_feedback(
                SlotAction.LISTEN, listen=emulate_listen_cd(self.k, self._heard)
            )
        self.inner.observe(virtual, virtual_feedback)

    @property
    def terminated(self) -> bool:
        return self.inner.terminated

    def payload(self) -> Any:
        return self.inner.payload()

    def digest(self) -> str:
        return self.inner.digest()

    def describe_slot(self, slot: int) -> Optional[JSONPayload]:
        virtual, w = self._layout[slot]
        if w is None:
            return {"virtual_slot": virtual}
        return {"virtual_slot": virtual, "window": w}


def virtual_slot_adapter(
    factory: AutomatonFactory,
    params: EmulationParams,
    *,
    fresh_signatures: bool = False,
) -> AutomatonFactory:
    """
    Wrap a B_cd L_cd automaton factory so the automata run on BL.

    The local input may be a ``Signature`` (forced signature), an
    ``EmulatedInput`` (inner input plus optional forced signature), or anything
    else, which is passed through to the wrapped factory.
    """

    def build(local_input: Any) -> ProtocolAutomaton:
        if isinstance(local_input, Signature):
            inner_input, forced = None, local_input
        elif isinstance(local_input, EmulatedInput):
            inner_input, forced = local_input.inner, local_input.signature
        else:
            inner_input, forced = local_input, None
        return EmulatedAutomaton(
            factory(inner_input),
            params,
            forced_signature=forced,
            fresh_signatures=fresh_signatures,
        )

    return build


class DetectionSlotAutomaton(ProtocolAutomaton):
    """
    One detection-requiring virtual slot per phase, repeated ``virtual_slots``
    times. A vertex whose local input is truthy beeps in every virtual slot and
    counts the slots in which it learnt of an internal collision; a listener
    counts the slots it classified as two or more beeps.
    """

    name = "emulate"
    slots_per_phase = 1
    detection_slots: ClassVar[FrozenSet[int]] = frozenset({0})

    def __init__(self, virtual_slots: int, wishes: Any = False) -> None:
        if virtual_slots < 1:
            raise ValueError(f"virtual_slots must be >= 1, got {virtual_slots}")
        self.virtual_slots = virtual_slots
        self.wishes = bool(wishes)
        self.detected = 0
        self._done = 0

    def act(self, slot: int, rng: np.random.Generator) -> SlotAction:
        return SlotAction.BEEP if self.wishes else SlotAction.LISTEN

    def observe(self, slot: int, feedback: SlotFeedback) -> None:
        if self.wishes:
            self.detected += int(feedback.internal_collision)
        else:
            self.detected += int(feedback.peripheral_collision)
        self._done += 1

    @property
    def terminated(self) -> bool:
        return self._done >= self.virtual_slots

    def payload(self) -> Any:
        return self.detected

    def digest(self) -> str:
        return f"{'W' if self.wishes else 'N'}|{self.detected}"
