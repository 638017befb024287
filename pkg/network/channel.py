"""
Per-slot feedback under the four beeping models.

This module is the single source of truth for model semantics. A vertex's
own beep never counts towards what it hears; a beeping vertex only receives
beeper-side feedback and a listening vertex only listener-side feedback.
Feedback the model does not provide is an explicit UNAVAILABLE value, and
reading it through the accessors raises ``CapabilityFault``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple

from network.graph import Graph


class CapabilityFault(RuntimeError):
    """Raised when protocol code reads feedback its beeping model does not provide."""


class BeeperSide(str, enum.Enum):
    B = "B"
    B_CD = "B_cd"


class ListenerSide(str, enum.Enum):
    L = "L"
    L_CD = "L_cd"


_MODEL_ALIASES: Dict[str, Tuple[BeeperSide, ListenerSide]] = {
    "bl": (BeeperSide.B, ListenerSide.L),
    "bcdl": (BeeperSide.B_CD, ListenerSide.L),
    "blcd": (BeeperSide.B, ListenerSide.L_CD),
    "bcdlcd": (BeeperSide.B_CD, ListenerSide.L_CD),
}


@dataclass(frozen=True)
class ModelSpec:
    beeper_side: BeeperSide
    listener_side: ListenerSide

    @property
    def beeper_detects(self) -> bool:
        return self.beeper_side is BeeperSide.B_CD

    @property
    def listener_counts(self) -> bool:
        return self.listener_side is ListenerSide.L_CD

    @property
    def name(self) -> str:
        return f"{self.beeper_side.value}{self.listener_side.value}"

    @property
    def alias(self) -> str:
        for alias, sides in _MODEL_ALIASES.items():
            if sides == (self.beeper_side, self.listener_side):
                return alias
        raise AssertionError("unreachable: every side pair has an alias")

    @classmethod
    def parse(cls, value: str) -> "ModelSpec":
        key = (value or "").strip().lower().replace("_", "").replace("·", "")
        if key not in _MODEL_ALIASES:
            raise ValueError(
                f"Unknown beeping model {value!r}; expected one of {', '.join(_MODEL_ALIASES)}"
            )
        beeper, listener = _MODEL_ALIASES[key]
        return cls(beeper, listener)


BL = ModelSpec(BeeperSide.B, ListenerSide.L)
BCD_L = ModelSpec(BeeperSide.B_CD, ListenerSide.L)
B_LCD = ModelSpec(BeeperSide.B, ListenerSide.L_CD)
BCD_LCD = ModelSpec(BeeperSide.B_CD, ListenerSide.L_CD)
ALL_MODELS: Tuple[ModelSpec, ...] = (BL, BCD_L, B_LCD, BCD_LCD)


class SlotAction(enum.IntEnum):
    LISTEN = 0
    BEEP = 1


class Tristate(str, enum.Enum):
    YES = "+"
    NO = "-"
    UNAVAILABLE = "?"


class Heard(str, enum.Enum):
    SILENCE = "S"
    AT_LEAST_ONE = "A"
    EXACTLY_ONE = "1"
    TWO_OR_MORE = "2"
    UNAVAILABLE = "?"


@dataclass(frozen=True)
class SlotFeedback:
    action: SlotAction
    internal: Tristate
    heard: Heard
    model: ModelSpec

    @property
    def internal_collision(self) -> bool:
        if self.action is not SlotAction.BEEP:
            raise CapabilityFault("internal_collision read by a listening vertex")
        if self.internal is Tristate.UNAVAILABLE:
            raise CapabilityFault(
                f"internal_collision read under {self.model.name} (needs B_cd)"
            )
        return self.internal is Tristate.YES

    def _listener_heard(self, capability: str) -> Heard:
        if self.action is not SlotAction.LISTEN:
            raise CapabilityFault(f"{capability} read by a beeping vertex")
        return self.heard

    @property
    def heard_beep(self) -> bool:
        return self._listener_heard("heard_beep") is not Heard.SILENCE

    @property
    def peripheral_collision(self) -> bool:
        heard = self._listener_heard("peripheral_collision")
        if not self.model.listener_counts:
            raise CapabilityFault(
                f"peripheral_collision read under {self.model.name} (needs L_cd)"
            )
        return heard is Heard.TWO_OR_MORE

    @property
    def exactly_one(self) -> bool:
        heard = self._listener_heard("exactly_one")
        if not self.model.listener_counts:
            raise CapabilityFault(
                f"exactly_one read under {self.model.name} (needs L_cd)"
            )
        return heard is Heard.EXACTLY_ONE

    @property
    def code(self) -> str:
        """Compact trace form: ``b+``/``b-``/``b?`` for beepers, the heard code otherwise."""
        if self.action is SlotAction.BEEP:
            return f"b{self.internal.value}"
        return self.heard.value


@lru_cache(maxsize=None)
def make_feedback(
    action: SlotAction, internal: Tristate, heard: Heard, model: ModelSpec
) -> SlotFeedback:
    return SlotFeedback(action=action, internal=internal, heard=heard, model=model)


def feedback_from_code(code: str, model: ModelSpec) -> SlotFeedback:
    if code.startswith("b"):
        return make_feedback(SlotAction.BEEP, Tristate(code[1:]), Heard.UNAVAILABLE, model)
    return make_feedback(SlotAction.LISTEN, Tristate.UNAVAILABLE, Heard(code), model)


def _beeper_feedback(beeping_neighbours: int, model: ModelSpec) -> SlotFeedback:
    if not model.beeper_detects:
        internal = Tristate.UNAVAILABLE
    else:
        internal = Tristate.YES if beeping_neighbours >= 1 else Tristate.NO
    return make_feedback(SlotAction.BEEP, internal, Heard.UNAVAILABLE, model)


def _listener_feedback(beeping_neighbours: int, model: ModelSpec) -> SlotFeedback:
    if beeping_neighbours == 0:
        heard = Heard.SILENCE
    elif not model.listener_counts:
        heard = Heard.AT_LEAST_ONE
    elif beeping_neighbours == 1:
        heard = Heard.EXACTLY_ONE
    else:
        heard = Heard.TWO_OR_MORE
    return make_feedback(SlotAction.LISTEN, Tristate.UNAVAILABLE, heard, model)


def beeping_neighbour_counts(g: Graph, intents: Sequence[SlotAction]) -> List[int]:
    if len(intents) != g.n:
        raise ValueError(f"intent vector has length {len(intents)}, graph has {g.n} vertices")
    return [
        sum(1 for u in nbrs if intents[u] == SlotAction.BEEP) for nbrs in g.adjacency
    ]


def resolve_slot(
    g: Graph, intents: Sequence[SlotAction], model: ModelSpec
) -> Tuple[SlotFeedback, ...]:
    counts = beeping_neighbour_counts(g, intents)
    return tuple(
        _beeper_feedback(counts[v], model)
        if intents[v] == SlotAction.BEEP
        else _listener_feedback(counts[v], model)
        for v in range(g.n)
    )


@dataclass(frozen=True)
class CollisionTruth:
    vertex: int
    internal: bool
    peripheral: bool

    @property
    def none(self) -> bool:
        return not (self.internal or self.peripheral)

    @property
    def any(self) -> bool:
        return self.internal or self.peripheral


def collision_ground_truth(
    g: Graph, intents: Sequence[SlotAction], v: int
) -> CollisionTruth:
    """Collision flags at ``v`` by scanning the edge set directly."""
    if not 0 <= v < g.n:
        raise ValueError(f"vertex {v} out of range 0..{g.n - 1}")
    if len(intents) != g.n:
        raise ValueError(f"intent vector has length {len(intents)}, graph has {g.n} vertices")
    beeping = set()
    for a, b in g.edges:
        if a == v and intents[b] == SlotAction.BEEP:
            beeping.add(b)
        elif b == v and intents[a] == SlotAction.BEEP:
            beeping.add(a)
    return CollisionTruth(
        vertex=v,
        internal=intents[v] == SlotAction.BEEP and len(beeping) >= 1,
        peripheral=len(beeping) >= 2,
    )
