"""
Post-hoc checks over a recorded trace.

The audits recompute what they can from the graph and the recorded intents
and compare against what the run claims: channel feedback, state progression
read from the per-vertex digests, and the degree protocol's slot-4 exclusivity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from core.logger import get_logger
from network.channel import (
    ModelSpec,
    SlotAction,
    collision_ground_truth,
    feedback_from_code,
    resolve_slot,
)
from network.graph import Graph
from network.oracle import Verdict, check_degrees, is_proper_colouring, is_two_hop_colouring
from sim.trace_protocol import RunResult, SlotRecord, Trace

logger = get_logger("trace_audit")

# Rank of each state name appearing in digests; a vertex's rank never drops.
_STATE_RANK: Dict[str, int] = {
    "active": 0,
    "coloured": 1,
    "passive": 1,
    "turned-off": 2,
    "Active": 0,
    "Inactive": 1,
}

# Protocols whose digest middle field is the probability exponent.
_EXPONENT_PROTOCOLS = frozenset(
    {"colour", "two-hop", "degree", "colour-bl", "two-hop-bl", "degree-bl"}
)
_DEGREE_PROTOCOLS = frozenset({"degree", "degree-bl"})
_WINNER_SLOT = 3


@dataclass
class AuditReport:
    replay: List[Tuple[int, int]] = field(default_factory=list)
    monotone: List[Tuple[int, int, str, str]] = field(default_factory=list)
    exponent: List[Tuple[int, int, int, int]] = field(default_factory=list)
    winners: List[Tuple[int, int]] = field(default_factory=list)
    safety: Optional[Verdict] = None

    @property
    def ok(self) -> bool:
        safety_ok = self.safety is None or self.safety.ok
        return safety_ok and not (
            self.replay or self.monotone or self.exponent or self.winners
        )

    def as_payload(self) -> Dict[str, object]:
        return {
            "ok": self.ok,
            "replay": [list(w) for w in self.replay],
            "monotone": [list(w) for w in self.monotone],
            "exponent": [list(w) for w in self.exponent],
            "winners": [list(w) for w in self.winners],
            "safety": None if self.safety is None else self.safety.as_payload(),
        }


def replay_mismatches(g: Graph, trace: Trace, model: ModelSpec) -> List[Tuple[int, int]]:
    """(slot, vertex) pairs whose recorded feedback differs from a fresh resolution."""
    out: List[Tuple[int, int]] = []
    for record in trace.records:
        if len(record.intents) != g.n:
            raise ValueError(
                f"slot {record.slot} records {len(record.intents)} intents, graph has {g.n} vertices"
            )
        intents = [SlotAction(i) for i in record.intents]
        fresh = resolve_slot(g, intents, model)
        recorded = [feedback_from_code(code, model) for code in record.feedback]
        out.extend((record.slot, v) for v in range(g.n) if fresh[v] != recorded[v])
    return out


def _phase_ends(trace: Trace, slots_per_phase: int) -> List[SlotRecord]:
    return [r for r in trace.records if r.slot % slots_per_phase == slots_per_phase - 1]


def _split_digest(digest: str) -> Optional[Tuple[str, int]]:
    parts = digest.split("|")
    if len(parts) < 3 or parts[0] not in _STATE_RANK:
        return None
    try:
        return parts[0], int(parts[1])
    except ValueError:
        return None


def state_violations(
    trace: Trace, slots_per_phase: int, *, check_exponent: bool
) -> Tuple[List[Tuple[int, int, str, str]], List[Tuple[int, int, int, int]]]:
    """
    Walk phase-end digests. A state rank may never decrease, and while a vertex
    stays active across a phase its exponent moves by exactly one, or stays at
    1 when doubling hits the cap.
    """
    monotone: List[Tuple[int, int, str, str]] = []
    exponent: List[Tuple[int, int, int, int]] = []
    # Every vertex starts in a rank-0 state with exponent 1.
    previous: Dict[int, Tuple[str, int]] = {}
    for phase, record in enumerate(_phase_ends(trace, slots_per_phase)):
        for v, digest in enumerate(record.digest):
            parsed = _split_digest(digest)
            if parsed is None:
                continue
            state, e = parsed
            before_state, before_e = previous.get(v, ("active", 1))
            if _STATE_RANK[state] < _STATE_RANK[before_state]:
                monotone.append((phase, v, before_state, state))
            still_active = _STATE_RANK[before_state] == 0 and _STATE_RANK[state] == 0
            if check_exponent and still_active:
                delta = e - before_e
                if not (abs(delta) == 1 or (delta == 0 and before_e == 1)):
                    exponent.append((phase, v, before_e, e))
            previous[v] = parsed
    return monotone, exponent


def slot_four_conflicts(g: Graph, trace: Trace, slots_per_phase: int) -> List[Tuple[int, int]]:
    """(slot, vertex) pairs where two or more members of a closed neighbourhood beeped in slot 4."""
    out: List[Tuple[int, int]] = []
    for record in trace.records:
        if record.virtual_slot is not None:
            if record.virtual_slot.get("virtual_slot") != _WINNER_SLOT:
                continue
        elif record.slot % slots_per_phase != _WINNER_SLOT:
            continue
        beepers = {v for v, intent in enumerate(record.intents) if intent == SlotAction.BEEP}
        if len(beepers) < 2:
            continue
        for v in range(g.n):
            closed = set(g.neighbours(v)) | {v}
            if len(closed & beepers) > 1:
                out.append((record.slot, v))
    return out


def collision_false_positives(g: Graph, flags: Sequence[bool], wishers: Sequence[int]) -> Verdict:
    """Vertices flagged as colliding although no collision exists around them."""
    wishing = set(wishers)
    intents = [SlotAction.BEEP if v in wishing else SlotAction.LISTEN for v in range(g.n)]
    return Verdict(
        witnesses=tuple(
            v
            for v in range(g.n)
            if flags[v] and collision_ground_truth(g, intents, v).none
        )
    )


def safety_verdict(g: Graph, result: RunResult) -> Optional[Verdict]:
    """Ground-truth check of a run's output; None when there is nothing to check."""
    protocol = result.protocol
    if protocol == "collide":
        return collision_false_positives(
            g, [bool(f) for f in result.payloads], result.params.get("wishers", [])
        )
    if not result.terminated:
        return None
    if protocol in ("colour", "colour-k", "colour-bl"):
        verdict = is_proper_colouring(g, result.payloads)
        if protocol == "colour-k":
            cap = int(result.params.get("K", 0))
            outside = tuple(
                (v, c) for v, c in enumerate(result.payloads) if not 0 <= c <= cap
            )
            verdict = Verdict(witnesses=verdict.witnesses + outside)
        return verdict
    if protocol in ("two-hop", "two-hop-bl"):
        return is_two_hop_colouring(g, result.payloads)
    if protocol in _DEGREE_PROTOCOLS:
        return check_degrees(g, result.payloads)
    return None


def audit_trace(g: Graph, trace: Trace) -> AuditReport:
    if trace.result is None:
        raise ValueError("trace has no result record")
    result = trace.result
    model = ModelSpec.parse(result.model)
    spp = result.slots_per_phase
    report = AuditReport()
    report.replay = replay_mismatches(g, trace, model)
    report.monotone, report.exponent = state_violations(
        trace, spp, check_exponent=result.protocol in _EXPONENT_PROTOCOLS
    )
    if result.protocol in _DEGREE_PROTOCOLS:
        report.winners = slot_four_conflicts(g, trace, spp)
    report.safety = safety_verdict(g, result)
    if not report.ok:
        logger.warning("Trace audit of %s failed: %s", result.protocol, report.as_payload())
    return report
