"""
Ground-truth validators.

Every check here inspects the graph directly and never shares code with the
protocols or the channel, so a verdict is independent evidence about a run.
Witnesses are enumerated exhaustively rather than stopping at the first one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

from network.graph import Graph


@dataclass(frozen=True)
class Verdict:
    witnesses: Tuple[Any, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.witnesses

    def as_payload(self) -> Dict[str, Any]:
        return {"ok": self.ok, "witnesses": [list(w) if isinstance(w, tuple) else w for w in self.witnesses]}


def _require_complete(g: Graph, values: Sequence[Optional[int]], label: str) -> None:
    if len(values) != g.n:
        raise ValueError(f"{label} has {len(values)} entries, graph has {g.n} vertices")
    missing = [v for v, value in enumerate(values) if value is None]
    if missing:
        raise ValueError(f"{label} missing for vertices {missing}")


def _conflicting_pairs(
    pairs: Sequence[Tuple[int, int]], colours: Sequence[Optional[int]]
) -> Tuple[Tuple[int, int], ...]:
    return tuple(sorted((u, v) for u, v in pairs if colours[u] == colours[v]))


def is_proper_colouring(g: Graph, colours: Sequence[Optional[int]]) -> Verdict:
    _require_complete(g, colours, "colours")
    return Verdict(witnesses=_conflicting_pairs(list(g.edges), colours))


def _pairs_within_two(g: Graph) -> List[Tuple[int, int]]:
    # Breadth-first to depth two from each vertex, kept separate from square_graph.
    pairs: List[Tuple[int, int]] = []
    for source in range(g.n):
        frontier = {source}
        seen = {source}
        for _ in range(2):
            frontier = {
                w for u in frontier for w in g.adjacency[u] if w not in seen
            }
            seen |= frontier
        pairs.extend((source, target) for target in seen if target > source)
    return pairs


def is_two_hop_colouring(g: Graph, colours: Sequence[Optional[int]]) -> Verdict:
    _require_complete(g, colours, "colours")
    return Verdict(witnesses=_conflicting_pairs(_pairs_within_two(g), colours))


def check_degrees(g: Graph, claimed: Sequence[Optional[int]]) -> Verdict:
    _require_complete(g, claimed, "claimed degrees")
    actual = [0] * g.n
    for u, v in g.edges:
        actual[u] += 1
        actual[v] += 1
    return Verdict(
        witnesses=tuple(
            (v, claimed[v], actual[v]) for v in range(g.n) if claimed[v] != actual[v]
        )
    )
