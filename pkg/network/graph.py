"""
Graph representation, generators and derived graphs.

Vertices are the dense indices ``0..n-1``. Protocol code never sees these
indices: the engine only hands automata their feedback and private randomness.
Graphs are immutable once built, so parallel trials can share them freely.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

import networkx as nx

from core.config import CONFIG
from core.logger import get_logger

logger = get_logger("graph")

Edge = Tuple[int, int]


class GraphSpecError(ValueError):
    """Raised when a graph descriptor or edge-list file cannot be turned into a graph."""


def _normalize_edge(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Graph:
    n: int
    edges: FrozenSet[Edge]
    adjacency: Tuple[Tuple[int, ...], ...] = field(
        init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError(f"vertex count must be non-negative, got {self.n}")
        buckets: List[List[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop on vertex {u}")
            if u > v:
                raise ValueError(f"edge ({u}, {v}) is not normalised as u < v")
            if v >= self.n or u < 0:
                raise ValueError(f"edge ({u}, {v}) has an endpoint outside 0..{self.n - 1}")
            buckets[u].append(v)
            buckets[v].append(u)
        object.__setattr__(
            self, "adjacency", tuple(tuple(sorted(b)) for b in buckets)
        )

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Tuple[int, int]]) -> "Graph":
        normalized: Set[Edge] = set()
        for u, v in edges:
            edge = _normalize_edge(int(u), int(v))
            if edge in normalized:
                raise ValueError(f"duplicate edge {edge}")
            normalized.add(edge)
        return cls(n=n, edges=frozenset(normalized))

    @classmethod
    def from_networkx(cls, nx_graph: nx.Graph) -> "Graph":
        nodes = sorted(nx_graph.nodes())
        if nodes != list(range(len(nodes))):
            nx_graph = nx.convert_node_labels_to_integers(nx_graph, ordering="sorted")
        return cls.from_edges(nx_graph.number_of_nodes(), nx_graph.edges())

    def to_networkx(self) -> nx.Graph:
        nx_graph = nx.Graph()
        nx_graph.add_nodes_from(range(self.n))
        nx_graph.add_edges_from(self.edges)
        return nx_graph

    def neighbours(self, v: int) -> Tuple[int, ...]:
        if not 0 <= v < self.n:
            raise ValueError(f"vertex {v} out of range 0..{self.n - 1}")
        return self.adjacency[v]

    def degree(self, v: int) -> int:
        return len(self.neighbours(v))

    def is_connected(self) -> bool:
        if self.n <= 1:
            return True
        return nx.is_connected(self.to_networkx())


@dataclass(frozen=True)
class GraphMetrics:
    n: int
    max_degree: int
    degrees: Tuple[int, ...]


def metrics(g: Graph) -> GraphMetrics:
    degrees = tuple(len(nbrs) for nbrs in g.adjacency)
    return GraphMetrics(n=g.n, max_degree=max(degrees, default=0), degrees=degrees)


def square_graph(g: Graph) -> Graph:
    """Same vertices; an edge between every pair at distance one or two."""
    if g.n == 0:
        return g
    return Graph.from_networkx(nx.power(g.to_networkx(), 2))


# ---- edge-list files ----


def read_edge_list(path: str | Path) -> Graph:
    """
    Parse an edge-list file: a header line ``n m`` followed by ``m`` lines
    ``u v`` with ``0 <= u < v < n``. Lines starting with ``#`` are ignored.
    """
    file_path = Path(path)
    try:
        text = file_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise GraphSpecError(f"Cannot read edge-list file {file_path}: {exc}") from exc
    rows: List[Tuple[int, int]] = []
    header: Optional[Tuple[int, int]] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphSpecError(f"{file_path}:{lineno}: expected two integers, got {line!r}")
        try:
            a, b = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphSpecError(f"{file_path}:{lineno}: non-integer value in {line!r}")
        if header is None:
            header = (a, b)
            continue
        rows.append((a, b))
    if header is None:
        raise GraphSpecError(f"{file_path}: missing 'n m' header line")
    n, m = header
    if n < 0 or m < 0:
        raise GraphSpecError(f"{file_path}: negative header values n={n} m={m}")
    if len(rows) != m:
        raise GraphSpecError(f"{file_path}: header declares {m} edges, found {len(rows)}")
    for u, v in rows:
        if not (0 <= u < v < n):
            raise GraphSpecError(f"{file_path}: edge ({u}, {v}) violates 0 <= u < v < {n}")
    try:
        return Graph.from_edges(n, rows)
    except ValueError as exc:
        raise GraphSpecError(f"{file_path}: {exc}") from exc


def write_edge_list(g: Graph, path: str | Path) -> None:
    lines = [f"{g.n} {len(g.edges)}"]
    lines.extend(f"{u} {v}" for u, v in sorted(g.edges))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---- generators ----


def _parse_count(raw: str, descriptor: str, minimum: int) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise GraphSpecError(f"Invalid vertex count {raw!r} in {descriptor!r}")
    if value < minimum:
        raise GraphSpecError(f"{descriptor!r} needs n >= {minimum}, got {value}")
    return value


def _connected_gnp(n: int, p: float, seed: int, retry_cap: int) -> Graph:
    sampler = random.Random(seed)
    for attempt in range(1, retry_cap + 1):
        candidate = nx.gnp_random_graph(n, p, seed=sampler)
        if n <= 1 or nx.is_connected(candidate):
            logger.debug("gnp:%s:%s:%s connected after %s attempt(s)", n, p, seed, attempt)
            return Graph.from_networkx(candidate)
    raise GraphSpecError(
        f"gnp:{n}:{p}:{seed} did not produce a connected graph within {retry_cap} attempts"
    )


_FIXED_FAMILIES: Dict[str, Tuple[int, object]] = {
    "ring": (3, nx.cycle_graph),
    "path": (1, nx.path_graph),
    "complete": (1, nx.complete_graph),
    "star": (2, lambda n: nx.star_graph(n - 1)),
}


def build_graph(descriptor: str, *, retry_cap: Optional[int] = None) -> Graph:
    """
    Build a graph from a descriptor: ``ring:n``, ``path:n``, ``complete:n``,
    ``star:n``, ``gnp:n:p:seed`` or ``file:path``.
    """
    text = (descriptor or "").strip()
    family, sep, rest = text.partition(":")
    family = family.lower()
    if not sep or not rest:
        raise GraphSpecError(f"Malformed graph descriptor {descriptor!r}")
    if family == "file":
        return read_edge_list(rest)
    if family in _FIXED_FAMILIES:
        minimum, generator = _FIXED_FAMILIES[family]
        n = _parse_count(rest, text, minimum)
        return Graph.from_networkx(generator(n))  # type: ignore[operator]
    if family == "gnp":
        parts = rest.split(":")
        if len(parts) != 3:
            raise GraphSpecError(f"gnp descriptor must be gnp:n:p:seed, got {descriptor!r}")
        n = _parse_count(parts[0], text, 1)
        try:
            p = float(parts[1])
            seed = int(parts[2])
        except ValueError:
            raise GraphSpecError(f"Invalid gnp parameters in {descriptor!r}")
        if not 0.0 <= p <= 1.0:
            raise GraphSpecError(f"gnp edge probability must lie in [0, 1], got {p}")
        cap = retry_cap if retry_cap is not None else CONFIG.gnp_retry_cap
        return _connected_gnp(n, p, seed, cap)
    raise GraphSpecError(f"Unknown graph family {family!r} in {descriptor!r}")
