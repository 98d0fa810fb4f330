"""Fixed-size labeled graphs, categorical graph distributions, edits and edit distance.

A :class:`Graph` has ``n`` nodes with classes in ``{0..a-1}`` and one edge class in
``{0..b-1}`` per unordered pair.  Edge class 0 means "no edge".  When ``a >= 2`` the
last node class (``a - 1``) is reserved for inactive nodes, which keeps node removal
representable without resizing the state.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, FormatError


def pair_index(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Row/column index arrays of the upper triangle, in storage order."""
    return np.triu_indices(n, 1)


def _pair_position(n: int, u: int, v: int) -> int:
    if u > v:
        u, v = v, u
    # offset of row u in the flattened strict upper triangle
    return u * (2 * n - u - 1) // 2 + (v - u - 1)


@dataclass(frozen=True, eq=False)
class Graph:
    n: int
    a: int
    b: int
    node_class: np.ndarray
    pair_class: np.ndarray = field(repr=False)

    def __post_init__(self):
        nc = np.asarray(self.node_class, dtype=np.int64).reshape(-1)
        pc = np.asarray(self.pair_class, dtype=np.int64).reshape(-1)
        if self.a < 1 or self.b < 2:
            raise DimensionError(f"need a >= 1 and b >= 2, got a={self.a}, b={self.b}")
        if nc.shape != (self.n,):
            raise DimensionError(f"node_class has shape {nc.shape}, expected ({self.n},)")
        if pc.shape != (self.n * (self.n - 1) // 2,):
            raise DimensionError(f"pair_class has {pc.size} entries for n={self.n}")
        if nc.size and (nc.min() < 0 or nc.max() >= self.a):
            raise DimensionError("node class out of range")
        if pc.size and (pc.min() < 0 or pc.max() >= self.b):
            raise DimensionError("edge class out of range")
        nc.setflags(write=False)
        pc.setflags(write=False)
        object.__setattr__(self, "node_class", nc)
        object.__setattr__(self, "pair_class", pc)

    # -- constructors -------------------------------------------------------------

    @classmethod
    def from_matrix(cls, node_class, edge_class, a: int = 2, b: int = 2) -> "Graph":
        ec = np.asarray(edge_class, dtype=np.int64)
        n = len(node_class)
        if ec.shape != (n, n):
            raise DimensionError(f"edge_class has shape {ec.shape}, expected ({n}, {n})")
        if not np.array_equal(ec, ec.T):
            raise DimensionError("edge_class matrix is not symmetric")
        if np.any(np.diag(ec) != 0):
            raise DimensionError("self-loops are not allowed")
        iu = pair_index(n)
        return cls(n, a, b, np.asarray(node_class), ec[iu])

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]], a: int = 2, b: int = 2,
                   node_class=None) -> "Graph":
        """Build from ``(u, v)`` or ``(u, v, class)`` tuples; unlisted pairs get class 0."""
        pc = np.zeros(n * (n - 1) // 2, dtype=np.int64)
        for e in edges:
            u, v = int(e[0]), int(e[1])
            c = int(e[2]) if len(e) > 2 else 1
            if not (0 <= u < n and 0 <= v < n):
                raise IndexError(f"edge ({u}, {v}) out of range for n={n}")
            if u == v:
                raise DimensionError(f"self-loop at node {u}")
            pc[_pair_position(n, u, v)] = c
        nodes = np.zeros(n, dtype=np.int64) if node_class is None else node_class
        return cls(n, a, b, nodes, pc)

    @classmethod
    def empty(cls, n: int, a: int = 2, b: int = 2) -> "Graph":
        return cls(n, a, b, np.zeros(n, dtype=np.int64), np.zeros(n * (n - 1) // 2, dtype=np.int64))

    # -- views --------------------------------------------------------------------

    @cached_property
    def edge_class(self) -> np.ndarray:
        """Full symmetric ``n x n`` edge-class matrix (read-only)."""
        m = np.zeros((self.n, self.n), dtype=np.int64)
        iu = pair_index(self.n)
        m[iu] = self.pair_class
        m[(iu[1], iu[0])] = self.pair_class
        m.setflags(write=False)
        return m

    @property
    def inactive_class(self) -> int | None:
        return self.a - 1 if self.a >= 2 else None

    @cached_property
    def active_mask(self) -> np.ndarray:
        if self.a < 2:
            return np.ones(self.n, dtype=bool)
        return self.node_class != self.a - 1

    @cached_property
    def adjacency(self) -> np.ndarray:
        """0/1 float adjacency restricted to active nodes."""
        adj = (self.edge_class != 0).astype(float)
        act = self.active_mask.astype(float)
        adj *= act[:, None] * act[None, :]
        adj.setflags(write=False)
        return adj

    def edge(self, u: int, v: int) -> int:
        if u == v:
            return 0
        return int(self.pair_class[_pair_position(self.n, u, v)])

    def edges(self) -> list[tuple[int, int, int]]:
        iu = pair_index(self.n)
        nz = np.nonzero(self.pair_class)[0]
        return [(int(iu[0][k]), int(iu[1][k]), int(self.pair_class[k])) for k in nz]

    @property
    def num_edges(self) -> int:
        return int(np.count_nonzero(self.pair_class))

    def active_nodes(self) -> list[int]:
        return [int(v) for v in np.nonzero(self.active_mask)[0]]

    def with_classes(self, node_class=None, pair_class=None) -> "Graph":
        return Graph(self.n, self.a, self.b,
                     self.node_class if node_class is None else node_class,
                     self.pair_class if pair_class is None else pair_class)

    def permute(self, perm: Sequence[int]) -> "Graph":
        """Relabel so that new node ``i`` is old node ``perm[i]``."""
        perm = np.asarray(perm)
        ec = self.edge_class[np.ix_(perm, perm)]
        return Graph.from_matrix(self.node_class[perm], ec, self.a, self.b)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.n, self.a, self.b) == (other.n, other.a, other.b) and \
            np.array_equal(self.node_class, other.node_class) and \
            np.array_equal(self.pair_class, other.pair_class)

    def __hash__(self):
        return hash((self.n, self.a, self.b, self.node_class.tobytes(), self.pair_class.tobytes()))


@dataclass(frozen=True, eq=False)
class GraphDistribution:
    """Independent categorical distributions over node and edge classes."""

    node_probs: np.ndarray
    edge_probs: np.ndarray

    def __post_init__(self):
        npb = np.asarray(self.node_probs, dtype=float)
        epb = np.asarray(self.edge_probs, dtype=float)
        if npb.ndim != 2 or epb.ndim != 3 or epb.shape[:2] != (npb.shape[0],) * 2:
            raise DimensionError(f"bad shapes {npb.shape} / {epb.shape}")
        for name, p in (("node", npb), ("edge", epb)):
            if np.any(p < -1e-12) or np.any(p > 1 + 1e-12):
                raise DimensionError(f"{name} probabilities outside [0, 1]")
            if not np.allclose(p.sum(-1), 1.0, atol=1e-9, rtol=0):
                raise DimensionError(f"{name} probability rows do not sum to 1")
        if not np.allclose(epb, epb.transpose(1, 0, 2), atol=1e-12, rtol=0):
            raise DimensionError("edge_probs not symmetric")
        npb.setflags(write=False)
        epb.setflags(write=False)
        object.__setattr__(self, "node_probs", npb)
        object.__setattr__(self, "edge_probs", epb)

    @property
    def n(self) -> int:
        return self.node_probs.shape[0]

    @property
    def a(self) -> int:
        return self.node_probs.shape[1]

    @property
    def b(self) -> int:
        return self.edge_probs.shape[2]

    @classmethod
    def one_hot(cls, g: Graph) -> "GraphDistribution":
        return cls(np.eye(g.a)[g.node_class], np.eye(g.b)[g.edge_class])

    def argmax(self) -> Graph:
        ec = self.edge_probs.argmax(-1)
        iu = pair_index(self.n)
        return Graph(self.n, self.a, self.b, self.node_probs.argmax(-1), ec[iu])

    def sample(self, rng: np.random.Generator) -> Graph:
        """Draw node classes and one class per unordered pair."""
        nodes = _sample_rows(self.node_probs, rng)
        iu = pair_index(self.n)
        pairs = _sample_rows(self.edge_probs[iu], rng)
        return Graph(self.n, self.a, self.b, nodes, pairs)


def _sample_rows(p: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    if p.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    cdf = np.cumsum(p, axis=-1)
    cdf[:, -1] = 1.0
    u = rng.random(p.shape[0])
    return (u[:, None] > cdf).sum(-1).astype(np.int64)


def check_compatible(g1: Graph, g2: Graph) -> None:
    if (g1.n, g1.a, g1.b) != (g2.n, g2.a, g2.b):
        raise DimensionError(
            f"graphs differ in (n, a, b): {(g1.n, g1.a, g1.b)} vs {(g2.n, g2.a, g2.b)}")


def edit_distance(g1: Graph, g2: Graph) -> int:
    """Number of node-label disagreements plus unordered-pair edge-label disagreements."""
    check_compatible(g1, g2)
    return int(np.count_nonzero(g1.node_class != g2.node_class)
               + np.count_nonzero(g1.pair_class != g2.pair_class))


def apply_removals(g: Graph, nodes: Iterable[int] = (), edges: Iterable[Sequence[int]] = ()) -> Graph:
    """Remove edges (set to class 0) and nodes (relabel inactive, clear incident edges).

    Removing something already absent is a no-op.
    """
    nodes = [int(v) for v in nodes]
    edges = [(int(e[0]), int(e[1])) for e in edges]
    for v in nodes:
        if not 0 <= v < g.n:
            raise IndexError(f"node {v} out of range for n={g.n}")
    for u, v in edges:
        if not (0 <= u < g.n and 0 <= v < g.n) or u == v:
            raise IndexError(f"invalid pair ({u}, {v}) for n={g.n}")
    if nodes and g.inactive_class is None:
        raise DimensionError("node removal needs a reserved inactive class (a >= 2)")
    if not nodes and not edges:
        return g
    nc = g.node_class.copy()
    pc = g.pair_class.copy()
    for u, v in edges:
        pc[_pair_position(g.n, u, v)] = 0
    if nodes:
        nc[nodes] = g.inactive_class
        iu = pair_index(g.n)
        hit = np.isin(iu[0], nodes) | np.isin(iu[1], nodes)
        pc[hit] = 0
    return Graph(g.n, g.a, g.b, nc, pc)


# -- edge-list text format ----------------------------------------------------------

def format_edgelist(graphs: Iterable[Graph]) -> str:
    records = []
    for g in graphs:
        lines = [f"{g.n} {g.a} {g.b}"]
        lines += [f"{v} {int(c)}" for v, c in enumerate(g.node_class)]
        lines += [f"{u} {v} {c}" for u, v, c in g.edges()]
        records.append("\n".join(lines) + "\n")
    return "\n".join(records)


def parse_edgelist(text: str) -> list[Graph]:
    """Parse blank-line separated records of the edge-list format."""
    graphs = []
    lines = text.split("\n")
    i = 0
    while i < len(lines):
        if not lines[i].strip():
            i += 1
            continue
        start = i
        try:
            n, a, b = (int(x) for x in lines[i].split())
        except ValueError:
            raise FormatError("expected header 'n a b'", line=i + 1) from None
        i += 1
        node_class = np.zeros(n, dtype=np.int64)
        for v in range(n):
            if i >= len(lines) or not lines[i].strip():
                raise FormatError(f"record truncated: expected {n} node lines", line=i + 1)
            parts = lines[i].split()
            if len(parts) != 2 or int(parts[0]) != v:
                raise FormatError(f"expected node line for node {v}", line=i + 1)
            node_class[v] = int(parts[1])
            i += 1
        edges = []
        while i < len(lines) and lines[i].strip():
            parts = lines[i].split()
            if len(parts) != 3:
                raise FormatError("expected edge line 'u v class'", line=i + 1)
            u, v, c = (int(x) for x in parts)
            if not (0 <= u < n and 0 <= v < n) or u == v or not 0 <= c < b:
                raise FormatError(f"invalid edge ({u}, {v}, {c}) for n={n}, b={b}", line=i + 1)
            edges.append((u, v, c))
            i += 1
        try:
            graphs.append(Graph.from_edges(n, edges, a, b, node_class=node_class))
        except (DimensionError, IndexError) as exc:
            raise FormatError(f"invalid record: {exc}", line=start + 1) from exc
    return graphs


def write_edgelist(path, graphs: Iterable[Graph]) -> None:
    Path(path).write_text(format_edgelist(graphs), encoding="utf-8")


def read_edgelist(path) -> list[Graph]:
    return parse_edgelist(Path(path).read_text(encoding="utf-8"))
