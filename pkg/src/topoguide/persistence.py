"""Score-weighted graph filtrations and 0/1-dimensional persistence.

Elements (active nodes and edges between active nodes) carry a real score; a
positive score means "removal lowers the guidance loss".  The decreasing
filtration keeps the elements whose score is at most a threshold, so lowering the
threshold peels elements off highest-score first.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InputError, ScheduleError
from .graph import Graph, apply_removals

NODE, EDGE = 0, 1


@dataclass(frozen=True, eq=False)
class ScoredGraph:
    """A graph with one score per active node and per edge between active nodes.

    ``edges`` lists ``(u, v)`` with ``u < v`` in the base graph's pair order and
    ``edge_score[k]`` belongs to ``edges[k]``.  Inactive nodes keep a score of 0 and
    never enter the filtration.
    """

    base: Graph
    node_score: np.ndarray
    edge_score: np.ndarray
    edges: tuple = field(default=None)

    def __post_init__(self):
        g = self.base
        act = g.active_mask
        present = tuple((u, v) for u, v, _ in g.edges() if act[u] and act[v])
        if self.edges is None:
            object.__setattr__(self, "edges", present)
        elif tuple(map(tuple, self.edges)) != present:
            raise InputError("scored edge set does not match the base graph's edges")
        ns = np.asarray(self.node_score, dtype=float).reshape(-1)
        es = np.asarray(self.edge_score, dtype=float).reshape(-1)
        if ns.shape != (g.n,):
            raise InputError(f"node_score has shape {ns.shape}, expected ({g.n},)")
        if es.shape != (len(self.edges),):
            raise InputError(f"edge_score has {es.size} entries for {len(self.edges)} edges")
        if not (np.all(np.isfinite(ns[act])) and np.all(np.isfinite(es))):
            raise InputError("scores must be finite")
        ns = np.where(act, ns, 0.0)
        ns.setflags(write=False)
        es.setflags(write=False)
        object.__setattr__(self, "node_score", ns)
        object.__setattr__(self, "edge_score", es)

    @classmethod
    def from_matrix(cls, base: Graph, node_score, pair_score: np.ndarray) -> "ScoredGraph":
        """Take edge scores from an ``n x n`` (symmetric) score matrix."""
        act = base.active_mask
        edges = [(u, v) for u, v, _ in base.edges() if act[u] and act[v]]
        es = np.array([pair_score[u, v] for u, v in edges], dtype=float)
        return cls(base, node_score, es, tuple(edges))

    def elements(self) -> list[tuple[int, int]]:
        """All filtration elements as ``(kind, index)``."""
        nodes = [(NODE, int(v)) for v in np.nonzero(self.base.active_mask)[0]]
        return nodes + [(EDGE, k) for k in range(len(self.edges))]

    def score(self, element: tuple[int, int]) -> float:
        kind, idx = element
        return float(self.node_score[idx] if kind == NODE else self.edge_score[idx])

    def shifted(self, c: float) -> "ScoredGraph":
        return ScoredGraph(self.base, self.node_score + c, self.edge_score + c, self.edges)


@dataclass(frozen=True)
class Filtration:
    """Monotone removal ladder.

    ``subcomplexes[0]`` is the unedited graph and ``subcomplexes[i]`` has the first
    ``i`` elements of ``removed`` taken out.  ``thresholds[i-1]`` separates the
    ``i``-th and ``i+1``-th removal scores.
    """

    thresholds: tuple
    subcomplexes: tuple
    removed: tuple
    removed_scores: tuple

    @property
    def depth(self) -> int:
        return len(self.removed)


@dataclass(frozen=True)
class PersistenceDiagram:
    pairs: tuple  # (dimension, birth, death)
    # element order of the increasing (sublevel) sweep; the decreasing filtration
    # visits the same elements in reverse
    order: tuple = ()

    def dim(self, d: int) -> list[tuple[float, float]]:
        return [(b, dd) for k, b, dd in self.pairs if k == d]

    def alive_at(self, alpha: float, d: int = 0) -> int:
        """Number of ``d``-dimensional classes alive in the sublevel set at ``alpha``."""
        return sum(1 for k, b, dd in self.pairs if k == d and b <= alpha < dd)

    def lifetimes(self, max_score: float) -> list[float]:
        return [(min(dd, max_score) - b) for _, b, dd in self.pairs]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(("dimension", "birth", "death"))
            for k, b, dd in self.pairs:
                w.writerow((k, repr(b), "inf" if dd == math.inf else repr(dd)))


def select_thresholds(scores: Sequence[float], t_homo: int) -> list[float]:
    """Midpoints between consecutive descending scores: ``alpha_i = (s_i + s_{i+1}) / 2``."""
    s = [float(x) for x in scores]
    if any(s[i] < s[i + 1] for i in range(len(s) - 1)):
        raise InputError("scores must be sorted in descending order")
    if t_homo < 0 or t_homo >= len(s):
        raise ScheduleError(f"t_homo={t_homo} needs at least {t_homo + 1} scores, got {len(s)}")
    return [(s[i - 1] + s[i]) / 2.0 for i in range(1, t_homo + 1)]


def removal_order(sg: ScoredGraph, limit: int | None = None) -> list[tuple[tuple[int, int], float]]:
    """Greedy decreasing-score removal sequence of ``(element, effective score)``.

    A node can only leave once all its incident edges are gone (the face condition of
    a subcomplex), so its effective score is capped by its edges' scores.  Ties break
    by ascending index, nodes before edges.
    """
    g = sg.base
    nodes = [int(v) for v in np.nonzero(g.active_mask)[0]]
    incident = {v: set() for v in nodes}
    for k, (u, v) in enumerate(sg.edges):
        incident[u].add(k)
        incident[v].add(k)
    eff = {}
    for v in nodes:
        cap = min((sg.edge_score[k] for k in incident[v]), default=math.inf)
        eff[(NODE, v)] = min(float(sg.node_score[v]), float(cap))
    for k in range(len(sg.edges)):
        eff[(EDGE, k)] = float(sg.edge_score[k])

    remaining = sorted(eff, key=lambda el: (-eff[el], el[0], el[1]))
    out = []
    limit = len(remaining) if limit is None else limit
    while remaining and len(out) < limit:
        for pos, el in enumerate(remaining):
            if el[0] == EDGE or not incident[el[1]]:
                break
        else:  # pragma: no cover - an edge is always eligible while nodes are blocked
            raise AssertionError("no eligible element")
        remaining.pop(pos)
        if el[0] == EDGE:
            u, v = sg.edges[el[1]]
            incident[u].discard(el[1])
            incident[v].discard(el[1])
        out.append((el, eff[el]))
    return out


def build_filtration(sg: ScoredGraph, t_homo: int) -> Filtration:
    """Remove exactly one element per homology step, ``t_homo`` steps in total."""
    if t_homo < 0:
        raise ScheduleError("t_homo must be nonnegative")
    pool = len(sg.elements())
    if t_homo > pool:
        raise ScheduleError(f"t_homo={t_homo} exceeds the {pool} removable elements")
    order = removal_order(sg, limit=t_homo + 1)
    top = order[:t_homo]
    scores = [s for _, s in order]
    if len(scores) == t_homo and t_homo > 0:
        scores.append(scores[-1] - 1.0)
    thresholds = tuple(select_thresholds(scores, t_homo)) if t_homo else ()

    subs = [sg.base]
    cur = sg.base
    for (kind, idx), _ in top:
        if kind == NODE:
            cur = apply_removals(cur, nodes=[idx])
        else:
            cur = apply_removals(cur, edges=[sg.edges[idx]])
        subs.append(cur)
    return Filtration(thresholds, tuple(subs), tuple(el for el, _ in top),
                      tuple(s for _, s in top))


class UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, keep, drop):
        self.parent[self.find(drop)] = self.find(keep)


def persistence_diagram(sg: ScoredGraph) -> PersistenceDiagram:
    """0/1-dimensional persistence of the sublevel sweep, Kruskal style.

    Nodes are born at their score.  Processing edges by ascending score, an edge that
    merges two components kills the younger one (elder rule); an edge closing a cycle
    gives birth to a 1-dimensional class that never dies on a graph.
    """
    g = sg.base
    nodes = [int(v) for v in np.nonzero(g.active_mask)[0]]
    birth = {v: float(sg.node_score[v]) for v in nodes}
    edge_val = [max(float(sg.edge_score[k]), birth[u], birth[v]) for k, (u, v) in enumerate(sg.edges)]
    uf = UnionFind(nodes)
    pairs = []
    node_order = sorted(nodes, key=lambda v: (birth[v], v))
    edge_order = sorted(range(len(sg.edges)), key=lambda k: (edge_val[k], k))
    for k in edge_order:
        u, v = sg.edges[k]
        ru, rv = uf.find(u), uf.find(v)
        if ru == rv:
            pairs.append((1, edge_val[k], math.inf))
            continue
        # younger component (later birth, then larger root) dies
        old, young = sorted((ru, rv), key=lambda r: (birth[r], r))
        pairs.append((0, birth[young], edge_val[k]))
        uf.union(old, young)
    roots = sorted({uf.find(v) for v in nodes}, key=lambda r: (birth[r], r))
    pairs.extend((0, birth[r], math.inf) for r in roots)
    pairs.sort(key=lambda p: (p[0], p[1], p[2]))
    order = tuple((NODE, v) for v in node_order) + tuple((EDGE, k) for k in edge_order)
    return PersistenceDiagram(tuple(pairs), order)
