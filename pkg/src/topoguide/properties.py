"""Exact graph properties used as conditioning targets, and evaluation metrics."""
from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateInputError, InputError, UndefinedStatisticError
from .graph import Graph

GLOBAL_KINDS = ("density", "clustering", "assortativity", "transitivity")
PATH_KIND = "shortest_path_set"
KINDS = GLOBAL_KINDS + (PATH_KIND,)

METRICS_HEADER = ("run", "metric", "statistic", "value")


@dataclass(frozen=True)
class PropertyTarget:
    """A conditioning target.

    For global kinds ``value`` is a real number.  For ``shortest_path_set`` it is a
    tuple of ``(source, target, length)`` triples.  ``epsilon`` is the acceptance
    tolerance on ``|phi(G) - y|``; it defaults to 10% of ``|y|``.
    """

    kind: str
    value: float | tuple
    epsilon: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown property kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == PATH_KIND:
            triples = tuple((int(s), int(t), int(l)) for s, t, l in self.value)
            if not triples:
                raise InputError("shortest_path_set target needs at least one triple")
            for s, t, l in triples:
                if s == t or l < 1:
                    raise InputError(f"invalid path triple {(s, t, l)}")
            object.__setattr__(self, "value", triples)
            scale = float(np.mean([l for _, _, l in triples]))
        else:
            object.__setattr__(self, "value", float(self.value))
            scale = abs(self.value)
        if self.epsilon is None:
            object.__setattr__(self, "epsilon", max(0.1 * scale, 1e-3))
        if not self.epsilon > 0:
            raise InputError("epsilon must be positive")

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return [(s, t) for s, t, _ in self.value]

    def to_json(self) -> dict:
        value = [list(x) for x in self.value] if self.kind == PATH_KIND else self.value
        return {"kind": self.kind, "value": value, "epsilon": self.epsilon}

    @classmethod
    def from_json(cls, d: dict) -> "PropertyTarget":
        return cls(d["kind"], d["value"], d.get("epsilon"))


# -- global properties --------------------------------------------------------------

def _active_adjacency(g: Graph) -> np.ndarray:
    act = g.active_mask
    return g.adjacency[np.ix_(act, act)]


def density(g: Graph) -> float:
    adj = _active_adjacency(g)
    n = adj.shape[0]
    if n < 2:
        raise DegenerateInputError("density needs at least 2 active nodes")
    return float(adj.sum() / (n * (n - 1)))


def local_clustering(g: Graph) -> np.ndarray:
    """Per active node ``2 T(v) / (k (k - 1))``, zero where ``k < 2``."""
    adj = _active_adjacency(g)
    k = adj.sum(1)
    tri = np.einsum("ij,jk,ki->i", adj, adj, adj) / 2.0
    denom = k * (k - 1)
    out = np.zeros_like(k)
    ok = k >= 2
    out[ok] = 2.0 * tri[ok] / denom[ok]
    return out


def clustering(g: Graph) -> float:
    c = local_clustering(g)
    return float(c.mean()) if c.size else 0.0


def transitivity(g: Graph) -> float:
    adj = _active_adjacency(g)
    k = adj.sum(1)
    triples = float((k * (k - 1) / 2).sum())
    if triples == 0:
        return 0.0
    triangles = float(np.einsum("ij,jk,ki->", adj, adj, adj)) / 6.0
    return 3.0 * triangles / triples


def assortativity(g: Graph) -> float:
    """Pearson correlation of endpoint degrees over both orientations of every edge."""
    adj = _active_adjacency(g)
    k = adj.sum(1)
    u, v = np.nonzero(np.triu(adj, 1))
    if u.size < 2:
        raise UndefinedStatisticError("assortativity needs at least 2 edges")
    x = np.concatenate([k[u], k[v]])
    y = np.concatenate([k[v], k[u]])
    xc = x - x.mean()
    yc = y - y.mean()
    var = float((xc * xc).sum())
    if var <= 1e-12 * max(1.0, float((x * x).sum())):
        raise UndefinedStatisticError("endpoint degrees have zero variance")
    return float((xc * yc).sum() / math.sqrt(var * float((yc * yc).sum())))


def _neighbors(g: Graph) -> list[np.ndarray]:
    adj = g.adjacency
    return [np.nonzero(adj[v])[0] for v in range(g.n)]


def bfs_distances(g: Graph, source: int, nbrs=None) -> np.ndarray:
    """Hop counts from ``source``; unreachable nodes get ``inf``."""
    nbrs = _neighbors(g) if nbrs is None else nbrs
    dist = np.full(g.n, math.inf)
    dist[source] = 0
    queue = deque([source])
    while queue:
        x = queue.popleft()
        d = dist[x] + 1
        for y in nbrs[x]:
            if dist[y] == math.inf:
                dist[y] = d
                queue.append(y)
    return dist


def shortest_path_lengths(g: Graph, pairs: Iterable[Sequence[int]]) -> list[float]:
    pairs = [(int(p[0]), int(p[1])) for p in pairs]
    act = g.active_mask
    for s, t in pairs:
        for v in (s, t):
            if not 0 <= v < g.n or not act[v]:
                raise InputError(f"path endpoint {v} is not an active node")
    nbrs = _neighbors(g)
    cache: dict[int, np.ndarray] = {}
    out = []
    for s, t in pairs:
        if s not in cache:
            cache[s] = bfs_distances(g, s, nbrs)
        out.append(float(cache[s][t]))
    return out


def property_value(g: Graph, kind: str) -> float:
    """Scalar value of a global property kind."""
    fn = {"density": density, "clustering": clustering,
          "assortativity": assortativity, "transitivity": transitivity}.get(kind)
    if fn is None:
        raise InputError(f"{kind!r} is not a scalar property")
    return fn(g)


def deviation(g: Graph, target: PropertyTarget) -> float:
    """``|phi(g) - y|``; ``inf`` when phi is undefined or a pair is unreachable.

    Path-set targets use the mean absolute deviation over the triples.
    """
    if target.kind == PATH_KIND:
        try:
            lengths = shortest_path_lengths(g, target.pairs)
        except InputError:
            return math.inf
        return float(np.mean([abs(d - l) for d, (_, _, l) in zip(lengths, target.value)]))
    try:
        return abs(property_value(g, target.kind) - target.value)
    except (UndefinedStatisticError, DegenerateInputError):
        return math.inf


# -- generation-quality statistics ----------------------------------------------------

def degree_histogram(g: Graph) -> np.ndarray:
    adj = _active_adjacency(g)
    if adj.shape[0] == 0:
        return np.zeros(1, dtype=np.int64)
    return np.bincount(adj.sum(1).astype(np.int64))


# Orbits of connected 4-node graphlets, numbered 4..14 as in the usual graphlet-orbit
# convention; column j of the returned array is orbit 4 + j.
GRAPHLETS = ("path", "star", "cycle", "paw", "diamond", "clique")
N_ORBITS = 11


def _four_subsets(nodes: np.ndarray) -> np.ndarray:
    m = len(nodes)
    if m < 4:
        return np.zeros((0, 4), dtype=np.int64)
    idx = np.fromiter((x for c in combinations(range(m), 4) for x in c), dtype=np.int64)
    return nodes[idx.reshape(-1, 4)]


def graphlet_orbit_counts(g: Graph) -> tuple[np.ndarray, np.ndarray]:
    """Exhaustive 4-subset enumeration.

    Returns ``(graphlet_counts, orbit_counts)``: occurrences of each of the six
    connected 4-node graphlets (order of :data:`GRAPHLETS`), and an ``(n, 11)``
    array of per-node orbit counts.
    """
    adj = g.adjacency
    orbits = np.zeros((g.n, N_ORBITS), dtype=np.int64)
    counts = np.zeros(len(GRAPHLETS), dtype=np.int64)
    quads = _four_subsets(np.nonzero(g.active_mask)[0])
    if quads.shape[0] == 0:
        return counts, orbits
    e = {(i, j): adj[quads[:, i], quads[:, j]].astype(np.int64)
         for i, j in combinations(range(4), 2)}
    deg = np.stack([sum(e[tuple(sorted((i, j)))] for j in range(4) if j != i)
                    for i in range(4)], axis=1)
    m = deg.sum(1) // 2
    dsorted = np.sort(deg, axis=1)
    has_isolated = dsorted[:, 0] == 0
    is_star = (m == 3) & (dsorted[:, 3] == 3)
    is_path = (m == 3) & ~has_isolated & ~is_star
    is_cycle = (m == 4) & (dsorted[:, 3] == 2)
    is_paw = (m == 4) & (dsorted[:, 3] == 3)
    is_diamond = m == 5
    is_clique = m == 6
    masks = (is_path, is_star, is_cycle, is_paw, is_diamond, is_clique)
    counts[:] = [int(mk.sum()) for mk in masks]

    # local degree inside the graphlet decides the orbit
    orbit_of = np.full_like(deg, -1)
    orbit_of[is_path] = np.where(deg[is_path] == 1, 4, 5)
    orbit_of[is_star] = np.where(deg[is_star] == 1, 6, 7)
    orbit_of[is_cycle] = 8
    orbit_of[is_paw] = np.select([deg[is_paw] == 1, deg[is_paw] == 2], [9, 10], 11)
    orbit_of[is_diamond] = np.where(deg[is_diamond] == 2, 12, 13)
    orbit_of[is_clique] = 14
    sel = orbit_of >= 0
    np.add.at(orbits, (quads[sel], orbit_of[sel] - 4), 1)
    return counts, orbits


# -- MMD ---------------------------------------------------------------------------

def _stat_vector(g: Graph, statistic: str, bins: int = 100) -> np.ndarray:
    if statistic == "degree":
        return degree_histogram(g).astype(float)
    if statistic == "clustering":
        hist, _ = np.histogram(local_clustering(g), bins=bins, range=(0.0, 1.0))
        return hist.astype(float)
    if statistic == "orbit":
        return graphlet_orbit_counts(g)[1].sum(0).astype(float)
    raise InputError(f"unknown MMD statistic {statistic!r}")


def _normalized_stats(graphs: Sequence[Graph], statistic: str) -> list[np.ndarray]:
    out = []
    for g in graphs:
        v = _stat_vector(g, statistic)
        s = v.sum()
        out.append(v / s if s > 0 else v)
    return out


def _pad(vectors: list[np.ndarray]) -> np.ndarray:
    width = max(len(v) for v in vectors)
    out = np.zeros((len(vectors), width))
    for i, v in enumerate(vectors):
        out[i, :len(v)] = v
    return out


def mmd(samples_a: Sequence[Graph], samples_b: Sequence[Graph], statistic: str = "degree") -> float:
    """Squared MMD, Gaussian kernel on total-variation distance between normalized
    statistic histograms, bandwidth from the median heuristic over the pooled set."""
    if not samples_a or not samples_b:
        raise InputError("MMD needs two nonempty sample sets")
    x = _pad(_normalized_stats(samples_a, statistic) + _normalized_stats(samples_b, statistic))
    return mmd_from_vectors(x[:len(samples_a)], x[len(samples_a):])


def mmd_from_vectors(xa: np.ndarray, xb: np.ndarray) -> float:
    x = np.concatenate([xa, xb])
    na = xa.shape[0]
    dist = 0.5 * np.abs(x[:, None, :] - x[None, :, :]).sum(-1)
    iu = np.triu_indices(x.shape[0], 1)
    pooled = dist[iu]
    sigma = float(np.median(pooled)) if pooled.size else 0.0
    if sigma <= 0:
        nz = pooled[pooled > 0]
        sigma = float(nz.mean()) if nz.size else 1.0
    k = np.exp(-dist ** 2 / (2 * sigma ** 2))
    kaa = k[:na, :na].mean()
    kbb = k[na:, na:].mean()
    kab = k[:na, na:].mean()
    return float(max(kaa + kbb - 2 * kab, 0.0))


# -- conditioning-quality metrics ---------------------------------------------------

def _capped_lengths(g: Graph, pairs) -> list[float]:
    # unreachable pairs count as n hops so that errors stay finite
    return [min(d, float(g.n)) for d in shortest_path_lengths(g, pairs)]


def _targets_for(samples: Sequence[Graph], targets) -> list[PropertyTarget]:
    if isinstance(targets, PropertyTarget):
        return [targets] * len(samples)
    targets = list(targets)
    if len(targets) != len(samples):
        raise InputError(f"{len(targets)} targets for {len(samples)} samples")
    return targets


def condition_mae(samples: Sequence[Graph], targets) -> float:
    """Mean ``|phi(sample) - y|``.

    ``targets`` is one :class:`PropertyTarget` or one per sample.  Samples whose
    property is undefined (e.g. zero-variance assortativity) are skipped.
    """
    if not samples:
        raise InputError("condition_mae needs at least one sample")
    errs = []
    for g, tgt in zip(samples, _targets_for(samples, targets)):
        if tgt.kind == PATH_KIND:
            lengths = _capped_lengths(g, tgt.pairs)
            errs.append(float(np.mean([abs(d - l) for d, (_, _, l) in zip(lengths, tgt.value)])))
        else:
            try:
                errs.append(abs(property_value(g, tgt.kind) - tgt.value))
            except (UndefinedStatisticError, DegenerateInputError):
                continue
    if not errs:
        raise UndefinedStatisticError("property undefined on every sample")
    return float(np.mean(errs))


def path_kl(samples: Sequence[Graph], targets) -> float:
    """KL(target lengths || generated lengths) over histograms on ``[1, n-1]``,
    add-one smoothed."""
    if not samples:
        raise InputError("path_kl needs at least one sample")
    n = samples[0].n
    want = np.ones(max(n - 1, 1))
    got = np.ones(max(n - 1, 1))
    for g, tgt in zip(samples, _targets_for(samples, targets)):
        if tgt.kind != PATH_KIND:
            raise InputError("path_kl needs shortest_path_set targets")
        for d, (_, _, l) in zip(_capped_lengths(g, tgt.pairs), tgt.value):
            want[min(max(l, 1), n - 1) - 1] += 1
            got[int(min(max(d, 1), n - 1)) - 1] += 1
    p = want / want.sum()
    q = got / got.sum()
    return float((p * np.log(p / q)).sum())


def shortest_path_subgraph(g: Graph, pairs) -> set[tuple[int, int]]:
    """Edges lying on at least one shortest path between any conditioned pair."""
    nbrs = _neighbors(g)
    edges = set()
    for s, t in pairs:
        ds = bfs_distances(g, s, nbrs)
        if ds[t] == math.inf:
            continue
        dt = bfs_distances(g, t, nbrs)
        total = ds[t]
        for x, y, _ in g.edges():
            if not (g.active_mask[x] and g.active_mask[y]):
                continue
            if ds[x] + 1 + dt[y] == total or ds[y] + 1 + dt[x] == total:
                edges.add((x, y))
    return edges


def overlap_rate(generated: Graph, original: Graph, pairs) -> float:
    """Share of the original conditioned-path subgraph's edges present in the
    generated graph's conditioned-path subgraph."""
    pairs = [(int(s), int(t)) for s, t in pairs]
    ref = shortest_path_subgraph(original, pairs)
    if not ref:
        raise InputError("original graph has no path between the conditioned pairs")
    gen = shortest_path_subgraph(generated, pairs)
    return len(ref & gen) / len(ref)


# -- CSV reports --------------------------------------------------------------------

def write_metrics_csv(path, rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(METRICS_HEADER)
        for row in rows:
            run, metric, statistic, value = row
            w.writerow([run, metric, statistic, repr(float(value))])


def read_metrics_csv(path) -> list[tuple[str, str, str, float]]:
    with open(Path(path), newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = tuple(next(r))
        if header != METRICS_HEADER:
            raise InputError(f"unexpected metrics header {header}")
        return [(run, metric, stat, float(value)) for run, metric, stat, value in r]
