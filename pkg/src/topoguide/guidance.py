"""Classifier-gradient guidance through persistent-homology filtrations.

At every gated reverse step the freshly denoised graph ``G`` is scored by the
property predictors' loss gradients, a removal ladder ``G = C_0, C_1, ..., C_k``
is built from the filtration (``C_i`` is ``i`` edits away from ``G``), each rung
is weighted by

    w(C_i) = exp(-i) * |phi(C_i) - y|^-2 * 1[|phi(C_i) - y| <= eps]

using the exact property ``phi``, and one rung replaces ``G``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import networkx as nx
import numpy as np

from . import diffusion, neural
from .errors import ConfigError, InputError
from .graph import Graph, apply_removals, pair_index
from .neural import GradientField, MpnnModel
from .persistence import ScoredGraph, build_filtration
from .properties import GLOBAL_KINDS, PATH_KIND, PropertyTarget, bfs_distances, deviation, \
    shortest_path_subgraph

W_CAP = 1e12
EXACT_TOL = 1e-12
PROPOSALS = ("gradient", "rand", "ebc", "neg-ebc", "loop-grad")
SELECTIONS = ("argmax-weight", "sample-proportional")
SCHEMES = ("filtration", "dense")


@dataclass(frozen=True)
class GuidanceConfig:
    t_homo: int = 5
    ph_timing: float = 0.6
    epsilon: Mapping[str, float] = field(default_factory=dict)
    selection: str = "argmax-weight"
    apply_every: int = 1
    proposal: str = "gradient"
    scheme: str = "filtration"

    def __post_init__(self):
        if self.t_homo < 0:
            raise ConfigError("t_homo must be nonnegative")
        if not 0.0 <= self.ph_timing < 1.0:
            raise ConfigError("ph_timing must lie in [0, 1)")
        if self.apply_every < 1:
            raise ConfigError("apply_every must be positive")
        if self.selection not in SELECTIONS:
            raise ConfigError(f"selection must be one of {SELECTIONS}")
        if self.proposal not in PROPOSALS:
            raise ConfigError(f"proposal must be one of {PROPOSALS}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}")
        for kind, eps in self.epsilon.items():
            if not eps > 0:
                raise ConfigError(f"epsilon for {kind} must be positive")

    def active_at(self, k: int, T: int) -> bool:
        """Gate for the ``k``-th reverse step (1-based) of ``T``."""
        return (k - 1) / T >= self.ph_timing and k % self.apply_every == 0

    def with_targets_eps(self, targets: Sequence[PropertyTarget]) -> list[PropertyTarget]:
        return [replace(t, epsilon=self.epsilon[t.kind]) if t.kind in self.epsilon else t
                for t in targets]

    def to_dict(self) -> dict:
        return {"t_homo": self.t_homo, "ph_timing": self.ph_timing, "epsilon": dict(self.epsilon),
                "selection": self.selection, "apply_every": self.apply_every,
                "proposal": self.proposal, "scheme": self.scheme}


@dataclass(frozen=True)
class Candidate:
    graph: Graph
    distance: int
    deviations: tuple = ()
    weight: float | None = None


@dataclass(frozen=True)
class CandidateSet:
    candidates: tuple

    def __len__(self):
        return len(self.candidates)

    @property
    def weights(self) -> np.ndarray:
        return np.array([0.0 if c.weight is None else c.weight for c in self.candidates])

    @property
    def all_rejected(self) -> bool:
        return not np.any(self.weights > 0)


# -- scoring ------------------------------------------------------------------------

LOOP_ORDER = GLOBAL_KINDS  # density -> clustering -> assortativity -> transitivity -> density


def _loop_source(kind: str) -> str:
    if kind not in LOOP_ORDER:
        return kind
    return LOOP_ORDER[(LOOP_ORDER.index(kind) - 1) % len(LOOP_ORDER)]


def target_field(model: MpnnModel, g: Graph, target: PropertyTarget) -> GradientField:
    """Loss gradient of one target; path sets sum their per-pair losses."""
    if target.kind != PATH_KIND:
        return neural.grad_wrt_graph(model, g, target.value)
    fields = [neural.grad_wrt_graph(model, g, l, markers=[[s], [t]]) for s, t, l in target.value]
    return GradientField(sum(f.node_grad for f in fields), sum(f.edge_grad for f in fields))


def _model_for(phi_models: Mapping[str, MpnnModel], kind: str) -> MpnnModel:
    model = phi_models.get(kind)
    if model is None:
        raise ConfigError(f"no trained predictor for property {kind!r}")
    return model


def gradient_scores(phi_models: Mapping[str, MpnnModel], g: Graph, targets: Sequence[PropertyTarget],
                    loop: bool = False) -> ScoredGraph:
    """Removal scores from predictor gradients (positive = removal lowers the loss).

    Several targets are fused by dividing each target's scores by their max-abs over
    the removable elements and summing.  ``loop`` swaps each global property's
    predictor for its predecessor in the density/clustering/assortativity/
    transitivity cycle.
    """
    if not targets:
        raise ConfigError("gradient_scores needs at least one target")
    act = g.active_mask
    present = (g.edge_class != 0) & act[:, None] & act[None, :]
    total_node = np.zeros(g.n)
    total_pair = np.zeros((g.n, g.n))
    for target in targets:
        kind = _loop_source(target.kind) if loop else target.kind
        f = target_field(_model_for(phi_models, kind), g, target)
        node, pair = f.removal_scores(g)
        if len(targets) > 1:
            scale = max(np.abs(node[act]).max(initial=0.0), np.abs(pair[present]).max(initial=0.0))
            if scale > 0:
                node, pair = node / scale, pair / scale
        total_node += node
        total_pair += pair
    return ScoredGraph.from_matrix(g, total_node, total_pair)


def random_proposal(g: Graph, rng: np.random.Generator) -> ScoredGraph:
    act = g.active_mask
    m = sum(1 for u, v, _ in g.edges() if act[u] and act[v])
    return ScoredGraph(g, rng.standard_normal(g.n), rng.standard_normal(m))


def edge_betweenness(g: Graph) -> dict[tuple[int, int], float]:
    """Unnormalized edge betweenness on the active subgraph, per component."""
    from .datasets import to_networkx
    eb = nx.edge_betweenness_centrality(to_networkx(g), normalized=False)
    return {tuple(sorted(e)): float(v) for e, v in eb.items()}


def ebc_proposal(g: Graph, sign: int = +1) -> ScoredGraph:
    """Edges scored by (+/-) betweenness; nodes sit below every edge."""
    if sign not in (+1, -1):
        raise InputError("sign must be +1 or -1")
    eb = edge_betweenness(g)
    act = g.active_mask
    edges = [(u, v) for u, v, _ in g.edges() if act[u] and act[v]]
    es = np.array([sign * eb[e] for e in edges], dtype=float)
    floor = (es.min() if es.size else 0.0) - 1.0
    return ScoredGraph(g, np.full(g.n, floor), es, tuple(edges))


def proposal_scores(proposal: str, phi_models, g: Graph, targets, rng) -> ScoredGraph:
    if proposal == "gradient":
        return gradient_scores(phi_models, g, targets)
    if proposal == "loop-grad":
        return gradient_scores(phi_models, g, targets, loop=True)
    if proposal == "rand":
        return random_proposal(g, rng)
    if proposal == "ebc":
        return ebc_proposal(g, +1)
    if proposal == "neg-ebc":
        return ebc_proposal(g, -1)
    raise ConfigError(f"unknown proposal {proposal!r}")


# -- candidates ---------------------------------------------------------------------

def build_candidates(g: Graph, scores: ScoredGraph, t_homo: int) -> CandidateSet:
    """``{G} + {G after the first i removals of the filtration}`` for ``i <= t_homo``."""
    if scores.base != g:
        raise InputError("scores were computed for a different graph")
    filt = build_filtration(scores, t_homo)
    return CandidateSet(tuple(Candidate(s, i) for i, s in enumerate(filt.subcomplexes)))


def condition_factor(dev: float, eps: float) -> float:
    if not dev <= eps:
        return 0.0
    if dev < EXACT_TOL:
        return W_CAP
    return min(dev ** -2, W_CAP)


def candidate_weight(distance: int, deviations: Sequence[float], epsilons: Sequence[float]) -> float:
    factors = [condition_factor(d, e) for d, e in zip(deviations, epsilons)]
    if any(f == 0.0 for f in factors):
        return 0.0
    if all(d < EXACT_TOL for d in deviations):
        return W_CAP
    return min(math.exp(-distance) * math.prod(factors), W_CAP)


def weight_candidates(cs: CandidateSet, targets: Sequence[PropertyTarget]) -> CandidateSet:
    """Attach importance weights; several targets multiply their condition factors."""
    out = []
    eps = [t.epsilon for t in targets]
    for c in cs.candidates:
        devs = tuple(deviation(c.graph, t) for t in targets)
        out.append(replace(c, deviations=devs, weight=candidate_weight(c.distance, devs, eps)))
    return CandidateSet(tuple(out))


def select_index(cs: CandidateSet, selection: str = "argmax-weight",
                 rng: np.random.Generator | None = None) -> int:
    w = cs.weights
    if not np.any(w > 0):
        return 0
    if selection == "argmax-weight":
        return int(np.argmax(w))  # first maximum = smallest edit distance
    if selection == "sample-proportional":
        if rng is None:
            raise ConfigError("proportional selection needs an rng")
        return int(rng.choice(len(w), p=w / w.sum()))
    raise ConfigError(f"unknown selection {selection!r}")


def select_candidate(cs: CandidateSet, selection: str = "argmax-weight",
                     rng: np.random.Generator | None = None) -> Graph:
    return cs.candidates[select_index(cs, selection, rng)].graph


# -- dense / multi-class variants ---------------------------------------------------

def multiclass_tendency(grad, c_star: int):
    """``tau = grad[..., c*] - min_{c != c*} grad[..., c]`` and the pairs ranked by it.

    ``grad`` is a :class:`GradientField` (pairs ``i < j`` of its edge gradient are
    ranked) or an array whose last axis indexes classes (flat indices are ranked).
    """
    if isinstance(grad, GradientField):
        arr = grad.edge_grad
        iu = pair_index(arr.shape[0])
        flat = arr[iu]
        keys = list(zip(iu[0].tolist(), iu[1].tolist()))
    else:
        arr = np.asarray(grad, dtype=float)
        flat = arr.reshape(-1, arr.shape[-1])
        keys = list(range(flat.shape[0]))
    C = flat.shape[-1]
    if C < 2:
        raise ConfigError("transition tendency needs at least two classes")
    if not 0 <= c_star < C:
        raise ConfigError(f"target class {c_star} out of range")
    others = np.delete(flat, c_star, axis=-1)
    tau_flat = flat[:, c_star] - others.min(-1)
    order = np.argsort(-tau_flat, kind="stable")
    ranking = [keys[i] for i in order]
    if isinstance(grad, GradientField):
        tau = np.zeros(arr.shape[:2])
        tau[iu] = tau_flat
        tau[(iu[1], iu[0])] = tau_flat
    else:
        tau = tau_flat.reshape(arr.shape[:-1])
    return tau, ranking


def dense_guidance_step(g: Graph, grad, k: int) -> Graph:
    """Flip the ``k`` pairs with largest ``|grad|``: ``E <- clip(E - sign(grad), 0, 1)``.

    ``grad`` is a :class:`GradientField` (its presence derivative is used) or an
    ``n x n`` presence-gradient matrix.
    """
    if g.b != 2:
        raise ConfigError("dense guidance needs two edge classes")
    if k <= 0:
        return g
    pres = grad.presence() if isinstance(grad, GradientField) else np.asarray(grad, dtype=float)
    iu = pair_index(g.n)
    act = g.active_mask
    ok = act[iu[0]] & act[iu[1]]
    cand = np.nonzero(ok)[0]
    vals = pres[iu][cand]
    top = cand[np.argsort(-np.abs(vals), kind="stable")[:k]]
    pc = g.pair_class.copy()
    pc[top] = np.clip(pc[top] - np.sign(pres[iu][top]).astype(np.int64), 0, 1)
    return g.with_classes(pair_class=pc)


# -- the guided sampler -------------------------------------------------------------

def guide_graph(g: Graph, phi_models, targets: Sequence[PropertyTarget], cfg: GuidanceConfig,
                rng: np.random.Generator) -> tuple[Graph, dict]:
    """One guidance application; returns the edited graph and an audit record."""
    if cfg.scheme == "dense":
        fields = [target_field(_model_for(phi_models, t.kind), g, t) for t in targets]
        fused = GradientField(sum(f.node_grad for f in fields), sum(f.edge_grad for f in fields))
        out = dense_guidance_step(g, fused, cfg.t_homo)
        return out, {"scheme": "dense", "changed": int(np.count_nonzero(out.pair_class != g.pair_class))}
    sg = proposal_scores(cfg.proposal, phi_models, g, targets, rng)
    depth = min(cfg.t_homo, len(sg.elements()))
    cs = weight_candidates(build_candidates(g, sg, depth), targets)
    idx = select_index(cs, cfg.selection, rng)
    return cs.candidates[idx].graph, {
        "selected": idx, "weight": float(cs.weights[idx]), "n_candidates": len(cs),
        "all_rejected": bool(cs.all_rejected),
        "deviation": [float(d) for d in cs.candidates[idx].deviations]}


def conditioned_sample(denoiser, phi_models, schedule, targets: Sequence[PropertyTarget],
                       cfg: GuidanceConfig, rng: np.random.Generator, n: int,
                       record: list | None = None, guide_rng: np.random.Generator | None = None,
                       mask: bool = True, start: Graph | None = None,
                       t_start: int | None = None) -> Graph:
    """Reverse diffusion where gated steps replace ``G_{t-1}`` by a guided candidate.

    The backbone draws only from ``rng``; guidance randomness comes from
    ``guide_rng`` (spawned from ``rng`` when omitted), so a closed gate reproduces
    the unconditional sampler exactly.  ``start``/``t_start`` resume from a given
    noisy graph instead of the limit distribution.
    """
    targets = cfg.with_targets_eps(targets)
    if guide_rng is None:
        guide_rng = rng.spawn(1)[0]
    T = schedule.T

    def hook(g, t):
        k = T - t + 1
        if not targets or not cfg.active_at(k, T):
            return g
        out, info = guide_graph(g, phi_models, targets, cfg, guide_rng)
        if record is not None:
            record.append({"step": k, "t": t - 1, **info})
        return out

    return diffusion.reverse_chain(denoiser, schedule, n, rng, hook=hook, mask=mask, start=start,
                                  t_start=t_start)


# -- NSP baseline -------------------------------------------------------------------

def nsp_baseline(original: Graph, pairs, noise_rate: float, rng: np.random.Generator,
                 max_tries: int = 50) -> Graph:
    """Keep the conditioned shortest-path subgraph, rewire other edges at ``noise_rate``.

    Each rewired edge is moved to a random non-adjacent active pair that does not
    shorten any conditioned distance.
    """
    pairs = [(int(s), int(t)) for s, t in pairs]
    if not 0 <= noise_rate <= 1:
        raise InputError("noise_rate must lie in [0, 1]")
    base_d = {}
    for s, t in pairs:
        d = bfs_distances(original, s)[t]
        if d == math.inf:
            raise InputError(f"pair ({s}, {t}) is disconnected in the original graph")
        base_d[(s, t)] = d
    if noise_rate == 0:
        return original
    keep = shortest_path_subgraph(original, pairs)
    act = original.active_mask
    movable = [(u, v) for u, v, _ in original.edges() if (u, v) not in keep and act[u] and act[v]]
    moved = [e for e in movable if rng.random() < noise_rate]
    g = apply_removals(original, edges=moved)
    nodes = original.active_nodes()
    for _ in moved:
        for _ in range(max_tries):
            u, v = sorted(rng.choice(nodes, size=2, replace=False).tolist())
            if g.edge(u, v) != 0:
                continue
            trial = Graph.from_edges(g.n, g.edges() + [(u, v, 1)], g.a, g.b, node_class=g.node_class)
            if all(bfs_distances(trial, s)[t] == base_d[(s, t)] for s, t in pairs):
                g = trial
                break
    return g


# -- importance sampling ------------------------------------------------------------

def importance_estimate(f_values: np.ndarray, proposal: np.ndarray, target: np.ndarray,
                        n_draws: int, rng: np.random.Generator) -> tuple[float, float]:
    """Estimate ``E_target[f]`` from draws of ``proposal`` weighted by ``target/proposal``.

    Returns ``(estimate, standard error)``.  ``target`` must be normalized and
    ``proposal`` must cover its support.
    """
    proposal = np.asarray(proposal, dtype=float)
    target = np.asarray(target, dtype=float)
    if np.any((target > 0) & (proposal <= 0)):
        raise InputError("proposal does not cover the target's support")
    idx = rng.choice(len(proposal), size=n_draws, p=proposal / proposal.sum())
    w = target[idx] / proposal[idx]
    z = w * np.asarray(f_values, dtype=float)[idx]
    return float(z.mean()), float(z.std(ddof=1) / math.sqrt(n_draws))


# -- diagnostics --------------------------------------------------------------------

def gradient_histograms(phi: MpnnModel, graphs: Sequence[Graph], schedule, steps: Sequence[int],
                        target_value: float, rng: np.random.Generator, bins: int = 20,
                        markers=None) -> list[tuple[int, np.ndarray, np.ndarray]]:
    """Per-step histograms of edge-presence gradients on forward-noised graphs.

    Returns ``(t, counts, edges)`` per step; counts sum to the number of pair
    entries inspected (``n (n - 1) / 2`` per graph).
    """
    out = []
    for t in steps:
        vals = []
        for g in graphs:
            gt = diffusion.forward_noise(g, t, schedule, rng) if t > 0 else g
            f = neural.grad_wrt_graph(phi, gt, target_value, markers=markers)
            vals.append(f.presence()[pair_index(g.n)])
        v = np.concatenate(vals)
        counts, edges = np.histogram(v, bins=bins)
        out.append((int(t), counts, edges))
    return out
