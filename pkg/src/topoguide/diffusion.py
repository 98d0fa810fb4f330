"""Discrete forward noising and ancestral reverse sampling.

Steps are indexed ``0..T`` with ``G_0`` clean.  ``Q_t`` moves ``G_{t-1}`` to ``G_t``
and ``Qbar_t = Q_1 ... Q_t``.  Each ``Q_t = (1 - beta_t) I + beta_t 1 m^T`` mixes
toward the uniform limit ``m``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InputError
from .graph import Graph, GraphDistribution, pair_index
from . import neural

DEFAULT_T = 500


def cosine_betas(T: int, s: float = 0.008) -> np.ndarray:
    steps = np.arange(T + 1, dtype=float) / T
    alpha_bar = np.cos(0.5 * math.pi * (steps + s) / (1 + s)) ** 2
    betas = 1.0 - alpha_bar[1:] / alpha_bar[:-1]
    return np.clip(betas, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class NoiseSchedule:
    T: int
    a: int
    b: int
    betas: np.ndarray
    kind: str = "uniform-cosine"

    def __post_init__(self):
        betas = np.asarray(self.betas, dtype=float)
        if self.T < 1 or betas.shape != (self.T,):
            raise InputError(f"need T >= 1 and {self.T} betas")
        if np.any(betas < 0) or np.any(betas > 1):
            raise InputError("betas must lie in [0, 1]")
        object.__setattr__(self, "betas", betas)
        for tag, k in (("v", self.a), ("e", self.b)):
            limit = np.full(k, 1.0 / k)
            q = np.empty((self.T + 1, k, k))
            qbar = np.empty((self.T + 1, k, k))
            q[0] = qbar[0] = np.eye(k)
            for t in range(1, self.T + 1):
                q[t] = (1 - betas[t - 1]) * np.eye(k) + betas[t - 1] * np.outer(np.ones(k), limit)
                qbar[t] = qbar[t - 1] @ q[t]
            for arr in (q, qbar, limit):
                arr.setflags(write=False)
            object.__setattr__(self, f"q_{tag}", q)
            object.__setattr__(self, f"qbar_{tag}", qbar)
            object.__setattr__(self, f"limit_{tag}", limit)

    def to_dict(self) -> dict:
        return {"T": self.T, "a": self.a, "b": self.b, "kind": self.kind, "betas": self.betas.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseSchedule":
        return cls(d["T"], d["a"], d["b"], np.array(d["betas"], dtype=float), d.get("kind", "uniform-cosine"))


def make_schedule(T: int = DEFAULT_T, a: int = 2, b: int = 2, kind: str = "uniform-cosine",
                  betas=None) -> NoiseSchedule:
    """Build a schedule; explicit ``betas`` override the cosine spacing."""
    if T < 1:
        raise InputError("T must be at least 1")
    if betas is None:
        if kind != "uniform-cosine":
            raise InputError(f"unknown schedule kind {kind!r}")
        betas = cosine_betas(T)
    else:
        kind = "custom"
    return NoiseSchedule(T, a, b, np.asarray(betas, dtype=float), kind)


def _sample_classes(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return neural._categorical(probs, rng).astype(np.int64)


def _noise_with(g: Graph, mv: np.ndarray, me: np.ndarray, rng) -> Graph:
    nodes = _sample_classes(mv[g.node_class], rng)
    pairs = _sample_classes(me[g.pair_class], rng)
    return Graph(g.n, g.a, g.b, nodes, pairs)


def _check_dims(g: Graph, schedule: NoiseSchedule):
    if (g.a, g.b) != (schedule.a, schedule.b):
        raise DimensionError("graph classes do not match the schedule")


def forward_noise(g0: Graph, t: int, schedule: NoiseSchedule, rng: np.random.Generator) -> Graph:
    """Sample ``G_t ~ q(G_t | G_0)`` in one shot; each unordered pair is drawn once."""
    _check_dims(g0, schedule)
    if not 1 <= t <= schedule.T:
        raise InputError(f"t={t} outside 1..{schedule.T}")
    return _noise_with(g0, schedule.qbar_v[t], schedule.qbar_e[t], rng)


def forward_step(g_prev: Graph, t: int, schedule: NoiseSchedule, rng: np.random.Generator) -> Graph:
    """One transition ``G_{t-1} -> G_t``."""
    _check_dims(g_prev, schedule)
    if not 1 <= t <= schedule.T:
        raise InputError(f"t={t} outside 1..{schedule.T}")
    return _noise_with(g_prev, schedule.q_v[t], schedule.q_e[t], rng)


def posterior_probs(x_t: np.ndarray, p0: np.ndarray, q_t: np.ndarray, qbar_prev: np.ndarray,
                    qbar_t: np.ndarray) -> np.ndarray:
    """``p(x_{t-1} | x_t) = sum_{x0} p0(x0) q(x_{t-1} | x_t, x0)`` per element.

    ``x_t`` holds current classes ``(N,)`` and ``p0`` the predicted clean
    distributions ``(N, K)``.
    """
    like = q_t[:, x_t].T                        # (N, K): q(x_t | x_{t-1} = j)
    den = qbar_t[:, x_t].T                      # (N, K): q(x_t | x0)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(den > 0, p0 / np.where(den > 0, den, 1.0), 0.0)
    post = (w @ qbar_prev) * like
    z = post.sum(-1, keepdims=True)
    fallback = np.eye(p0.shape[1])[x_t]
    return np.where(z > 0, post / np.where(z > 0, z, 1.0), fallback)


def posterior(g_next: Graph, t: int, p0: GraphDistribution, schedule: NoiseSchedule) -> GraphDistribution:
    """Distribution of ``G_{t-1}`` given ``G_t = g_next`` and a clean-graph prediction."""
    qv = posterior_probs(g_next.node_class, p0.node_probs, schedule.q_v[t],
                         schedule.qbar_v[t - 1], schedule.qbar_v[t])
    iu = pair_index(g_next.n)
    pe_pairs = posterior_probs(g_next.pair_class, p0.edge_probs[iu], schedule.q_e[t],
                               schedule.qbar_e[t - 1], schedule.qbar_e[t])
    n = g_next.n
    pe = np.zeros((n, n, schedule.b))
    pe[iu] = pe_pairs
    pe[(iu[1], iu[0])] = pe_pairs
    pe[np.arange(n), np.arange(n)] = np.eye(schedule.b)[0]
    return GraphDistribution(qv, pe)


def mask_inactive(g: Graph) -> Graph:
    """Clear edges touching inactive nodes."""
    if g.inactive_class is None:
        return g
    act = g.active_mask
    iu = pair_index(g.n)
    keep = act[iu[0]] & act[iu[1]]
    if np.all(keep | (g.pair_class == 0)):
        return g
    return g.with_classes(pair_class=np.where(keep, g.pair_class, 0))


def reverse_step(g_next: Graph, t: int, model, schedule: NoiseSchedule, rng: np.random.Generator,
                 mask: bool = True) -> Graph:
    """Sample ``G_{t-1}`` from ``G_t``.

    ``model`` is a denoiser :class:`~topoguide.neural.MpnnModel` or any callable
    ``(graph, t) -> GraphDistribution`` predicting the clean graph.
    """
    _check_dims(g_next, schedule)
    if not 1 <= t <= schedule.T:
        raise InputError(f"t={t} outside 1..{schedule.T}")
    if isinstance(model, neural.MpnnModel):
        if (model.a, model.b) != (schedule.a, schedule.b):
            raise DimensionError("model output arity does not match the schedule")
        p0 = neural.forward(model, g_next, t=t)
    else:
        p0 = model(g_next, t)
    out = posterior(g_next, t, p0, schedule).sample(rng)
    return mask_inactive(out) if mask else out


def sample_limit(n: int, schedule: NoiseSchedule, rng: np.random.Generator) -> Graph:
    nodes = _sample_classes(np.broadcast_to(schedule.limit_v, (n, schedule.a)), rng)
    m = n * (n - 1) // 2
    pairs = _sample_classes(np.broadcast_to(schedule.limit_e, (m, schedule.b)), rng)
    return Graph(n, schedule.a, schedule.b, nodes, pairs)


def reverse_chain(model, schedule: NoiseSchedule, n: int, rng: np.random.Generator, hook=None,
                  mask: bool = True, start: Graph | None = None, t_start: int | None = None):
    """Run ``G_{t_start} -> ... -> G_0`` (``t_start`` defaults to ``T``).

    Without ``start`` the chain begins from the limit distribution.  ``hook(g, t)``
    may replace each freshly sampled ``G_{t-1}``; it must not draw from ``rng``.
    Intermediate states stay unmasked, as in the forward process the denoiser was
    trained on; ``mask`` only clears inactive-node edges from the returned graph.
    """
    t_start = schedule.T if t_start is None else t_start
    if not 1 <= t_start <= schedule.T:
        raise InputError(f"t_start={t_start} outside 1..{schedule.T}")
    g = sample_limit(n, schedule, rng) if start is None else start
    for t in range(t_start, 0, -1):
        g = reverse_step(g, t, model, schedule, rng, mask=False)
        if hook is not None:
            g = hook(g, t)
    return mask_inactive(g) if mask else g


def sample_unconditional(model, schedule: NoiseSchedule, n: int, rng: np.random.Generator,
                         mask: bool = True) -> Graph:
    return reverse_chain(model, schedule, n, rng, mask=mask)
