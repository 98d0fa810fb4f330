"""Message-passing network with hand-written reverse mode.

One architecture serves as the property predictor (regressor or classifier) and as
the denoiser of the diffusion backbone.  Graphs enter as a relaxed encoding: node
class probabilities ``X (n, a)`` and pair class probabilities ``E (n, n, b)``.
Messages along a pair are gated by its edge-presence probability ``1 - E[..., 0]``,
so the network is differentiable in every node and pair entry and, at a one-hot
input, gradients only flow along existing edges.

Layer ``l`` updates ``h <- h + tanh(h Ws + c * A (h Wm) + b)`` with
``c = 1/sqrt(n)``.  Inputs are the node encoding, optional extra node channels
(path-endpoint markers, timestep embedding), scaled degree and triangle counts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError, InputError, NumericError, TrainingError
from .graph import Graph, GraphDistribution

KINDS = ("regressor", "classifier", "denoiser")
CLIP_NORM = 10.0


@dataclass
class TrainConfig:
    lr: float = 0.05
    epochs: int = 200
    batch_size: int = 32
    seed: int = 0
    loss: str = "squared-error"
    edge_weight: float = 5.0

    def __post_init__(self):
        if not (self.lr > 0 and self.epochs > 0 and self.batch_size > 0):
            raise ConfigError("lr, epochs and batch_size must be positive")
        if self.loss not in ("squared-error", "cross-entropy"):
            raise ConfigError(f"unknown loss {self.loss!r}")


@dataclass
class MpnnModel:
    kind: str
    a: int
    b: int
    layers: int = 6
    hidden: int = 32
    edge_hidden: int = 32
    markers: int = 0
    time_dim: int = 0
    out_dim: int = 1
    seed: int = 0
    params: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown model kind {self.kind!r}")
        if self.time_dim % 2:
            raise ConfigError("time_dim must be even")
        if not self.params:
            self.params = _init_params(self)

    @property
    def n_inputs(self) -> int:
        return self.a + self.markers + self.time_dim + 2

    def copy(self) -> "MpnnModel":
        return MpnnModel(self.kind, self.a, self.b, self.layers, self.hidden, self.edge_hidden,
                         self.markers, self.time_dim, self.out_dim, self.seed,
                         {k: v.copy() for k, v in self.params.items()})

    def zero_(self) -> "MpnnModel":
        """Set every trainable weight and bias to zero (output scaling is kept)."""
        for k in self.params:
            if k not in ("y_shift", "y_scale"):
                self.params[k][...] = 0.0
        return self

    def header(self) -> dict:
        return {"kind": self.kind, "a": self.a, "b": self.b, "layers": self.layers,
                "hidden": self.hidden, "edge_hidden": self.edge_hidden, "markers": self.markers,
                "time_dim": self.time_dim, "out_dim": self.out_dim, "seed": self.seed}


def _init_params(m: MpnnModel) -> dict:
    rng = np.random.default_rng(m.seed)

    def lin(fan_in, fan_out):
        s = 1.0 / math.sqrt(fan_in)
        return rng.uniform(-s, s, size=(fan_in, fan_out))

    H, H2 = m.hidden, m.edge_hidden
    p = {"W_in": lin(m.n_inputs, H), "b_in": np.zeros(H)}
    for l in range(m.layers):
        p[f"Ws{l}"] = lin(H, H)
        p[f"Wm{l}"] = lin(H, H)
        p[f"b{l}"] = np.zeros(H)
    if m.kind == "denoiser":
        p.update(W_nv=lin(H, m.a), b_nv=np.zeros(m.a),
                 W_es=lin(H, H2), W_ep=lin(H, H2), W_ee=lin(m.b, H2), b_e=np.zeros(H2),
                 W_eo=lin(H2, m.b), b_eo=np.zeros(m.b))
    else:
        p.update(W_r1=lin(H, H), b_r1=np.zeros(H), W_r2=lin(H, m.out_dim),
                 b_r2=np.zeros(m.out_dim), y_shift=np.zeros(1), y_scale=np.ones(1))
    return p


def param_names(m: MpnnModel) -> list[str]:
    return [k for k in m.params if k not in ("y_shift", "y_scale")]


# -- encoding -----------------------------------------------------------------------

def time_embedding(t: np.ndarray | float, dim: int) -> np.ndarray:
    """Sinusoidal embedding of integer steps, shape ``(..., dim)``."""
    t = np.asarray(t, dtype=float)[..., None]
    half = dim // 2
    freq = np.exp(-math.log(1000.0) * np.arange(half) / max(half, 1))
    return np.concatenate([np.sin(t * freq), np.cos(t * freq)], axis=-1)


def encode(g: Graph | GraphDistribution) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(g, Graph):
        return np.eye(g.a)[g.node_class], np.eye(g.b)[g.edge_class]
    return np.array(g.node_probs), np.array(g.edge_probs)


def extra_features(m: MpnnModel, n: int, markers=None, t=None) -> np.ndarray:
    """Extra node channels: ``markers`` is a list of node-index lists, one per channel."""
    cols = []
    if m.markers:
        mk = np.zeros((n, m.markers))
        if markers is not None:
            if len(markers) != m.markers:
                raise InputError(f"model expects {m.markers} marker channels")
            for c, nodes in enumerate(markers):
                mk[list(nodes), c] = 1.0
        cols.append(mk)
    if m.time_dim:
        if t is None:
            raise InputError("denoiser needs a timestep")
        cols.append(np.broadcast_to(time_embedding(t, m.time_dim), (n, m.time_dim)))
    return np.concatenate(cols, axis=-1) if cols else np.zeros((n, 0))


# -- forward / backward -------------------------------------------------------------

def _check(x, what, layer=None):
    if not np.all(np.isfinite(x)):
        raise NumericError(f"non-finite {what}", layer=layer)


def forward_batch(m: MpnnModel, X: np.ndarray, E: np.ndarray, F: np.ndarray):
    """Batched forward pass.  Shapes: ``X (B,n,a)``, ``E (B,n,n,b)``, ``F (B,n,f)``.

    Returns ``(outputs, cache)``; outputs is ``(B, out_dim)`` for predictors and
    ``(node_logits, edge_logits)`` for the denoiser.
    """
    p = m.params
    B, n, a = X.shape
    if a != m.a or E.shape != (B, n, n, m.b) or F.shape[:2] != (B, n) or \
            a + F.shape[2] + 2 != m.n_inputs:
        raise DimensionError(f"input shapes {X.shape}, {E.shape}, {F.shape} do not match the model")
    c = 1.0 / math.sqrt(n)
    offdiag = 1.0 - np.eye(n)
    A = (1.0 - E[..., 0]) * offdiag
    A2 = A @ A
    deg = A.sum(-1)
    tri = 0.5 * (A2 * A).sum(-1)
    U0 = np.concatenate([X, F, (deg / math.sqrt(n))[..., None], (tri / n)[..., None]], axis=-1)
    h = np.tanh(U0 @ p["W_in"] + p["b_in"])
    _check(h, "activation", 0)
    hs, Ps, Ts = [h], [], []
    for l in range(m.layers):
        P = h @ p[f"Wm{l}"]
        T = np.tanh(h @ p[f"Ws{l}"] + c * (A @ P) + p[f"b{l}"])
        h = h + T
        _check(h, "activation", l + 1)
        Ps.append(P)
        Ts.append(T)
        hs.append(h)
    cache = dict(X=X, E=E, A=A, A2=A2, U0=U0, hs=hs, Ps=Ps, Ts=Ts, c=c, n=n)
    if m.kind == "denoiser":
        node_logits = h @ p["W_nv"] + p["b_nv"]
        S = h @ p["W_es"]
        Pq = h @ p["W_ep"]
        pre = S[:, :, None, :] + S[:, None, :, :] + Pq[:, :, None, :] * Pq[:, None, :, :] \
            + E @ p["W_ee"] + p["b_e"]
        Qe = np.tanh(pre)
        edge_logits = Qe @ p["W_eo"] + p["b_eo"]
        _check(edge_logits, "edge logits", m.layers + 1)
        cache.update(S=S, Pq=Pq, Qe=Qe)
        return (node_logits, edge_logits), cache
    pool = h.mean(1)
    r = np.tanh(pool @ p["W_r1"] + p["b_r1"])
    y = r @ p["W_r2"] + p["b_r2"]
    _check(y, "output", m.layers + 1)
    cache.update(pool=pool, r=r)
    return p["y_shift"] + p["y_scale"] * y, cache


def backward_batch(m: MpnnModel, cache: dict, d_out, want_inputs: bool = False):
    """Reverse pass.  ``d_out`` matches the forward outputs.

    Returns ``(param_grads, dX, dE)``; ``dX``/``dE`` are derivatives with respect to
    the independent entries of ``X`` and ``E`` (``None`` unless ``want_inputs``).
    """
    p = m.params
    g = {}
    hs, Ps, Ts, A, c, n = cache["hs"], cache["Ps"], cache["Ts"], cache["A"], cache["c"], cache["n"]
    h = hs[-1]
    dE = np.zeros_like(cache["E"]) if want_inputs else None
    if m.kind == "denoiser":
        d_node, d_edge = d_out
        g["W_nv"] = np.einsum("bnh,bna->ha", h, d_node)
        g["b_nv"] = d_node.sum((0, 1))
        dh = d_node @ p["W_nv"].T
        Qe, Pq = cache["Qe"], cache["Pq"]
        g["W_eo"] = np.einsum("bijk,bijc->kc", Qe, d_edge)
        g["b_eo"] = d_edge.sum((0, 1, 2))
        dpre = (d_edge @ p["W_eo"].T) * (1.0 - Qe ** 2)
        g["b_e"] = dpre.sum((0, 1, 2))
        g["W_ee"] = np.einsum("bijc,bijk->ck", cache["E"], dpre)
        if want_inputs:
            dE += dpre @ p["W_ee"].T
        D = dpre + dpre.transpose(0, 2, 1, 3)
        dS = D.sum(2)
        dPq = np.einsum("bijk,bjk->bik", D, Pq)
        g["W_es"] = np.einsum("bnh,bnk->hk", h, dS)
        g["W_ep"] = np.einsum("bnh,bnk->hk", h, dPq)
        dh = dh + dS @ p["W_es"].T + dPq @ p["W_ep"].T
    else:
        dy = d_out * p["y_scale"]
        r = cache["r"]
        g["W_r2"] = r.T @ dy
        g["b_r2"] = dy.sum(0)
        dpr = (dy @ p["W_r2"].T) * (1.0 - r ** 2)
        g["W_r1"] = cache["pool"].T @ dpr
        g["b_r1"] = dpr.sum(0)
        dh = np.broadcast_to((dpr @ p["W_r1"].T)[:, None, :] / n, h.shape).copy()

    dA = np.zeros_like(A)
    for l in reversed(range(m.layers)):
        hl, P, T = hs[l], Ps[l], Ts[l]
        dZ = dh * (1.0 - T ** 2)
        g[f"b{l}"] = dZ.sum((0, 1))
        g[f"Ws{l}"] = np.einsum("bnh,bnk->hk", hl, dZ)
        dP = c * (A.transpose(0, 2, 1) @ dZ)
        g[f"Wm{l}"] = np.einsum("bnh,bnk->hk", hl, dP)
        dA += c * (dZ @ P.transpose(0, 2, 1))
        dh = dh + dZ @ p[f"Ws{l}"].T + dP @ p[f"Wm{l}"].T
        _check(dh, "gradient", l)

    h0 = hs[0]
    dpre0 = dh * (1.0 - h0 ** 2)
    g["W_in"] = np.einsum("bnf,bnh->fh", cache["U0"], dpre0)
    g["b_in"] = dpre0.sum((0, 1))
    dX = None
    if want_inputs:
        dU0 = dpre0 @ p["W_in"].T
        dX = dU0[..., :m.a]
        ddeg = dU0[..., -2] / math.sqrt(n)
        dtri = dU0[..., -1] / n
        A2 = cache["A2"]
        dA += ddeg[..., :, None]
        dA += 0.5 * (2.0 * dtri[..., :, None] * A2 + (A * dtri[:, None, :]) @ A)
        offdiag = 1.0 - np.eye(n)
        dE[..., 0] -= dA * offdiag
    return g, dX, dE


# -- single-graph API ---------------------------------------------------------------

def _single(m, g, markers, t):
    X, E = encode(g)
    F = extra_features(m, X.shape[0], markers=markers, t=t)
    return X[None], E[None], F[None]


def forward(m: MpnnModel, g: Graph | GraphDistribution, markers=None, t=None):
    """Scalar prediction (regressor), class probabilities (classifier) or a
    :class:`GraphDistribution` over clean classes (denoiser)."""
    if isinstance(g, Graph) and g.active_mask.sum() < 1 and m.kind != "denoiser":
        raise InputError("graph has no active nodes")
    out, _ = forward_batch(m, *_single(m, g, markers, t))
    if m.kind == "regressor":
        return float(out[0, 0])
    if m.kind == "classifier":
        return softmax(out[0])
    node_logits, edge_logits = out
    return GraphDistribution(softmax(node_logits[0]), symmetric_softmax(edge_logits[0]))


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(-1, keepdims=True)


def symmetric_softmax(edge_logits: np.ndarray) -> np.ndarray:
    """Pair distributions from the upper triangle, mirrored; diagonal is class 0."""
    n, _, b = edge_logits.shape
    probs = softmax(edge_logits)
    iu = np.triu_indices(n, 1)
    out = np.zeros_like(probs)
    out[iu] = probs[iu]
    out[(iu[1], iu[0])] = probs[iu]
    out[np.arange(n), np.arange(n)] = np.eye(b)[0]
    return out


@dataclass(frozen=True, eq=False)
class GradientField:
    """Loss derivatives with respect to the relaxed graph encoding.

    ``node_grad[v, c]`` is the derivative for node ``v``'s class-``c`` entry and
    ``edge_grad[i, j, c]`` the derivative for the pair variable shared by ``(i, j)``
    and ``(j, i)``; it is symmetric with a zero diagonal.
    """

    node_grad: np.ndarray
    edge_grad: np.ndarray

    def presence(self) -> np.ndarray:
        """Derivative with respect to edge presence ``1 - E[..., 0]``."""
        return -self.edge_grad[..., 0]

    def removal_scores(self, g: Graph) -> tuple[np.ndarray, np.ndarray]:
        """First-order loss decrease from removing each node / pair of ``g``.

        For a pair with class ``c`` it is ``dL/dE_c - dL/dE_0``; for a node with
        class ``c`` it is ``dL/dX_c - dL/dX_inactive`` (incident edges are removed
        by the filtration before their node).
        """
        ec = g.edge_class
        own = np.take_along_axis(self.edge_grad, ec[..., None], -1)[..., 0]
        # absent pairs fall back to the presence derivative
        pair = np.where(ec != 0, own - self.edge_grad[..., 0], self.presence())
        if g.inactive_class is None:
            node = np.zeros(g.n)
        else:
            idx = np.arange(g.n)
            node = self.node_grad[idx, g.node_class] - self.node_grad[idx, g.inactive_class]
        return node, pair


def _to_field(dX: np.ndarray, dE: np.ndarray) -> GradientField:
    dE = dE + dE.transpose(1, 0, 2)
    n = dE.shape[0]
    dE[np.arange(n), np.arange(n)] = 0.0
    return GradientField(dX.copy(), dE)


def _loss_grad(m: MpnnModel, out: np.ndarray, y):
    if m.kind == "regressor":
        diff = out - np.asarray(y, dtype=float).reshape(out.shape)
        return float((diff ** 2).mean()), 2.0 * diff / diff.size
    if m.kind == "classifier":
        prob = softmax(out)
        labels = np.asarray(y, dtype=np.int64).reshape(-1)
        B = out.shape[0]
        loss = float(-np.log(prob[np.arange(B), labels] + 1e-300).mean())
        d = prob.copy()
        d[np.arange(B), labels] -= 1.0
        return loss, d / B
    raise ConfigError("loss gradient is defined for predictor models only")


def loss(m: MpnnModel, g, y, markers=None, t=None) -> float:
    out, _ = forward_batch(m, *_single(m, g, markers, t))
    return _loss_grad(m, out, y)[0]


def grad_wrt_graph(m: MpnnModel, g: Graph | GraphDistribution, y, markers=None, t=None) -> GradientField:
    """Exact gradient of the prediction loss (squared error or cross-entropy)."""
    out, cache = forward_batch(m, *_single(m, g, markers, t))
    _, d_out = _loss_grad(m, out, y)
    _, dX, dE = backward_batch(m, cache, d_out, want_inputs=True)
    return _to_field(dX[0], dE[0])


# -- training -----------------------------------------------------------------------

def _sgd_step(m: MpnnModel, grads: dict, lr: float) -> None:
    norm = math.sqrt(sum(float((v ** 2).sum()) for v in grads.values()))
    if not math.isfinite(norm):
        raise TrainingError("non-finite gradient norm")
    scale = lr * min(1.0, CLIP_NORM / norm) if norm > 0 else lr
    for k, v in grads.items():
        m.params[k] -= scale * v


@dataclass
class TrainResult:
    model: MpnnModel
    losses: list  # per-epoch mean training loss; losses[0] is the pre-training loss


def _stack_predictor_inputs(m, graphs, markers):
    X = np.stack([encode(g)[0] for g in graphs])
    E = np.stack([encode(g)[1] for g in graphs])
    n = X.shape[1]
    F = np.stack([extra_features(m, n, markers=None if markers is None else markers[i])
                  for i in range(len(graphs))])
    return X, E, F


def train_regressor(dataset, cfg: TrainConfig, model: MpnnModel | None = None, markers=None,
                    classes: int | None = None, **model_kw) -> TrainResult:
    """Fit a graph-level predictor on ``(Graph, y)`` pairs with clipped SGD.

    ``markers`` gives optional per-example marker channels (e.g. path endpoints).
    With ``cfg.loss == "cross-entropy"`` a classifier over ``classes`` labels is
    trained instead.
    """
    dataset = list(dataset)
    if not dataset:
        raise InputError("empty training set")
    graphs = [d[0] for d in dataset]
    ys = np.array([d[1] for d in dataset], dtype=float)
    g0 = graphs[0]
    if model is None:
        if cfg.loss == "cross-entropy":
            kind, out_dim = "classifier", int(classes or ys.max() + 1)
        else:
            kind, out_dim = "regressor", 1
        model = MpnnModel(kind, g0.a, g0.b, out_dim=out_dim, seed=cfg.seed,
                          markers=len(markers[0]) if markers is not None else 0, **model_kw)
        if kind == "regressor":
            model.params["y_shift"][:] = ys.mean()
            model.params["y_scale"][:] = ys.std() if ys.std() > 0 else 1.0
    X, E, F = _stack_predictor_inputs(model, graphs, markers)
    rng = np.random.default_rng(cfg.seed)
    N = len(graphs)

    def full_loss():
        out, _ = forward_batch(model, X, E, F)
        return _loss_grad(model, out, ys)[0]

    losses = [full_loss()]
    for _ in range(cfg.epochs):
        perm = rng.permutation(N)
        for s in range(0, N, cfg.batch_size):
            idx = perm[s:s + cfg.batch_size]
            out, cache = forward_batch(model, X[idx], E[idx], F[idx])
            _, d_out = _loss_grad(model, out, ys[idx])
            grads, _, _ = backward_batch(model, cache, d_out)
            _sgd_step(model, grads, cfg.lr)
        cur = full_loss()
        if not math.isfinite(cur):
            raise TrainingError("training loss diverged")
        losses.append(cur)
    return TrainResult(model, losses)


def denoiser_loss_grad(m: MpnnModel, node_logits, edge_logits, X0, E0, edge_weight):
    """Cross-entropy on node classes plus weighted cross-entropy on upper-triangle pairs."""
    B, n, _ = node_logits.shape
    pn = softmax(node_logits)
    node_loss = -(X0 * np.log(pn + 1e-300)).sum(-1).mean()
    d_node = (pn - X0) / (B * n)
    iu = np.triu_indices(n, 1)
    mask = np.zeros((n, n))
    mask[iu] = 1.0
    npairs = max(len(iu[0]), 1)
    pe = softmax(edge_logits)
    edge_loss = -((E0 * np.log(pe + 1e-300)).sum(-1) * mask).sum() / (B * npairs)
    d_edge = (pe - E0) * mask[None, :, :, None] * (edge_weight / (B * npairs))
    return float(node_loss + edge_weight * edge_loss), (d_node, d_edge)


def noisy_batch(graphs_X0, graphs_E0, ts, schedule, rng):
    """Noise one-hot clean batches to per-example steps ``ts`` (symmetric pairs)."""
    B, n, a = graphs_X0.shape
    b = graphs_E0.shape[-1]
    pv = np.einsum("bna,bac->bnc", graphs_X0, schedule.qbar_v[ts])
    pe = np.einsum("bija,bac->bijc", graphs_E0, schedule.qbar_e[ts])
    Xt = np.eye(a)[_categorical(pv, rng)]
    iu = np.triu_indices(n, 1)
    cls = _categorical(pe[:, iu[0], iu[1]], rng)
    ec = np.zeros((B, n, n), dtype=np.int64)
    ec[:, iu[0], iu[1]] = cls
    ec[:, iu[1], iu[0]] = cls
    return Xt, np.eye(b)[ec]


def _categorical(p, rng):
    cdf = np.cumsum(p, -1)
    cdf[..., -1] = 1.0
    u = rng.random(p.shape[:-1])
    return (u[..., None] > cdf).sum(-1)


def train_denoiser(dataset, schedule, cfg: TrainConfig, model: MpnnModel | None = None,
                   **model_kw) -> TrainResult:
    """Train to predict clean node/edge classes from ``(G_t, t)`` with ``t ~ U{1..T}``.

    Each epoch's loss is evaluated on a fixed noised copy of the data, so the curve
    is comparable across epochs.
    """
    graphs = list(dataset)
    if not graphs:
        raise InputError("empty training set")
    g0 = graphs[0]
    if any((g.n, g.a, g.b) != (g0.n, g0.a, g0.b) for g in graphs):
        raise DimensionError("training graphs must share n, a and b")
    if (schedule.a, schedule.b) != (g0.a, g0.b):
        raise DimensionError("schedule class counts do not match the data")
    if model is None:
        model_kw.setdefault("time_dim", 16)
        model = MpnnModel("denoiser", g0.a, g0.b, seed=cfg.seed, **model_kw)
    X0 = np.stack([encode(g)[0] for g in graphs])
    E0 = np.stack([encode(g)[1] for g in graphs])
    N, n = X0.shape[:2]
    T = schedule.T
    rng = np.random.default_rng(cfg.seed)
    eval_rng = np.random.default_rng([cfg.seed, 1])
    eval_t = eval_rng.integers(1, T + 1, size=N)
    eval_X, eval_E = noisy_batch(X0, E0, eval_t, schedule, eval_rng)
    eval_F = time_embedding(eval_t, model.time_dim)[:, None, :].repeat(n, 1)

    def eval_loss():
        total = 0.0
        for s in range(0, N, cfg.batch_size):
            sl = slice(s, s + cfg.batch_size)
            (nl, el), _ = forward_batch(model, eval_X[sl], eval_E[sl], eval_F[sl])
            total += denoiser_loss_grad(model, nl, el, X0[sl], E0[sl], cfg.edge_weight)[0] * len(eval_t[sl])
        return total / N

    losses = [eval_loss()]
    for _ in range(cfg.epochs):
        perm = rng.permutation(N)
        for s in range(0, N, cfg.batch_size):
            idx = perm[s:s + cfg.batch_size]
            ts = rng.integers(1, T + 1, size=len(idx))
            Xt, Et = noisy_batch(X0[idx], E0[idx], ts, schedule, rng)
            F = time_embedding(ts, model.time_dim)[:, None, :].repeat(n, 1)
            (nl, el), cache = forward_batch(model, Xt, Et, F)
            _, d_out = denoiser_loss_grad(model, nl, el, X0[idx], E0[idx], cfg.edge_weight)
            grads, _, _ = backward_batch(model, cache, d_out)
            _sgd_step(model, grads, cfg.lr)
        cur = eval_loss()
        if not math.isfinite(cur):
            raise TrainingError("training loss diverged")
        losses.append(cur)
    return TrainResult(model, losses)


# -- serialization helpers ----------------------------------------------------------

def model_to_dict(m: MpnnModel) -> dict:
    return {"header": m.header(),
            "weights": {k: {"shape": list(v.shape), "data": v.reshape(-1).tolist()}
                        for k, v in m.params.items()}}


def model_from_dict(d: dict) -> MpnnModel:
    h = d["header"]
    params = {k: np.array(w["data"], dtype=float).reshape(w["shape"]) for k, w in d["weights"].items()}
    return MpnnModel(h["kind"], h["a"], h["b"], h["layers"], h["hidden"], h["edge_hidden"],
                     h["markers"], h["time_dim"], h["out_dim"], h["seed"], params)
