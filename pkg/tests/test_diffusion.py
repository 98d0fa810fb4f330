import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from topoguide import diffusion as D
from topoguide import neural as N
from topoguide.errors import DimensionError, InputError
from topoguide.graph import Graph, GraphDistribution
from topoguide.properties import mmd

from conftest import random_graph


def tv(p, q):
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


# -- schedule ---------------------------------------------------------------------

@settings(max_examples=30, deadline=None)
@given(st.integers(1, 300), st.integers(2, 4), st.integers(2, 4))
def test_schedule_invariants(T, a, b):
    s = D.make_schedule(T, a, b)
    for q, qbar, lim in ((s.q_v, s.qbar_v, s.limit_v), (s.q_e, s.qbar_e, s.limit_e)):
        assert np.all(q >= 0) and np.allclose(q.sum(-1), 1, atol=1e-12)
        assert np.allclose(qbar.sum(-1), 1, atol=1e-9)
        for t in range(1, T + 1):
            assert np.abs(qbar[t] - qbar[t - 1] @ q[t]).max() <= 1e-12
        assert max(tv(row, lim) for row in qbar[T]) <= 0.01


def test_beta_zero_and_one():
    s = D.make_schedule(5, betas=np.zeros(5))
    assert np.array_equal(s.qbar_e[5], np.eye(2))
    s = D.make_schedule(3, betas=[1.0, 0.2, 0.1])
    assert np.allclose(s.qbar_e[1], 0.5)


def test_schedule_errors_and_serialization():
    with pytest.raises(InputError):
        D.make_schedule(0)
    with pytest.raises(InputError):
        D.make_schedule(2, betas=[0.5, 1.5])
    s = D.make_schedule(17, 3, 2)
    r = D.NoiseSchedule.from_dict(s.to_dict())
    assert r.T == 17 and np.array_equal(r.betas, s.betas) and np.array_equal(r.qbar_v, s.qbar_v)


# -- forward noising ---------------------------------------------------------------

def test_forward_identity_schedule_returns_input():
    g = random_graph(np.random.default_rng(0), 6)
    s = D.make_schedule(4, betas=np.zeros(4))
    assert D.forward_noise(g, 4, s, np.random.default_rng(1)) == g


def test_forward_limit_is_uniform():
    s = D.make_schedule(100)
    g = Graph.from_edges(2, [(0, 1)])
    rng = np.random.default_rng(0)
    cls = [D.forward_noise(g, 100, s, rng).pair_class[0] for _ in range(10000)]
    freq = np.bincount(cls, minlength=2) / len(cls)
    assert tv(freq, [0.5, 0.5]) < 0.05


def test_forward_seeded_and_range():
    s = D.make_schedule(50)
    g = random_graph(np.random.default_rng(0), 8)
    a = D.forward_noise(g, 20, s, np.random.default_rng(5))
    b = D.forward_noise(g, 20, s, np.random.default_rng(5))
    assert a == b and np.array_equal(a.edge_class, a.edge_class.T)
    with pytest.raises(InputError):
        D.forward_noise(g, 0, s, np.random.default_rng(0))
    with pytest.raises(InputError):
        D.forward_noise(g, 51, s, np.random.default_rng(0))
    with pytest.raises(DimensionError):
        D.forward_noise(Graph.empty(3, a=3), 1, s, np.random.default_rng(0))


def one_shot_vs_stepwise(trials=10000, T=40, t=25, seed=0):
    s = D.make_schedule(T, a=3, b=2)
    g = Graph.from_edges(1, [], a=3, b=2, node_class=[2])
    rng = np.random.default_rng(seed)
    shot = np.array([D.forward_noise(g, t, s, rng).node_class[0] for _ in range(trials)])
    step = []
    for _ in range(trials):
        h = g
        for k in range(1, t + 1):
            h = D.forward_step(h, k, s, rng)
        step.append(h.node_class[0])
    return tv(np.bincount(shot, minlength=3) / trials, np.bincount(step, minlength=3) / trials)


def test_one_shot_matches_stepwise():
    assert one_shot_vs_stepwise() < 0.05


# -- reverse posterior ---------------------------------------------------------------

def enumerate_posterior(s, t, x0, xt, K):
    """p(x_{t-1} | x_t, x_0) by summing complete forward paths x_0 .. x_t."""
    q = s.q_v
    post = np.zeros(K)
    for path in itertools.product(range(K), repeat=t):  # x_1 .. x_t
        if path[-1] != xt:
            continue
        p = 1.0
        prev = x0
        for k, x in enumerate(path, start=1):
            p *= q[k][prev, x]
            prev = x
        post[path[-2] if t > 1 else x0] += p
    return post / post.sum()


def oracle_posterior_tv(draws=10000, T=6, t=4, x0=1, xt=0, seed=0):
    s = D.make_schedule(T, a=2, b=2)
    g = Graph.from_edges(1, [], node_class=[xt])
    truth = np.eye(2)[[x0]]
    p0 = GraphDistribution(truth, np.array([[[1.0, 0.0]]]))
    rng = np.random.default_rng(seed)
    cls = [D.reverse_step(g, t, lambda *_: p0, s, rng, mask=False).node_class[0]
           for _ in range(draws)]
    freq = np.bincount(cls, minlength=2) / draws
    exact = enumerate_posterior(s, t, x0, xt, 2)
    return tv(freq, exact), exact


def test_oracle_posterior_matches_enumeration():
    err, exact = oracle_posterior_tv()
    assert 0 < exact[0] < 1
    assert err < 0.02


@pytest.mark.parametrize("t", [1, 2, 3, 5])
def test_mixture_posterior_exact(t):
    # with p0 = the true p(x0 | x_t) under a prior, the posterior equals p(x_{t-1} | x_t)
    s = D.make_schedule(5, a=3, b=2)
    prior = np.array([0.5, 0.3, 0.2])
    for xt in range(3):
        p0 = prior * s.qbar_v[t][:, xt]
        p0 /= p0.sum()
        joint = np.zeros(3)
        for x0 in range(3):
            joint += p0[x0] * enumerate_posterior(s, t, x0, xt, 3)
        got = D.posterior_probs(np.array([xt]), p0[None], s.q_v[t], s.qbar_v[t - 1], s.qbar_v[t])[0]
        assert np.allclose(got, joint, atol=1e-12)


def test_last_step_samples_denoiser():
    s = D.make_schedule(10)
    g = random_graph(np.random.default_rng(0), 5)
    target = random_graph(np.random.default_rng(1), 5)
    p0 = GraphDistribution.one_hot(target)
    out = D.reverse_step(g, 1, lambda *_: p0, s, np.random.default_rng(0))
    assert out == target


def test_near_identity_reverse_step_agrees_with_argmax():
    s = D.make_schedule(1, betas=[0.01])
    rng = np.random.default_rng(0)
    gs = [random_graph(rng, 8, 0.3) for _ in range(30)]
    den = N.train_denoiser(gs, s, N.TrainConfig(lr=0.1, epochs=40, seed=0),
                           layers=2, hidden=16).model
    iu = np.triu_indices(8, 1)
    agree = []
    for g in gs:
        gt = D.forward_noise(g, 1, s, rng)
        want = N.forward(den, gt, t=1).argmax()
        out = D.reverse_step(gt, 1, den, s, rng, mask=False)
        agree.append(np.concatenate([out.node_class == want.node_class,
                                     out.edge_class[iu] == want.edge_class[iu]]).mean())
    assert np.mean(agree) > 0.95


def test_reverse_step_seeded_and_masked():
    s = D.make_schedule(20)
    den = N.MpnnModel("denoiser", 2, 2, layers=1, hidden=6, time_dim=4, seed=0)
    g = random_graph(np.random.default_rng(0), 6)
    a = D.reverse_step(g, 7, den, s, np.random.default_rng(3))
    b = D.reverse_step(g, 7, den, s, np.random.default_rng(3))
    assert a == b
    inactive = ~a.active_mask
    assert not a.adjacency[inactive].any()
    with pytest.raises(DimensionError):
        D.reverse_step(g, 7, N.MpnnModel("denoiser", 3, 2, layers=1, hidden=4, time_dim=4), s,
                       np.random.default_rng(0))


def test_mask_inactive():
    g = Graph.from_edges(3, [(0, 1), (1, 2)], node_class=[0, 0, 1])
    assert D.mask_inactive(g).edges() == [(0, 1, 1)]


def test_sample_unconditional_seeded():
    s = D.make_schedule(10)
    den = N.MpnnModel("denoiser", 2, 2, layers=1, hidden=6, time_dim=4, seed=0)
    a = D.sample_unconditional(den, s, 7, np.random.default_rng(9))
    b = D.sample_unconditional(den, s, 7, np.random.default_rng(9))
    assert a == b and a.n == 7
    with pytest.raises(InputError):
        D.reverse_chain(den, s, 7, np.random.default_rng(0), t_start=11)


def test_reverse_chain_from_start():
    s = D.make_schedule(8)
    target = random_graph(np.random.default_rng(2), 5)
    p0 = GraphDistribution.one_hot(target)
    seen = []
    out = D.reverse_chain(lambda *_: p0, s, 5, np.random.default_rng(0),
                          hook=lambda g, t: seen.append(t) or g,
                          start=random_graph(np.random.default_rng(3), 5), t_start=4)
    assert seen == [4, 3, 2, 1] and out == target


@pytest.mark.slow
def test_trained_backbone_beats_random_graphs():
    from topoguide.datasets import DatasetSpec, gen_community_small
    data = gen_community_small(DatasetSpec("community-small", 60, 12, 12, seed=0))
    s = D.make_schedule(50)
    res = N.train_denoiser(data, s, N.TrainConfig(lr=0.1, epochs=60, seed=0), layers=3, hidden=32)
    rng = np.random.default_rng(1)
    samples = [D.sample_unconditional(res.model, s, 12, rng) for _ in range(200)]
    rand = [random_graph(rng, 12, 0.5) for _ in range(200)]
    assert mmd(samples, data, "degree") < mmd(rand, data, "degree")
