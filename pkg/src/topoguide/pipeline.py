"""Training and experiment orchestration shared by the CLI and the test suite."""
from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import diffusion, guidance, neural, properties
from .errors import ConfigError, DegenerateInputError, UndefinedStatisticError
from .graph import Graph
from .properties import KINDS, PATH_KIND

DEFAULT_NOISE_LEVELS = (0.05, 0.15, 0.3)


def component_seed(seed: int, name: str) -> int:
    """Deterministic 32-bit seed for one named component of a run."""
    return int(np.random.SeedSequence([seed, zlib.crc32(name.encode())]).generate_state(1)[0])


def split_seed(seed: int, names: Sequence[str]) -> dict[str, np.random.Generator]:
    """One independent generator per component name, derived from a single seed."""
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {name: np.random.default_rng(s) for name, s in zip(names, children)}


def _label(g: Graph, kind: str) -> float | None:
    try:
        return properties.property_value(g, kind)
    except (UndefinedStatisticError, DegenerateInputError):
        return None


def _path_examples(g: Graph, rng, per_distance: int, max_distance: int):
    act = g.active_nodes()
    D = np.array([properties.bfs_distances(g, s) for s in range(g.n)])
    sub = np.zeros_like(D, dtype=bool)
    sub[np.ix_(act, act)] = True
    out = []
    for d in range(1, max_distance + 1):
        idx = np.argwhere(np.triu((D == d) & sub, 1))
        if len(idx):
            for s, t in idx[rng.choice(len(idx), min(per_distance, len(idx)), replace=False)]:
                out.append((g, float(d), [[int(s)], [int(t)]]))
    return out


def predictor_data(graphs: Sequence[Graph], kind: str, schedule: diffusion.NoiseSchedule,
                   rng: np.random.Generator, noise_levels=DEFAULT_NOISE_LEVELS,
                   per_distance: int = 1, max_distance: int = 7):
    """Labelled examples on clean and forward-noised graphs.

    Noise levels are fractions of ``T``.  Path examples are drawn stratified by
    hop distance and carry endpoint markers; unreachable pairs and undefined
    statistics are skipped.  Returns ``(examples, markers or None)``.
    """
    if kind not in KINDS:
        raise ConfigError(f"unknown property {kind!r}; expected one of {KINDS}")
    views = []
    for g in graphs:
        views.append(g)
        for f in noise_levels:
            t = max(1, int(round(f * schedule.T)))
            views.append(diffusion.forward_noise(g, t, schedule, rng))
    if kind == PATH_KIND:
        rows = [r for g in views for r in _path_examples(g, rng, per_distance, max_distance)]
        return [(g, y) for g, y, _ in rows], [m for _, _, m in rows]
    data = [(g, y) for g in views if (y := _label(g, kind)) is not None]
    return data, None


def train_predictor(graphs, kind: str, schedule, cfg: neural.TrainConfig, rng,
                    noise_levels=DEFAULT_NOISE_LEVELS, per_distance: int = 1,
                    **model_kw) -> neural.TrainResult:
    data, markers = predictor_data(graphs, kind, schedule, rng, noise_levels, per_distance)
    if not data:
        raise ConfigError(f"property {kind!r} is undefined on every training graph")
    return neural.train_regressor(data, cfg, markers=markers, **model_kw)


def predictor_mae(model, graphs, kind: str, rng=None) -> float:
    """Mean absolute prediction error on clean graphs."""
    if kind == PATH_KIND:
        rng = np.random.default_rng(0) if rng is None else rng
        rows = [r for g in graphs for r in _path_examples(g, rng, 1, 7)]
        errs = [abs(neural.forward(model, g, markers=m) - y) for g, y, m in rows]
    else:
        errs = [abs(neural.forward(model, g) - y) for g in graphs
                if (y := _label(g, kind)) is not None]
    return float(np.mean(errs))


@dataclass
class SampleRun:
    graphs: list
    records: list  # per-sample lists of guidance step records


def generate(denoiser, phi_models: Mapping, schedule, targets, cfg: guidance.GuidanceConfig,
             seed: int, num_samples: int, n: int, starts: Sequence[Graph] | None = None,
             t_start: int | None = None) -> SampleRun:
    """``num_samples`` trajectories with per-sample seeds ``(seed, i)``.

    ``targets`` is one target list shared by all samples or one list per sample.
    ``starts`` optionally gives clean graphs to forward-noise to ``t_start`` and
    edit.
    """
    per_sample = bool(targets) and isinstance(targets[0], (list, tuple))
    graphs, records = [], []
    for i in range(num_samples):
        rng = np.random.default_rng([seed, i])
        tg = list(targets[i]) if per_sample else list(targets)
        start = None
        if starts is not None:
            start = diffusion.forward_noise(starts[i], t_start, schedule, rng)
        rec = []
        g = guidance.conditioned_sample(denoiser, phi_models, schedule, tg, cfg, rng, n,
                                        record=rec, start=start, t_start=t_start)
        graphs.append(g)
        records.append(rec)
    return SampleRun(graphs, records)


def evaluation_rows(run: str, samples: Sequence[Graph], reference: Sequence[Graph] | None,
                    targets=None, originals: Sequence[Graph] | None = None,
                    statistics=("degree", "clustering", "orbit")) -> list[tuple]:
    """Metric rows ``(run, metric, statistic, value)``.

    Generation quality is MMD per statistic against ``reference``.  For each
    target kind the conditioning MAE is reported; path targets add KL and, when
    ``originals`` are given, the overlap rate.
    """
    rows = []
    if reference:
        for stat in statistics:
            rows.append((run, "mmd", stat, properties.mmd(samples, reference, stat)))
    if targets:
        per_sample = isinstance(targets[0], (list, tuple))
        lists = [list(t) for t in targets] if per_sample else [list(targets)] * len(samples)
        kinds = sorted({t.kind for tl in lists for t in tl})
        for kind in kinds:
            tk = [next(t for t in tl if t.kind == kind) for tl in lists]
            try:
                rows.append((run, "mae", kind, properties.condition_mae(samples, tk)))
            except UndefinedStatisticError:
                rows.append((run, "mae", kind, math.nan))
            if kind == PATH_KIND:
                rows.append((run, "kl", kind, properties.path_kl(samples, tk)))
                if originals is not None:
                    ol = [properties.overlap_rate(g, o, t.pairs)
                          for g, o, t in zip(samples, originals, tk)]
                    rows.append((run, "ol", kind, float(np.mean(ol))))
    return rows


ABLATION_HEADER = ("t_homo", "ph_timing", "proposal", "samples", "mae", "mean_selected",
                   "rejected_rate")


def ablate(denoiser, phi_models, schedule, targets, base: guidance.GuidanceConfig,
           t_homos, ph_timings, proposals, seed: int, num_samples: int, n: int) -> list[tuple]:
    """Run the full ``t_homo x ph_timing x proposal`` grid; one row per cell."""
    rows = []
    for th in t_homos:
        for pt in ph_timings:
            for prop in proposals:
                cfg = guidance.GuidanceConfig(t_homo=th, ph_timing=pt, epsilon=base.epsilon,
                                              selection=base.selection,
                                              apply_every=base.apply_every, proposal=prop,
                                              scheme=base.scheme)
                res = generate(denoiser, phi_models, schedule, targets, cfg, seed, num_samples, n)
                maes = [properties.condition_mae(res.graphs, t) for t in targets] if targets else []
                steps = [r for rec in res.records for r in rec]
                sel = float(np.mean([r["selected"] for r in steps])) if steps else 0.0
                rej = float(np.mean([r["all_rejected"] for r in steps])) if steps else 0.0
                rows.append((th, pt, prop, num_samples, float(np.mean(maes)) if maes else math.nan,
                             sel, rej))
    return rows
