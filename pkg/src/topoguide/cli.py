"""Command-line entry point: ``topoguide <verb> [flags]``.

Each verb reads an optional JSON config (``--config``); explicit flags override
config keys.  Every run writes ``manifest.json`` into ``--out`` with the resolved
config and seed, which is enough to replay it.

Exit codes: 0 success, 2 config or input error, 3 numeric or training failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, diffusion, guidance, io, neural, pipeline, properties
from .datasets import DatasetSpec, generate as generate_dataset
from .errors import (ConfigError, TopoguideError, DimensionError, FormatError, InputError,
                     NumericError, ValidationError)
from .properties import KINDS, PropertyTarget

log = logging.getLogger("topoguide")

DATASET_KINDS = ("community-small", "planar")
EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


# -- config -------------------------------------------------------------------------

def _read_json(path: str, what: str):
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"{what} not found: {p}")
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise ConfigError(f"{what} {p} is not valid JSON: {exc}") from None


def _parse_targets(value) -> list:
    if value is None:
        return []
    if isinstance(value, str):
        s = value.strip()
        value = json.loads(s) if s.startswith(("[", "{")) else _read_json(s, "targets file")
    if isinstance(value, dict):
        value = [value]
    try:
        return [PropertyTarget.from_json(d) for d in value]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed target list: {exc}") from None


def resolve_config(args) -> dict:
    cfg = _read_json(args.config, "config file") if args.config else {}
    if not isinstance(cfg, dict):
        raise ConfigError("config file must hold a JSON object")
    cfg = dict(cfg)
    cfg["seed"] = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    if args.dataset is not None:
        cfg["dataset"] = args.dataset
    if args.targets is not None:
        cfg["targets"] = args.targets
    g = dict(cfg.get("guidance", {}))
    for flag, key in (("t_homo", "t_homo"), ("ph_timing", "ph_timing"), ("proposal", "proposal"),
                      ("selection", "selection")):
        if getattr(args, flag) is not None:
            g[key] = getattr(args, flag)
    cfg["guidance"] = g
    for key in ("property", "samples", "reference", "model"):
        if getattr(args, key, None) is not None:
            cfg[key] = getattr(args, key)
    # targets are stored in their parsed JSON form so the manifest is self-contained
    cfg["targets"] = [t.to_json() for t in _parse_targets(cfg.get("targets"))]
    return cfg


def _targets(cfg) -> list[PropertyTarget]:
    return [PropertyTarget.from_json(d) for d in cfg.get("targets", [])]


def _guidance_cfg(cfg) -> guidance.GuidanceConfig:
    g = cfg.get("guidance", {})
    try:
        return guidance.GuidanceConfig(**g)
    except TypeError as exc:
        raise ConfigError(f"bad guidance config: {exc}") from None


def _train_cfg(cfg) -> neural.TrainConfig:
    keys = ("lr", "epochs", "batch_size", "edge_weight")
    kw = {k: cfg[k] for k in keys if k in cfg}
    return neural.TrainConfig(seed=pipeline.component_seed(cfg["seed"], "train"), **kw)


def _model_kw(cfg) -> dict:
    return {k: cfg[k] for k in ("layers", "hidden") if k in cfg}


def load_graphs(cfg, counters: dict | None = None):
    spec = cfg.get("dataset")
    if spec is None:
        raise ConfigError("no dataset given (use --dataset or the 'dataset' config key)")
    if isinstance(spec, dict):
        d = dict(spec)
        d.setdefault("seed", pipeline.component_seed(cfg["seed"], "dataset"))
        try:
            return generate_dataset(DatasetSpec(**d), counters)
        except TypeError as exc:
            raise ConfigError(f"bad dataset spec: {exc}") from None
    if spec in DATASET_KINDS:
        params = dict(cfg.get("dataset_params", {}))
        params.setdefault("seed", pipeline.component_seed(cfg["seed"], "dataset"))
        return generate_dataset(DatasetSpec(kind=spec, **params), counters)
    return io.load_dataset(spec)


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(out: Path, command: str, cfg: dict, **extra) -> None:
    m = {"command": command, "version": __version__, "seed": cfg["seed"], "config": cfg}
    m.update(extra)
    io.save_manifest(out / "manifest.json", m)


def _load_predictors(cfg) -> dict:
    paths = cfg.get("predictors", {})
    if not isinstance(paths, dict):
        raise ConfigError("'predictors' must map property names to model files")
    out = {}
    for kind, path in paths.items():
        if kind not in KINDS:
            raise ConfigError(f"unknown property {kind!r} in predictors")
        if not Path(path).exists():
            raise FileNotFoundError(f"predictor model not found: {path}")
        out[kind] = io.load_model(path)
    return out


def _load_denoiser(cfg):
    path = cfg.get("denoiser")
    if not path:
        raise ConfigError("no denoiser model given ('denoiser' config key)")
    if not Path(path).exists():
        raise FileNotFoundError(f"denoiser model not found: {path}")
    model, schedule, _ = io.load_model_bundle(path)
    if schedule is None:
        raise FormatError(f"{path} carries no noise schedule")
    return model, schedule


# -- verbs --------------------------------------------------------------------------

def cmd_train_diffusion(args, cfg) -> int:
    out = _out(args)
    counters: dict = {}
    graphs = load_graphs(cfg, counters)
    schedule = diffusion.make_schedule(int(cfg.get("T", diffusion.DEFAULT_T)), graphs[0].a, graphs[0].b)
    res = neural.train_denoiser(graphs, schedule, _train_cfg(cfg), **_model_kw(cfg))
    io.save_model(out / "denoiser.model", res.model, schedule, meta={"n": graphs[0].n})
    with open(out / "train_log.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(("epoch", "loss"))
        for epoch, value in enumerate(res.losses):
            w.writerow((epoch, repr(value)))
    _manifest(out, "train-diffusion", cfg, counters=counters, graphs=len(graphs),
              outputs=["denoiser.model", "train_log.csv"], final_loss=res.losses[-1])
    return EXIT_OK


def cmd_train_classifier(args, cfg) -> int:
    kind = cfg.get("property")
    if kind not in KINDS:
        raise ConfigError(f"unknown property {kind!r}; expected one of {KINDS}")
    out = _out(args)
    counters: dict = {}
    graphs = load_graphs(cfg, counters)
    rngs = pipeline.split_seed(cfg["seed"], ["data", "split"])
    perm = rngs["split"].permutation(len(graphs))
    n_held = max(1, len(graphs) // 10) if len(graphs) > 1 else 0
    held = [graphs[i] for i in perm[:n_held]]
    train = [graphs[i] for i in perm[n_held:]] or graphs
    schedule = diffusion.make_schedule(int(cfg.get("T", diffusion.DEFAULT_T)), graphs[0].a, graphs[0].b)
    levels = cfg.get("noise_levels", pipeline.DEFAULT_NOISE_LEVELS)
    res = pipeline.train_predictor(train, kind, schedule, _train_cfg(cfg), rngs["data"], levels,
                                   **_model_kw(cfg))
    held_mae = pipeline.predictor_mae(res.model, held, kind) if held else None
    io.save_model(out / f"{kind}.model", res.model, schedule, meta={"property": kind})
    _manifest(out, "train-classifier", cfg, counters=counters, property=kind,
              outputs=[f"{kind}.model"], final_loss=res.losses[-1], heldout_mae=held_mae)
    return EXIT_OK


def cmd_generate(args, cfg) -> int:
    out = _out(args)
    denoiser, schedule = _load_denoiser(cfg)
    phi = _load_predictors(cfg)
    targets = _targets(cfg)
    gcfg = _guidance_cfg(cfg)
    n = int(cfg.get("n", 16))
    num = int(cfg.get("num_samples", 10))
    run = pipeline.generate(denoiser, phi, schedule, targets, gcfg, cfg["seed"], num, n)
    io.save_dataset(out / "samples.txt", run.graphs)
    _manifest(out, "generate", cfg, outputs=["samples.txt"], guidance=gcfg.to_dict(),
              steps=[{"sample": i, "records": rec} for i, rec in enumerate(run.records)])
    return EXIT_OK


def cmd_evaluate(args, cfg) -> int:
    out = _out(args)
    spath = cfg.get("samples")
    if not spath:
        raise ConfigError("no samples given (--samples)")
    samples = io.load_dataset(spath)
    reference = None
    if cfg.get("reference"):
        reference = io.load_dataset(cfg["reference"])
    elif cfg.get("dataset"):
        reference = load_graphs(cfg)
    targets = _targets(cfg)
    originals = reference if reference is not None and len(reference) == len(samples) else None
    rows = pipeline.evaluation_rows(cfg.get("run", "eval"), samples, reference, targets, originals)
    properties.write_metrics_csv(out / "metrics.csv", rows)
    _manifest(out, "evaluate", cfg, outputs=["metrics.csv"], samples=len(samples))
    return EXIT_OK


def cmd_ablate(args, cfg) -> int:
    out = _out(args)
    denoiser, schedule = _load_denoiser(cfg)
    phi = _load_predictors(cfg)
    targets = _targets(cfg)
    base = _guidance_cfg(cfg)
    sweep = cfg.get("sweep", {})
    grid = dict(t_homo=sweep.get("t_homo", [1, 5, 10, 20]),
                ph_timing=sweep.get("ph_timing", [0.0, 0.2, 0.4, 0.6, 0.8]),
                proposal=sweep.get("proposal", list(guidance.PROPOSALS)))
    rows = pipeline.ablate(denoiser, phi, schedule, targets, base, grid["t_homo"], grid["ph_timing"],
                           grid["proposal"], cfg["seed"], int(cfg.get("num_samples", 4)),
                           int(cfg.get("n", 16)))
    with open(out / "ablation.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(pipeline.ABLATION_HEADER)
        for r in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in r])
    _manifest(out, "ablate", cfg, outputs=["ablation.csv"], grid=grid, cells=len(rows))
    return EXIT_OK


def cmd_diagnose(args, cfg) -> int:
    out = _out(args)
    path = cfg.get("model")
    if not path:
        raise ConfigError("no predictor model given (--model)")
    if not Path(path).exists():
        raise FileNotFoundError(f"model not found: {path}")
    model, schedule, meta = io.load_model_bundle(path)
    graphs = load_graphs(cfg)
    if schedule is None:
        schedule = diffusion.make_schedule(int(cfg.get("T", diffusion.DEFAULT_T)), graphs[0].a, graphs[0].b)
    kind = meta.get("property", cfg.get("property", "density"))
    if kind == properties.PATH_KIND:
        raise ConfigError("diagnose supports global-property predictors only")
    target = cfg.get("target")
    if target is None:
        vals = [v for g in graphs if (v := pipeline._label(g, kind)) is not None]
        target = float(np.mean(vals)) if vals else 0.0
    steps = cfg.get("steps") or sorted({0, schedule.T // 4, schedule.T // 2, schedule.T})
    rng = pipeline.split_seed(cfg["seed"], ["noise"])["noise"]
    hists = guidance.gradient_histograms(model, graphs, schedule, steps, float(target), rng,
                                         bins=int(cfg.get("bins", 20)))
    rows = []
    for t, counts, edges in hists:
        for c, lo, hi in zip(counts, edges[:-1], edges[1:]):
            rows.append(("diagnose", f"edge_grad_hist_t{t}", f"[{lo:.6g},{hi:.6g})", float(c)))
    properties.write_metrics_csv(out / "gradient_hist.csv", rows)
    _manifest(out, "diagnose", cfg, outputs=["gradient_hist.csv"], steps=list(map(int, steps)))
    return EXIT_OK


COMMANDS = {
    "train-diffusion": cmd_train_diffusion,
    "train-classifier": cmd_train_classifier,
    "generate": cmd_generate,
    "evaluate": cmd_evaluate,
    "ablate": cmd_ablate,
    "diagnose": cmd_diagnose,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int, help="run seed")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--dataset", help="dataset kind (community-small, planar) or file path")
    common.add_argument("--targets", help="targets as a JSON file or inline JSON list")
    common.add_argument("--t-homo", dest="t_homo", type=int)
    common.add_argument("--ph-timing", dest="ph_timing", type=float)
    common.add_argument("--proposal", choices=guidance.PROPOSALS)
    common.add_argument("--selection", choices=guidance.SELECTIONS)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="topoguide", description="Guided graph topology generation.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("train-diffusion", parents=[common], help="train the denoising backbone")
    tc = sub.add_parser("train-classifier", parents=[common], help="train a property predictor")
    tc.add_argument("--property")
    sub.add_parser("generate", parents=[common], help="sample graphs, optionally guided")
    ev = sub.add_parser("evaluate", parents=[common], help="compute metrics CSV")
    ev.add_argument("--samples")
    ev.add_argument("--reference")
    sub.add_parser("ablate", parents=[common], help="guidance hyperparameter grid")
    dg = sub.add_parser("diagnose", parents=[common], help="gradient histograms")
    dg.add_argument("--model")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](args, cfg)
    except FileNotFoundError as exc:
        msg = str(exc) if exc.filename is None else f"file not found: {exc.filename}"
        print(f"topoguide: error: {msg}", file=sys.stderr)
        return EXIT_INPUT
    except NumericError as exc:
        print(f"topoguide: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, InputError, FormatError, ValidationError, DimensionError,
            json.JSONDecodeError) as exc:
        print(f"topoguide: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except TopoguideError as exc:
        print(f"topoguide: failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
