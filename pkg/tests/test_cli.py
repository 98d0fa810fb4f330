import csv
import json

import numpy as np
import pytest

from topoguide import cli, io, properties
from topoguide.datasets import DatasetSpec, generate as generate_dataset
from topoguide.diffusion import make_schedule
from topoguide.neural import MpnnModel

SMALL = {"kind": "community-small", "count": 8, "n_min": 6, "n_max": 6}


def write_config(path, **cfg):
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return str(path)


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    """A tiny denoiser and clustering predictor trained through the CLI."""
    root = tmp_path_factory.mktemp("trained")
    cfg = write_config(root / "cfg.json", dataset=SMALL, T=10, epochs=3, layers=2, hidden=8)
    assert run("train-diffusion", "--config", cfg, "--seed", 1, "--out", root / "dn") == 0
    ccfg = write_config(root / "ccfg.json", dataset=SMALL, T=10, epochs=3, layers=2, hidden=8,
                        property="clustering")
    assert run("train-classifier", "--config", ccfg, "--seed", 1, "--out", root / "cl") == 0
    return root


def test_unknown_property_exits_2(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", dataset=SMALL, epochs=1)
    assert run("train-classifier", "--config", cfg, "--property", "girth", "--out", tmp_path) == 2
    assert "girth" in capsys.readouterr().err


def test_missing_dataset_file_exits_2_and_names_path(tmp_path, capsys):
    missing = tmp_path / "nope.txt"
    assert run("train-diffusion", "--dataset", missing, "--out", tmp_path / "o") == 2
    assert str(missing) in capsys.readouterr().err


def test_missing_config_exits_2(tmp_path, capsys):
    assert run("generate", "--config", tmp_path / "absent.json", "--out", tmp_path) == 2
    assert "absent.json" in capsys.readouterr().err


def test_malformed_targets_exit_2(tmp_path):
    assert run("evaluate", "--targets", '[{"kind": "density"}]', "--out", tmp_path) == 2


def test_numeric_failure_exits_3(tmp_path, capsys):
    m = MpnnModel("regressor", 2, 2, layers=2, hidden=4)
    m.params["W_in"][...] = np.nan
    io.save_model(tmp_path / "bad.model", m, make_schedule(10, 2, 2), meta={"property": "density"})
    cfg = write_config(tmp_path / "c.json", dataset=SMALL, model=str(tmp_path / "bad.model"))
    assert run("diagnose", "--config", cfg, "--out", tmp_path / "o") == 3
    assert "numeric" in capsys.readouterr().err


def test_train_diffusion_outputs(trained):
    m = io.load_manifest(trained / "dn" / "manifest.json")
    assert m["command"] == "train-diffusion" and m["seed"] == 1
    assert m["config"]["T"] == 10 and m["graphs"] == 8
    with open(trained / "dn" / "train_log.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["epoch", "loss"]
    epochs = [int(r[0]) for r in rows[1:]]
    assert epochs == list(range(4))  # row 0 is the loss before training
    model, schedule, _ = io.load_model_bundle(trained / "dn" / "denoiser.model")
    assert model.kind == "denoiser" and schedule.T == 10


def test_train_diffusion_reproducible(tmp_path):
    cfg = write_config(tmp_path / "c.json", dataset=SMALL, T=10, epochs=2, layers=1, hidden=4)
    for d in ("a", "b"):
        assert run("train-diffusion", "--config", cfg, "--seed", 4, "--out", tmp_path / d) == 0
    la = (tmp_path / "a" / "train_log.csv").read_text()
    lb = (tmp_path / "b" / "train_log.csv").read_text()
    assert la == lb


def test_train_classifier_manifest(trained):
    m = io.load_manifest(trained / "cl" / "manifest.json")
    assert m["property"] == "clustering"
    assert m["heldout_mae"] is not None and m["heldout_mae"] >= 0


def _gen_config(trained, tmp_path, **extra):
    cfg = dict(denoiser=str(trained / "dn" / "denoiser.model"), n=6, num_samples=3)
    cfg.update(extra)
    return write_config(tmp_path / "g.json", **cfg)


def test_generate_unconditioned(trained, tmp_path):
    cfg = _gen_config(trained, tmp_path)
    assert run("generate", "--config", cfg, "--seed", 2, "--out", tmp_path / "o") == 0
    graphs = io.load_dataset(tmp_path / "o" / "samples.txt")
    assert len(graphs) == 3 and all(g.n == 6 for g in graphs)
    m = io.load_manifest(tmp_path / "o" / "manifest.json")
    assert all(s["records"] == [] for s in m["steps"])


def test_generate_clustering_target_records_steps(trained, tmp_path):
    cfg = _gen_config(trained, tmp_path,
                      predictors={"clustering": str(trained / "cl" / "clustering.model")},
                      targets=[{"kind": "clustering", "value": 0.5, "epsilon": 0.2}])
    assert run("generate", "--config", cfg, "--seed", 2, "--t-homo", 3, "--ph-timing", 0.5,
               "--out", tmp_path / "o") == 0
    m = io.load_manifest(tmp_path / "o" / "manifest.json")
    assert m["guidance"]["t_homo"] == 3 and m["guidance"]["ph_timing"] == 0.5
    recs = [r for s in m["steps"] for r in s["records"]]
    assert recs and all(0 <= r["selected"] <= 3 for r in recs)
    assert (tmp_path / "o" / "samples.txt").exists()


def test_generate_is_seed_deterministic(trained, tmp_path):
    cfg = _gen_config(trained, tmp_path,
                      predictors={"clustering": str(trained / "cl" / "clustering.model")},
                      targets=[{"kind": "clustering", "value": 0.5}])
    for d in ("a", "b"):
        assert run("generate", "--config", cfg, "--seed", 9, "--out", tmp_path / d) == 0
    assert (tmp_path / "a" / "samples.txt").read_text() == (tmp_path / "b" / "samples.txt").read_text()


def test_generate_path_target(trained, tmp_path):
    spec = DatasetSpec(**SMALL, seed=0)
    graphs = generate_dataset(spec)
    sched = make_schedule(10, 2, 2)
    from topoguide import neural, pipeline
    res = pipeline.train_predictor(graphs, properties.PATH_KIND, sched,
                                   neural.TrainConfig(epochs=2), np.random.default_rng(0),
                                   layers=2, hidden=8)
    io.save_model(tmp_path / "path.model", res.model, sched)
    cfg = _gen_config(trained, tmp_path,
                      predictors={properties.PATH_KIND: str(tmp_path / "path.model")},
                      targets=[{"kind": properties.PATH_KIND, "value": [[0, 5, 2]]}])
    assert run("generate", "--config", cfg, "--ph-timing", 0.5, "--out", tmp_path / "o") == 0
    assert len(io.load_dataset(tmp_path / "o" / "samples.txt")) == 3


def test_generate_unknown_predictor_kind_exits_2(trained, tmp_path):
    cfg = _gen_config(trained, tmp_path, predictors={"girth": "x.model"})
    assert run("generate", "--config", cfg, "--out", tmp_path / "o") == 2


def test_evaluate_header_and_identical_samples(tmp_path):
    graphs = generate_dataset(DatasetSpec(**SMALL, seed=3))
    io.save_dataset(tmp_path / "s.txt", graphs)
    targets = json.dumps([{"kind": "density", "value": 0.4}])
    assert run("evaluate", "--samples", tmp_path / "s.txt", "--reference", tmp_path / "s.txt",
               "--targets", targets, "--out", tmp_path / "o") == 0
    with open(tmp_path / "o" / "metrics.csv", newline="") as fh:
        assert next(csv.reader(fh)) == ["run", "metric", "statistic", "value"]
    rows = properties.read_metrics_csv(tmp_path / "o" / "metrics.csv")
    mmd = {s: v for _, m, s, v in rows if m == "mmd"}
    assert set(mmd) == {"degree", "clustering", "orbit"}
    assert all(abs(v) < 1e-12 for v in mmd.values())
    mae = [v for _, m, s, v in rows if m == "mae" and s == "density"]
    expected = properties.condition_mae(graphs, properties.PropertyTarget("density", 0.4))
    assert mae == [pytest.approx(expected, abs=1e-15)]


def test_evaluate_path_target_reports_kl_and_overlap(tmp_path):
    graphs = generate_dataset(DatasetSpec(**SMALL, seed=3))
    io.save_dataset(tmp_path / "s.txt", graphs)
    targets = json.dumps([{"kind": properties.PATH_KIND, "value": [[0, 1, 1]]}])
    assert run("evaluate", "--samples", tmp_path / "s.txt", "--reference", tmp_path / "s.txt",
               "--targets", targets, "--out", tmp_path / "o") == 0
    rows = {(m, s): v for _, m, s, v in properties.read_metrics_csv(tmp_path / "o" / "metrics.csv")}
    assert rows[("ol", properties.PATH_KIND)] == 1.0
    assert ("kl", properties.PATH_KIND) in rows


def test_evaluate_requires_samples(tmp_path):
    assert run("evaluate", "--out", tmp_path) == 2


def test_diagnose_zero_weight_spike(tmp_path):
    m = MpnnModel("regressor", 2, 2, layers=2, hidden=4).zero_()
    io.save_model(tmp_path / "z.model", m, make_schedule(10, 2, 2), meta={"property": "density"})
    cfg = write_config(tmp_path / "c.json", dataset=SMALL, model=str(tmp_path / "z.model"), bins=5)
    assert run("diagnose", "--config", cfg, "--out", tmp_path / "o") == 0
    rows = properties.read_metrics_csv(tmp_path / "o" / "gradient_hist.csv")
    pairs = 8 * 6 * 5 // 2
    by_step: dict = {}
    for _, metric, _, value in rows:
        by_step.setdefault(metric, []).append(value)
    assert set(by_step) == {f"edge_grad_hist_t{t}" for t in (0, 2, 5, 10)}
    for counts in by_step.values():
        assert len(counts) == 5 and sum(counts) == pairs
        assert max(counts) == pairs


def test_diagnose_trained_bins_sum(trained, tmp_path):
    cfg = write_config(tmp_path / "c.json", dataset=SMALL,
                       model=str(trained / "cl" / "clustering.model"), steps=[0, 3])
    assert run("diagnose", "--config", cfg, "--out", tmp_path / "o") == 0
    rows = properties.read_metrics_csv(tmp_path / "o" / "gradient_hist.csv")
    for t in (0, 3):
        assert sum(v for _, m, _, v in rows if m == f"edge_grad_hist_t{t}") == 8 * 15


def test_diagnose_rejects_path_model(tmp_path):
    m = MpnnModel("regressor", 2, 2, layers=1, hidden=4, markers=2)
    io.save_model(tmp_path / "p.model", m, None, meta={"property": properties.PATH_KIND})
    cfg = write_config(tmp_path / "c.json", dataset=SMALL, model=str(tmp_path / "p.model"))
    assert run("diagnose", "--config", cfg, "--out", tmp_path / "o") == 2


def test_ablate_grid_rows_and_determinism(trained, tmp_path):
    cfg = _gen_config(trained, tmp_path, num_samples=1,
                      predictors={"clustering": str(trained / "cl" / "clustering.model")},
                      targets=[{"kind": "clustering", "value": 0.5}],
                      sweep={"t_homo": [1, 2], "ph_timing": [0.0, 0.5],
                             "proposal": ["gradient", "rand", "ebc"]})
    for d in ("a", "b"):
        assert run("ablate", "--config", cfg, "--seed", 3, "--out", tmp_path / d) == 0
    text = (tmp_path / "a" / "ablation.csv").read_text()
    assert text == (tmp_path / "b" / "ablation.csv").read_text()
    rows = list(csv.reader(text.splitlines()))
    assert rows[0] == ["t_homo", "ph_timing", "proposal", "samples", "mae", "mean_selected",
                       "rejected_rate"]
    assert len(rows) == 1 + 2 * 2 * 3
    assert {(r[0], r[1], r[2]) for r in rows[1:]} == {
        (str(a), str(b), c) for a in (1, 2) for b in (0.0, 0.5) for c in ("gradient", "rand", "ebc")}
    m = io.load_manifest(tmp_path / "a" / "manifest.json")
    assert m["cells"] == 12


def test_flags_override_config(tmp_path):
    cfg = write_config(tmp_path / "c.json", seed=5, guidance={"t_homo": 7, "ph_timing": 0.1})
    args = cli.build_parser().parse_args(["generate", "--config", cfg, "--t-homo", "2"])
    resolved = cli.resolve_config(args)
    assert resolved["seed"] == 5
    assert resolved["guidance"] == {"t_homo": 2, "ph_timing": 0.1}


def test_bad_proposal_choice_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        cli.build_parser().parse_args(["generate", "--proposal", "magic"])
    assert exc.value.code == 2
