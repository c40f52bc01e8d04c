import csv
import json

import pytest

from scattersample import experiments as ex
from scattersample.experiments import (
    Cell,
    ExperimentConfig,
    budget_for,
    config_hash,
    mean_accuracy,
    run_ablation_clustering_target,
    run_ablation_init_ratio,
    run_ablation_redundancy,
    run_benchmark,
    run_simulation_sweep,
)

SMALL = dict(
    samplers=["scattersample", "random"],
    budget_ratios=[0.1],
    seeds=[0],
    train={"epochs": 15, "hidden_dim": 8},
    synthetic={"num_classes": 3, "nodes_per_class": 30, "num_features": 8, "p_in": 0.15,
               "p_out": 0.01, "seed": 1},
)


@pytest.fixture(autouse=True)
def single_worker(monkeypatch):
    monkeypatch.setenv("SCATTER_THREADS", "1")


def read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(samplers=["nope"])
    with pytest.raises(ValueError):
        ExperimentConfig(seeds=[])
    with pytest.raises(ValueError):
        ExperimentConfig(budget_ratios=[0.0])
    with pytest.raises(ValueError):
        ExperimentConfig(clustering_target="labels")
    with pytest.raises(ValueError):
        ExperimentConfig(train={"epochs": 0})


def test_schedule_defaults_by_size():
    assert ExperimentConfig(dataset="cora").schedule_ratios() == (0.03, 0.01)
    assert ExperimentConfig(dataset="pubmed").schedule_ratios() == (0.01, 0.005)
    assert ExperimentConfig(dataset="cora", b0_ratio=0.02).schedule_ratios() == (0.02, 0.01)


def test_config_from_json(tmp_path):
    (tmp_path / "c.json").write_text(json.dumps(SMALL))
    cfg = ExperimentConfig.from_json(tmp_path / "c.json")
    assert cfg.samplers == ["scattersample", "random"] and cfg.train_config(3).seed == 3


def test_config_hash_stable():
    assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})
    assert len(config_hash({})) == 16


def cell(**kw):
    base = dict(index=0, sampler="scattersample", budget_ratio=0.15, seed=0, redundancy=3.0,
                b0_ratio=0.03, round_ratio=0.01, rounds=None, clustering_target="propagated", k=2)
    return Cell(**{**base, **kw})


def test_budget_for_cora_sized_train():
    b = budget_for(cell(), 1208)
    assert (b.total, b.initial) == (181, 36)
    assert b.rounds == 13  # ceil(145 / 12)
    assert sum(b.schedule()) == b.total - b.initial
    assert budget_for(cell(rounds=4), 1208).rounds == 4


def test_budget_for_tiny_train():
    b = budget_for(cell(budget_ratio=0.01, b0_ratio=0.01), 50)
    assert b.initial >= 1 and b.total >= b.initial


def test_benchmark_writes_all_files(tmp_path):
    out = tmp_path / "res.csv"
    res = run_benchmark(ExperimentConfig(**SMALL), out)
    rows = read(out)
    assert len(rows) == 2 and all(not r["error"] for r in rows)
    assert [r["sampler"] for r in rows] == ["scattersample", "random"]
    assert list(rows[0]) == ex.RESULT_HEADER
    for suffix in (".history.csv", ".timing.csv", ".summary.csv"):
        assert out.with_suffix(suffix).is_file()
    summary = read(out.with_suffix(".summary.csv"))
    assert {s["sampler"] for s in summary} == {"scattersample", "random"}
    assert res.summary == summary


def test_history_audits_budget(tmp_path):
    out = tmp_path / "res.csv"
    run_benchmark(ExperimentConfig(**SMALL), out)
    rows = read(out)
    hist = read(out.with_suffix(".history.csv"))
    for r in rows:
        ids = [int(v) for h in hist if h["config_hash"] == r["config_hash"]
               for v in h["node_ids"].split(";") if v]
        assert len(ids) == len(set(ids)) == int(r["budget"]) == int(r["n_labeled"])


def test_rerun_is_byte_identical(tmp_path):
    cfg = ExperimentConfig(**SMALL)
    run_benchmark(cfg, tmp_path / "a.csv")
    run_benchmark(cfg, tmp_path / "b.csv")
    for suffix in (".csv", ".history.csv", ".summary.csv"):
        a = (tmp_path / "a").with_suffix(suffix).read_bytes()
        b = (tmp_path / "b").with_suffix(suffix).read_bytes()
        assert a == b


def test_resume_skips_finished_cells(tmp_path, monkeypatch):
    cfg = ExperimentConfig(**SMALL)
    out = tmp_path / "res.csv"
    run_benchmark(cfg, out)
    before = out.read_bytes()
    calls = []
    real = ex.run_cell
    monkeypatch.setattr(ex, "run_cell", lambda c, cl: calls.append(cl) or real(c, cl))
    run_benchmark(cfg, out)
    assert calls == [] and out.read_bytes() == before
    # add a seed: only the new cells run
    run_benchmark(ExperimentConfig(**{**SMALL, "seeds": [0, 1]}), out)
    assert len(calls) == 2 and len(read(out)) == 4


def test_failed_cell_recorded_and_retried(tmp_path, monkeypatch):
    cfg = ExperimentConfig(**{**SMALL, "dataset": "cora"})  # no data_dir
    res = run_benchmark(cfg, tmp_path / "res.csv")
    assert all("needs a data_dir" in r["error"] for r in res.rows)
    assert res.summary == []
    calls = []
    real = ex.run_cell
    monkeypatch.setattr(ex, "run_cell", lambda c, cl: calls.append(cl) or real(c, cl))
    run_benchmark(cfg, tmp_path / "res.csv")
    assert len(calls) == 2


def test_redundancy_one_equals_max_uncertainty(tmp_path):
    cfg = ExperimentConfig(**{**SMALL, "samplers": ["maxuncertainty"], "redundancy": 1.0})
    base = run_benchmark(cfg, tmp_path / "mu.csv")
    abl = run_ablation_redundancy(ExperimentConfig(**SMALL), [1.0], tmp_path / "r.csv")
    assert base.rows[0]["test_accuracy"] == abl.rows[0]["test_accuracy"]
    h1 = [r["node_ids"] for r in read(tmp_path / "mu.history.csv")]
    h2 = [r["node_ids"] for r in read(tmp_path / "r.history.csv")]
    assert [set(a.split(";")) for a in h1] == [set(b.split(";")) for b in h2]


def test_clustering_target_ablation(tmp_path):
    res = run_ablation_clustering_target(ExperimentConfig(**SMALL), tmp_path / "t.csv")
    assert sorted(r["clustering_target"] for r in res.rows) == ["model_output", "propagated", "raw"]
    assert all(not r["error"] for r in res.rows)
    overlap = read(tmp_path / "t.overlap.csv")
    assert {o["target"] for o in overlap} == {"raw", "model_output"}
    assert all(0.0 <= float(o["jaccard"]) <= 1.0 for o in overlap)


def test_init_ratio_ablation(tmp_path):
    res = run_ablation_init_ratio(ExperimentConfig(**SMALL), [0.02, 0.05], tmp_path / "i.csv")
    assert len({r["b0"] for r in res.rows}) == 2


def test_mean_accuracy():
    rows = [{"sampler": "a", "test_accuracy": "0.5", "error": ""},
            {"sampler": "a", "test_accuracy": "0.7", "error": ""},
            {"sampler": "b", "test_accuracy": "0.1", "error": "x"}]
    assert mean_accuracy(rows, sampler="a") == pytest.approx(0.6)
    with pytest.raises(KeyError):
        mean_accuracy(rows, sampler="b")


# --- simulation sweep ---


def test_sim_sweep_grid(tmp_path):
    rows, summary = run_simulation_sweep([0.0, 0.8], [0, 1, 2], tmp_path / "sim.csv")
    assert len(rows) == 2 * 3 * 2
    assert {(r["p_inter"], r["seed"]) for r in rows} == {(p, str(s)) for p in ("0", "0.8") for s in range(3)}
    assert [s["n_seeds"] for s in summary] == ["3", "3"]
    assert read(tmp_path / "sim.csv") == rows
    for r in rows:
        assert r["ratio"] == f"{float(r['ratio']):.10g}"


def test_sim_sweep_ratio_passthrough():
    from scattersample.simbench import SimConfig, run_simulation

    rows, summary = run_simulation_sweep([0.3], [4])
    res = run_simulation(SimConfig(p_inter=0.3, seed=4))
    assert float(rows[0]["ratio"]) == pytest.approx(res.ratio, rel=1e-9)
    assert float(summary[0]["mean_ratio"]) == pytest.approx(res.ratio, rel=1e-9)


def test_sim_sweep_rejects_empty():
    with pytest.raises(ValueError):
        run_simulation_sweep([0.0], [])
    with pytest.raises(ValueError):
        run_simulation_sweep([], [0])


def test_benchmark_from_disk_bundle(tmp_path):
    from scattersample.datasets import make_sbm_dataset, write_dataset

    write_dataset(make_sbm_dataset(name="disk", num_classes=3, nodes_per_class=30, num_features=8), tmp_path)
    cfg = ExperimentConfig(**{**SMALL, "dataset": "disk", "data_dir": str(tmp_path), "synthetic": {}})
    rows = run_benchmark(cfg, tmp_path / "res.csv").rows
    assert all(not r["error"] for r in rows) and {r["dataset"] for r in rows} == {"disk"}
