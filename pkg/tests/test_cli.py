import json

import numpy as np
import pytest

from scattersample.cli import main
from scattersample.datasets import make_sbm_dataset, write_dataset
from scattersample.graph import propagate_features, read_features

from .test_datasets import write_fake_planetoid

CONFIG = {
    "samplers": ["scattersample", "random"],
    "budget_ratios": [0.1],
    "seeds": [0],
    "train": {"epochs": 10, "hidden_dim": 8},
    "synthetic": {"num_classes": 3, "nodes_per_class": 25, "num_features": 6, "seed": 2},
}


@pytest.fixture(autouse=True)
def single_worker(monkeypatch):
    monkeypatch.setenv("SCATTER_THREADS", "1")


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(CONFIG))
    return path


def test_run_with_plot(tmp_path, config, capsys):
    out = tmp_path / "res.csv"
    assert main(["run", "--config", str(config), "--out", str(out), "--plot"]) == 0
    assert out.is_file() and out.with_suffix(".png").stat().st_size > 0
    assert "scattersample" in capsys.readouterr().out


def test_run_seed_override(tmp_path, config):
    out = tmp_path / "res.csv"
    assert main(["run", "--config", str(config), "--out", str(out), "--seeds", "3,4"]) == 0
    assert len(out.read_text().splitlines()) == 1 + 2 * 2


@pytest.mark.parametrize(
    "sub, extra",
    [
        ("ablate-redundancy", ["--r-values", "1,2"]),
        ("ablate-target", ["--targets", "propagated,raw"]),
        ("ablate-init", ["--b0-values", "0.03,0.05"]),
    ],
)
def test_ablations(tmp_path, config, sub, extra):
    out = tmp_path / f"{sub}.csv"
    assert main([sub, "--config", str(config), "--out", str(out), "--plot", *extra]) == 0
    assert len(out.read_text().splitlines()) == 3
    assert out.with_suffix(".png").is_file()


def test_simulate(tmp_path):
    out = tmp_path / "sim.csv"
    assert main(["simulate", "--p-inter", "0,0.8", "--seeds", "0,1", "--out", str(out), "--plot"]) == 0
    assert len(out.read_text().splitlines()) == 1 + 2 * 2 * 2
    assert out.with_suffix(".summary.csv").is_file() and out.with_suffix(".png").is_file()


def test_convert(tmp_path, capsys):
    write_fake_planetoid(tmp_path / "raw", "cora")
    assert main(["convert", str(tmp_path / "raw"), str(tmp_path / "data")]) == 0
    assert "cora" in capsys.readouterr().out


@pytest.mark.parametrize("suffix", [".csv", ".bin"])
def test_propagate(tmp_path, suffix):
    b = make_sbm_dataset(name="toy", nodes_per_class=10, num_features=4)
    write_dataset(b, tmp_path)
    out = tmp_path / f"x2{suffix}"
    assert main(["propagate", "--dataset", str(tmp_path / "toy"), "--k", "2", "--out", str(out)]) == 0
    expected = propagate_features(b.graph, b.features, 2)
    got = read_features(out)
    tol = 1e-12 if suffix == ".csv" else 1e-6
    np.testing.assert_allclose(got, expected, atol=tol)


def test_errors_return_2(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path / "o.csv")]) == 2
    assert main(["convert", str(tmp_path), str(tmp_path / "o")]) == 2
    assert "error:" in capsys.readouterr().err


def test_requires_subcommand():
    with pytest.raises(SystemExit):
        main([])
