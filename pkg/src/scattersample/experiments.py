"""Budget sweeps, ablations and simulation sweeps with resumable CSV output.

A sweep expands into independent *cells* (one active-learning run each).
Every cell is identified by a hash of its full configuration; results are
rewritten atomically after each finished cell so an interrupted sweep
resumes by skipping hashes already present in the output.
"""

from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .classifier import TrainConfig, evaluate_accuracy
from .datasets import DatasetBundle, expand_train_split, load_dataset, make_sbm_dataset
from .sampling import Budget, ClusteringTarget, LabelOracle, Sampler, history_rows, run_active_learning
from .simbench import METHODS, SIM_CSV_HEADER, SimConfig, run_simulation, sim_csv_rows

log = logging.getLogger(__name__)

MEDIUM_DATASETS = {"pubmed", "corafull"}
SIMULATION_P_GRID = (0.0, 0.3, 0.8)

RESULT_HEADER = [
    "config_hash", "dataset", "sampler", "budget_ratio", "budget", "b0", "rounds",
    "redundancy", "k", "clustering_target", "seed", "n_labeled", "test_accuracy", "error",
]
HISTORY_HEADER = ["round", "sampler", "seed", "n_labeled", "node_ids", "test_accuracy", "config_hash"]


@dataclass
class ExperimentConfig:
    dataset: str = "sbm"
    data_dir: str | None = None
    samplers: list[str] = field(default_factory=lambda: ["scattersample", "random"])
    budget_ratios: list[float] = field(default_factory=lambda: [0.05, 0.07, 0.09, 0.11, 0.13, 0.15])
    b0_ratio: float | None = None
    round_ratio: float | None = None
    rounds: int | None = None
    redundancy: float = 3.0
    k: int = 2
    clustering_target: str = "propagated"
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    train: dict = field(default_factory=dict)
    synthetic: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.samplers:
            raise ValueError("at least one sampler is required")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        for r in self.budget_ratios:
            if not 0 < r <= 1:
                raise ValueError(f"budget ratio {r} outside (0, 1]")
        for s in self.samplers:
            Sampler(s)
        ClusteringTarget(self.clustering_target)
        self.train_config()

    @property
    def is_medium(self) -> bool:
        return self.dataset.lower() in MEDIUM_DATASETS

    def schedule_ratios(self) -> tuple[float, float]:
        """(initial ratio, per-round ratio), defaulting by dataset size class."""
        b0 = self.b0_ratio if self.b0_ratio is not None else (0.01 if self.is_medium else 0.03)
        step = self.round_ratio if self.round_ratio is not None else (0.005 if self.is_medium else 0.01)
        return b0, step

    def train_config(self, seed: int = 0) -> TrainConfig:
        return TrainConfig(**{**self.train, "seed": seed})

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        return cls(**json.loads(Path(path).read_text()))


def config_hash(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# --- dataset access (cached per process) -------------------------------------------------

_BUNDLES: dict[tuple, DatasetBundle] = {}


def get_bundle(cfg: ExperimentConfig) -> DatasetBundle:
    key = (cfg.dataset, cfg.data_dir, json.dumps(cfg.synthetic, sort_keys=True))
    if key not in _BUNDLES:
        if cfg.data_dir is None:
            if cfg.dataset != "sbm" and not cfg.dataset.startswith("sbm"):
                raise ValueError(f"dataset {cfg.dataset!r} needs a data_dir")
            bundle = make_sbm_dataset(name=cfg.dataset, **cfg.synthetic)
        else:
            bundle = load_dataset(cfg.data_dir, cfg.dataset)
        _BUNDLES[key] = expand_train_split(bundle)
    return _BUNDLES[key]


# --- cells -------------------------------------------------------------------------------


@dataclass(frozen=True)
class Cell:
    index: int
    sampler: str
    budget_ratio: float
    seed: int
    redundancy: float
    b0_ratio: float
    round_ratio: float
    rounds: int | None
    clustering_target: str
    k: int

    def payload(self, cfg: ExperimentConfig) -> dict:
        return {
            "dataset": cfg.dataset,
            "data_dir": cfg.data_dir,
            "synthetic": cfg.synthetic,
            "train": asdict(cfg.train_config(self.seed)),
            **{k: v for k, v in asdict(self).items() if k != "index"},
        }


def budget_for(cell: Cell, n_train: int) -> Budget:
    total = int(round(cell.budget_ratio * n_train))
    b0 = max(1, min(total, int(round(cell.b0_ratio * n_train))))
    total = max(total, b0)
    if cell.rounds is not None:
        rounds = cell.rounds
    else:
        step = max(1, int(round(cell.round_ratio * n_train)))
        rounds = max(1, math.ceil((total - b0) / step))
    return Budget(total, b0, rounds, cell.redundancy)


@dataclass
class CellResult:
    row: dict
    history: list[list[str]]
    selected: list[int]
    seconds: float


def run_cell(cfg: ExperimentConfig, cell: Cell) -> CellResult:
    h = config_hash(cell.payload(cfg))
    row = {
        "config_hash": h, "dataset": cfg.dataset, "sampler": cell.sampler,
        "budget_ratio": f"{cell.budget_ratio:g}", "budget": "", "b0": "", "rounds": "",
        "redundancy": f"{cell.redundancy:g}", "k": str(cell.k),
        "clustering_target": cell.clustering_target, "seed": str(cell.seed),
        "n_labeled": "", "test_accuracy": "", "error": "",
    }
    start = time.perf_counter()
    history: list[list[str]] = []
    selected: list[int] = []
    try:
        bundle = get_bundle(cfg)
        budget = budget_for(cell, len(bundle.train))
        row.update(budget=str(budget.total), b0=str(budget.initial), rounds=str(budget.rounds))
        oracle = LabelOracle(bundle.labels, bundle.train, budget.total)
        test = bundle.test

        def evaluate(probs):
            return evaluate_accuracy(probs, bundle.labels, test)

        _, hist = run_active_learning(
            bundle.graph, bundle.features, oracle, budget, cfg.train_config(cell.seed),
            k=cell.k, sampler=cell.sampler, seed=cell.seed, num_classes=bundle.num_classes,
            evaluate=evaluate, clustering_target=cell.clustering_target,
        )
        row["n_labeled"] = str(oracle.spent)
        row["test_accuracy"] = f"{hist[-1].test_accuracy:.6f}"
        history = [r + [h] for r in history_rows(hist, cell.sampler, cell.seed)]
        selected = list(oracle.queried)
    except Exception as exc:  # recorded per cell; the sweep continues
        log.exception("cell %s failed", h)
        row["error"] = f"{type(exc).__name__}: {exc}"
    return CellResult(row, history, selected, time.perf_counter() - start)


def _run_cell_job(args):
    cfg, cell = args
    return cell.index, run_cell(cfg, cell)


# --- persistence -------------------------------------------------------------------------


def _read_rows(path: Path) -> list[dict]:
    if not path.is_file():
        return []
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_csv_atomic(path: str | Path, header: Sequence[str], rows: Iterable[dict | Sequence]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([row.get(k, "") for k in header] if isinstance(row, dict) else row)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(buf.getvalue())
    os.replace(tmp, path)


def worker_count() -> int:
    env = os.environ.get("SCATTER_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass
class SweepOutput:
    rows: list[dict]
    summary: list[dict]
    path: Path


def run_cells(cfg: ExperimentConfig, cells: list[Cell], out: str | Path) -> SweepOutput:
    """Execute cells not already present in ``out`` and rewrite all outputs atomically.

    Side files next to ``out``: ``.history.csv`` (per-round selections),
    ``.timing.csv`` (wall-clock per cell, kept apart so the main file is
    byte-reproducible) and ``.summary.csv`` (mean/std per arm and ratio).
    """
    out = Path(out)
    hist_path = out.with_suffix(".history.csv")
    timing_path = out.with_suffix(".timing.csv")
    hashes = [config_hash(c.payload(cfg)) for c in cells]
    done = {r["config_hash"]: r for r in _read_rows(out) if not r.get("error")}
    done_hist = _read_rows(hist_path)
    done_timing = _read_rows(timing_path)
    results: dict[str, dict] = {h: done[h] for h in hashes if h in done}
    histories = {h: [r for r in done_hist if r.get("config_hash") == h] for h in results}
    timings = {r["config_hash"]: r for r in done_timing if r.get("config_hash") in results}
    todo = [c for c, h in zip(cells, hashes) if h not in results]
    log.info("%d cells, %d cached, %d to run", len(cells), len(cells) - len(todo), len(todo))

    def flush():
        ordered = [h for h in hashes if h in results]
        write_csv_atomic(out, RESULT_HEADER, [results[h] for h in ordered])
        write_csv_atomic(hist_path, HISTORY_HEADER, [r for h in ordered for r in histories[h]])
        write_csv_atomic(timing_path, ["config_hash", "seconds"], [timings[h] for h in ordered if h in timings])

    def record(res: CellResult):
        h = res.row["config_hash"]
        results[h] = res.row
        histories[h] = [dict(zip(HISTORY_HEADER, r)) for r in res.history]
        timings[h] = {"config_hash": h, "seconds": f"{res.seconds:.3f}"}
        flush()

    workers = min(worker_count(), max(1, len(todo)))
    if workers == 1:
        for cell in todo:
            record(run_cell(cfg, cell))
    else:
        with ProcessPoolExecutor(workers) as pool:
            for _, res in pool.map(_run_cell_job, [(cfg, c) for c in todo]):
                record(res)
    flush()
    rows = [results[h] for h in hashes]
    summary = summarize(rows)
    write_csv_atomic(out.with_suffix(".summary.csv"), SUMMARY_HEADER, summary)
    return SweepOutput(rows, summary, out)


SUMMARY_HEADER = ["sampler", "budget_ratio", "redundancy", "clustering_target", "b0", "n", "mean_accuracy", "std_accuracy"]


def summarize(rows: Iterable[dict]) -> list[dict]:
    groups: dict[tuple, list[float]] = {}
    for r in rows:
        if r.get("error") or not r.get("test_accuracy"):
            continue
        key = (r["sampler"], r["budget_ratio"], r["redundancy"], r["clustering_target"], r["b0"])
        groups.setdefault(key, []).append(float(r["test_accuracy"]))
    out = []
    for key, accs in groups.items():
        out.append(dict(zip(SUMMARY_HEADER, [*key, str(len(accs)),
                                             f"{np.mean(accs):.6f}", f"{np.std(accs):.6f}"])))
    return out


# --- sweeps ---------------------------------------------------------------------------------


def _cells(cfg: ExperimentConfig, variants: Iterable[dict]) -> list[Cell]:
    b0, step = cfg.schedule_ratios()
    base = dict(redundancy=cfg.redundancy, b0_ratio=b0, round_ratio=step, rounds=cfg.rounds,
                clustering_target=cfg.clustering_target, k=cfg.k)
    cells = []
    for v in variants:
        cells.append(Cell(index=len(cells), **{**base, **v}))
    return cells


def run_benchmark(cfg: ExperimentConfig, out: str | Path) -> SweepOutput:
    variants = (
        dict(sampler=s, budget_ratio=b, seed=seed)
        for s, b, seed in itertools.product(cfg.samplers, cfg.budget_ratios, cfg.seeds)
    )
    return run_cells(cfg, _cells(cfg, variants), out)


def run_ablation_redundancy(cfg: ExperimentConfig, r_values: Sequence[float], out: str | Path) -> SweepOutput:
    """Accuracy as a function of sampling redundancy; r = 1 is plain max-uncertainty."""
    variants = (
        dict(sampler="scattersample", redundancy=float(r), budget_ratio=b, seed=seed)
        for r, b, seed in itertools.product(r_values, cfg.budget_ratios, cfg.seeds)
    )
    return run_cells(cfg, _cells(cfg, variants), out)


def run_ablation_init_ratio(cfg: ExperimentConfig, b0_values: Sequence[float], out: str | Path) -> SweepOutput:
    variants = (
        dict(sampler="scattersample", b0_ratio=float(b0), budget_ratio=b, seed=seed)
        for b0, b, seed in itertools.product(b0_values, cfg.budget_ratios, cfg.seeds)
    )
    return run_cells(cfg, _cells(cfg, variants), out)


def run_ablation_clustering_target(
    cfg: ExperimentConfig, out: str | Path, targets: Sequence[str] | None = None
) -> SweepOutput:
    """Cluster propagated features, raw features or model output; also writes selection overlap."""
    targets = list(targets or [t.value for t in ClusteringTarget])
    variants = (
        dict(sampler="scattersample", clustering_target=t, budget_ratio=b, seed=seed)
        for t, b, seed in itertools.product(targets, cfg.budget_ratios, cfg.seeds)
    )
    result = run_cells(cfg, _cells(cfg, variants), out)
    write_csv_atomic(Path(out).with_suffix(".overlap.csv"), OVERLAP_HEADER,
                     selection_overlap(result.path.with_suffix(".history.csv"), result.rows))
    return result


OVERLAP_HEADER = ["budget_ratio", "seed", "target", "reference", "jaccard"]


def selection_overlap(history_path: Path, rows: list[dict]) -> list[dict]:
    """Jaccard overlap of each target's labeled set with the propagated-feature run."""
    picked: dict[str, set[int]] = {}
    for r in _read_rows(history_path):
        ids = {int(v) for v in r["node_ids"].split(";") if v}
        picked.setdefault(r["config_hash"], set()).update(ids)
    by_cell = {(r["budget_ratio"], r["seed"], r["clustering_target"]): picked.get(r["config_hash"], set())
               for r in rows}
    out = []
    ref = ClusteringTarget.PROPAGATED.value
    for (ratio, seed, target), s in sorted(by_cell.items()):
        base = by_cell.get((ratio, seed, ref))
        if base is None or target == ref:
            continue
        union = s | base
        jac = len(s & base) / len(union) if union else 1.0
        out.append({"budget_ratio": ratio, "seed": seed, "target": target, "reference": ref,
                    "jaccard": f"{jac:.6f}"})
    return out


SIM_HEADER = SIM_CSV_HEADER + ["config_hash"]
SIM_SUMMARY_HEADER = ["p_inter", "n_seeds", "mean_ratio", "mean_mse_maxuncertainty", "mean_mse_diverse"]


def _sim_job(cfg: SimConfig):
    try:
        return cfg, run_simulation(cfg), ""
    except Exception as exc:
        return cfg, None, f"{type(exc).__name__}: {exc}"


def run_simulation_sweep(
    p_values: Sequence[float],
    seeds: Sequence[int],
    out: str | Path | None = None,
    base: SimConfig = SimConfig(),
) -> tuple[list[dict], list[dict]]:
    """Run the GP simulation on every (p_inter, seed); returns (rows, seed-averaged summary)."""
    if not seeds:
        raise ValueError("seed list is empty")
    if not p_values:
        raise ValueError("p_inter list is empty")
    cfgs = [replace(base, p_inter=float(p), seed=int(s)) for p in p_values for s in seeds]
    workers = min(worker_count(), len(cfgs))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_sim_job, cfgs))
    else:
        results = [_sim_job(c) for c in cfgs]

    rows, per_p = [], {}
    for cfg, res, err in results:
        h = config_hash(asdict(cfg))
        if res is None:
            rows.append(dict(zip(SIM_HEADER, [str(cfg.seed), f"{cfg.p_inter:g}", "error", "", "", "", err, h])))
            continue
        for r in sim_csv_rows(res):
            rows.append(dict(zip(SIM_HEADER, r + [h])))
        per_p.setdefault(cfg.p_inter, []).append(res)
    summary = []
    for p, rs in per_p.items():
        summary.append({
            "p_inter": f"{p:g}", "n_seeds": str(len(rs)),
            "mean_ratio": f"{np.mean([r.ratio for r in rs]):.10g}",
            "mean_mse_maxuncertainty": f"{np.mean([r.mse_max_uncertainty for r in rs]):.10g}",
            "mean_mse_diverse": f"{np.mean([r.mse_diverse for r in rs]):.10g}",
        })
    if out is not None:
        write_csv_atomic(out, SIM_HEADER, rows)
        write_csv_atomic(Path(out).with_suffix(".summary.csv"), SIM_SUMMARY_HEADER, summary)
    return rows, summary


def mean_accuracy(rows: Iterable[dict], **match) -> float:
    vals = [float(r["test_accuracy"]) for r in rows
            if not r.get("error") and all(str(r[k]) == str(v) for k, v in match.items())]
    if not vals:
        raise KeyError(f"no successful rows match {match}")
    return float(np.mean(vals))


__all__ = [
    "ExperimentConfig", "Cell", "run_benchmark", "run_ablation_redundancy",
    "run_ablation_clustering_target", "run_ablation_init_ratio", "run_simulation_sweep",
    "mean_accuracy", "config_hash", "METHODS", "SIMULATION_P_GRID",
]
