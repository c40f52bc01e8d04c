"""On-disk dataset bundles: loading, validation, writing and split expansion.

Layout of ``<root>/<name>/``::

    edges.tsv      u<TAB>v per undirected edge, 0-indexed
    features.bin   GFEA container (f32 on disk, f64 in memory)
    labels.txt     one class id per line, node order
    splits.json    {"train": [...], "valid": [...], "test": [...]}
    meta.json      {"name", "num_classes", "checksum", ...}
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .graph import SparseGraph, build_graph, read_edge_list, read_features, write_edge_list, write_gfea

DATA_FILES = ("edges.tsv", "features.bin", "labels.txt", "splits.json")


@dataclass(frozen=True)
class DatasetStats:
    nodes: int
    train: int
    edges: int
    classes: int


# Published node / expanded-train / edge / class counts. Edge counts are the
# raw citation-link counts, before symmetrization and deduplication.
KNOWN_DATASETS = {
    "cora": DatasetStats(2708, 1208, 5429, 7),
    "citeseer": DatasetStats(3327, 1827, 4732, 6),
    "pubmed": DatasetStats(19717, 18217, 44328, 3),
    "corafull": DatasetStats(19793, 18293, 126842, 70),
}


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetBundle:
    name: str
    graph: SparseGraph
    features: np.ndarray
    labels: np.ndarray
    train: tuple[int, ...]
    valid: tuple[int, ...]
    test: tuple[int, ...]
    num_classes: int
    checksum: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def num_nodes(self) -> int:
        return self.graph.num_nodes

    def validate(self):
        n = self.graph.num_nodes
        if self.features.shape[0] != n:
            raise DatasetError(f"{self.name}: {self.features.shape[0]} feature rows for {n} nodes")
        if not np.all(np.isfinite(self.features)):
            raise DatasetError(f"{self.name}: non-finite features")
        if self.labels.shape != (n,):
            raise DatasetError(f"{self.name}: {self.labels.size} labels for {n} nodes")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise DatasetError(f"{self.name}: labels outside [0, {self.num_classes})")
        sets = {k: set(getattr(self, k)) for k in ("train", "valid", "test")}
        for key, s in sets.items():
            if len(s) != len(getattr(self, key)):
                raise DatasetError(f"{self.name}: duplicate ids in {key} split")
            if s and (min(s) < 0 or max(s) >= n):
                raise DatasetError(f"{self.name}: {key} split has ids outside [0, {n})")
        for a, b in (("train", "valid"), ("train", "test"), ("valid", "test")):
            if sets[a] & sets[b]:
                raise DatasetError(f"{self.name}: {a} and {b} splits overlap")


def _checksum(directory: Path) -> str:
    h = hashlib.sha256()
    for fname in DATA_FILES:
        h.update(fname.encode())
        h.update((directory / fname).read_bytes())
    return h.hexdigest()


def write_dataset(bundle: DatasetBundle, root: str | Path, extra_meta: dict | None = None) -> Path:
    bundle.validate()
    out = Path(root) / bundle.name
    out.mkdir(parents=True, exist_ok=True)
    write_edge_list(out / "edges.tsv", bundle.graph.edges(), header=f"{bundle.name} undirected edges")
    write_gfea(out / "features.bin", bundle.features)
    (out / "labels.txt").write_text("".join(f"{int(c)}\n" for c in bundle.labels))
    splits = {k: [int(v) for v in getattr(bundle, k)] for k in ("train", "valid", "test")}
    (out / "splits.json").write_text(json.dumps(splits))
    meta = {**bundle.meta, **(extra_meta or {})}
    meta.update(name=bundle.name, num_classes=bundle.num_classes, num_nodes=bundle.num_nodes,
                checksum=_checksum(out))
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True))
    return out


def load_dataset(dir_path: str | Path, name: str, check_known: bool = True) -> DatasetBundle:
    """Load and validate ``<dir_path>/<name>``.

    For names in :data:`KNOWN_DATASETS` the node, class, expanded-train and
    raw edge counts are checked against the published statistics.
    """
    d = Path(dir_path) / name
    for fname in (*DATA_FILES, "meta.json"):
        if not (d / fname).is_file():
            raise DatasetError(f"{name}: missing file {d / fname}")
    meta = json.loads((d / "meta.json").read_text())
    actual = _checksum(d)
    if meta.get("checksum") != actual:
        raise DatasetError(f"{name}: checksum mismatch (meta {meta.get('checksum')}, files {actual})")

    features = read_features(d / "features.bin")
    n = int(meta.get("num_nodes", features.shape[0]))
    labels = np.loadtxt(d / "labels.txt", dtype=np.int64, ndmin=1)
    splits = json.loads((d / "splits.json").read_text())
    bundle = DatasetBundle(
        name=name,
        graph=build_graph(read_edge_list(d / "edges.tsv"), n),
        features=features,
        labels=labels,
        train=tuple(splits["train"]),
        valid=tuple(splits["valid"]),
        test=tuple(splits["test"]),
        num_classes=int(meta["num_classes"]),
        checksum=actual,
        meta=meta,
    )
    bundle.validate()
    if check_known and name.lower() in KNOWN_DATASETS:
        _check_stats(bundle, KNOWN_DATASETS[name.lower()])
    return bundle


def _check_stats(bundle: DatasetBundle, stats: DatasetStats):
    found = {
        "nodes": bundle.num_nodes,
        "classes": bundle.num_classes,
        "train": bundle.num_nodes - len(bundle.valid) - len(bundle.test),
    }
    if "raw_edge_count" in bundle.meta:
        found["edges"] = int(bundle.meta["raw_edge_count"])
    for key, value in found.items():
        expected = getattr(stats, key)
        if value != expected:
            raise DatasetError(f"{bundle.name}: {key} count {value} != expected {expected}")


def expand_train_split(bundle: DatasetBundle) -> DatasetBundle:
    """Every node outside the validation and test splits becomes a training node."""
    held_out = set(bundle.valid) | set(bundle.test)
    train = tuple(v for v in range(bundle.num_nodes) if v not in held_out)
    return replace(bundle, train=train)


def make_sbm_dataset(
    name: str = "sbm",
    num_classes: int = 4,
    nodes_per_class: int = 100,
    num_features: int = 32,
    p_in: float = 0.05,
    p_out: float = 0.005,
    feature_noise: float = 1.0,
    valid_frac: float = 0.2,
    test_frac: float = 0.3,
    seed: int = 0,
) -> DatasetBundle:
    """Planted-partition graph with class-dependent Gaussian features."""
    rng = np.random.default_rng(seed)
    n = num_classes * nodes_per_class
    labels = np.repeat(np.arange(num_classes), nodes_per_class)
    prob = np.where(labels[:, None] == labels[None, :], p_in, p_out)
    upper = np.triu(rng.random((n, n)) < prob, k=1)
    edges = np.argwhere(upper)
    means = rng.normal(size=(num_classes, num_features))
    features = means[labels] + feature_noise * rng.normal(size=(n, num_features))
    features = features.astype(np.float32).astype(np.float64)
    perm = rng.permutation(n)
    n_valid, n_test = int(valid_frac * n), int(test_frac * n)
    valid = tuple(sorted(int(v) for v in perm[:n_valid]))
    test = tuple(sorted(int(v) for v in perm[n_valid : n_valid + n_test]))
    train = tuple(sorted(int(v) for v in perm[n_valid + n_test :]))
    return DatasetBundle(
        name=name,
        graph=build_graph(edges, n),
        features=features,
        labels=labels,
        train=train,
        valid=valid,
        test=test,
        num_classes=num_classes,
        meta={"source": f"synthetic sbm seed={seed}"},
    )
