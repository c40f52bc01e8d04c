"""One-off converter from the public Planetoid release to the bundle layout.

Reads ``ind.<name>.{x,y,tx,ty,allx,ally,graph,test.index}`` (the pickled
files distributed with the original Planetoid code) and writes
``<out>/<name>/`` via :func:`scattersample.datasets.write_dataset`. Splits
follow the common convention: validation is the 500 nodes after the 20-per-
class training block, test is the 1000 indexed test nodes, training is
everything else.
"""

from __future__ import annotations

import pickle
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .datasets import DatasetBundle, expand_train_split, write_dataset
from .graph import build_graph

PLANETOID_NAMES = ("cora", "citeseer", "pubmed")
_PARTS = ("x", "y", "tx", "ty", "allx", "ally", "graph")


def _load_pickle(path: Path):
    # the release was pickled under Python 2
    with open(path, "rb") as fh:
        return pickle.load(fh, encoding="latin1")


def _dense(m) -> np.ndarray:
    return m.toarray() if sp.issparse(m) else np.asarray(m)


def convert_planetoid(raw_dir: str | Path, out_dir: str | Path, name: str) -> Path:
    raw = Path(raw_dir)
    parts = {p: _load_pickle(raw / f"ind.{name}.{p}") for p in _PARTS}
    test_idx = np.loadtxt(raw / f"ind.{name}.test.index", dtype=np.int64)
    test_sorted = np.sort(test_idx)

    tx, ty = _dense(parts["tx"]), _dense(parts["ty"])
    if name == "citeseer":
        # some test ids are missing from the release; pad them as zero rows
        full = np.arange(test_sorted.min(), test_sorted.max() + 1)
        tx_ext = np.zeros((full.size, tx.shape[1]))
        tx_ext[test_sorted - test_sorted.min()] = tx
        ty_ext = np.zeros((full.size, ty.shape[1]))
        ty_ext[test_sorted - test_sorted.min()] = ty
        tx, ty = tx_ext, ty_ext

    features = np.vstack([_dense(parts["allx"]), tx])
    onehot = np.vstack([_dense(parts["ally"]), ty])
    features[test_idx] = features[test_sorted]
    onehot[test_idx] = onehot[test_sorted]
    labels = onehot.argmax(axis=1)
    n = features.shape[0]

    adjacency = parts["graph"]
    raw_pairs = [(int(u), int(v)) for u, nbrs in adjacency.items() for v in nbrs]
    raw_pairs = [(u, v) for u, v in raw_pairs if u < n and v < n]
    graph = build_graph(raw_pairs, n)

    n_train_block = _dense(parts["y"]).shape[0]
    valid = tuple(range(n_train_block, n_train_block + 500))
    bundle = DatasetBundle(
        name=name,
        graph=graph,
        features=features.astype(np.float32).astype(np.float64),
        labels=labels.astype(np.int64),
        train=(),
        valid=valid,
        test=tuple(int(v) for v in test_sorted),
        num_classes=onehot.shape[1],
    )
    bundle = expand_train_split(bundle)
    extra = {
        "source": f"planetoid ind.{name}.* from {raw.resolve()}",
        # each link appears once per direction in the adjacency lists
        "raw_edge_count": len(raw_pairs) // 2,
    }
    return write_dataset(bundle, out_dir, extra)


def convert_all(raw_dir: str | Path, out_dir: str | Path) -> list[Path]:
    raw = Path(raw_dir)
    written = []
    for name in PLANETOID_NAMES:
        if (raw / f"ind.{name}.graph").is_file():
            written.append(convert_planetoid(raw, out_dir, name))
    if not written:
        raise FileNotFoundError(f"no ind.<name>.graph files found in {raw}")
    return written
