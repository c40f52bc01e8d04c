"""Sparse graph storage, adjacency normalization and k-step feature propagation."""

from __future__ import annotations

import csv
import enum
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

GFEA_MAGIC = b"GFEA"


class NormalizationKind(str, enum.Enum):
    SYMMETRIC = "symmetric"
    ROW = "row"


@dataclass(frozen=True)
class SparseGraph:
    """Undirected graph in CSR form.

    ``col_indices[row_offsets[u]:row_offsets[u + 1]]`` are the neighbours of
    ``u``, sorted and unique. ``degrees`` counts neighbours without self-loops.
    """

    num_nodes: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    degrees: np.ndarray

    def __post_init__(self):
        for arr in (self.row_offsets, self.col_indices, self.degrees):
            arr.setflags(write=False)

    @property
    def num_edges(self) -> int:
        """Number of undirected edges."""
        return int(self.col_indices.size // 2)

    def neighbors(self, node: int) -> np.ndarray:
        return self.col_indices[self.row_offsets[node] : self.row_offsets[node + 1]]

    def adjacency(self) -> sp.csr_matrix:
        data = np.ones(self.col_indices.size, dtype=np.float64)
        return sp.csr_matrix(
            (data, self.col_indices, self.row_offsets), shape=(self.num_nodes, self.num_nodes)
        )

    def edges(self) -> np.ndarray:
        """Undirected edges as an (E, 2) array with ``u < v``."""
        rows = np.repeat(np.arange(self.num_nodes), np.diff(self.row_offsets))
        mask = rows < self.col_indices
        return np.stack([rows[mask], self.col_indices[mask]], axis=1)


def build_graph(edge_list: Iterable[Sequence[int]], num_nodes: int) -> SparseGraph:
    """Build a symmetric, deduplicated CSR graph from an undirected edge list.

    Self-loops in the input are dropped: normalization adds exactly one
    self-loop per node, so keeping them would double-count the diagonal.
    """
    if num_nodes < 0:
        raise ValueError(f"num_nodes must be non-negative, got {num_nodes}")
    edges = np.asarray(list(edge_list), dtype=np.int64).reshape(-1, 2)
    if edges.size:
        bad = np.flatnonzero((edges < 0) | (edges >= num_nodes))
        if bad.size:
            i = int(bad[0])
            raise ValueError(
                f"edge {i // 2} has node id {int(edges.flat[i])} out of range [0, {num_nodes})"
            )
    edges = edges[edges[:, 0] != edges[:, 1]]
    both = np.concatenate([edges, edges[:, ::-1]], axis=0)
    # encode (u, v) as one key so np.unique sorts by row then column
    keys = np.unique(both[:, 0] * max(num_nodes, 1) + both[:, 1])
    rows = keys // max(num_nodes, 1)
    cols = keys % max(num_nodes, 1)
    degrees = np.bincount(rows, minlength=num_nodes).astype(np.int64)
    row_offsets = np.zeros(num_nodes + 1, dtype=np.int64)
    np.cumsum(degrees, out=row_offsets[1:])
    return SparseGraph(num_nodes, row_offsets, cols.astype(np.int64), degrees)


def normalized_operator(
    graph: SparseGraph, norm: NormalizationKind | str = NormalizationKind.SYMMETRIC
) -> sp.csr_matrix:
    """Self-loop augmented adjacency, scaled by the augmented degrees."""
    norm = NormalizationKind(norm)
    a_hat = graph.adjacency() + sp.identity(graph.num_nodes, format="csr")
    deg = graph.degrees.astype(np.float64) + 1.0
    if norm is NormalizationKind.SYMMETRIC:
        d_inv_sqrt = sp.diags(1.0 / np.sqrt(deg))
        s = d_inv_sqrt @ a_hat @ d_inv_sqrt
    else:
        s = sp.diags(1.0 / deg) @ a_hat
    s = sp.csr_matrix(s)
    s.sort_indices()
    return s


def propagate_features(
    graph: SparseGraph,
    x: np.ndarray,
    k: int,
    norm: NormalizationKind | str = NormalizationKind.SYMMETRIC,
    operator: sp.spmatrix | None = None,
) -> np.ndarray:
    """Return ``S^k X`` computed as k successive sparse products.

    ``operator`` may be passed to reuse a precomputed normalized adjacency.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"features must be 2-D, got shape {x.shape}")
    if x.shape[0] != graph.num_nodes:
        raise ValueError(
            f"feature rows ({x.shape[0]}) do not match graph nodes ({graph.num_nodes})"
        )
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    s = normalized_operator(graph, norm) if operator is None else operator
    out = x.copy()
    for _ in range(k):
        out = np.asarray(s @ out)
    return out


# --- file formats -----------------------------------------------------------


def read_edge_list(path: str | Path) -> list[tuple[int, int]]:
    """Parse a ``u<TAB>v`` edge file; ``#`` lines and blank lines are skipped."""
    edges = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 fields, got {len(parts)}")
            edges.append((int(parts[0]), int(parts[1])))
    return edges


def write_edge_list(path: str | Path, edges: Iterable[Sequence[int]], header: str | None = None):
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(f"# {header}\n")
        for u, v in edges:
            fh.write(f"{int(u)}\t{int(v)}\n")


def write_gfea(path: str | Path, matrix: np.ndarray):
    """Write a matrix in the binary GFEA container (little-endian f32 payload)."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {matrix.shape}")
    n, d = matrix.shape
    with open(path, "wb") as fh:
        fh.write(GFEA_MAGIC)
        fh.write(struct.pack("<QQ", n, d))
        fh.write(np.ascontiguousarray(matrix, dtype="<f4").tobytes())


def read_gfea(path: str | Path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != GFEA_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        n, d = struct.unpack("<QQ", fh.read(16))
        payload = fh.read()
    if len(payload) != 4 * n * d:
        raise ValueError(f"{path}: expected {4 * n * d} payload bytes, found {len(payload)}")
    return np.frombuffer(payload, dtype="<f4").reshape(n, d).astype(np.float64)


def read_feature_csv(path: str | Path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        n, d = int(header[0]), int(header[1])
        rows = [[float(v) for v in row] for row in reader if row]
    x = np.asarray(rows, dtype=np.float64).reshape(-1, d) if rows else np.zeros((0, d))
    if x.shape != (n, d):
        raise ValueError(f"{path}: header says {n}x{d}, body is {x.shape[0]}x{x.shape[1]}")
    return x


def write_feature_csv(path: str | Path, x: np.ndarray):
    x = np.asarray(x, dtype=np.float64)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(x.shape)
        for row in x:
            writer.writerow([repr(float(v)) for v in row])


def read_features(path: str | Path) -> np.ndarray:
    """Load a feature matrix, sniffing GFEA binary vs CSV from the first bytes."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == GFEA_MAGIC:
        return read_gfea(path)
    x = read_feature_csv(path)
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{path}: non-finite feature values")
    return x
