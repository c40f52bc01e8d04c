"""Full-batch 2-layer GCN (bias-free) with manual backprop, plus an SGC fallback.

The model is ``softmax(S relu(S X W0) W1)`` with ``S`` the normalized adjacency
from :mod:`scattersample.graph`. Training minimizes mean cross-entropy over the
labeled nodes plus ``weight_decay / 2 * (|W0|^2 + |W1|^2)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from .graph import NormalizationKind, SparseGraph, normalized_operator, read_gfea, write_gfea


class Optimizer(str, enum.Enum):
    ADAM = "adam"
    SGD = "sgd"


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    weight_decay: float = 5e-4
    epochs: int = 200
    seed: int = 0
    optimizer: Optimizer = Optimizer.ADAM
    hidden_dim: int = 64
    norm: NormalizationKind = NormalizationKind.SYMMETRIC

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.hidden_dim < 1:
            raise ValueError(f"hidden_dim must be >= 1, got {self.hidden_dim}")
        object.__setattr__(self, "optimizer", Optimizer(self.optimizer))
        object.__setattr__(self, "norm", NormalizationKind(self.norm))


@dataclass
class GcnParams:
    w0: np.ndarray
    w1: np.ndarray
    losses: list[float] = field(default_factory=list, compare=False, repr=False)

    @property
    def hidden_dim(self) -> int:
        return self.w0.shape[1]

    @property
    def num_classes(self) -> int:
        return self.w1.shape[1]

    def save(self, prefix: str):
        write_gfea(f"{prefix}.w0.gfea", self.w0)
        write_gfea(f"{prefix}.w1.gfea", self.w1)

    @classmethod
    def load(cls, prefix: str) -> "GcnParams":
        return cls(read_gfea(f"{prefix}.w0.gfea"), read_gfea(f"{prefix}.w1.gfea"))


class PreparedGraph:
    """Normalized operator and ``S X`` cached for repeated training rounds."""

    def __init__(self, graph: SparseGraph, x: np.ndarray, norm=NormalizationKind.SYMMETRIC):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[0] != graph.num_nodes:
            raise ValueError(
                f"feature rows ({x.shape[0]}) do not match graph nodes ({graph.num_nodes})"
            )
        self.graph = graph
        self.norm = NormalizationKind(norm)
        self.s = normalized_operator(graph, self.norm)
        self.sx = np.asarray(self.s @ x)

    @property
    def num_features(self) -> int:
        return self.sx.shape[1]


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_params(num_features: int, hidden_dim: int, num_classes: int, seed: int) -> GcnParams:
    rng = np.random.default_rng(seed)
    return GcnParams(
        glorot_uniform(rng, num_features, hidden_dim),
        glorot_uniform(rng, hidden_dim, num_classes),
    )


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class _LabeledProblem:
    """Restriction of the forward pass to what the labeled rows depend on.

    Logits of labeled rows L only need hidden states on their 1-hop
    neighbourhood R, so training touches ``|R|`` rows instead of N.
    """

    def __init__(self, prep: PreparedGraph, nodes: np.ndarray, targets: np.ndarray, num_classes: int):
        s_l = prep.s[nodes]
        support = np.unique(s_l.indices)
        self.s_lr = sp.csr_matrix(s_l[:, support])
        self.sx_r = prep.sx[support]
        self.y = np.zeros((nodes.size, num_classes))
        self.y[np.arange(nodes.size), targets] = 1.0

    def loss_and_grad(self, w0: np.ndarray, w1: np.ndarray, weight_decay: float):
        pre = self.sx_r @ w0
        h = np.maximum(pre, 0.0)
        m = np.asarray(self.s_lr @ h)
        z = m @ w1
        zs = z - z.max(axis=1, keepdims=True)
        logp = zs - np.log(np.exp(zs).sum(axis=1, keepdims=True))
        n = self.y.shape[0]
        loss = -np.sum(self.y * logp) / n
        loss += 0.5 * weight_decay * (np.sum(w0 * w0) + np.sum(w1 * w1))

        dz = (np.exp(logp) - self.y) / n
        g1 = m.T @ dz + weight_decay * w1
        dh = np.asarray(self.s_lr.T @ (dz @ w1.T))
        dh[pre <= 0.0] = 0.0
        g0 = self.sx_r.T @ dh + weight_decay * w0
        return float(loss), g0, g1


def _labeled_arrays(labeled, labels, num_classes: int | None):
    nodes = np.array(sorted(int(v) for v in labeled), dtype=np.int64)
    if nodes.size == 0:
        raise ValueError("labeled set is empty")
    if isinstance(labels, Mapping):
        targets = np.array([int(labels[int(v)]) for v in nodes], dtype=np.int64)
    else:
        targets = np.asarray(labels, dtype=np.int64)[nodes]
    if num_classes is None:
        num_classes = int(targets.max()) + 1
    bad = (targets < 0) | (targets >= num_classes)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise ValueError(f"label {targets[i]} of node {nodes[i]} outside [0, {num_classes})")
    return nodes, targets, num_classes


def loss_and_grad(
    prep: PreparedGraph, labeled, labels, params: GcnParams, weight_decay: float = 0.0
):
    """Training loss and its gradient w.r.t. (w0, w1); exposed for gradient checks."""
    nodes, targets, c = _labeled_arrays(labeled, labels, params.num_classes)
    return _LabeledProblem(prep, nodes, targets, c).loss_and_grad(params.w0, params.w1, weight_decay)


class _Adam:
    def __init__(self, shapes, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.b1**self.t
        c2 = 1.0 - self.b2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


class _Sgd:
    def __init__(self, lr):
        self.lr = lr

    def step(self, params, grads):
        for p, g in zip(params, grads):
            p -= self.lr * g


def _make_optimizer(cfg: TrainConfig, shapes):
    if cfg.optimizer is Optimizer.ADAM:
        return _Adam(shapes, cfg.learning_rate)
    return _Sgd(cfg.learning_rate)


def train(
    graph: SparseGraph | PreparedGraph,
    x: np.ndarray | None,
    labeled,
    labels,
    cfg: TrainConfig = TrainConfig(),
    num_classes: int | None = None,
    init: GcnParams | None = None,
) -> GcnParams:
    """Fit a 2-layer GCN on the labeled nodes.

    Pass a :class:`PreparedGraph` (with ``x=None``) to reuse the normalized
    operator across calls. ``init`` warm-starts from existing weights; by
    default weights are Glorot-initialized from ``cfg.seed``.
    """
    prep = graph if isinstance(graph, PreparedGraph) else PreparedGraph(graph, x, cfg.norm)
    nodes, targets, c = _labeled_arrays(labeled, labels, num_classes)
    problem = _LabeledProblem(prep, nodes, targets, c)

    if init is None:
        params = init_params(prep.num_features, cfg.hidden_dim, c, cfg.seed)
    else:
        params = GcnParams(init.w0.copy(), init.w1.copy())
    opt = _make_optimizer(cfg, [params.w0.shape, params.w1.shape])
    for _ in range(cfg.epochs):
        loss, g0, g1 = problem.loss_and_grad(params.w0, params.w1, cfg.weight_decay)
        params.losses.append(loss)
        opt.step([params.w0, params.w1], [g0, g1])
    return params


def predict_proba(
    graph: SparseGraph | PreparedGraph,
    x: np.ndarray | None,
    params: GcnParams,
    norm=NormalizationKind.SYMMETRIC,
) -> np.ndarray:
    prep = graph if isinstance(graph, PreparedGraph) else PreparedGraph(graph, x, norm)
    if prep.num_features != params.w0.shape[0]:
        raise ValueError(
            f"feature dim {prep.num_features} does not match w0 rows {params.w0.shape[0]}"
        )
    h = np.maximum(prep.sx @ params.w0, 0.0)
    return softmax(np.asarray(prep.s @ h) @ params.w1)


def evaluate_accuracy(pred: np.ndarray, labels, eval_set) -> float:
    """Fraction of ``eval_set`` whose argmax class matches the label (ties → lowest class)."""
    nodes = np.array(sorted(int(v) for v in eval_set), dtype=np.int64)
    if nodes.size == 0:
        raise ValueError("eval_set is empty")
    if isinstance(labels, Mapping):
        truth = np.array([labels[int(v)] for v in nodes])
    else:
        truth = np.asarray(labels)[nodes]
    return float(np.mean(np.argmax(pred[nodes], axis=1) == truth))


# --- SGC fallback: logistic regression on propagated features ----------------


def train_sgc(
    xk: np.ndarray,
    labeled,
    labels,
    cfg: TrainConfig = TrainConfig(),
    num_classes: int | None = None,
) -> np.ndarray:
    """Multinomial logistic regression (no bias) on rows of ``X^(k)``; returns W (d x C)."""
    nodes, targets, c = _labeled_arrays(labeled, labels, num_classes)
    feats = np.asarray(xk, dtype=np.float64)[nodes]
    y = np.zeros((nodes.size, c))
    y[np.arange(nodes.size), targets] = 1.0
    rng = np.random.default_rng(cfg.seed)
    w = glorot_uniform(rng, feats.shape[1], c)
    opt = _make_optimizer(cfg, [w.shape])
    for _ in range(cfg.epochs):
        p = softmax(feats @ w)
        g = feats.T @ ((p - y) / nodes.size) + cfg.weight_decay * w
        opt.step([w], [g])
    return w


def predict_sgc(xk: np.ndarray, w: np.ndarray) -> np.ndarray:
    return softmax(np.asarray(xk, dtype=np.float64) @ w)
