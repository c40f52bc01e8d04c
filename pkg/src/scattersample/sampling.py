"""Node selection for active learning on graphs.

Entropy scoring, k-means++ clustering, diversified uncertainty selection and
the baselines it is compared against (random, max-uncertainty, FeatProp and
random round-robin), plus the multi-round loop that drives them.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .classifier import GcnParams, PreparedGraph, TrainConfig, predict_proba, train
from .graph import SparseGraph, propagate_features


def derive_seed(*parts: int) -> int:
    """Deterministic 64-bit seed from a tuple of non-negative ints."""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1, np.uint64)[0])


# --- uncertainty --------------------------------------------------------------


def entropy_rows(probs: np.ndarray) -> np.ndarray:
    """Shannon entropy (nats) of each row, with 0 log 0 taken as 0."""
    p = np.asarray(probs, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0.0, p * np.log(p), 0.0)
    ent = -terms.sum(axis=1)
    return np.clip(ent, 0.0, math.log(p.shape[1]) if p.shape[1] else 0.0)


def compute_entropy(probs: np.ndarray, nodes: Iterable[int]) -> dict[int, float]:
    nodes = [int(v) for v in nodes]
    n = probs.shape[0]
    for v in nodes:
        if not 0 <= v < n:
            raise ValueError(f"node {v} outside probability rows [0, {n})")
    ent = entropy_rows(probs[nodes]) if nodes else np.zeros(0)
    return dict(zip(nodes, ent.tolist()))


def top_entropy_candidates(probs: np.ndarray, pool: np.ndarray, size: int) -> np.ndarray:
    ent = entropy_rows(probs[pool])
    order = np.lexsort((pool, -ent))
    return pool[order[:size]]


def _as_pool(pool: Iterable[int]) -> np.ndarray:
    return np.array(sorted({int(v) for v in pool}), dtype=np.int64)


# --- k-means++ ----------------------------------------------------------------


@dataclass
class ClusterModel:
    k: int
    centers: np.ndarray
    assignment: np.ndarray
    inertia: float
    # inertia after seeding, then after each Lloyd assignment step
    inertia_history: list[float] = field(default_factory=list, repr=False)


def _sq_dists(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d = (
        np.einsum("ij,ij->i", points, points)[:, None]
        - 2.0 * points @ centers.T
        + np.einsum("ij,ij->i", centers, centers)[None, :]
    )
    return np.maximum(d, 0.0)


def _inertia(points: np.ndarray, centers: np.ndarray, assignment: np.ndarray) -> float:
    diff = points - centers[assignment]
    return float(np.einsum("ij,ij->", diff, diff))


def _seed_centers(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = ((points - points[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0.0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            # fewer distinct points than k: fall back to an unchosen index
            rest = np.setdiff1d(np.arange(n), chosen)
            idx = int(rng.choice(rest))
        chosen.append(idx)
        d2 = np.minimum(d2, ((points - points[idx]) ** 2).sum(axis=1))
    return points[chosen].copy()


def kmeans_pp(points: np.ndarray, k: int, seed: int = 0, max_iters: int = 100) -> ClusterModel:
    """k-means++ seeding followed by Lloyd iterations.

    Iterates until assignments stop changing or ``max_iters`` is reached. A
    cluster left empty by an update has its center moved onto the point
    farthest from its own center.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] == 0:
        raise ValueError(f"points must be a non-empty 2-D array, got shape {points.shape}")
    n = points.shape[0]
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds number of points {n}")
    if k == n:
        return ClusterModel(k, points.copy(), np.arange(n), 0.0, [0.0])

    rng = np.random.default_rng(seed)
    centers = _seed_centers(points, k, rng)
    assignment = np.argmin(_sq_dists(points, centers), axis=1)
    history = [_inertia(points, centers, assignment)]

    for _ in range(max_iters):
        counts = np.bincount(assignment, minlength=k)
        sums = np.zeros_like(centers)
        np.add.at(sums, assignment, points)
        nonempty = counts > 0
        centers[nonempty] = sums[nonempty] / counts[nonempty, None]
        empty = np.flatnonzero(~nonempty)
        if empty.size:
            dist_own = ((points - centers[assignment]) ** 2).sum(axis=1)
            for j in empty:
                far = int(np.argmax(dist_own))
                centers[j] = points[far]
                dist_own[far] = -1.0
        new_assignment = np.argmin(_sq_dists(points, centers), axis=1)
        history.append(_inertia(points, centers, new_assignment))
        if np.array_equal(new_assignment, assignment) and not empty.size:
            break
        assignment = new_assignment

    return ClusterModel(k, centers, assignment, history[-1], history)


def select_nearest_to_centers(
    points: np.ndarray, node_ids: Sequence[int], model: ClusterModel
) -> list[int]:
    """For each cluster, the member node nearest its center (ties → lowest node id)."""
    points = np.asarray(points, dtype=np.float64)
    node_ids = np.asarray(node_ids, dtype=np.int64)
    if points.shape[0] != node_ids.size or model.assignment.size != node_ids.size:
        raise ValueError("points, node_ids and cluster assignment must have equal length")
    if points.shape[1] != model.centers.shape[1]:
        raise ValueError("point and center dimensions differ")
    picked: list[int] = []
    seen: set[int] = set()
    for j in range(model.k):
        members = np.flatnonzero(model.assignment == j)
        if members.size == 0:
            continue
        d = ((points[members] - model.centers[j]) ** 2).sum(axis=1)
        for m in members[np.lexsort((node_ids[members], d))]:
            v = int(node_ids[m])
            if v not in seen:
                picked.append(v)
                seen.add(v)
                break
    return picked


# --- selectors ------------------------------------------------------------------


def candidate_size(b_t: int, r: float) -> int:
    # round first so float noise like 1.2 * 5 = 6.000000000000001 does not bump the ceiling
    return int(math.ceil(round(r * b_t, 9)))


def diverse_uncertainty_select(
    x_k: np.ndarray,
    probs: np.ndarray,
    pool: Iterable[int],
    b_t: int,
    r: float,
    seed: int = 0,
) -> list[int]:
    """Cluster the ⌈r·b_t⌉ most uncertain pool nodes into b_t groups; pick one per group.

    If clustering yields fewer than b_t distinct picks (duplicate feature
    rows), the remainder is filled from the candidate set in entropy order.
    """
    pool = _as_pool(pool)
    if pool.size == 0:
        raise ValueError("pool is empty")
    if b_t < 1:
        raise ValueError(f"b_t must be >= 1, got {b_t}")
    if r < 1:
        raise ValueError(f"redundancy r must be >= 1, got {r}")
    b = min(b_t, pool.size)
    cand = top_entropy_candidates(probs, pool, min(candidate_size(b, r), pool.size))
    feats = np.asarray(x_k)[cand]
    model = kmeans_pp(feats, b, seed)
    picked = select_nearest_to_centers(feats, cand, model)
    if len(picked) < b:
        taken = set(picked)
        picked += [int(v) for v in cand if int(v) not in taken][: b - len(picked)]
    return picked


def random_select(pool: Iterable[int], b: int, seed: int = 0) -> list[int]:
    pool = _as_pool(pool)
    b = max(0, min(b, pool.size))
    return [int(v) for v in np.random.default_rng(seed).permutation(pool)[:b]]


def max_uncertainty_select(probs: np.ndarray, pool: Iterable[int], b: int) -> list[int]:
    pool = _as_pool(pool)
    b = max(0, min(b, pool.size))
    return [int(v) for v in top_entropy_candidates(probs, pool, b)]


def featprop_select(x_k: np.ndarray, pool: Iterable[int], b: int, seed: int = 0) -> list[int]:
    pool = _as_pool(pool)
    if b > pool.size:
        raise ValueError(f"b={b} exceeds pool size {pool.size}")
    if b == 0:
        return []
    feats = np.asarray(x_k)[pool]
    return select_nearest_to_centers(feats, pool, kmeans_pp(feats, b, seed))


def round_robin_select(
    cluster_labels: Mapping[int, int] | np.ndarray,
    candidates: Iterable[int],
    b_t: int,
    seed: int = 0,
) -> list[int]:
    """Draw uniformly within clusters, visiting clusters smallest-first in turn.

    Each cluster's members are shuffled once up front, so with a single
    cluster this coincides with :func:`random_select` for the same seed.
    """
    cand = _as_pool(candidates)
    b_t = max(0, min(b_t, cand.size))
    rng = np.random.default_rng(seed)
    groups: dict[int, list[int]] = {}
    for v in cand:
        groups.setdefault(int(cluster_labels[int(v)]), []).append(int(v))
    order = sorted(groups, key=lambda c: (len(groups[c]), c))
    queues = [list(rng.permutation(groups[c])) for c in order]
    picked: list[int] = []
    while len(picked) < b_t:
        for q in queues:
            if q and len(picked) < b_t:
                picked.append(int(q.pop(0)))
    return picked


# --- budget, oracle and the active-learning loop ----------------------------------------


@dataclass(frozen=True)
class Budget:
    total: int
    initial: int
    rounds: int
    redundancy: float = 1.0

    def __post_init__(self):
        if self.initial < 0 or self.total < 0:
            raise ValueError("budgets must be non-negative")
        if self.initial > self.total:
            raise ValueError(f"initial budget {self.initial} exceeds total {self.total}")
        if self.rounds < 1:
            raise ValueError(f"rounds must be >= 1, got {self.rounds}")
        if self.redundancy < 1:
            raise ValueError(f"redundancy must be >= 1, got {self.redundancy}")

    def schedule(self) -> list[int]:
        """Per-round label counts: floor share per round, remainder in the last round."""
        remaining = self.total - self.initial
        share = remaining // self.rounds
        return [share] * (self.rounds - 1) + [remaining - share * (self.rounds - 1)]


class BudgetExceeded(RuntimeError):
    pass


class LabelOracle:
    """Reveals labels of training nodes on request and enforces the label budget."""

    def __init__(self, labels, train_nodes: Iterable[int], budget: int):
        self._labels = labels
        self.train_nodes = frozenset(int(v) for v in train_nodes)
        self.budget = int(budget)
        self.queried: list[int] = []
        self._seen: set[int] = set()

    @property
    def spent(self) -> int:
        return len(self.queried)

    def query(self, nodes: Iterable[int]) -> dict[int, int]:
        nodes = [int(v) for v in nodes]
        for v in nodes:
            if v not in self.train_nodes:
                raise ValueError(f"node {v} is not in the training set")
            if v in self._seen:
                raise ValueError(f"node {v} was already queried")
        if len(set(nodes)) != len(nodes):
            raise ValueError("duplicate nodes in one query")
        if self.spent + len(nodes) > self.budget:
            raise BudgetExceeded(
                f"query of {len(nodes)} labels exceeds budget ({self.spent}/{self.budget} spent)"
            )
        self.queried.extend(nodes)
        self._seen.update(nodes)
        return {v: int(self._labels[v]) for v in nodes}


class Sampler(str, enum.Enum):
    SCATTERSAMPLE = "scattersample"
    RANDOM = "random"
    MAXUNCERTAINTY = "maxuncertainty"
    FEATPROP = "featprop"
    ROUNDROBIN = "roundrobin"
    # uniform draw from the high-entropy candidate set (selector ablation)
    CANDIDATE_RANDOM = "candidaterandom"


class ClusteringTarget(str, enum.Enum):
    PROPAGATED = "propagated"
    RAW = "raw"
    MODEL_OUTPUT = "model_output"


@dataclass
class RoundRecord:
    round: int
    selected: list[int]
    entropies: list[float]
    n_labeled: int
    test_accuracy: float | None


def run_active_learning(
    graph: SparseGraph,
    x: np.ndarray,
    oracle: LabelOracle,
    budget: Budget,
    cfg: TrainConfig = TrainConfig(),
    k: int = 2,
    sampler: Sampler | str = Sampler.SCATTERSAMPLE,
    seed: int = 0,
    num_classes: int | None = None,
    evaluate: Callable[[np.ndarray], float] | None = None,
    clustering_target: ClusteringTarget | str = ClusteringTarget.PROPAGATED,
    warm_start: bool = False,
) -> tuple[GcnParams, list[RoundRecord]]:
    """Spend ``budget`` labels from ``oracle`` using ``sampler``; retrain after every round.

    ``evaluate`` maps the full probability matrix to a test score and is
    recorded in the history after each training. One-shot samplers (random,
    featprop) spend the whole budget in round 0.
    """
    sampler = Sampler(sampler)
    clustering_target = ClusteringTarget(clustering_target)
    train_pool = np.array(sorted(oracle.train_nodes), dtype=np.int64)
    total = min(budget.total, train_pool.size)
    if budget.initial < 1:
        raise ValueError("initial budget must be >= 1 so a model can be trained")
    if budget.initial > train_pool.size:
        raise ValueError(
            f"initial budget {budget.initial} exceeds training set size {train_pool.size}"
        )
    if oracle.budget - oracle.spent < total:
        raise ValueError(f"oracle allows {oracle.budget - oracle.spent} labels, run needs {total}")
    budget = Budget(total, budget.initial, budget.rounds, budget.redundancy)

    prep = PreparedGraph(graph, x, cfg.norm)
    x_k = propagate_features(graph, x, k, operator=prep.s)
    labeled: list[int] = []
    labels: dict[int, int] = {}
    history: list[RoundRecord] = []
    params: GcnParams | None = None

    def label_and_train(t, picked, entropies):
        nonlocal params
        labels.update(oracle.query(picked))
        labeled.extend(picked)
        params = train(prep, None, labeled, labels, cfg, num_classes,
                       init=params if warm_start else None)
        probs = predict_proba(prep, None, params)
        acc = evaluate(probs) if evaluate is not None else None
        history.append(RoundRecord(t, list(picked), entropies, len(labeled), acc))
        return probs

    if sampler is Sampler.RANDOM:
        label_and_train(0, random_select(train_pool, total, derive_seed(seed, 0)), [])
        return params, history
    if sampler is Sampler.FEATPROP:
        label_and_train(0, featprop_select(x_k, train_pool, total, derive_seed(seed, 0)), [])
        return params, history

    # initial sampling spreads B0 labels over the propagated-feature space
    init_model = kmeans_pp(x_k[train_pool], budget.initial, derive_seed(seed, 0))
    init_pick = select_nearest_to_centers(x_k[train_pool], train_pool, init_model)
    if len(init_pick) < budget.initial:
        taken = set(init_pick)
        init_pick += [int(v) for v in train_pool if int(v) not in taken][
            : budget.initial - len(init_pick)
        ]
    init_clusters = dict(zip(train_pool.tolist(), init_model.assignment.tolist()))
    probs = label_and_train(0, init_pick, [])

    if clustering_target is ClusteringTarget.RAW:
        target_feats = np.asarray(x, dtype=np.float64)
    else:
        target_feats = x_k

    for t, b_t in enumerate(budget.schedule(), start=1):
        in_s = set(labeled)
        pool = np.array([v for v in train_pool if int(v) not in in_s], dtype=np.int64)
        b_t = min(b_t, total - len(labeled), pool.size)
        if b_t <= 0:
            continue
        round_seed = derive_seed(seed, t)
        if sampler is Sampler.SCATTERSAMPLE:
            feats = probs if clustering_target is ClusteringTarget.MODEL_OUTPUT else target_feats
            picked = diverse_uncertainty_select(feats, probs, pool, b_t, budget.redundancy, round_seed)
        elif sampler is Sampler.MAXUNCERTAINTY:
            picked = max_uncertainty_select(probs, pool, b_t)
        else:
            cand = top_entropy_candidates(probs, pool, min(candidate_size(b_t, budget.redundancy), pool.size))
            if sampler is Sampler.ROUNDROBIN:
                picked = round_robin_select(init_clusters, cand, b_t, round_seed)
            else:
                picked = random_select(cand, b_t, round_seed)
        ent = entropy_rows(probs[picked]).tolist()
        probs = label_and_train(t, picked, ent)

    return params, history


def run_scattersample(
    graph: SparseGraph,
    x: np.ndarray,
    oracle: LabelOracle,
    budget: Budget,
    cfg: TrainConfig = TrainConfig(),
    k: int = 2,
    **kwargs,
) -> tuple[GcnParams, list[RoundRecord]]:
    """Initial k-means++ spread over all training nodes, then diversified uncertainty rounds."""
    return run_active_learning(graph, x, oracle, budget, cfg, k, Sampler.SCATTERSAMPLE, **kwargs)


HISTORY_HEADER = ["round", "sampler", "seed", "n_labeled", "node_ids", "test_accuracy"]


def history_rows(history: Sequence[RoundRecord], sampler: str, seed: int) -> list[list[str]]:
    rows = []
    for rec in history:
        acc = "" if rec.test_accuracy is None else f"{rec.test_accuracy:.6f}"
        rows.append([
            str(rec.round), str(sampler), str(seed), str(rec.n_labeled),
            ";".join(str(v) for v in rec.selected), acc,
        ])
    return rows
