import numpy as np
import pytest

from scattersample.classifier import (
    GcnParams,
    PreparedGraph,
    TrainConfig,
    evaluate_accuracy,
    init_params,
    loss_and_grad,
    predict_proba,
    predict_sgc,
    train,
    train_sgc,
)
from scattersample.datasets import make_sbm_dataset
from scattersample.graph import build_graph, propagate_features


@pytest.fixture
def separable():
    g = build_graph([], 2)
    x = np.array([[1.0, 0.0], [0.0, 1.0]])
    return g, x, {0: 0, 1: 1}


def random_problem(seed=0, n=8, d=5, c=3):
    rng = np.random.default_rng(seed)
    edges = [(i, int(j)) for i in range(n) for j in rng.choice(n, 2, replace=False)]
    g = build_graph(edges, n)
    x = rng.normal(size=(n, d))
    labels = rng.integers(0, c, n)
    return g, x, labels


def test_separable_training_accuracy(separable):
    g, x, labels = separable
    params = train(g, x, [0, 1], labels, TrainConfig(epochs=200, hidden_dim=8))
    probs = predict_proba(g, x, params)
    assert evaluate_accuracy(probs, labels, [0, 1]) == 1.0
    assert np.argmax(probs, axis=1).tolist() == [0, 1]


def test_deterministic_for_fixed_seed():
    g, x, labels = random_problem()
    cfg = TrainConfig(epochs=30, hidden_dim=6, seed=11)
    a = train(g, x, range(6), labels, cfg, num_classes=3)
    b = train(g, x, range(6), labels, cfg, num_classes=3)
    assert np.array_equal(a.w0, b.w0) and np.array_equal(a.w1, b.w1)


def test_loss_decreases():
    g, x, labels = random_problem(seed=3)
    params = train(g, x, range(8), labels, TrainConfig(epochs=100, hidden_dim=8), num_classes=3)
    assert params.losses[-1] <= params.losses[0]


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("weight_decay", [0.0, 5e-4])
def test_gradient_matches_central_differences(seed, weight_decay):
    g, x, labels = random_problem(seed=seed)
    prep = PreparedGraph(g, x)
    labeled = [0, 2, 3, 5, 7]
    params = init_params(x.shape[1], 4, 3, seed)
    _, g0, g1 = loss_and_grad(prep, labeled, labels, params, weight_decay)
    step = 1e-5
    for w, grad in ((params.w0, g0), (params.w1, g1)):
        fd = np.zeros_like(w)
        for idx in np.ndindex(w.shape):
            orig = w[idx]
            w[idx] = orig + step
            up, _, _ = loss_and_grad(prep, labeled, labels, params, weight_decay)
            w[idx] = orig - step
            down, _, _ = loss_and_grad(prep, labeled, labels, params, weight_decay)
            w[idx] = orig
            fd[idx] = (up - down) / (2 * step)
        rel = np.abs(grad - fd) / np.maximum(np.maximum(np.abs(grad), np.abs(fd)), 1e-7)
        assert rel.max() < 1e-4


def test_zero_weights_uniform():
    g, x, _ = random_problem()
    params = GcnParams(np.zeros((5, 4)), np.zeros((4, 3)))
    np.testing.assert_allclose(predict_proba(g, x, params), 1 / 3)


def test_rows_sum_to_one():
    g, x, _ = random_problem()
    params = init_params(5, 4, 3, seed=9)
    probs = predict_proba(g, x, params)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)
    assert probs.min() >= 0 and probs.max() <= 1


def test_softmax_shift_invariance():
    # W1 + v 1^T shifts every logit of a row by the same amount
    g, x, _ = random_problem()
    params = init_params(5, 4, 3, seed=2)
    v = np.random.default_rng(0).normal(size=(4, 1))
    shifted = GcnParams(params.w0, params.w1 + v @ np.ones((1, 3)))
    np.testing.assert_allclose(predict_proba(g, x, params), predict_proba(g, x, shifted), atol=1e-12)


def test_predict_dimension_mismatch():
    g, x, _ = random_problem()
    with pytest.raises(ValueError, match="feature dim"):
        predict_proba(g, x, init_params(6, 4, 3, 0))


def test_train_rejects_bad_inputs():
    g, x, labels = random_problem()
    with pytest.raises(ValueError, match="empty"):
        train(g, x, [], labels)
    with pytest.raises(ValueError, match="outside"):
        train(g, x, [0], {0: 5}, num_classes=3)


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0)
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)


def test_sgd_optimizer_reduces_loss():
    g, x, labels = random_problem(seed=4)
    params = train(g, x, range(8), labels, TrainConfig(epochs=50, optimizer="sgd", learning_rate=0.1), num_classes=3)
    assert params.losses[-1] < params.losses[0]


def test_warm_start_continues_from_init():
    g, x, labels = random_problem()
    cfg = TrainConfig(epochs=20, hidden_dim=4)
    first = train(g, x, range(8), labels, cfg, num_classes=3)
    second = train(g, x, range(8), labels, cfg, num_classes=3, init=first)
    assert second.losses[0] == pytest.approx(first.losses[-1], rel=0.1)


def test_params_roundtrip(tmp_path):
    params = GcnParams(np.arange(6.0).reshape(3, 2) / 4, np.arange(4.0).reshape(2, 2) / 2)
    params.save(str(tmp_path / "m"))
    back = GcnParams.load(str(tmp_path / "m"))
    assert np.array_equal(back.w0, params.w0) and np.array_equal(back.w1, params.w1)


class TestEvaluateAccuracy:
    labels = {0: 0, 1: 1, 2: 2, 3: 0}

    def test_all_right(self):
        pred = np.eye(3)[[0, 1, 2, 0]]
        assert evaluate_accuracy(pred, self.labels, range(4)) == 1.0

    def test_all_wrong(self):
        pred = np.eye(3)[[1, 2, 0, 2]]
        assert evaluate_accuracy(pred, self.labels, range(4)) == 0.0

    def test_half(self):
        pred = np.eye(3)[[0, 1, 0, 1]]
        assert evaluate_accuracy(pred, self.labels, range(4)) == 0.5

    def test_tie_goes_to_lowest_class(self):
        pred = np.array([[0.5, 0.5, 0.0]])
        assert evaluate_accuracy(pred, {0: 0}, [0]) == 1.0

    def test_empty(self):
        with pytest.raises(ValueError):
            evaluate_accuracy(np.eye(3), self.labels, [])


def test_sgc_fallback_on_two_block_sbm():
    data = make_sbm_dataset(num_classes=2, nodes_per_class=60, num_features=8, p_in=0.1,
                            p_out=0.005, feature_noise=0.5, seed=1)
    xk = propagate_features(data.graph, data.features, 2)
    labeled = list(range(0, 120, 3))
    w = train_sgc(xk, labeled, data.labels, TrainConfig(epochs=200), num_classes=2)
    assert evaluate_accuracy(predict_sgc(xk, w), data.labels, labeled) >= 0.95
