import math

import numpy as np
import pytest

from emgtcn import nn, tcn
from emgtcn.nn import TrainConfig
from emgtcn.signal_pipeline import build_sequences, sequence_labels
from emgtcn.tcn import TcnParams

from oracles import central_diff, conv_oracle, head_oracle, rel_err


def random_params(rng, M=3, d=4, F=2, C=5, scale=1.0):
    return TcnParams(rng.normal(size=(M, d, F)) * scale, rng.normal(size=M) * scale,
                     rng.normal(size=(C, M)) * scale, rng.normal(size=C) * scale)


class TestForward:
    def test_identity_filter(self):
        p = TcnParams(np.ones((1, 1, 1)), np.zeros(1), np.ones((2, 1)), np.zeros(2))
        np.testing.assert_array_equal(tcn.conv_forward(p, np.array([[1.0, -2.0, 3.0]])),
                                      [[1.0, 0.0, 3.0]])

    def test_zero_input(self, rng):
        p = random_params(rng)
        E = tcn.conv_forward(p, np.zeros((2, 6)))
        np.testing.assert_array_equal(E, np.repeat(np.maximum(p.b, 0)[:, None], 6, axis=1))

    def test_conv_oracle(self, rng):
        p = random_params(rng, M=3, d=4, F=2)
        X = rng.normal(size=(2, 7))
        np.testing.assert_allclose(tcn.conv_forward(p, X), conv_oracle(p.W, p.b, X),
                                   rtol=0, atol=1e-12)

    def test_uniform_head(self, rng):
        p = random_params(rng, C=27)
        p.U[:] = 0
        p.c[:] = 0
        y = tcn.head_forward(p, rng.normal(size=(3, 9)))
        np.testing.assert_allclose(y, 1 / 27, atol=1e-15)

    def test_head_normalized_and_shift_invariant(self, rng):
        p = random_params(rng)
        E = np.abs(rng.normal(size=(3, 9)))
        y = tcn.head_forward(p, E)
        np.testing.assert_allclose(y.sum(axis=0), 1.0, atol=1e-9)
        q = p.copy()
        q.c += 123.0
        np.testing.assert_allclose(tcn.head_forward(q, E), y, atol=1e-12)
        np.testing.assert_allclose(y, head_oracle(p.U, p.c, E), atol=1e-12)

    def test_shapes_and_determinism(self, rng):
        p = TcnParams.init(8, 27, 64, 25, rng)
        X = rng.normal(size=(8, 60))
        E, y = tcn.forward(p, X)
        assert E.shape == (64, 60) and y.shape == (27, 60)
        np.testing.assert_array_equal(tcn.forward(p, X)[1], y)
        assert tcn.forward(p, rng.normal(size=(4, 8, 60)))[1].shape == (4, 27, 60)

    def test_degenerate_net_closed_form(self, rng):
        # M=1, d=1: y[:, t] = softmax(U * relu(b + w.x_t) + c)
        p = random_params(rng, M=1, d=1, F=3, C=4)
        X = rng.normal(size=(3, 6))
        h = np.maximum(p.b[0] + p.W[0, 0] @ X, 0)
        z = p.U[:, :1] * h[None] + p.c[:, None]
        expect = np.exp(z) / np.exp(z).sum(axis=0)
        np.testing.assert_allclose(tcn.forward(p, X)[1], expect, atol=1e-12)

    def test_causal(self, rng):
        p = random_params(rng)
        X = rng.normal(size=(2, 12))
        Y = X.copy()
        Y[:, 8:] += rng.normal(size=(2, 4))
        np.testing.assert_array_equal(tcn.forward(p, X)[1][:, :8], tcn.forward(p, Y)[1][:, :8])

    def test_shape_errors(self, rng):
        p = random_params(rng)
        with pytest.raises(ValueError):
            tcn.conv_forward(p, np.zeros((3, 5)))
        with pytest.raises(ValueError):
            tcn.head_forward(p, np.zeros((4, 5)))


class TestLoss:
    def test_perfect(self):
        y = np.full((3, 4), 1e-300)
        y[1] = 1.0
        assert tcn.loss(y, np.ones(4, dtype=int)) < 1e-12

    def test_uniform(self):
        assert math.isclose(tcn.loss(np.full((27, 10), 1 / 27), np.zeros(10, dtype=int)),
                            math.log(27), rel_tol=1e-12)

    def test_oracle(self, rng):
        z = rng.normal(size=(5, 8))
        y = np.exp(z) / np.exp(z).sum(axis=0)
        lab = rng.integers(0, 5, 8)
        mask = rng.random(8) > 0.3
        expect = sum(-math.log(y[lab[t], t]) for t in range(8) if mask[t]) / mask.sum()
        assert abs(tcn.loss(y, lab, mask) - expect) < 1e-12

    def test_empty_mask(self):
        with pytest.raises(ValueError):
            tcn.loss(np.full((3, 4), 1 / 3), np.zeros(4, dtype=int), np.zeros(4))

    def test_padding_labels_ignored(self):
        y = np.full((3, 4), 1 / 3)
        y[:, 0] = [1e-300, 1e-300, 1.0]
        assert math.isclose(tcn.loss(y, np.array([-1, 0, 0, 0])), math.log(3))


class TestGradient:
    def check(self, rng, B=None):
        p = random_params(rng, M=4, d=3, F=2, C=3)
        shape = (2, 5) if B is None else (B, 2, 5)
        X = rng.normal(size=shape)
        y = rng.integers(0, 3, size=shape[:-2] + (5,))
        mask = rng.random(y.shape) > 0.2
        mask.flat[0] = True
        _, g = tcn.loss_and_grad(p, X, y, mask)
        num = central_diff(lambda: tcn.loss(tcn.forward(p, X)[1], y, mask), p.arrays())
        for a, n in zip(g.arrays(), num):
            assert rel_err(a, n).max() < 1e-4

    def test_finite_differences(self, rng):
        for _ in range(5):
            self.check(rng)
        self.check(rng, B=3)

    def test_loss_value_matches(self, rng):
        p = random_params(rng, M=4, d=3, F=2, C=3)
        X = rng.normal(size=(2, 5))
        y = rng.integers(0, 3, 5)
        assert math.isclose(tcn.loss_and_grad(p, X, y)[0], tcn.loss(tcn.forward(p, X)[1], y),
                            rel_tol=1e-12)

    def test_bias_gradient_closed_form(self, rng):
        p = random_params(rng, C=4)
        X = rng.normal(size=(2, 6))
        y = rng.integers(0, 4, 6)
        probs = tcn.forward(p, X)[1]
        onehot = np.eye(4)[y].T
        np.testing.assert_allclose(tcn.backward(p, X, y).c, (probs - onehot).sum(axis=1) / 6,
                                   atol=1e-14)

    def test_converged_gradient_vanishes(self, rng):
        p = random_params(rng, C=3)
        X = rng.normal(size=(2, 6))
        p.U *= 0
        y = rng.integers(0, 3, 6)
        p.c[:] = -50.0
        p.c[1] = 50.0
        g = tcn.backward(p, X, np.ones(6, dtype=int))
        assert max(np.abs(a).max() for a in g.arrays()) < 1e-30
        del y


def separable_dataset(rng, n=200, F=8, T=10, C=3):
    """Each class owns a disjoint MAV range on every feature."""
    y = rng.integers(0, C, n)
    X = (y[:, None, None] + rng.uniform(0.1, 0.9, size=(n, F, T))) * 1.0
    labels = np.repeat(y[:, None], T, axis=1)
    return X, labels


class TestTraining:
    def test_epochs_zero_returns_init(self, rng):
        X, y = separable_dataset(rng, 20)
        init = TcnParams.init(8, 3, 4, 3, np.random.default_rng(5))
        out = tcn.train(X, y, TrainConfig(epochs=0), n_classes=3, n_filters=4, filter_len=3,
                        init=init)
        for a, b in zip(out.arrays(), init.arrays()):
            np.testing.assert_array_equal(a, b)

    def test_deterministic(self, rng):
        X, y = separable_dataset(rng, 40)
        cfg = TrainConfig(epochs=3, seed=7)
        a = tcn.train(X, y, cfg, n_classes=3, n_filters=4, filter_len=3)
        b = tcn.train(X, y, cfg, n_classes=3, n_filters=4, filter_len=3)
        for u, v in zip(a.arrays(), b.arrays()):
            np.testing.assert_array_equal(u, v)
        c = tcn.train(X, y, TrainConfig(epochs=3, seed=8), n_classes=3, n_filters=4, filter_len=3)
        assert not np.array_equal(a.W, c.W)

    def test_separable(self, rng):
        X, y = separable_dataset(rng, 200)
        p = tcn.train(X, y, TrainConfig(epochs=60, learning_rate=1e-2, seed=0),
                      n_classes=3, n_filters=8, filter_len=3)
        pred = tcn.forward(p, X)[1].argmax(axis=1)
        assert np.mean(pred == y) >= 0.99

    def test_final_column_only(self, rng):
        X, y = separable_dataset(rng, 60)
        hist = []
        tcn.train(X, y[:, -1], TrainConfig(epochs=2, final_column_only=True),
                  n_classes=3, n_filters=4, filter_len=3, history=hist)
        assert len(hist) == 2 and all(np.isfinite(hist))

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence_is_reported(self, rng):
        X, y = separable_dataset(rng, 40)
        with pytest.raises(nn.TrainingDivergedError, match="learning rate"):
            tcn.train(X * 1e150, y, TrainConfig(epochs=5, learning_rate=1e6, precision="float64",
                                               optimizer="sgd"),
                      n_classes=3, n_filters=4, filter_len=3)

    def test_label_shape_mismatch(self, rng):
        X, y = separable_dataset(rng, 10)
        with pytest.raises(ValueError):
            tcn.train(X, y[:, :3], TrainConfig(epochs=1), n_classes=3)


class TestStreaming:
    def test_incremental_equals_scratch(self, rng):
        p = random_params(rng, M=5, d=4, F=3, C=6)
        f = rng.normal(size=(40, 3))
        full = tcn.predict_proba_stream(p, f, T=7, chunk=9)
        for t in (0, 3, 6, 7, 20, 39):
            prefix = tcn.predict_proba_stream(p, f[:t + 1], T=7)
            np.testing.assert_array_equal(prefix[t], full[t])
            seq = build_sequences(f[:t + 1], 7)[-1]
            np.testing.assert_allclose(tcn.forward(p, seq)[1][:, -1], full[t], atol=1e-15)

    def test_constant_features(self, rng):
        p = random_params(rng, M=5, d=4, F=3, C=6)
        pred = tcn.predict_stream(p, np.ones((30, 3)), T=10)
        assert len(pred) == 30
        assert len(set(pred[3:].tolist())) == 1

    def test_empty(self, rng):
        assert len(tcn.predict_stream(random_params(rng), np.empty((0, 2)), 5)) == 0


def test_sequence_labels_feed_training(rng):
    f = rng.normal(size=(30, 8))
    y = rng.integers(0, 27, 30)
    p = tcn.train(build_sequences(f, 6), sequence_labels(y, 6), TrainConfig(epochs=1),
                  n_filters=4, filter_len=3)
    assert p.W.dtype == np.float64


class TestProperties:
    def test_extreme_logits(self, rng):
        p = random_params(rng, C=6)
        p.U *= 1e3
        p.c = rng.uniform(-1e3, 1e3, 6)
        y = tcn.head_forward(p, np.abs(rng.normal(size=(3, 8))))
        assert np.all(np.isfinite(y))
        np.testing.assert_allclose(y.sum(axis=0), 1.0, atol=1e-9)

    def test_feature_map_nonnegative(self, rng):
        p = random_params(rng, M=6)
        assert tcn.conv_forward(p, rng.normal(size=(5, 2, 9)) * 10).min() >= 0

    def test_batch_equals_single(self, rng):
        p = random_params(rng)
        X = rng.normal(size=(4, 2, 7))
        batch = tcn.forward(p, X)[1]
        for i in range(4):
            np.testing.assert_allclose(batch[i], tcn.forward(p, X[i])[1], atol=1e-14)

    def test_loss_decreases_on_fixed_batch(self, rng):
        X, y = separable_dataset(rng, 32)
        hist = []
        tcn.train(X, y, TrainConfig(epochs=30, batch_size=32, learning_rate=1e-3,
                                    precision="float64"),
                  n_classes=3, n_filters=4, filter_len=3, history=hist)
        ups = [b / a - 1 for a, b in zip(hist, hist[1:]) if b > a]
        assert hist[-1] < hist[0]
        assert all(u <= 0.05 for u in ups)
