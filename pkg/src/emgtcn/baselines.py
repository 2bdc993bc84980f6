"""Frame-by-frame reference classifiers: k-NN and a small ReLU MLP.

Both consume single feature vectors with no temporal context.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from . import nn
from .nn import TrainConfig


@dataclass
class KnnModel:
    X: np.ndarray
    y: np.ndarray
    k: int = 3

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=np.int64)
        if len(self.X) == 0:
            raise ValueError("k-NN needs a non-empty training set")
        if not 1 <= self.k <= len(self.X):
            raise ValueError(f"k={self.k} must lie in [1, {len(self.X)}]")


def knn_fit(features, labels, k: int = 3) -> KnnModel:
    """Nothing to fit: the model is the training set itself."""
    return KnnModel(np.array(features, dtype=float), np.array(labels), k)


def _vote(dists: np.ndarray, labels: np.ndarray, k: int) -> int:
    # stable sort keeps training order among equal distances
    kth = np.partition(dists, k - 1)[k - 1]
    cand = np.flatnonzero(dists <= kth)
    cand = cand[np.argsort(dists[cand], kind="stable")][:k]
    classes, counts = np.unique(labels[cand], return_counts=True)
    tied = classes[counts == counts.max()]
    if len(tied) == 1:
        return int(tied[0])
    # tied vote: class whose nearest member comes first in the neighbour list
    for j in cand:
        if labels[j] in tied:
            return int(labels[j])
    raise AssertionError("unreachable")


def knn_predict(model: KnnModel, x, chunk: int = 512):
    """Majority class of the ``k`` nearest training points (Euclidean).

    ``x`` may be one feature vector or an ``(n, K)`` matrix of queries.
    """
    q = np.asarray(x, dtype=float)
    single = q.ndim == 1
    q = np.atleast_2d(q)
    out = np.empty(len(q), dtype=np.int64)
    for i in range(0, len(q), chunk):
        D = cdist(q[i:i + chunk], model.X, "sqeuclidean")
        for j, row in enumerate(D):
            out[i + j] = _vote(row, model.y, model.k)
    return int(out[0]) if single else out


@dataclass
class MlpModel:
    weights: list = field(default_factory=list)  # (out, in) matrices
    biases: list = field(default_factory=list)

    def __post_init__(self):
        for a, b in zip(self.weights[:-1], self.weights[1:]):
            if a.shape[0] != b.shape[1]:
                raise ValueError("MLP layer shapes do not chain")

    @property
    def sizes(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    def arrays(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]

    @classmethod
    def init(cls, n_in: int, n_classes: int = 27, hidden=(5, 5, 5),
             rng: np.random.Generator | None = None) -> "MlpModel":
        rng = np.random.default_rng(0) if rng is None else rng
        sizes = [n_in, *hidden, n_classes]
        Ws = [nn.glorot_uniform(rng, (o, i), i, o) for i, o in zip(sizes[:-1], sizes[1:])]
        return cls(Ws, [np.zeros(o) for o in sizes[1:]])


def mlp_forward(model: MlpModel, X):
    """Softmax outputs ``(n, C)`` plus cached activations and pre-activations."""
    a = np.atleast_2d(np.asarray(X, dtype=float))
    acts, pres = [a], []
    for i, (W, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ W.T + b
        pres.append(z)
        a = nn.relu(z) if i < len(model.weights) - 1 else z
        acts.append(a)
    return nn.softmax(acts[-1], axis=1), acts, pres


def mlp_predict_proba(model: MlpModel, X) -> np.ndarray:
    return mlp_forward(model, X)[0]


def mlp_predict(model: MlpModel, x):
    probs = mlp_predict_proba(model, x)
    out = np.argmax(probs, axis=1)
    return int(out[0]) if np.asarray(x).ndim == 1 else out


def mlp_loss(model: MlpModel, X, labels) -> float:
    return nn.cross_entropy(mlp_predict_proba(model, X), labels, class_axis=1)


def mlp_loss_and_grad(model: MlpModel, X, labels) -> tuple[float, list[np.ndarray]]:
    """Mean cross-entropy and gradients ordered like :meth:`MlpModel.arrays`."""
    y = np.asarray(labels, dtype=np.int64).reshape(-1)
    probs, acts, pres = mlp_forward(model, X)
    w = nn.loss_weights(y)
    value = nn.nll_from_logits(acts[-1], y, w, class_axis=1)
    delta = nn.softmax_xent_grad(probs, y, w, class_axis=1)
    n_layers = len(model.weights)
    gW, gb = [None] * n_layers, [None] * n_layers
    for i in reversed(range(n_layers)):
        gW[i] = delta.T @ acts[i]
        gb[i] = delta.sum(axis=0)
        if i:
            delta = (delta @ model.weights[i]) * (pres[i - 1] > 0)
    return value, gW + gb


def mlp_train(features, labels, config: TrainConfig | None = None, *,
              n_classes: int = 27, hidden=(5, 5, 5),
              history: list | None = None) -> MlpModel:
    config = TrainConfig() if config is None else config
    X = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=np.int64)
    if X.ndim != 2 or len(X) == 0:
        raise ValueError("need a non-empty (N, K) feature matrix")
    init_rng, shuffle_rng = nn.rng_streams(config.seed)
    model = MlpModel.init(X.shape[1], n_classes, hidden, rng=init_rng)
    # the net is tiny; it trains in float64 regardless of config.precision
    opt = nn.make_optimizer(model.arrays(), config)
    for epoch in range(config.epochs):
        total = 0.0
        for idx in nn.minibatches(len(X), config.batch_size, shuffle_rng):
            value, grads = mlp_loss_and_grad(model, X[idx], y[idx])
            nn.check_finite(value, epoch, config.learning_rate)
            opt.step(grads)
            total += value * len(idx)
        if history is not None:
            history.append(total / len(X))
    return model
