"""Minimal feed-forward network engine: forward pass, backprop, Adam, training.

Networks are plain float64 numpy parameter lists. Hidden layers use ReLU,
the output layer is linear. Everything is seeded and deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


class TrainingDiverged(RuntimeError):
    """Raised when a loss becomes non-finite during training."""


@dataclass
class Mlp:
    """Fully connected network; weights[i] has shape (out_i, in_i)."""

    weights: list
    biases: list

    @property
    def layer_sizes(self) -> list:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @staticmethod
    def init(layer_sizes, rng: np.random.Generator) -> "Mlp":
        """He-style uniform initialization scaled by fan-in."""
        weights, biases = [], []
        for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            bound = np.sqrt(6.0 / n_in)
            weights.append(rng.uniform(-bound, bound, size=(n_out, n_in)))
            biases.append(np.zeros(n_out))
        return Mlp(weights, biases)

    @staticmethod
    def zeros(layer_sizes) -> "Mlp":
        weights = [np.zeros((n_out, n_in)) for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:])]
        biases = [np.zeros(n_out) for n_out in layer_sizes[1:]]
        return Mlp(weights, biases)

    def copy(self) -> "Mlp":
        return Mlp([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def save(self, path) -> None:
        blob = {
            "layer_sizes": self.layer_sizes,
            "weights": [[f.hex() for f in w.ravel()] for w in self.weights],
            "biases": [[f.hex() for f in b] for b in self.biases],
        }
        with open(path, "w") as fh:
            json.dump(blob, fh)

    @staticmethod
    def load(path) -> "Mlp":
        with open(path) as fh:
            blob = json.load(fh)
        sizes = blob["layer_sizes"]
        weights, biases = [], []
        for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            w = np.array([float.fromhex(h) for h in blob["weights"][i]]).reshape(n_out, n_in)
            b = np.array([float.fromhex(h) for h in blob["biases"][i]])
            weights.append(w)
            biases.append(b)
        return Mlp(weights, biases)


def forward(net: Mlp, x: np.ndarray) -> np.ndarray:
    """Forward pass; accepts (d,) or (N, d), returns matching shape."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    h = x[None, :] if single else x
    if h.shape[1] != net.weights[0].shape[1]:
        raise ValueError(f"input width {h.shape[1]} != layer width {net.weights[0].shape[1]}")
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = h @ w.T + b
        if i != last:
            np.maximum(h, 0.0, out=h)
    return h[0] if single else h


def mse_loss(net: Mlp, x: np.ndarray, y: np.ndarray) -> float:
    pred = forward(net, x)
    y = np.asarray(y, dtype=np.float64).reshape(pred.shape)
    return float(np.mean((pred - y) ** 2))


def mse_gradient(net: Mlp, x: np.ndarray, y: np.ndarray):
    """Exact MSE gradient via backprop. Returns (grad_weights, grad_biases, loss)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    n = x.shape[0]
    if n == 0:
        raise ValueError("empty batch")

    # forward, keeping pre-activations
    activations = [x]
    h = x
    last = len(net.weights) - 1
    pre = []
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ w.T + b
        pre.append(z)
        h = z if i == last else np.maximum(z, 0.0)
        activations.append(h)

    y = np.asarray(y, dtype=np.float64).reshape(h.shape)
    loss = float(np.mean((h - y) ** 2))
    delta = 2.0 * (h - y) / (n * h.shape[1])

    grad_w = [None] * len(net.weights)
    grad_b = [None] * len(net.biases)
    for i in range(last, -1, -1):
        grad_w[i] = delta.T @ activations[i]
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ net.weights[i]) * (pre[i - 1] > 0.0)
    return grad_w, grad_b, loss


@dataclass
class AdamState:
    m_w: list
    v_w: list
    m_b: list
    v_b: list
    t: int = 0

    @staticmethod
    def for_net(net: Mlp) -> "AdamState":
        return AdamState(
            [np.zeros_like(w) for w in net.weights],
            [np.zeros_like(w) for w in net.weights],
            [np.zeros_like(b) for b in net.biases],
            [np.zeros_like(b) for b in net.biases],
        )


def adam_step(net: Mlp, grad_w, grad_b, state: AdamState, learning_rate: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
    """One in-place Adam update with bias-corrected moments."""
    state.t += 1
    c1 = 1.0 - beta1**state.t
    c2 = 1.0 - beta2**state.t
    for params, grads, ms, vs in (
        (net.weights, grad_w, state.m_w, state.v_w),
        (net.biases, grad_b, state.m_b, state.v_b),
    ):
        for p, g, m, v in zip(params, grads, ms, vs):
            m *= beta1
            m += (1.0 - beta1) * g
            v *= beta2
            v += (1.0 - beta2) * g**2
            p -= learning_rate * (m / c1) / (np.sqrt(v / c2) + eps)


@dataclass
class TrainConfig:
    learning_rate: float = 0.01
    batch_size: int = 100
    patience_epochs: int = 100
    max_epochs: int = 300
    checkpoint_epochs: tuple = (1, 10, 100)
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1 or self.patience_epochs < 1 or self.max_epochs < 1:
            raise ValueError("batch_size, patience_epochs and max_epochs must be >= 1")


@dataclass
class TrainResult:
    best_params: Mlp
    checkpoints: dict
    train_losses: list = field(default_factory=list)
    val_losses: list = field(default_factory=list)
    stopped_epoch: int = 0
    best_epoch: int = 0
    best_val_loss: float = np.inf


def _epoch_updates(net, x, y, order, batch_size, lr, state):
    for start in range(0, len(order), batch_size):
        idx = order[start:start + batch_size]
        gw, gb, loss = mse_gradient(net, x[idx], y[idx])
        if not np.isfinite(loss):
            raise TrainingDiverged(f"non-finite mini-batch loss {loss}")
        adam_step(net, gw, gb, state, lr)


def train(net: Mlp, x_train, y_train, x_val, y_val, cfg: TrainConfig) -> TrainResult:
    """Mini-batch Adam with early stopping on validation loss.

    Snapshots parameters after each epoch listed in cfg.checkpoint_epochs and
    at every new validation-loss minimum. Stops once no strict improvement
    has been seen for cfg.patience_epochs epochs.
    """
    x_train = np.asarray(x_train, dtype=np.float64)
    y_train = np.asarray(y_train, dtype=np.float64)
    if len(x_train) == 0 or len(np.asarray(x_val)) == 0:
        raise ValueError("train and validation sets must be non-empty")
    rng = np.random.default_rng(cfg.seed)
    state = AdamState.for_net(net)
    result = TrainResult(best_params=net.copy(), checkpoints={})

    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(len(x_train))
        _epoch_updates(net, x_train, y_train, order, cfg.batch_size, cfg.learning_rate, state)

        train_loss = mse_loss(net, x_train, y_train)
        val_loss = mse_loss(net, x_val, y_val)
        if not (np.isfinite(train_loss) and np.isfinite(val_loss)):
            raise TrainingDiverged(f"non-finite loss at epoch {epoch}")
        result.train_losses.append(train_loss)
        result.val_losses.append(val_loss)
        if epoch in cfg.checkpoint_epochs:
            result.checkpoints[epoch] = net.copy()
        if val_loss < result.best_val_loss:
            result.best_val_loss = val_loss
            result.best_epoch = epoch
            result.best_params = net.copy()
        result.stopped_epoch = epoch
        if epoch - result.best_epoch >= cfg.patience_epochs:
            break
    return result


def fit(net: Mlp, x, y, epochs: int, batch_size: int, learning_rate: float, seed: int) -> Mlp:
    """Fixed-budget mini-batch Adam fit (no validation, no early stopping)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    rng = np.random.default_rng(seed)
    state = AdamState.for_net(net)
    for _ in range(epochs):
        order = rng.permutation(len(x))
        _epoch_updates(net, x, y, order, batch_size, learning_rate, state)
    return net
