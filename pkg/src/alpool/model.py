"""Dropout-capable binary classifier head and the Adam optimizer.

The head is a one-hidden-layer MLP with a logistic output: the smallest
architecture that supports Monte Carlo dropout at inference. Weights live in
float64 so analytic gradients survive finite-difference checks; dropout is
applied only at inference (scoring), never while fitting, which keeps
training a deterministic function of (initial head, data, config).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .core import EmbeddingMatrix, rng_fork
from .errors import DegenerateTrainingError, DimensionMismatchError, DivergenceError


@dataclass(frozen=True)
class ClassifierHead:
    input_dim: int
    hidden_dim: int
    W1: np.ndarray  # input_dim x hidden_dim
    b1: np.ndarray  # hidden_dim
    W2: np.ndarray  # hidden_dim
    b2: float
    dropout_rate: float = 0.1

    def __post_init__(self):
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")


def init_head(input_dim: int, seed: int, hidden_dim: int = 128, dropout_rate: float = 0.1) -> ClassifierHead:
    """He-scaled random hidden layer, zero output layer (initial p is exactly 0.5)."""
    rng = rng_fork(seed, "head-init")
    W1 = rng.standard_normal((input_dim, hidden_dim)) * np.sqrt(2.0 / input_dim)
    return ClassifierHead(
        input_dim=input_dim,
        hidden_dim=hidden_dim,
        W1=W1,
        b1=np.zeros(hidden_dim),
        W2=np.zeros(hidden_dim),
        b2=0.0,
        dropout_rate=dropout_rate,
    )


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _check_dim(head: ClassifierHead, x: np.ndarray) -> None:
    if x.shape[-1] != head.input_dim:
        raise DimensionMismatchError(
            f"input has dim {x.shape[-1]}, head expects {head.input_dim}"
        )


def predict_proba(head: ClassifierHead, x: np.ndarray, dropout_mask: np.ndarray | None = None) -> np.ndarray:
    """Batched forward pass. `dropout_mask` is a boolean keep-mask over hidden units."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    _check_dim(head, x)
    h = np.maximum(x @ head.W1 + head.b1, 0.0)
    if dropout_mask is not None and head.dropout_rate > 0.0:
        h = h * dropout_mask / (1.0 - head.dropout_rate)
    z = h @ head.W2 + head.b2
    return _sigmoid(z)


def dropout_mask(head: ClassifierHead, seed: int, n_rows: int = 1) -> np.ndarray:
    """Seeded inverted-dropout keep-mask of shape (n_rows, hidden_dim)."""
    rng = rng_fork(seed, "dropout-mask")
    return rng.random((n_rows, head.hidden_dim)) >= head.dropout_rate


def forward(head: ClassifierHead, x: np.ndarray, dropout_seed: int | None = None) -> float:
    """Probability for one embedding row; eval mode unless a dropout seed is given."""
    mask = None
    if dropout_seed is not None:
        mask = dropout_mask(head, dropout_seed, n_rows=1)
    return float(predict_proba(head, x, dropout_mask=mask)[0])


@dataclass
class AdamState:
    lr: float = 5e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    bias_correction: bool = True
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(state: AdamState, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    """One Adam update over a parameter dict; mutates state, returns new params."""
    state.t += 1
    updated: dict[str, np.ndarray] = {}
    for name, p in params.items():
        g = np.asarray(grads[name], dtype=np.float64)
        if not np.isfinite(g).all():
            raise DivergenceError(f"non-finite gradient for parameter {name!r}")
        if name not in state.m:
            state.m[name] = np.zeros_like(p, dtype=np.float64)
            state.v[name] = np.zeros_like(p, dtype=np.float64)
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        if state.bias_correction:
            m_hat = m / (1.0 - state.beta1**state.t)
            v_hat = v / (1.0 - state.beta2**state.t)
        else:
            m_hat = m
            v_hat = v
        updated[name] = p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return updated


def bce_loss_and_grads(params: dict[str, np.ndarray], x: np.ndarray, y: np.ndarray):
    """Mean binary cross-entropy through the MLP, with analytic gradients."""
    n = x.shape[0]
    z1 = x @ params["W1"] + params["b1"]
    h = np.maximum(z1, 0.0)
    z = h @ params["W2"] + params["b2"]
    # stable BCE on logits: max(z,0) - z*y + log1p(exp(-|z|))
    loss = float(np.mean(np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))))
    p = _sigmoid(z)
    dz = (p - y) / n
    dW2 = h.T @ dz
    db2 = float(dz.sum())
    dh = np.outer(dz, params["W2"])
    dz1 = dh * (z1 > 0.0)
    dW1 = x.T @ dz1
    db1 = dz1.sum(axis=0)
    return loss, {"W1": dW1, "b1": db1, "W2": dW2, "b2": db2}


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    lr: float = 5e-5
    patience: int = 10
    full_batch_limit: int = 256
    minibatch_size: int = 32


@dataclass(frozen=True)
class TrainReport:
    epochs_run: int
    best_dev_f1: float
    best_epoch: int
    dev_f1_per_epoch: tuple[float, ...]
    stopped_early: bool


def _params_of(head: ClassifierHead) -> dict[str, np.ndarray]:
    return {
        "W1": head.W1.copy(),
        "b1": head.b1.copy(),
        "W2": head.W2.copy(),
        "b2": np.float64(head.b2),
    }


def _head_with(head: ClassifierHead, params: dict[str, np.ndarray]) -> ClassifierHead:
    return replace(
        head,
        W1=params["W1"],
        b1=params["b1"],
        W2=params["W2"],
        b2=float(params["b2"]),
    )


def train(
    head_init: ClassifierHead,
    labeled: dict[int, int],
    embeddings: EmbeddingMatrix,
    dev: dict[int, int],
    config: TrainConfig = TrainConfig(),
    seed: int = 0,
) -> tuple[ClassifierHead, TrainReport]:
    """Fit the head on labeled ids with Adam; keep the best-dev-F1 epoch's weights.

    Early stopping fires once `patience` consecutive epochs pass with no dev
    improvement. Minibatch order (used only above the full-batch limit) comes
    from the run's seeded stream, so training is deterministic.
    """
    from .alloop import f1_binary  # local import to avoid a module cycle

    ids = sorted(labeled)
    y = np.array([labeled[i] for i in ids], dtype=np.float64)
    if y.min() == y.max():
        raise DegenerateTrainingError(
            "labeled set contains a single class; need at least one positive and one negative"
        )
    x = embeddings.data[ids].astype(np.float64)
    dev_ids = sorted(dev)
    dev_x = embeddings.data[dev_ids].astype(np.float64)
    dev_y = np.array([dev[i] for i in dev_ids], dtype=np.int64)

    params = _params_of(head_init)
    state = AdamState(lr=config.lr)
    order_rng = rng_fork(seed, "train-batch-order")

    best_f1 = -1.0
    best_epoch = 0
    best_params = {k: np.copy(v) for k, v in params.items()}
    dev_curve: list[float] = []
    since_improved = 0
    stopped_early = False
    epochs_run = 0

    for epoch in range(1, config.epochs + 1):
        epochs_run = epoch
        if len(ids) <= config.full_batch_limit:
            loss, grads = bce_loss_and_grads(params, x, y)
            if not np.isfinite(loss):
                raise DivergenceError(f"training loss diverged at epoch {epoch}", epoch=epoch)
            params = adam_step(state, params, grads)
        else:
            perm = order_rng.permutation(len(ids))
            for start in range(0, len(ids), config.minibatch_size):
                sel = perm[start : start + config.minibatch_size]
                loss, grads = bce_loss_and_grads(params, x[sel], y[sel])
                if not np.isfinite(loss):
                    raise DivergenceError(f"training loss diverged at epoch {epoch}", epoch=epoch)
                params = adam_step(state, params, grads)

        preds = (predict_proba(_head_with(head_init, params), dev_x) > 0.5).astype(np.int64)
        _, _, f1 = f1_binary(preds, dev_y)
        dev_curve.append(f1)
        if f1 > best_f1:
            best_f1 = f1
            best_epoch = epoch
            best_params = {k: np.copy(v) for k, v in params.items()}
            since_improved = 0
        else:
            since_improved += 1
            if since_improved >= config.patience:
                stopped_early = True
                break

    report = TrainReport(
        epochs_run=epochs_run,
        best_dev_f1=best_f1,
        best_epoch=best_epoch,
        dev_f1_per_epoch=tuple(dev_curve),
        stopped_early=stopped_early,
    )
    return _head_with(head_init, best_params), report
