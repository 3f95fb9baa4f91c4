"""Embedding-space distillation: fit a linear projection into the teacher space.

The projection (W, b) is trained with Adam to minimize the mean over samples
of the mean squared coordinate error between projected student rows and the
teacher rows, on a seeded 90/10 train/holdout split. Bias correction is off
by default for this operation. MSE here is mean-over-samples of
mean-over-coordinates; the reported holdout number is computed through
:func:`project` so it matches what downstream consumers see bit-for-bit.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import EmbeddingMatrix, rng_fork
from .errors import (
    BadMagicError,
    DimensionMismatchError,
    DivergenceError,
    NonFiniteValueError,
    TruncatedPayloadError,
    VersionMismatchError,
)
from .model import AdamState, adam_step

PROJ_MAGIC = b"ALPJ"
PROJ_VERSION = 1
_PROJ_HEADER = struct.Struct("<4sBII")


@dataclass(frozen=True)
class ProjectionHead:
    W: np.ndarray  # dim_student x dim_teacher
    b: np.ndarray  # dim_teacher

    def __post_init__(self):
        if self.W.ndim != 2 or self.b.ndim != 1 or self.W.shape[1] != self.b.shape[0]:
            raise DimensionMismatchError(
                f"inconsistent projection shapes W{self.W.shape}, b{self.b.shape}"
            )
        if not (np.isfinite(self.W).all() and np.isfinite(self.b).all()):
            raise NonFiniteValueError("projection parameters contain NaN or Inf")

    @property
    def dim_in(self) -> int:
        return self.W.shape[0]

    @property
    def dim_out(self) -> int:
        return self.W.shape[1]


def identity_projection(dim: int) -> ProjectionHead:
    return ProjectionHead(W=np.eye(dim), b=np.zeros(dim))


@dataclass(frozen=True)
class DistillReport:
    train_mse_per_epoch: tuple[float, ...]
    final_holdout_mse: float
    epochs: int


def project(head: ProjectionHead, x: EmbeddingMatrix) -> EmbeddingMatrix:
    """Rows of the output are x @ W + b, rounded to storage precision."""
    if x.dim != head.dim_in:
        raise DimensionMismatchError(f"input dim {x.dim} != projection input dim {head.dim_in}")
    out = x.data.astype(np.float64) @ head.W + head.b
    return EmbeddingMatrix(out.astype(np.float32))


def _mse(pred: np.ndarray, target: np.ndarray) -> float:
    return float(np.mean((pred.astype(np.float64) - target.astype(np.float64)) ** 2))


def mse_between(a: EmbeddingMatrix, b: EmbeddingMatrix) -> float:
    if a.n != b.n or a.dim != b.dim:
        raise DimensionMismatchError(
            f"matrices disagree: {a.n}x{a.dim} vs {b.n}x{b.dim}"
        )
    return _mse(a.data, b.data)


def distill(
    student: EmbeddingMatrix,
    teacher: EmbeddingMatrix,
    epochs: int = 300,
    lr: float = 1e-4,
    seed: int = 0,
) -> tuple[ProjectionHead, DistillReport]:
    """Learn the student-to-teacher projection by full-batch Adam on MSE."""
    if student.n != teacher.n:
        raise DimensionMismatchError(
            f"student has {student.n} rows, teacher has {teacher.n}"
        )
    if epochs < 1:
        raise ValueError("epochs must be >= 1")

    n = student.n
    perm = rng_fork(seed, "distill-split").permutation(n)
    n_holdout = max(1, n // 10) if n > 1 else 0
    holdout_idx = perm[:n_holdout]
    train_idx = perm[n_holdout:] if n_holdout else perm

    xs = student.data[train_idx].astype(np.float64)
    ts = teacher.data[train_idx].astype(np.float64)

    init_rng = rng_fork(seed, "distill-init")
    params = {
        "W": init_rng.standard_normal((student.dim, teacher.dim)) * 0.01,
        "b": np.zeros(teacher.dim),
    }
    state = AdamState(lr=lr, bias_correction=False)

    n_train, d_out = ts.shape
    scale = 2.0 / (n_train * d_out)
    curve: list[float] = []
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(1, epochs + 1):
            resid = xs @ params["W"] + params["b"] - ts
            loss = float(np.mean(resid**2))
            if not np.isfinite(loss):
                raise DivergenceError(f"distillation loss diverged at epoch {epoch}", epoch=epoch)
            curve.append(loss)
            grads = {"W": scale * (xs.T @ resid), "b": scale * resid.sum(axis=0)}
            params = adam_step(state, params, grads)

    head = ProjectionHead(W=params["W"], b=params["b"])
    if n_holdout:
        eval_idx = np.sort(holdout_idx)
    else:
        eval_idx = np.arange(n)
    projected = project(head, EmbeddingMatrix(student.data[eval_idx]))
    holdout_mse = _mse(projected.data, teacher.data[eval_idx])
    report = DistillReport(
        train_mse_per_epoch=tuple(curve),
        final_holdout_mse=holdout_mse,
        epochs=epochs,
    )
    return head, report


def holdout_ids(n: int, seed: int) -> np.ndarray:
    """The sorted holdout row indices distill() reserved for a given seed."""
    perm = rng_fork(seed, "distill-split").permutation(n)
    n_holdout = max(1, n // 10) if n > 1 else 0
    return np.sort(perm[:n_holdout]) if n_holdout else np.arange(n)


def write_projection(path, head: ProjectionHead) -> None:
    with open(path, "wb") as fh:
        fh.write(_PROJ_HEADER.pack(PROJ_MAGIC, PROJ_VERSION, head.dim_in, head.dim_out))
        fh.write(np.ascontiguousarray(head.W, dtype="<f4").tobytes())
        fh.write(np.ascontiguousarray(head.b, dtype="<f4").tobytes())


def read_projection(path) -> ProjectionHead:
    raw = Path(path).read_bytes()
    if len(raw) < _PROJ_HEADER.size:
        raise TruncatedPayloadError(f"{path}: too short for a projection header")
    magic, version, d_in, d_out = _PROJ_HEADER.unpack_from(raw)
    if magic != PROJ_MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}, expected {PROJ_MAGIC!r}")
    if version != PROJ_VERSION:
        raise VersionMismatchError(f"{path}: version {version}, expected {PROJ_VERSION}")
    expected = _PROJ_HEADER.size + (d_in * d_out + d_out) * 4
    if len(raw) != expected:
        raise TruncatedPayloadError(f"{path}: expected {expected} bytes, got {len(raw)}")
    body = np.frombuffer(raw, dtype="<f4", offset=_PROJ_HEADER.size)
    W = body[: d_in * d_out].reshape(d_in, d_out).astype(np.float64)
    b = body[d_in * d_out :].astype(np.float64)
    return ProjectionHead(W=W, b=b)
