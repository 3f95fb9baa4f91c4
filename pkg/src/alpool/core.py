"""Domain types, deterministic RNG, and vector primitives shared by all phases.

Embeddings are stored as float32 row-major matrices; every distance, loss,
or accumulator downstream runs in float64. Randomness never touches global
state: each consumer forks its own named stream via :func:`rng_fork`, so
trials and runs reproduce bit-identically regardless of execution order.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import (
    DimensionMismatchError,
    DuplicateIdError,
    IdRangeError,
    NonFiniteValueError,
    UnknownSplitError,
    ZeroNormError,
)

SPLITS = ("train", "dev", "test")


class Strategy(str, Enum):
    RANDOM = "random"
    HARD_MINING = "hard_mining"
    DROPOUT_PERCEPTRON = "dropout_perceptron"
    DAL = "dal"


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Dense n x dim matrix of sentence embeddings (float32, row-major)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionMismatchError(
                f"embedding matrix must be 2-D with n >= 1, dim >= 1, got shape {arr.shape}"
            )
        if not np.isfinite(arr).all():
            raise NonFiniteValueError("embedding matrix contains NaN or Inf")
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def row(self, i: int) -> np.ndarray:
        return self.data[i]


@dataclass(frozen=True)
class SampleRecord:
    """One pool sample: id aligned with the embedding row, category names, split."""

    id: int
    categories: frozenset[str]
    split: str
    text: str | None = None

    def __post_init__(self):
        if self.split not in SPLITS:
            raise UnknownSplitError(
                f"unknown split {self.split!r} for id {self.id}; allowed: {', '.join(SPLITS)}"
            )


@dataclass(frozen=True)
class BinaryTask:
    """One-vs-rest binarization of a category over a multi-label sample set."""

    category: str
    positive_ids: frozenset[int]

    def label(self, sample_id: int) -> int:
        return 1 if sample_id in self.positive_ids else 0


@dataclass
class Pools:
    """The evolving labeled/unlabeled partition of train ids during one run.

    Single-writer: only the owning run mutates it, via :meth:`annotate`.
    """

    labeled: dict[int, int] = field(default_factory=dict)
    unlabeled: set[int] = field(default_factory=set)

    def __post_init__(self):
        overlap = set(self.labeled) & self.unlabeled
        if overlap:
            raise ValueError(f"labeled and unlabeled overlap on ids {sorted(overlap)[:5]}")

    @property
    def universe(self) -> set[int]:
        return set(self.labeled) | self.unlabeled

    def annotate(self, ids, task: BinaryTask) -> None:
        """Move ids from unlabeled to labeled with oracle labels. Monotone: labels never return."""
        for i in ids:
            if i not in self.unlabeled:
                raise KeyError(f"sample {i} is not in the unlabeled pool")
            self.unlabeled.remove(i)
            self.labeled[i] = task.label(i)


@dataclass(frozen=True)
class ALRunConfig:
    """Loop shape of one active-learning run (defaults follow the reference setup)."""

    iterations: int = 5
    batch_size: int = 10
    init_pos: int = 5
    init_neg: int = 5
    seeds: tuple[int, ...] = (0, 1, 2)
    strategy: Strategy = Strategy.RANDOM

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.init_pos < 1 or self.init_neg < 1:
            raise ValueError("initial sampling needs at least one positive and one negative")


@dataclass(frozen=True)
class Dataset:
    """Embedding matrix plus aligned sample records, indexed by split."""

    embeddings: EmbeddingMatrix
    records: tuple[SampleRecord, ...]

    def __post_init__(self):
        n = self.embeddings.n
        seen: set[int] = set()
        for rec in self.records:
            if rec.id in seen:
                raise DuplicateIdError(f"duplicate sample id {rec.id}")
            if not 0 <= rec.id < n:
                raise IdRangeError(f"sample id {rec.id} outside embedding rows 0..{n - 1}")
            seen.add(rec.id)
        if len(seen) != n:
            missing = next(i for i in range(n) if i not in seen)
            raise IdRangeError(
                f"records cover {len(seen)} of {n} embedding rows (first missing id: {missing})"
            )

    @property
    def n(self) -> int:
        return self.embeddings.n

    def split_ids(self, split: str) -> list[int]:
        if split not in SPLITS:
            raise UnknownSplitError(f"unknown split {split!r}; allowed: {', '.join(SPLITS)}")
        return sorted(r.id for r in self.records if r.split == split)

    def task(self, category: str) -> BinaryTask:
        positives = frozenset(r.id for r in self.records if category in r.categories)
        return BinaryTask(category=category, positive_ids=positives)

    def categories(self) -> list[str]:
        names: set[str] = set()
        for r in self.records:
            names.update(r.categories)
        return sorted(names)


def l2_normalize(v: np.ndarray) -> np.ndarray:
    """Scale a vector to unit Euclidean norm; direction is preserved."""
    v = np.asarray(v, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if not np.isfinite(norm):
        raise NonFiniteValueError("cannot normalize a vector with non-finite entries")
    if norm == 0.0:
        raise ZeroNormError("cannot normalize a zero-norm vector")
    return v / norm


def l2_normalize_rows(x: EmbeddingMatrix) -> EmbeddingMatrix:
    """Row-wise unit normalization of an embedding matrix."""
    data = x.data.astype(np.float64)
    norms = np.linalg.norm(data, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        bad = int(np.flatnonzero(norms[:, 0] == 0.0)[0])
        raise ZeroNormError(f"row {bad} has zero norm")
    return EmbeddingMatrix((data / norms).astype(np.float32))


def rng_fork(seed: int, stream_label: str) -> np.random.Generator:
    """Deterministic, platform-independent random stream keyed by (seed, label).

    Identical (seed, label) pairs always yield identical streams; distinct
    labels yield independent streams. No global state is involved, so forks
    taken in any order (or in parallel workers) see the same draws.
    """
    digest = hashlib.sha256(f"{seed}\x1f{stream_label}".encode("utf-8")).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 32, 4)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(words)))


def fork_seed(seed: int, stream_label: str) -> int:
    """Derived 63-bit child seed for handing to APIs that take a plain integer."""
    digest = hashlib.sha256(f"{seed}\x1f{stream_label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") >> 1
