"""Bit-exact file formats plus the synthetic embedding generator.

Formats:
  .aleb     binary embeddings: magic "ALEB", version byte 1, u32 LE n,
            u32 LE dim (13-byte header), then n*dim float32 LE row-major.
  .jsonl    labels: one JSON object per line with fields
            id (int), labels (list of str), split (str), text (optional str).
  clusters  JSON object {k, seed, inertia, assignments, medoid_ids}.
  run       JSON object {strategy, seed, category, iterations: [...]}.

All writers produce byte-identical output for identical inputs; the
synthetic generator is a pure function of its spec.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Dataset, EmbeddingMatrix, SampleRecord, rng_fork
from .errors import (
    BadMagicError,
    DataError,
    DuplicateIdError,
    NonFiniteValueError,
    TruncatedPayloadError,
    VersionMismatchError,
)

MAGIC = b"ALEB"
VERSION = 1
HEADER = struct.Struct("<4sBII")  # magic, version, n, dim


def write_embeddings(path, x: EmbeddingMatrix) -> None:
    payload = np.ascontiguousarray(x.data, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, VERSION, x.n, x.dim))
        fh.write(payload)


def read_embeddings(path) -> EmbeddingMatrix:
    raw = Path(path).read_bytes()
    if len(raw) < HEADER.size:
        raise TruncatedPayloadError(
            f"{path}: file is {len(raw)} bytes, header alone needs {HEADER.size}"
        )
    magic, version, n, dim = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise VersionMismatchError(f"{path}: format version {version}, expected {VERSION}")
    expected = HEADER.size + n * dim * 4
    if len(raw) != expected:
        raise TruncatedPayloadError(
            f"{path}: expected {expected} bytes for n={n} dim={dim}, got {len(raw)}"
        )
    data = np.frombuffer(raw, dtype="<f4", offset=HEADER.size).reshape(n, dim)
    if not np.isfinite(data).all():
        raise NonFiniteValueError(f"{path}: payload contains NaN or Inf")
    return EmbeddingMatrix(data.copy())


def write_labels(path, records) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            obj = {"id": rec.id, "labels": sorted(rec.categories), "split": rec.split}
            if rec.text is not None:
                obj["text"] = rec.text
            fh.write(json.dumps(obj, sort_keys=True, ensure_ascii=False))
            fh.write("\n")


def read_labels(path) -> list[SampleRecord]:
    records: list[SampleRecord] = []
    seen: set[int] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            try:
                rec = SampleRecord(
                    id=int(obj["id"]),
                    categories=frozenset(obj["labels"]),
                    split=obj["split"],
                    text=obj.get("text"),
                )
            except KeyError as exc:
                raise DataError(f"{path}:{lineno}: missing field {exc}") from exc
            if rec.id in seen:
                raise DuplicateIdError(f"{path}:{lineno}: duplicate sample id {rec.id}")
            seen.add(rec.id)
            records.append(rec)
    return records


def read_dataset(embeddings_path, labels_path) -> Dataset:
    """Read and pair the two files; id coverage is validated by Dataset."""
    return Dataset(
        embeddings=read_embeddings(embeddings_path),
        records=tuple(read_labels(labels_path)),
    )


def write_clusters_json(path, result) -> None:
    obj = {
        "k": result.k,
        "seed": result.seed,
        "inertia": result.inertia,
        "assignments": [int(a) for a in result.assignments],
        "medoid_ids": [int(m) for m in result.medoid_ids],
    }
    _write_json(path, obj)


def write_run_json(path, strategy, seed, category, iterations) -> None:
    obj = {
        "strategy": str(strategy.value if hasattr(strategy, "value") else strategy),
        "seed": seed,
        "category": category,
        "iterations": [
            {
                "n_labeled": rec.n_labeled,
                "f1_dev": rec.dev_f1,
                "f1_test": rec.test_f1,
                "selected_ids": [int(i) for i in rec.selected_ids],
            }
            for rec in iterations
        ],
    }
    _write_json(path, obj)


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


@dataclass(frozen=True)
class SyntheticSpec:
    """Knobs for the separated-Gaussians-on-the-sphere generator."""

    n_classes: int
    n_samples: int
    dim: int
    class_prevalences: tuple[float, ...]
    center_separation: float
    noise_sigma: float
    seed: int

    def __post_init__(self):
        if self.n_classes < 1 or self.n_samples < 1 or self.dim < 1:
            raise ValueError("n_classes, n_samples, and dim must all be >= 1")
        if len(self.class_prevalences) != self.n_classes:
            raise ValueError("need one prevalence per class")
        prevs = np.asarray(self.class_prevalences, dtype=np.float64)
        if not np.isfinite(prevs).all() or np.any(prevs < 0):
            raise ValueError("prevalences must be finite and nonnegative")
        if abs(float(prevs.sum()) - 1.0) > 1e-9:
            raise ValueError(f"prevalences must sum to 1, got {float(prevs.sum())!r}")
        if not np.isfinite(self.center_separation) or self.center_separation < 0:
            raise ValueError("center_separation must be finite and nonnegative")
        if not np.isfinite(self.noise_sigma) or self.noise_sigma <= 0:
            raise ValueError("noise_sigma must be finite and positive")


_CENTER_RETRIES = 200


def _place_centers(spec: SyntheticSpec) -> np.ndarray:
    """Random directions scaled by the separation, redrawn until pairwise far apart."""
    rng = rng_fork(spec.seed, "synthetic-centers")
    scale = max(spec.center_separation, 1.0)
    for _ in range(_CENTER_RETRIES):
        raw = rng.standard_normal((spec.n_classes, spec.dim))
        norms = np.linalg.norm(raw, axis=1, keepdims=True)
        if np.any(norms == 0.0):
            continue
        centers = raw / norms * scale
        if spec.n_classes == 1:
            return centers
        diffs = centers[:, None, :] - centers[None, :, :]
        dists = np.sqrt((diffs**2).sum(-1))
        np.fill_diagonal(dists, np.inf)
        if dists.min() >= spec.center_separation:
            return centers
    raise DataError(
        f"could not place {spec.n_classes} centers >= {spec.center_separation} apart "
        f"in dim {spec.dim} after {_CENTER_RETRIES} attempts"
    )


def generate_synthetic(spec: SyntheticSpec) -> tuple[Dataset, np.ndarray]:
    """Generate (dataset, centers). Pure function of the spec.

    Sample i draws its class from the prevalences, then its embedding is the
    class center plus Gaussian noise, L2-normalized. Splits are 70/10/20 by
    seeded shuffle. Categories are named "class_<j>".
    """
    centers = _place_centers(spec)
    class_rng = rng_fork(spec.seed, "synthetic-classes")
    noise_rng = rng_fork(spec.seed, "synthetic-noise")
    split_rng = rng_fork(spec.seed, "synthetic-split")

    prevs = np.asarray(spec.class_prevalences, dtype=np.float64)
    prevs = prevs / prevs.sum()
    classes = class_rng.choice(spec.n_classes, size=spec.n_samples, p=prevs)
    noise = noise_rng.standard_normal((spec.n_samples, spec.dim)) * spec.noise_sigma
    points = centers[classes] + noise
    norms = np.linalg.norm(points, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    embeddings = EmbeddingMatrix((points / norms).astype(np.float32))

    order = split_rng.permutation(spec.n_samples)
    n_train = int(round(spec.n_samples * 0.7))
    n_dev = int(round(spec.n_samples * 0.1))
    split_of = np.empty(spec.n_samples, dtype=object)
    split_of[order[:n_train]] = "train"
    split_of[order[n_train : n_train + n_dev]] = "dev"
    split_of[order[n_train + n_dev :]] = "test"

    records = tuple(
        SampleRecord(
            id=i,
            categories=frozenset({f"class_{classes[i]}"}),
            split=str(split_of[i]),
        )
        for i in range(spec.n_samples)
    )
    return Dataset(embeddings=embeddings, records=records), centers
