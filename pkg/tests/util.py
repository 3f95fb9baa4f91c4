"""Shared fixture builders used by module tests and the acceptance suite."""

from __future__ import annotations

import numpy as np

from alpool import EmbeddingMatrix, SyntheticSpec, generate_synthetic
from alpool.core import BinaryTask, rng_fork


def two_blob_dataset(n=400, dim=16, separation=5.0, sigma=0.5, seed=42, prevalences=(0.5, 0.5)):
    spec = SyntheticSpec(
        n_classes=2,
        n_samples=n,
        dim=dim,
        class_prevalences=prevalences,
        center_separation=separation,
        noise_sigma=sigma,
        seed=seed,
    )
    dataset, centers = generate_synthetic(spec)
    truth = np.array([int(next(iter(r.categories)).split("_")[1]) for r in dataset.records])
    return dataset, centers, truth


def squash_scramble_pair(seed=21):
    """Teacher: tight separated blobs. Student: the between-center plane crushed 10x,
    then rotated, with a whisper of noise — recoverable by a linear projection."""
    spec = SyntheticSpec(
        n_classes=3,
        n_samples=600,
        dim=16,
        class_prevalences=(0.4, 0.35, 0.25),
        center_separation=8.0,
        noise_sigma=0.1,
        seed=seed,
    )
    dataset, centers = generate_synthetic(spec)
    teacher = dataset.embeddings
    unit_centers = centers / np.linalg.norm(centers, axis=1, keepdims=True)
    span = np.linalg.qr((unit_centers[1:] - unit_centers[0]).T)[0]
    squash = np.eye(16) - 0.9 * (span @ span.T)
    rng = rng_fork(seed, "scramble")
    Q, _ = np.linalg.qr(rng.standard_normal((16, 16)))
    noise = rng.standard_normal((teacher.n, 16)) * 0.005
    student = EmbeddingMatrix(
        (teacher.data.astype(np.float64) @ (squash @ Q) + noise).astype(np.float32)
    )
    return student, teacher


def skewed_effort_fixture(seed=101):
    """5000 samples, 5% minority concentrated in 8 tight blobs (medoids over-represent it)."""
    rng = rng_fork(seed, "effort-skewed")
    dim = 16
    majority = rng.standard_normal((4750, dim))
    minority_centers = rng.standard_normal((8, dim)) * 4.0
    rows = [majority]
    for center, count in zip(minority_centers, (32, 32, 32, 31, 31, 31, 31, 30)):
        rows.append(center + rng.standard_normal((count, dim)) * 0.05)
    x = np.vstack(rows)
    x = x / np.linalg.norm(x, axis=1, keepdims=True)
    task = BinaryTask("minority", frozenset(range(4750, 5000)))
    return EmbeddingMatrix(x.astype(np.float32)), task


def balanced_effort_fixture(seed=202):
    """5000 samples, two symmetric 50/50 blobs; medoids mirror the prevalence."""
    rng = rng_fork(seed, "effort-balanced")
    dim = 16
    a = rng.standard_normal((2500, dim)) + 2.0
    b = rng.standard_normal((2500, dim)) - 2.0
    x = np.vstack([a, b])
    x = x / np.linalg.norm(x, axis=1, keepdims=True)
    task = BinaryTask("first", frozenset(range(2500)))
    return EmbeddingMatrix(x.astype(np.float32)), task
