"""KMeans over normalized embeddings, medoid extraction, and Dunn statistics.

The implementation is deliberately BLAS-free in its distance kernels
(broadcasted subtraction + pairwise-summed reductions), so results are
bit-identical regardless of how many threads the host math library uses.
Seeding is k-means++ with exactly one candidate per step; assignment ties
break toward the lowest cluster index, medoid ties toward the lowest sample
id. Callers are expected to pass L2-normalized rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import EmbeddingMatrix, rng_fork

_CHUNK_ELEMS = 4_000_000  # bound on n_chunk * k * dim per distance block


def _sq_dists(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, (n, k), float64, thread-count independent."""
    n = x.shape[0]
    k, d = centers.shape
    out = np.empty((n, k), dtype=np.float64)
    chunk = max(1, _CHUNK_ELEMS // max(1, k * d))
    for start in range(0, n, chunk):
        block = x[start : start + chunk, None, :] - centers[None, :, :]
        out[start : start + chunk] = np.einsum("ijk,ijk->ij", block, block)
    return out


@dataclass(frozen=True)
class KMeansResult:
    k: int
    seed: int
    centroids: np.ndarray  # k x dim
    assignments: np.ndarray  # n, values in [0, k)
    inertia: float
    medoid_ids: np.ndarray  # k sample ids, medoid_ids[c] belongs to cluster c
    inertia_trace: tuple[float, ...]


def _kmeanspp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = int(rng.integers(n))
    d2 = _sq_dists(x, x[chosen[0] : chosen[0] + 1])[:, 0]
    for j in range(1, k):
        cumulative = np.cumsum(d2)
        total = float(cumulative[-1])
        if total <= 0.0:
            # all remaining mass at distance zero (duplicate points): uniform over unchosen
            remaining = np.setdiff1d(np.arange(n), chosen[:j])
            chosen[j] = int(remaining[rng.integers(len(remaining))])
        else:
            r = rng.random() * total
            idx = int(np.searchsorted(cumulative, r, side="right"))
            chosen[j] = min(idx, n - 1)
        d2 = np.minimum(d2, _sq_dists(x, x[chosen[j] : chosen[j] + 1])[:, 0])
    return chosen


def _repair_empty(x, centroids, assign, dist_to_assigned, counts):
    """Seed each empty cluster with the globally farthest point (never emptying another)."""
    while True:
        empties = np.flatnonzero(counts == 0)
        if empties.size == 0:
            return
        c = int(empties[0])
        movable = counts[assign] > 1
        candidates = np.where(movable, dist_to_assigned, -np.inf)
        p = int(np.argmax(candidates))
        counts[assign[p]] -= 1
        assign[p] = c
        counts[c] = 1
        centroids[c] = x[p]
        dist_to_assigned[p] = 0.0


def kmeans(
    x: EmbeddingMatrix,
    k: int,
    seed: int,
    max_iters: int = 100,
    tol: float = 1e-6,
    sample_ids=None,
    init_centers: np.ndarray | None = None,
) -> KMeansResult:
    """Lloyd iterations from a k-means++ start; deterministic given the seed.

    `sample_ids` restricts clustering to a subset of rows (e.g. one category's
    samples); assignments follow that subset's order and medoid_ids are
    reported in the original id space either way. `init_centers` bypasses
    k-means++ with explicit starting centroids.
    """
    if sample_ids is not None:
        ids = np.asarray(sorted(sample_ids), dtype=np.int64)
        data = x.data[ids].astype(np.float64)
    else:
        ids = np.arange(x.n, dtype=np.int64)
        data = x.data.astype(np.float64)
    n = data.shape[0]
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of samples n={n}")

    if init_centers is not None:
        centroids = np.asarray(init_centers, dtype=np.float64).copy()
        if centroids.shape != (k, data.shape[1]):
            raise ValueError(
                f"init_centers must have shape ({k}, {data.shape[1]}), got {centroids.shape}"
            )
    else:
        rng = rng_fork(seed, "kmeans-init")
        centroids = data[_kmeanspp_init(data, k, rng)].copy()

    trace: list[float] = []
    assign = np.zeros(n, dtype=np.int64)
    for _ in range(max_iters):
        dists = _sq_dists(data, centroids)
        assign = np.argmin(dists, axis=1)
        dist_to_assigned = dists[np.arange(n), assign]
        counts = np.bincount(assign, minlength=k)
        _repair_empty(data, centroids, assign, dist_to_assigned, counts)
        trace.append(float(dist_to_assigned.sum()))

        sums = np.zeros((k, data.shape[1]), dtype=np.float64)
        np.add.at(sums, assign, data)
        new_centroids = sums / counts[:, None]
        shift = float(np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max())
        centroids = new_centroids
        if shift < tol:
            break

    # consistency pass against the final centroids
    dists = _sq_dists(data, centroids)
    assign = np.argmin(dists, axis=1)
    dist_to_assigned = dists[np.arange(n), assign]
    counts = np.bincount(assign, minlength=k)
    _repair_empty(data, centroids, assign, dist_to_assigned, counts)
    inertia = float(dist_to_assigned.sum())
    trace.append(inertia)

    medoid_ids = np.empty(k, dtype=np.int64)
    for c in range(k):
        members = np.flatnonzero(assign == c)
        medoid_ids[c] = ids[members[int(np.argmin(dist_to_assigned[members]))]]

    return KMeansResult(
        k=k,
        seed=seed,
        centroids=centroids,
        assignments=assign,
        inertia=inertia,
        medoid_ids=medoid_ids,
        inertia_trace=tuple(trace),
    )


def inertia_monotone_check(trace, slack: float = 1e-7) -> bool:
    """True iff inertia never rises across Lloyd iterations (within absolute slack)."""
    trace = list(trace)
    return all(b <= a + slack for a, b in zip(trace, trace[1:]))


@dataclass(frozen=True)
class DunnStats:
    per_cluster: tuple[float, ...]
    global_index: float


def _block_size(dim: int) -> int:
    return max(16, int(np.sqrt(_CHUNK_ELEMS / max(1, dim))))


def _min_sq_between(a: np.ndarray, b: np.ndarray) -> float:
    block = _block_size(a.shape[1])
    best = np.inf
    for i in range(0, len(a), block):
        for j in range(0, len(b), block):
            diffs = a[i : i + block, None, :] - b[None, j : j + block, :]
            best = min(best, float(np.einsum("ijk,ijk->ij", diffs, diffs).min()))
    return best


def _max_sq_within(a: np.ndarray) -> float:
    if len(a) < 2:
        return 0.0
    block = _block_size(a.shape[1])
    worst = 0.0
    for i in range(0, len(a), block):
        for j in range(i, len(a), block):
            diffs = a[i : i + block, None, :] - a[None, j : j + block, :]
            worst = max(worst, float(np.einsum("ijk,ijk->ij", diffs, diffs).max()))
    return worst


def dunn(x: EmbeddingMatrix, assignments) -> DunnStats:
    """Single-linkage inter-cluster distances over max intra-cluster diameters.

    per_cluster[c] divides c's nearest-other-cluster distance by c's own
    diameter; singletons (diameter 0) get an +inf sentinel. The global index
    is the textbook min-inter / max-diameter.
    """
    assign = np.asarray(assignments, dtype=np.int64)
    if assign.shape[0] != x.n:
        raise ValueError(f"assignments cover {assign.shape[0]} points, matrix has {x.n}")
    k = int(assign.max()) + 1 if assign.size else 0
    if assign.min() < 0:
        raise ValueError("assignments must be nonnegative cluster indices")
    if k < 2:
        raise ValueError("global Dunn index undefined for fewer than 2 clusters")
    counts = np.bincount(assign, minlength=k)
    if np.any(counts == 0):
        empty = int(np.flatnonzero(counts == 0)[0])
        raise ValueError(f"cluster {empty} is empty")

    data = x.data.astype(np.float64)
    members = [np.flatnonzero(assign == c) for c in range(k)]

    diameters = np.sqrt([_max_sq_within(data[members[c]]) for c in range(k)])

    inter = np.full((k, k), np.inf)
    for c in range(k):
        for c2 in range(c + 1, k):
            d = np.sqrt(_min_sq_between(data[members[c]], data[members[c2]]))
            inter[c, c2] = inter[c2, c] = d

    nearest_other = inter.min(axis=1)
    per_cluster = tuple(
        float(nearest_other[c] / diameters[c]) if diameters[c] > 0.0 else np.inf
        for c in range(k)
    )
    max_diameter = float(diameters.max())
    if max_diameter > 0.0:
        global_index = float(inter[np.triu_indices(k, 1)].min() / max_diameter)
    else:
        global_index = np.inf
    return DunnStats(per_cluster=per_cluster, global_index=global_index)
