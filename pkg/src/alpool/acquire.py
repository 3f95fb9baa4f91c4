"""The four acquisition strategies mapping model state and pools to a batch.

Every strategy honors the same contract: it returns min(batch, |unlabeled|)
distinct unlabeled ids, ordered by descending score with ties broken by
ascending id, and is a deterministic function of its inputs and seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import EmbeddingMatrix, Pools, fork_seed, rng_fork
from .errors import DegenerateTrainingError
from .model import ClassifierHead, TrainConfig, dropout_mask, init_head, predict_proba, train


@dataclass(frozen=True)
class Selection:
    ids: tuple[int, ...]
    scores: tuple[float, ...]


def _rank(ids: np.ndarray, scores: np.ndarray, batch: int, tiebreak: np.ndarray | None = None) -> Selection:
    """Sort by score desc, optional tiebreak desc, then id asc; keep the top batch."""
    if tiebreak is None:
        order = np.lexsort((ids, -scores))
    else:
        order = np.lexsort((ids, -tiebreak, -scores))
    top = order[: min(batch, len(ids))]
    return Selection(
        ids=tuple(int(i) for i in ids[top]),
        scores=tuple(float(s) for s in scores[top]),
    )


def _unlabeled_array(pools: Pools) -> np.ndarray:
    if not pools.unlabeled:
        raise ValueError("unlabeled pool is empty")
    return np.array(sorted(pools.unlabeled), dtype=np.int64)


def select_random(pools: Pools, batch: int, seed: int) -> Selection:
    """Uniform sample without replacement; scores are the ordering draws."""
    ids = _unlabeled_array(pools)
    scores = rng_fork(seed, "random-select").random(len(ids))
    return _rank(ids, scores, batch)


def select_hard_mining(head: ClassifierHead, embeddings: EmbeddingMatrix, pools: Pools, batch: int) -> Selection:
    """Pick the samples whose eval-mode probability sits closest to 0.5."""
    ids = _unlabeled_array(pools)
    p = predict_proba(head, embeddings.data[ids])
    return _rank(ids, -np.abs(p - 0.5), batch)


def select_dropout_perceptron(
    head: ClassifierHead,
    embeddings: EmbeddingMatrix,
    pools: Pools,
    batch: int,
    passes: int = 10,
    seed: int = 0,
) -> Selection:
    """Monte Carlo dropout uncertainty: distance of the mean probability from 0.5.

    Each (sample, pass) pair derives its own mask seed, so scoring is
    reproducible under any parallel split of the pool. Ties prefer the larger
    per-pass standard deviation. With dropout rate 0 this degenerates to
    hard-mining rank-for-rank.
    """
    if passes < 1:
        raise ValueError("passes must be >= 1")
    ids = _unlabeled_array(pools)
    x = embeddings.data[ids]
    probs = np.empty((passes, len(ids)), dtype=np.float64)
    if head.dropout_rate == 0.0:
        probs[:] = predict_proba(head, x)
    else:
        for pass_idx in range(passes):
            mask = np.vstack(
                [
                    dropout_mask(head, fork_seed(seed, f"mc-{i}-{pass_idx}"), n_rows=1)
                    for i in ids
                ]
            )
            probs[pass_idx] = predict_proba(head, x, dropout_mask=mask)
    mean = probs.mean(axis=0)
    std = probs.std(axis=0)
    return _rank(ids, -np.abs(mean - 0.5), batch, tiebreak=std)


@dataclass(frozen=True)
class DiscriminatorConfig:
    hidden_dim: int = 128
    dropout_rate: float = 0.0
    holdout_fraction: float = 0.2
    train: TrainConfig = field(default_factory=lambda: TrainConfig(epochs=30, lr=0.01, patience=5))


def select_dal(
    embeddings: EmbeddingMatrix,
    pools: Pools,
    batch: int,
    config: DiscriminatorConfig = DiscriminatorConfig(),
    seed: int = 0,
) -> Selection:
    """Discriminative selection: train labeled-vs-unlabeled, pick the most 'unlabeled'.

    The discriminator is a fresh head on the same embeddings (class 1 =
    unlabeled); a stratified holdout drives its early stopping. Scores are
    the discriminator's unlabeled-class probabilities.
    """
    if not pools.labeled:
        raise DegenerateTrainingError("DAL requires a non-empty labeled pool")
    ids = _unlabeled_array(pools)

    rng = rng_fork(seed, "dal-split")
    train_set: dict[int, int] = {}
    dev_set: dict[int, int] = {}
    for cls, group in ((0, sorted(pools.labeled)), (1, list(ids))):
        group = np.asarray(group, dtype=np.int64)
        perm = rng.permutation(len(group))
        n_dev = max(1, int(round(len(group) * config.holdout_fraction))) if len(group) > 1 else 0
        for j in perm[:n_dev]:
            dev_set[int(group[j])] = cls
        for j in perm[n_dev:]:
            train_set[int(group[j])] = cls

    disc_init = init_head(
        embeddings.dim,
        seed=fork_seed(seed, "dal-init"),
        hidden_dim=config.hidden_dim,
        dropout_rate=config.dropout_rate,
    )
    disc, _ = train(disc_init, train_set, embeddings, dev_set, config.train, seed=seed)
    scores = predict_proba(disc, embeddings.data[ids])
    return _rank(ids, scores, batch)
