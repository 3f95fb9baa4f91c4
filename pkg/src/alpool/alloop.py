"""End-to-end active-learning runs and cross-run aggregation.

One run fixes (category, strategy, seed): acquire the initial labeled set,
then per iteration train a fresh head on the labeled pool, evaluate dev and
test F1, let the strategy pick the next batch, and annotate it with oracle
labels. All randomness flows through streams derived from the run seed, so
runs are independent of each other and of execution order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .acquire import (
    DiscriminatorConfig,
    select_dal,
    select_dropout_perceptron,
    select_hard_mining,
    select_random,
)
from .cluster import KMeansResult
from .core import ALRunConfig, Dataset, EmbeddingMatrix, Pools, Strategy, fork_seed
from .distill import ProjectionHead, project
from .errors import InitialSamplingError
from .initsample import sample_initial
from .model import TrainConfig, init_head, predict_proba, train


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    n_labeled: int
    selected_ids: tuple[int, ...]
    dev_f1: float
    test_f1: float


@dataclass(frozen=True)
class CurvePoint:
    n_labeled: int
    mean_f1: float
    per_seed_f1: tuple[float, ...]


def f1_binary(predictions, oracle) -> tuple[float, float, float]:
    """Precision, recall, F1 of the positive class; zero-denominator terms are 0."""
    pred = np.asarray(predictions, dtype=np.int64)
    truth = np.asarray(oracle, dtype=np.int64)
    if pred.shape != truth.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {truth.shape}")
    tp = int(np.sum((pred == 1) & (truth == 1)))
    fp = int(np.sum((pred == 1) & (truth == 0)))
    fn = int(np.sum((pred == 0) & (truth == 1)))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


@dataclass(frozen=True)
class ModelConfig:
    """Classifier shape and fit settings shared by every iteration of a run."""

    hidden_dim: int = 128
    dropout_rate: float = 0.1
    train: TrainConfig = TrainConfig()
    mc_passes: int = 10
    dal: DiscriminatorConfig = DiscriminatorConfig()


def run_al(
    dataset: Dataset,
    category: str,
    config: ALRunConfig,
    projection: ProjectionHead | None,
    seed: int,
    kmeans_result: KMeansResult | None = None,
    model_config: ModelConfig = ModelConfig(),
) -> list[IterationRecord]:
    """Execute one active-learning run; initial sampling uses medoids iff
    a clustering is supplied."""
    task = dataset.task(category)
    train_ids = dataset.split_ids("train")
    embeddings = project(projection, dataset.embeddings) if projection else dataset.embeddings

    dev = {i: task.label(i) for i in dataset.split_ids("dev")}
    test = {i: task.label(i) for i in dataset.split_ids("test")}

    if kmeans_result is not None:
        train_id_set = set(train_ids)
        init_pool = [int(m) for m in kmeans_result.medoid_ids if int(m) in train_id_set]
    else:
        init_pool = train_ids
    labeled, _, ok = sample_initial(
        init_pool,
        task,
        init_pos=config.init_pos,
        init_neg=config.init_neg,
        seed=fork_seed(seed, "initial-sampling"),
    )
    if not ok:
        raise InitialSamplingError(
            f"initial sampling failed: pool of {len(init_pool)} lacks "
            f"{config.init_pos} positives and {config.init_neg} negatives for {category!r}"
        )
    pools = Pools(labeled=dict(labeled), unlabeled=set(train_ids) - set(labeled))

    records: list[IterationRecord] = []
    for i in range(1, config.iterations + 1):
        n_labeled = len(pools.labeled)
        head_init = init_head(
            embeddings.dim,
            seed=fork_seed(seed, f"iter-{i}-init"),
            hidden_dim=model_config.hidden_dim,
            dropout_rate=model_config.dropout_rate,
        )
        head, _ = train(
            head_init,
            pools.labeled,
            embeddings,
            dev,
            config=model_config.train,
            seed=fork_seed(seed, f"iter-{i}-train"),
        )
        dev_f1 = _eval_f1(head, embeddings, dev)
        test_f1 = _eval_f1(head, embeddings, test)

        selected: tuple[int, ...] = ()
        if pools.unlabeled:
            select_seed = fork_seed(seed, f"iter-{i}-select")
            if config.strategy is Strategy.RANDOM:
                sel = select_random(pools, config.batch_size, seed=select_seed)
            elif config.strategy is Strategy.HARD_MINING:
                sel = select_hard_mining(head, embeddings, pools, config.batch_size)
            elif config.strategy is Strategy.DROPOUT_PERCEPTRON:
                sel = select_dropout_perceptron(
                    head,
                    embeddings,
                    pools,
                    config.batch_size,
                    passes=model_config.mc_passes,
                    seed=select_seed,
                )
            elif config.strategy is Strategy.DAL:
                sel = select_dal(
                    embeddings, pools, config.batch_size, config=model_config.dal, seed=select_seed
                )
            else:
                raise ValueError(f"unknown strategy {config.strategy!r}")
            selected = sel.ids
            pools.annotate(selected, task)

        records.append(
            IterationRecord(
                iteration=i,
                n_labeled=n_labeled,
                selected_ids=selected,
                dev_f1=dev_f1,
                test_f1=test_f1,
            )
        )
        if not pools.unlabeled:
            break
    return records


def _eval_f1(head, embeddings: EmbeddingMatrix, oracle: dict[int, int]) -> float:
    ids = sorted(oracle)
    preds = (predict_proba(head, embeddings.data[ids]) > 0.5).astype(np.int64)
    truth = [oracle[i] for i in ids]
    _, _, f1 = f1_binary(preds, truth)
    return f1


@dataclass(frozen=True)
class RunResult:
    strategy: Strategy
    category: str
    seed: int
    records: tuple[IterationRecord, ...]


def aggregate(runs) -> dict[Strategy, list[CurvePoint]]:
    """Per strategy and n_labeled: mean over seeds of the macro (category) mean F1."""
    by_strategy: dict[Strategy, dict[int, dict[int, dict[str, float]]]] = {}
    grids: dict[Strategy, tuple[int, ...]] = {}
    for run in runs:
        grid = tuple(rec.n_labeled for rec in run.records)
        if run.strategy in grids and grids[run.strategy] != grid:
            raise ValueError(
                f"n_labeled grids differ for {run.strategy}: {grids[run.strategy]} vs {grid}"
            )
        grids[run.strategy] = grid
        seeds = by_strategy.setdefault(run.strategy, {})
        for rec in run.records:
            seeds.setdefault(run.seed, {}).setdefault(rec.n_labeled, {})[run.category] = rec.test_f1

    curves: dict[Strategy, list[CurvePoint]] = {}
    for strategy, seeds in by_strategy.items():
        points = []
        for n_labeled in grids[strategy]:
            per_seed = []
            for seed in sorted(seeds):
                cats = seeds[seed][n_labeled]
                per_seed.append(sum(cats.values()) / len(cats))
            points.append(
                CurvePoint(
                    n_labeled=n_labeled,
                    mean_f1=sum(per_seed) / len(per_seed),
                    per_seed_f1=tuple(per_seed),
                )
            )
        curves[strategy] = points
    return curves
