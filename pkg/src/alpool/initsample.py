"""Initial labeled-set acquisition and the annotation-effort simulator.

A trial draws uniformly without replacement from a candidate pool (the full
train split, or the cluster medoids) until the required positives and
negatives are found; every draw costs one annotator action. Statistics over
repeated trials use interpolated order statistics, the rule under which a
thousand-trial 90th percentile lands on fractional values like x + 0.1.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import BinaryTask, fork_seed, rng_fork


@dataclass(frozen=True)
class TrialResult:
    actions: int
    succeeded: bool
    pool_kind: str  # "full" or "medoids"
    labeled: tuple[int, ...] = ()


@dataclass(frozen=True)
class EffortStats:
    pool_kind: str
    trials: int
    success_count: int
    median: float
    p90: float
    actions: tuple[int, ...]  # successful trials only, in trial order


def sample_initial(
    pool_ids,
    task: BinaryTask,
    init_pos: int = 5,
    init_neg: int = 5,
    seed: int = 0,
) -> tuple[dict[int, int], int, bool]:
    """Draw until init_pos positives and init_neg negatives are labeled.

    Returns (labeled mapping of exactly the first init_pos positives and
    init_neg negatives, total actions spent, success flag). Draws beyond a
    class's quota still cost an action but are not kept. A pool that runs out
    first yields success=False with actions equal to the pool size.
    """
    pool = sorted(pool_ids)
    if not pool:
        raise ValueError("candidate pool is empty")
    order = rng_fork(seed, "initial-sample").permutation(len(pool))
    labeled: dict[int, int] = {}
    got_pos = got_neg = actions = 0
    for j in order:
        sample_id = pool[j]
        actions += 1
        label = task.label(sample_id)
        if label == 1 and got_pos < init_pos:
            labeled[sample_id] = 1
            got_pos += 1
        elif label == 0 and got_neg < init_neg:
            labeled[sample_id] = 0
            got_neg += 1
        if got_pos >= init_pos and got_neg >= init_neg:
            return labeled, actions, True
    return labeled, actions, False


def percentile(values, q: float) -> float:
    """Interpolated order statistic: rank r = 1 + q(n-1)/100 over the sorted values."""
    vals = sorted(float(v) for v in values)
    if not vals:
        raise ValueError("percentile of an empty list is undefined")
    if not 0.0 <= q <= 100.0:
        raise ValueError(f"q must be in [0, 100], got {q}")
    r = 1.0 + q * (len(vals) - 1) / 100.0
    lo = int(r) - 1
    frac = r - int(r)
    hi = min(lo + 1, len(vals) - 1)
    return vals[lo] + frac * (vals[hi] - vals[lo])


def gain_percent(p90_full: float, p90_medoids: float) -> float:
    """Relative p90 effort reduction of medoid sampling, in percent, one decimal."""
    if p90_full <= 0.0:
        raise ValueError(f"baseline p90 must be positive, got {p90_full}")
    return round(100.0 * (p90_full - p90_medoids) / p90_full, 1)


def simulate_effort(
    pool_ids,
    task: BinaryTask,
    pool_kind: str,
    trials: int = 1000,
    init_pos: int = 5,
    init_neg: int = 5,
    seed: int = 0,
) -> EffortStats:
    """Run independent trials with per-trial derived seeds and aggregate.

    Medoid pools can run out of one class; those trials are counted as
    failures and excluded from the percentile statistics, never hidden.
    """
    if pool_kind not in ("full", "medoids"):
        raise ValueError(f"pool_kind must be 'full' or 'medoids', got {pool_kind!r}")
    pool = sorted(pool_ids)
    actions_ok: list[int] = []
    successes = 0
    for t in range(trials):
        _, actions, ok = sample_initial(
            pool, task, init_pos=init_pos, init_neg=init_neg, seed=fork_seed(seed, f"trial-{t}")
        )
        if ok:
            successes += 1
            actions_ok.append(actions)
    if actions_ok:
        med = percentile(actions_ok, 50.0)
        p90 = percentile(actions_ok, 90.0)
    else:
        med = p90 = float("nan")
    return EffortStats(
        pool_kind=pool_kind,
        trials=trials,
        success_count=successes,
        median=med,
        p90=p90,
        actions=tuple(actions_ok),
    )


def simulate_effort_for_category(
    dataset,
    category: str,
    pool_kind: str,
    kmeans_result=None,
    split: str = "train",
    trials: int = 1000,
    init_pos: int = 5,
    init_neg: int = 5,
    seed: int = 0,
) -> EffortStats:
    """Dataset-level wrapper: resolves the candidate pool, then simulates.

    The full pool is the chosen split ("all" for the whole dataset); the
    medoid pool is the supplied clustering's medoid ids restricted to it.
    """
    task = dataset.task(category)
    base = dataset.split_ids(split) if split != "all" else list(range(dataset.n))
    if pool_kind == "medoids":
        if kmeans_result is None:
            raise ValueError("pool_kind='medoids' needs a KMeansResult")
        base_set = set(base)
        pool = [int(m) for m in kmeans_result.medoid_ids if int(m) in base_set]
    else:
        pool = base
    return simulate_effort(
        pool, task, pool_kind, trials=trials, init_pos=init_pos, init_neg=init_neg, seed=seed
    )


def effort_comparison(stats_full: EffortStats, stats_medoids: EffortStats) -> dict:
    """Table-row view of a full-vs-medoids comparison, gain computed from p90s."""
    nan = float("nan")
    has_both = stats_full.success_count > 0 and stats_medoids.success_count > 0
    return {
        "full": {
            "median": stats_full.median,
            "p90": stats_full.p90,
            "success_count": stats_full.success_count,
            "trials": stats_full.trials,
        },
        "medoids": {
            "median": stats_medoids.median,
            "p90": stats_medoids.p90,
            "success_count": stats_medoids.success_count,
            "trials": stats_medoids.trials,
        },
        "gain_percent": gain_percent(stats_full.p90, stats_medoids.p90) if has_both else nan,
    }
