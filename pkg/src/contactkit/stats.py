"""Rank tests and the population-weighted bootstrap."""
from __future__ import annotations

import logging
import math
from fractions import Fraction
from functools import lru_cache
from itertools import accumulate
from typing import NamedTuple, Sequence

import numpy as np
from scipy import stats as sps

from .ages import N_SURVEY_GROUPS, SURVEY_GROUP_LABELS
from .analysis import CONTACTS, METRICS, mean, participant_values, quantile
from .diary import Survey
from .exceptions import EmptySampleError
from .population import PopulationPyramid

logger = logging.getLogger(__name__)

EXACT_MAX_SIZE = 8
EXACT = "exact"
NORMAL_APPROX = "normal_approx"


class MannWhitneyResult(NamedTuple):
    statistic: float
    pvalue: float
    method: str


class TTestResult(NamedTuple):
    statistic: float
    pvalue: float


@lru_cache(maxsize=None)
def _u_frequencies(n: int, m: int) -> tuple[int, ...]:
    """Number of rank arrangements giving each U = 0..n*m (no ties)."""
    if n == 0 or m == 0:
        return (1,)
    # the largest observation belongs either to sample a (adds m to U) or to b
    with_a = _u_frequencies(n - 1, m)
    with_b = _u_frequencies(n, m - 1)
    freq = [0] * (n * m + 1)
    for u, c in enumerate(with_a):
        freq[u + m] += c
    for u, c in enumerate(with_b):
        freq[u] += c
    return tuple(freq)


def exact_mann_whitney_pvalue(u: float, n: int, m: int) -> float:
    """Two-sided exact p-value for a tie-free U of an n-vs-m comparison."""
    freq = _u_frequencies(n, m)
    k = int(round(u))
    total = sum(freq)
    lower = sum(freq[: k + 1])
    upper = sum(freq[k:])
    return min(1.0, 2 * min(lower, upper) / total)


def normal_approx_pvalue(u: float, n: int, m: int, tie_counts=()) -> float:
    """Two-sided p from the normal approximation with tie and continuity corrections."""
    N = n + m
    tie_term = math.fsum(float(t) ** 3 - t for t in tie_counts)
    var = n * m / 12.0 * ((N + 1) - tie_term / (N * (N - 1)))
    if var <= 0:
        return 1.0
    z = max(abs(u - n * m / 2.0) - 0.5, 0.0) / math.sqrt(var)
    return min(1.0, math.erfc(z / math.sqrt(2.0)))


def mann_whitney_u(sample_a, sample_b, method: str = "auto") -> MannWhitneyResult:
    """Two-sided Mann-Whitney U test.

    ``statistic`` is U for ``sample_a``: the number of (a, b) pairs with
    a > b, ties counting one half. With ``method="auto"`` small tie-free
    samples get the exact permutation p-value and everything else the
    normal approximation with tie and continuity corrections.
    """
    if method not in ("auto", EXACT, NORMAL_APPROX):
        raise ValueError(f"unknown method {method!r}")
    a = np.asarray(sample_a, dtype=float).ravel()
    b = np.asarray(sample_b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise EmptySampleError("Mann-Whitney U needs two nonempty samples")
    n, m = a.size, b.size
    pooled = np.concatenate([a, b])
    ranks = sps.rankdata(pooled)
    u = float(ranks[:n].sum() - n * (n + 1) / 2)
    _, tie_counts = np.unique(pooled, return_counts=True)
    has_ties = bool(np.any(tie_counts > 1))

    if method == "auto":
        method = EXACT if max(n, m) <= EXACT_MAX_SIZE and not has_ties else NORMAL_APPROX
    if method == EXACT:
        if has_ties:
            raise ValueError("the exact Mann-Whitney p-value needs tie-free samples")
        return MannWhitneyResult(u, exact_mann_whitney_pvalue(u, n, m), EXACT)
    return MannWhitneyResult(u, normal_approx_pvalue(u, n, m, tie_counts), NORMAL_APPROX)


def t_test(sample_a, sample_b) -> TTestResult:
    """Student's two-sample t-test (pooled variance)."""
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise EmptySampleError("t-test needs two nonempty samples")
    if a.size + b.size < 3:
        return TTestResult(math.nan, math.nan)
    res = sps.ttest_ind(a, b, equal_var=True)
    return TTestResult(float(res.statistic), float(res.pvalue))


# -- bootstrap -----------------------------------------------------------------

class BootstrapRow(NamedTuple):
    stratum: str
    metric: str
    estimate: float
    se: float
    ci_lo: float
    ci_hi: float


def replicate_rng(master_seed: int, replicate: int) -> np.random.Generator:
    """Generator for one replicate; independent of how replicates are scheduled."""
    return np.random.default_rng([int(master_seed), int(replicate)])


def _stdev(values: Sequence[float]) -> float:
    if len(values) < 2:
        return 0.0
    exact = [Fraction(v) for v in values]
    mu = sum(exact) / len(exact)
    ss = sum((v - mu) ** 2 for v in exact)
    return math.sqrt(float(ss / (len(exact) - 1)))


_STATISTICS = {
    "mean": mean,
    "median": lambda v: quantile(sorted(v), 0.5),
}


def bootstrap_statistics(
    survey: Survey,
    pyramid: PopulationPyramid | None = None,
    replicates: int = 1000,
    master_seed: int = 0,
    statistic: str = "mean",
    *,
    group_weights=None,
    metrics: Sequence[str] = METRICS,
    alpha: float = 0.05,
) -> list[BootstrapRow]:
    """Population-weighted stratified bootstrap of per-participant metrics.

    Each replicate draws as many participants as the survey holds. For
    every draw a survey age group is picked with probability equal to its
    population share, then a participant uniformly within that group. Two
    uniforms per draw come from ``replicate_rng(master_seed, r)``.

    Strata reported are the six age groups, ``overall`` (pooled over the
    resample) and ``population_adjusted`` (group statistics weighted by
    population shares). ``se`` is the standard deviation of the replicate
    statistics and ``ci_lo``/``ci_hi`` the percentile interval.

    Weights come from ``pyramid`` or ``group_weights``; with neither, groups
    are weighted by their sample sizes.
    """
    if replicates < 1:
        raise ValueError(f"replicates must be >= 1, got {replicates}")
    if statistic not in _STATISTICS:
        raise ValueError(f"unknown statistic {statistic!r}; expected one of {sorted(_STATISTICS)}")
    if len(survey) == 0:
        raise EmptySampleError("cannot bootstrap an empty survey")
    stat = _STATISTICS[statistic]

    members: list[list[int]] = [[] for _ in range(N_SURVEY_GROUPS)]
    for i, p in enumerate(survey.participants):
        members[p.age_group].append(i)
    sizes = [len(m) for m in members]

    if pyramid is not None and group_weights is not None:
        raise ValueError("pass either pyramid or group_weights, not both")
    if pyramid is not None:
        raw_w = [float(w) for w in pyramid.contact_group_weights()]
    elif group_weights is not None:
        raw_w = [float(w) for w in group_weights]
        if len(raw_w) != N_SURVEY_GROUPS or min(raw_w) < 0:
            raise ValueError("group_weights must be 6 nonnegative numbers")
    else:
        raw_w = [float(s) for s in sizes]
    for a in range(N_SURVEY_GROUPS):
        if raw_w[a] > 0 and sizes[a] == 0:
            logger.warning("age group %s has weight %.4g but no participants; excluded from resampling",
                           SURVEY_GROUP_LABELS[a], raw_w[a])
    active = [a for a in range(N_SURVEY_GROUPS) if raw_w[a] > 0 and sizes[a] > 0]
    if not active:
        raise EmptySampleError("no age group has both weight and participants")
    w_total = math.fsum(raw_w[a] for a in active)
    weights = {a: raw_w[a] / w_total for a in active}
    cum = np.array(list(accumulate(weights[a] for a in active)))
    active_arr = np.array(active)
    size_arr = np.array([sizes[a] for a in active])
    member_arr = [np.array(members[a]) for a in active]

    n = len(survey)
    values = {metric: participant_metric_array(survey, metric) for metric in metrics}

    strata = list(SURVEY_GROUP_LABELS) + ["overall", "population_adjusted"]
    reps = {(s, m): [] for m in metrics for s in strata}
    for r in range(replicates):
        u = replicate_rng(master_seed, r).random((n, 2))
        slot = np.minimum(np.searchsorted(cum, u[:, 0], side="right"), len(active) - 1)
        within = np.minimum((u[:, 1] * size_arr[slot]).astype(np.int64), size_arr[slot] - 1)
        drawn = np.empty(n, dtype=np.int64)
        for j in range(len(active)):
            sel = slot == j
            drawn[sel] = member_arr[j][within[sel]]
        groups = active_arr[slot]
        for metric in metrics:
            v = values[metric][drawn]
            ok = ~np.isnan(v)
            group_stats = {}
            for a in range(N_SURVEY_GROUPS):
                gv = v[(groups == a) & ok]
                group_stats[a] = stat(gv.tolist()) if gv.size else math.nan
                reps[(SURVEY_GROUP_LABELS[a], metric)].append(group_stats[a])
            reps[("overall", metric)].append(stat(v[ok].tolist()) if ok.any() else math.nan)
            reps[("population_adjusted", metric)].append(
                math.fsum(weights[a] * group_stats[a] for a in active)
            )

    rows = []
    for metric in metrics:
        vals = values[metric]
        ok = ~np.isnan(vals)
        group_est = {}
        for a in range(N_SURVEY_GROUPS):
            gv = vals[members[a]] if sizes[a] else np.array([])
            gv = gv[~np.isnan(gv)]
            group_est[a] = stat(gv.tolist()) if gv.size else math.nan
        estimates = {SURVEY_GROUP_LABELS[a]: group_est[a] for a in range(N_SURVEY_GROUPS)}
        estimates["overall"] = stat(vals[ok].tolist()) if ok.any() else math.nan
        estimates["population_adjusted"] = math.fsum(weights[a] * group_est[a] for a in active)
        for s in strata:
            rep = [x for x in reps[(s, metric)] if not math.isnan(x)]
            if not rep:
                rows.append(BootstrapRow(s, metric, estimates[s], math.nan, math.nan, math.nan))
                continue
            if len(rep) < replicates:
                logger.info("%s/%s: %d of %d replicates undefined", s, metric, replicates - len(rep), replicates)
            srt = sorted(rep)
            rows.append(BootstrapRow(
                s, metric, estimates[s], _stdev(rep),
                quantile(srt, alpha / 2), quantile(srt, 1 - alpha / 2),
            ))
    return rows


def participant_metric_array(survey: Survey, metric: str) -> np.ndarray:
    """Metric value per participant in survey order, NaN where undefined."""
    pv = participant_values(survey)
    out = np.empty(len(survey))
    for i, p in enumerate(survey.participants):
        k, dur = pv[p.id]
        v = k if metric == CONTACTS else dur
        out[i] = math.nan if v is None else v
    return out
