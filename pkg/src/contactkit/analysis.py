"""Descriptive statistics and mixing matrices from a clean survey."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .ages import N_SURVEY_GROUPS, SURVEY_GROUP_LABELS
from .diary import LOCATIONS, RELATIONS, SEXES, Survey
from .exceptions import UncoveredStratumError
from .population import PopulationPyramid
from .validation import check_nonnegative_matrix

CONTACTS = "contacts_per_day"
DURATION = "mean_duration_per_contact_hours"
METRICS = (CONTACTS, DURATION)
STRATIFIERS = ("overall", "age_group", "sex", "household_size_band", "province")
HOUSEHOLD_BANDS = ("1", "2", "3", "4", "5", "6+")


def format_real(x: float) -> str:
    """17 significant digits, enough to round-trip any double."""
    return format(float(x), ".17g")


def quantile(sorted_values: Sequence[float], q: float) -> float:
    """Linear interpolation between order statistics (numpy's default)."""
    n = len(sorted_values)
    h = (n - 1) * q
    lo = math.floor(h)
    frac = h - lo
    if frac == 0 or lo + 1 >= n:
        return float(sorted_values[lo])
    a, b = sorted_values[lo], sorted_values[lo + 1]
    return float(a + frac * (b - a))


def mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


@dataclass(frozen=True)
class SummaryStats:
    n: int
    mean: float | None
    iqr: tuple[float, float] | None

    @classmethod
    def of(cls, values: Sequence[float]) -> "SummaryStats":
        if not values:
            return cls(0, None, None)
        s = sorted(values)
        return cls(len(s), mean(s), (quantile(s, 0.25), quantile(s, 0.75)))


@dataclass(frozen=True, eq=False)
class MixingMatrices:
    """Mean contacts per day (``M``) and mean hours per contact (``T``).

    Rows index the participant's group, columns the contact's group.
    """

    M: np.ndarray
    T: np.ndarray
    participant_counts: np.ndarray

    def __post_init__(self):
        shape = (N_SURVEY_GROUPS, N_SURVEY_GROUPS)
        M = check_nonnegative_matrix(self.M, shape, "M")
        T = check_nonnegative_matrix(self.T, shape, "T")
        if np.any((M == 0) != (T == 0)):
            raise ValueError("T must be zero exactly where M is zero")
        counts = np.asarray(self.participant_counts, dtype=int)
        if counts.shape != (N_SURVEY_GROUPS,) or np.any(counts < 0):
            raise ValueError("participant_counts must be 6 nonnegative integers")
        for name, arr in (("M", M), ("T", T), ("participant_counts", counts)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def empty_rows(self) -> np.ndarray:
        """Groups without participants; their rows are all zero."""
        return self.participant_counts == 0

    def contacts_only(self) -> "MixingMatrices":
        """Copy with every nonzero duration set to one."""
        return MixingMatrices(self.M, (self.M > 0).astype(float), self.participant_counts)

    def to_json(self) -> str:
        def row(values):
            return "[" + ", ".join(format_real(v) for v in values) + "]"

        def mat(a):
            return "[\n    " + ",\n    ".join(row(r) for r in a) + "\n  ]"

        labels = ", ".join(json.dumps(lab) for lab in SURVEY_GROUP_LABELS)
        counts = ", ".join(str(int(c)) for c in self.participant_counts)
        return (
            "{\n"
            f'  "age_groups": [{labels}],\n'
            f'  "M": {mat(self.M)},\n'
            f'  "T": {mat(self.T)},\n'
            f'  "participant_counts": [{counts}]\n'
            "}\n"
        )

    @classmethod
    def from_json(cls, text: str) -> "MixingMatrices":
        payload = json.loads(text)
        missing = {"M", "T"} - set(payload)
        if missing:
            raise ValueError(f"matrices JSON lacks keys {sorted(missing)}")
        labels = payload.get("age_groups")
        if labels is not None and tuple(labels) != SURVEY_GROUP_LABELS:
            raise ValueError(f"unexpected age_groups {labels}")
        counts = payload.get("participant_counts", [1] * N_SURVEY_GROUPS)
        return cls(np.array(payload["M"], float), np.array(payload["T"], float), np.array(counts))


def participant_values(survey: Survey) -> dict[str, tuple[int, float | None]]:
    """Per participant: number of contacts and mean hours per contact."""
    out = {}
    for pid, contacts in survey.contacts_by_participant().items():
        k = len(contacts)
        minutes = sum(c.duration_minutes for c in contacts)
        out[pid] = (k, minutes / (60 * k) if k else None)
    return out


def household_band(size: int) -> str:
    return "6+" if size >= 6 else str(size)


def _stratum_keys(survey: Survey, stratifier: str) -> tuple[list[str], dict[str, str]]:
    ps = survey.participants
    if stratifier == "overall":
        return ["overall"], {p.id: "overall" for p in ps}
    if stratifier == "age_group":
        return list(SURVEY_GROUP_LABELS), {p.id: SURVEY_GROUP_LABELS[p.age_group] for p in ps}
    if stratifier == "sex":
        return list(SEXES), {p.id: p.sex for p in ps}
    if stratifier == "household_size_band":
        return list(HOUSEHOLD_BANDS), {p.id: household_band(p.household_size) for p in ps}
    if stratifier == "province":
        sizes: dict[str, int] = {}
        for p in ps:
            sizes[p.province] = sizes.get(p.province, 0) + 1
        order = sorted(sizes, key=lambda prov: (-sizes[prov], prov))
        return order, {p.id: p.province for p in ps}
    raise ValueError(f"unknown stratifier {stratifier!r}; expected one of {STRATIFIERS}")


def metric_values(survey: Survey, metric: str, stratifier: str = "overall") -> dict[str, list[float]]:
    """Per-participant metric values grouped by stratum, in file order.

    Participants without contacts have no per-contact duration and are
    left out of the duration metric.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    order, key = _stratum_keys(survey, stratifier)
    values = participant_values(survey)
    out: dict[str, list[float]] = {s: [] for s in order}
    for p in survey.participants:
        k, dur = values[p.id]
        v = k if metric == CONTACTS else dur
        if v is not None:
            out[key[p.id]].append(v)
    return out


def summary_stats(survey: Survey, stratifier: str = "overall", metric: str = CONTACTS) -> dict[str, SummaryStats]:
    """Mean and interquartile range of a per-participant metric by stratum.

    Empty strata are omitted.
    """
    grouped = metric_values(survey, metric, stratifier)
    return {s: SummaryStats.of(v) for s, v in grouped.items() if v}


def population_adjusted_mean(group_means, weights) -> float:
    """Weight survey-group means by population shares.

    ``weights`` is either a :class:`PopulationPyramid` (aggregated to the
    six contact groups) or an explicit weight vector matching
    ``group_means``. Entries of ``group_means`` may be ``None`` only where
    the weight is zero.
    """
    if isinstance(weights, PopulationPyramid):
        w = weights.contact_group_weights()
    else:
        w = np.asarray(weights, dtype=float)
    if len(group_means) != len(w):
        raise ValueError(f"{len(group_means)} group means but {len(w)} weights")
    total = math.fsum(w)
    if total <= 0 or np.any(w < 0):
        raise ValueError("weights must be nonnegative with a positive sum")
    terms = []
    for a, (m, wa) in enumerate(zip(group_means, w)):
        if wa == 0:
            continue
        if m is None or not math.isfinite(m):
            raise UncoveredStratumError(f"uncovered stratum: group {a + 1} has weight {wa} but no estimate")
        terms.append(wa / total * m)
    return math.fsum(terms)


def build_mixing_matrices(survey: Survey) -> MixingMatrices:
    n = np.zeros(N_SURVEY_GROUPS, dtype=int)
    counts = np.zeros((N_SURVEY_GROUPS, N_SURVEY_GROUPS), dtype=int)
    minutes = np.zeros((N_SURVEY_GROUPS, N_SURVEY_GROUPS), dtype=int)
    group_of = {}
    for p in survey.participants:
        group_of[p.id] = p.age_group
        n[p.age_group] += 1
    for c in survey.contacts:
        a, b = group_of[c.participant_id], c.age_group
        counts[a, b] += 1
        minutes[a, b] += c.duration_minutes
    with np.errstate(divide="ignore", invalid="ignore"):
        M = np.where(n[:, None] > 0, counts / np.maximum(n, 1)[:, None], 0.0)
        T = np.where(counts > 0, minutes / (60 * np.maximum(counts, 1)), 0.0)
    # zero-minute contacts would leave T == 0 where M > 0
    zero_dur = (counts > 0) & (minutes == 0)
    if np.any(zero_dur):
        raise ValueError(
            "contacts with zero total duration in cells "
            f"{[(int(a) + 1, int(b) + 1) for a, b in zip(*np.nonzero(zero_dur))]}"
        )
    return MixingMatrices(M, T, n)


def _category_distribution(survey: Survey, attr: str, categories, stratifier: str, weight: str):
    if weight not in ("count", "duration"):
        raise ValueError(f"weight must be 'count' or 'duration', got {weight!r}")
    order, key = _stratum_keys(survey, stratifier)
    tallies = {s: dict.fromkeys(categories, 0) for s in order}
    for c in survey.contacts:
        tallies[key[c.participant_id]][getattr(c, attr)] += 1 if weight == "count" else c.duration_minutes
    out = {}
    for s, tally in tallies.items():
        total = sum(tally.values())
        if total:
            out[s] = {cat: v / total for cat, v in tally.items()}
    return out


def relationship_distribution(survey: Survey, stratifier: str = "overall", weight: str = "count"):
    """Share of contacts (or contact time) by relation, per stratum."""
    return _category_distribution(survey, "relation", RELATIONS, stratifier, weight)


def location_distribution(survey: Survey, stratifier: str = "overall", weight: str = "count"):
    """Share of contacts (or contact time) by location, per stratum."""
    return _category_distribution(survey, "location", LOCATIONS, stratifier, weight)


def population_adjusted_distribution(by_group: Mapping[str, Mapping[str, float]], weights) -> dict[str, float]:
    """Mix age-group distributions with population weights."""
    cats = None
    for dist in by_group.values():
        cats = list(dist)
        break
    if cats is None:
        raise UncoveredStratumError("no age group has any contacts")
    per_cat = {
        cat: [by_group[lab][cat] if lab in by_group else None for lab in SURVEY_GROUP_LABELS]
        for cat in cats
    }
    return {cat: population_adjusted_mean(v, weights) for cat, v in per_cat.items()}


def same_group_fraction(survey: Survey, metric: str = "contacts") -> list[float | None]:
    """Fraction of each group's contacts (or contact time) spent with its own group."""
    if metric not in ("contacts", "duration"):
        raise ValueError(f"metric must be 'contacts' or 'duration', got {metric!r}")
    same = [0] * N_SURVEY_GROUPS
    total = [0] * N_SURVEY_GROUPS
    group_of = {p.id: p.age_group for p in survey.participants}
    for c in survey.contacts:
        a = group_of[c.participant_id]
        w = 1 if metric == "contacts" else c.duration_minutes
        total[a] += w
        if c.age_group == a:
            same[a] += w
    return [s / t if t else None for s, t in zip(same, total)]


class ContactMatrixEstimator(BaseEstimator):
    """Estimate contact (``M_``) and duration (``T_``) matrices from a survey.

    Parameters
    ----------
    duration_unit_minutes : float, default=60
        Minutes per unit of ``T_``; the default reports hours.
    """

    def __init__(self, duration_unit_minutes: float = 60.0):
        self.duration_unit_minutes = duration_unit_minutes

    def fit(self, survey: Survey, y=None):
        if not isinstance(survey, Survey):
            raise TypeError(f"expected a Survey, got {type(survey).__name__}")
        mixing = build_mixing_matrices(survey)
        scale = 60.0 / self.duration_unit_minutes
        if scale != 1.0:
            mixing = MixingMatrices(mixing.M, mixing.T * scale, mixing.participant_counts)
        self.matrices_ = mixing
        self.M_ = mixing.M
        self.T_ = mixing.T
        self.participant_counts_ = mixing.participant_counts
        self.n_participants_ = len(survey)
        self.n_contacts_ = len(survey.contacts)
        return self

    def transform(self, survey=None) -> MixingMatrices:
        check_is_fitted(self, "matrices_")
        return self.matrices_

    def fit_transform(self, survey: Survey, y=None) -> MixingMatrices:
        return self.fit(survey).matrices_
