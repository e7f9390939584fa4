"""From infections by age to symptomatic cases, admissions and deaths."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .ages import N_MODEL_GROUPS, SEVERITY_BANDS, SYMPTOM_BANDS, symptom_band_index
from .validation import check_nonnegative_vector

INDICATORS = ("infections", "symptomatic", "hospitalizations", "deaths")

# percent values
DEFAULT_SYMPTOMATIC = {"0-19": 18.1, "20-39": 22.4, "40-59": 30.5, "60-79": 35.5, "80+": 64.6}
DEFAULT_HOSPITAL = {"0-19": 40.0, "20-39": 29.2, "40-59": 33.3, "60+": 33.8}
DEFAULT_DEATH = {"0-19": 0.51, "20-39": 0.65, "40-59": 2.38, "60+": 10.52}


@dataclass(frozen=True)
class BurdenRisks:
    """Age-specific risks, stored as percentages keyed by band label.

    Admission and death risks are conditional on being symptomatic.
    """

    p_symptomatic: dict = field(default_factory=lambda: dict(DEFAULT_SYMPTOMATIC))
    p_hospital_given_symptomatic: dict = field(default_factory=lambda: dict(DEFAULT_HOSPITAL))
    p_death_given_symptomatic: dict = field(default_factory=lambda: dict(DEFAULT_DEATH))

    def __post_init__(self):
        for name, bands in (
            ("p_symptomatic", SYMPTOM_BANDS),
            ("p_hospital_given_symptomatic", SEVERITY_BANDS),
            ("p_death_given_symptomatic", SEVERITY_BANDS),
        ):
            table = getattr(self, name)
            missing = [b for b in bands if b not in table]
            if missing:
                raise ValueError(f"risk table {name} is missing band(s) {missing}")
            extra = [b for b in table if b not in bands]
            if extra:
                raise ValueError(f"risk table {name} has unknown band(s) {extra}")
            for band, pct in table.items():
                if not 0 <= float(pct) <= 100:
                    raise ValueError(f"{name}[{band}] = {pct}% is not a probability")

    @classmethod
    def from_json(cls, text: str) -> "BurdenRisks":
        payload = json.loads(text)
        keys = ("p_symptomatic", "p_hospital_given_symptomatic", "p_death_given_symptomatic")
        missing = [k for k in keys if k not in payload]
        if missing:
            raise ValueError(f"risk table JSON is missing {missing}")
        return cls(**{k: {b: float(v) for b, v in payload[k].items()} for k in keys})

    def to_json(self) -> str:
        return json.dumps({
            "p_symptomatic": self.p_symptomatic,
            "p_hospital_given_symptomatic": self.p_hospital_given_symptomatic,
            "p_death_given_symptomatic": self.p_death_given_symptomatic,
        }, indent=2) + "\n"


@dataclass(frozen=True)
class BurdenReport:
    """Expected counts per band for each indicator."""

    infections: dict
    symptomatic: dict
    hospitalizations: dict
    deaths: dict

    def indicator(self, name: str) -> dict:
        if name not in INDICATORS:
            raise KeyError(name)
        return getattr(self, name)

    def shares(self, name: str) -> dict:
        counts = self.indicator(name)
        total = math.fsum(counts.values())
        if total <= 0:
            return {b: 0.0 for b in counts}
        return {b: c / total for b, c in counts.items()}

    def rows(self):
        """``(indicator, band, count, share)`` tuples in reporting order."""
        for name in INDICATORS:
            shares = self.shares(name)
            for band, count in self.indicator(name).items():
                yield name, band, count, shares[band]


def map_to_bands(infections_18) -> tuple[dict, dict]:
    """Aggregate an 18-vector to the five symptom bands and the four severity bands."""
    x = check_nonnegative_vector(infections_18, N_MODEL_GROUPS, "infections")
    five = [0.0] * len(SYMPTOM_BANDS)
    for k0, v in enumerate(x):
        five[symptom_band_index(k0)] += float(v)
    by5 = dict(zip(SYMPTOM_BANDS, five))
    by4 = {"0-19": five[0], "20-39": five[1], "40-59": five[2], "60+": five[3] + five[4]}
    return by5, by4


def _percent(value) -> Fraction:
    # percentages are decimal quantities; read them as written, not as binary floats
    return Fraction(repr(float(value)))


def apply_burden(infections_18, risks: BurdenRisks | None = None) -> BurdenReport:
    """Expected symptomatic cases, admissions and deaths per band.

    Admissions and deaths are computed on symptomatic counts with the two
    oldest symptom bands merged into 60+. Products are carried in exact
    rational arithmetic and rounded to float once, so e.g. 1000 infections
    at 64.6% give exactly 646.0.
    """
    risks = risks or BurdenRisks()
    infections, _ = map_to_bands(infections_18)
    sym = {b: Fraction(infections[b]) * _percent(risks.p_symptomatic[b]) / 100 for b in SYMPTOM_BANDS}
    sym4 = {"0-19": sym["0-19"], "20-39": sym["20-39"], "40-59": sym["40-59"],
            "60+": sym["60-79"] + sym["80+"]}
    hosp = {b: float(sym4[b] * _percent(risks.p_hospital_given_symptomatic[b]) / 100) for b in SEVERITY_BANDS}
    deaths = {b: float(sym4[b] * _percent(risks.p_death_given_symptomatic[b]) / 100) for b in SEVERITY_BANDS}
    symptomatic = {b: float(v) for b, v in sym.items()}
    return BurdenReport(infections, symptomatic, hosp, deaths)


class BurdenTransformer(TransformerMixin, BaseEstimator):
    """Map rows of 18 age-group infection counts to burden features.

    ``transform`` returns, per row, symptomatic counts in the five symptom
    bands followed by admissions and deaths in the four severity bands;
    :meth:`get_feature_names_out` labels the columns.
    """

    def __init__(self, risks: BurdenRisks | None = None):
        self.risks = risks

    def fit(self, X=None, y=None):
        self.risks_ = self.risks or BurdenRisks()
        self.n_features_in_ = N_MODEL_GROUPS
        return self

    def transform(self, X) -> np.ndarray:
        risks = getattr(self, "risks_", None) or self.risks or BurdenRisks()
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        rows = np.atleast_2d(X)
        if rows.shape[1] != N_MODEL_GROUPS:
            raise ValueError(f"expected 18 columns, got {rows.shape[1]}")
        out = []
        for row in rows:
            rep = apply_burden(row, risks)
            out.append(list(rep.symptomatic.values()) + list(rep.hospitalizations.values())
                       + list(rep.deaths.values()))
        out = np.array(out)
        return out[0] if single else out

    def get_feature_names_out(self, input_features=None):
        return np.array(
            [f"symptomatic_{b}" for b in SYMPTOM_BANDS]
            + [f"hospitalizations_{b}" for b in SEVERITY_BANDS]
            + [f"deaths_{b}" for b in SEVERITY_BANDS],
            dtype=object,
        )
