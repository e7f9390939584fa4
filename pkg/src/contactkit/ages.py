"""Age-group boundaries shared by the survey, model and burden code.

Three groupings are in play:

* the 6 survey groups used for contact matrices (0-19, 20-24, ..., 40+),
* the 18 five-year model groups (0-4, 5-9, ..., 80-84, 85+),
* the burden bands that severity risks are defined on.

Indices are 0-based in code. ``g_map`` keeps the 1-based convention in its
signature because that is how the mapping is usually written down.
"""
from __future__ import annotations

import numpy as np

N_SURVEY_GROUPS = 6
N_MODEL_GROUPS = 18

SURVEY_GROUP_LABELS = ("0-19", "20-24", "25-29", "30-34", "35-39", "40+")
MODEL_GROUP_LABELS = tuple(f"{5 * k}-{5 * k + 4}" for k in range(17)) + ("85+",)

# lower bounds of survey groups 2..6
_SURVEY_CUTS = (20, 25, 30, 35, 40)

SYMPTOM_BANDS = ("0-19", "20-39", "40-59", "60-79", "80+")
SEVERITY_BANDS = ("0-19", "20-39", "40-59", "60+")


def g_map(k: int) -> int:
    """Map five-year model group ``k`` (1..18) to contact group 1..6.

    Groups 8 and 9 (ages 35-44) both land in contact group 5, so the
    model's group 5 is wider than the survey's 35-39 stratum.
    """
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)):
        raise TypeError(f"model group index must be an integer, got {k!r}")
    if not 1 <= k <= N_MODEL_GROUPS:
        raise ValueError(f"model group index must be in 1..18, got {k}")
    if k <= 4:
        return 1
    if k <= 7:
        return k - 3
    if k <= 9:
        return 5
    return 6


# 0-based lookup: MODEL_TO_CONTACT[k0] is the 0-based contact group
MODEL_TO_CONTACT = np.array([g_map(k) - 1 for k in range(1, N_MODEL_GROUPS + 1)])

# number of five-year groups folded into each contact group
CONTACT_GROUP_MULTIPLICITY = np.bincount(MODEL_TO_CONTACT, minlength=N_SURVEY_GROUPS)


def survey_group(age: int, age_hi: int | None = None) -> int:
    """Return the 0-based survey group of an exact age or an inclusive range.

    Ranges resolve through their integer midpoint ``(lo + hi) // 2``.
    """
    if age_hi is not None:
        if age_hi < age:
            raise ValueError(f"age range [{age}, {age_hi}] has lo > hi")
        age = (age + age_hi) // 2
    if age < 0:
        raise ValueError(f"age must be nonnegative, got {age}")
    group = 0
    for cut in _SURVEY_CUTS:
        if age >= cut:
            group += 1
    return group


def assign_survey_age_group(age_or_range) -> int:
    """1-based survey group for an int age or a ``(lo, hi)`` pair."""
    if isinstance(age_or_range, (tuple, list)):
        lo, hi = age_or_range
        return survey_group(int(lo), int(hi)) + 1
    return survey_group(int(age_or_range)) + 1


def aggregate_to_contact_groups(values) -> np.ndarray:
    """Sum an 18-vector (or trailing 18 axis) into the 6 contact groups."""
    values = np.asarray(values, dtype=float)
    if values.shape[-1] != N_MODEL_GROUPS:
        raise ValueError(f"expected a trailing axis of length 18, got shape {values.shape}")
    out = np.zeros(values.shape[:-1] + (N_SURVEY_GROUPS,))
    for k0, a in enumerate(MODEL_TO_CONTACT):
        out[..., a] += values[..., k0]
    return out


def symptom_band_index(k0: int) -> int:
    """0-based five-band index for 0-based model group ``k0``."""
    if k0 < 4:
        return 0
    if k0 < 8:
        return 1
    if k0 < 12:
        return 2
    if k0 < 16:
        return 3
    return 4
