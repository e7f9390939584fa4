"""Population pyramids and model populations."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np

from .ages import MODEL_GROUP_LABELS, N_MODEL_GROUPS, aggregate_to_contact_groups
from .validation import check_nonnegative_vector

logger = logging.getLogger(__name__)

DEFAULT_POPULATION_TOTAL = 20_000_000.0


@dataclass(frozen=True, eq=False)
class PopulationPyramid:
    """Shares of the population in the 18 five-year groups.

    Any nonnegative weights are accepted and normalised to sum to one.
    """

    proportions: np.ndarray

    def __post_init__(self):
        p = check_nonnegative_vector(self.proportions, N_MODEL_GROUPS, "proportions")
        total = math.fsum(p)
        if total <= 0:
            raise ValueError("population pyramid has zero total")
        if abs(total - 1.0) > 1e-6:
            logger.warning("pyramid proportions sum to %.8g; normalising", total)
        p = p / total
        p.setflags(write=False)
        object.__setattr__(self, "proportions", p)

    @classmethod
    def uniform(cls) -> "PopulationPyramid":
        return cls(np.full(N_MODEL_GROUPS, 1.0 / N_MODEL_GROUPS))

    @classmethod
    def from_csv(cls, path) -> "PopulationPyramid":
        """Read an ``age_group,proportion`` CSV with the 18 five-year labels."""
        try:
            fh = open(path, newline="", encoding="utf-8")
        except OSError as exc:
            raise FileNotFoundError(f"cannot read population pyramid {path}: {exc.strerror}") from exc
        with fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or {"age_group", "proportion"} - set(reader.fieldnames):
                raise ValueError(f"{path}: expected columns age_group,proportion")
            values: dict[str, float] = {}
            for row in reader:
                label = row["age_group"].strip()
                if label not in MODEL_GROUP_LABELS:
                    raise ValueError(f"{path}: unknown age group label {label!r}")
                if label in values:
                    raise ValueError(f"{path}: duplicate age group {label!r}")
                values[label] = float(row["proportion"])
        missing = [lab for lab in MODEL_GROUP_LABELS if lab not in values]
        if missing:
            raise ValueError(f"{path}: missing age groups {missing}")
        return cls(np.array([values[lab] for lab in MODEL_GROUP_LABELS]))

    def contact_group_weights(self) -> np.ndarray:
        """Population shares of the 6 contact groups."""
        return aggregate_to_contact_groups(self.proportions)

    def counts(self, total: float = DEFAULT_POPULATION_TOTAL) -> np.ndarray:
        return self.proportions * total


@dataclass(frozen=True, eq=False)
class ModelPopulation:
    counts: np.ndarray
    total: float

    def __post_init__(self):
        counts = check_nonnegative_vector(self.counts, N_MODEL_GROUPS, "counts")
        if not math.isclose(math.fsum(counts), self.total, rel_tol=1e-6):
            raise ValueError(f"counts sum to {math.fsum(counts)}, not total={self.total}")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "total", float(self.total))

    @classmethod
    def from_pyramid(cls, pyramid: PopulationPyramid, total: float = DEFAULT_POPULATION_TOTAL):
        return cls(pyramid.counts(total), total)

    @classmethod
    def from_counts(cls, counts) -> "ModelPopulation":
        counts = np.asarray(counts, dtype=float)
        return cls(counts, math.fsum(counts))

    def contact_group_totals(self) -> np.ndarray:
        return aggregate_to_contact_groups(self.counts)
