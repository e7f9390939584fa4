"""Contact-diary analysis and age-structured SIR burden modelling."""

__version__ = "0.1.0"

from .ages import assign_survey_age_group, g_map
from .analysis import (ContactMatrixEstimator, MixingMatrices, SummaryStats, build_mixing_matrices,
                       location_distribution, population_adjusted_mean, relationship_distribution,
                       same_group_fraction, summary_stats)
from .burden import BurdenReport, BurdenRisks, BurdenTransformer, apply_burden, map_to_bands
from .calibration import (NextGenMatrix, basic_reproduction_number, calibrate_beta,
                          next_generation_matrix, spectral_radius)
from .diary import ContactRecord, Participant, Survey, parse_diaries, read_diaries, validate_and_filter
from .model import AgeStructuredSIR
from .population import ModelPopulation, PopulationPyramid
from .stats import bootstrap_statistics, mann_whitney_u, t_test
from .transmission import (EpiState, MixingSpec, SimulationConfig, Trajectory, derivative,
                           force_of_infection, infections_by_age_at_stop, simulate)

__all__ = [
    "AgeStructuredSIR", "BurdenReport", "BurdenRisks", "BurdenTransformer", "ContactMatrixEstimator",
    "ContactRecord", "EpiState", "MixingMatrices", "MixingSpec", "ModelPopulation", "NextGenMatrix",
    "Participant", "PopulationPyramid", "SimulationConfig", "SummaryStats", "Survey", "Trajectory",
    "apply_burden", "assign_survey_age_group", "basic_reproduction_number", "bootstrap_statistics",
    "build_mixing_matrices", "calibrate_beta", "derivative", "force_of_infection", "g_map",
    "infections_by_age_at_stop", "location_distribution", "mann_whitney_u", "map_to_bands",
    "next_generation_matrix", "parse_diaries", "population_adjusted_mean", "read_diaries",
    "relationship_distribution", "same_group_fraction", "simulate", "spectral_radius",
    "summary_stats", "t_test", "validate_and_filter",
]
