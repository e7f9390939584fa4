"""Estimator-style front end: calibrate on fit, simulate on predict."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .analysis import MixingMatrices
from .calibration import calibrate_beta, next_generation_matrix
from .population import ModelPopulation, PopulationPyramid
from .transmission import (CONTACTS_AND_DURATION, DEFAULT_GAMMA, DISTINCT_GROUPS, MixingSpec,
                           SimulationConfig, Trajectory, infections_by_age_at_stop, simulate)


class AgeStructuredSIR(BaseEstimator):
    """Age-structured SIR model calibrated to a target R0.

    ``fit`` solves for the transmission rate (``beta_``) unless ``beta`` is
    given; ``simulate`` runs to the stop threshold and ``predict`` returns
    ever-infected counts per five-year group at that point.

    Parameters
    ----------
    mode : {"homogeneous", "contacts_only", "contacts_and_duration"}
    target_r0 : float, default=1.3
    gamma : float, default=1/5.1
        Recovery rate per day.
    beta : float or None
        Fixed transmission rate; skips calibration when set.
    seeds, stop_cumulative, dt, t_max : see :class:`SimulationConfig`.
    foi_summation : {"distinct_groups", "literal_18"}
    contact_rate : float or None
        Scalar contact rate for homogeneous mode.
    population_total : float
        Used when ``fit`` receives a :class:`PopulationPyramid`.
    """

    def __init__(self, mode=CONTACTS_AND_DURATION, target_r0=1.3, gamma=DEFAULT_GAMMA, beta=None,
                 seeds=10.0, stop_cumulative=1000.0, dt=0.05, t_max=5000.0,
                 foi_summation=DISTINCT_GROUPS, contact_rate=None, population_total=2e7):
        self.mode = mode
        self.target_r0 = target_r0
        self.gamma = gamma
        self.beta = beta
        self.seeds = seeds
        self.stop_cumulative = stop_cumulative
        self.dt = dt
        self.t_max = t_max
        self.foi_summation = foi_summation
        self.contact_rate = contact_rate
        self.population_total = population_total

    def fit(self, population, matrices: MixingMatrices | None = None):
        if isinstance(population, PopulationPyramid):
            population = ModelPopulation.from_pyramid(population, self.population_total)
        elif not isinstance(population, ModelPopulation):
            population = ModelPopulation.from_counts(population)
        self.population_ = population
        self.mixing_ = MixingSpec(self.mode, matrices, self.contact_rate, self.foi_summation)
        if self.beta is None:
            self.beta_ = calibrate_beta(self.mixing_, population, self.gamma, self.target_r0)
        else:
            self.beta_ = float(self.beta)
        self.ngm_ = next_generation_matrix(self.mixing_, population, self.beta_, self.gamma)
        self.r0_ = self.ngm_.r0
        return self

    def simulation_config(self) -> SimulationConfig:
        check_is_fitted(self, "beta_")
        return SimulationConfig(beta=self.beta_, gamma=self.gamma, seeds=self.seeds,
                                stop_cumulative=self.stop_cumulative, dt=self.dt, t_max=self.t_max)

    def simulate(self, record_every: int = 1) -> Trajectory:
        check_is_fitted(self, "beta_")
        self.trajectory_ = simulate(self.population_, self.mixing_, self.simulation_config(),
                                    record_every=record_every)
        return self.trajectory_

    def predict(self, X=None) -> np.ndarray:
        """Infections per five-year group when the stop threshold is hit."""
        return infections_by_age_at_stop(self.simulate())
