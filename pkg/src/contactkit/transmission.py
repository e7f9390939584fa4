"""Age-structured SIR dynamics driven by survey mixing matrices.

The population lives on 18 five-year groups while mixing is described on
the 6 survey groups; :data:`~contactkit.ages.MODEL_TO_CONTACT` links them.
The force of infection on five-year group ``i`` is::

    lambda_i = beta * sum_b M[g(i), b] * T[g(i), b] * I~_b / N~_b

where ``I~_b`` and ``N~_b`` are infectious and total counts aggregated
over contact group ``b``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ages import (CONTACT_GROUP_MULTIPLICITY, MODEL_TO_CONTACT, N_MODEL_GROUPS,
                   aggregate_to_contact_groups)
from .analysis import MixingMatrices, population_adjusted_mean
from .exceptions import IntegratorInstabilityError, ThresholdUnreachedError
from .population import ModelPopulation
from .validation import check_positive

HOMOGENEOUS = "homogeneous"
CONTACTS_ONLY = "contacts_only"
CONTACTS_AND_DURATION = "contacts_and_duration"
MODES = (HOMOGENEOUS, CONTACTS_ONLY, CONTACTS_AND_DURATION)

DISTINCT_GROUPS = "distinct_groups"
LITERAL_18 = "literal_18"
FOI_SUMMATIONS = (DISTINCT_GROUPS, LITERAL_18)

DEFAULT_GAMMA = 1 / 5.1

THRESHOLD_REACHED = "threshold_reached"
THRESHOLD_UNREACHED = "threshold_unreached"
COMPLETED = "completed"


@dataclass(frozen=True, eq=False)
class MixingSpec:
    """How infectious contact is modelled.

    ``contact_rate`` is the scalar contact rate used in homogeneous mode;
    when omitted it is taken from ``matrices`` (mean row sum of ``M``,
    weighted by population shares when :meth:`resolve` is given a
    population) or set to 1.
    """

    mode: str
    matrices: MixingMatrices | None = None
    contact_rate: float | None = None
    foi_summation: str = DISTINCT_GROUPS

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mixing mode {self.mode!r}; expected one of {MODES}")
        if self.foi_summation not in FOI_SUMMATIONS:
            raise ValueError(f"unknown foi_summation {self.foi_summation!r}")
        if self.mode != HOMOGENEOUS and self.matrices is None:
            raise ValueError(f"mode {self.mode!r} needs mixing matrices")
        if self.contact_rate is not None:
            check_positive(self.contact_rate, "contact_rate")

    def scalar_rate(self, population: ModelPopulation | None = None) -> float:
        if self.contact_rate is not None:
            return float(self.contact_rate)
        if self.matrices is None:
            return 1.0
        row_sums = self.matrices.M.sum(axis=1)
        if population is not None:
            weights = population.contact_group_totals()
        else:
            weights = self.matrices.participant_counts.astype(float)
        means = [float(r) if n > 0 else None
                 for r, n in zip(row_sums, self.matrices.participant_counts)]
        return population_adjusted_mean(means, weights)

    def transmission_matrix(self) -> np.ndarray:
        """Effective 6x6 ``M * T`` (with the literal multiplicity if asked)."""
        if self.mode == HOMOGENEOUS:
            raise ValueError("homogeneous mixing has no transmission matrix")
        M = self.matrices.M
        T = (M > 0).astype(float) if self.mode == CONTACTS_ONLY else self.matrices.T
        C = M * T
        if self.foi_summation == LITERAL_18:
            C = C * CONTACT_GROUP_MULTIPLICITY[None, :]
        return C


@dataclass(frozen=True, eq=False)
class EpiState:
    t: float
    S: np.ndarray
    I: np.ndarray
    R: np.ndarray

    @property
    def cumulative(self) -> float:
        """Ever-infected count, seeds included."""
        return math.fsum(self.S + self.I + self.R) - math.fsum(self.S)


@dataclass(frozen=True)
class SimulationConfig:
    beta: float
    gamma: float = DEFAULT_GAMMA
    seeds: float = 10.0
    stop_cumulative: float | None = 1000.0
    dt: float = 0.05
    t_max: float = 5000.0

    def __post_init__(self):
        if self.beta < 0 or not math.isfinite(self.beta):
            raise ValueError(f"beta must be a nonnegative finite rate, got {self.beta}")
        check_positive(self.gamma, "gamma")
        check_positive(self.dt, "dt")
        check_positive(self.t_max, "t_max")
        check_positive(self.seeds, "seeds")
        if self.stop_cumulative is not None:
            check_positive(self.stop_cumulative, "stop_cumulative")


@dataclass(eq=False)
class Trajectory:
    """Recorded states plus how the run ended.

    ``t_stop``/``stop_state`` hold the interpolated state where cumulative
    infections crossed the threshold, or the final state otherwise.
    """

    t: np.ndarray
    S: np.ndarray
    I: np.ndarray
    R: np.ndarray
    status: str
    t_stop: float
    stop_state: EpiState
    population: ModelPopulation = field(repr=False)

    @property
    def cumulative(self) -> float:
        return self.population.total - math.fsum(self.stop_state.S)

    def stop_record(self) -> dict:
        return {"t_stop": self.t_stop, "cumulative": self.cumulative, "status": self.status}


class _Kernel:
    """Precomputed pieces of the force of infection."""

    def __init__(self, population: ModelPopulation, mixing: MixingSpec, beta: float):
        self.beta = float(beta)
        self.homogeneous = mixing.mode == HOMOGENEOUS
        if self.homogeneous:
            self.rate = self.beta * mixing.scalar_rate(population)
            self.inv_total = 1.0 / population.total
            return
        C = mixing.transmission_matrix()
        Ntil = population.contact_group_totals()
        empty = Ntil <= 0
        if np.any(empty & np.any(C > 0, axis=0)):
            bad = [int(b) + 1 for b in np.nonzero(empty & np.any(C > 0, axis=0))[0]]
            raise ValueError(f"contact group(s) {bad} have contacts but zero population")
        self.C = self.beta * C
        self.inv_N = np.where(empty, 0.0, 1.0 / np.where(empty, 1.0, Ntil))

    def __call__(self, I: np.ndarray) -> np.ndarray:
        if self.homogeneous:
            return np.full(N_MODEL_GROUPS, self.rate * I.sum() * self.inv_total)
        prevalence = aggregate_to_contact_groups(I) * self.inv_N
        return (self.C @ prevalence)[MODEL_TO_CONTACT]


def force_of_infection(state: EpiState, mixing: MixingSpec, beta: float,
                       population: ModelPopulation) -> np.ndarray:
    """Per-capita infection rate of each five-year group, per day."""
    return _Kernel(population, mixing, beta)(np.asarray(state.I, dtype=float))


def _rhs(kernel: _Kernel, gamma: float, S: np.ndarray, I: np.ndarray):
    incidence = S * kernel(I)
    recovery = gamma * I
    return -incidence, incidence - recovery, recovery


def derivative(state: EpiState, mixing: MixingSpec, config: SimulationConfig,
               population: ModelPopulation):
    """Return ``(dS, dI, dR)``; their sum is zero group by group."""
    kernel = _Kernel(population, mixing, config.beta)
    return _rhs(kernel, config.gamma, np.asarray(state.S, float), np.asarray(state.I, float))


def initial_state(population: ModelPopulation, seeds: float) -> EpiState:
    """Seeds spread over groups in proportion to their size."""
    I0 = seeds * population.counts / population.total
    return EpiState(0.0, population.counts - I0, I0, np.zeros(N_MODEL_GROUPS))


def simulate(population: ModelPopulation, mixing: MixingSpec, config: SimulationConfig,
             record_every: int = 1) -> Trajectory:
    """Integrate with classical fixed-step RK4 until the stop rule fires.

    The run halts at the first step where cumulative infections
    (``N_total - sum(S)``) reach ``config.stop_cumulative``; stop time and
    state are linearly interpolated inside that step. Without a threshold,
    or if it is never reached, integration continues to ``t_max``.
    """
    if config.stop_cumulative is not None and config.stop_cumulative >= population.total:
        raise ValueError("stop_cumulative must be below the total population")
    if config.seeds >= population.total:
        raise ValueError("seeds must be below the total population")
    kernel = _Kernel(population, mixing, config.beta)
    gamma, dt = config.gamma, config.dt
    N = population.counts
    N_total = population.total
    tol = -1e-9 * N_total
    n_steps = int(math.ceil(config.t_max / dt - 1e-9))

    s0 = initial_state(population, config.seeds)
    S, I, R = s0.S.copy(), s0.I.copy(), s0.R.copy()
    ts, Ss, Is, Rs = [0.0], [S], [I], [R]
    threshold = config.stop_cumulative
    cum = N_total - math.fsum(S)
    status = COMPLETED if threshold is None else THRESHOLD_UNREACHED
    stop = None

    if threshold is not None and cum >= threshold:
        stop = EpiState(0.0, S, I, R)
        status = THRESHOLD_REACHED
        n_steps = 0

    for step in range(1, n_steps + 1):
        h = min(dt, config.t_max - (step - 1) * dt)
        k1 = _rhs(kernel, gamma, S, I)
        k2 = _rhs(kernel, gamma, S + 0.5 * h * k1[0], I + 0.5 * h * k1[1])
        k3 = _rhs(kernel, gamma, S + 0.5 * h * k2[0], I + 0.5 * h * k2[1])
        k4 = _rhs(kernel, gamma, S + h * k3[0], I + h * k3[1])
        S_new = S + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        I_new = I + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        # R is closed by conservation so S + I + R == N holds per group
        R_new = N - S_new - I_new
        t_new = (step - 1) * dt + h
        if min(S_new.min(), I_new.min(), R_new.min()) < tol:
            raise IntegratorInstabilityError(
                f"negative compartment at t={t_new:.6g}; reduce dt (currently {dt})")

        cum_new = N_total - math.fsum(S_new)
        if threshold is not None and cum_new >= threshold:
            t_prev = (step - 1) * dt
            theta = (threshold - cum) / (cum_new - cum)
            stop = EpiState(
                t_prev + theta * h,
                S + theta * (S_new - S),
                I + theta * (I_new - I),
                R + theta * (R_new - R),
            )
            status = THRESHOLD_REACHED
            S, I, R, cum = S_new, I_new, R_new, cum_new
            ts.append(t_new), Ss.append(S), Is.append(I), Rs.append(R)
            break
        S, I, R, cum = S_new, I_new, R_new, cum_new
        if step % record_every == 0 or step == n_steps:
            ts.append(t_new), Ss.append(S), Is.append(I), Rs.append(R)

    if stop is None:
        stop = EpiState(ts[-1], S, I, R)
    return Trajectory(
        t=np.array(ts), S=np.array(Ss), I=np.array(Is), R=np.array(Rs),
        status=status, t_stop=float(stop.t), stop_state=stop, population=population,
    )


def infections_by_age_at_stop(trajectory: Trajectory) -> np.ndarray:
    """Ever-infected count per five-year group at the stop time."""
    if trajectory.status != THRESHOLD_REACHED:
        raise ThresholdUnreachedError(
            f"run ended with status {trajectory.status!r}; no stop-time infections")
    return trajectory.population.counts - trajectory.stop_state.S
