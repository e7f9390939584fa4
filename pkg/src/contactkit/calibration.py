"""Basic reproduction number and transmission-rate calibration."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .exceptions import ConvergenceError
from .population import ModelPopulation
from .transmission import HOMOGENEOUS, MixingSpec
from .validation import check_nonnegative_matrix, check_positive


@dataclass(frozen=True, eq=False)
class NextGenMatrix:
    K: np.ndarray
    beta_used: float
    gamma_used: float

    @property
    def r0(self) -> float:
        return spectral_radius(self.K)

    def to_dict(self) -> dict:
        return {"K": self.K.tolist(), "beta": self.beta_used, "gamma": self.gamma_used, "r0": self.r0}


def next_generation_matrix(mixing: MixingSpec, population: ModelPopulation,
                           beta: float, gamma: float) -> NextGenMatrix:
    """Linearisation of the infection subsystem at the disease-free state.

    On the six contact groups ``K[a, b] = beta/gamma * C[a, b] * N~_a / N~_b``
    with ``C`` the effective contact-duration matrix of ``mixing``. In
    homogeneous mode K is the 1x1 matrix ``beta * c / gamma``.
    """
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    check_positive(gamma, "gamma")
    if mixing.mode == HOMOGENEOUS:
        K = np.array([[beta * mixing.scalar_rate(population) / gamma]])
        return NextGenMatrix(K, float(beta), float(gamma))
    Ntil = population.contact_group_totals()
    C = mixing.transmission_matrix()
    empty = Ntil <= 0
    if np.any(empty & np.any(C > 0, axis=0)):
        bad = [int(b) + 1 for b in np.nonzero(empty & np.any(C > 0, axis=0))[0]]
        raise ValueError(f"contact group(s) {bad} have contacts but zero population")
    # empty groups hold neither susceptibles nor infectives: zero rows and columns
    live = ~empty
    K = np.zeros_like(C)
    ratio = Ntil[live][:, None] / Ntil[live][None, :]
    K[np.ix_(live, live)] = (beta / gamma) * C[np.ix_(live, live)] * ratio
    return NextGenMatrix(K, float(beta), float(gamma))


def _radius_2x2(K: np.ndarray) -> float:
    a, b, c, d = K[0, 0], K[0, 1], K[1, 0], K[1, 1]
    half_diff = 0.5 * (a - d)
    return float(0.5 * (a + d) + math.sqrt(half_diff * half_diff + b * c))


def _perron_root(K: np.ndarray, tol: float, max_iter: int) -> float:
    """Power iteration on ``K + s*I`` for an irreducible block.

    The shift makes the iteration converge for periodic matrices too.
    Convergence is judged by Collatz-Wielandt bounds, which bracket the
    Perron root for any positive vector.
    """
    n = K.shape[0]
    shift = max(float(K.sum(axis=1).mean()), np.finfo(float).tiny)
    x = np.full(n, 1.0 / n)
    best_gap = math.inf
    last_check = 0
    gap = math.inf
    for it in range(1, max_iter + 1):
        y = K @ x
        ratios = y / x
        lo, hi = float(ratios.min()), float(ratios.max())
        gap = hi - lo
        if gap <= tol * hi:
            return 0.5 * (lo + hi)
        x = y + shift * x
        x /= x.sum()
        if it - last_check >= 1000:
            # stagnation: restart from the uniform vector with a different shift
            if gap > 0.99 * best_gap:
                shift *= 0.5 if shift > hi else 2.0
                x = np.full(n, 1.0 / n)
            best_gap = min(best_gap, gap)
            last_check = it
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} iterations "
        f"(Collatz-Wielandt gap {gap:.3g})")


def spectral_radius(K, tol: float = 1e-12, max_iter: int = 100_000) -> float:
    """Dominant eigenvalue of a nonnegative square matrix.

    1x1 and 2x2 matrices use closed forms. Larger ones are split into
    strongly connected blocks; each block's Perron root comes from shifted
    power iteration and the largest is returned.
    """
    K = check_nonnegative_matrix(K, name="K")
    if K.shape[0] != K.shape[1]:
        raise ValueError(f"K must be square, got shape {K.shape}")
    n = K.shape[0]
    if n == 0:
        raise ValueError("K is empty")
    if n == 1:
        rho = float(K[0, 0])
    elif n == 2:
        rho = _radius_2x2(K)
    else:
        n_blocks, labels = connected_components(csr_matrix(K > 0), directed=True, connection="strong")
        rho = 0.0
        for blk in range(n_blocks):
            idx = np.nonzero(labels == blk)[0]
            sub = K[np.ix_(idx, idx)]
            if idx.size == 1:
                r = float(sub[0, 0])
            elif idx.size == 2:
                r = _radius_2x2(sub)
            else:
                r = _perron_root(sub, tol, max_iter)
            rho = max(rho, r)

    # Perron-Frobenius bounds
    slack = 1e-9 * max(rho, 1e-300)
    if rho < K.diagonal().max() - slack or rho > K.sum(axis=1).max() + slack:
        raise ConvergenceError(f"spectral radius {rho} violates Perron-Frobenius bounds")
    return rho


def basic_reproduction_number(mixing: MixingSpec, population: ModelPopulation,
                              beta: float, gamma: float) -> float:
    return next_generation_matrix(mixing, population, beta, gamma).r0


def calibrate_beta(mixing: MixingSpec, population: ModelPopulation,
                   gamma: float, target_r0: float) -> float:
    """Transmission rate giving ``target_r0``; R0 is linear in beta."""
    check_positive(target_r0, "target_r0")
    rho_unit = next_generation_matrix(mixing, population, 1.0, 1.0).r0
    if rho_unit <= 0:
        raise ValueError("mixing has no transmission pathway (spectral radius 0)")
    return target_r0 * gamma / rho_unit
