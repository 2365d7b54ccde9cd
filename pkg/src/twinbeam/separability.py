r"""Separability of the evolved twin-beam and the time at which entanglement dies.

Two independent routes decide separability:

* :func:`ppt_eigen_check` diagonalizes :math:`V + \frac{i}{4}\Omega` with
  :math:`\Omega = J \oplus (-J)`, i.e. the uncertainty relation of the
  partially transposed state;
* :func:`variance_criterion` uses the fact that, for the twin-beam family,
  the smallest eigenvalue above equals :math:`\Sigma_-^2 - 1/4`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from twinbeam.channel import ChannelParams, drift_coefficient, evolve
from twinbeam.errors import DomainError
from twinbeam.gaussian_core import (
    VACUUM_VARIANCE,
    CovarianceMatrix,
    TwinBeamParams,
    VariancePair,
    twin_beam_from_photon_number,
)

EPS_EIG = 1e-12

#: Threshold returned when the state never becomes separable (pure loss, M = 0).
NEVER_SEPARABLE = math.inf

_J = np.array([[0.0, 1.0], [-1.0, 0.0]])
_Z = np.zeros((2, 2))
OMEGA_PT = np.block([[_J, _Z], [_Z, -_J]])


@dataclass(frozen=True)
class SeparabilityVerdict:
    separable: bool
    min_eigenvalue: float
    binding_variance: float


def ppt_eigen_check(cov: CovarianceMatrix) -> SeparabilityVerdict:
    """PPT test by full diagonalization of the 4x4 Hermitian matrix V + (i/4) Omega.

    Raises:
        DomainError: if ``cov`` is not symmetric positive definite.
    """
    v = cov.entries
    if not np.allclose(v, v.T, rtol=0.0, atol=1e-14 * max(1.0, np.abs(v).max())):
        raise DomainError("covariance matrix is not symmetric")
    if np.linalg.eigvalsh(v).min() <= 0:
        raise DomainError("covariance matrix is not positive definite")
    eigenvalues = np.linalg.eigvalsh(v + 0.25j * OMEGA_PT)
    min_eig = float(eigenvalues[0])
    # Sigma_-^2 recovered from the matrix for reporting only; the verdict uses eigenvalues
    binding = float(v[0, 0] - abs(v[0, 2]))
    return SeparabilityVerdict(
        separable=bool(min_eig >= -EPS_EIG), min_eigenvalue=min_eig, binding_variance=binding
    )


def variance_criterion(v: VariancePair) -> SeparabilityVerdict:
    """Separability from the variance pair alone: separable iff Sigma_-^2 >= 1/4.

    Raises:
        DomainError: if ``var_plus < var_minus`` (outside the evolved twin-beam family).
    """
    if v.var_plus < v.var_minus:
        raise DomainError("variance_criterion expects var_plus >= var_minus")
    separable = bool(v.var_minus >= VACUUM_VARIANCE - EPS_EIG)
    # var_plus >= var_minus, so the Sigma_+ condition can never be the binding one
    assert not separable or v.var_plus >= VACUUM_VARIANCE - EPS_EIG
    return SeparabilityVerdict(
        separable=separable,
        min_eigenvalue=float(v.var_minus - VACUUM_VARIANCE),
        binding_variance=float(v.var_minus),
    )


def saturation_threshold(cp: ChannelParams) -> float:
    """Largest separability time over all squeezings, log(1 + 1/(2M)) / Gamma."""
    if cp.m_thermal == 0:
        return NEVER_SEPARABLE
    return math.log1p(1.0 / (2.0 * cp.m_thermal)) / cp.gamma_rate


def threshold_time(tb: TwinBeamParams, cp: ChannelParams) -> float:
    """Time after which the evolved twin-beam is separable.

    Returns :data:`NEVER_SEPARABLE` for an entangled input in a pure-loss channel (M = 0).
    """
    if tb.lam == 0:
        return 0.0
    if cp.m_thermal == 0:
        return NEVER_SEPARABLE
    return math.log1p(-math.expm1(-2.0 * tb.lam) / (2.0 * cp.m_thermal)) / cp.gamma_rate


def threshold_time_from_photon_number(tb: TwinBeamParams, cp: ChannelParams) -> float:
    """Same threshold written through the photon number, sqrt(N(N+2)) - N in place of 1 - e^{-2 lam}."""
    if tb.n_mean == 0:
        return 0.0
    if cp.m_thermal == 0:
        return NEVER_SEPARABLE
    n = tb.n_mean
    # sqrt(N(N+2)) - N rewritten to avoid cancellation at large N
    gap = 2.0 * n / (math.sqrt(n * (n + 2.0)) + n)
    return math.log1p(gap / (2.0 * cp.m_thermal)) / cp.gamma_rate


def threshold_curve(n_values, cp: ChannelParams) -> np.ndarray:
    """Dimensionless threshold ``gamma_rate * t_s`` for each total photon number in ``n_values``."""
    return np.array(
        [threshold_time(twin_beam_from_photon_number(n), cp) * cp.gamma_rate for n in n_values]
    )


def threshold_tau(tb: TwinBeamParams, cp: ChannelParams) -> float:
    """Threshold in rescaled time; both closed forms are evaluated and must agree."""
    if tb.lam == 0:
        return 0.0
    if cp.m_thermal == 0:
        return NEVER_SEPARABLE
    g = drift_coefficient(cp)
    m = cp.m_thermal
    via_drift = -math.log((1.0 - g) / (1.0 - g * math.exp(-2.0 * tb.lam))) / g
    via_photons = (2.0 * m + 1.0) * math.log1p(-math.expm1(-2.0 * tb.lam) / (2.0 * m))
    if not math.isclose(via_drift, via_photons, rel_tol=1e-12, abs_tol=1e-12):
        raise ArithmeticError(f"threshold_tau forms disagree: {via_drift!r} vs {via_photons!r}")
    return via_photons


def threshold_time_bisection(
    tb: TwinBeamParams, cp: ChannelParams, *, xtol: float = 1e-13, max_iter: int = 200
) -> float:
    """Root of Sigma_-^2(t) = 1/4 found by bisection on :func:`~twinbeam.channel.evolve`.

    The bracket is [0, 10 * saturation_threshold]. When it shows no sign change the
    closed form is returned instead.
    """
    def excess(t: float) -> float:
        return evolve(tb, cp, t).variances.var_minus - VACUUM_VARIANCE

    lo = 0.0
    if excess(lo) >= 0:
        return 0.0
    hi = 10.0 * saturation_threshold(cp)
    if not math.isfinite(hi) or excess(hi) < 0:
        return threshold_time(tb, cp)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if excess(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= xtol * max(1.0, hi):
            break
    return 0.5 * (lo + hi)
