r"""Twin-beam parameterizations, covariance matrices and Wigner functions.

Conventions used throughout the package:

* quadratures are :math:`x = (a + a^\dagger)/2`, :math:`y = (a - a^\dagger)/2i`,
  so the vacuum has variance 1/4 in each quadrature;
* phase-space vectors are ordered :math:`(x_1, y_1, x_2, y_2)`;
* a zero-mean twin-beam-like state is fully described by the pair
  :math:`(\Sigma_+^2, \Sigma_-^2)`, the variances of
  :math:`(x_1 + x_2)/\sqrt2` and :math:`(x_1 - x_2)/\sqrt2`. The y-quadratures
  carry the same pair with the roles of sum and difference exchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from twinbeam.errors import DomainError

VACUUM_VARIANCE = 0.25

_REL_TOL = 1e-12


def _check_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class TwinBeamParams:
    """Twin-beam described by its squeezing ``lam``, Fock weight ``x`` and photon number.

    Use :func:`twin_beam_from_lambda` or :func:`twin_beam_from_photon_number`
    rather than building this directly; the constructor only validates.
    """

    lam: float
    x: float
    n_mean: float

    def __post_init__(self):
        if self.lam < 0 or not math.isfinite(self.lam):
            raise DomainError(f"squeezing must be finite and >= 0, got {self.lam!r}")
        # tanh rounds to exactly 1.0 for lam > ~19
        if not 0.0 <= self.x <= 1.0 or (self.x == 1.0 and math.tanh(self.lam) != 1.0):
            raise DomainError(f"Fock weight must lie in [0, 1), got {self.x!r}")
        if abs(self.x - math.tanh(self.lam)) > 4 * np.finfo(float).eps:
            raise DomainError("inconsistent twin-beam parameters: x != tanh(lam)")
        expected = 2.0 * math.sinh(self.lam) ** 2
        if abs(self.n_mean - expected) > _REL_TOL * max(expected, 1.0):
            raise DomainError("inconsistent twin-beam parameters: n_mean != 2 sinh^2(lam)")


@dataclass(frozen=True)
class VariancePair:
    """Variances (sum, difference) of a zero-mean twin-beam-like Gaussian state."""

    var_plus: float
    var_minus: float

    def __post_init__(self):
        for name in ("var_plus", "var_minus"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be finite and > 0, got {value!r}")


@dataclass(frozen=True)
class PhasePoint:
    """A point (x1, y1, x2, y2) of the two-mode phase space."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        for name in ("x1", "y1", "x2", "y2"):
            _check_finite(name, getattr(self, name))

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.y1, self.x2, self.y2], dtype=float)


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """Real symmetric 4x4 second-moment matrix of (x1, y1, x2, y2)."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float)
        if entries.shape != (4, 4):
            raise DomainError(f"covariance matrix must be 4x4, got shape {entries.shape}")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    def __eq__(self, other):
        if not isinstance(other, CovarianceMatrix):
            return NotImplemented
        return bool(np.array_equal(self.entries, other.entries))

    __hash__ = None


def twin_beam_from_lambda(lam: float) -> TwinBeamParams:
    """Twin-beam with squeezing (gain) ``lam``.

    Raises:
        DomainError: if ``lam`` is negative or not finite.
    """
    lam = _check_finite("lambda", lam)
    if lam < 0:
        raise DomainError(f"lambda must be >= 0, got {lam}")
    return TwinBeamParams(lam=lam, x=math.tanh(lam), n_mean=2.0 * math.sinh(lam) ** 2)


def twin_beam_from_photon_number(n_mean: float) -> TwinBeamParams:
    """Twin-beam carrying ``n_mean`` photons in total (both modes)."""
    n_mean = _check_finite("n_mean", n_mean)
    if n_mean < 0:
        raise DomainError(f"n_mean must be >= 0, got {n_mean}")
    lam = math.asinh(math.sqrt(n_mean / 2.0))
    return TwinBeamParams(lam=lam, x=math.tanh(lam), n_mean=n_mean)


def initial_variances(tb: TwinBeamParams) -> VariancePair:
    """Variance pair of the pure twin-beam: (e^{2 lam}/4, e^{-2 lam}/4)."""
    return VariancePair(
        var_plus=VACUUM_VARIANCE * math.exp(2.0 * tb.lam),
        var_minus=VACUUM_VARIANCE * math.exp(-2.0 * tb.lam),
    )


def covariance_from_variances(v: VariancePair) -> CovarianceMatrix:
    r"""Covariance matrix of the Gaussian state with Wigner function of twin-beam form.

    Diagonal entries are :math:`(\Sigma_+^2 + \Sigma_-^2)/2`; the x1-x2 correlation is
    :math:`+(\Sigma_+^2 - \Sigma_-^2)/2` and the y1-y2 correlation carries the opposite
    sign, as follows from the second moments of the Wigner function.
    """
    diag = 0.5 * (v.var_plus + v.var_minus)
    cross = 0.5 * (v.var_plus - v.var_minus)
    entries = np.array(
        [
            [diag, 0.0, cross, 0.0],
            [0.0, diag, 0.0, -cross],
            [cross, 0.0, diag, 0.0],
            [0.0, -cross, 0.0, diag],
        ]
    )
    return CovarianceMatrix(entries)


def variances_from_covariance(cov: CovarianceMatrix) -> VariancePair:
    """Inverse of :func:`covariance_from_variances` on the twin-beam family."""
    v = cov.entries
    return VariancePair(var_plus=v[0, 0] + v[0, 2], var_minus=v[0, 0] - v[0, 2])


def wigner_eval(v: VariancePair, p: PhasePoint) -> float:
    """Value of the two-mode Gaussian Wigner function with variances ``v`` at ``p``."""
    sp, sm = v.var_plus, v.var_minus
    exponent = (
        (p.x1 + p.x2) ** 2 / (4.0 * sp)
        + (p.y1 + p.y2) ** 2 / (4.0 * sm)
        + (p.x1 - p.x2) ** 2 / (4.0 * sm)
        + (p.y1 - p.y2) ** 2 / (4.0 * sp)
    )
    return math.exp(-exponent) / (2.0 * math.pi * sp * 2.0 * math.pi * sm)


def wigner_eval_array(v: VariancePair, points: np.ndarray) -> np.ndarray:
    """Vectorized :func:`wigner_eval` over an ``(n, 4)`` array of phase points."""
    pts = np.asarray(points, dtype=float)
    x1, y1, x2, y2 = pts[..., 0], pts[..., 1], pts[..., 2], pts[..., 3]
    sp, sm = v.var_plus, v.var_minus
    exponent = (
        (x1 + x2) ** 2 / (4.0 * sp)
        + (y1 + y2) ** 2 / (4.0 * sm)
        + (x1 - x2) ** 2 / (4.0 * sm)
        + (y1 - y2) ** 2 / (4.0 * sp)
    )
    return np.exp(-exponent) / (2.0 * np.pi * sp * 2.0 * np.pi * sm)
