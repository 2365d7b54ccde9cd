r"""Closed-form evolution of a twin-beam through a thermal loss/amplification channel.

Each mode is coupled to its own reservoir with damping rate ``gamma_rate`` and
``m_thermal`` background photons. In phase space every quadrature performs an
Ornstein-Uhlenbeck relaxation towards the thermal state, so a Gaussian twin-beam
stays Gaussian and only its variance pair moves:

.. math::
    \Sigma_\pm^2(t) = e^{-\Gamma t}\sigma_\pm^2 + D^2(t),\qquad
    D^2(t) = \frac{2M+1}{4}\,(1 - e^{-\Gamma t}).

Two clocks are exposed: the laboratory time ``t`` and the rescaled time
``tau = gamma_rate * t * (2M + 1)``; they are tied by ``drift * tau == gamma_rate * t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from twinbeam.errors import DomainError
from twinbeam.gaussian_core import (
    VACUUM_VARIANCE,
    PhasePoint,
    TwinBeamParams,
    VariancePair,
    covariance_from_variances,
    initial_variances,
)


@dataclass(frozen=True)
class ChannelParams:
    """Damping rate (1/time) and thermal photon number of the reservoir."""

    gamma_rate: float
    m_thermal: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.gamma_rate) and self.gamma_rate > 0):
            raise DomainError(f"gamma_rate must be finite and > 0, got {self.gamma_rate!r}")
        if not (math.isfinite(self.m_thermal) and self.m_thermal >= 0):
            raise DomainError(f"m_thermal must be finite and >= 0, got {self.m_thermal!r}")

    @property
    def drift(self) -> float:
        return drift_coefficient(self)


@dataclass(frozen=True)
class EvolutionResult:
    variances: VariancePair
    time: float
    tau: float
    diffusion: float


def drift_coefficient(cp: ChannelParams) -> float:
    """Drift 1/(2M+1) of the rescaled Fokker-Planck dynamics."""
    return 1.0 / (2.0 * cp.m_thermal + 1.0)


def rescaled_time(cp: ChannelParams, t: float) -> float:
    return cp.gamma_rate * t * (2.0 * cp.m_thermal + 1.0)


def diffusion(cp: ChannelParams, t: float) -> float:
    """Variance D^2 accumulated by each quadrature's Green function after time ``t``."""
    # -expm1 keeps D^2 accurate (and > 0) for tiny gamma_rate * t
    return -math.expm1(-cp.gamma_rate * t) / (4.0 * drift_coefficient(cp))


def _check_time(t: float) -> float:
    t = float(t)
    if not math.isfinite(t) or t < 0:
        raise DomainError(f"time must be finite and >= 0, got {t!r}")
    return t


def evolve_variances(v0: VariancePair, cp: ChannelParams, t: float) -> VariancePair:
    """Evolve an arbitrary variance pair for time ``t``.

    Because the channel is a semigroup, ``evolve_variances(evolve_variances(v, cp, t1), cp, t2)``
    equals ``evolve_variances(v, cp, t1 + t2)`` up to rounding.
    """
    t = _check_time(t)
    if t == 0:
        return v0
    decay = math.exp(-cp.gamma_rate * t)
    d2 = diffusion(cp, t)
    return VariancePair(var_plus=decay * v0.var_plus + d2, var_minus=decay * v0.var_minus + d2)


def evolve(tb: TwinBeamParams, cp: ChannelParams, t: float) -> EvolutionResult:
    """Evolve the pure twin-beam ``tb`` through the channel for time ``t``.

    Raises:
        DomainError: if ``t`` is negative or not finite.
    """
    t = _check_time(t)
    return EvolutionResult(
        variances=evolve_variances(initial_variances(tb), cp, t),
        time=t,
        tau=rescaled_time(cp, t),
        diffusion=diffusion(cp, t),
    )


def green_function(cp: ChannelParams, t: float, x, x_prime):
    r"""Single-quadrature transition density from ``x_prime`` at time 0 to ``x`` at time ``t``.

    A Gaussian in ``x`` centred at ``x_prime * exp(-gamma_rate t / 2)`` with variance
    :math:`D^2(t)`. Accepts scalars or broadcastable arrays.

    Raises:
        DomainError: for ``t <= 0``, where the kernel degenerates to a delta function.
    """
    t = _check_time(t)
    if t == 0:
        raise DomainError("green_function needs t > 0")
    d2 = diffusion(cp, t)
    centre = np.multiply(x_prime, math.exp(-0.5 * cp.gamma_rate * t))
    value = np.exp(-((np.subtract(x, centre)) ** 2) / (2.0 * d2)) / math.sqrt(2.0 * math.pi * d2)
    return float(value) if np.ndim(value) == 0 else value


def evolve_by_convolution(
    tb: TwinBeamParams,
    cp: ChannelParams,
    t: float,
    p: PhasePoint,
    mc_samples: int,
    seed: int = 0,
    *,
    return_stderr: bool = False,
    chunk_size: int = 200_000,
):
    """Monte-Carlo estimate of the evolved Wigner function at ``p``.

    Initial phase points are drawn from the twin-beam Wigner function and the
    product of the four Green kernels is averaged. Sampling proceeds in fixed-size
    chunks from a single seeded generator and the partial sums are combined in
    chunk order, so the estimate depends only on ``seed`` and ``mc_samples``.

    Returns:
        The estimate, or ``(estimate, standard_error)`` when ``return_stderr`` is set.
    """
    t = _check_time(t)
    if t == 0:
        raise DomainError("evolve_by_convolution needs t > 0")
    if mc_samples < 10_000:
        raise DomainError(f"mc_samples must be >= 10000, got {mc_samples}")
    rng = np.random.default_rng(seed)
    cov0 = covariance_from_variances(initial_variances(tb)).entries
    chol = np.linalg.cholesky(cov0)
    target = p.as_array()

    total = 0.0
    total_sq = 0.0
    remaining = int(mc_samples)
    while remaining > 0:
        n = min(chunk_size, remaining)
        starts = rng.standard_normal((n, 4)) @ chol.T
        kernel = np.prod(green_function(cp, t, target[None, :], starts), axis=1)
        total += float(kernel.sum())
        total_sq += float(np.dot(kernel, kernel))
        remaining -= n

    mean = total / mc_samples
    if not return_stderr:
        return mean
    var = max(total_sq / mc_samples - mean * mean, 0.0) * mc_samples / (mc_samples - 1)
    return mean, math.sqrt(var / mc_samples)


def stationary_state(cp: ChannelParams) -> VariancePair:
    """Variance pair of the product of two thermal states with M photons each."""
    v = (2.0 * cp.m_thermal + 1.0) * VACUUM_VARIANCE
    return VariancePair(var_plus=v, var_minus=v)


def stationary_wigner(cp: ChannelParams, p: PhasePoint) -> float:
    """Product of two single-mode thermal Wigner functions evaluated at ``p``."""
    s = 2.0 * cp.m_thermal + 1.0
    norm = 2.0 / (math.pi * s)
    return (
        norm * math.exp(-2.0 * (p.x1**2 + p.y1**2) / s)
        * norm * math.exp(-2.0 * (p.x2**2 + p.y2**2) / s)
    )
