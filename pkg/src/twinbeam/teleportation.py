r"""Coherent-state teleportation supported by the evolved twin-beam.

With unit gain, the teleported state of a coherent input is the input smeared by
a Gaussian of variance :math:`2\Sigma_-^2` per quadrature, so the overlap fidelity
is :math:`F = 1/(1 + 4\Sigma_-^2)`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from twinbeam.channel import ChannelParams, evolve
from twinbeam.errors import DomainError
from twinbeam.gaussian_core import VACUUM_VARIANCE, TwinBeamParams, VariancePair

CLASSICAL_FIDELITY = 0.5


@dataclass(frozen=True)
class TeleportationParams:
    """``eta`` enters the fidelity only through the additive term (1 - eta)/eta."""

    eta: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.eta) and 0.0 < self.eta <= 1.0):
            raise DomainError(f"eta must lie in (0, 1], got {self.eta!r}")


@dataclass(frozen=True)
class CoherentGaussian:
    """Isotropic single-mode Gaussian: mean (mean_x, mean_y), variance ``var`` per quadrature."""

    mean_x: float
    mean_y: float
    var: float = VACUUM_VARIANCE

    def __post_init__(self):
        if not (math.isfinite(self.var) and self.var > 0):
            raise DomainError(f"var must be finite and > 0, got {self.var!r}")


def teleport_coherent(state: CoherentGaussian, channel_state: VariancePair) -> CoherentGaussian:
    """Output of unit-gain teleportation of a coherent state through ``channel_state``.

    Raises:
        DomainError: if ``state`` is not a coherent state (variance 1/4).
    """
    if not math.isclose(state.var, VACUUM_VARIANCE, rel_tol=0.0, abs_tol=1e-15):
        raise DomainError("only coherent inputs (var = 1/4) can be teleported")
    return CoherentGaussian(
        mean_x=state.mean_x,
        mean_y=state.mean_y,
        var=state.var + 2.0 * channel_state.var_minus,
    )


def gaussian_overlap_fidelity(a: CoherentGaussian, b: CoherentGaussian) -> float:
    """pi times the phase-space overlap of two isotropic Gaussian Wigner functions."""
    total = a.var + b.var
    dist2 = (a.mean_x - b.mean_x) ** 2 + (a.mean_y - b.mean_y) ** 2
    return math.exp(-dist2 / (2.0 * total)) / (2.0 * total)


def fidelity_from_variances(v: VariancePair) -> float:
    return 1.0 / (1.0 + 4.0 * v.var_minus)


def fidelity_expanded(
    tb: TwinBeamParams, cp: ChannelParams, t: float, tp: TeleportationParams | None = None
) -> float:
    """Fidelity written directly in terms of (lam, Gamma t, M, eta)."""
    eta = (tp or TeleportationParams()).eta
    gt = cp.gamma_rate * t
    return 1.0 / (
        1.0
        + math.exp(-2.0 * tb.lam - gt)
        - math.expm1(-gt) * (2.0 * cp.m_thermal + 1.0)
        + (1.0 - eta) / eta
    )


def fidelity(
    tb: TwinBeamParams, cp: ChannelParams, t: float, tp: TeleportationParams | None = None
) -> float:
    """Teleportation fidelity of a coherent state after the twin-beam spent ``t`` in the channel.

    For ``eta == 1`` the value is ``1 / (1 + 4 Sigma_-^2)`` and is cross-checked
    against :func:`fidelity_expanded`.
    """
    tp = tp or TeleportationParams()
    if tp.eta != 1.0:
        return fidelity_expanded(tb, cp, t, tp)
    f = fidelity_from_variances(evolve(tb, cp, t).variances)
    f_expanded = fidelity_expanded(tb, cp, t, tp)
    if not math.isclose(f, f_expanded, rel_tol=1e-12):
        raise ArithmeticError(f"fidelity forms disagree: {f!r} vs {f_expanded!r}")
    return f


def quantum_teleportation_possible(
    tb: TwinBeamParams, cp: ChannelParams, t: float, *, inclusive: bool = False
) -> bool:
    """Whether teleportation beats the classical fidelity 1/2 (eta = 1).

    The boundary F = 1/2 is classified as classical unless ``inclusive`` is set.
    """
    f = fidelity(tb, cp, t)
    return f >= CLASSICAL_FIDELITY if inclusive else f > CLASSICAL_FIDELITY
