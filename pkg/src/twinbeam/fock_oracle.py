r"""Brute-force check of the Gaussian closed forms in a truncated Fock basis.

The two-mode master equation

.. math::
    \dot\rho = \Gamma(1+M)\,(L[a] + L[b])\rho + \Gamma M\,(L[a^\dagger] + L[b^\dagger])\rho,
    \qquad L[O]\rho = O\rho O^\dagger - \tfrac12\{O^\dagger O, \rho\},

is integrated with fixed-step RK4 on a dense density matrix. Internally the state
is kept as a tensor ``rho[n1, n2, m1, m2]`` so each ladder operator acts as an
index shift; the public :class:`FockDensityMatrix` exposes the usual
``(d*d, d*d)`` matrix in the product basis ``|n1 n2><m1 m2|``.

The ladder operators are the truncated matrices, so the generator is exactly
trace preserving and its fixed point is the truncated thermal product.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from twinbeam.channel import ChannelParams, evolve
from twinbeam.errors import AccuracyError, DomainError, TruncationError
from twinbeam.gaussian_core import (
    VACUUM_VARIANCE,
    TwinBeamParams,
    VariancePair,
    covariance_from_variances,
)
from twinbeam.separability import ppt_eigen_check, variance_criterion

logger = logging.getLogger(__name__)

DEFAULT_TAIL_TOLERANCE = 1e-8
DIM_MARGIN = 4
MAX_STEP_RATE = 0.05
TOP_LEVEL_TOLERANCE = 1e-6
HERMITICITY_TOLERANCE = 1e-10
TRACE_TOLERANCE = 1e-9
STEP_HALVING_TOLERANCE = 1e-6
STABILITY_FACTOR = 1.0
# truncation pushes PT eigenvalues of separable states slightly below zero (~1e-11)
PT_EIG_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class FockDensityMatrix:
    """Two-mode density matrix truncated to ``dim`` Fock levels per mode."""

    dim: int
    entries: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self):
        d2 = self.dim * self.dim
        if self.entries.shape != (d2, d2):
            raise DomainError(f"entries must have shape {(d2, d2)}, got {self.entries.shape}")

    @classmethod
    def from_tensor(cls, tensor: np.ndarray, tail_mass: float = 0.0) -> FockDensityMatrix:
        d = tensor.shape[0]
        return cls(dim=d, entries=tensor.reshape(d * d, d * d), tail_mass=tail_mass)

    def tensor(self) -> np.ndarray:
        """View as ``rho[n1, n2, m1, m2]``."""
        d = self.dim
        return self.entries.reshape(d, d, d, d)

    def trace(self) -> float:
        return float(np.trace(self.entries).real)


@dataclass(frozen=True)
class IntegratorConfig:
    """RK4 settings. ``step * gamma_rate * (2M + 1)`` must not exceed 0.05."""

    step: float
    dim: int
    tail_tolerance: float = DEFAULT_TAIL_TOLERANCE

    def __post_init__(self):
        if not (math.isfinite(self.step) and self.step > 0):
            raise DomainError(f"step must be > 0, got {self.step!r}")
        if self.dim < 2:
            raise DomainError(f"dim must be >= 2, got {self.dim}")

    @classmethod
    def for_channel(
        cls, cp: ChannelParams, dim: int, tail_tolerance: float = DEFAULT_TAIL_TOLERANCE
    ) -> IntegratorConfig:
        """Largest step allowed by the stability heuristic for channel ``cp``."""
        step = MAX_STEP_RATE / (cp.gamma_rate * (2.0 * cp.m_thermal + 1.0))
        return cls(step=step, dim=dim, tail_tolerance=tail_tolerance)

    def check_channel(self, cp: ChannelParams) -> None:
        rate = self.step * cp.gamma_rate * (2.0 * cp.m_thermal + 1.0)
        if rate > MAX_STEP_RATE * (1 + 1e-12):
            raise DomainError(
                f"step * gamma_rate * (2M+1) = {rate:.4g} exceeds {MAX_STEP_RATE}; reduce step"
            )


def _min_dim_for_ratio(ratio: float, tolerance: float) -> int:
    """Smallest d with ratio**d <= tolerance."""
    if ratio <= 0:
        return 1
    return max(1, math.ceil(math.log(tolerance) / math.log(ratio) - 1e-12))


def minimal_dim(tb: TwinBeamParams, tail_tolerance: float = DEFAULT_TAIL_TOLERANCE) -> int:
    """Smallest truncation whose discarded twin-beam weight x^(2 dim) is within tolerance."""
    return max(2, _min_dim_for_ratio(tb.x * tb.x, tail_tolerance))


def recommended_dim(
    tb: TwinBeamParams,
    cp: ChannelParams,
    t: float,
    tail_tolerance: float = DEFAULT_TAIL_TOLERANCE,
) -> int:
    """Truncation adequate for evolving ``tb`` up to time ``t``.

    The twin-beam tail rule gets a margin of four levels for thermal excitation.
    Each reduced mode stays thermal during the run, with mean photon number moving
    monotonically from sinh^2(lam) towards M, so the larger end point also bounds
    the thermal tail; the truncation must cover that tail as well.
    """
    n0 = math.sinh(tb.lam) ** 2
    decay = math.exp(-cp.gamma_rate * t)
    n_end = n0 * decay + cp.m_thermal * (1.0 - decay)
    n_max = max(n0, n_end)
    thermal = _min_dim_for_ratio(n_max / (n_max + 1.0), tail_tolerance)
    return max(minimal_dim(tb, tail_tolerance) + DIM_MARGIN, thermal)


def twin_beam_fock(
    tb: TwinBeamParams, dim: int, tail_tolerance: float = DEFAULT_TAIL_TOLERANCE
) -> FockDensityMatrix:
    """Truncated and renormalized twin-beam sqrt(1-x^2) sum_p x^p |p, p>.

    Raises:
        TruncationError: if the discarded weight x^(2 dim) exceeds ``tail_tolerance``.
    """
    if dim < 2:
        raise DomainError(f"dim must be >= 2, got {dim}")
    x = tb.x
    tail = x ** (2 * dim)
    if tail > tail_tolerance:
        need = minimal_dim(tb, tail_tolerance)
        raise TruncationError(
            f"dim={dim} discards weight {tail:.3g} > {tail_tolerance:g}; raise dim to at least {need}",
            minimal_dim=need,
        )
    amplitudes = math.sqrt(1.0 - x * x) * x ** np.arange(dim)
    amplitudes /= np.linalg.norm(amplitudes)
    psi = np.zeros((dim, dim), dtype=complex)
    psi[np.arange(dim), np.arange(dim)] = amplitudes
    vec = psi.reshape(-1)
    return FockDensityMatrix(dim=dim, entries=np.outer(vec, vec.conj()), tail_mass=tail)


def thermal_product_fock(cp: ChannelParams, dim: int) -> FockDensityMatrix:
    """Truncated, renormalized product of two thermal states with M photons each."""
    p = thermal_populations(cp.m_thermal, dim)
    diag = np.outer(p, p).reshape(-1)
    tail = 1.0 - float(np.sum(thermal_populations(cp.m_thermal, dim, normalize=False))) ** 2
    return FockDensityMatrix(dim=dim, entries=np.diag(diag).astype(complex), tail_mass=tail)


def thermal_populations(m: float, dim: int, normalize: bool = True) -> np.ndarray:
    ratio = m / (1.0 + m)
    p = ratio ** np.arange(dim) / (1.0 + m)
    return p / p.sum() if normalize else p


@dataclass(frozen=True, eq=False)
class _Generator:
    """Coefficient tensors of the Lindblad generator for one (dim, channel) pair."""

    neg_rates: np.ndarray = field(repr=False)
    loss_a: np.ndarray | None = field(repr=False)
    loss_b: np.ndarray | None = field(repr=False)
    gain_a: np.ndarray | None = field(repr=False)
    gain_b: np.ndarray | None = field(repr=False)
    spectral_bound: float

    @classmethod
    def build(cls, dim: int, cp: ChannelParams) -> _Generator:
        n = np.arange(dim, dtype=float)
        s = np.sqrt(n[1:])
        w = np.outer(s, s)
        # diagonal of the truncated a a^dagger: n + 1 below the top level, 0 at the top
        aad = n + 1.0
        aad[-1] = 0.0
        loss = cp.gamma_rate * (1.0 + cp.m_thermal)
        gain = cp.gamma_rate * cp.m_thermal
        per_index = 0.5 * (loss * n + gain * aad)
        rates = (
            per_index[:, None, None, None]
            + per_index[None, :, None, None]
            + per_index[None, None, :, None]
            + per_index[None, None, None, :]
        )
        wa = np.ascontiguousarray(np.broadcast_to(w[:, None, :, None], (dim - 1, dim, dim - 1, dim)))
        wb = np.ascontiguousarray(np.broadcast_to(w[None, :, None, :], (dim, dim - 1, dim, dim - 1)))

        # Gershgorin: |eigenvalue| <= diagonal rate + outgoing jump weights of each element
        radius = rates.copy()
        radius[1:, :, 1:, :] += loss * wa
        radius[:, 1:, :, 1:] += loss * wb
        radius[:-1, :, :-1, :] += gain * wa
        radius[:, :-1, :, :-1] += gain * wb

        return cls(
            neg_rates=-rates,
            loss_a=loss * wa if loss else None,
            loss_b=loss * wb if loss else None,
            gain_a=gain * wa if gain else None,
            gain_b=gain * wb if gain else None,
            spectral_bound=float(radius.max()),
        )

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        out = self.neg_rates * rho
        if self.loss_a is not None:
            out[:-1, :, :-1, :] += self.loss_a * rho[1:, :, 1:, :]
            out[:, :-1, :, :-1] += self.loss_b * rho[:, 1:, :, 1:]
        if self.gain_a is not None:
            out[1:, :, 1:, :] += self.gain_a * rho[:-1, :, :-1, :]
            out[:, 1:, :, 1:] += self.gain_b * rho[:, :-1, :, :-1]
        return out


def lindblad_rhs(rho: FockDensityMatrix, cp: ChannelParams) -> FockDensityMatrix:
    """Time derivative of ``rho`` under the two-mode thermal channel."""
    gen = _Generator.build(rho.dim, cp)
    return FockDensityMatrix.from_tensor(gen(rho.tensor()))


def _dagger(rho: np.ndarray) -> np.ndarray:
    return rho.conj().transpose(2, 3, 0, 1)


def _mode_populations(rho: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    diag = np.einsum("abab->ab", rho).real
    return diag.sum(axis=1), diag.sum(axis=0)


def _check_state(rho: np.ndarray, t: float) -> None:
    diag = np.einsum("abab->ab", rho).real
    tr = diag.sum()
    if abs(tr - 1.0) > TRACE_TOLERANCE:
        raise AccuracyError(f"trace drifted to {tr!r} at t={t:.6g}")
    if diag.min() < -1e-12:
        raise AccuracyError(f"negative population {diag.min():.3g} at t={t:.6g}")


def _check_top_levels(rho: np.ndarray, t: float) -> None:
    d = rho.shape[0]
    pa, pb = _mode_populations(rho)
    top = max(pa[-2:].sum(), pb[-2:].sum())
    if top > TOP_LEVEL_TOLERANCE:
        raise TruncationError(
            f"occupation {top:.3g} of the two highest Fock levels at t={t:.6g} exceeds "
            f"{TOP_LEVEL_TOLERANCE:g}; raise dim above {d}",
            minimal_dim=d + 1,
        )


def _rk4(rho: np.ndarray, gen: _Generator, t: float, n_steps: int, observer=None) -> np.ndarray:
    h = t / n_steps
    worst = 0.0
    for k in range(n_steps):
        k1 = gen(rho)
        k2 = gen(rho + (0.5 * h) * k1)
        k3 = gen(rho + (0.5 * h) * k2)
        k4 = gen(rho + h * k3)
        k2 += k3
        k2 *= 2.0
        k1 += k2
        k1 += k4
        k1 *= h / 6.0
        rho = rho + k1
        dag = _dagger(rho)
        deviation = float(np.abs(rho - dag).max())
        worst = max(worst, deviation)
        if deviation > HERMITICITY_TOLERANCE:
            raise AccuracyError(f"hermiticity deviation {deviation:.3g} at step {k + 1}")
        rho += dag
        rho *= 0.5
        now = (k + 1) * h
        _check_state(rho, now)
        _check_top_levels(rho, now)
        if observer is not None:
            observer(now, rho)
    logger.debug("RK4 %d steps, max hermiticity deviation before symmetrization %.3g", n_steps, worst)
    return rho


def step_count(cfg: IntegratorConfig, cp: ChannelParams, t: float) -> int:
    """Number of RK4 steps used for time ``t``.

    ``cfg.step`` is an upper bound; the step is shortened further so that it never
    exceeds ``STABILITY_FACTOR`` over the largest generator eigenvalue at this dim.
    """
    bound = _Generator.build(cfg.dim, cp).spectral_bound
    step = min(cfg.step, STABILITY_FACTOR / bound)
    return max(1, math.ceil(t / step - 1e-12))


def integrate(
    rho0: FockDensityMatrix,
    cp: ChannelParams,
    t: float,
    cfg: IntegratorConfig,
    *,
    check_convergence: bool = True,
    observer=None,
) -> FockDensityMatrix:
    """Evolve ``rho0`` for time ``t`` with fixed-step RK4.

    Trace, populations, hermiticity and the occupation of the two highest Fock
    levels are checked after every step. With ``check_convergence`` the run is
    repeated at half the step and the extracted moments must agree to 1e-6.
    Real input states are integrated in real arithmetic (the generator is real).

    Args:
        observer: optional ``callable(t, tensor)`` invoked after every accepted step
            of the main run.

    Raises:
        TruncationError: if the top Fock levels become populated.
        AccuracyError: on invariant violations or failed step halving.
    """
    if not math.isfinite(t) or t < 0:
        raise DomainError(f"time must be finite and >= 0, got {t!r}")
    if rho0.dim != cfg.dim:
        raise DomainError(f"state has dim {rho0.dim} but config expects {cfg.dim}")
    cfg.check_channel(cp)
    if t == 0:
        return rho0
    tensor0 = rho0.tensor()
    if np.iscomplexobj(tensor0) and not np.any(tensor0.imag):
        tensor0 = tensor0.real
    tensor0 = np.array(tensor0)
    _check_top_levels(tensor0, 0.0)
    gen = _Generator.build(cfg.dim, cp)
    n_steps = step_count(cfg, cp, t)
    rho = _rk4(tensor0, gen, t, n_steps, observer)
    result = FockDensityMatrix.from_tensor(rho.astype(complex), tail_mass=rho0.tail_mass)
    if check_convergence:
        fine = FockDensityMatrix.from_tensor(_rk4(tensor0, gen, t, 2 * n_steps), rho0.tail_mass)
        diff = np.abs(_moment_vector(result) - _moment_vector(fine)).max()
        if diff > STEP_HALVING_TOLERANCE:
            raise AccuracyError(f"halving the step changed the moments by {diff:.3g}")
    return result



def _expectations(rho: np.ndarray) -> dict[str, complex]:
    """Ladder-operator moments <O> = Tr(O rho) computed from matrix elements."""
    d = rho.shape[0]
    n = np.arange(d)
    s = np.sqrt(n[1:])
    s2 = np.sqrt(n[2:] * n[1:-1])
    # rho_red[n, m] reduced density matrices
    ra = np.einsum("akbk->ab", rho)
    rb = np.einsum("kakb->ab", rho)
    # <a> = sum_n sqrt(n) rho[n, n-1]
    mean_a = np.sum(s * np.diagonal(ra, offset=-1))
    mean_b = np.sum(s * np.diagonal(rb, offset=-1))
    # <a^2> = sum_n sqrt(n (n-1)) rho[n, n-2]
    a2 = np.sum(s2 * np.diagonal(ra, offset=-2))
    b2 = np.sum(s2 * np.diagonal(rb, offset=-2))
    na = np.sum(n * np.diagonal(ra)).real
    nb = np.sum(n * np.diagonal(rb)).real
    # <a b> = sum rho[n1, n2, n1-1, n2-1] sqrt(n1 n2)
    w = np.outer(s, s)
    ab = np.sum(w * np.einsum("ijij->ij", rho[1:, 1:, :-1, :-1]))
    # <a^dagger b> = sum sqrt(n1 + 1) sqrt(n2) rho[n1, n2, n1+1, n2-1]
    adb = np.sum(w * np.einsum("ijij->ij", rho[:-1, 1:, 1:, :-1]))
    return {"a": mean_a, "b": mean_b, "a2": a2, "b2": b2, "na": na, "nb": nb, "ab": ab, "adb": adb}


def _quadrature_moments(rho: np.ndarray) -> tuple[float, float, float]:
    """<x1^2>, <x2^2>, <x1 x2> with x = (a + a^dagger)/2."""
    e = _expectations(rho)
    x1x1 = (2.0 * e["a2"].real + 2.0 * e["na"] + 1.0) / 4.0
    x2x2 = (2.0 * e["b2"].real + 2.0 * e["nb"] + 1.0) / 4.0
    x1x2 = (e["ab"].real + e["adb"].real) / 2.0
    return x1x1, x2x2, x1x2


def _moment_vector(rho: FockDensityMatrix) -> np.ndarray:
    t = rho.tensor()
    e = _expectations(t)
    return np.array([e["na"], e["nb"], e["ab"].real, e["ab"].imag, *_quadrature_moments(t)])


def extract_variances(rho: FockDensityMatrix) -> VariancePair:
    """Sigma_+^2 = Var(x1 + x2)/2 and Sigma_-^2 = Var(x1 - x2)/2 of a zero-mean state.

    Raises:
        DomainError: if <a> or <b> is non-zero.
    """
    t = rho.tensor()
    e = _expectations(t)
    if max(abs(e["a"]), abs(e["b"])) > 1e-10:
        raise DomainError("extract_variances requires a zero-mean state")
    x1x1, x2x2, x1x2 = _quadrature_moments(t)
    return VariancePair(
        var_plus=0.5 * (x1x1 + x2x2 + 2.0 * x1x2),
        var_minus=0.5 * (x1x1 + x2x2 - 2.0 * x1x2),
    )


def mean_photon_numbers(rho: FockDensityMatrix) -> tuple[float, float]:
    e = _expectations(rho.tensor())
    return float(e["na"]), float(e["nb"])


def partial_transpose(rho: FockDensityMatrix) -> np.ndarray:
    """Matrix of rho with the second mode transposed (n2 <-> m2)."""
    d = rho.dim
    return rho.tensor().transpose(0, 3, 2, 1).reshape(d * d, d * d)


def partial_transpose_min_eigenvalue(rho: FockDensityMatrix) -> float:
    """Smallest eigenvalue of the partial transpose; negative means entangled."""
    pt = partial_transpose(rho)
    pt = 0.5 * (pt + pt.conj().T)
    return float(np.linalg.eigvalsh(pt)[0])


def is_ppt(rho: FockDensityMatrix) -> bool:
    return partial_transpose_min_eigenvalue(rho) >= -PT_EIG_TOLERANCE


def fidelity_to(rho: FockDensityMatrix, sigma: FockDensityMatrix) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(sigma) rho sqrt(sigma)))^2 for a diagonal ``sigma``."""
    diag = np.diag(sigma.entries).real
    if not np.allclose(sigma.entries, np.diag(diag)):
        raise DomainError("fidelity_to expects a diagonal reference state")
    root = np.sqrt(np.clip(diag, 0.0, None))
    inner = root[:, None] * rho.entries * root[None, :]
    eig = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    return float(np.sum(np.sqrt(np.clip(eig, 0.0, None))) ** 2)


def selection_rule_violation(rho: FockDensityMatrix) -> float:
    """Largest |rho[n1, n2, m1, m2]| with n1 - m1 != n2 - m2."""
    d = rho.dim
    n = np.arange(d)
    n1, n2, m1, m2 = np.meshgrid(n, n, n, n, indexing="ij")
    mask = (n1 - m1) != (n2 - m2)
    return float(np.abs(rho.tensor()[mask]).max(initial=0.0))


MOMENT_COLUMNS = ("t", "trace", "sigma_plus_sq", "sigma_minus_sq", "min_pt_eig")


def moment_series(
    rho0: FockDensityMatrix, cp: ChannelParams, t: float, cfg: IntegratorConfig, every: int = 1
) -> list[tuple[float, float, float, float, float]]:
    """Integrate and record (t, trace, Sigma_+^2, Sigma_-^2, min PT eigenvalue) every ``every`` steps.

    The initial and final states are always included.
    """
    rows = []

    def record(state: FockDensityMatrix, now: float) -> None:
        v = extract_variances(state)
        rows.append(
            (now, state.trace(), v.var_plus, v.var_minus, partial_transpose_min_eigenvalue(state))
        )

    record(rho0, 0.0)
    counter = [0]

    def observer(now: float, tensor: np.ndarray) -> None:
        counter[0] += 1
        if counter[0] % every == 0:
            record(FockDensityMatrix.from_tensor(tensor.copy()), now)

    final = integrate(rho0, cp, t, cfg, check_convergence=False, observer=observer)
    if rows[-1][0] != t:
        record(final, t)
    return rows


def write_moment_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MOMENT_COLUMNS)
        writer.writerows(rows)


@dataclass(frozen=True)
class OracleComparison:
    """Closed-form versus Fock-space results for one (lam, M, Gamma, t) point."""

    lam: float
    m_thermal: float
    gamma_rate: float
    t: float
    dim: int
    closed: VariancePair
    oracle: VariancePair
    pt_min_eigenvalue: float
    closed_separable: bool
    ppt_separable: bool
    oracle_separable: bool

    @property
    def diff_plus(self) -> float:
        return abs(self.closed.var_plus - self.oracle.var_plus)

    @property
    def diff_minus(self) -> float:
        return abs(self.closed.var_minus - self.oracle.var_minus)

    @property
    def max_diff(self) -> float:
        return max(self.diff_plus, self.diff_minus)

    @property
    def near_boundary(self) -> bool:
        return abs(self.closed.var_minus - VACUUM_VARIANCE) <= 1e-3

    @property
    def signs_agree(self) -> bool:
        return self.closed_separable == self.ppt_separable == self.oracle_separable


def compare_point(
    tb: TwinBeamParams,
    cp: ChannelParams,
    t: float,
    *,
    dim: int | None = None,
    step: float | None = None,
    tail_tolerance: float = DEFAULT_TAIL_TOLERANCE,
    check_convergence: bool = True,
) -> OracleComparison:
    """Integrate the master equation for ``tb`` and compare with :func:`~twinbeam.channel.evolve`.

    ``dim`` defaults to :func:`recommended_dim` and ``step`` to the largest step the
    stability heuristic allows.

    Raises:
        TruncationError: if ``dim`` is too small for the initial state or the evolution.
    """
    dim = dim if dim is not None else recommended_dim(tb, cp, t, tail_tolerance)
    cfg = (
        IntegratorConfig(step=step, dim=dim, tail_tolerance=tail_tolerance)
        if step is not None
        else IntegratorConfig.for_channel(cp, dim, tail_tolerance)
    )
    rho0 = twin_beam_fock(tb, dim, tail_tolerance)
    rho = integrate(rho0, cp, t, cfg, check_convergence=check_convergence)
    closed = evolve(tb, cp, t).variances
    pt_min = partial_transpose_min_eigenvalue(rho)
    return OracleComparison(
        lam=tb.lam,
        m_thermal=cp.m_thermal,
        gamma_rate=cp.gamma_rate,
        t=t,
        dim=dim,
        closed=closed,
        oracle=extract_variances(rho),
        pt_min_eigenvalue=pt_min,
        closed_separable=variance_criterion(closed).separable,
        ppt_separable=ppt_eigen_check(covariance_from_variances(closed)).separable,
        oracle_separable=pt_min >= -PT_EIG_TOLERANCE,
    )
