import csv
import math

import numpy as np
import pytest

from twinbeam import fock_oracle as fo
from twinbeam.channel import ChannelParams, evolve
from twinbeam.errors import AccuracyError, DomainError, TruncationError
from twinbeam.gaussian_core import twin_beam_from_lambda
from twinbeam.separability import threshold_time, variance_criterion


def ladder(d):
    return np.diag(np.sqrt(np.arange(1, d)), k=1)


def dissipator(op, rho, swapped_order=False):
    dag = op.conj().T
    last = rho @ op @ dag if swapped_order else rho @ dag @ op
    return op @ rho @ dag - 0.5 * dag @ op @ rho - 0.5 * last


def reference_rhs(rho, cp, d, swapped_order=False):
    """Master equation written literally with Kronecker-product operators."""
    a = np.kron(ladder(d), np.eye(d))
    b = np.kron(np.eye(d), ladder(d))
    g, m = cp.gamma_rate, cp.m_thermal
    out = np.zeros_like(rho)
    for op in (a, b):
        out += g * (1 + m) * dissipator(op, rho, swapped_order)
        out += g * m * dissipator(op.conj().T, rho, swapped_order)
    return out


def random_density(d, seed):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(d * d, d * d)) + 1j * rng.normal(size=(d * d, d * d))
    rho = z @ z.conj().T
    return rho / np.trace(rho)


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("cp", [ChannelParams(1.0, 0.0), ChannelParams(0.7, 0.4), ChannelParams(2.0, 1.5)])
def test_rhs_matches_literal_definition(seed, cp):
    d = 5
    rho = random_density(d, seed)
    fast = fo.lindblad_rhs(fo.FockDensityMatrix(d, rho), cp).entries
    np.testing.assert_allclose(fast, reference_rhs(rho, cp, d), atol=1e-13)
    assert abs(np.trace(fast)) < 1e-12 * d * d
    np.testing.assert_allclose(fast, fast.conj().T, atol=1e-13)


def test_swapped_operator_order_breaks_trace():
    d = 5
    rho = random_density(d, 0)
    drift = np.trace(reference_rhs(rho, ChannelParams(1.0, 0.5), d, swapped_order=True))
    assert abs(drift) > 1e-3


def test_twin_beam_fock_vacuum():
    rho = fo.twin_beam_fock(twin_beam_from_lambda(0.0), 2)
    expected = np.zeros((4, 4))
    expected[0, 0] = 1
    np.testing.assert_array_equal(rho.entries, expected)


def test_twin_beam_fock_moments():
    tb = twin_beam_from_lambda(0.5)
    rho = fo.twin_beam_fock(tb, 20)
    na, nb = fo.mean_photon_numbers(rho)
    assert na == pytest.approx(math.sinh(0.5) ** 2, abs=1e-6)
    assert nb == pytest.approx(math.sinh(0.5) ** 2, abs=1e-6)
    x = math.tanh(0.5)
    t = rho.tensor()
    for p in range(3):
        assert t[p, p, p, p].real == pytest.approx((1 - x * x) * x ** (2 * p), rel=1e-12)
    # rank one, trace one
    eig = np.linalg.eigvalsh(rho.entries)
    assert eig[-1] == pytest.approx(1.0, abs=1e-12)
    assert np.abs(eig[:-1]).max() < 1e-12


def test_twin_beam_fock_truncation_error_names_dim():
    tb = twin_beam_from_lambda(0.6)
    with pytest.raises(TruncationError) as info:
        fo.twin_beam_fock(tb, 4)
    need = info.value.minimal_dim
    assert str(need) in str(info.value)
    assert tb.x ** (2 * need) <= 1e-8 < tb.x ** (2 * (need - 1))
    fo.twin_beam_fock(tb, need)


def test_rhs_thermal_fixed_point():
    cp = ChannelParams(1.3, 0.6)
    rho = fo.thermal_product_fock(cp, 12)
    assert np.abs(fo.lindblad_rhs(rho, cp).entries).max() < 1e-13


def test_rhs_vacuum_zero_temperature():
    rho = fo.twin_beam_fock(twin_beam_from_lambda(0.0), 6)
    assert np.abs(fo.lindblad_rhs(rho, ChannelParams(1.0, 0.0)).entries).max() == 0.0


def test_rhs_single_photon_decay():
    d = 4
    t = np.zeros((d, d, d, d), dtype=complex)
    t[1, 1, 1, 1] = 1.0
    drho = fo.lindblad_rhs(fo.FockDensityMatrix.from_tensor(t), ChannelParams(1.0, 0.0)).tensor()
    dn1 = sum(n * drho[n, k, n, k].real for n in range(d) for k in range(d))
    assert dn1 == pytest.approx(-1.0, abs=1e-15)


def test_integrate_zero_time_identity():
    tb = twin_beam_from_lambda(0.3)
    cp = ChannelParams(1.0, 0.5)
    rho0 = fo.twin_beam_fock(tb, 12)
    assert fo.integrate(rho0, cp, 0.0, fo.IntegratorConfig.for_channel(cp, 12)) is rho0


def test_integrate_matches_closed_form():
    tb = twin_beam_from_lambda(0.4)
    cp = ChannelParams(1.0, 0.5)
    dim = 16
    rho = fo.integrate(fo.twin_beam_fock(tb, dim), cp, 0.5, fo.IntegratorConfig.for_channel(cp, dim))
    v = fo.extract_variances(rho)
    w = evolve(tb, cp, 0.5).variances
    assert v.var_plus == pytest.approx(w.var_plus, abs=1e-6)
    assert v.var_minus == pytest.approx(w.var_minus, abs=1e-6)
    assert fo.selection_rule_violation(rho) <= 1e-12


def test_integrate_invariants_every_step():
    tb = twin_beam_from_lambda(0.5)
    cp = ChannelParams(1.0, 0.3)
    dim = fo.recommended_dim(tb, cp, 1.0)
    seen = []

    def observer(t, tensor):
        rho = fo.FockDensityMatrix.from_tensor(tensor)
        seen.append(t)
        assert abs(rho.trace() - 1) < 1e-9
        assert np.abs(rho.entries - rho.entries.conj().T).max() < 1e-12
        assert np.diag(rho.entries).real.min() >= -1e-12

    fo.integrate(fo.twin_beam_fock(tb, dim), cp, 1.0, fo.IntegratorConfig.for_channel(cp, dim), observer=observer)
    assert seen and seen[-1] == pytest.approx(1.0)


def test_integrate_rejects_large_step():
    cp = ChannelParams(1.0, 1.0)
    cfg = fo.IntegratorConfig(step=0.05, dim=8)
    with pytest.raises(DomainError):
        fo.integrate(fo.twin_beam_fock(twin_beam_from_lambda(0.1), 8), cp, 1.0, cfg)


def test_integrate_detects_top_level_occupation():
    tb = twin_beam_from_lambda(0.1)
    cp = ChannelParams(1.0, 2.0)
    with pytest.raises(TruncationError, match="raise dim"):
        fo.integrate(fo.twin_beam_fock(tb, 6), cp, 2.0, fo.IntegratorConfig.for_channel(cp, 6))


def test_step_halving_gate(monkeypatch):
    tb = twin_beam_from_lambda(0.3)
    cp = ChannelParams(1.0, 0.5)
    monkeypatch.setattr(fo, "STEP_HALVING_TOLERANCE", 0.0)
    with pytest.raises(AccuracyError):
        fo.integrate(fo.twin_beam_fock(tb, 12), cp, 0.5, fo.IntegratorConfig.for_channel(cp, 12))


def test_extract_variances_examples():
    v = fo.extract_variances(fo.twin_beam_fock(twin_beam_from_lambda(0.0), 3))
    assert (v.var_plus, v.var_minus) == (0.25, 0.25)
    v = fo.extract_variances(fo.twin_beam_fock(twin_beam_from_lambda(0.5), 20))
    assert v.var_plus == pytest.approx(math.e / 4, abs=1e-6)
    assert v.var_minus == pytest.approx(1 / (4 * math.e), abs=1e-6)


def test_extract_variances_rejects_displaced_state():
    d = 3
    psi = np.zeros((d, d))
    psi[0, 0] = psi[1, 0] = 1 / math.sqrt(2)
    vec = psi.reshape(-1)
    with pytest.raises(DomainError):
        fo.extract_variances(fo.FockDensityMatrix(d, np.outer(vec, vec).astype(complex)))


def test_partial_transpose_signs():
    product = fo.thermal_product_fock(ChannelParams(1.0, 0.7), 10)
    assert fo.partial_transpose_min_eigenvalue(product) >= -1e-10
    pure = fo.twin_beam_fock(twin_beam_from_lambda(0.5), 16)
    # |00><11| and |11><00| become a 2x2 block with eigenvalue -|c0 c1| after transposition
    x = math.tanh(0.5)
    assert fo.partial_transpose_min_eigenvalue(pure) == pytest.approx(-(1 - x * x) * x, rel=1e-6)


@pytest.mark.parametrize("factor", [0.5, 1.5])
def test_partial_transpose_around_threshold(factor):
    tb = twin_beam_from_lambda(0.5)
    cp = ChannelParams(1.0, 0.5)
    t = factor * threshold_time(tb, cp)
    dim = fo.recommended_dim(tb, cp, t)
    rho = fo.integrate(fo.twin_beam_fock(tb, dim), cp, t, fo.IntegratorConfig.for_channel(cp, dim))
    closed = variance_criterion(evolve(tb, cp, t).variances).separable
    assert fo.is_ppt(rho) == closed == (factor > 1)


def test_recommended_dim_covers_both_tails():
    tb = twin_beam_from_lambda(0.6)
    assert fo.recommended_dim(tb, ChannelParams(1.0, 0.0), 1.0) == fo.minimal_dim(tb) + 4
    hot = fo.recommended_dim(tb, ChannelParams(1.0, 1.0), 1.0)
    assert hot > fo.minimal_dim(tb) + 4


def test_moment_series_csv(tmp_path):
    tb = twin_beam_from_lambda(0.3)
    cp = ChannelParams(1.0, 0.5)
    dim = 12
    rows = fo.moment_series(fo.twin_beam_fock(tb, dim), cp, 0.2, fo.IntegratorConfig.for_channel(cp, dim), every=2)
    path = tmp_path / "moments.csv"
    fo.write_moment_csv(rows, path)
    with open(path, newline="") as fh:
        table = list(csv.reader(fh))
    assert table[0] == list(fo.MOMENT_COLUMNS)
    assert float(table[1][0]) == 0.0
    last = [float(v) for v in table[-1]]
    assert last[0] == pytest.approx(0.2)
    w = evolve(tb, cp, 0.2).variances
    assert last[2] == pytest.approx(w.var_plus, abs=1e-6)
    assert last[3] == pytest.approx(w.var_minus, abs=1e-6)
    assert last[4] < 0


def test_compare_point_reports():
    cmp = fo.compare_point(twin_beam_from_lambda(0.2), ChannelParams(1.0, 0.1), 0.1)
    assert cmp.max_diff < 1e-6
    assert cmp.signs_agree and not cmp.oracle_separable
