import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from twinbeam.channel import (
    ChannelParams,
    diffusion,
    drift_coefficient,
    evolve,
    evolve_by_convolution,
    evolve_variances,
    green_function,
    rescaled_time,
    stationary_state,
    stationary_wigner,
)
from twinbeam.errors import DomainError
from twinbeam.gaussian_core import (
    PhasePoint,
    VariancePair,
    initial_variances,
    twin_beam_from_lambda,
    wigner_eval,
)

channels = st.builds(
    ChannelParams,
    gamma_rate=st.floats(min_value=1e-2, max_value=5.0),
    m_thermal=st.floats(min_value=0.0, max_value=3.0),
)
lambdas = st.floats(min_value=0.0, max_value=3.0)
times = st.floats(min_value=0.0, max_value=20.0)


@pytest.mark.parametrize("m, expected", [(0.0, 1.0), (0.5, 0.5), (1.0, 1 / 3)])
def test_drift(m, expected):
    assert drift_coefficient(ChannelParams(1.0, m)) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("kwargs", [dict(gamma_rate=0.0), dict(gamma_rate=-1.0), dict(gamma_rate=math.inf), dict(gamma_rate=1.0, m_thermal=-0.1)])
def test_channel_params_validation(kwargs):
    with pytest.raises(DomainError):
        ChannelParams(**kwargs)


def test_evolve_identity_at_zero():
    tb = twin_beam_from_lambda(0.7)
    res = evolve(tb, ChannelParams(2.0, 0.3), 0.0)
    assert res.variances == initial_variances(tb)
    assert res.tau == 0.0 and res.diffusion == 0.0


def test_evolve_long_time_thermal():
    cp = ChannelParams(1.0, 0.5)
    for lam in (0.0, 0.5, 2.0):
        v = evolve(twin_beam_from_lambda(lam), cp, 50.0).variances
        assert v.var_plus == pytest.approx(0.5, abs=1e-10)
        assert v.var_minus == pytest.approx(0.5, abs=1e-10)


def test_evolve_expanded_form():
    # 4 Sigma_-^2 = e^{-2 lam - Gamma t} + (2M+1)(1 - e^{-Gamma t}); mpmath value
    v = evolve(twin_beam_from_lambda(0.5), ChannelParams(1.0, 0.5), 0.2).variances
    assert 4 * v.var_minus == pytest.approx(0.663732705756238410860291208513, rel=1e-14)
    expanded = math.exp(-1.2) + 2 * (1 - math.exp(-0.2))
    assert 4 * v.var_minus == pytest.approx(expanded, rel=1e-14)


def test_evolve_negative_time():
    with pytest.raises(DomainError):
        evolve(twin_beam_from_lambda(1.0), ChannelParams(1.0), -1e-9)


def test_diffusion_value():
    # (2M+1)/4 (1 - e^{-1}) at M = 0.5
    assert diffusion(ChannelParams(1.0, 0.5), 1.0) == pytest.approx(0.316060279414278839, rel=1e-14)


@given(lambdas, channels, times, times)
def test_semigroup(lam, cp, t1, t2):
    v0 = initial_variances(twin_beam_from_lambda(lam))
    two_step = evolve_variances(evolve_variances(v0, cp, t1), cp, t2)
    one_step = evolve_variances(v0, cp, t1 + t2)
    assert two_step.var_plus == pytest.approx(one_step.var_plus, rel=1e-12, abs=1e-12)
    assert two_step.var_minus == pytest.approx(one_step.var_minus, rel=1e-12, abs=1e-12)


@given(channels, st.floats(min_value=1e-12, max_value=100.0))
def test_diffusion_positive_and_clocks(cp, t):
    res = evolve(twin_beam_from_lambda(0.4), cp, t)
    assert res.diffusion > 0
    assert drift_coefficient(cp) * res.tau == pytest.approx(cp.gamma_rate * t, rel=1e-12)
    assert res.tau == rescaled_time(cp, t)


@given(lambdas, channels)
def test_monotone_relaxation(lam, cp):
    tb = twin_beam_from_lambda(lam)
    ts = np.linspace(0.0, 10.0 / cp.gamma_rate, 60)
    vp = np.array([evolve(tb, cp, t).variances.var_plus for t in ts])
    vm = np.array([evolve(tb, cp, t).variances.var_minus for t in ts])
    target = (2 * cp.m_thermal + 1) / 4
    slack = 1e-15 * max(1.0, vp.max())
    dm = np.diff(vm)
    dp = np.diff(vp)
    if vm[0] <= target:
        assert np.all(dm >= -slack)
    else:
        assert np.all(dm <= slack)
    if vp[0] <= target:
        assert np.all(dp >= -slack)
    else:
        assert np.all(dp <= slack)
    assert abs(vm[-1] - target) <= abs(vm[0] - target) + slack


def test_green_function_peak_and_errors():
    cp = ChannelParams(1.0, 0.5)
    xp = 0.8
    centre = xp * math.exp(-0.5 * 1.0)
    d2 = diffusion(cp, 1.0)
    assert green_function(cp, 1.0, centre, xp) == pytest.approx(1 / math.sqrt(2 * math.pi * d2))
    with pytest.raises(DomainError):
        green_function(cp, 0.0, 0.0, 0.0)


@pytest.mark.parametrize("cp, t, xp", [(ChannelParams(1.0, 0.5), 1.0, 0.8), (ChannelParams(0.3, 0.0), 0.05, -1.2), (ChannelParams(2.0, 2.0), 3.0, 0.0)])
def test_green_function_normalized(cp, t, xp):
    centre = xp * math.exp(-0.5 * cp.gamma_rate * t)
    width = math.sqrt(diffusion(cp, t))
    total, _ = quad(lambda x: green_function(cp, t, x, xp), centre - 40 * width, centre + 40 * width, epsabs=1e-13, epsrel=1e-13, points=[centre])
    assert total == pytest.approx(1.0, abs=1e-8)
    mean, _ = quad(lambda x: x * green_function(cp, t, x, xp), centre - 40 * width, centre + 40 * width, epsabs=1e-13, points=[centre])
    assert mean == pytest.approx(centre, abs=1e-8)


def test_stationary_state():
    assert stationary_state(ChannelParams(1.0, 0.0)) == VariancePair(0.25, 0.25)
    assert stationary_state(ChannelParams(1.0, 1.0)) == VariancePair(0.75, 0.75)
    for lam in (0.0, 1.0, 3.0):
        for cp in (ChannelParams(1.0, 0.2), ChannelParams(0.5, 1.7)):
            v = evolve(twin_beam_from_lambda(lam), cp, 1e3 / cp.gamma_rate).variances
            s = stationary_state(cp)
            assert v.var_plus == pytest.approx(s.var_plus, abs=1e-10)
            assert v.var_minus == pytest.approx(s.var_minus, abs=1e-10)


@given(channels, st.tuples(*[st.floats(-2, 2)] * 4))
def test_stationary_wigner_matches_wigner_eval(cp, xs):
    p = PhasePoint(*xs)
    assert stationary_wigner(cp, p) == pytest.approx(wigner_eval(stationary_state(cp), p), rel=1e-12)


def test_convolution_errors():
    tb = twin_beam_from_lambda(0.3)
    cp = ChannelParams(1.0, 0.5)
    with pytest.raises(DomainError):
        evolve_by_convolution(tb, cp, 0.0, PhasePoint(0, 0, 0, 0), 10_000)
    with pytest.raises(DomainError):
        evolve_by_convolution(tb, cp, 0.5, PhasePoint(0, 0, 0, 0), 100)


def test_convolution_matches_closed_form_origin():
    tb = twin_beam_from_lambda(0.3)
    cp = ChannelParams(1.0, 0.5)
    p = PhasePoint(0, 0, 0, 0)
    est, err = evolve_by_convolution(tb, cp, 0.5, p, 400_000, seed=3, return_stderr=True)
    closed = wigner_eval(evolve(tb, cp, 0.5).variances, p)
    assert abs(est - closed) < 3 * err


def test_convolution_is_deterministic():
    tb = twin_beam_from_lambda(0.3)
    cp = ChannelParams(1.0, 0.5)
    p = PhasePoint(0.1, -0.2, 0.3, 0.0)
    a = evolve_by_convolution(tb, cp, 0.5, p, 50_000, seed=11, chunk_size=7_000)
    b = evolve_by_convolution(tb, cp, 0.5, p, 50_000, seed=11, chunk_size=7_000)
    assert a == b


def test_convolution_vacuum_symmetric():
    tb = twin_beam_from_lambda(0.0)
    cp = ChannelParams(1.0, 0.8)
    vals = [
        evolve_by_convolution(tb, cp, 0.7, PhasePoint(*pt), 200_000, seed=5)
        for pt in [(0.3, 0, 0, 0), (0, 0.3, 0, 0), (0, 0, 0.3, 0), (0, 0, 0, -0.3)]
    ]
    # common random numbers, different coordinates: agreement far better than the MC error
    assert max(vals) - min(vals) < 0.02 * np.mean(vals)


def test_convolution_long_time_stationary():
    tb = twin_beam_from_lambda(0.8)
    cp = ChannelParams(1.0, 0.3)
    p = PhasePoint(0.2, 0.1, -0.3, 0.4)
    est, err = evolve_by_convolution(tb, cp, 30.0, p, 100_000, seed=2, return_stderr=True)
    assert abs(est - stationary_wigner(cp, p)) < 3 * err + 1e-12
