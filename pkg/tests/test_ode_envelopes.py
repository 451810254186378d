import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import LOG_WZ_C1, blowup_time, wz_direct
from rvm.errors import ParameterError
from rvm.ode_envelopes import (LogSysParams, blowup_ode, double_exp_envelope, envelope_margin,
                               integrate_WZ, integrate_Weq, lipschitz_constant,
                               log_double_exp_envelope, sup_envelope)

E = math.e


def test_params_validation():
    for kw in (dict(C=-1.0), dict(W0=2.0), dict(Z0=0.0), dict(t_end=0.0)):
        with pytest.raises(ParameterError):
            LogSysParams(**kw)
    assert LogSysParams().Wbar0 == pytest.approx(2 * E)


def test_zero_coupling_is_constant():
    ser = integrate_WZ(LogSysParams(C=0.0, W0=5.0, Z0=4.0), 0.1)
    np.testing.assert_array_equal(ser.W, ser.W[0])
    np.testing.assert_array_equal(ser.Z, ser.Z[0])
    assert ser.W[0] == pytest.approx(5.0) and ser.Z[0] == pytest.approx(4.0)


@pytest.mark.parametrize("t", sorted(LOG_WZ_C1))
def test_reference_values(t):
    ser = integrate_WZ(LogSysParams(C=1.0, t_end=t), 1e-3)
    assert ser.log_W[-1] == pytest.approx(LOG_WZ_C1[t][0], rel=1e-9)
    assert ser.log_Z[-1] == pytest.approx(LOG_WZ_C1[t][1], rel=1e-9)


def test_against_direct_integration():
    for C, t in [(0.5, 1.0), (1.0, 0.7), (2.0, 0.3)]:
        ser = integrate_WZ(LogSysParams(C=C, t_end=t), 1e-3)
        W, Z = wz_direct(C, E, E, t)
        assert ser.W[-1] == pytest.approx(W, rel=1e-9)
        assert ser.Z[-1] == pytest.approx(Z, rel=1e-9)


def test_step_halving_ratio():
    p = LogSysParams(C=1.0, t_end=1.0)
    ends = [integrate_WZ(p, dt, max_hlambda=np.inf).log_W[-1] for dt in (0.02, 0.01, 0.005)]
    assert abs(ends[0] - ends[1]) / abs(ends[1] - ends[2]) >= 14.0


def test_overflow_reported_and_log_space_kept():
    ser = integrate_WZ(LogSysParams(C=2.0), 1e-3)
    assert ser.overflow_time is not None and 0 < ser.overflow_time < 3.0
    assert np.all(np.isfinite(ser.log_W)) and np.isinf(ser.W[-1])
    with pytest.raises(ParameterError):
        integrate_WZ(LogSysParams(), 0.0)


def test_envelope_at_zero_and_closed_form():
    p = LogSysParams(C=1.3, W0=3.0, Z0=4.0)
    assert double_exp_envelope(p, 0.0) == pytest.approx(p.Wbar0, rel=1e-14)
    t = np.linspace(0, 2, 5)
    expected = np.exp((1 + math.log(p.Wbar0)) * np.exp(1.3 * t) - 1)
    np.testing.assert_allclose(double_exp_envelope(p, t), expected, rtol=1e-12)


def test_envelope_monotone_in_t_and_C():
    t = np.linspace(0, 3, 301)
    rows = [log_double_exp_envelope(LogSysParams(C=C), t) for C in np.linspace(0.1, 3, 30)]
    rows = np.array(rows)
    assert np.all(np.diff(rows, axis=1) > 0)
    assert np.all(np.diff(rows[:, 1:], axis=0) > 0)


@pytest.mark.parametrize("k", [1.0, 2.0])
def test_comparison_equation_matches_closed_form(k):
    p = LogSysParams(C=1.0, t_end=3.0)
    t, y = integrate_Weq(p, 1e-3, k)
    np.testing.assert_allclose(y, log_double_exp_envelope(p, t, k), rtol=1e-8)


def test_envelope_with_single_log_factor_is_crossed():
    # W + Z log Z grows like (log Wbar)^2 Wbar, so the single-exponent envelope is
    # overtaken.  Time enters only through C t, so the first crossing sits at the
    # same C t for every C; it comes before t = 1 even at C = 1.
    crossings = []
    for C in (0.5, 1.0, 2.0):
        p = LogSysParams(C=C, t_end=3.0)
        ser = integrate_WZ(p, 1e-3)
        gap = log_double_exp_envelope(p, ser.t, 1.0) - ser.log_sum
        assert abs(gap[0]) < 1e-14 and gap[1] > 0 and envelope_margin(ser, p, 1.0, "sum")[0] < 0
        crossings.append(C * ser.t[np.argmax(gap[1:] < 0) + 1])
    np.testing.assert_allclose(crossings, crossings[1], atol=2e-3)
    assert 0.4 < crossings[1] < 0.5


@pytest.mark.parametrize("C", [0.5, 1.0, 2.0])
def test_envelope_with_both_log_terms_holds(C):
    p = LogSysParams(C=C, t_end=3.0)
    ser = integrate_WZ(p, 1e-3)
    assert envelope_margin(ser, p, 2.0, "wbar")[0] >= 0.0
    assert envelope_margin(ser, p, 2.0, "sum")[0] >= 0.0


@pytest.mark.parametrize("log_Y0", [1.0, 2.0, 4.0])
def test_blowup_time(log_Y0):
    res = blowup_ode(log_Y0=log_Y0)
    assert res.blowup_time == pytest.approx(blowup_time(log_Y0), rel=0.02)
    assert np.all(np.diff(res.log_Y) > 0)


def test_blowup_time_decreases_with_Y0():
    times = [blowup_ode(Y0=y).blowup_time for y in (E, E**1.5, E**2, E**3, E**4)]
    assert np.all(np.diff(times) < 0)
    with pytest.raises(ParameterError):
        blowup_ode(Y0=1.0)


def test_sup_envelope_examples():
    g = np.cumsum(np.abs(np.random.default_rng(0).normal(size=100)))
    np.testing.assert_array_equal(sup_envelope(g), g)
    t = np.linspace(0, 2 * np.pi, 2001)
    G = sup_envelope(np.sin(t))
    after = t >= np.pi / 2 + 1e-3
    assert np.all(G[after] == np.max(np.sin(t)))
    assert abs(G[after][0] - 1.0) < 1e-6


@given(st.lists(st.floats(-1.0, 1.0), min_size=2, max_size=200))
def test_sup_envelope_idempotent_and_lipschitz(incs):
    g = np.cumsum(incs)
    G = sup_envelope(g)
    np.testing.assert_array_equal(sup_envelope(G), G)
    assert np.all(G >= g)
    assert lipschitz_constant(G, 0.1) <= lipschitz_constant(g, 0.1)
