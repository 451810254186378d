import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import FLUX_BOUND_A5, mc_flux_bound
from rvm.errors import ConvergenceError, ParameterError
from rvm.fields import GridSpec, deposit
from rvm.force import ForceParams
from rvm.kinetic import InitialDistribution, init, sim_step
from rvm.moments import (EnvelopeParams, density_log_diagnostic, envelope_flux_bound,
                         estimate_G2, flux_moment_profile, higher_moment_slack, moment_profile)

GRID = GridSpec(L=4 * np.pi, Nx=32, dt=0.1)


@pytest.fixture(scope="module")
def state():
    return init(InitialDistribution(n_particles=50_000, modulation=0.3), GRID, seed=5)


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_flux_bound_reference_values(n):
    assert envelope_flux_bound(n, EnvelopeParams()) == pytest.approx(FLUX_BOUND_A5[n], rel=1e-10)


def test_flux_bound_closed_form_and_monte_carlo():
    rng = np.random.default_rng(0)
    for A, C0 in [(5.0, 1.0), (8.0, 0.5)]:
        env = EnvelopeParams(C0=C0, A=A)
        assert envelope_flux_bound(1, env) == pytest.approx(4 * math.pi * C0 / A, rel=1e-12)
        for n in (0, 2, 4):
            mean, sd = mc_flux_bound(n, C0, A, rng)
            assert abs(envelope_flux_bound(n, env) - mean) < 5 * sd


def test_flux_bound_increases_with_order():
    env = EnvelopeParams()
    vals = [envelope_flux_bound(n, env) for n in range(6)]
    assert np.all(np.diff(vals) > 0)


def test_flux_bound_argument_errors(monkeypatch):
    with pytest.raises(ParameterError):
        envelope_flux_bound(-1, EnvelopeParams())
    with pytest.raises(ParameterError):
        envelope_flux_bound(1, EnvelopeParams(), epsrel=1e-16)
    import rvm.moments as mod

    monkeypatch.setattr(mod.integrate, "quad", lambda *a, **k: (1.0, 0.5))
    with pytest.raises(ConvergenceError):
        envelope_flux_bound(1, EnvelopeParams())


def test_m0_is_deposited_charge(state):
    src = deposit(state.particles.x, state.particles.p, state.particles.weight, GRID)
    np.testing.assert_array_equal(moment_profile(state.particles, GRID, 0).values, src.rho)


def test_flux_profiles_below_bound(state):
    env = EnvelopeParams()
    for n in range(4):
        vm = flux_moment_profile(state.particles, GRID, n).values
        assert vm.max() <= envelope_flux_bound(n, env)


def test_flux_profiles_below_bound_after_evolution():
    st_ = init(InitialDistribution(n_particles=5000, modulation=0.3), GRID, seed=1)
    for _ in range(20):
        st_ = sim_step(st_, ForceParams())
    for n in range(4):
        assert flux_moment_profile(st_.particles, GRID, n).values.max() \
            <= envelope_flux_bound(n, EnvelopeParams())


def test_order_validation(state):
    for bad in (-1, 2.5, 9):
        with pytest.raises(ParameterError):
            moment_profile(state.particles, GRID, bad)
    with pytest.raises(ParameterError):
        EnvelopeParams(A=0.0)
    with pytest.raises(ParameterError):
        EnvelopeParams(A=1.0).check_admissible(ForceParams())


@given(r=st.floats(0.0, 1e3), n=st.integers(0, 8))
def test_pointwise_higher_moment_inequality(r, n):
    # [p]^n <= sqrt2 |v| [p]^n + sqrt2^n, the per-particle form of the slack bound
    g = math.sqrt(1.0 + r * r)
    assert g**n <= math.sqrt(2.0) * (r / g) * g**n + math.sqrt(2.0) ** n + 1e-12 * g**n


def test_higher_moment_slack_nonpositive(state):
    for n in range(1, 5):
        assert higher_moment_slack(state.particles, GRID, n) <= 1e-12


def test_density_split(state):
    G2 = estimate_G2(state.particles, GRID)
    assert G2 > 2.0
    rep = density_log_diagnostic(state.particles, GRID, EnvelopeParams(), G2)
    assert rep.R == pytest.approx(G2 ** -0.25)
    np.testing.assert_allclose(rep.near + rep.tail, rep.rho, rtol=1e-12, atol=1e-15)
    assert rep.ok and rep.ratio <= 1.0
    assert rep.tail_bound == pytest.approx(4 * math.pi * (math.log(1 / rep.R) + 0.2))
    with pytest.raises(ParameterError):
        density_log_diagnostic(state.particles, GRID, EnvelopeParams(), 1.0)
