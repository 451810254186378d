import filecmp
import math

import numpy as np
import pytest

from rvm.config import default_config
from rvm.errors import IntegrationError, ParameterError
from rvm.fields import GridSpec, SourceArrays, maxwell_step
from rvm.force import ForceParams
from rvm.kinetic import (InitialDistribution, InitialFields, default_profile_constant,
                         envelope_audit, init, run, sim_step, total_charge)
from rvm.moments import moment_profile

GRID = GridSpec(L=4 * np.pi, Nx=32, dt=0.1)
PARAMS = ForceParams()


def small_config(tmp_steps=5, **dist):
    d = {"n_particles": 3000, **dist}
    return default_config().with_overrides(
        grid={"Nx": 16, "dt": 0.1}, simulation={"steps": tmp_steps, "output_every": 2},
        distribution=d)


def test_default_profile_touches_envelope_once():
    # r^3 q(r) e^{Ar} = c r^5 e^{-Ar}: maximum at r = 5/A, equal to C0
    for A, C0 in [(5.0, 1.0), (7.5, 0.3), (40.0, 2.0)]:
        d = InitialDistribution(A=A, C0=C0)
        r = np.linspace(1e-6, 40.0 / A, 200_001)
        ratio = r**3 * d.q(r) * np.exp(A * r) / C0
        assert ratio.max() <= 1.0 + 1e-12
        assert abs(r[np.argmax(ratio)] - 5.0 / A) < 1e-3 / A
        assert default_profile_constant(A, C0) * (5 / A) ** 5 * math.exp(-5.0) == pytest.approx(C0)


def test_sampled_audit_within_one():
    st = init(InitialDistribution(n_particles=200_000, modulation=0.3), GRID, seed=3)
    a = envelope_audit(st, 1.0, 5.0)
    assert 0.99 < a <= 1.0 + 1e-12
    # doubling the rate is not admissible for the same data
    assert envelope_audit(st, 1.0, 10.0) > 1.0


def test_weights_estimate_total_charge():
    d = InitialDistribution(n_particles=2**16, modulation=0.4)
    st = init(d, GRID, seed=0)
    # int q = 4 pi c int r^4 e^{-2Ar} dr = 4 pi c 24 / (2A)^5, times L mean(g)
    c = default_profile_constant(d.A, d.C0)
    exact = 4 * np.pi * c * 24.0 / (2 * d.A) ** 5 * GRID.L / (1 + d.modulation)
    assert total_charge(st) == pytest.approx(exact, rel=2e-3)


def test_zero_amplitude_is_empty_plasma():
    st = init(InitialDistribution(amplitude=0.0, n_particles=1000), GRID, seed=0)
    assert len(st.particles) == 0
    for _ in range(10):
        st = sim_step(st, PARAMS)
    for name in ("Ex", "Ey", "Ez", "By", "Bz"):
        np.testing.assert_array_equal(getattr(st.fields, name), 0.0)


def test_empty_plasma_reduces_to_maxwell_step():
    flds = InitialFields(wave_amplitude=0.7, wave_mode=2, Bx=0.3)
    st = init(InitialDistribution(amplitude=0.0), GRID, seed=0, fields=flds)
    ref = st.fields.copy()
    z = np.zeros(GRID.Nx)
    for _ in range(20):
        st = sim_step(st, PARAMS)
        ref = maxwell_step(ref, SourceArrays(z, z, z, z), GRID)
    for name in ("Ex", "Ey", "Ez", "By", "Bz"):
        np.testing.assert_array_equal(getattr(st.fields, name), getattr(ref, name))


def test_seed_reproducibility():
    d = InitialDistribution(n_particles=5000, modulation=0.2)
    a, b, c = init(d, GRID, 11), init(d, GRID, 11), init(d, GRID, 12)
    np.testing.assert_array_equal(a.particles.x, b.particles.x)
    np.testing.assert_array_equal(a.particles.p, b.particles.p)
    np.testing.assert_array_equal(a.particles.weight, b.particles.weight)
    assert not np.array_equal(a.particles.x, c.particles.x)


def test_backends_agree():
    flds = InitialFields(wave_amplitude=0.5, Bx=0.5)
    st = init(InitialDistribution(n_particles=4000, modulation=0.2), GRID, 1, fields=flds)
    a = b = st
    for _ in range(10):
        a = sim_step(a, PARAMS, backend="numpy")
        b = sim_step(b, PARAMS, backend="compiled")
    np.testing.assert_allclose(a.particles.x, b.particles.x, rtol=0, atol=1e-12)
    np.testing.assert_allclose(a.particles.p, b.particles.p, rtol=0, atol=1e-12)
    np.testing.assert_allclose(a.particles.log_f, b.particles.log_f, rtol=1e-12, atol=1e-11)
    np.testing.assert_allclose(a.fields.Ey, b.fields.Ey, rtol=0, atol=1e-12)
    with pytest.raises(ValueError):
        sim_step(st, PARAMS, backend="fortran")


def test_rest_tracer_stays_at_rest():
    d = InitialDistribution(n_particles=3000, tracers=((1.0, (0, 0, 0)), (7.0, (0, 0, 0))))
    st = init(d, GRID, 0, fields=InitialFields(wave_amplitude=0.8, Bx=0.5))
    x0 = st.particles.x[-2:].copy()
    for _ in range(50):
        st = sim_step(st, PARAMS)
    np.testing.assert_array_equal(st.particles.p[-2:], 0.0)
    np.testing.assert_array_equal(st.particles.x[-2:], x0)
    assert np.all(st.particles.weight[-2:] == 0.0)


def test_conservation_over_steps():
    st = init(InitialDistribution(n_particles=5000, modulation=0.3), GRID, 2,
              fields=InitialFields(wave_amplitude=0.5, Bx=0.5))
    w0, q0 = st.particles.weight.copy(), total_charge(st)
    for _ in range(40):
        st = sim_step(st, PARAMS)
        assert abs(total_charge(st) - q0) <= 1e-12 * q0
    np.testing.assert_array_equal(st.particles.weight, w0)
    assert np.all(st.particles.f_value >= 0.0)
    assert envelope_audit(st, 1.0, 5.0) <= 1.0 + 1e-6


def test_cold_quiet_start_keeps_density_uniform():
    # A = 200 puts every momentum below 0.05; with no fields and no modulation
    # the density can only change through the small thermal drift.
    st = init(InitialDistribution(A=200.0, n_particles=20_000), GRID, 0)
    rho0 = moment_profile(st.particles, GRID, 0).values
    assert np.ptp(rho0) / rho0.mean() < 5e-3
    for _ in range(100):
        st = sim_step(st, PARAMS)
    rho = moment_profile(st.particles, GRID, 0).values
    assert np.ptp(rho) / rho.mean() < 2e-2
    assert np.max(np.abs(st.fields.Ex)) < 1e-2 * rho.mean() * GRID.L


def test_invalid_profiles_rejected():
    bad = InitialDistribution(momentum_profile=lambda r: 10.0 * r**2 * np.exp(-2 * r),
                              n_particles=100)
    with pytest.raises(ParameterError, match="envelope"):
        init(bad, GRID, 0)
    nonzero = InitialDistribution(momentum_profile=lambda r: 1e-6 * np.exp(-20.0 * r),
                                  n_particles=100)
    with pytest.raises(ParameterError, match="vanish"):
        init(nonzero, GRID, 0)
    with pytest.raises(ParameterError):
        InitialDistribution(amplitude=1.5)
    with pytest.raises(ParameterError):
        InitialDistribution(modulation=1.0)


def test_nonfinite_state_reports_step():
    st = init(InitialDistribution(n_particles=200), GRID, 0)
    st.fields.Ey[3] = np.nan
    st.step = 7
    with pytest.raises(IntegrationError) as exc:
        sim_step(st, PARAMS)
    assert exc.value.step == 8


def test_zero_steps_writes_initial_snapshot(tmp_path):
    res = run(small_config(tmp_steps=0), tmp_path)
    assert list(res.series["step"]) == [0]
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["diagnostics.csv", "fields_000000.csv", "manifest.json",
                     "moments_000000.csv", "particles_final.csv"]


def test_run_is_bit_reproducible(tmp_path):
    cfg = small_config(tmp_steps=6)
    a, b = tmp_path / "a", tmp_path / "b"
    run(cfg, a)
    run(cfg, b)
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
    assert not mismatch and not errors


def test_run_series_invariants():
    res = run(small_config(tmp_steps=10))
    s = res.series
    assert len(s["step"]) == 11
    assert res.max_audit <= 1.0 + 1e-6
    assert np.max(np.abs(s["charge"] - s["charge"][0])) <= 1e-12 * s["charge"][0]
    assert np.max(s["gauss_residual"]) <= 1e-10
    assert np.max(s["rest_p"]) == 0.0
