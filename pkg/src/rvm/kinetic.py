"""Full-f particle-in-cell solver in 1D3V.

Macroparticles carry a phase point ``(x, p)``, the log of the distribution
value ``f`` at that point, and a deposition weight.  The weight is the
conserved quantity ``f dV`` (phase volume times density) and never changes;
``f`` itself is transported along the characteristic by

    d(log f)/dt = -div_p F.

Fields live on the periodic staggered grid of :mod:`rvm.fields`.  The
coupled step is second order: a midpoint push with fields frozen at the
start of the step, current deposited at the half step, charge at the new
positions, then one field update.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field, replace

import numpy as np
from scipy import special, stats
from scipy.stats import qmc

from .errors import IntegrationError, ParameterError
from .fields import (FieldState, GridSpec, SourceArrays, _cic, _scatter, maxwell_step,
                     sample_field, solve_gauss)
from .force import ForceParams, div_p_force, total_force
from .kinematics import norm, velocity

_GAMMA_SHAPE = 5.0  # radial proposal |p|^4 exp(-b|p|) for a 3D density |p|^2 exp(-b|p|)


def default_profile_constant(A, C0):
    """``c`` with ``max_r r^3 c r^2 exp(-2Ar) exp(Ar) = C0`` (maximizer ``r = 5/A``)."""
    return C0 * (A / 5.0) ** 5 * math.exp(5.0)


@dataclass(frozen=True)
class InitialDistribution:
    """``f0(x, p) = g(x) q(|p|)`` on the periodic interval.

    ``g(x) = amplitude (1 + modulation cos(2 pi mode x / L)) / (1 + modulation)``
    has maximum ``amplitude`` (at most one).  The default momentum profile
    ``q(r) = c r^2 exp(-2 A r)`` with ``c`` from :func:`default_profile_constant`
    satisfies ``r^3 f0 exp(A r) <= amplitude * C0`` with equality at
    ``r = 5/A``.  It vanishes at ``p = 0``.

    A custom ``momentum_profile`` (callable of ``r``) is accepted but checked
    against the envelope on a dense grid at :func:`init` time.
    """

    A: float = 5.0
    C0: float = 1.0
    amplitude: float = 1.0
    modulation: float = 0.0
    mode: int = 1
    n_particles: int = 100_000
    momentum_profile: object = None
    tracers: tuple = ()  # (x, (p1, p2, p3)) pairs carried with zero weight

    def __post_init__(self):
        if not (self.A > 0 and self.C0 > 0):
            raise ParameterError("A and C0 must be positive")
        if not 0.0 <= self.amplitude <= 1.0:
            raise ParameterError("amplitude must lie in [0, 1]")
        if not 0.0 <= self.modulation < 1.0:
            raise ParameterError("modulation must lie in [0, 1)")
        if self.n_particles < 0:
            raise ParameterError("n_particles must be nonnegative")

    def g(self, x, L):
        x = np.asarray(x, dtype=float)
        m = self.modulation
        return self.amplitude * (1.0 + m * np.cos(2 * np.pi * self.mode * x / L)) / (1.0 + m)

    def q(self, r):
        r = np.asarray(r, dtype=float)
        if self.momentum_profile is not None:
            return np.asarray(self.momentum_profile(r), dtype=float)
        c = default_profile_constant(self.A, self.C0)
        return c * r**2 * np.exp(-2.0 * self.A * r)

    def log_f0(self, x, p, L):
        r = norm(p)
        with np.errstate(divide="ignore"):
            return np.log(self.g(x, L)) + np.log(self.q(r))

    def check_envelope(self, r_extra=()):
        """Largest ``r^3 q(r) exp(A r) / C0`` on a dense grid (times ``max g``)."""
        r = np.concatenate([np.geomspace(1e-8, 200.0 / self.A, 20001), np.ravel(r_extra)])
        r = r[r > 0]
        with np.errstate(over="ignore", invalid="ignore"):
            ratio = r**3 * self.q(r) * np.exp(self.A * r) * self.amplitude / self.C0
        return float(np.nanmax(ratio))


@dataclass
class MacroParticles:
    """Struct-of-arrays particle set: ``x (N,)``, ``p (N, 3)``, ``log_f (N,)``, ``weight (N,)``."""

    x: np.ndarray
    p: np.ndarray
    log_f: np.ndarray
    weight: np.ndarray

    def __len__(self):
        return self.x.shape[0]

    @property
    def f_value(self):
        return np.exp(self.log_f)

    def copy(self):
        return MacroParticles(self.x.copy(), self.p.copy(), self.log_f.copy(), self.weight.copy())


@dataclass
class SimState:
    particles: MacroParticles
    fields: FieldState
    grid: GridSpec
    time: float = 0.0
    step: int = 0
    diagnostics: list = dc_field(default_factory=list)


@dataclass(frozen=True)
class InitialFields:
    """Vacuum-compatible transverse fields added on top of the Gauss solve.

    A right-moving wave ``Ey = Bz = wave_amplitude cos(k x)`` with
    ``k = 2 pi wave_mode / L`` plus a constant ``Bx``.
    """

    wave_amplitude: float = 0.0
    wave_mode: int = 1
    Bx: float = 0.0

    def build(self, grid, rho):
        st = FieldState.zeros(grid, Bx=self.Bx)
        k = 2 * np.pi * self.wave_mode / grid.L
        st.Ey = self.wave_amplitude * np.cos(k * grid.nodes)
        st.Bz = self.wave_amplitude * np.cos(k * grid.half_nodes)
        st.Ex = solve_gauss(rho, grid)
        return st


def sample_particles(dist, grid, seed):
    """Scrambled Sobol sample of ``f0`` with importance weights.

    Positions are uniform; momenta are drawn from the 3D density
    proportional to ``|p|^2 exp(-2A|p|)`` (radius from a Gamma(5) law,
    isotropic direction).  The weight is ``f0 / (N h)`` with ``h`` the
    proposal density, so ``sum(weight)`` estimates the total charge.
    Points with ``f0 = 0`` are dropped.
    """
    n = dist.n_particles
    b = 2.0 * dist.A
    if n == 0 or dist.amplitude == 0.0:
        return MacroParticles(np.zeros(0), np.zeros((0, 3)), np.zeros(0), np.zeros(0))
    sob = qmc.Sobol(d=4, scramble=True, seed=np.random.default_rng(seed))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)  # non power-of-two sample sizes
        u = sob.random(n)
    x = grid.L * u[:, 0]
    r = stats.gamma.ppf(u[:, 1], a=_GAMMA_SHAPE, scale=1.0 / b)
    cos_t = 2.0 * u[:, 2] - 1.0
    sin_t = np.sqrt(np.maximum(0.0, 1.0 - cos_t**2))
    phi = 2 * np.pi * u[:, 3]
    p = r[:, None] * np.stack([sin_t * np.cos(phi), sin_t * np.sin(phi), cos_t], axis=-1)
    # proposal density in (x, p): (1/L) r^2 e^{-br} b^5 / (4 pi Gamma(5))
    with np.errstate(divide="ignore"):
        log_h = (-math.log(grid.L) + 2.0 * np.log(r) - b * r + 5.0 * math.log(b)
                 - math.log(4 * np.pi) - special.gammaln(_GAMMA_SHAPE))
    log_f = dist.log_f0(x, p, grid.L)
    keep = np.isfinite(log_f) & np.isfinite(log_h)
    x, p, log_f, log_h = x[keep], p[keep], log_f[keep], log_h[keep]
    weight = np.exp(log_f - log_h) / n
    return MacroParticles(x, p, log_f, weight)


def _append_tracers(parts, dist, grid):
    if not dist.tracers:
        return parts
    tx = np.array([float(t[0]) % grid.L for t in dist.tracers])
    tp = np.array([np.asarray(t[1], dtype=float) for t in dist.tracers]).reshape(-1, 3)
    tl = dist.log_f0(tx, tp, grid.L)
    return MacroParticles(np.concatenate([parts.x, tx]), np.concatenate([parts.p, tp]),
                          np.concatenate([parts.log_f, tl]),
                          np.concatenate([parts.weight, np.zeros(len(tx))]))


def init(dist, grid, seed, fields=None):
    """Sample ``dist`` and build compatible initial fields.

    Raises :class:`ParameterError` when the momentum profile violates the
    envelope ``|p|^3 f0 exp(A|p|) <= C0`` anywhere it was probed.
    """
    parts = sample_particles(dist, grid, seed)
    worst = dist.check_envelope(norm(parts.p))
    if len(parts):
        with np.errstate(divide="ignore"):
            r = norm(parts.p)
            worst = max(worst, float(np.max(np.exp(parts.log_f + 3 * np.log(r) + dist.A * r)
                                             / dist.C0)))
    if worst > 1.0 + 1e-12:
        raise ParameterError(f"initial profile violates the envelope bound: max ratio {worst:.6g}")
    if dist.momentum_profile is not None and float(np.asarray(dist.q(0.0))) != 0.0:
        raise ParameterError("momentum profile must vanish at p = 0")
    parts = _append_tracers(parts, dist, grid)
    rho = _deposit_rho(parts.x, parts.weight, grid)
    fstate = (fields or InitialFields()).build(grid, rho)
    return SimState(parts, fstate, grid)


def _deposit_rho(x, w, grid):
    i0, i1, frac = _cic(x, grid)
    return _scatter(i0, i1, frac, w, grid.Nx) / grid.dx


def _rates(fs, p, params):
    return velocity(p), total_force(fs, p, params), -div_p_force(fs, p, params)


def _push_numpy(pt, fs0, grid, params):
    dt = grid.dt
    h = 0.5 * dt
    v1, F1, d1 = _rates(sample_field(fs0, pt.x, grid), pt.p, params)
    xh = np.mod(pt.x + h * v1[:, 0], grid.L)
    v2, F2, d2 = _rates(sample_field(fs0, xh, grid), pt.p + h * F1, params)
    return (np.mod(pt.x + dt * v2[:, 0], grid.L), np.mod(pt.x + h * v2[:, 0], grid.L),
            pt.p + dt * F2, pt.log_f + dt * d2, v2)


def _push_compiled(pt, fs0, grid, params):
    from ._kernels import push_midpoint

    n = len(pt)
    x_new, x_mid, lf_new = np.empty(n), np.empty(n), np.empty(n)
    p_new, v_mid = np.empty((n, 3)), np.empty((n, 3))
    push_midpoint(np.ascontiguousarray(pt.x), np.ascontiguousarray(pt.p),
                  np.ascontiguousarray(pt.log_f), float(grid.L), float(grid.dx),
                  fs0.Ex, fs0.Ey, fs0.Ez, float(fs0.Bx), fs0.By, fs0.Bz,
                  float(params.M), float(params.R0), float(params.R1), float(grid.dt),
                  x_new, x_mid, p_new, lf_new, v_mid)
    return x_new, x_mid, p_new, lf_new, v_mid


def sim_step(state, params, backend="compiled"):
    """One coupled step; returns a new :class:`SimState`.

    Particles take a midpoint step with the fields at the start of the
    step.  The current uses the midpoint positions and velocities, the
    charge the new positions, and then the fields advance by one step.
    ``backend="numpy"`` selects the vectorized reference push; the
    compiled push evaluates the same formulas particle by particle.
    """
    grid, fs0, pt = state.grid, state.fields, state.particles
    dt = grid.dt
    if backend == "compiled":
        x_new, x_mid, p_new, lf_new, v_mid = _push_compiled(pt, fs0, grid, params)
    elif backend == "numpy":
        x_new, x_mid, p_new, lf_new, v_mid = _push_numpy(pt, fs0, grid, params)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    bad = ~(np.isfinite(x_new) & np.all(np.isfinite(p_new), axis=1)) | np.isnan(lf_new) \
        | (lf_new == np.inf)
    if np.any(bad):
        raise IntegrationError(
            f"nonfinite particle state at step {state.step + 1} (particle {int(np.argmax(bad))})",
            time=state.time + dt, step=state.step + 1)
    i0, i1, frac = _cic(x_mid, grid)
    w = pt.weight
    j = [_scatter(i0, i1, frac, w * v_mid[:, a], grid.Nx) / grid.dx for a in range(3)]
    rho = _deposit_rho(x_new, w, grid)
    fields = maxwell_step(fs0, SourceArrays(rho, *j), grid)
    for name in ("Ex", "Ey", "Ez", "By", "Bz"):
        if not np.all(np.isfinite(getattr(fields, name))):
            raise IntegrationError(f"nonfinite field {name} at step {state.step + 1}",
                                   time=state.time + dt, step=state.step + 1)
    return replace(state, particles=MacroParticles(x_new, p_new, lf_new, w.copy()),
                   fields=fields, time=state.time + dt, step=state.step + 1,
                   diagnostics=state.diagnostics)


def envelope_audit(state, C0, A):
    """``max f |p|^3 exp(A|p|) / C0`` over the particles (zero-momentum ones contribute 0)."""
    parts = state.particles if isinstance(state, SimState) else state
    r = norm(parts.p)
    ok = (r > 0) & np.isfinite(parts.log_f)
    if not np.any(ok):
        return 0.0
    log_ratio = parts.log_f[ok] + 3.0 * np.log(r[ok]) + A * r[ok] - math.log(C0)
    return float(np.exp(np.max(log_ratio)))


def total_charge(state):
    return float(np.sum(state.particles.weight))


def run(config, out_dir=None):
    """Execute a simulation described by a parsed run configuration.

    See :mod:`rvm.config` for the schema and :mod:`rvm.diagnostics` for the
    files written when ``out_dir`` is given.  Returns a :class:`RunResult`.
    """
    from .diagnostics import RunRecorder

    grid = config.grid
    params = config.force
    state = init(config.distribution, grid, config.seed, config.initial_fields)
    rec = RunRecorder(config, state, out_dir)
    rec.observe(state, force=True)
    for _ in range(config.steps):
        state = sim_step(state, params, backend=config.backend)
        rec.observe(state)
    return rec.finish(state)


__all__ = [
    "InitialDistribution", "InitialFields", "MacroParticles", "SimState",
    "default_profile_constant", "sample_particles", "init", "sim_step", "envelope_audit",
    "total_charge", "run", "ForceParams",
]
