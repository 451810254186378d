"""Electromagnetic fields.

Two providers live here:

* a catalog of prescribed smooth space-time fields (exact vacuum solutions or
  uniform fields) with analytic spatial gradients, used for 3D3V tracing;
* a 1D3V periodic Maxwell solver on a staggered grid with cloud-in-cell
  deposition and interpolation, used by the self-consistent simulation.

Grid layout
-----------
Nodes sit at ``x_i = i dx`` and half nodes at ``x_{i+1/2}``.  ``Ey``, ``Ez``
and all sources live on nodes; ``Ex``, ``By``, ``Bz`` live on half nodes
(array entry ``i`` is the value at ``x_{i+1/2}``).  ``Bx`` is a constant, so
the 1D divergence of ``B`` vanishes identically.  Both ``E`` and ``B`` are
stored at the same time level.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .errors import ParameterError
from .force import FieldSample
from .kinematics import velocity

# ---------------------------------------------------------------------------
# prescribed fields


def _perpendicular_unit(k_hat, rng):
    trial = rng.normal(size=k_hat.shape)
    trial -= np.sum(trial * k_hat, axis=-1, keepdims=True) * k_hat
    return trial / np.linalg.norm(trial, axis=-1, keepdims=True)


def _random_unit(rng, shape):
    u = rng.normal(size=shape + (3,))
    return u / np.linalg.norm(u, axis=-1, keepdims=True)


class PlaneWaveSum:
    """Uniform background plus a sum of vacuum plane waves.

    ``E = E0 + sum_m a_m e_m cos(k_m.x - |k_m| t + phi_m)`` and
    ``B = B0 + sum_m k_hat_m x (E - E0)_m``.  Every term solves the vacuum
    Maxwell equations.

    Parameters carry a leading batch axis of length ``F``.  With ``F == 1``
    positions of any shape ``(..., 3)`` are accepted; with ``F > 1`` the
    positions must be shaped ``(F, ..., 3)`` and member ``f`` of the batch is
    evaluated on ``x[f]``.
    """

    def __init__(self, E0, B0, k, pol, amp, phase):
        self.E0 = np.atleast_2d(np.asarray(E0, dtype=float))
        self.B0 = np.atleast_2d(np.asarray(B0, dtype=float))
        self.k = np.asarray(k, dtype=float).reshape(self.E0.shape[0], -1, 3)
        self.pol = np.asarray(pol, dtype=float).reshape(self.k.shape)
        self.amp = np.asarray(amp, dtype=float).reshape(self.k.shape[:2])
        self.phase = np.asarray(phase, dtype=float).reshape(self.k.shape[:2])
        self.omega = np.linalg.norm(self.k, axis=-1)
        safe = np.where(self.omega > 0, self.omega, 1.0)
        self.bpol = np.cross(self.k / safe[..., None], self.pol)
        self._ampEB = np.concatenate([self.pol, self.bpol], axis=-1) * self.amp[..., None]

    @property
    def batch(self):
        return self.E0.shape[0]

    def _flatten(self, x):
        x = np.asarray(x, dtype=float)
        if self.batch == 1:
            return x.reshape(1, -1, 3), x.shape
        if x.shape[0] != self.batch:
            raise ValueError(f"batched field expects leading axis {self.batch}")
        return x.reshape(self.batch, -1, 3), x.shape

    def _phase(self, xf, t):
        k = self.k[:, None, :, :]
        ph = (xf[..., 0, None] * k[..., 0] + xf[..., 1, None] * k[..., 1]
              + xf[..., 2, None] * k[..., 2])
        ph += (self.phase - self.omega * t)[:, None, :]
        return ph

    def __call__(self, x, t):
        xf, shape = self._flatten(x)
        if self.k.shape[1] == 0:
            E = np.broadcast_to(self.E0[:, None, :], xf.shape)
            B = np.broadcast_to(self.B0[:, None, :], xf.shape)
            return FieldSample(E.reshape(shape), B.reshape(shape))
        c = np.cos(self._phase(xf, t))
        EB = np.empty(xf.shape[:2] + (6,))
        EB[..., :3] = self.E0[:, None, :]
        EB[..., 3:] = self.B0[:, None, :]
        for m in range(self.k.shape[1]):
            EB += c[..., m, None] * self._ampEB[:, None, m, :]
        return FieldSample(EB[..., :3].reshape(shape), EB[..., 3:].reshape(shape))

    def gradient(self, x, t):
        """Spatial Jacobians ``(dE_i/dx_j, dB_i/dx_j)``, each ``(..., 3, 3)``."""
        xf, shape = self._flatten(x)
        s = -np.sin(self._phase(xf, t)) * self.amp[:, None, :]
        dE = np.einsum("fnm,fmi,fmj->fnij", s, self.pol, self.k)
        dB = np.einsum("fnm,fmi,fmj->fnij", s, self.bpol, self.k)
        return dE.reshape(shape + (3,)), dB.reshape(shape + (3,))

    def time_derivative(self, x, t):
        xf, shape = self._flatten(x)
        s = np.sin(self._phase(xf, t)) * (self.amp * self.omega)[:, None, :]
        dE = np.einsum("fnm,fmj->fnj", s, self.pol)
        dB = np.einsum("fnm,fmj->fnj", s, self.bpol)
        return dE.reshape(shape), dB.reshape(shape)

    @classmethod
    def stack(cls, members):
        """Concatenate single fields with equal mode counts into one batch."""
        cat = lambda name: np.concatenate([getattr(m, name) for m in members])  # noqa: E731
        return cls(cat("E0"), cat("B0"), cat("k"), cat("pol"), cat("amp"), cat("phase"))


def uniform_B(B=(0.0, 0.0, 1.0)):
    return PlaneWaveSum(np.zeros(3), B, np.zeros((0, 3)), np.zeros((0, 3)), [], [])


def uniform_E(E=(1.0, 0.0, 0.0)):
    return PlaneWaveSum(E, np.zeros(3), np.zeros((0, 3)), np.zeros((0, 3)), [], [])


def plane_wave(amplitude=1.0, k=(0.0, 0.0, 1.0), polarization=(1.0, 0.0, 0.0), phase=0.0):
    k = np.asarray(k, dtype=float)
    pol = np.asarray(polarization, dtype=float)
    k_hat = k / np.linalg.norm(k)
    pol = pol - np.dot(pol, k_hat) * k_hat
    pol /= np.linalg.norm(pol)
    return PlaneWaveSum(np.zeros(3), np.zeros(3), k[None], pol[None], [amplitude], [phase])


def random_fourier(seed, n_modes=4, amplitude=0.4, background=2.0, k_max=2.0):
    """Seeded random superposition of vacuum plane waves over a uniform background.

    The background magnetic field has magnitude ``background`` and the wave
    amplitudes are below ``amplitude``; when ``background > n_modes *
    amplitude`` the field strength ``K`` is bounded away from zero.
    """
    rng = np.random.default_rng(seed)
    B0 = background * _random_unit(rng, ())
    E0 = rng.uniform(0.0, background) * _random_unit(rng, ())
    k_hat = _random_unit(rng, (n_modes,))
    k = k_hat * rng.uniform(0.25 * k_max, k_max, size=(n_modes, 1))
    pol = _perpendicular_unit(k_hat, rng)
    amp = rng.uniform(0.0, amplitude, size=n_modes)
    phase = rng.uniform(0.0, 2 * np.pi, size=n_modes)
    return PlaneWaveSum(E0, B0, k, pol, amp, phase)


def field_battery(seeds, **kwargs):
    """Batch of :func:`random_fourier` fields, evaluated on ``x[f]`` for member ``f``."""
    return PlaneWaveSum.stack([random_fourier(s, **kwargs) for s in seeds])


class GaussianPulse:
    """Linearly polarized Gaussian wave packet travelling along ``direction``.

    ``E = a e exp(-xi^2 / w^2) cos(k0 xi)``, ``B = d x E`` with
    ``xi = d.x - t - xi0``; any profile of ``d.x - t`` solves the vacuum
    equations.
    """

    batch = 1

    def __init__(self, amplitude=1.0, width=1.0, k0=2.0, direction=(0.0, 0.0, 1.0),
                 polarization=(1.0, 0.0, 0.0), offset=0.0):
        d = np.asarray(direction, dtype=float)
        self.d = d / np.linalg.norm(d)
        pol = np.asarray(polarization, dtype=float)
        pol = pol - np.dot(pol, self.d) * self.d
        self.pol = pol / np.linalg.norm(pol)
        self.bpol = np.cross(self.d, self.pol)
        self.amplitude, self.width, self.k0, self.offset = amplitude, width, k0, offset

    def _xi(self, x, t):
        return np.asarray(x, dtype=float) @ self.d - t - self.offset

    def _profile(self, xi):
        env = np.exp(-(xi / self.width) ** 2)
        h = self.amplitude * env * np.cos(self.k0 * xi)
        dh = self.amplitude * env * (
            -2.0 * xi / self.width**2 * np.cos(self.k0 * xi) - self.k0 * np.sin(self.k0 * xi)
        )
        return h, dh

    def __call__(self, x, t):
        h, _ = self._profile(self._xi(x, t))
        return FieldSample(h[..., None] * self.pol, h[..., None] * self.bpol)

    def gradient(self, x, t):
        _, dh = self._profile(self._xi(x, t))
        dE = dh[..., None, None] * np.multiply.outer(self.pol, self.d)
        dB = dh[..., None, None] * np.multiply.outer(self.bpol, self.d)
        return dE, dB

    def time_derivative(self, x, t):
        _, dh = self._profile(self._xi(x, t))
        return -dh[..., None] * self.pol, -dh[..., None] * self.bpol


FIELD_CATALOG = {
    "uniform-B": uniform_B,
    "uniform-E": uniform_E,
    "plane-wave": plane_wave,
    "gaussian-pulse": GaussianPulse,
    "random-fourier": random_fourier,
}


def make_field(kind, **params):
    """Build a prescribed field from the catalog by name."""
    try:
        factory = FIELD_CATALOG[kind]
    except KeyError:
        raise ValueError(f"unknown field kind {kind!r}; choose from {sorted(FIELD_CATALOG)}") from None
    return factory(**params)


def prescribed_field(kind, x, t, **params):
    return make_field(kind, **params)(x, t)


# ---------------------------------------------------------------------------
# 1D3V periodic grid


@dataclass(frozen=True)
class GridSpec:
    L: float
    Nx: int
    dt: float

    def __post_init__(self):
        if self.Nx < 8:
            raise ParameterError(f"Nx={self.Nx} must be at least 8")
        if not (self.L > 0 and self.dt > 0):
            raise ParameterError("L and dt must be positive")
        if self.dt > self.dx:
            raise ParameterError(f"CFL violated: dt={self.dt} > dx={self.dx}")

    @property
    def dx(self):
        return self.L / self.Nx

    @property
    def nodes(self):
        return np.arange(self.Nx) * self.dx

    @property
    def half_nodes(self):
        return (np.arange(self.Nx) + 0.5) * self.dx


@dataclass
class FieldState:
    Ex: np.ndarray
    Ey: np.ndarray
    Ez: np.ndarray
    By: np.ndarray
    Bz: np.ndarray
    Bx: float = 0.0
    time: float = 0.0

    @classmethod
    def zeros(cls, grid, Bx=0.0):
        z = lambda: np.zeros(grid.Nx)  # noqa: E731
        return cls(z(), z(), z(), z(), z(), float(Bx), 0.0)

    def copy(self):
        return replace(self, Ex=self.Ex.copy(), Ey=self.Ey.copy(), Ez=self.Ez.copy(),
                       By=self.By.copy(), Bz=self.Bz.copy())


@dataclass
class SourceArrays:
    rho: np.ndarray
    jx: np.ndarray
    jy: np.ndarray
    jz: np.ndarray


def _cic(x, grid, offset=0.0):
    s = np.asarray(x, dtype=float) / grid.dx - offset
    i = np.floor(s)
    frac = s - i
    i = i.astype(np.int64) % grid.Nx
    return i, (i + 1) % grid.Nx, frac


def _scatter(i0, i1, frac, values, Nx):
    return (np.bincount(i0, weights=values * (1.0 - frac), minlength=Nx)
            + np.bincount(i1, weights=values * frac, minlength=Nx))


def deposit_scalar(x, values, grid):
    """Cloud-in-cell density of per-particle ``values`` on the nodes."""
    i0, i1, frac = _cic(x, grid)
    return _scatter(i0, i1, frac, np.asarray(values, dtype=float), grid.Nx) / grid.dx


def deposit(x, p, weight, grid):
    """Charge and current densities from particles at ``x`` with momenta ``p``.

    ``rho`` sums ``w S(x_i - x_p) / dx`` with the linear shape ``S``; the
    currents use ``w v``.  The total charge ``sum(rho) dx`` equals
    ``sum(w)`` up to rounding.
    """
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float).reshape(-1, 3)
    w = np.asarray(weight, dtype=float)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(p)) and np.all(np.isfinite(w))):
        raise ParameterError("nonfinite particle state passed to deposit")
    i0, i1, frac = _cic(x, grid)
    v = velocity(p)
    comps = [_scatter(i0, i1, frac, w * v[:, a], grid.Nx) / grid.dx for a in range(3)]
    rho = _scatter(i0, i1, frac, w, grid.Nx) / grid.dx
    return SourceArrays(rho, *comps)


def solve_gauss(rho, grid):
    """Zero-mean ``Ex`` on half nodes with ``(Ex[i] - Ex[i-1]) / dx = rho[i] - mean(rho)``."""
    s = np.asarray(rho, dtype=float) - np.mean(rho)
    Ex = grid.dx * np.cumsum(s)
    return Ex - np.mean(Ex)


def gauss_residual(state, rho, grid):
    """Max-norm defect of the discrete Gauss law against the neutralized density."""
    div = (state.Ex - np.roll(state.Ex, 1)) / grid.dx
    return float(np.max(np.abs(div - (rho - np.mean(rho)))))


def _diff_fwd(a, dx):
    # node -> half node
    return (np.roll(a, -1) - a) / dx


def _diff_bwd(a, dx):
    # half node -> node
    return (a - np.roll(a, 1)) / dx


def _kick_B(state, grid, h):
    state.Bz -= h * _diff_fwd(state.Ey, grid.dx)
    state.By += h * _diff_fwd(state.Ez, grid.dx)


def maxwell_step(state, sources, grid):
    """Advance the fields by ``grid.dt``.

    The transverse pairs ``(Ey, Bz)`` and ``(Ez, By)`` use a half kick of
    ``B``, a full step of ``E`` with the current, and a second half kick of
    ``B`` (second order, time reversible).  ``Ex`` is then solved from the
    Gauss law with the new charge density.  Returns a new state.
    """
    new = state.copy()
    dt, dx = grid.dt, grid.dx
    _kick_B(new, grid, 0.5 * dt)
    new.Ey -= dt * (_diff_bwd(new.Bz, dx) + sources.jy)
    new.Ez += dt * (_diff_bwd(new.By, dx) - sources.jz)
    _kick_B(new, grid, 0.5 * dt)
    new.Ex = solve_gauss(sources.rho, grid)
    new.time = state.time + dt
    return new


def field_energy(state, grid):
    """Naive electromagnetic energy ``(1/2) sum(|E|^2 + |B|^2) dx``."""
    total = sum(np.sum(a**2) for a in (state.Ex, state.Ey, state.Ez, state.By, state.Bz))
    return 0.5 * grid.dx * (total + grid.Nx * state.Bx**2)


def discrete_energy(state, grid):
    """Energy exactly conserved by the vacuum transverse update.

    For the kick-step-kick splitting the invariant is
    ``(1/2) dx (|E_t|^2 + |B_t|^2 - (dt^2/4) |D E_t|^2)`` with ``D`` the
    node-to-half-node difference.  ``Ex`` and ``Bx`` are excluded.
    """
    dx, dt = grid.dx, grid.dt
    e2 = np.sum(state.Ey**2) + np.sum(state.Ez**2)
    b2 = np.sum(state.By**2) + np.sum(state.Bz**2)
    de2 = np.sum(_diff_fwd(state.Ey, dx) ** 2) + np.sum(_diff_fwd(state.Ez, dx) ** 2)
    return 0.5 * dx * (e2 + b2 - 0.25 * dt**2 * de2)


def _interp(values, i0, i1, frac):
    return values[i0] * (1.0 - frac) + values[i1] * frac


def sample_field(state, x, grid):
    """Linear interpolation of the grid fields to positions ``x``.

    Node quantities use the deposition shape directly; half-node quantities
    use the same shape shifted by half a cell.
    """
    x = np.asarray(x, dtype=float)
    n0, n1, nf = _cic(x, grid)
    h0, h1, hf = _cic(x, grid, offset=0.5)
    E = np.stack([_interp(state.Ex, h0, h1, hf),
                  _interp(state.Ey, n0, n1, nf),
                  _interp(state.Ez, n0, n1, nf)], axis=-1)
    B = np.stack([np.full(x.shape, state.Bx),
                  _interp(state.By, h0, h1, hf),
                  _interp(state.Bz, h0, h1, hf)], axis=-1)
    return FieldSample(E, B)


def continuity_residual(rho_old, rho_new, jx_mid, grid):
    """Node-wise ``(rho_new - rho_old)/dt + (jx[i+1] - jx[i-1]) / (2 dx)``."""
    dxj = (np.roll(jx_mid, -1) - np.roll(jx_mid, 1)) / (2.0 * grid.dx)
    return (np.asarray(rho_new) - np.asarray(rho_old)) / grid.dt + dxj


def write_field_csv(path, state, grid):
    """Field snapshot at the nodes; half-node arrays are averaged onto nodes."""
    to_nodes = lambda a: 0.5 * (a + np.roll(a, 1))  # noqa: E731
    cols = [to_nodes(state.Ex), state.Ey, state.Ez, np.full(grid.Nx, state.Bx),
            to_nodes(state.By), to_nodes(state.Bz)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell", "x", "Ex", "Ey", "Ez", "Bx", "By", "Bz"])
        for i, xi in enumerate(grid.nodes):
            w.writerow([i, repr(float(xi))] + [repr(float(c[i])) for c in cols])
