"""Moments, moment fluxes, their a priori bounds and the density split.

For a particle set with weights ``w`` the cell profiles are

    m_n(x)  = sum_i w_i [p_i]^n S(x - x_i) / dx,
    vm_n(x) = sum_i w_i |v_i| [p_i]^n S(x - x_i) / dx,

with the cloud-in-cell shape ``S`` used for the charge deposit, so that
``m_0`` is bitwise the deposited charge density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.spatial import cKDTree

from .errors import ConvergenceError, ParameterError
from .fields import _cic, _scatter
from .force import min_admissible_A
from .kinematics import gamma, norm, speed

MAX_ORDER = 8


@dataclass(frozen=True)
class MomentProfile:
    n: int
    values: np.ndarray
    kind: str = "moment"  # or "flux"


@dataclass(frozen=True)
class EnvelopeParams:
    """Constants of the pointwise envelope ``f <= C0 |p|^-3 exp(-A|p|)``."""

    C0: float = 1.0
    A: float = 5.0

    def __post_init__(self):
        if not (self.C0 > 0 and self.A > 0):
            raise ParameterError("C0 and A must be positive")

    def check_admissible(self, params):
        if self.A < min_admissible_A(params.M, params.R0):
            raise ParameterError(
                f"A={self.A} is below the minimal admissible A="
                f"{min_admissible_A(params.M, params.R0):g}")


def _check_order(n):
    if int(n) != n or n < 0:
        raise ParameterError(f"moment order must be a nonnegative integer, got {n}")
    if n > MAX_ORDER:
        raise ParameterError(f"moment order {n} exceeds the supported maximum {MAX_ORDER}")
    return int(n)


def _weighted_profile(particles, grid, values):
    i0, i1, frac = _cic(particles.x, grid)
    return _scatter(i0, i1, frac, values, grid.Nx) / grid.dx


def moment_profile(particles, grid, n):
    n = _check_order(n)
    w = particles.weight
    vals = w if n == 0 else w * gamma(particles.p) ** n
    return MomentProfile(n, _weighted_profile(particles, grid, vals), "moment")


def flux_moment_profile(particles, grid, n):
    n = _check_order(n)
    vals = particles.weight * speed(particles.p) * gamma(particles.p) ** n
    return MomentProfile(n, _weighted_profile(particles, grid, vals), "flux")


def envelope_flux_bound(n, env, epsrel=1e-10):
    """``4 pi C0 int_0^inf [r]^(n-1) exp(-A r) dr``, the flux bound implied by the envelope.

    Evaluated by adaptive quadrature on the half line;
    :class:`ConvergenceError` is raised when the error estimate exceeds
    ``epsrel``.
    """
    if n < 0:
        raise ParameterError("n must be nonnegative")
    if not epsrel >= 50 * np.finfo(float).eps:
        raise ParameterError(f"epsrel={epsrel:g} is below what the quadrature can deliver")
    val, err = integrate.quad(lambda r: (1.0 + r * r) ** (0.5 * (n - 1)) * math.exp(-env.A * r),
                              0.0, np.inf, epsabs=0.0, epsrel=epsrel, limit=200)
    if not err <= epsrel * abs(val) * 10:
        raise ConvergenceError(f"flux bound quadrature did not converge (err={err:.3g})",
                               levels=(val, err))
    return 4.0 * math.pi * env.C0 * val


def estimate_G2(particles, grid, k=4, max_per_cell=4000):
    """Finite-difference estimate of ``sup |grad_p f| + 2`` from particle data.

    Within each cell, every particle is compared with its ``k`` nearest
    neighbours in momentum space and the largest difference quotient
    ``|f_i - f_j| / |p_i - p_j|`` is kept.  The spatial variation of ``f``
    across a cell leaks into the quotient, so this is an estimator and
    not a bound.  Cells with more than ``max_per_cell`` particles use an
    evenly strided subset.
    """
    f = np.exp(particles.log_f)
    ok = np.isfinite(particles.log_f) & (particles.weight > 0)
    cell = np.floor(particles.x / grid.dx).astype(np.int64) % grid.Nx
    best = 0.0
    for c in range(grid.Nx):
        idx = np.flatnonzero((cell == c) & ok)
        if idx.size > max_per_cell:
            idx = idx[:: int(math.ceil(idx.size / max_per_cell))]
        if idx.size < 2:
            continue
        pts = particles.p[idx]
        kk = min(k + 1, idx.size)
        dist, nb = cKDTree(pts).query(pts, k=kk)
        dist, nb = dist[:, 1:], nb[:, 1:]
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.abs(f[idx][:, None] - f[idx][nb]) / dist
        q = q[np.isfinite(q)]
        if q.size:
            best = max(best, float(np.max(q)))
    return best + 2.0


@dataclass(frozen=True)
class DensityReport:
    """Per-cell data of the density split ``rho = near + tail``.

    ``near`` and ``tail`` are the measured charge inside/outside the ball
    ``|p| < R``; ``near_bound = pi G2 R^4`` and
    ``tail_bound = 4 pi C0 (log(1/R) + 1/A)`` are their a priori bounds.
    """

    R: float
    G2: float
    rho: np.ndarray
    near: np.ndarray
    tail: np.ndarray
    near_bound: float
    tail_bound: float

    @property
    def bound(self):
        return self.near_bound + self.tail_bound

    @property
    def ratio(self):
        return float(np.max(self.rho) / self.bound) if self.rho.size else 0.0

    @property
    def ok(self):
        return bool(np.all(self.rho <= self.bound))


def density_log_diagnostic(particles, grid, env, G2):
    """Split the density at ``R = G2^(-1/4)`` and compare with the logarithmic bound."""
    if not G2 >= 2:
        raise ParameterError("G2 must be at least 2")
    R = G2 ** -0.25
    r = norm(particles.p)
    w = particles.weight
    rho = _weighted_profile(particles, grid, w)
    near = _weighted_profile(particles, grid, np.where(r < R, w, 0.0))
    tail = _weighted_profile(particles, grid, np.where(r < R, 0.0, w))
    return DensityReport(R=R, G2=float(G2), rho=rho, near=near, tail=tail,
                         near_bound=math.pi * G2 * R**4,
                         tail_bound=4.0 * math.pi * env.C0 * (math.log(1.0 / R) + 1.0 / env.A))


def higher_moment_slack(particles, grid, n):
    """``max(m_n - (sqrt2 vm_n + sqrt2^n rho))`` over cells; nonpositive up to rounding."""
    m = moment_profile(particles, grid, n).values
    vm = flux_moment_profile(particles, grid, n).values
    rho = moment_profile(particles, grid, 0).values
    return float(np.max(m - (math.sqrt(2.0) * vm + math.sqrt(2.0) ** n * rho)))
