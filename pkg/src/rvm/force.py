"""Lorentz force, the damped radiation reaction force and its divergence.

The radiation reaction force used throughout the package is

    F_R = -chi(|p|) E - M p K,        K = sqrt(|E|^2 + |B|^2),

with ``chi`` a smooth cutoff equal to one below ``R0`` and zero above
``R1 = R0 + 1``.  ``E`` is a field of ``(x, t)`` only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .kinematics import cross, dot, gamma, norm, velocity


def min_admissible_A(M, R0):
    """Smallest decay rate ``A`` for which the sign condition closes."""
    return (3.0 + 2.0 * R0) / ((M - 2.0) * R0**2)


@dataclass(frozen=True)
class ForceParams:
    """Constants of the radiation reaction force.

    ``M > 2`` and ``R0 >= 1/2`` are always enforced.  The lower bound on
    ``A`` is enforced unless ``enforce_admissibility`` is False, which is
    only meant for counterexample runs.
    """

    M: float = 3.0
    R0: float = 1.0
    A: float = 5.0
    enforce_admissibility: bool = True

    def __post_init__(self):
        for name in ("M", "R0", "A"):
            if not np.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")
        if not self.M > 2:
            raise ParameterError(f"M={self.M} violates M>2")
        if self.R0 < 0.5:
            raise ParameterError(f"R0={self.R0} violates R0>=1/2")
        if self.enforce_admissibility and self.A < self.A_min:
            raise ParameterError(
                f"A={self.A} is below the minimal admissible A={self.A_min:g} "
                f"for M={self.M}, R0={self.R0}"
            )

    @property
    def R1(self):
        return self.R0 + 1.0

    @property
    def A_min(self):
        return min_admissible_A(self.M, self.R0)

    @property
    def admissible(self):
        return self.A >= self.A_min


@dataclass(frozen=True)
class FieldSample:
    """Electric and magnetic field values, shape ``(..., 3)`` each."""

    E: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "E", np.asarray(self.E, dtype=float))
        object.__setattr__(self, "B", np.asarray(self.B, dtype=float))

    @property
    def K(self):
        return np.sqrt(dot(self.E, self.E) + dot(self.B, self.B))


@dataclass(frozen=True)
class AltForceParams:
    h: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.h) and self.h > 0):
            raise ParameterError("reaction intensity h must be finite and positive")


def _check_radius(r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ParameterError("cutoff argument must be nonnegative")
    return r


def one_minus_chi(r, R0=1.0, R1=None):
    """``1 - chi(r)`` evaluated without cancellation (exactly 0 below ``R0``)."""
    r = _check_radius(r)
    R1 = R0 + 1.0 if R1 is None else R1
    u = np.clip((r - R0) / (R1 - R0), 0.0, 1.0)
    return u**3 * (10.0 - 15.0 * u + 6.0 * u**2)


def chi(r, R0=1.0, R1=None):
    """Quintic smoothstep cutoff: 1 on ``[0, R0]``, 0 on ``[R1, inf)``."""
    return 1.0 - one_minus_chi(r, R0, R1)


def chi_prime(r, R0=1.0, R1=None):
    r = _check_radius(r)
    R1 = R0 + 1.0 if R1 is None else R1
    u = np.clip((r - R0) / (R1 - R0), 0.0, 1.0)
    return -30.0 * u**2 * (1.0 - u) ** 2 / (R1 - R0)


def lorentz_force(fs, p):
    """``E + v x B``."""
    return fs.E + cross(velocity(p), fs.B)


def radiation_force(fs, p, params):
    p = np.asarray(p, dtype=float)
    c = chi(norm(p), params.R0, params.R1)
    return -c[..., None] * fs.E - params.M * p * fs.K[..., None]


def total_force(fs, p, params):
    """Lorentz plus radiation reaction force, ``(1 - chi) E + v x B - M K p``.

    The electric terms are combined before evaluation: below ``R0`` they
    cancel exactly instead of leaving rounding noise of size ``eps |E|``,
    which would otherwise swamp the damping at very small ``|p|``.  The
    result vanishes identically at ``p = 0``.
    """
    p = np.asarray(p, dtype=float)
    omc = one_minus_chi(norm(p), params.R0, params.R1)
    return omc[..., None] * fs.E + cross(velocity(p), fs.B) - params.M * p * fs.K[..., None]


def div_p_force(fs, p, params):
    """Momentum divergence ``-3 M K - chi'(|p|) E.p_hat`` (exact, closed form)."""
    p = np.asarray(p, dtype=float)
    r = norm(p)
    e_radial = dot(fs.E, p) / np.where(r > 0, r, 1.0)
    return -3.0 * params.M * fs.K - chi_prime(r, params.R0, params.R1) * e_radial


def condA_residual(fs, p, params, A=None):
    """``(3/|p| + A) F.p_hat - div_p F``; nonpositive for admissible ``A``.

    ``A`` defaults to ``params.A``.  Zero momentum is rejected since the
    ``3/|p|`` weight is singular there.
    """
    A = params.A if A is None else A
    r = norm(p)
    if np.any(r == 0):
        raise ParameterError("sign-condition residual is undefined at p = 0")
    F = total_force(fs, p, params)
    radial = dot(F, np.asarray(p, dtype=float)) / r
    return (3.0 / r + A) * radial - div_p_force(fs, p, params)


def alt_force(kind, fs, p, h):
    """Unmodified reaction forces, ``kind`` in ``{"LL", "IC"}``.

    LL:  -h v gamma^2 (|E + v x B|^2 - (v.E)^2)
    IC:  -h v gamma^2 K^2
    """
    hval = h.h if isinstance(h, AltForceParams) else float(h)
    v = velocity(p)
    g2 = gamma(p) ** 2
    if kind == "LL":
        FL = lorentz_force(fs, p)
        mag = dot(FL, FL) - dot(v, fs.E) ** 2
    elif kind == "IC":
        mag = fs.K**2
    else:
        raise ValueError(f"unknown reaction force kind {kind!r}")
    return -hval * v * (g2 * mag)[..., None]
