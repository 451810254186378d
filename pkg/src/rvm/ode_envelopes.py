"""Scalar ODE lemmas: the running-sup envelope, the doubly logarithmic system
and its double exponential envelope, and a contrasting blow-up ODE.

The system

    W' = C ((log W) W + (log W)(log Z) Z),     Z' = C ((log Z) Z + W)

is integrated as an equality (the extremal trajectory) in the variables
``a = log W`` and ``b = log Z``:

    a' = C (a + a b exp(b - a)),               b' = C (b + exp(a - b)),

so that values far beyond the double range stay representable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

LOG_DBL_MAX = math.log(np.finfo(float).max)


@dataclass(frozen=True)
class LogSysParams:
    C: float = 1.0
    W0: float = math.e
    Z0: float = math.e
    t_end: float = 3.0

    def __post_init__(self):
        if not self.C >= 0:
            raise ParameterError("C must be nonnegative")
        if not (self.W0 > 0 and self.Z0 > 0):
            raise ParameterError("W0 and Z0 must be positive")
        # tolerate the rounding of math.e
        if min(math.log(self.W0), math.log(self.Z0)) < 1.0 - 1e-12:
            raise ParameterError("min(log W0, log Z0) >= 1 is required")
        if not self.t_end > 0:
            raise ParameterError("t_end must be positive")

    @property
    def Wbar0(self):
        return self.W0 + self.Z0 * math.log(self.Z0)


@dataclass
class WZSeries:
    """Samples of the log-space solution; ``W``/``Z`` are ``inf`` past the double range."""

    t: np.ndarray
    log_W: np.ndarray
    log_Z: np.ndarray
    overflow_time: float | None = None

    @property
    def W(self):
        with np.errstate(over="ignore"):
            return np.exp(self.log_W)

    @property
    def Z(self):
        with np.errstate(over="ignore"):
            return np.exp(self.log_Z)

    @property
    def log_sum(self):
        """``log(W + Z)`` without overflow."""
        return np.logaddexp(self.log_W, self.log_Z)

    @property
    def log_Wbar(self):
        """``log(W + Z log Z)``."""
        return np.logaddexp(self.log_W, self.log_Z + np.log(self.log_Z))


def _wz_rate(C, a, b):
    return C * (a + a * b * math.exp(b - a)), C * (b + math.exp(a - b))


def _wz_stiffness(C, a, b):
    # crude bound on the Jacobian norm of the log-space system
    e1, e2 = math.exp(b - a), math.exp(a - b)
    return C * (1.0 + b * e1 * (1.0 + a) + a * e1 * (1.0 + b) + e2 + 1.0)


def integrate_WZ(params, dt, max_hlambda=0.2):
    """Classical RK4 on ``(log W, log Z)`` sampled every ``dt`` up to ``params.t_end``.

    Each output step is split into equal substeps so that the step size
    times a Jacobian bound stays below ``max_hlambda``; where the system is
    not stiff this is plain fixed-step RK4 of size ``dt``.
    """
    if not dt > 0:
        raise ParameterError("dt must be positive")
    n = max(1, int(math.ceil(params.t_end / dt - 1e-9)))
    C = params.C
    a, b = math.log(params.W0), math.log(params.Z0)
    t = np.arange(n + 1) * dt
    t[-1] = min(t[-1], n * dt)
    la, lb = np.empty(n + 1), np.empty(n + 1)
    la[0], lb[0] = a, b
    overflow = None
    for k in range(n):
        m = max(1, int(math.ceil(dt * _wz_stiffness(C, a, b) / max_hlambda)))
        h = dt / m
        for _ in range(m):
            k1 = _wz_rate(C, a, b)
            k2 = _wz_rate(C, a + 0.5 * h * k1[0], b + 0.5 * h * k1[1])
            k3 = _wz_rate(C, a + 0.5 * h * k2[0], b + 0.5 * h * k2[1])
            k4 = _wz_rate(C, a + h * k3[0], b + h * k3[1])
            a += h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            b += h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        la[k + 1], lb[k + 1] = a, b
        if overflow is None and max(a, b) > LOG_DBL_MAX:
            overflow = float(t[k + 1])
    return WZSeries(t, la, lb, overflow)


def log_double_exp_envelope(params, t, log_factor=1.0):
    """Log of the closed-form solution of ``y' = C (k y + 1)``, ``y = log Wbar``.

    With ``k = log_factor``:  ``log Wbar(t) = ((1 + k log Wbar0) e^{k C t} - 1) / k``.
    ``k = 1`` is the envelope ``exp((1 + log Wbar0) e^{Ct} - 1)``; ``k = 2``
    accounts for both logarithmic terms of the summed system.
    """
    k = float(log_factor)
    y0 = math.log(params.Wbar0)
    t = np.asarray(t, dtype=float)
    return ((1.0 + k * y0) * np.exp(k * params.C * t) - 1.0) / k


def double_exp_envelope(params, t, log_factor=1.0):
    with np.errstate(over="ignore"):
        return np.exp(log_double_exp_envelope(params, t, log_factor))


def integrate_Weq(params, dt, log_factor=1.0):
    """RK4 on ``y' = C (k y + 1)`` (log form of the comparison equation)."""
    n = max(1, int(math.ceil(params.t_end / dt - 1e-9)))
    C, k = params.C, float(log_factor)
    y = math.log(params.Wbar0)
    out = np.empty(n + 1)
    out[0] = y
    f = lambda y: C * (k * y + 1.0)  # noqa: E731
    for i in range(n):
        k1 = f(y)
        k2 = f(y + 0.5 * dt * k1)
        k3 = f(y + 0.5 * dt * k2)
        k4 = f(y + dt * k3)
        y += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i + 1] = y
    return np.arange(n + 1) * dt, out


def envelope_margin(series, params, log_factor=1.0, quantity="sum"):
    """Min over samples of ``log envelope - log q``; negative means the envelope is crossed.

    ``quantity`` is ``"sum"`` for ``W + Z`` or ``"wbar"`` for ``W + Z log Z``.
    Returns ``(margin, time_of_min)``.
    """
    q = series.log_sum if quantity == "sum" else series.log_Wbar
    diff = log_double_exp_envelope(params, series.t, log_factor) - q
    i = int(np.argmin(diff))
    return float(diff[i]), float(series.t[i])


@dataclass
class BlowupResult:
    t: np.ndarray
    log_Y: np.ndarray
    blowup_time: float


def blowup_ode(Y0=None, dt=1e-3, log_Y0=None, log_ceiling=1e8):
    """Integrate ``Y' = Y (log Y)^2`` as ``u' = u^2`` with ``u = log Y``.

    Steps are ``min(dt, 0.01/u)`` (classical RK4) until ``u`` exceeds
    ``log_ceiling``; the reach time estimates the blow-up time.  Pass
    ``log_Y0`` instead of ``Y0`` for exact logarithms.  Requires ``log Y0 > 0``.
    """
    u = math.log(Y0) if log_Y0 is None else float(log_Y0)
    if not u > 0:
        raise ParameterError("blow-up ODE needs log Y0 > 0")
    t = 0.0
    ts, us = [t], [u]
    f = lambda u: u * u  # noqa: E731
    while u < log_ceiling:
        h = min(dt, 0.01 / u)
        k1 = f(u)
        k2 = f(u + 0.5 * h * k1)
        k3 = f(u + 0.5 * h * k2)
        k4 = f(u + h * k3)
        u += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
        ts.append(t)
        us.append(u)
    return BlowupResult(np.array(ts), np.array(us), t)


def sup_envelope(g):
    """Running maximum ``G(t_k) = max_{j <= k} g(t_j)`` along the first axis."""
    return np.maximum.accumulate(np.asarray(g, dtype=float), axis=0)


def lipschitz_constant(g, dt):
    """Discrete Lipschitz constant ``max |g_{k+1} - g_k| / dt``."""
    g = np.asarray(g, dtype=float)
    return float(np.max(np.abs(np.diff(g, axis=0)))) / dt
