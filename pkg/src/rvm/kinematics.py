"""Relativistic momentum/velocity algebra (unit mass, c = 1).

All functions act on the last axis of ``p`` and broadcast over the leading
axes, so a single momentum ``(3,)`` and a batch ``(N, 3)`` are handled alike.
"""

from __future__ import annotations

import numpy as np


def dot(a, b):
    """Dot product over the last (length-3) axis."""
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]


def cross(a, b):
    out = np.empty(np.broadcast_shapes(a.shape, b.shape))
    out[..., 0] = a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1]
    out[..., 1] = a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2]
    out[..., 2] = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    return out


def norm(p):
    """Euclidean norm over the last axis, safe for components up to ~1e300."""
    p = np.asarray(p, dtype=float)
    with np.errstate(over="ignore"):
        r = np.sqrt(dot(p, p))
    if np.isfinite(r).all():
        return r
    # rescale only when squaring overflowed
    scale = np.max(np.abs(p), axis=-1)
    safe = np.where(scale > 0, scale, 1.0)
    q = p / safe[..., None]
    return scale * np.sqrt(dot(q, q))


def gamma(p):
    """Lorentz factor ``sqrt(1 + |p|^2)``."""
    return np.hypot(1.0, norm(p))


def velocity(p):
    """Velocity ``p / gamma(p)``; its magnitude is strictly below one."""
    p = np.asarray(p, dtype=float)
    return p / gamma(p)[..., None]


def speed(p):
    return norm(p) / gamma(p)


def one_minus_speed(p):
    """``1 - |v|`` without cancellation: ``1 / (gamma (gamma + |p|))``."""
    r = norm(p)
    g = np.hypot(1.0, r)
    return 1.0 / (g * (g + r))


def dv_dp(p):
    """Jacobian ``d v_k / d p_i = (I - v v^T) / gamma``.

    Returns an array of shape ``p.shape + (3,)``; the matrix is symmetric.
    """
    p = np.asarray(p, dtype=float)
    g = gamma(p)
    v = p / g[..., None]
    eye = np.broadcast_to(np.eye(3), v.shape + (3,))
    return (eye - v[..., :, None] * v[..., None, :]) / g[..., None, None]


def unit(p):
    """Direction ``p / |p|``; the zero vector maps to zero."""
    p = np.asarray(p, dtype=float)
    r = norm(p)
    safe = np.where(r > 0, r, 1.0)
    return p / safe[..., None]
