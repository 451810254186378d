"""Compiled RK4 characteristic kernel for plane-wave-sum fields.

Same update and monitor definitions as the numpy path in
``characteristics``; the two are cross-checked in the test suite.
"""

from __future__ import annotations

import math

import numba
import numpy as np

N_MONITOR = 5  # dr, dr_where_K_positive, denvelope, light_cone, log_f_excess


@numba.njit(cache=True, error_model="numpy")
def _field(f, x0, x1, x2, t, E0, B0, k, omega, phase, ampEB, out):
    for c in range(3):
        out[c] = E0[f, c]
        out[3 + c] = B0[f, c]
    for m in range(k.shape[1]):
        ph = x0 * k[f, m, 0] + x1 * k[f, m, 1] + x2 * k[f, m, 2] + (phase[f, m] - omega[f, m] * t)
        cm = math.cos(ph)
        for c in range(6):
            out[c] += cm * ampEB[f, m, c]


@numba.njit(cache=True, error_model="numpy")
def _chi_u(r, R0, R1):
    u = (r - R0) / (R1 - R0)
    if u < 0.0:
        u = 0.0
    elif u > 1.0:
        u = 1.0
    return u


@numba.njit(cache=True, error_model="numpy")
def _rates(fb, p0, p1, p2, M, R0, R1, out):
    """Velocity, force and -div_p F from field buffer ``fb`` (E, B)."""
    r2 = p0 * p0 + p1 * p1 + p2 * p2
    r = math.sqrt(r2)
    ig = 1.0 / math.sqrt(1.0 + r2)
    v0, v1, v2 = p0 * ig, p1 * ig, p2 * ig
    E0, E1, E2, B0, B1, B2 = fb[0], fb[1], fb[2], fb[3], fb[4], fb[5]
    K = math.sqrt(E0 * E0 + E1 * E1 + E2 * E2 + B0 * B0 + B1 * B1 + B2 * B2)
    if r <= R0:
        omc, dchi = 0.0, 0.0
    else:
        u = _chi_u(r, R0, R1)
        omc = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
        dchi = -30.0 * u * u * (1.0 - u) * (1.0 - u) / (R1 - R0)
    out[0], out[1], out[2] = v0, v1, v2
    out[3] = omc * E0 + (v1 * B2 - v2 * B1) - M * p0 * K
    out[4] = omc * E1 + (v2 * B0 - v0 * B2) - M * p1 * K
    out[5] = omc * E2 + (v0 * B1 - v1 * B0) - M * p2 * K
    out[6] = 3.0 * M * K
    if dchi != 0.0:
        out[6] += dchi * (E0 * p0 + E1 * p1 + E2 * p2) / r
    return K, r, dchi


@numba.njit(cache=True, error_model="numpy")
def trace_kernel(x, p, lf, t0, fidx, E0, B0, k, omega, phase, ampEB,
                 M, R0, R1, A, dt, nsteps, record_every, rec_x, rec_p, rec_lf, rec_K,
                 monitor):
    n = x.shape[0]
    fb = np.empty(6)
    k1 = np.empty(7)
    k2 = np.empty(7)
    k3 = np.empty(7)
    k4 = np.empty(7)
    h = 0.5 * dt
    w = dt / 6.0
    for i in range(n):
        f = fidx[i]
        X0, X1, X2 = x[i, 0], x[i, 1], x[i, 2]
        P0, P1, P2 = p[i, 0], p[i, 1], p[i, 2]
        L = lf[i]
        a0, a1, a2 = X0, X1, X2
        t = t0
        for c in range(N_MONITOR):
            monitor[i, c] = -np.inf
        _field(f, X0, X1, X2, t, E0, B0, k, omega, phase, ampEB, fb)
        K, r, dchi = _rates(fb, P0, P1, P2, M, R0, R1, k1)
        rec_x[0, i, 0], rec_x[0, i, 1], rec_x[0, i, 2] = X0, X1, X2
        rec_p[0, i, 0], rec_p[0, i, 1], rec_p[0, i, 2] = P0, P1, P2
        rec_lf[0, i] = L
        rec_K[0, i] = K
        env = A * r + 3.0 * math.log(r) + L if r > 0.0 else -np.inf
        growth = (3.0 * M + abs(dchi)) * K
        slot = 1
        for s in range(1, nsteps + 1):
            _field(f, X0 + h * k1[0], X1 + h * k1[1], X2 + h * k1[2], t + h,
                   E0, B0, k, omega, phase, ampEB, fb)
            _rates(fb, P0 + h * k1[3], P1 + h * k1[4], P2 + h * k1[5], M, R0, R1, k2)
            _field(f, X0 + h * k2[0], X1 + h * k2[1], X2 + h * k2[2], t + h,
                   E0, B0, k, omega, phase, ampEB, fb)
            _rates(fb, P0 + h * k2[3], P1 + h * k2[4], P2 + h * k2[5], M, R0, R1, k3)
            _field(f, X0 + dt * k3[0], X1 + dt * k3[1], X2 + dt * k3[2], t + dt,
                   E0, B0, k, omega, phase, ampEB, fb)
            _rates(fb, P0 + dt * k3[3], P1 + dt * k3[4], P2 + dt * k3[5], M, R0, R1, k4)
            X0 += w * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
            X1 += w * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
            X2 += w * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
            P0 += w * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3])
            P1 += w * (k1[4] + 2.0 * k2[4] + 2.0 * k3[4] + k4[4])
            P2 += w * (k1[5] + 2.0 * k2[5] + 2.0 * k3[5] + k4[5])
            Lnew = L + w * (k1[6] + 2.0 * k2[6] + 2.0 * k3[6] + k4[6])
            t = t0 + s * dt
            if not (math.isfinite(X0) and math.isfinite(X1) and math.isfinite(X2)
                    and math.isfinite(P0) and math.isfinite(P1) and math.isfinite(P2)
                    and math.isfinite(Lnew)):
                return i, t
            # the next step's first stage doubles as the monitor sample
            _field(f, X0, X1, X2, t, E0, B0, k, omega, phase, ampEB, fb)
            Knew, rnew, dchinew = _rates(fb, P0, P1, P2, M, R0, R1, k1)
            dr = rnew - r
            if dr > monitor[i, 0]:
                monitor[i, 0] = dr
            if K > 0.0 and Knew > 0.0 and dr > monitor[i, 1]:
                monitor[i, 1] = dr
            envnew = A * rnew + 3.0 * math.log(rnew) + Lnew if rnew > 0.0 else -np.inf
            if r > 0.0 and rnew > 0.0 and envnew - env > monitor[i, 2]:
                monitor[i, 2] = envnew - env
            d0, d1, d2 = X0 - a0, X1 - a1, X2 - a2
            cone = math.sqrt(d0 * d0 + d1 * d1 + d2 * d2) / (t - t0)
            if cone > monitor[i, 3]:
                monitor[i, 3] = cone
            growthnew = (3.0 * M + abs(dchinew)) * Knew
            excess = (Lnew - L) - 0.5 * dt * (growth + growthnew)
            if excess > monitor[i, 4]:
                monitor[i, 4] = excess
            L, K, r, env, growth = Lnew, Knew, rnew, envnew, growthnew
            if s % record_every == 0 or s == nsteps:
                rec_x[slot, i, 0], rec_x[slot, i, 1], rec_x[slot, i, 2] = X0, X1, X2
                rec_p[slot, i, 0], rec_p[slot, i, 1], rec_p[slot, i, 2] = P0, P1, P2
                rec_lf[slot, i] = L
                rec_K[slot, i] = K
                slot += 1
    return -1, 0.0


@numba.njit(cache=True, error_model="numpy")
def _grid_sample(x, dx, Nx, Ex, Ey, Ez, Bx, By, Bz, fb):
    s = x / dx
    i = math.floor(s)
    fn = s - i
    n0 = int(i) % Nx
    n1 = (n0 + 1) % Nx
    s = s - 0.5
    i = math.floor(s)
    fh = s - i
    h0 = int(i) % Nx
    h1 = (h0 + 1) % Nx
    fb[0] = Ex[h0] * (1.0 - fh) + Ex[h1] * fh
    fb[1] = Ey[n0] * (1.0 - fn) + Ey[n1] * fn
    fb[2] = Ez[n0] * (1.0 - fn) + Ez[n1] * fn
    fb[3] = Bx
    fb[4] = By[h0] * (1.0 - fh) + By[h1] * fh
    fb[5] = Bz[h0] * (1.0 - fh) + Bz[h1] * fh


@numba.njit(cache=True, error_model="numpy")
def push_midpoint(x, p, lf, L, dx, Ex, Ey, Ez, Bx, By, Bz, M, R0, R1, dt,
                  x_new, x_mid, p_new, lf_new, v_mid):
    """Midpoint step of every particle in fields frozen at the step start."""
    Nx = Ex.shape[0]
    fb = np.empty(6)
    k1 = np.empty(7)
    k2 = np.empty(7)
    h = 0.5 * dt
    for i in range(x.shape[0]):
        _grid_sample(x[i], dx, Nx, Ex, Ey, Ez, Bx, By, Bz, fb)
        _rates(fb, p[i, 0], p[i, 1], p[i, 2], M, R0, R1, k1)
        xh = (x[i] + h * k1[0]) % L
        _grid_sample(xh, dx, Nx, Ex, Ey, Ez, Bx, By, Bz, fb)
        _rates(fb, p[i, 0] + h * k1[3], p[i, 1] + h * k1[4], p[i, 2] + h * k1[5],
               M, R0, R1, k2)
        x_mid[i] = (x[i] + h * k2[0]) % L
        x_new[i] = (x[i] + dt * k2[0]) % L
        for c in range(3):
            p_new[i, c] = p[i, c] + dt * k2[3 + c]
            v_mid[i, c] = k2[c]
        lf_new[i] = lf[i] + dt * k2[6]
