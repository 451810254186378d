"""Light-cone machinery: field kernels and their bounds, cone derivatives and
the retarded integral of the wave operator.

Kernels
-------
For a unit vector ``omega`` and momentum ``p`` (``v = p/[p]``) the field
representation uses

    ES_grad_ij = d/dp_j [(omega_i + v_i) / (1 + omega.v)]
    ET         = (omega + v) / ([p]^2 (1 + omega.v)^2)
    BS_grad_ij = d/dp_j [(omega x v)_i / (1 + omega.v)]
    BT         = (omega x v) / ([p]^2 (1 + omega.v)^2)

evaluated from closed forms.  The denominator ``1 + omega.v`` can be as
small as ``1 - |v| ~ 1/(2 [p]^2)``; to keep it accurate every sample
carries the decomposition ``omega = (delta - 1) p_hat + omega_perp`` with
``delta = 1 + cos(theta)``, and the kernels are assembled from
``1 - |v|``, ``delta`` and ``omega_perp`` (all sums of positive terms).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import integrate, ndimage

from .errors import ConvergenceError, ParameterError
from .kinematics import norm, one_minus_speed

# ---------------------------------------------------------------------------
# kernel samples


def _orthonormal_frame(p_hat):
    """Two unit vectors completing ``p_hat`` to a right-handed frame."""
    ref = np.where(np.abs(p_hat[..., 2:3]) < 0.9, [0.0, 0.0, 1.0], [1.0, 0.0, 0.0])
    e1 = np.cross(ref, p_hat)
    e1 /= np.linalg.norm(e1, axis=-1, keepdims=True)
    return e1, np.cross(p_hat, e1)


@dataclass(frozen=True)
class KernelSample:
    """Batch of ``(omega, p)`` pairs with their momentum-aligned decomposition.

    Build with :meth:`from_angles` for accurate near-antipodal samples; the
    plain constructor derives ``delta`` and ``omega_perp`` from ``omega``.
    ``p = 0`` uses ``p_hat = e_z`` (the kernels do not depend on it there).
    """

    omega: np.ndarray
    p: np.ndarray
    delta: np.ndarray = None
    omega_perp: np.ndarray = None
    p_hat: np.ndarray = dc_field(default=None, repr=False)

    def __post_init__(self):
        om = np.asarray(self.omega, dtype=float)
        p = np.asarray(self.p, dtype=float)
        om, p = np.broadcast_arrays(om, p)
        err = np.max(np.abs(norm(om) - 1.0)) if om.size else 0.0
        if err > 1e-14:
            raise ParameterError(f"omega must be a unit vector (| |omega| - 1 | = {err:.3g})")
        r = norm(p)
        safe = np.where(r > 0, r, 1.0)[..., None]
        p_hat = np.where(r[..., None] > 0, p / safe, [0.0, 0.0, 1.0])
        delta, perp = self.delta, self.omega_perp
        if delta is None or perp is None:
            c = np.sum(om * p_hat, axis=-1)
            delta = 1.0 + c
            perp = om - c[..., None] * p_hat
        object.__setattr__(self, "omega", om)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "p_hat", p_hat)
        object.__setattr__(self, "delta", np.asarray(delta, dtype=float))
        object.__setattr__(self, "omega_perp", np.asarray(perp, dtype=float))

    @classmethod
    def from_angles(cls, p, delta, phi):
        """``omega`` at polar angle ``arccos(delta - 1)`` from ``p_hat`` and azimuth ``phi``."""
        p = np.asarray(p, dtype=float)
        delta = np.asarray(delta, dtype=float)
        if np.any((delta < 0) | (delta > 2)):
            raise ParameterError("delta = 1 + cos(theta) must lie in [0, 2]")
        r = norm(p)
        safe = np.where(r > 0, r, 1.0)[..., None]
        p_hat = np.where(r[..., None] > 0, p / safe, [0.0, 0.0, 1.0])
        e1, e2 = _orthonormal_frame(p_hat)
        sin_t = np.sqrt(delta * (2.0 - delta))
        phi = np.asarray(phi, dtype=float)
        perp = sin_t[..., None] * (np.cos(phi)[..., None] * e1 + np.sin(phi)[..., None] * e2)
        omega = (delta - 1.0)[..., None] * p_hat + perp
        omega = omega / norm(omega)[..., None]
        return cls(omega, p, delta, perp)


@dataclass(frozen=True)
class _Frame:
    g: np.ndarray       # [p]
    s: np.ndarray       # |v|
    oms: np.ndarray     # 1 - |v|
    D: np.ndarray       # 1 + omega.v
    v: np.ndarray
    w: np.ndarray       # omega + v
    wxv: np.ndarray     # omega x v


def _frame(smp):
    r = norm(smp.p)
    g = np.hypot(1.0, r)
    oms = one_minus_speed(smp.p)
    s = r / g
    D = oms + s * smp.delta
    w = (smp.delta - oms)[..., None] * smp.p_hat + smp.omega_perp
    wxv = s[..., None] * np.cross(smp.omega_perp, smp.p_hat)
    return _Frame(g, s, oms, D, s[..., None] * smp.p_hat, w, wxv)


def _cross_matrix(om):
    z = np.zeros(om.shape[:-1])
    return np.stack([
        np.stack([z, -om[..., 2], om[..., 1]], axis=-1),
        np.stack([om[..., 2], z, -om[..., 0]], axis=-1),
        np.stack([-om[..., 1], om[..., 0], z], axis=-1),
    ], axis=-2)


def kernel_inv_denominator_grad(smp, _fr=None):
    """``d/dp_j (1/(1 + omega.v)) = v_j/([p] D) - (omega_j + v_j)/([p] D^2)``."""
    fr = _fr or _frame(smp)
    gD = (fr.g * fr.D)[..., None]
    return fr.v / gD - fr.w / (gD * fr.D[..., None])


def kernel_ES_grad(smp, _fr=None):
    """Closed-form ``d/dp_j [(omega_i + v_i)/(1 + omega.v)]``, shape ``(..., 3, 3)``."""
    fr = _fr or _frame(smp)
    gD = (fr.g * fr.D)[..., None, None]
    first = (np.eye(3) + smp.omega[..., :, None] * fr.v[..., None, :]) / gD
    second = fr.w[..., :, None] * fr.w[..., None, :] / (gD * fr.D[..., None, None])
    return first - second


def kernel_ES_second_term(smp, _fr=None):
    fr = _fr or _frame(smp)
    return fr.w[..., :, None] * fr.w[..., None, :] / (fr.g * fr.D**2)[..., None, None]


def kernel_ET(smp, _fr=None):
    fr = _fr or _frame(smp)
    return fr.w / ((fr.g * fr.D) ** 2)[..., None]


def kernel_BS_grad(smp, _fr=None):
    """Closed-form ``d/dp_j [(omega x v)_i/(1 + omega.v)]``.

    Equals ``[omega x]_ij / ([p] D) - (omega x v)_i (omega_j + v_j) / ([p] D^2)``.
    """
    fr = _fr or _frame(smp)
    gD = (fr.g * fr.D)[..., None, None]
    return (_cross_matrix(smp.omega) / gD
            - fr.wxv[..., :, None] * fr.w[..., None, :] / (gD * fr.D[..., None, None]))


def kernel_BT(smp, _fr=None):
    fr = _fr or _frame(smp)
    return fr.wxv / ((fr.g * fr.D) ** 2)[..., None]


def symbol_ratio_identity(smp, _fr=None):
    """Both sides of ``|omega+v|^2/(1+omega.v)^2 = ((1-|v|)^2 + 2|v|delta) / (...)``."""
    fr = _fr or _frame(smp)
    lhs = np.sum(fr.w**2, axis=-1) / fr.D**2
    o, s, d = fr.oms, fr.s, smp.delta
    rhs = (o**2 + 2 * s * d) / (o**2 + s**2 * d**2 + 2 * o * s * d)
    return lhs, rhs


# value, bound pairs for the certified inequalities
def _bound_values(smp):
    fr = _frame(smp)
    g = fr.g
    es = kernel_ES_grad(smp, fr)
    sec = kernel_ES_second_term(smp, fr)
    return {
        "symbineq": (norm(fr.w) / fr.D, math.sqrt(2.0) * g),
        "symblow": (1.0 / fr.D, 2.0 * g**2),
        "secondb": (np.max(np.abs(sec), axis=(-2, -1)), 2.0 * g),
        "divsymbb": (np.max(np.abs(es), axis=(-2, -1)), 6.0 * g),
        "sigBb": (np.sqrt(np.sum(kernel_BS_grad(smp, fr) ** 2, axis=(-2, -1))), 10.0 * g),
        "tauBb": (norm(kernel_BT(smp, fr)), 2.0 * math.sqrt(2.0) * g),
        "ET_bound": (norm(kernel_ET(smp, fr)), 2.0 * math.sqrt(2.0) * g),
    }


BOUND_DESCRIPTIONS = {
    "symbineq": "|omega+v|/(1+omega.v) <= sqrt(2)[p]",
    "symblow": "1/(1+omega.v) <= 2[p]^2",
    "secondb": "max_ij |(omega+v)_i(omega+v)_j|/([p](1+omega.v)^2) <= 2[p]",
    "divsymbb": "max_ij |d/dp_j((omega_i+v_i)/(1+omega.v))| <= 6[p]",
    "sigBb": "|grad_p((omega x v)/(1+omega.v))|_F <= 10[p]",
    "tauBb": "|omega x v|/([p]^2(1+omega.v)^2) <= 2sqrt(2)[p]",
    "ET_bound": "|omega+v|/([p]^2(1+omega.v)^2) <= 2sqrt(2)[p]",
}


@dataclass
class BoundEntry:
    name: str
    description: str
    max_ratio: float
    argmax_p: list
    argmax_omega: list
    count: int

    @property
    def ok(self):
        return self.max_ratio <= 1.0


@dataclass
class BoundReport:
    entries: dict
    identity_max_rel_error: float
    n_random: int
    n_adversarial: int
    p_max: float
    seed: int

    @property
    def ok(self):
        return all(e.ok for e in self.entries.values())

    def to_dict(self):
        return {
            "seed": self.seed, "p_max": self.p_max,
            "n_random": self.n_random, "n_adversarial": self.n_adversarial,
            "identity_symbol_ratio_max_rel_error": self.identity_max_rel_error,
            "bounds": {k: dict(description=e.description, max_ratio=e.max_ratio,
                               argmax_p=e.argmax_p, argmax_omega=e.argmax_omega,
                               count=e.count, ok=e.ok)
                       for k, e in self.entries.items()},
            "ok": self.ok,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def sample_kernels(rng, n, p_max, adversarial=False):
    """Random :class:`KernelSample` batch.

    Regular samples mix ``|p|`` uniform on ``[0, p_max]``, log-uniform on
    ``[1e-6, p_max]`` and uniform on ``[0, 3]``; ``omega`` is isotropic
    (``delta`` uniform on ``[0, 2]``).  Adversarial samples put ``omega``
    almost antipodal to ``p``: ``delta <= 1e-6 / [p]^2``, a tenth of them
    exactly antipodal.
    """
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    if adversarial:
        r = np.exp(rng.uniform(math.log(1e-3), math.log(p_max), n))
        delta = rng.uniform(0.0, 1.0, n) * 1e-6 / (1.0 + r**2)
        delta[rng.uniform(size=n) < 0.1] = 0.0
    else:
        pick = rng.integers(0, 3, n)
        r = np.select([pick == 0, pick == 1],
                      [rng.uniform(0.0, p_max, n),
                       np.exp(rng.uniform(math.log(1e-6), math.log(p_max), n))],
                      rng.uniform(0.0, 3.0, n))
        delta = rng.uniform(0.0, 2.0, n)
    phi = rng.uniform(0.0, 2 * np.pi, n)
    return KernelSample.from_angles(r[:, None] * d, delta, phi)


def certify_bounds(n_samples=1_000_000, p_max=1e3, seed=0, n_adversarial=10_000, chunk=65536):
    """Evaluate every kernel inequality on seeded random and adversarial samples.

    Chunk ``k`` draws from the ``k``-th child of ``SeedSequence(seed)``, so
    the result does not depend on how chunks are scheduled.  The exact
    ``p = 0`` sample is always included on top of the requested counts.
    """
    if n_samples < 1:
        raise ParameterError("sample count must be positive")
    plan = []
    left = n_samples
    while left > 0:
        plan.append((min(chunk, left), False))
        left -= chunk
    left = n_adversarial
    while left > 0:
        plan.append((min(chunk, left), True))
        left -= chunk
    children = np.random.SeedSequence(seed).spawn(len(plan))
    best = {k: (-np.inf, None, None) for k in BOUND_DESCRIPTIONS}
    ident = 0.0
    batches = ((sample_kernels(np.random.default_rng(ss), n, p_max, adversarial=adv), n)
               for (n, adv), ss in zip(plan, children))
    zero = KernelSample.from_angles(np.zeros((1, 3)), np.ones(1), np.zeros(1))
    for smp, _ in itertools.chain([(zero, 1)], batches):
        for name, (val, bound) in _bound_values(smp).items():
            ratio = val / bound
            i = int(np.argmax(ratio))
            if ratio[i] > best[name][0]:
                best[name] = (float(ratio[i]), smp.p[i].tolist(), smp.omega[i].tolist())
        lhs, rhs = symbol_ratio_identity(smp)
        ident = max(ident, float(np.max(np.abs(lhs - rhs) / np.abs(rhs))))
    total = n_samples + n_adversarial + 1
    entries = {k: BoundEntry(k, BOUND_DESCRIPTIONS[k], *best[k], total) for k in BOUND_DESCRIPTIONS}
    return BoundReport(entries, ident, n_samples, n_adversarial, float(p_max), int(seed))


# ---------------------------------------------------------------------------
# light-cone differential operators on a space-time box


@dataclass(frozen=True)
class ConeGrid:
    """Uniform space-time box ``lo <= y <= hi``, ``s0 <= s <= s1`` with ``n`` intervals per axis.

    ``x``, ``t`` is the vertex; ``omega(y) = (y - x)/|y - x|``.
    """

    lo: tuple
    hi: tuple
    s0: float
    s1: float
    n: int
    x: tuple = (0.0, 0.0, 0.0)
    t: float = 0.0

    @property
    def axes(self):
        sp = [np.linspace(a, b, self.n + 1) for a, b in zip(self.lo, self.hi)]
        return sp + [np.linspace(self.s0, self.s1, self.n + 1)]

    @property
    def spacing(self):
        return [(b - a) / self.n for a, b in zip(list(self.lo) + [self.s0], list(self.hi) + [self.s1])]

    def mesh(self):
        return np.meshgrid(*self.axes, indexing="ij")

    def sample(self, u):
        """Evaluate ``u(y1, y2, y3, s)`` on the box (broadcasting callable)."""
        y1, y2, y3, s = self.axes
        return np.asarray(u(y1[:, None, None, None], y2[None, :, None, None],
                            y3[None, None, :, None], s[None, None, None, :]), dtype=float) \
            * np.ones((self.n + 1,) * 4)

    def index_of(self, point):
        """Fractional array index of a space-time point."""
        lo = np.array(list(self.lo) + [self.s0])
        return (np.asarray(point, dtype=float) - lo) / np.array(self.spacing)

    def omega_at(self, y):
        d = np.asarray(y, dtype=float) - np.asarray(self.x, dtype=float)
        r = norm(d)
        if np.any(r == 0):
            raise ParameterError("operator evaluated at the cone vertex, where omega is undefined")
        return d / r[..., None]


def _points(grid, idx):
    ax = grid.axes
    idx = np.asarray(idx)
    return np.stack([ax[k][idx[:, k]] for k in range(4)], axis=-1)


def _cartesian_derivs(u, grid, idx):
    """Second-order central differences (one-sided at the box faces) at indices ``idx``."""
    h = grid.spacing
    out = np.empty((len(idx), 4))
    for k in range(4):
        d = np.gradient(u, h[k], axis=k, edge_order=2)
        out[:, k] = d[tuple(np.asarray(idx).T)]
    return out


_SPLINE = {"u": None, "coef": None}  # last prefiltered array, reused across operator calls


def _interp(u, grid, pts):
    if _SPLINE["u"] is not u:
        _SPLINE["coef"] = ndimage.spline_filter(u, order=3, mode="mirror")
        _SPLINE["u"] = u
    coords = np.moveaxis(grid.index_of(pts), -1, 0)
    return ndimage.map_coordinates(_SPLINE["coef"], coords, order=3, mode="mirror",
                                   prefilter=False)


def apply_T(i, u, grid, idx, method="cartesian"):
    """Tangential derivative ``T_i u = d_i u - omega_i d_t u`` at grid indices ``idx`` (``(m, 4)``).

    ``"cartesian"`` combines central differences in ``y_i`` and ``s``.
    ``"cone"`` differentiates ``y -> u(y, s + |y0 - x| - |y - x|)`` along
    ``y_i`` (the restriction to the cone through the point), with cubic
    spline interpolation in time.
    """
    pts = _points(grid, idx)
    om = grid.omega_at(pts[:, :3])
    if method == "cartesian":
        d = _cartesian_derivs(u, grid, idx)
        return d[:, i] - om[:, i] * d[:, 3]
    if method != "cone":
        raise ValueError(f"unknown method {method!r}")
    h = grid.spacing[i]
    rho0 = norm(pts[:, :3] - np.asarray(grid.x))
    vals = []
    for sgn in (1.0, -1.0):
        q = pts.copy()
        q[:, i] += sgn * h
        q[:, 3] -= norm(q[:, :3] - np.asarray(grid.x)) - rho0
        vals.append(_interp(u, grid, q))
    return (vals[0] - vals[1]) / (2.0 * h)


def apply_V(u, grid, idx, method="cartesian"):
    """``V u = d_t u - omega . grad_y u`` at indices ``idx``.

    ``"cone"`` differentiates ``sigma -> u(y - sigma omega, s + sigma)``
    (the backward ray through the point) by a central difference of step
    equal to the time spacing, with cubic spline interpolation.
    """
    pts = _points(grid, idx)
    om = grid.omega_at(pts[:, :3])
    if method == "cartesian":
        d = _cartesian_derivs(u, grid, idx)
        return d[:, 3] - np.sum(om * d[:, :3], axis=1)
    if method != "cone":
        raise ValueError(f"unknown method {method!r}")
    eta = grid.spacing[3]
    q_plus, q_minus = pts.copy(), pts.copy()
    q_plus[:, :3] -= eta * om
    q_plus[:, 3] += eta
    q_minus[:, :3] += eta * om
    q_minus[:, 3] -= eta
    return (_interp(u, grid, q_plus) - _interp(u, grid, q_minus)) / (2.0 * eta)


def apply_S(u, grid, idx, v):
    """Streaming derivative ``S u = d_t u + v . grad_y u`` for a fixed velocity ``v``."""
    d = _cartesian_derivs(u, grid, idx)
    return d[:, 3] + d[:, :3] @ np.asarray(v, dtype=float)


def decompose_derivatives(u, grid, idx, v, method="cartesian"):
    """Spatial and time derivatives rebuilt from ``S`` and ``T``.

    ``d_i = T_i + omega_i (S - v.T) / (1 + omega.v)`` and
    ``d_t = (S - v.T) / (1 + omega.v)``.  Returns ``(grad (m, 3), dt (m,))``.
    """
    v = np.asarray(v, dtype=float)
    if not np.linalg.norm(v) < 1:
        raise ParameterError("streaming velocity must satisfy |v| < 1")
    pts = _points(grid, idx)
    om = grid.omega_at(pts[:, :3])
    T = np.stack([apply_T(i, u, grid, idx, method) for i in range(3)], axis=-1)
    S = apply_S(u, grid, idx, v)
    core = (S - T @ v) / (1.0 + om @ v)
    return T + om * core[:, None], core


def interior_indices(grid, margin, stride=1):
    """Indices at least ``margin`` cells from every face, subsampled by ``stride``."""
    rng = np.arange(margin, grid.n + 1 - margin, stride)
    m = np.stack(np.meshgrid(rng, rng, rng, rng, indexing="ij"), axis=-1).reshape(-1, 4)
    return m


def refinement_orders(errors):
    """Observed orders ``log2(e_k / e_{k+1})`` for errors at successively halved spacings."""
    e = np.asarray(errors, dtype=float)
    return np.log2(e[:-1] / e[1:])


# ---------------------------------------------------------------------------
# retarded integral


@dataclass(frozen=True)
class QuadratureSpec:
    """Gauss-Legendre in radius (``n_r`` nodes per panel, ``panels`` panels),
    Gauss-Legendre in ``cos(theta)`` and the periodic trapezoid rule in ``phi``."""

    n_r: int = 24
    n_theta: int = 24
    n_phi: int = 48
    panels: int = 1

    def refined(self):
        return QuadratureSpec(self.n_r, 2 * self.n_theta, 2 * self.n_phi, 2 * self.panels)


def _radial_nodes(t, spec):
    x, w = np.polynomial.legendre.leggauss(spec.n_r)
    edges = np.linspace(0.0, t, spec.panels + 1)
    r = np.concatenate([0.5 * (b - a) * x + 0.5 * (b + a) for a, b in zip(edges[:-1], edges[1:])])
    wr = np.concatenate([0.5 * (b - a) * w for a, b in zip(edges[:-1], edges[1:])])
    return r, wr


def _sphere_nodes(spec):
    mu, wmu = np.polynomial.legendre.leggauss(spec.n_theta)
    phi = 2 * np.pi * np.arange(spec.n_phi) / spec.n_phi
    wphi = np.full(spec.n_phi, 2 * np.pi / spec.n_phi)
    st = np.sqrt(1.0 - mu**2)
    om = np.stack([st[:, None] * np.cos(phi)[None, :], st[:, None] * np.sin(phi)[None, :],
                   np.broadcast_to(mu[:, None], (spec.n_theta, spec.n_phi))], axis=-1)
    return om.reshape(-1, 3), (wmu[:, None] * wphi[None, :]).reshape(-1)


def retarded_integral(g, x, t, spec=QuadratureSpec()):
    """``int_{|x-y|<=t} g(y, t - |x-y|) / |x-y| dy`` in spherical shells about ``x``.

    ``g(y, s)`` must accept ``y`` of shape ``(..., 3)`` and ``s`` of the
    leading shape.  Written as ``int_0^t int_S2 g(x + r omega, t - r) r dS dr``.
    """
    if t <= 0:
        return 0.0
    r, wr = _radial_nodes(t, spec)
    om, wo = _sphere_nodes(spec)
    y = np.asarray(x, dtype=float) + r[:, None, None] * om[None, :, :]
    s = np.broadcast_to((t - r)[:, None], y.shape[:2])
    vals = np.asarray(g(y, s), dtype=float)
    return float(np.sum(wr[:, None] * r[:, None] * wo[None, :] * vals))


def retarded_integral_refined(g, x, t, spec=QuadratureSpec(), rtol=1e-6, max_levels=5):
    """Refine ``spec`` until two successive levels agree to ``rtol``.

    Raises :class:`ConvergenceError` carrying the last two values otherwise.
    """
    prev = retarded_integral(g, x, t, spec)
    for _ in range(max_levels):
        spec = spec.refined()
        cur = retarded_integral(g, x, t, spec)
        if abs(cur - prev) <= rtol * max(abs(cur), 1e-300):
            return cur
        prev, last = cur, prev
    raise ConvergenceError("retarded integral did not converge under refinement",
                           levels=(last, prev))


def radial_retarded_integral(G, t, epsabs=1e-14, epsrel=1e-12):
    """``4 pi int_0^t r G(r, t - r) dr`` for a source ``G(|y - x|, s)`` symmetric about ``x``."""
    val, _ = integrate.quad(lambda r: r * G(r, t - r), 0.0, t, epsabs=epsabs, epsrel=epsrel,
                            limit=200)
    return 4.0 * math.pi * val


class BumpWave:
    """Manufactured solution ``u = phi(s) psi(|y - c|)`` of the wave equation with a source.

    ``phi(s) = s^4 exp(-s)`` vanishes to third order at ``s = 0`` (zero
    initial data), ``psi(rho) = (1 - rho^2/a^2)^m`` on ``rho < a``.
    ``source`` returns ``g = (d_t^2 - Laplacian) u``, so that
    ``u = retarded_integral(g) / (4 pi)``.
    """

    def __init__(self, center=(0.0, 0.0, 0.0), a=1.0, m=4):
        self.c = np.asarray(center, dtype=float)
        self.a, self.m = float(a), int(m)

    @staticmethod
    def _phi(s):
        e = np.exp(-s)
        return s**4 * e, (12 * s**2 - 8 * s**3 + s**4) * e

    def _psi(self, rho):
        a, m = self.a, self.m
        q = np.clip(1.0 - (rho / a) ** 2, 0.0, None)
        psi = q**m
        lap = m * (m - 1) * q ** (m - 2) * 4 * rho**2 / a**4 - 6 * m * q ** (m - 1) / a**2
        return psi, np.where(rho < a, lap, 0.0)

    def radial(self, rho, s):
        phi, _ = self._phi(s)
        return phi * self._psi(rho)[0]

    def radial_source(self, rho, s):
        phi, phi2 = self._phi(s)
        psi, lap = self._psi(rho)
        return phi2 * psi - phi * lap

    def u(self, y, s):
        return self.radial(norm(np.asarray(y) - self.c), s)

    def source(self, y, s):
        return self.radial_source(norm(np.asarray(y) - self.c), s)


def manufactured_error(wave, points, spec):
    """Max over ``points`` (``(x, t)`` pairs) of ``|retarded_integral/(4 pi) - u|``, relative to ``max|u|``."""
    errs, ref = [], []
    for x, t in points:
        approx = retarded_integral(wave.source, x, t, spec) / (4 * np.pi)
        exact = float(wave.u(np.asarray(x, dtype=float), t))
        errs.append(abs(approx - exact))
        ref.append(abs(exact))
    return max(errs) / max(ref)
