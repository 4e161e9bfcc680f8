"""Geodesics of ``h`` and of Randers metrics given by navigation data.

Riemannian geodesics are integrated from the second order system

    r'' = m m' theta'^2,      theta'' = -2 (m'/m) r' theta',

with the scalar Jacobi equation ``J'' + G(r) J = 0`` carried along in the same
RK4 step.  Randers geodesics are integrated in the cotangent bundle with the
Hamiltonian ``K~ = |p|_{h*} + W^i p_i``.  All integrators use a fixed step so
that traces of different metrics can be compared sample by sample.

Direction angles ``phi`` are measured from the parallel (``d/dtheta``)
direction: the unit vector at angle ``phi`` is ``(sin phi, cos phi / m)``, so
``phi > 0`` moves away from the pole ``r = 0`` and the Clairaut constant is
``m cos phi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial import cKDTree

from .errors import DomainError, NonConvexError, PoleCrossing
from .fields import FlowMap, VectorFieldSpec, h_norm2, zero_field
from .metrics import NavigationData, legendre_covector, zermelo_to_randers
from .surface import Surface, SurfacePoint

TWO_PI = 2 * math.pi

HALT_NONE, HALT_POLE, HALT_NONCONVEX = 0, 1, 2


def wrap_angle(x):
    """Wrap to ``(-pi, pi]``."""
    return -((-np.asarray(x) + math.pi) % TWO_PI - math.pi)


@dataclass(frozen=True)
class GeodesicState:
    r: float
    theta: float
    dr: float
    dtheta: float
    clairaut_nu: float
    angle_phi: float


def state_from_angle(surface: Surface, p: SurfacePoint, phi: float) -> GeodesicState:
    """Unit-speed initial state at ``p`` leaving at angle ``phi`` from the parallel."""
    surface.require_inside(p.r)
    m = float(surface.m(p.r))
    return GeodesicState(p.r, p.theta, math.sin(phi), math.cos(phi) / m,
                         m * math.cos(phi), float(phi))


def clairaut_constant(surface: Surface, state: GeodesicState) -> float:
    """``m(r) cos(Phi)`` where ``cos(Phi) = m(r) dtheta/ds``."""
    m = float(surface.m(state.r))
    return m * (m * state.dtheta)


@dataclass(frozen=True)
class GeodesicTrace:
    """Geodesic sampled at fixed arclength steps.

    ``theta`` is kept unwrapped (continuous) in memory.  Riemannian traces
    carry the Jacobi solution ``J, dJ``; Hamiltonian traces carry the
    momenta ``p_r, p_t``.
    """

    s: np.ndarray
    r: np.ndarray
    theta: np.ndarray
    dr: np.ndarray
    dtheta: np.ndarray
    nu: np.ndarray
    metric_tag: str
    step: float
    J: np.ndarray | None = None
    dJ: np.ndarray | None = None
    p_r: np.ndarray | None = None
    p_t: np.ndarray | None = None
    halted: bool = False
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.s)

    @property
    def length(self) -> float:
        return float(self.s[-1]) if len(self.s) else 0.0

    def state(self, i: int) -> GeodesicState:
        m = float(self.meta.get("m", lambda r: 1.0)(self.r[i]))
        return GeodesicState(float(self.r[i]), float(self.theta[i]) % TWO_PI,
                             float(self.dr[i]), float(self.dtheta[i]), float(self.nu[i]),
                             float(math.atan2(self.dr[i], m * self.dtheta[i])))

    def point(self, i: int) -> SurfacePoint:
        return SurfacePoint(self.r[i], self.theta[i])


# ----------------------------------------------------------------- engine


@dataclass
class Fan:
    """Batch of trajectories: ``Y[k, :, j]`` is the state of member ``j`` at ``s[k]``."""

    s: np.ndarray
    Y: np.ndarray
    halt_reason: np.ndarray
    step: float

    @property
    def size(self) -> int:
        return self.Y.shape[2]

    def valid_length(self, j: int) -> int:
        col = self.Y[:, 0, j]
        bad = np.flatnonzero(~np.isfinite(col))
        return int(bad[0]) if bad.size else len(col)


def rk4_batch(rhs, y0, step: float, n_steps: int, admissible, record_every: int = 1) -> Fan:
    """Fixed-step RK4 for a batch of states ``y0`` of shape ``(dim, n)``.

    A member halts (its later samples become NaN) as soon as a step would
    leave the region flagged by ``admissible(y) -> reason codes`` (0 = ok).
    """
    y = np.array(y0, float)
    if y.ndim == 1:
        y = y[:, None]
    n = y.shape[1]
    active = np.ones(n, bool)
    reason = np.zeros(n, int)
    rec = [y.copy()]
    with np.errstate(all="ignore"):
        for k in range(n_steps):
            k1 = rhs(y)
            k2 = rhs(y + 0.5 * step * k1)
            k3 = rhs(y + 0.5 * step * k2)
            k4 = rhs(y + step * k3)
            y_new = y + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            code = np.asarray(admissible(y_new))
            code = np.where(np.isfinite(y_new).all(axis=0), code, HALT_POLE)
            stop = active & (code != HALT_NONE)
            reason[stop] = code[stop]
            active &= ~stop
            y = np.where(active, y_new, y)
            if (k + 1) % record_every == 0:
                rec.append(np.where(active, y, np.nan))
            if not active.any():
                break
    Y = np.stack(rec)
    s = np.arange(len(rec)) * step * record_every
    return Fan(s, Y, reason, step * record_every)


def _n_steps(length: float, step: float) -> int:
    if step <= 0 or length < 0:
        raise DomainError("step must be positive and length non-negative")
    return int(round(length / step))


# ------------------------------------------------------ Riemannian geodesics


def _h_rhs(surface: Surface):
    def rhs(y):
        r, _, dr, dth, J, dJ = y
        m = surface.m(r)
        dm = surface.dm(r)
        G = -surface.d2m(r) / m
        return np.stack([dr, dth, m * dm * dth * dth, -2 * dm / m * dr * dth, dJ, -G * J])
    return rhs


def _pole_check(surface: Surface):
    def admissible(y):
        return np.where(surface.inside(y[0]), HALT_NONE, HALT_POLE)
    return admissible


def integrate_h_batch(surface: Surface, r0, theta0, phis, length: float,
                      step: float = 1e-3, record_every: int = 1) -> Fan:
    """Unit-speed ``h``-geodesics from per-member start points and angles."""
    r0, theta0, phis = np.broadcast_arrays(np.asarray(r0, float), np.asarray(theta0, float),
                                           np.atleast_1d(np.asarray(phis, float)))
    surface.require_inside(r0)
    n = r0.size
    y0 = np.stack([r0.ravel(), theta0.ravel(), np.sin(phis).ravel(),
                   (np.cos(phis) / surface.m(r0)).ravel(), np.zeros(n), np.ones(n)])
    return rk4_batch(_h_rhs(surface), y0, step, _n_steps(length, step),
                     _pole_check(surface), record_every)


def integrate_h_fan(surface: Surface, p: SurfacePoint, phis, length: float,
                    step: float = 1e-3, record_every: int = 1) -> Fan:
    """Integrate unit-speed ``h``-geodesics from ``p`` at angles ``phis``."""
    return integrate_h_batch(surface, p.r, p.theta, phis, length, step, record_every)


def h_trace_from_fan(surface: Surface, fan: Fan, j: int, tag: str = "h") -> GeodesicTrace:
    k = fan.valid_length(j)
    Y = fan.Y[:k, :, j]
    r, th, dr, dth = Y[:, 0], Y[:, 1], Y[:, 2], Y[:, 3]
    nu = surface.m(r) ** 2 * dth
    return GeodesicTrace(fan.s[:k].copy(), r.copy(), th.copy(), dr.copy(), dth.copy(), nu,
                         tag, fan.step, J=Y[:, 4].copy(), dJ=Y[:, 5].copy(),
                         halted=bool(fan.halt_reason[j] != HALT_NONE),
                         meta={"m": surface.m})


def integrate_h_geodesic(surface: Surface, init: GeodesicState, length: float,
                         step: float = 1e-3) -> GeodesicTrace:
    """Single ``h``-geodesic; stops early (``halted=True``) at the pole guard."""
    surface.require_inside(init.r)
    m = float(surface.m(init.r))
    speed2 = init.dr ** 2 + (m * init.dtheta) ** 2
    if abs(speed2 - 1) > 1e-9:
        raise DomainError(f"initial state is not unit speed (|v|^2 = {speed2:.12g})")
    y0 = np.array([init.r, init.theta, init.dr, init.dtheta, 0.0, 1.0])
    fan = rk4_batch(_h_rhs(surface), y0, step, _n_steps(length, step),
                    _pole_check(surface))
    return h_trace_from_fan(surface, fan, 0)


# ------------------------------------------------------ Hamiltonian geodesics


def _nav_rhs(surface: Surface, wind: VectorFieldSpec):
    def rhs(y):
        r, th, pr, pt = y
        m = surface.m(r)
        dm = surface.dm(r)
        K = np.sqrt(pr * pr + (pt / m) ** 2)
        wr, wt = wind(r, th)
        dwr_r, dwr_t, dwt_r, dwt_t = wind.partials(r, th)
        return np.stack([pr / K + wr,
                         pt / (m * m * K) + wt,
                         pt * pt * dm / (m ** 3 * K) - (dwr_r * pr + dwt_r * pt),
                         -(dwr_t * pr + dwt_t * pt)])
    return rhs


def _nav_check(surface: Surface, wind: VectorFieldSpec):
    def admissible(y):
        r, th = y[0], y[1]
        ok_pole = surface.inside(r)
        with np.errstate(all="ignore"):
            ok_conv = h_norm2(surface, wind, r, th) < 1
        return np.where(~ok_pole, HALT_POLE, np.where(ok_conv, HALT_NONE, HALT_NONCONVEX))
    return admissible


def covector_for_angle(nav: NavigationData, p: SurfacePoint, phi) -> np.ndarray:
    """Covectors ``p_i`` with ``K~ = 1`` whose ``h``-dual direction has angle ``phi``.

    For zero wind the resulting geodesic is the ``h``-geodesic at angle
    ``phi``; in general its ``F~``-velocity is ``u + W`` with ``u`` the
    ``h``-unit vector at angle ``phi``.
    """
    phi = np.asarray(phi, float)
    m = float(nav.surface.m(p.r))
    pr, pt = np.sin(phi), m * np.cos(phi)
    K = nav.hamiltonian(p.r, p.theta, pr, pt)
    if np.any(K <= 0):
        raise NonConvexError("wind too strong at the initial point")
    return np.stack([pr / K, pt / K])


def initial_covector(nav: NavigationData, p: SurfacePoint, velocity) -> np.ndarray:
    """Covector of a desired ``F~``-velocity through the Randers Legendre map, rescaled to ``K~ = 1``."""
    a, b = zermelo_to_randers(nav.surface, nav.wind, p)
    cov = legendre_covector(a, b, velocity)
    return cov / float(nav.hamiltonian(p.r, p.theta, cov[0], cov[1]))


def integrate_randers_fan(nav: NavigationData, p: SurfacePoint, covectors, length: float,
                          step: float = 1e-3, record_every: int = 1) -> Fan:
    """Hamiltonian geodesics for a batch of initial covectors ``(2, n)``.

    Covectors are rescaled so that ``K~ = 1``; the parameter is then the
    ``F~``-arclength.
    """
    surface, wind = nav.surface, nav.wind
    surface.require_inside(p.r)
    cov = np.array(covectors, float).reshape(2, -1)
    if h_norm2(surface, wind, p.r, p.theta) >= 1:
        raise NonConvexError(f"|W|_h >= 1 at {p}")
    K = nav.hamiltonian(p.r, p.theta, cov[0], cov[1])
    cov = cov / K
    n = cov.shape[1]
    y0 = np.stack([np.full(n, p.r), np.full(n, p.theta), cov[0], cov[1]])
    return rk4_batch(_nav_rhs(surface, wind), y0, step, _n_steps(length, step),
                     _nav_check(surface, wind), record_every)


def nav_trace_from_fan(nav: NavigationData, fan: Fan, j: int, tag: str) -> GeodesicTrace:
    k = fan.valid_length(j)
    Y = fan.Y[:k, :, j]
    vel = _nav_rhs(nav.surface, nav.wind)(Y.T)
    return GeodesicTrace(fan.s[:k].copy(), Y[:, 0].copy(), Y[:, 1].copy(), vel[0], vel[1],
                         Y[:, 3].copy(), tag, fan.step, p_r=Y[:, 2].copy(),
                         p_t=Y[:, 3].copy(), halted=bool(fan.halt_reason[j] != HALT_NONE),
                         meta={"m": nav.surface.m, "halt_reason": int(fan.halt_reason[j])})


def integrate_randers_geodesic(nav: NavigationData, p: SurfacePoint, cov, length: float,
                               step: float = 1e-3, tag: str = "F") -> GeodesicTrace:
    """``F~``-unit speed geodesic of the navigation data ``nav`` from ``(p, cov)``.

    Raises :class:`NonConvexError` if the wind bound fails along the way; a
    pole crossing returns a partial trace flagged ``halted``.
    """
    fan = integrate_randers_fan(nav, p, np.asarray(cov, float).reshape(2, 1), length, step)
    if fan.halt_reason[0] == HALT_NONCONVEX:
        raise NonConvexError("|W|_h reached 1 along the geodesic")
    return nav_trace_from_fan(nav, fan, 0, tag)


def hamiltonian_along(nav: NavigationData, trace: GeodesicTrace) -> np.ndarray:
    return nav.hamiltonian(trace.r, trace.theta, trace.p_r, trace.p_t)


def alpha_inverse_metric(surface: Surface, wind: VectorFieldSpec):
    """Inverse of the Riemannian part ``alpha`` of the Randers metric of ``(h, wind)``.

    ``a^{ij} = lam (h^{ij} - W^i W^j)``.  The returned function gives the
    components ``(rr, rt, tt)`` together with their ``r`` and ``theta``
    partials, computed from the wind partials.
    """
    def inv(r, th):
        m, dm = surface.m(r), surface.dm(r)
        wr, wt = wind(r, th)
        d_wr_r, d_wr_t, d_wt_r, d_wt_t = wind.partials(r, th)
        lam = 1 - wr * wr - (m * wt) ** 2
        lam_r = -2 * wr * d_wr_r - 2 * m * dm * wt * wt - 2 * m * m * wt * d_wt_r
        lam_t = -2 * wr * d_wr_t - 2 * m * m * wt * d_wt_t
        hrr, htt = 1 - wr * wr, 1 / (m * m) - wt * wt
        hrt = -wr * wt
        g = (lam * hrr, lam * hrt, lam * htt)
        g_r = (lam_r * hrr - 2 * lam * wr * d_wr_r,
               lam_r * hrt - lam * (d_wr_r * wt + wr * d_wt_r),
               lam_r * htt + lam * (-2 * dm / m ** 3 - 2 * wt * d_wt_r))
        g_t = (lam_t * hrr - 2 * lam * wr * d_wr_t,
               lam_t * hrt - lam * (d_wr_t * wt + wr * d_wt_t),
               lam_t * htt - 2 * lam * wt * d_wt_t)
        return g, g_r, g_t
    return inv


def _riemann_ham_rhs(inv_metric):
    def rhs(y):
        r, th, pr, pt = y
        (grr, grt, gtt), g_r, g_t = inv_metric(r, th)
        H = np.sqrt(grr * pr * pr + 2 * grt * pr * pt + gtt * pt * pt)

        def quad(g):
            return g[0] * pr * pr + 2 * g[1] * pr * pt + g[2] * pt * pt

        return np.stack([(grr * pr + grt * pt) / H, (grt * pr + gtt * pt) / H,
                         -quad(g_r) / (2 * H), -quad(g_t) / (2 * H)])
    return rhs


def integrate_alpha_fan(nav: NavigationData, p: SurfacePoint, velocities, length: float,
                        step: float = 1e-3, record_every: int = 1) -> Fan:
    """Unit-speed geodesics of ``alpha`` (Riemannian part of the navigation metric)
    for a batch of initial velocities ``(2, n)``, integrated as a Hamiltonian flow."""
    surface = nav.surface
    surface.require_inside(p.r)
    a, _ = zermelo_to_randers(surface, nav.wind, p)
    V = np.array(velocities, float).reshape(2, -1)
    cov = a.array @ V
    cov = cov / np.sqrt(np.sum(V * cov, axis=0))
    n = V.shape[1]
    y0 = np.stack([np.full(n, p.r), np.full(n, p.theta), cov[0], cov[1]])
    rhs = _riemann_ham_rhs(alpha_inverse_metric(surface, nav.wind))
    return rk4_batch(rhs, y0, step, _n_steps(length, step), _pole_check(surface), record_every)


def alpha_trace_from_fan(nav: NavigationData, fan: Fan, j: int, tag: str = "alpha") -> GeodesicTrace:
    k = fan.valid_length(j)
    Y = fan.Y[:k, :, j]
    vel = _riemann_ham_rhs(alpha_inverse_metric(nav.surface, nav.wind))(Y.T)
    return GeodesicTrace(fan.s[:k].copy(), Y[:, 0].copy(), Y[:, 1].copy(), vel[0], vel[1],
                         Y[:, 3].copy(), tag, fan.step, p_r=Y[:, 2].copy(),
                         p_t=Y[:, 3].copy(), halted=bool(fan.halt_reason[j]),
                         meta={"m": nav.surface.m})


def integrate_alpha_geodesic(nav: NavigationData, p: SurfacePoint, velocity, length: float,
                             step: float = 1e-3) -> GeodesicTrace:
    fan = integrate_alpha_fan(nav, p, np.asarray(velocity, float).reshape(2, 1), length, step)
    return alpha_trace_from_fan(nav, fan, 0)


def alpha_length(nav: NavigationData, trace: GeodesicTrace) -> float:
    """``alpha``-length of a sampled curve (trapezoid rule on the velocity norms)."""
    m = nav.surface.m(trace.r)
    wr, wt = nav.wind(trace.r, trace.theta)
    lam = 1 - wr * wr - (m * wt) ** 2
    vr, vt = trace.dr, trace.dtheta
    low = vr * wr + m * m * vt * wt
    norm = np.sqrt((vr * vr + (m * vt) ** 2) / lam + (low / lam) ** 2)
    return float(np.trapezoid(norm, trace.s))


# ---------------------------------------------------------- conjugate points


def _hermite(t, y0, y1, d0, d1, hstep):
    t2, t3 = t * t, t * t * t
    return ((2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * hstep * d0
            + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * hstep * d1)


def _first_sign_change(s, f, df=None, start: int = 1, tol: float = 1e-8) -> float | None:
    """Smallest root of sampled ``f`` after index ``start``, refined by bisection.

    With derivatives ``df`` the refinement uses the cubic Hermite interpolant,
    otherwise linear interpolation.
    """
    sign = np.sign(f)
    idx = np.flatnonzero((sign[start:-1] * sign[start + 1:] <= 0)
                         & (sign[start:-1] != 0))
    if idx.size == 0:
        return None
    i = int(idx[0]) + start
    s0, s1 = float(s[i]), float(s[i + 1])
    hstep = s1 - s0
    if df is None:
        return s0 - f[i] * hstep / (f[i + 1] - f[i])

    def g(u):
        return _hermite(u, f[i], f[i + 1], df[i], df[i + 1], hstep)

    lo, hi = 0.0, 1.0
    glo = g(lo)
    while (hi - lo) * hstep > tol * 1e-3:
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if np.sign(gm) == np.sign(glo) and gm != 0:
            lo, glo = mid, gm
        else:
            hi = mid
    return s0 + 0.5 * (lo + hi) * hstep


def _jacobi_along(surface: Surface, trace: GeodesicTrace):
    """RK4 (step 2h) for ``J'' + G J = 0`` using curvature at the trace samples."""
    G = -surface.d2m(trace.r) / surface.m(trace.r)
    n = len(trace.s)
    J = np.full(n, np.nan)
    dJ = np.full(n, np.nan)
    J[0], dJ[0] = 0.0, 1.0
    h2 = 2 * trace.step
    for i in range(0, n - 2, 2):
        y = np.array([J[i], dJ[i]])

        def f(yv, g):
            return np.array([yv[1], -g * yv[0]])
        k1 = f(y, G[i])
        k2 = f(y + 0.5 * h2 * k1, G[i + 1])
        k3 = f(y + 0.5 * h2 * k2, G[i + 1])
        k4 = f(y + h2 * k3, G[i + 2])
        J[i + 2], dJ[i + 2] = y + h2 / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    keep = np.isfinite(J)
    return trace.s[keep], J[keep], dJ[keep]


def first_conjugate_distance(surface: Surface, trace: GeodesicTrace) -> float | None:
    """First zero of the Jacobi field with ``J(0)=0, J'(0)=1`` along an ``h``-geodesic."""
    if trace.J is not None:
        s, J, dJ = trace.s, trace.J, trace.dJ
    else:
        s, J, dJ = _jacobi_along(surface, trace)
    return _first_sign_change(s, J, dJ, start=1)


def jacobi_determinant_conjugate(nav: NavigationData, p: SurfacePoint, phi: float,
                                 length: float, step: float = 1e-3,
                                 dphi: float = 1e-4) -> float | None:
    """First conjugate distance from the exponential-type map of neighbouring geodesics.

    The Jacobian ``det[d/ds gamma, d/dphi gamma]`` of ``(s, phi) -> gamma_phi(s)``
    is formed with central differences in the initial angle and its first
    sign change located by linear interpolation.
    """
    cov = covector_for_angle(nav, p, np.array([phi - dphi, phi, phi + dphi]))
    fan = integrate_randers_fan(nav, p, cov, length, step)
    k = min(fan.valid_length(j) for j in range(3))
    Y = fan.Y[:k]
    Jr = (Y[:, 0, 2] - Y[:, 0, 0]) / (2 * dphi)
    Jt = (Y[:, 1, 2] - Y[:, 1, 0]) / (2 * dphi)
    vel = _nav_rhs(nav.surface, nav.wind)(Y[:, :, 1].T)
    det = vel[0] * Jt - vel[1] * Jr
    return _first_sign_change(fan.s[:k], det, start=2)


# ------------------------------------------------------------ trace utilities


def deform_trace_by_flow(trace: GeodesicTrace, flow: FlowMap, tag: str | None = None) -> GeodesicTrace:
    """Sample-wise image ``P~(s_i) = psi_{s_i}(P(s_i))``; velocities by finite differences."""
    r, th = flow.advance(trace.r, trace.theta, trace.s)
    if len(trace.s) > 2:
        dr = np.gradient(r, trace.s, edge_order=2)
        dth = np.gradient(th, trace.s, edge_order=2)
    else:
        dr, dth = trace.dr.copy(), trace.dtheta.copy()
    return replace(trace, r=r, theta=th, dr=dr, dtheta=dth,
                   metric_tag=tag or trace.metric_tag + "~", J=None, dJ=None,
                   p_r=None, p_t=None)


def _resample(trace: GeodesicTrace, s: np.ndarray):
    return np.interp(s, trace.s, trace.r), np.interp(s, trace.s, trace.theta)


def trace_distance(t1: GeodesicTrace, t2: GeodesicTrace, surface: Surface | None = None) -> float:
    """Max chart distance ``sqrt(dr^2 + m^2 dtheta^2)`` between two traces.

    ``t2`` is linearly resampled onto the samples of ``t1`` (over the common
    range) when the grids differ.
    """
    if len(t1) == 0 or len(t2) == 0:
        raise DomainError("empty trace")
    m = surface.m if surface is not None else t1.meta.get("m", lambda r: 1.0)
    if len(t1) == len(t2) and np.allclose(t1.s, t2.s, rtol=0, atol=1e-12):
        s, r1, th1, r2, th2 = t1.s, t1.r, t1.theta, t2.r, t2.theta
    else:
        keep = t1.s <= t2.s[-1] + 1e-12
        s = t1.s[keep]
        r1, th1 = t1.r[keep], t1.theta[keep]
        r2, th2 = _resample(t2, s)
    dth = wrap_angle(th1 - th2)
    mm = m(0.5 * (r1 + r2))
    return float(np.max(np.sqrt((r1 - r2) ** 2 + (mm * dth) ** 2)))


def _polyline_distance(m, P, Q, k: int = 4) -> np.ndarray:
    """Distance from each point of ``P`` to the polyline ``Q`` (chart metric at P)."""
    tree = cKDTree(Q)
    _, idx = tree.query(P, k=min(k, len(Q)))
    idx = np.atleast_2d(idx.T).T if idx.ndim == 1 else idx
    best = np.full(len(P), np.inf)
    w = m(P[:, 0])
    for col in range(idx.shape[1]):
        for off in (-1, 0):
            i0 = np.clip(idx[:, col] + off, 0, len(Q) - 2)
            A, B = Q[i0], Q[i0 + 1]
            d = B - A
            d_w = d * np.stack([np.ones_like(w), w], axis=1)
            pa_w = (P - A) * np.stack([np.ones_like(w), w], axis=1)
            den = np.maximum(np.sum(d_w * d_w, axis=1), 1e-300)
            t = np.clip(np.sum(pa_w * d_w, axis=1) / den, 0, 1)
            diff = pa_w - t[:, None] * d_w
            best = np.minimum(best, np.sqrt(np.sum(diff * diff, axis=1)))
    return best


def hausdorff_distance(surface: Surface, t1: GeodesicTrace, t2: GeodesicTrace) -> float:
    """Symmetric Hausdorff distance between the point sets of two traces."""
    P = np.column_stack([t1.r, t1.theta])
    Q = np.column_stack([t2.r, t2.theta])
    return float(max(_polyline_distance(surface.m, P, Q).max(),
                     _polyline_distance(surface.m, Q, P).max()))


def truncate_to_nearest(trace: GeodesicTrace, endpoint, surface: Surface) -> GeodesicTrace:
    """Cut ``trace`` at the foot of the perpendicular from ``endpoint``.

    The foot is searched on the two chart segments next to the closest
    sample; the last sample of the result is linearly interpolated there.
    """
    er, et = float(endpoint[0]), float(endpoint[1])
    w = float(surface.m(er))
    d = (trace.r - er) ** 2 + (w * wrap_angle(trace.theta - et)) ** 2
    k = int(np.argmin(d))
    best = (math.inf, k, 0.0)
    for i in (k - 1, k):
        if i < 0 or i + 1 >= len(trace):
            continue
        ax, ay = trace.r[i], trace.theta[i]
        bx, by = trace.r[i + 1] - ax, (trace.theta[i + 1] - ay) * w
        px, py = er - ax, wrap_angle(et - ay) * w
        den = bx * bx + by * by
        t = min(max((px * bx + py * by) / den, 0.0), 1.0) if den > 0 else 0.0
        dist = math.hypot(px - t * bx, py - t * by)
        if dist < best[0]:
            best = (dist, i, t)
    _, i, t = best
    cut = _slice(trace, i + 2)
    arrays = {}
    for name in ("s", "r", "theta", "dr", "dtheta", "nu", "J", "dJ", "p_r", "p_t"):
        v = getattr(cut, name)
        if v is not None and len(v) == i + 2:
            v = v.copy()
            v[-1] = (1 - t) * v[-2] + t * v[-1]
            arrays[name] = v
    return replace(cut, **arrays)


def _slice(trace: GeodesicTrace, k: int) -> GeodesicTrace:
    cut = {}
    for name in ("s", "r", "theta", "dr", "dtheta", "nu", "J", "dJ", "p_r", "p_t"):
        v = getattr(trace, name)
        cut[name] = None if v is None else v[:k]
    return replace(trace, **cut)


def zero_wind_navigation(surface: Surface) -> NavigationData:
    return NavigationData(surface, zero_field())


def require_inside(surface: Surface, trace: GeodesicTrace) -> None:
    if trace.halted:
        raise PoleCrossing(f"{trace.metric_tag}-geodesic reached the pole guard at s={trace.length:.6g}")


TRACE_COLUMNS = ("s", "r", "theta", "dr", "dtheta", "nu")


def write_trace_csv(trace: GeodesicTrace, path, member: int | None = None, append: bool = False) -> None:
    """CSV with columns ``s,r,theta,dr,dtheta,nu`` (theta wrapped to ``[0, 2pi)``)."""
    cols = [trace.s, trace.r, np.mod(trace.theta, TWO_PI), trace.dr, trace.dtheta, trace.nu]
    header = ("member," if member is not None else "") + ",".join(TRACE_COLUMNS)
    with open(path, "a" if append else "w", encoding="utf-8", newline="") as fh:
        if not append:
            fh.write(header + "\n")
        for row in zip(*cols):
            prefix = f"{member}," if member is not None else ""
            fh.write(prefix + ",".join(f"{v:.12g}" for v in row) + "\n")


def trace_envelope(trace: GeodesicTrace, profile_id: str, wind_ids=(), **extra) -> dict:
    """JSON-ready summary of a trace (samples are written separately as CSV)."""
    return {"metric_tag": trace.metric_tag, "profile": profile_id, "winds": list(wind_ids),
            "step": trace.step, "samples": len(trace), "length": trace.length,
            "halted": trace.halted, **extra}
