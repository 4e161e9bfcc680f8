"""Half-period function, Riemannian cut loci and their Randers images.

Cut points are found as Maxwell points of a symmetric geodesic fan from
``q = (r0, theta0)``.  Two partners of the direction ``phi`` (measured from
the parallel) reach the same point at equal arclength:

* ``-phi``: same Clairaut constant, opposite radial start.  Under the
  equatorial symmetry ``m(pi - r) = m(r)`` the pair meets on the antipodal
  parallel ``r = pi - r0``.
* ``pi - phi``: mirror image in the meridian of ``q``; the pair meets on the
  opposite meridian.

Each direction keeps the earliest meeting with either partner that happens
no later than its first conjugate point.
"""

from __future__ import annotations

import enum
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError, FanTooCoarse, PreconditionFailed
from .fields import (FlowMap, closedness_defect, killing_defect, navigation_one_form,
                     poisson_defect)
from .geodesics import (Fan, first_conjugate_distance, h_trace_from_fan, integrate_h_fan,
                        wrap_angle)
from .metrics import NavigationChain
from .surface import Surface, SurfacePoint

TWO_PI = 2 * math.pi


# ------------------------------------------------------------- half period


def m_inverse(surface: Surface, values, tol: float = 1e-12):
    """Solve ``m(r) = value`` on the increasing branch ``[pole, equator]`` by bisection."""
    values = np.asarray(values, float)
    lo = np.full(values.shape, surface.poles[0])
    hi = np.full(values.shape, surface.equator)
    n_iter = int(math.ceil(math.log2((hi.flat[0] - lo.flat[0]) / tol))) + 1 if values.size else 0
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        below = surface.m(mid) < values
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def _composite_gl(f, a: float, b: float, tol: float, max_panels: int = 4096) -> float:
    """Composite Gauss-Legendre with panel doubling until successive sums agree to ``tol``."""
    def rule(n):
        edges = np.linspace(a, b, n + 1)
        half = 0.5 * np.diff(edges)
        mids = 0.5 * (edges[1:] + edges[:-1])
        x = (mids[:, None] + half[:, None] * _GL_X[None, :]).ravel()
        w = (half[:, None] * _GL_W[None, :]).ravel()
        return float(np.sum(w * f(x)))

    n = 2
    prev = rule(n)
    while n < max_panels:
        n *= 2
        cur = rule(n)
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    return prev


def half_period(surface: Surface, nu: float, tol: float = 1e-8) -> float:
    """``phi_m(nu) = 2 int_{m^-1(nu)}^{equator} nu / (m sqrt(m^2 - nu^2)) dr``.

    The lower half of the range is integrated in ``w = sqrt(m^2 - nu^2)``,
    which removes the inverse square-root singularity; the upper half is
    smooth in ``r``.
    """
    m_max = float(surface.m(surface.equator))
    if not 0.0 < nu < m_max:
        raise DomainError(f"nu must lie in (0, {m_max:.12g}), got {nu}")
    r_nu = float(m_inverse(surface, nu))
    r_mid = 0.5 * (r_nu + surface.equator)
    w_mid = math.sqrt(max(float(surface.m(r_mid)) ** 2 - nu * nu, 0.0))

    def lower(w):
        r = m_inverse(surface, np.sqrt(nu * nu + w * w))
        return nu / (surface.m(r) ** 2 * surface.dm(r))

    def upper(r):
        m = surface.m(r)
        return nu / (m * np.sqrt(m * m - nu * nu))

    part = _composite_gl(lower, 0.0, w_mid, tol / 4)
    part += _composite_gl(upper, r_mid, surface.equator, tol / 4)
    return 2.0 * part


@dataclass(frozen=True)
class HalfPeriodTable:
    nu_grid: np.ndarray
    phi_values: np.ndarray
    tol: float
    monotone: bool

    def as_dict(self) -> dict:
        return {"nu": self.nu_grid.tolist(), "phi": self.phi_values.tolist(),
                "tol": self.tol, "monotone": self.monotone}


def scan_half_period(surface: Surface, n_grid: int = 32, tol: float = 1e-8,
                     slack: float = 1e-9) -> HalfPeriodTable:
    """Half period on a uniform grid in ``[0.05, 0.95] m(equator)``; flags non-increase."""
    if n_grid < 8:
        raise DomainError("n_grid must be at least 8")
    m_max = float(surface.m(surface.equator))
    nus = np.linspace(0.05, 0.95, n_grid) * m_max
    phis = np.array([half_period(surface, float(v), tol) for v in nus])
    monotone = bool(np.all(np.diff(phis) <= slack))
    return HalfPeriodTable(nus, phis, tol, monotone)


# ---------------------------------------------------------------- cut locus


class CutKind(str, enum.Enum):
    MAXWELL = "maxwell"
    CONJUGATE = "conjugate"


@dataclass(frozen=True)
class CutPoint:
    source: SurfacePoint
    point: SurfacePoint
    distance: float
    kind: CutKind
    nu: float
    angles: tuple[float, ...] = ()

    def as_dict(self) -> dict:
        return {"r": self.point.r, "theta": self.point.theta, "distance": self.distance,
                "kind": self.kind.value, "nu": self.nu, "angles": list(self.angles)}


@dataclass(frozen=True)
class CutLocusResult:
    source: SurfacePoint
    cut_points: list[CutPoint]
    parallel_r: float | None = None
    max_parallel_deviation: float | None = None
    theta_extent: tuple[float, float] | None = None
    meta: dict = field(default_factory=dict)

    @property
    def r(self) -> np.ndarray:
        return np.array([c.point.r for c in self.cut_points])

    @property
    def theta(self) -> np.ndarray:
        return np.array([c.point.theta for c in self.cut_points])

    @property
    def distances(self) -> np.ndarray:
        return np.array([c.distance for c in self.cut_points])

    def unique_points(self, tol: float = 1e-5) -> list[SurfacePoint]:
        out: list[SurfacePoint] = []
        for c in self.cut_points:
            p = c.point
            if not any(abs(p.r - o.r) < tol and abs(wrap_angle(p.theta - o.theta)) < tol
                       for o in out):
                out.append(p)
        return out

    def as_dict(self) -> dict:
        return {"source": {"r": self.source.r, "theta": self.source.theta},
                "parallel_r": self.parallel_r,
                "max_parallel_deviation": self.max_parallel_deviation,
                "theta_extent": list(self.theta_extent) if self.theta_extent else None,
                "points": [c.as_dict() for c in self.cut_points]}

    def to_json(self, **kw) -> str:
        return json.dumps(self.as_dict(), **kw)


def fan_angles(fan_n: int) -> np.ndarray:
    """Symmetric direction fan avoiding the exact parallel and meridian directions.

    For even ``fan_n`` both ``-phi`` and ``pi - phi`` are members.
    """
    return -math.pi + (np.arange(fan_n) + 0.5) * TWO_PI / fan_n


def _partner_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    j = np.arange(n)
    return n - 1 - j, (n // 2 - 1 - j) % n


def _cubic(s0, h, y0, y1, d0, d1):
    def f(s):
        t = (s - s0) / h
        t2, t3 = t * t, t * t * t
        return ((2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * d0
                + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * h * d1)
    return f


def _interp_state(Y, s, step, s_star):
    """Cubic Hermite position ``(r, theta)`` of a sampled ``h``-trace at ``s_star``."""
    i = min(int(s_star / step), Y.shape[0] - 2)
    r = _cubic(s[i], step, Y[i, 0], Y[i + 1, 0], Y[i, 2], Y[i + 1, 2])(s_star)
    th = _cubic(s[i], step, Y[i, 1], Y[i + 1, 1], Y[i, 3], Y[i + 1, 3])(s_star)
    return float(r), float(th)


def maxwell_meeting(surface: Surface, fan: Fan, j: int, k: int, cap: float,
             rel_tol: float = 1e-5, abs_tol: float = 1e-7):
    """Earliest equal-arclength meeting of members ``j`` and ``k`` with ``s <= cap``."""
    step = fan.step
    n_use = min(fan.valid_length(j), fan.valid_length(k), int(cap / step) + 6)
    if n_use < 4:
        return None
    s = fan.s[:n_use]
    A, B = fan.Y[:n_use, :, j], fan.Y[:n_use, :, k]
    dth = wrap_angle(A[:, 1] - B[:, 1])
    mm = surface.m(0.5 * (A[:, 0] + B[:, 0]))
    D = np.sqrt((A[:, 0] - B[:, 0]) ** 2 + (mm * dth) ** 2)
    cand = np.flatnonzero((D[1:-1] <= D[:-2]) & (D[1:-1] <= D[2:])) + 1
    for i in cand:
        d_max = float(np.max(D[:i + 1]))
        if D[i] > 0.05 * d_max + 10 * step:
            continue
        lo, hi = s[max(i - 1, 0)], s[min(i + 1, n_use - 1)]

        def gap2(x):
            ra, ta = _interp_state(A, s, step, x)
            rb, tb = _interp_state(B, s, step, x)
            return (ra - rb) ** 2 + (surface.m(0.5 * (ra + rb)) * wrap_angle(ta - tb)) ** 2

        res = minimize_scalar(gap2, bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        d_min = math.sqrt(max(float(res.fun), 0.0))
        if d_min < abs_tol + rel_tol * d_max and res.x <= cap + 1e-6:
            return float(res.x), _interp_state(A, s, step, float(res.x))
        if s[i] > cap:
            break
    return None


def _fit_parallel(points: list[CutPoint]):
    if not points:
        return None, None
    rs = np.array([c.point.r for c in points])
    med = float(np.median(rs))
    return med, float(np.max(np.abs(rs - med)))


def _theta_extent(points: list[CutPoint], center: float):
    """Smallest and largest cut longitude, measured continuously around ``center``."""
    if not points:
        return None
    th = np.array([c.point.theta for c in points])
    rel = wrap_angle(th - center)
    return (float((center + rel.min()) % TWO_PI), float((center + rel.max()) % TWO_PI))


def riemann_cut_locus(surface: Surface, q: SurfacePoint, fan_n: int = 256,
                      length_cap: float | None = None, step: float = 1e-3,
                      endpoints: bool = True) -> CutLocusResult:
    """Cut locus of ``q`` for ``h`` from a symmetric fan of ``fan_n`` geodesics.

    Every direction contributes its earliest Maxwell point, or its first
    conjugate point if no partner meets it sooner.  With ``endpoints`` the
    conjugate points of the two geodesics tangent to the parallel of ``q``
    are added; they bound the arc on the antipodal parallel.
    """
    if fan_n < 64 or fan_n % 2:
        raise DomainError("fan_n must be an even integer >= 64")
    surface.require_inside(q.r)
    length_cap = TWO_PI if length_cap is None else float(length_cap)
    phis = fan_angles(fan_n)
    extra = np.array([0.0, math.pi]) if endpoints else np.empty(0)
    fan = integrate_h_fan(surface, q, np.concatenate([phis, extra]), length_cap, step)
    traces = [h_trace_from_fan(surface, fan, j) for j in range(fan.size)]
    conj = [first_conjugate_distance(surface, t) for t in traces]
    caps = [c if c is not None else t.length for c, t in zip(conj, traces)]
    neg, mirror = _partner_indices(fan_n)

    points: list[CutPoint] = []
    m_q = float(surface.m(q.r))
    for j in range(fan_n):
        best = None
        for k in (int(neg[j]), int(mirror[j])):
            cap = min(caps[j], caps[k])
            hit = maxwell_meeting(surface, fan, j, k, cap)
            if hit is not None and (best is None or hit[0] < best[0][0]):
                best = (hit, k)
        nu = m_q * math.cos(phis[j])
        if best is not None:
            (s_star, (r, th)), k = best
            points.append(CutPoint(q, SurfacePoint(r, th), s_star, CutKind.MAXWELL, nu,
                                   (float(phis[j]), float(phis[k]))))
        elif conj[j] is not None:
            r, th = _interp_state(fan.Y[:, :, j], fan.s, fan.step, conj[j])
            points.append(CutPoint(q, SurfacePoint(r, th), conj[j], CutKind.CONJUGATE, nu,
                                   (float(phis[j]),)))
    if endpoints:
        for j, phi in zip((fan_n, fan_n + 1), extra):
            if conj[j] is not None:
                r, th = _interp_state(fan.Y[:, :, j], fan.s, fan.step, conj[j])
                points.append(CutPoint(q, SurfacePoint(r, th), conj[j], CutKind.CONJUGATE,
                                       m_q * math.cos(phi), (float(phi),)))

    _warn_if_coarse(points[:fan_n] if len(points) >= fan_n else points, fan_n)
    par_r, dev = _fit_parallel(points)
    return CutLocusResult(q, points, par_r, dev, _theta_extent(points, q.theta + math.pi),
                          meta={"fan_n": fan_n, "step": step, "length_cap": length_cap})


def _warn_if_coarse(points: list[CutPoint], fan_n: int) -> None:
    if len(points) < 2:
        return
    th = np.array([c.point.theta for c in points])
    jumps = np.abs(wrap_angle(np.diff(th)))
    if np.any(jumps > 5 * math.pi / fan_n):
        warnings.warn(f"cut candidates jump by {jumps.max():.3g} in theta at fan_n={fan_n}",
                      FanTooCoarse, stacklevel=3)


def conjugate_locus(surface: Surface, q: SurfacePoint, fan_n: int = 256,
                    length_cap: float | None = None, step: float = 1e-3):
    """Per fan direction ``(phi, first conjugate point, distance)``; directions without one are omitted."""
    surface.require_inside(q.r)
    length_cap = TWO_PI if length_cap is None else float(length_cap)
    phis = fan_angles(fan_n)
    fan = integrate_h_fan(surface, q, phis, length_cap, step)
    out = []
    for j, phi in enumerate(phis):
        c = first_conjugate_distance(surface, h_trace_from_fan(surface, fan, j))
        if c is None:
            continue
        r, th = _interp_state(fan.Y[:, :, j], fan.s, fan.step, c)
        out.append((float(phi), SurfacePoint(r, th), c))
    return out


# ------------------------------------------------------------ Randers image


@dataclass(frozen=True)
class ChainCheck:
    defects: dict
    tolerances: dict
    where: dict

    @property
    def ok(self) -> bool:
        return all(self.defects[k] < self.tolerances[k] for k in self.defects)

    def failures(self) -> dict:
        return {k: f"defect {self.defects[k]:.3g} >= {self.tolerances[k]:g} at {self.where[k]}"
                for k in self.defects if not self.defects[k] < self.tolerances[k]}


CHAIN_TOLERANCES = {"C0": 1e-10, "C1": 1e-5, "C2": 1e-10}


def _chain_grid(surface: Surface, n: int):
    lo, hi = surface.poles
    margin = 0.05 * (hi - lo)
    rs = np.linspace(lo + margin, hi - margin, n)
    ths = np.linspace(0, TWO_PI, n, endpoint=False) + 0.1
    return [SurfacePoint(r, t) for r in rs for t in ths]


def check_chain(chain: NavigationChain, n: int = 12,
                tolerances: dict | None = None) -> ChainCheck:
    """Numerical certificates of the chain hypotheses.

    ``C0``: the first wind is Killing for ``h`` (Lie derivative of ``h``).
    ``C1``: every later Killing wind Poisson-commutes with the Hamiltonian of
    the preceding stage (finite differences).
    ``C2``: the one-form of the final stage is closed.
    """
    tol = dict(CHAIN_TOLERANCES, **(tolerances or {}))
    surface = chain.surface
    grid = _chain_grid(surface, n)
    defects = {"C0": 0.0, "C1": 0.0, "C2": 0.0}
    where = {"C0": None, "C1": None, "C2": None}

    def record(key, value, p):
        if where[key] is None or value > defects[key]:
            defects[key], where[key] = float(value), (round(p.r, 6), round(p.theta, 6))

    if chain.killing:
        for p in grid:
            record("C0", killing_defect(surface, chain.killing[0], p), p)
    covs = [(math.cos(a), math.sin(a)) for a in np.linspace(0, TWO_PI, 5, endpoint=False) + 0.3]
    for k in range(1, len(chain.killing)):
        nav = chain.stage(k - 1)
        for p in grid:
            for c in covs:
                record("C1", poisson_defect(nav, chain.killing[k], p, c), p)
    omega = navigation_one_form(surface, chain.cumulative_wind(len(chain.winds) - 1))
    for p in grid:
        record("C2", closedness_defect(omega, p), p)
    return ChainCheck(defects, tol, where)


def map_by_killing_flows(chain: NavigationChain, points: list[CutPoint],
                         step: float = 1e-3) -> list[CutPoint]:
    """Image ``p -> psi_l(phi_l(p))`` of each cut point at its own distance ``l``."""
    if not points:
        return []
    r = np.array([c.point.r for c in points])
    th = np.array([c.point.theta for c in points])
    t = np.array([c.distance for c in points])
    for V in chain.killing:
        flow = FlowMap(V, step=step, poles=chain.surface.poles,
                       pole_guard=chain.surface.pole_guard)
        r, th = flow.advance(r, th, t)
    return [CutPoint(c.source, SurfacePoint(ri, ti), c.distance, c.kind, c.nu, c.angles)
            for c, ri, ti in zip(points, r, th)]


def randers_cut_locus(chain: NavigationChain, q: SurfacePoint, fan_n: int = 256,
                      step: float = 1e-3, length_cap: float | None = None,
                      check: bool = True, tolerances: dict | None = None) -> CutLocusResult:
    """Cut locus of ``q`` for the final stage of ``chain``, as the flow image of the ``h``-cut locus.

    Raises :class:`PreconditionFailed` when ``check`` is on and a chain
    hypothesis fails.
    """
    cert = check_chain(chain, tolerances=tolerances) if check else None
    if cert is not None and not cert.ok:
        raise PreconditionFailed(cert.failures())
    base = riemann_cut_locus(chain.surface, q, fan_n, length_cap, step)
    mapped = map_by_killing_flows(chain, base.cut_points, step)
    par_r, dev = _fit_parallel(mapped)
    meta = dict(base.meta, winds=chain.ids,
                preconditions=cert.defects if cert is not None else None)
    return CutLocusResult(q, mapped, par_r, dev, _theta_extent(mapped, q.theta + math.pi), meta)
