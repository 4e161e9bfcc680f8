"""Chart vector fields, one-forms and their flows.

Fields are given in the ``(r, theta)`` chart by component functions and their
first partials.  Built-in kinds carry exact partials; custom fields fall back
on central differences with step :data:`FD_STEP`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, NonConvexError, PoleCrossing
from .surface import POLE_GUARD, Surface, SurfacePoint

FD_STEP = 1e-5


class FieldKind(str, enum.Enum):
    ROTATION = "rotation"
    RADIAL = "radial"
    SUM = "sum"
    CUSTOM = "custom"
    ZERO = "zero"


def _fd_partials(fn, r, theta, step=FD_STEP):
    """Central differences of a two-component chart function."""
    ar_p, at_p = fn(r + step, theta)
    ar_m, at_m = fn(r - step, theta)
    br_p, bt_p = fn(r, theta + step)
    br_m, bt_m = fn(r, theta - step)
    inv = 0.5 / step
    return ((ar_p - ar_m) * inv, (br_p - br_m) * inv,
            (at_p - at_m) * inv, (bt_p - bt_m) * inv)


@dataclass(frozen=True)
class VectorFieldSpec:
    """A vector field ``v_r d/dr + v_theta d/dtheta`` on the chart.

    ``components(r, theta)`` returns ``(v_r, v_theta)``; ``partials(r, theta)``
    returns ``(dv_r/dr, dv_r/dtheta, dv_theta/dr, dv_theta/dtheta)``.
    """

    kind: FieldKind
    id: str
    components: Callable = field(repr=False)
    _partials: Callable | None = field(default=None, repr=False)
    terms: tuple["VectorFieldSpec", ...] = ()

    def __call__(self, r, theta):
        return self.components(r, theta)

    def partials(self, r, theta):
        if self._partials is None:
            return _fd_partials(self.components, r, theta)
        return self._partials(r, theta)

    def __add__(self, other: "VectorFieldSpec") -> "VectorFieldSpec":
        return sum_field([self, other])


def _bcast(value, r, theta):
    return np.zeros(np.broadcast(np.asarray(r), np.asarray(theta)).shape) + value


def zero_field() -> VectorFieldSpec:
    def comp(r, theta):
        z = _bcast(0.0, r, theta)
        return z, z

    def part(r, theta):
        z = _bcast(0.0, r, theta)
        return z, z, z, z

    return VectorFieldSpec(FieldKind.ZERO, "zero", comp, part)


def rotation(mu: float) -> VectorFieldSpec:
    """The Killing field ``mu d/dtheta``."""
    mu = float(mu)

    def comp(r, theta):
        return _bcast(0.0, r, theta), _bcast(mu, r, theta)

    def part(r, theta):
        z = _bcast(0.0, r, theta)
        return z, z, z, z

    return VectorFieldSpec(FieldKind.ROTATION, f"rotation:{mu:g}", comp, part)


RADIAL_CATALOG = {
    "ratio": (lambda r, c: r / np.sqrt(r * r + 1), lambda r, c: (r * r + 1) ** -1.5),
    "sin": (lambda r, c: c * np.sin(r), lambda r, c: c * np.cos(r)),
    "const": (lambda r, c: c + 0.0 * r, lambda r, c: 0.0 * r),
}


def radial(name: str = "ratio", c: float = 1.0, A: Callable | None = None,
           dA: Callable | None = None) -> VectorFieldSpec:
    """A radial field ``A(r) d/dr``.

    ``name`` selects ``A`` from the catalog: ``ratio`` is ``r/sqrt(r^2+1)``,
    ``sin`` is ``c sin r`` and ``const`` is ``c``.  Passing ``A`` (and
    optionally ``dA``) gives a custom profile.
    """
    if A is None:
        if name not in RADIAL_CATALOG:
            raise DomainError(f"unknown radial profile {name!r}")
        fA, fdA = RADIAL_CATALOG[name]
        c = float(c)
        A = lambda r: fA(r, c)  # noqa: E731
        dA = lambda r: fdA(r, c)  # noqa: E731
        fid = "radial:ratio" if name == "ratio" else f"radial:{name}:{c:g}"
    else:
        fid = "radial:custom"
        if dA is None:
            dA = lambda r: (A(r + FD_STEP) - A(r - FD_STEP)) / (2 * FD_STEP)  # noqa: E731

    def comp(r, theta):
        return _bcast(A(np.asarray(r, float)), r, theta), _bcast(0.0, r, theta)

    def part(r, theta):
        z = _bcast(0.0, r, theta)
        return _bcast(dA(np.asarray(r, float)), r, theta), z, z, z

    return VectorFieldSpec(FieldKind.RADIAL, fid, comp, part)


def custom_field(vr: Callable, vt: Callable, partials: Callable | None = None,
                 name: str = "custom") -> VectorFieldSpec:
    def comp(r, theta):
        return _bcast(vr(r, theta), r, theta), _bcast(vt(r, theta), r, theta)

    return VectorFieldSpec(FieldKind.CUSTOM, name, comp, partials)


def sum_field(fields: Sequence[VectorFieldSpec]) -> VectorFieldSpec:
    flat: list[VectorFieldSpec] = []
    for f in fields:
        flat.extend(f.terms if f.kind is FieldKind.SUM else (f,))
    if not flat:
        return zero_field()

    def comp(r, theta):
        vr = _bcast(0.0, r, theta)
        vt = _bcast(0.0, r, theta)
        for f in flat:
            a, b = f.components(r, theta)
            vr = vr + a
            vt = vt + b
        return vr, vt

    def part(r, theta):
        acc = [_bcast(0.0, r, theta) for _ in range(4)]
        for f in flat:
            acc = [x + y for x, y in zip(acc, f.partials(r, theta))]
        return tuple(acc)

    fid = "sum:[" + ",".join(f.id for f in flat) + "]"
    return VectorFieldSpec(FieldKind.SUM, fid, comp, part, tuple(flat))


def _split_top_level(text: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
            continue
        depth += ch == "["
        depth -= ch == "]"
        cur.append(ch)
    if cur:
        parts.append("".join(cur))
    return [p.strip() for p in parts if p.strip()]


def parse_wind(spec: str) -> VectorFieldSpec:
    """Parse a catalog id such as ``rotation:0.3`` or ``sum:[radial:ratio,rotation:-0.3]``."""
    spec = spec.strip()
    try:
        if spec == "zero":
            return zero_field()
        if spec.startswith("sum:"):
            body = spec[4:].strip()
            if not (body.startswith("[") and body.endswith("]")):
                raise ValueError("sum needs a bracketed list")
            return sum_field([parse_wind(p) for p in _split_top_level(body[1:-1])])
        head, _, rest = spec.partition(":")
        if head == "rotation":
            return rotation(float(rest))
        if head == "radial":
            name, _, c = rest.partition(":")
            if name == "ratio" and not c:
                return radial("ratio")
            if name in ("sin", "const"):
                return radial(name, float(c))
    except ValueError as exc:
        raise DomainError(f"bad wind id {spec!r}: {exc}") from None
    raise DomainError(f"bad wind id {spec!r}")


def h_norm2(surface: Surface, W: VectorFieldSpec, r, theta):
    wr, wt = W(r, theta)
    return wr * wr + (surface.m(r) * wt) ** 2


@dataclass(frozen=True)
class OneForm:
    """A one-form ``w_r dr + w_theta dtheta`` with optional analytic partials.

    ``partials(r, theta)`` returns ``(dw_r/dr, dw_r/dtheta, dw_theta/dr,
    dw_theta/dtheta)``.
    """

    components: Callable = field(repr=False)
    _partials: Callable | None = field(default=None, repr=False)

    def __call__(self, r, theta):
        return self.components(r, theta)

    def partials(self, r, theta):
        if self._partials is None:
            return _fd_partials(self.components, r, theta)
        return self._partials(r, theta)


def _lowered(surface: Surface, W: VectorFieldSpec, r, theta):
    """``W^#`` components, ``lambda = 1 - |W|^2`` and all their first partials."""
    m, dm = surface.m(r), surface.dm(r)
    wr, wt = W(r, theta)
    dwr_r, dwr_t, dwt_r, dwt_t = W.partials(r, theta)
    low_r, low_t = wr, m * m * wt
    dlow = (dwr_r, dwr_t, 2 * m * dm * wt + m * m * dwt_r, m * m * dwt_t)
    lam = 1 - wr * wr - m * m * wt * wt
    dlam_r = -(2 * wr * dwr_r + 2 * m * dm * wt * wt + 2 * m * m * wt * dwt_r)
    dlam_t = -(2 * wr * dwr_t + 2 * m * m * wt * dwt_t)
    return (low_r, low_t), dlow, lam, (dlam_r, dlam_t)


def navigation_one_form(surface: Surface, W: VectorFieldSpec) -> OneForm:
    """The Randers one-form ``beta = -W^#/lambda`` of navigation data ``(h, W)``."""

    def comp(r, theta):
        (lr, lt), _, lam, _ = _lowered(surface, W, r, theta)
        return -lr / lam, -lt / lam

    def part(r, theta):
        (lr, lt), (a, b, c, d), lam, (lr_, lt_) = _lowered(surface, W, r, theta)
        q = lam * lam
        return (-(a * lam - lr * lr_) / q, -(b * lam - lr * lt_) / q,
                -(c * lam - lt * lr_) / q, -(d * lam - lt * lt_) / q)

    return OneForm(comp, part)


def one_form_from_navigation(surface: Surface, W: VectorFieldSpec,
                             p: SurfacePoint) -> tuple[float, float]:
    """Value of ``beta = -W_i/lambda dx^i`` at ``p``."""
    surface.require_inside(p.r)
    lam = 1 - h_norm2(surface, W, p.r, p.theta)
    if lam <= 0:
        raise NonConvexError(f"|W|_h >= 1 at {p}")
    br, bt = navigation_one_form(surface, W)(p.r, p.theta)
    return float(br), float(bt)


def closedness_defect(omega: OneForm, p: SurfacePoint) -> float:
    """``|d_r omega_theta - d_theta omega_r|`` at ``p``."""
    _, dr_t, dt_r, _ = omega.partials(p.r, p.theta)
    return float(abs(dt_r - dr_t))


def beta_closedness_residual(surface: Surface, W: VectorFieldSpec, p: SurfacePoint) -> float:
    """``(dW^# - dlog(lambda) ^ W^#)_{r theta}`` at ``p``.

    Vanishes exactly where the navigation one-form of ``(h, W)`` is closed.
    """
    surface.require_inside(p.r)
    (lr, lt), (_, dlr_t, dlt_r, _), lam, (dlam_r, dlam_t) = _lowered(
        surface, W, p.r, p.theta)
    if lam <= 0:
        raise NonConvexError(f"|W|_h >= 1 at {p}")
    d_low = dlt_r - dlr_t
    wedge = (dlam_r * lt - dlam_t * lr) / lam
    return float(d_low - wedge)


def killing_defect(surface: Surface, V: VectorFieldSpec, p: SurfacePoint) -> float:
    """Frobenius norm of the Lie derivative ``L_V h`` at ``p``."""
    surface.require_inside(p.r)
    r, th = p.r, p.theta
    m, dm = surface.m(r), surface.dm(r)
    vr, _ = V(r, th)
    dvr_r, dvr_t, dvt_r, dvt_t = V.partials(r, th)
    l_rr = 2 * dvr_r
    l_rt = m * m * dvt_r + dvr_t
    l_tt = 2 * m * dm * vr + 2 * m * m * dvt_t
    return float(math.sqrt(l_rr ** 2 + 2 * l_rt ** 2 + l_tt ** 2))


def is_killing_on_grid(surface: Surface, V: VectorFieldSpec, n: int = 32,
                       tol: float = 1e-10) -> tuple[bool, float]:
    g = surface.pole_guard
    lo, hi = surface.poles
    rs = np.linspace(lo + 10 * g, hi - 10 * g, n)
    ths = np.linspace(0, 2 * math.pi, n, endpoint=False)
    worst = max(killing_defect(surface, V, SurfacePoint(r, t)) for r in rs for t in ths)
    return worst < tol, worst


def poisson_defect(nav, W: VectorFieldSpec, p: SurfacePoint, cov,
                   step: float = FD_STEP) -> float:
    """``|{K, W*}|`` at ``(p, cov)`` by central differences.

    ``nav`` supplies the Hamiltonian through ``nav.hamiltonian(r, theta, p_r,
    p_theta)``; ``W* = W^i p_i``.
    """
    nav.surface.require_inside(p.r)
    x = np.array([p.r, p.theta], float)
    q = np.array([cov[0], cov[1]], float)

    def K(x_, q_):
        return float(nav.hamiltonian(x_[0], x_[1], q_[0], q_[1]))

    def Wstar(x_, q_):
        wr, wt = W(x_[0], x_[1])
        return float(wr * q_[0] + wt * q_[1])

    def grad(f, which):
        out = np.empty(2)
        for i in range(2):
            e = np.zeros(2)
            e[i] = step
            if which == "x":
                out[i] = (f(x + e, q) - f(x - e, q)) / (2 * step)
            else:
                out[i] = (f(x, q + e) - f(x, q - e)) / (2 * step)
        return out

    bracket = grad(K, "x") @ grad(Wstar, "p") - grad(K, "p") @ grad(Wstar, "x")
    return float(abs(bracket))


@dataclass(frozen=True)
class FlowMap:
    """Flow of a chart vector field, integrated with fixed-step RK4."""

    generator: VectorFieldSpec
    step: float = 1e-3
    method: str = "rk4"
    poles: tuple[float, float] = (0.0, math.pi)
    pole_guard: float = POLE_GUARD

    def advance(self, r, theta, t):
        """Flow arrays of points by (per-point) times ``t``; theta is not wrapped."""
        r = np.array(r, float, ndmin=1)
        theta = np.array(theta, float, ndmin=1)
        t = np.broadcast_to(np.asarray(t, float), r.shape).copy()
        tmax = float(np.max(np.abs(t))) if t.size else 0.0
        if tmax == 0.0:
            return r, theta
        n = max(1, math.ceil(tmax / self.step - 1e-9))
        d = 1.0 / n
        V = self.generator
        lo, hi = self.poles[0] + self.pole_guard, self.poles[1] - self.pole_guard

        def rhs(a, b):
            vr, vt = V(a, b)
            return t * vr, t * vt

        # Integrate in normalized time tau in [0, 1]: dp/dtau = t V(p).
        for _ in range(n):
            k1 = rhs(r, theta)
            k2 = rhs(r + 0.5 * d * k1[0], theta + 0.5 * d * k1[1])
            k3 = rhs(r + 0.5 * d * k2[0], theta + 0.5 * d * k2[1])
            k4 = rhs(r + d * k3[0], theta + d * k3[1])
            r = r + d / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            theta = theta + d / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
            if np.any((r <= lo) | (r >= hi)):
                raise PoleCrossing("flow trajectory entered the pole guard band")
        return r, theta


def flow_advance(flow: FlowMap, p: SurfacePoint, t: float) -> SurfacePoint:
    r, th = flow.advance([p.r], [p.theta], t)
    return SurfacePoint(r[0], th[0])
