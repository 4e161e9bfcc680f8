"""Pointwise Riemannian and Randers metrics and Zermelo navigation.

Navigation data ``(h, V)`` with ``|V|_h < 1`` corresponds to the Randers
metric ``F = alpha + beta`` with

    a_ij = h_ij / lam + V_i V_j / lam^2,    b_i = -V_i / lam,

where ``V_i = h_ij V^j`` and ``lam = 1 - |V|_h^2``.  The inverse map is
``h_ij = eps (a_ij - b_i b_j)``, ``V^i = -b^i / eps`` with
``eps = 1 - |b|_alpha^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import NonConvexError
from .fields import VectorFieldSpec, sum_field, zero_field
from .surface import Surface, SurfacePoint


@dataclass(frozen=True)
class MetricMatrix:
    rr: float
    rt: float
    tt: float

    @classmethod
    def from_array(cls, g) -> "MetricMatrix":
        g = np.asarray(g, float)
        return cls(float(g[0, 0]), float(0.5 * (g[0, 1] + g[1, 0])), float(g[1, 1]))

    @property
    def array(self) -> np.ndarray:
        return np.array([[self.rr, self.rt], [self.rt, self.tt]])

    @property
    def det(self) -> float:
        return self.rr * self.tt - self.rt * self.rt

    @property
    def inverse(self) -> np.ndarray:
        d = self.det
        return np.array([[self.tt, -self.rt], [-self.rt, self.rr]]) / d

    def is_positive_definite(self) -> bool:
        return self.rr > 0 and self.det > 0

    def inner(self, y, z) -> float:
        return float(np.asarray(y, float) @ self.array @ np.asarray(z, float))

    def norm(self, y) -> float:
        return math.sqrt(max(self.inner(y, y), 0.0))


@dataclass(frozen=True)
class Covector:
    r: float
    t: float

    @property
    def array(self) -> np.ndarray:
        return np.array([self.r, self.t])

    def __call__(self, y) -> float:
        return float(self.r * y[0] + self.t * y[1])


def riemann_eval(surface: Surface, p: SurfacePoint) -> MetricMatrix:
    surface.require_inside(p.r)
    m = float(surface.m(p.r))
    return MetricMatrix(1.0, 0.0, m * m)


def navigation_to_randers(h: MetricMatrix, V) -> tuple[MetricMatrix, Covector]:
    """Randers data ``(a, b)`` of navigation data ``(h, V)`` at one point."""
    V = np.asarray(V, float)
    Vlow = h.array @ V
    lam = 1.0 - float(V @ Vlow)
    if lam <= 0:
        raise NonConvexError(f"|V|_h = {math.sqrt(1 - lam):.6g} >= 1")
    a = h.array / lam + np.outer(Vlow, Vlow) / lam ** 2
    b = -Vlow / lam
    return MetricMatrix.from_array(a), Covector(float(b[0]), float(b[1]))


def randers_to_navigation(a: MetricMatrix, b: Covector) -> tuple[MetricMatrix, np.ndarray]:
    """Navigation data ``(h, V)`` of Randers data ``(a, b)`` at one point."""
    bup = a.inverse @ b.array
    eps = 1.0 - float(b.array @ bup)
    if eps <= 0:
        raise NonConvexError(f"|b|_alpha = {math.sqrt(1 - eps):.6g} >= 1")
    h = eps * (a.array - np.outer(b.array, b.array))
    return MetricMatrix.from_array(h), -bup / eps


def zermelo_to_randers(surface: Surface, V: VectorFieldSpec,
                       p: SurfacePoint) -> tuple[MetricMatrix, Covector]:
    h = riemann_eval(surface, p)
    return navigation_to_randers(h, np.array(V(p.r, p.theta), float))


def randers_to_zermelo(a: MetricMatrix, b: Covector,
                       p: SurfacePoint | None = None) -> tuple[MetricMatrix, np.ndarray]:
    """Inverse of :func:`zermelo_to_randers`; ``p`` is only informational."""
    return randers_to_navigation(a, b)


def alpha_norm(a: MetricMatrix, y) -> float:
    return a.norm(y)


def randers_norm(a: MetricMatrix, b: Covector, y) -> float:
    """``F(y) = sqrt(a_ij y^i y^j) + b_i y^i``."""
    return a.norm(y) + b(y)


def epsilon(a: MetricMatrix, b: Covector) -> float:
    """``1 - |b|_alpha^2``; positive exactly when ``alpha + beta`` is a Randers norm."""
    return 1.0 - float(b.array @ a.inverse @ b.array)


def beta_change_matrix(a: MetricMatrix, b: Covector, W) -> tuple[MetricMatrix, Covector, float]:
    """Translate the indicatrix of ``alpha + beta`` by the vector ``W``.

    Returns ``(a~, b~, eta)`` with ``eta = [1 + F(W)][1 - F(-W)]``,
    ``W~_i = W_i - b_i (1 + beta(W))``, ``a~ = (a - b b)/eta + W~ W~ / eta^2``
    and ``b~ = -W~/eta``.
    """
    W = np.asarray(W, float)
    F_minus = randers_norm(a, b, -W)
    if F_minus >= 1:
        raise NonConvexError(f"F(-W) = {F_minus:.6g} >= 1")
    eta = (1 + randers_norm(a, b, W)) * (1 - F_minus)
    A = a.array
    bb = b.array
    Wt = A @ W - bb * (1 + float(bb @ W))
    a_new = (A - np.outer(bb, bb)) / eta + np.outer(Wt, Wt) / eta ** 2
    return MetricMatrix.from_array(a_new), Covector(*(-Wt / eta)), float(eta)


def legendre_covector(a: MetricMatrix, b: Covector, y) -> np.ndarray:
    """Legendre transform ``p = F(y) dF/dy`` of the Randers norm at ``y``."""
    y = np.asarray(y, float)
    al = a.norm(y)
    F = al + b(y)
    return F * (a.array @ y / al + b.array)


@dataclass(frozen=True)
class RandersMetricData:
    """Pointwise evaluators of a Randers metric ``alpha + beta``."""

    alpha_eval: Callable[[SurfacePoint], MetricMatrix] = field(repr=False)
    beta_eval: Callable[[SurfacePoint], Covector] = field(repr=False)
    tag: str = "F"

    def at(self, p: SurfacePoint) -> tuple[MetricMatrix, Covector]:
        return self.alpha_eval(p), self.beta_eval(p)

    def norm_b_alpha(self, p: SurfacePoint) -> float:
        a, b = self.at(p)
        return math.sqrt(max(0.0, 1.0 - epsilon(a, b)))

    def epsilon(self, p: SurfacePoint) -> float:
        return epsilon(*self.at(p))

    def __call__(self, p: SurfacePoint, y) -> float:
        return randers_norm(*self.at(p), y)

    @classmethod
    def from_navigation(cls, surface: Surface, wind: VectorFieldSpec,
                        tag: str = "F") -> "RandersMetricData":
        return cls(lambda p: zermelo_to_randers(surface, wind, p)[0],
                   lambda p: zermelo_to_randers(surface, wind, p)[1], tag)


def beta_change(F: RandersMetricData, W: VectorFieldSpec,
                p: SurfacePoint) -> tuple[MetricMatrix, Covector, float]:
    a, b = F.at(p)
    return beta_change_matrix(a, b, W(p.r, p.theta))


def beta_changed(F: RandersMetricData, W: VectorFieldSpec, tag: str = "F~") -> RandersMetricData:
    """The metric obtained from ``F`` by one navigation step with wind ``W``."""
    return RandersMetricData(lambda p: beta_change(F, W, p)[0],
                             lambda p: beta_change(F, W, p)[1], tag)


@dataclass(frozen=True)
class NavigationData:
    """Riemannian navigation data ``(h, wind)``.

    A Randers base with wind is represented through its total navigation wind:
    the data ``(F, W)`` where ``F`` comes from ``(h, V)`` is ``(h, V + W)``.
    """

    surface: Surface
    wind: VectorFieldSpec = field(default_factory=zero_field)

    def lam(self, p: SurfacePoint) -> float:
        wr, wt = self.wind(p.r, p.theta)
        m = float(self.surface.m(p.r))
        return 1.0 - float(wr * wr + (m * wt) ** 2)

    def hamiltonian(self, r, theta, p_r, p_t):
        """``K~ = |p|_{h*} + W^i p_i`` (vectorized)."""
        m = self.surface.m(r)
        wr, wt = self.wind(r, theta)
        return np.sqrt(p_r * p_r + (p_t / m) ** 2) + wr * p_r + wt * p_t

    def randers(self, tag: str = "F") -> RandersMetricData:
        return RandersMetricData.from_navigation(self.surface, self.wind, tag)


def hamiltonian_eval(nav: NavigationData, p: SurfacePoint, cov) -> float:
    nav.surface.require_inside(p.r)
    c = cov.array if isinstance(cov, Covector) else np.asarray(cov, float)
    return float(nav.hamiltonian(p.r, p.theta, c[0], c[1]))


@dataclass(frozen=True)
class NavigationChain:
    """A sequence of navigation steps ``h -> F_0 -> F_1 -> ...``.

    ``killing`` holds the winds expected to be Killing for the preceding
    metric (``V_0, V_1, ...``); ``closing`` holds the winds whose stages must
    have a closed one-form (``W_k, ...``).
    """

    surface: Surface
    killing: tuple[VectorFieldSpec, ...] = ()
    closing: tuple[VectorFieldSpec, ...] = ()

    @property
    def winds(self) -> tuple[VectorFieldSpec, ...]:
        return self.killing + self.closing

    def cumulative_wind(self, k: int) -> VectorFieldSpec:
        """Total navigation wind of stage ``F_k`` (sum of the first ``k+1`` winds)."""
        return sum_field(list(self.winds[:k + 1]))

    def stage(self, k: int) -> NavigationData:
        return NavigationData(self.surface, self.cumulative_wind(k))

    @property
    def final(self) -> NavigationData:
        return self.stage(len(self.winds) - 1)

    def stepwise_randers(self, k: int | None = None) -> RandersMetricData:
        """Stage ``F_k`` built by successive indicatrix translations."""
        k = len(self.winds) - 1 if k is None else k
        F = RandersMetricData.from_navigation(self.surface, self.winds[0], "F0")
        for i, W in enumerate(self.winds[1:k + 1], start=1):
            F = beta_changed(F, W, f"F{i}")
        return F

    @property
    def ids(self) -> list[str]:
        return [w.id for w in self.winds]


def make_chain(surface: Surface, killing: Sequence[VectorFieldSpec],
               closing: Sequence[VectorFieldSpec] = ()) -> NavigationChain:
    return NavigationChain(surface, tuple(killing), tuple(closing))
