"""Profile and warp functions of two-spheres of revolution.

A two-sphere of revolution is described in geodesic polar coordinates
``(r, theta)`` by ``h = dr^2 + m(r)^2 dtheta^2``.  The warp ``m`` is generated
from a profile ``h(r)`` as ``m(r) = a sin h(r)`` with ``a = 1/h'(0)``.

All evaluators accept scalars or numpy arrays.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import DomainError, PoleCrossing, UnsupportedFamily

POLE_GUARD = 1e-6

RealFn = Callable[[np.ndarray], np.ndarray]


class Family(str, enum.Enum):
    ROUND = "round"
    TWISTED_SINE = "twisted-sine"
    ARCSIN_RATIO = "arcsin-ratio"
    CUSTOM = "custom"


@dataclass(frozen=True)
class ProfileSpec:
    """A profile ``h`` together with its first two derivatives."""

    family: Family
    params: Mapping[str, float]
    h: RealFn = field(repr=False)
    dh: RealFn = field(repr=False)
    d2h: RealFn = field(repr=False)

    @property
    def id(self) -> str:
        return self.family.value


def _round_profile():
    return (lambda r: np.asarray(r, float) * 1.0,
            lambda r: np.ones_like(np.asarray(r, float)),
            lambda r: np.zeros_like(np.asarray(r, float)))


def _twisted_sine_profile(alpha: float):
    def h(r):
        return r - alpha * np.sin(2 * r)

    def dh(r):
        return 1 - 2 * alpha * np.cos(2 * r)

    def d2h(r):
        return 4 * alpha * np.sin(2 * r)

    return h, dh, d2h


def _arcsin_ratio_profile(lam: float):
    # atan2 keeps h continuous past pi/2, so h(pi - r) = pi - h(r) holds.
    k = math.sqrt(1 + lam)

    def h(r):
        return np.arctan2(np.sin(r), k * np.cos(r))

    def dh(r):
        return k / (1 + lam * np.cos(r) ** 2)

    def d2h(r):
        return k * lam * np.sin(2 * r) / (1 + lam * np.cos(r) ** 2) ** 2

    return h, dh, d2h


def make_profile(family: Family | str, params: Mapping[str, float] | None = None,
                 **kwargs) -> ProfileSpec:
    """Build a profile of a built-in family or a custom one.

    Built-in parameters: ``alpha`` for ``twisted-sine`` (``0 < alpha < 1/2``)
    and ``lambda`` (or ``lam``) for ``arcsin-ratio`` (``lambda >= 0``).
    Custom profiles pass ``h``, ``dh`` and ``d2h`` callables as keywords.
    """
    family = Family(family)
    params = dict(params or {})
    funcs = {k: kwargs.pop(k) for k in ("h", "dh", "d2h") if k in kwargs}
    params.update(kwargs)

    if family is Family.ROUND:
        h, dh, d2h = _round_profile()
        params = {}
    elif family is Family.TWISTED_SINE:
        alpha = float(params.get("alpha", 0.25))
        if not 0.0 < alpha < 0.5:
            raise DomainError(f"twisted-sine needs 0 < alpha < 1/2, got {alpha}")
        h, dh, d2h = _twisted_sine_profile(alpha)
        params = {"alpha": alpha}
    elif family is Family.ARCSIN_RATIO:
        lam = float(params.get("lambda", params.get("lam", 1.0)))
        if not lam >= 0.0:
            raise DomainError(f"arcsin-ratio needs lambda >= 0, got {lam}")
        h, dh, d2h = _arcsin_ratio_profile(lam)
        params = {"lambda": lam}
    else:
        missing = {"h", "dh", "d2h"} - set(funcs)
        if missing:
            raise DomainError(f"custom profile needs callables {sorted(missing)}")
        h, dh, d2h = funcs["h"], funcs["dh"], funcs["d2h"]
    return ProfileSpec(family, params, h, dh, d2h)


@dataclass(frozen=True)
class ConditionReport:
    c1: bool
    c2: bool
    c3: bool
    worst: Mapping[str, tuple[float, float]]
    """Per condition: (grid point, value) of the worst case.

    For c1 the value is ``|h(pi-r) - pi + h(r)|``; for c2 and c3 it is the
    minimum of ``h'`` resp. ``h''``.
    """

    @property
    def all(self) -> bool:
        return self.c1 and self.c2 and self.c3


def check_profile_conditions(spec: ProfileSpec, grid_n: int = 256,
                             tol: float = 1e-12) -> ConditionReport:
    """Check symmetry (c1), monotonicity (c2) and strict convexity (c3) on a grid."""
    if grid_n < 16:
        raise DomainError("grid_n must be at least 16")
    half = math.pi / 2
    # (c2) includes r = 0; (c1) and (c3) use the open interval.
    closed = np.linspace(0.0, half, grid_n, endpoint=False)
    open_ = closed[1:]

    sym = np.abs(spec.h(math.pi - open_) - math.pi + spec.h(open_))
    i1 = int(np.argmax(sym))
    d1 = spec.dh(closed)
    i2 = int(np.argmin(d1))
    d2 = spec.d2h(open_)
    i3 = int(np.argmin(d2))
    return ConditionReport(
        c1=bool(sym[i1] < tol),
        c2=bool(d1[i2] > 0),
        c3=bool(d2[i3] > 0),
        worst={"c1": (float(open_[i1]), float(sym[i1])),
               "c2": (float(closed[i2]), float(d1[i2])),
               "c3": (float(open_[i3]), float(d2[i3]))},
    )


@dataclass(frozen=True)
class Surface:
    """Warped metric ``dr^2 + m(r)^2 dtheta^2`` between two poles."""

    profile: ProfileSpec
    pole_guard: float = POLE_GUARD
    poles: tuple[float, float] = (0.0, math.pi)

    @property
    def a(self) -> float:
        return 1.0 / float(self.profile.dh(self.poles[0]))

    @property
    def equator(self) -> float:
        return 0.5 * (self.poles[0] + self.poles[1])

    @property
    def id(self) -> str:
        return self.profile.id

    def m(self, r):
        return self.a * np.sin(self.profile.h(r))

    def dm(self, r):
        p = self.profile
        return self.a * np.cos(p.h(r)) * p.dh(r)

    def d2m(self, r):
        p = self.profile
        hr = p.h(r)
        return self.a * (np.cos(hr) * p.d2h(r) - np.sin(hr) * p.dh(r) ** 2)

    def inside(self, r) -> np.ndarray:
        r = np.asarray(r, float)
        lo, hi = self.poles
        return (r > lo + self.pole_guard) & (r < hi - self.pole_guard)

    def require_inside(self, r) -> None:
        if not np.all(self.inside(r)):
            raise PoleCrossing(f"r={r!r} lies within {self.pole_guard:g} of a pole")


def make_surface(family: Family | str = Family.ROUND, pole_guard: float = POLE_GUARD,
                 **params) -> Surface:
    return Surface(make_profile(family, **params), pole_guard=pole_guard)


@dataclass(frozen=True)
class SurfacePoint:
    r: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "r", float(self.r))
        object.__setattr__(self, "theta", float(self.theta) % (2 * math.pi))

    def as_tuple(self) -> tuple[float, float]:
        return (self.r, self.theta)


def gauss_curvature(surface: Surface, r):
    """Gaussian curvature ``-m''/m`` from the analytic second derivative."""
    surface.require_inside(r)
    return -surface.d2m(r) / surface.m(r)


def closed_form_curvature(spec: ProfileSpec, r, pole_guard: float = POLE_GUARD):
    """Explicit curvature formula of the twisted-sine / arcsin-ratio families.

    twisted-sine: ``(1 - 2 alpha cos 2r)^2 - 4 alpha sin 2r cot(r - alpha sin 2r)``;
    arcsin-ratio: ``(1 + lambda)(1 - 2 lambda cos^2 r) / (1 + lambda cos^2 r)^2``.
    Used as an independent oracle for :func:`gauss_curvature`.
    """
    r = np.asarray(r, float)
    if np.any((r <= pole_guard) | (r >= math.pi - pole_guard)):
        raise PoleCrossing("closed-form curvature is evaluated away from the poles")
    if spec.family is Family.TWISTED_SINE:
        al = spec.params["alpha"]
        # G = h'^2 - h'' cot(h)
        return (1 - 2 * al * np.cos(2 * r)) ** 2 - 4 * al * np.sin(2 * r) / np.tan(r - al * np.sin(2 * r))
    if spec.family is Family.ARCSIN_RATIO:
        lam = spec.params["lambda"]
        c = np.cos(r) ** 2
        return (1 + lam) * (1 - 2 * lam * c) / (1 + lam * c) ** 2
    raise UnsupportedFamily(f"no closed-form curvature for family {spec.family.value!r}")
