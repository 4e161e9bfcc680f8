"""Brute-force distance-from-``q`` field and cut detection along single geodesics.

A fine fan of unit-speed geodesics from ``q`` is triangulated in the chart:
member ``j`` and ``j+1`` between samples ``i`` and ``i+1`` span two triangles
carrying the arclength at their vertices.  The forward distance at a point is
the smallest linearly interpolated arclength over all triangles covering it.
Triangles are bucketed on a regular ``(r, theta)`` grid for lookup.

Along a test geodesic ``gamma`` the defect ``g(s) = s - d(gamma(s))`` is zero
(up to interpolation error) before the cut point and grows afterwards; the
cut distance is the root of a low-order fit through the first samples where
``g`` exceeds a threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geodesics import Fan, wrap_angle

TWO_PI = 2 * math.pi


@dataclass
class DistanceField:
    tri: np.ndarray          # (n_tri, 3, 3): vertices (r, theta, s), theta unwrapped per triangle
    bins: tuple[int, int]
    r_range: tuple[float, float]
    order: np.ndarray        # triangle ids sorted by bin
    start: np.ndarray        # CSR offsets into ``order``

    @classmethod
    def from_fan(cls, fan: Fan, bins: tuple[int, int] = (400, 400),
                 r_range: tuple[float, float] = (0.0, math.pi)) -> "DistanceField":
        Y = fan.Y[:, :2, :]
        s = fan.s
        n_rec, _, n = Y.shape
        j0 = np.arange(n)
        j1 = (j0 + 1) % n
        R, T = Y[:, 0, :], Y[:, 1, :]
        S = np.broadcast_to(s[:, None], R.shape)

        def vert(i_sl, j):
            return np.stack([R[i_sl][:, j], T[i_sl][:, j], S[i_sl][:, j]], axis=-1)

        a, b = slice(0, n_rec - 1), slice(1, n_rec)
        p00, p01 = vert(a, j0), vert(a, j1)
        p10, p11 = vert(b, j0), vert(b, j1)
        tri = np.concatenate([np.stack([p00, p10, p11], axis=2),
                              np.stack([p00, p11, p01], axis=2)]).reshape(-1, 3, 3)
        tri = tri[np.isfinite(tri).all(axis=(1, 2))]
        # make every triangle compact in theta, anchored at its first vertex in [0, 2pi)
        base = tri[:, 0, 1] % TWO_PI
        tri[:, 1:, 1] = base[:, None] + wrap_angle(tri[:, 1:, 1] - tri[:, :1, 1])
        tri[:, 0, 1] = base
        return cls._bucket(tri, bins, r_range)

    @classmethod
    def _bucket(cls, tri, bins, r_range):
        nr, nt = bins
        r0, r1 = r_range
        dr, dt = (r1 - r0) / nr, TWO_PI / nt
        rmin = np.clip(((tri[:, :, 0].min(1) - r0) / dr).astype(int), 0, nr - 1)
        rmax = np.clip(((tri[:, :, 0].max(1) - r0) / dr).astype(int), 0, nr - 1)
        tmin = np.floor(tri[:, :, 1].min(1) / dt).astype(int)
        tmax = np.floor(tri[:, :, 1].max(1) / dt).astype(int)
        nri, nti = rmax - rmin + 1, tmax - tmin + 1
        count = nri * nti
        ids = np.repeat(np.arange(len(tri)), count)
        local = np.arange(count.sum()) - np.repeat(np.cumsum(count) - count, count)
        ri = np.repeat(rmin, count) + local // np.repeat(nti, count)
        ti = (np.repeat(tmin, count) + local % np.repeat(nti, count)) % nt
        key = ri * nt + ti
        order = np.argsort(key, kind="stable")
        start = np.searchsorted(key[order], np.arange(nr * nt + 1))
        return cls(tri, bins, r_range, ids[order], start)

    def __call__(self, r, theta) -> np.ndarray:
        """Interpolated distance at chart points (``inf`` where no triangle covers)."""
        r = np.atleast_1d(np.asarray(r, float))
        th = np.atleast_1d(np.asarray(theta, float)) % TWO_PI
        nr, nt = self.bins
        r0, r1 = self.r_range
        ri = np.clip(((r - r0) / ((r1 - r0) / nr)).astype(int), 0, nr - 1)
        ti = np.clip((th / (TWO_PI / nt)).astype(int), 0, nt - 1)
        key = ri * nt + ti
        lo, hi = self.start[key], self.start[key + 1]
        cnt = hi - lo
        q_idx = np.repeat(np.arange(len(r)), cnt)
        pos = np.repeat(lo - (np.cumsum(cnt) - cnt), cnt) + np.arange(cnt.sum())
        t_ids = self.order[pos]
        T = self.tri[t_ids]
        px = r[q_idx]
        py = th[q_idx]
        # bring the query longitude next to the triangle anchor
        py = T[:, 0, 1] + wrap_angle(py - T[:, 0, 1])
        x0, y0 = T[:, 0, 0], T[:, 0, 1]
        e1x, e1y = T[:, 1, 0] - x0, T[:, 1, 1] - y0
        e2x, e2y = T[:, 2, 0] - x0, T[:, 2, 1] - y0
        det = e1x * e2y - e1y * e2x
        with np.errstate(all="ignore"):
            u = ((px - x0) * e2y - (py - y0) * e2x) / det
            v = (e1x * (py - y0) - e1y * (px - x0)) / det
        eps = 1e-9
        inside = (np.abs(det) > 1e-18) & (u >= -eps) & (v >= -eps) & (u + v <= 1 + eps)
        u, v = np.where(inside, u, 0.0), np.where(inside, v, 0.0)
        val = np.where(inside, T[:, 0, 2] + u * (T[:, 1, 2] - T[:, 0, 2])
                       + v * (T[:, 2, 2] - T[:, 0, 2]), np.inf)
        out = np.full(len(r), np.inf)
        np.minimum.at(out, q_idx, val)
        return out


@dataclass(frozen=True)
class OracleCut:
    distance: float
    r: float
    theta: float
    residual: float


def cut_along(field: DistanceField, s, r, theta, threshold: float = 2e-4,
              s_min: float = 0.1, n_fit: int = 6) -> OracleCut | None:
    """First cut along a sampled geodesic from the defect ``s - d(gamma(s))``."""
    s = np.asarray(s, float)
    d = field(r, theta)
    g = s - d
    ok = (s > s_min) & np.isfinite(g)
    above = np.flatnonzero(ok & (g > threshold))
    # require the excess to persist so isolated interpolation noise is ignored
    first = None
    for i in above:
        if i + 2 < len(g) and g[i + 1] > threshold and g[i + 2] > threshold:
            first = int(i)
            break
    if first is None:
        return None
    idx = np.arange(first, min(first + n_fit, len(s)))
    coef = np.polyfit(s[idx], g[idx], 2 if len(idx) >= 4 else 1)
    roots = np.roots(coef)
    roots = roots[np.isreal(roots)].real
    roots = roots[roots <= s[first] + 1e-12]
    s_star = float(roots.max()) if roots.size else float(s[first])
    s_star = max(s_star, s[max(first - n_fit, 0)])
    r_star = float(np.interp(s_star, s, r))
    th_star = float(np.interp(s_star, s, theta))
    return OracleCut(s_star, r_star, th_star % TWO_PI, float(np.polyval(coef, s_star)))
