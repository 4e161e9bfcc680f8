"""Randomized property suites and end-to-end pipeline checks.

Every suite returns a :class:`SuiteResult`; the CLI ``verify-lemmas``
experiment and the acceptance tests share these functions so the numbers in
a report are exactly the ones the tests assert on.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .cutlocus import (CutKind, CutPoint, check_chain, half_period, map_by_killing_flows,
                       maxwell_meeting, riemann_cut_locus)
from .fields import (FlowMap, beta_closedness_residual, closedness_defect, h_norm2, killing_defect,
                     navigation_one_form, poisson_defect, radial, rotation, sum_field,
                     zero_field)
from .geodesics import (alpha_length, alpha_trace_from_fan, covector_for_angle,
                        deform_trace_by_flow, first_conjugate_distance, h_trace_from_fan, hausdorff_distance,
                        initial_covector, integrate_alpha_fan, integrate_h_batch,
                        integrate_h_fan, integrate_randers_fan, nav_trace_from_fan,
                        jacobi_determinant_conjugate, trace_distance, truncate_to_nearest,
                        wrap_angle)
from .metrics import (NavigationChain, NavigationData, beta_change_matrix, epsilon,
                      make_chain, navigation_to_randers, randers_norm,
                      randers_to_navigation, riemann_eval)
from .oracle import DistanceField, cut_along
from .surface import (Surface, SurfacePoint, closed_form_curvature, gauss_curvature,
                      make_surface)

DEFAULT_SEED = 42


@dataclass
class SuiteResult:
    name: str
    passed: bool
    trials: int
    agreed: int
    worst: float
    tolerance: float
    seconds: float = 0.0
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return (f"{flag} {self.name}: {self.agreed}/{self.trials}, worst={self.worst:.3e}, "
                f"tol={self.tolerance:.1e}, {self.seconds:.2f}s")


def _timed(fn):
    def run(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res
    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


def _rng(seed_or_rng):
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(DEFAULT_SEED if seed_or_rng is None else seed_or_rng)


def random_surface(rng) -> Surface:
    kind = rng.integers(3)
    if kind == 0:
        return make_surface("round")
    if kind == 1:
        return make_surface("twisted-sine", alpha=float(rng.uniform(0.05, 0.45)))
    return make_surface("arcsin-ratio", **{"lambda": float(rng.uniform(0.0, 3.0))})


def random_point(rng, margin: float = 0.1) -> SurfacePoint:
    return SurfacePoint(rng.uniform(margin, math.pi - margin), rng.uniform(0, 2 * math.pi))


def random_vector(rng, surface: Surface, p: SurfacePoint, max_norm: float) -> np.ndarray:
    """Chart components of a random tangent vector with ``|v|_h < max_norm``."""
    ang = rng.uniform(0, 2 * math.pi)
    mag = max_norm * math.sqrt(rng.uniform())
    return np.array([mag * math.cos(ang), mag * math.sin(ang) / float(surface.m(p.r))])


# --------------------------------------------------------------- pointwise


@_timed
def curvature_oracle(n: int = 1000, tol: float = 1e-8) -> SuiteResult:
    """``-m''/m`` against the explicit curvature formulas on an ``n``-point grid."""
    worst = 0.0
    details = {}
    for surf in (make_surface("twisted-sine", alpha=0.25),
                 make_surface("arcsin-ratio", **{"lambda": 1.0})):
        g = surf.pole_guard
        r = np.linspace(2 * g, math.pi - 2 * g, n)
        err = float(np.max(np.abs(gauss_curvature(surf, r) - closed_form_curvature(surf.profile, r))))
        details[surf.id] = err
        worst = max(worst, err)
    return SuiteResult("curvature-oracle", worst < tol, 2, sum(v < tol for v in details.values()),
                       worst, tol, details=details)


@_timed
def navigation_roundtrip(seed=None, n: int = 100, tol: float = 1e-10) -> SuiteResult:
    """``(h, V) -> (a, b) -> (h, V)`` at random admissible points."""
    rng = _rng(seed)
    worst, ok = 0.0, 0
    for _ in range(n):
        surf = random_surface(rng)
        p = random_point(rng)
        V = random_vector(rng, surf, p, 0.95)
        h = riemann_eval(surf, p)
        a, b = navigation_to_randers(h, V)
        h2, V2 = randers_to_navigation(a, b)
        err = max(float(np.max(np.abs(h2.array - h.array))), float(np.max(np.abs(V2 - V))))
        eps_err = abs(epsilon(a, b) - (1 - float(V @ h.array @ V)))
        err = max(err, eps_err)
        worst = max(worst, err)
        ok += err < tol
    return SuiteResult("navigation-roundtrip", ok == n, n, ok, worst, tol)


@_timed
def positivity_equivalence(seed=None, n: int = 1000) -> SuiteResult:
    """``F(-W) < 1`` iff ``|V + W|_h < 1`` for ``F`` from ``(h, V)``."""
    rng = _rng(seed)
    agree = 0
    margin = math.inf
    for _ in range(n):
        surf = random_surface(rng)
        p = random_point(rng)
        V = random_vector(rng, surf, p, 0.95)
        W = random_vector(rng, surf, p, 2.0)
        h = riemann_eval(surf, p)
        a, b = navigation_to_randers(h, V)
        lhs = randers_norm(a, b, -W) < 1
        U = V + W
        nu = float(U @ h.array @ U)
        rhs = nu < 1
        agree += lhs == rhs
        margin = min(margin, abs(nu - 1))
    return SuiteResult("positivity-equivalence", agree == n, n, agree, float(n - agree), 0.0,
                       details={"closest_to_boundary": margin})


@_timed
def sigma_identity(seed=None, n: int = 200, tol: float = 1e-12,
                   tol_metric: float = 1e-10) -> SuiteResult:
    """``1 - |V+W|_h^2 = eps * eta`` and the translated indicatrix equals navigation by ``V + W``."""
    rng = _rng(seed)
    worst_sigma, worst_metric, ok = 0.0, 0.0, 0
    done = 0
    while done < n:
        surf = random_surface(rng)
        p = random_point(rng)
        V = random_vector(rng, surf, p, 0.9)
        h = riemann_eval(surf, p)
        W = random_vector(rng, surf, p, 0.9)
        U = V + W
        sigma = 1 - float(U @ h.array @ U)
        if sigma <= 0.05:
            continue
        done += 1
        a, b = navigation_to_randers(h, V)
        at, bt, eta = beta_change_matrix(a, b, W)
        es = abs(sigma - epsilon(a, b) * eta)
        a2, b2 = navigation_to_randers(h, U)
        em = max(float(np.max(np.abs(at.array - a2.array))),
                 abs(bt.r - b2.r), abs(bt.t - b2.t))
        worst_sigma = max(worst_sigma, es)
        worst_metric = max(worst_metric, em)
        ok += (es < tol) and (em < tol_metric)
    return SuiteResult("sigma-identity", ok == n, n, ok, worst_sigma, tol,
                       details={"worst_translated_metric": worst_metric})


def _random_wind(rng, surface: Surface):
    m_max = float(surface.m(surface.equator))
    kind = int(rng.integers(5))
    if kind == 0:
        return radial("ratio"), True
    if kind == 1:
        return radial("sin", c=float(rng.uniform(-0.8, 0.8))), True
    if kind == 2:
        return rotation(float(rng.uniform(-0.9, 0.9)) / m_max), False
    if kind == 3:
        return sum_field([radial("sin", c=float(rng.uniform(-0.5, 0.5))),
                          rotation(float(rng.uniform(-0.4, 0.4)) / m_max)]), False
    return zero_field(), True


@_timed
def closedness_equivalence(seed=None, n: int = 200, tol: float = 1e-8) -> SuiteResult:
    """``d beta = 0`` iff ``dW# = dlog(lam) ^ W#`` (thresholded at ``tol``, scaled by ``lam``)."""
    rng = _rng(seed)
    agree = 0
    worst = 0.0
    done = 0
    while done < n:
        surf = random_surface(rng)
        W, _ = _random_wind(rng, surf)
        p = random_point(rng)
        if h_norm2(surf, W, p.r, p.theta) >= 0.98:
            continue
        done += 1
        lam = 1 - float(h_norm2(surf, W, p.r, p.theta))
        dbeta = closedness_defect(navigation_one_form(surf, W), p)
        res = beta_closedness_residual(surf, W, p)
        agree += (dbeta * lam < tol) == (abs(res) < tol)
        worst = max(worst, abs(dbeta * lam - abs(res)))
    return SuiteResult("closedness-equivalence", agree == n, n, agree, worst, tol)


@_timed
def killing_bracket_agreement(seed=None, n_points: int = 20) -> SuiteResult:
    """Lie-derivative test and Poisson-bracket test classify catalog fields alike."""
    rng = _rng(seed)
    surf = make_surface("twisted-sine", alpha=0.25)
    nav = NavigationData(surf)
    fields = [rotation(0.3), radial("ratio"), radial("sin", c=0.4), radial("const", c=0.2),
              sum_field([rotation(0.1), radial("ratio")])]
    agree = 0
    for W in fields:
        pts = [random_point(rng, 0.2) for _ in range(n_points)]
        covs = [rng.normal(size=2) for _ in range(n_points)]
        k_ok = all(killing_defect(surf, W, p) < 1e-10 for p in pts)
        b_ok = all(poisson_defect(nav, W, p, c) < 1e-5 for p, c in zip(pts, covs))
        agree += k_ok == b_ok
    return SuiteResult("killing-bracket", agree == len(fields), len(fields), agree,
                       float(len(fields) - agree), 0.0)


# ----------------------------------------------------------------- geodesic


@_timed
def clairaut_conservation(seed=None, n: int = 50, length: float = 2 * math.pi,
                          step: float = 1e-3, tol: float = 1e-8,
                          min_nu: float = 0.05) -> SuiteResult:
    """Drift of ``m^2 dtheta/ds`` along random ``h``-geodesics on the built-in surfaces.

    Initial conditions are uniform in the point and angle, conditioned on
    ``|nu| >= min_nu`` so every geodesic stays at least ``min_nu`` away from
    the poles.
    """
    rng = _rng(seed)
    details = {}
    worst = 0.0
    ok = 0
    for surf in (make_surface("round"), make_surface("twisted-sine", alpha=0.25),
                 make_surface("arcsin-ratio", **{"lambda": 1.0})):
        starts, phis = [], []
        while len(starts) < n:
            p, phi = random_point(rng, 0.3), rng.uniform(-math.pi, math.pi)
            # near-meridian geodesics graze a pole, where the polar chart is singular
            if abs(float(surf.m(p.r)) * math.cos(phi)) >= min_nu:
                starts.append(p)
                phis.append(phi)
        fan = integrate_h_batch(surf, [p.r for p in starts], [p.theta for p in starts],
                                phis, length, step)
        Y = fan.Y
        nu = surf.m(Y[:, 0, :]) ** 2 * Y[:, 3, :]
        d = np.nanmax(np.abs(nu - nu[0]), axis=0)
        speed = np.nanmax(np.abs(Y[:, 2, :] ** 2 + (surf.m(Y[:, 0, :]) * Y[:, 3, :]) ** 2 - 1))
        drift = float(np.max(d))
        details[surf.id] = {"nu_drift": drift, "unit_speed_drift": float(speed),
                            "halted": int(np.count_nonzero(fan.halt_reason))}
        ok += int(np.count_nonzero(d < tol))
        worst = max(worst, drift)
    return SuiteResult("clairaut-conservation", worst < tol, 3 * n, ok, worst, tol,
                       details=details)


@_timed
def round_sphere_suite(step: float = 1e-3) -> SuiteResult:
    """Conjugate distance, antipodal cut point and constant half period on the unit sphere."""
    surf = make_surface("round")
    q = SurfacePoint(math.pi / 2, 0.0)
    fan = integrate_h_fan(surf, q, np.linspace(-3, 3, 7), 3.5, step)
    conj_err = max(abs(first_conjugate_distance(surf, h_trace_from_fan(surf, fan, j)) - math.pi)
                   for j in range(fan.size))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = riemann_cut_locus(surf, q, fan_n=64, length_cap=3.5, step=step)
    cut_err = max(math.hypot(c.point.r - math.pi / 2, wrap_angle(c.point.theta - math.pi))
                  for c in res.cut_points)
    nus = np.linspace(0.05, 0.95, 16)
    hp_err = max(abs(half_period(surf, float(v), 1e-10) - math.pi) for v in nus)
    checks = {"conjugate": (conj_err, 1e-4), "cut": (cut_err, 1e-5), "half_period": (hp_err, 1e-8)}
    ok = sum(v < t for v, t in checks.values())
    return SuiteResult("round-sphere", ok == 3, 3, ok, max(v / t for v, t in checks.values()), 1.0,
                       details={k: v for k, (v, _) in checks.items()})


@_timed
def flow_correspondence(surface: Surface | None = None, wind=None,
                        q: SurfacePoint = SurfacePoint(math.pi / 3, 0.0),
                        phis=(0.2, 0.9, 1.7, -0.4, -1.3, 2.8), length: float = math.pi,
                        step: float = 1e-3, tol: float = 1e-5) -> SuiteResult:
    """Hamiltonian geodesics of navigation by a Killing wind versus ``s -> psi_s(P(s))``.

    ``P`` is the unit-speed ``h``-geodesic at angle ``phi`` and ``psi`` the
    flow of the wind; both are sampled on the same arclength grid.  The
    details also report the Hamiltonian drift along the direct geodesics.
    """
    surface = surface or make_surface("twisted-sine", alpha=0.25)
    wind = wind if wind is not None else rotation(0.3)
    nav = NavigationData(surface, wind)
    phis = np.asarray(phis, float)
    hfan = integrate_h_fan(surface, q, phis, length, step)
    rfan = integrate_randers_fan(nav, q, covector_for_angle(nav, q, phis), length, step)
    flow = FlowMap(wind, step)
    gaps, drift = [], 0.0
    for j in range(len(phis)):
        deformed = deform_trace_by_flow(h_trace_from_fan(surface, hfan, j), flow)
        direct = nav_trace_from_fan(nav, rfan, j, "F")
        gaps.append(trace_distance(direct, deformed, surface))
        K = nav.hamiltonian(direct.r, direct.theta, direct.p_r, direct.p_t)
        drift = max(drift, float(np.max(np.abs(K - 1))))
    worst = float(max(gaps))
    ok = sum(g < tol for g in gaps)
    return SuiteResult("flow-correspondence", ok == len(gaps), len(gaps), ok, worst, tol,
                       details={"gaps": gaps, "hamiltonian_drift": drift})


@_timed
def conjugate_correspondence(surface: Surface | None = None, wind=None,
                             q: SurfacePoint = SurfacePoint(math.pi / 3, 0.0),
                             phis=(0.2, -1.3), step: float = 1e-3,
                             tol: float = 1e-5) -> SuiteResult:
    """First conjugate distance of ``h`` versus the Jacobian-determinant zero of the Randers fan."""
    surface = surface or make_surface("twisted-sine", alpha=0.25)
    wind = wind if wind is not None else rotation(0.3)
    nav = NavigationData(surface, wind)
    fan = integrate_h_fan(surface, q, phis, 2 * math.pi, step)
    errs, rows = [], []
    for j, phi in enumerate(phis):
        c_h = first_conjugate_distance(surface, h_trace_from_fan(surface, fan, j))
        c_j = jacobi_determinant_conjugate(nav, q, float(phi), 2 * math.pi, step)
        err = abs(c_h - c_j) if c_h is not None and c_j is not None else math.inf
        errs.append(err)
        rows.append({"phi": phi, "h": c_h, "jacobian": None if c_j is None else float(c_j)})
    ok = sum(e < tol for e in errs)
    return SuiteResult("conjugate-correspondence", ok == len(errs), len(errs), ok,
                       float(max(errs)), tol, details={"rows": rows})


# -------------------------------------------------------------------- chain


def preset_chain(surface: Surface | None = None, mu0: float = 0.2,
                       mu1: float = 0.1) -> NavigationChain:
    """``V0 = mu0 d/dtheta``, ``V = mu1 d/dtheta``, ``W = A(r) d/dr - (mu0+mu1) d/dtheta``."""
    surface = surface or make_surface("twisted-sine", alpha=0.25)
    W = sum_field([radial("ratio"), rotation(-(mu0 + mu1))])
    return make_chain(surface, [rotation(mu0), rotation(mu1)], [W])


@_timed
def projective_check(chain: NavigationChain, q: SurfacePoint, phis=(0.3, 1.0, 2.0, -0.5, -2.5),
                     length: float = 2.5, step: float = 1e-3, tol: float = 1e-4) -> SuiteResult:
    """Final-stage geodesics versus ``alpha``-geodesics with the same initial direction, as point sets."""
    nav = chain.final
    surf = chain.surface
    phis = np.asarray(phis, float)
    m0 = float(surf.m(q.r))
    vel = np.stack([np.sin(phis), np.cos(phis) / m0])
    covs = np.stack([initial_covector(nav, q, vel[:, j]) for j in range(len(phis))], axis=1)
    fan = integrate_randers_fan(nav, q, covs, length, step)
    traces = [nav_trace_from_fan(nav, fan, j, "F") for j in range(len(phis))]
    need = max(alpha_length(nav, t) for t in traces)
    afan = integrate_alpha_fan(nav, q, vel, 1.02 * need + 10 * step, step)
    dists = []
    for j, tr in enumerate(traces):
        al = truncate_to_nearest(alpha_trace_from_fan(nav, afan, j), (tr.r[-1], tr.theta[-1]), surf)
        dists.append(hausdorff_distance(surf, tr, al))
    worst = float(max(dists))
    ok = sum(d < tol for d in dists)
    return SuiteResult("projective-point-sets", ok == len(dists), len(dists), ok, worst, tol,
                       details={"hausdorff": dists})


def h_cut_along(surface: Surface, q: SurfacePoint, phi: float, cap: float = 2 * math.pi,
                 step: float = 1e-3):
    fan = integrate_h_fan(surface, q, [phi, -phi, math.pi - phi], cap, step)
    caps = [first_conjugate_distance(surface, h_trace_from_fan(surface, fan, j)) or cap
            for j in range(3)]
    hits = [h for h in (maxwell_meeting(surface, fan, 0, 1, min(caps[0], caps[1])),
                        maxwell_meeting(surface, fan, 0, 2, min(caps[0], caps[2]))) if h is not None]
    if not hits:
        return caps[0], None
    s, pt = min(hits)
    return s, pt


ORACLE_DIRECTIONS = (0.4, 0.9, 1.3, -0.7, -1.2, math.pi - 0.6, math.pi - 1.1, -math.pi + 0.8)


@_timed
def oracle_cut_check(chain: NavigationChain, q: SurfacePoint, directions=ORACLE_DIRECTIONS,
                     fan_n: int = 1024, length: float = 5.0, step: float = 1e-3,
                     record_every: int = 4, grid: tuple[int, int] = (400, 400),
                     tol: float = 2e-3) -> SuiteResult:
    """Cut points from the brute-force distance field versus the flow-mapped ``h``-cut points.

    For each direction ``phi`` the final-stage geodesic starts with the
    velocity ``u + V0 + V1 + ...`` of the flow-deformed ``h``-geodesic.  The
    distance-field cut point on it is compared with the image of the
    ``h``-cut point under the Killing flows at the cut distance.
    """
    nav = chain.final
    surf = chain.surface
    fan_phis = -math.pi + (np.arange(fan_n) + 0.5) * 2 * math.pi / fan_n
    fan = integrate_randers_fan(nav, q, covector_for_angle(nav, q, fan_phis), length, step,
                                record_every)
    dfield = DistanceField.from_fan(fan, grid, surf.poles)
    m0 = float(surf.m(q.r))
    killing_total = sum_field(list(chain.killing)) if chain.killing else zero_field()
    kr, kt = killing_total(q.r, q.theta)
    gaps, rows = [], []
    for phi in directions:
        s_cut, pt = h_cut_along(surf, q, phi, step=step)
        if pt is None:
            gaps.append(math.inf)
            continue
        cp = CutPoint(q, SurfacePoint(*pt), s_cut, CutKind.MAXWELL, m0 * math.cos(phi))
        target = map_by_killing_flows(chain, [cp], step)[0].point
        vel = np.array([math.sin(phi) + float(kr), math.cos(phi) / m0 + float(kt)])
        cov = initial_covector(nav, q, vel)
        tf = integrate_randers_fan(nav, q, cov.reshape(2, 1), length, step, record_every)
        k = tf.valid_length(0)
        oc = cut_along(dfield, tf.s[:k], tf.Y[:k, 0, 0], tf.Y[:k, 1, 0])
        if oc is None:
            gaps.append(math.inf)
            continue
        gap = math.hypot(oc.r - target.r, float(surf.m(target.r)) * wrap_angle(oc.theta - target.theta))
        gaps.append(gap)
        rows.append({"phi": phi, "oracle": [oc.r, oc.theta, oc.distance],
                     "mapped": [target.r, target.theta, s_cut], "gap": gap})
    worst = float(max(gaps))
    ok = sum(g < tol for g in gaps)
    return SuiteResult("oracle-cut-agreement", ok == len(gaps), len(gaps), ok, worst, tol,
                       details={"directions": rows})


@_timed
def chain_preconditions(chain: NavigationChain) -> SuiteResult:
    cert = check_chain(chain)
    ok = sum(cert.defects[k] < cert.tolerances[k] for k in cert.defects)
    worst = max(cert.defects[k] / cert.tolerances[k] for k in cert.defects)
    return SuiteResult("chain-preconditions", cert.ok, len(cert.defects), ok, worst, 1.0,
                       details={"defects": cert.defects, "tolerances": cert.tolerances})


IDENTITY_SUITES = {
    "navigation-roundtrip": navigation_roundtrip,
    "positivity-equivalence": positivity_equivalence,
    "sigma-identity": sigma_identity,
    "closedness-equivalence": closedness_equivalence,
    "killing-bracket": killing_bracket_agreement,
}


def run_identity_suites(seed: int = DEFAULT_SEED) -> list[SuiteResult]:
    """All pointwise identity suites, each with its own generator seeded by ``seed``."""
    return [fn(seed) for fn in IDENTITY_SUITES.values()]

