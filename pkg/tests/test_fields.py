import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randers_sphere.errors import DomainError, PoleCrossing
from randers_sphere.fields import (FieldKind, FlowMap, beta_closedness_residual,
                                   closedness_defect, custom_field, flow_advance, h_norm2,
                                   is_killing_on_grid, killing_defect, navigation_one_form,
                                   parse_wind, poisson_defect, radial, rotation, sum_field,
                                   zero_field)
from randers_sphere.metrics import NavigationData
from randers_sphere.surface import SurfacePoint, make_surface

TS = make_surface("twisted-sine", alpha=0.25)
ROUND = make_surface("round")


def test_catalog_ids_round_trip():
    for fid in ("rotation:0.3", "radial:ratio", "radial:sin:0.4", "zero",
                "sum:[radial:ratio,rotation:-0.3]"):
        assert parse_wind(fid).id == fid
    assert parse_wind("sum:[rotation:0.1,sum:[rotation:0.2]]").kind is FieldKind.SUM
    for bad in ("rotation:x", "radial:nope", "sum:radial", "spin:1"):
        with pytest.raises(DomainError):
            parse_wind(bad)


def test_sum_components_and_partials():
    W = sum_field([radial("sin", c=0.3), rotation(0.2)])
    vr, vt = W(1.0, 0.5)
    assert vr == pytest.approx(0.3 * math.sin(1.0))
    assert vt == pytest.approx(0.2)
    assert W.partials(1.0, 0.5)[0] == pytest.approx(0.3 * math.cos(1.0))
    assert (rotation(0.1) + rotation(0.2)).kind is FieldKind.SUM


def test_radial_ratio_derivative():
    W = radial("ratio")
    for r in (0.2, 1.0, 2.5):
        fd = (W(r + 1e-6, 0.0)[0] - W(r - 1e-6, 0.0)[0]) / 2e-6
        assert W.partials(r, 0.0)[0] == pytest.approx(fd, abs=1e-8)


def test_killing_examples():
    p = SurfacePoint(1.0, 0.0)
    assert killing_defect(ROUND, rotation(0.7), p) < 1e-14
    # d/dtheta scaled by r is not Killing: the d_r V^theta term survives
    V = custom_field(lambda r, t: 0.0 * r, lambda r, t: r + 0.0 * t)
    assert killing_defect(ROUND, V, p) > 1e-3
    assert killing_defect(TS, radial("ratio"), p) > 1e-3
    ok, worst = is_killing_on_grid(TS, rotation(0.2), n=8)
    assert ok and worst < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 2.9), st.floats(0, 6.28), st.floats(-2, 2), st.floats(-2, 2))
def test_poisson_bracket_agrees_with_killing(r, th, pr, pt):
    nav = NavigationData(TS)
    p = SurfacePoint(r, th)
    assert poisson_defect(nav, rotation(0.3), p, (pr, pt)) < 1e-5


def test_poisson_bracket_detects_radial():
    nav = NavigationData(TS)
    assert poisson_defect(nav, radial("ratio"), SurfacePoint(1.0, 0.0), (0.3, 0.7)) > 1e-3


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 3.0), st.floats(0, 6.28), st.floats(-0.8, 0.8), st.floats(-0.4, 0.4))
def test_closedness_criteria_agree(r, th, c, mu):
    p = SurfacePoint(r, th)
    W = sum_field([radial("sin", c=c), rotation(mu / 2)])
    if h_norm2(TS, W, r, th) >= 0.95:
        return
    lam = 1 - h_norm2(TS, W, r, th)
    d = closedness_defect(navigation_one_form(TS, W), p)
    res = beta_closedness_residual(TS, W, p)
    assert d * lam == pytest.approx(abs(res), abs=1e-10)


def test_radial_wind_gives_closed_form():
    p = SurfacePoint(1.1, 0.3)
    assert closedness_defect(navigation_one_form(TS, radial("ratio")), p) < 1e-12
    assert closedness_defect(navigation_one_form(TS, rotation(0.3)), p) > 1e-3


def test_navigation_one_form_partials_match_differences():
    om = navigation_one_form(TS, sum_field([radial("ratio"), rotation(-0.2)]))
    r, th, e = 1.2, 0.4, 1e-6
    a = om.partials(r, th)
    fd_r = [(x - y) / (2 * e) for x, y in zip(om(r + e, th), om(r - e, th))]
    assert a[0] == pytest.approx(fd_r[0], abs=1e-7)
    assert a[2] == pytest.approx(fd_r[1], abs=1e-7)


def test_rotation_flow_is_exact():
    flow = FlowMap(rotation(0.3), step=1e-2)
    q = flow_advance(flow, SurfacePoint(1.0, 0.2), 2.0)
    assert q.r == pytest.approx(1.0)
    assert q.theta == pytest.approx(0.8)
    r, th = flow.advance([1.0, 2.0], [0.0, 0.0], [1.0, -1.0])
    assert th == pytest.approx([0.3, -0.3])


def test_radial_flow_solves_ode():
    # dr/dt = c sin r  =>  tan(r/2) grows like exp(c t)
    c, t = 0.5, 1.3
    r, _ = FlowMap(radial("sin", c=c), step=1e-3).advance([1.0], [0.0], t)
    assert math.tan(r[0] / 2) == pytest.approx(math.tan(0.5) * math.exp(c * t), rel=1e-10)


def test_flow_into_pole_raises():
    with pytest.raises(PoleCrossing):
        FlowMap(radial("const", c=1.0), step=1e-2).advance([3.0], [0.0], 1.0)


def test_zero_field():
    assert zero_field()(1.0, 2.0) == (0.0, 0.0)


def test_ratio_flow_matches_scalar_ode():
    from scipy.integrate import solve_ivp
    ref = solve_ivp(lambda t, r: r / np.sqrt(r * r + 1), (0, 0.5), [1.0], rtol=1e-13, atol=1e-14)
    r, th = FlowMap(radial("ratio"), step=1e-3).advance([1.0], [0.0], 0.5)
    assert r[0] == pytest.approx(ref.y[0, -1], abs=1e-10)
    assert th[0] == 0.0
