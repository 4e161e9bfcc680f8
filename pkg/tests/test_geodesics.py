import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randers_sphere.errors import DomainError, NonConvexError
from randers_sphere.fields import FlowMap, radial, rotation
from randers_sphere.geodesics import (TRACE_COLUMNS, alpha_length, clairaut_constant,
                                      covector_for_angle, deform_trace_by_flow,
                                      first_conjugate_distance, h_trace_from_fan,
                                      hamiltonian_along, hausdorff_distance, initial_covector,
                                      integrate_alpha_geodesic, integrate_h_fan,
                                      integrate_h_geodesic, integrate_randers_geodesic,
                                      jacobi_determinant_conjugate, state_from_angle,
                                      trace_distance, trace_envelope, truncate_to_nearest,
                                      wrap_angle,
                                      write_trace_csv)
from randers_sphere.metrics import NavigationData
from randers_sphere.surface import Surface, SurfacePoint, make_profile, make_surface

TS = make_surface("twisted-sine", alpha=0.25)
ROUND = make_surface("round")
Q = SurfacePoint(math.pi / 3, 0.0)


def test_wrap_angle():
    assert wrap_angle(3 * math.pi) == pytest.approx(math.pi)
    assert wrap_angle(-0.5) == pytest.approx(-0.5)
    assert wrap_angle(2 * math.pi + 0.1) == pytest.approx(0.1)


def test_state_angle_convention():
    st0 = state_from_angle(TS, Q, 0.3)
    m = float(TS.m(Q.r))
    assert st0.dr == pytest.approx(math.sin(0.3))
    assert m * st0.dtheta == pytest.approx(math.cos(0.3))
    assert clairaut_constant(TS, st0) == pytest.approx(m * math.cos(0.3))
    assert st0.clairaut_nu == pytest.approx(clairaut_constant(TS, st0))


def test_round_sphere_equator_is_great_circle():
    tr = integrate_h_geodesic(ROUND, state_from_angle(ROUND, SurfacePoint(math.pi / 2, 0), 0.0),
                              math.pi, math.pi / 400)
    assert np.max(np.abs(tr.r - math.pi / 2)) < 1e-12
    assert tr.theta[-1] == pytest.approx(math.pi, abs=1e-10)


def test_round_sphere_meridian_reaches_antipode():
    tr = integrate_h_geodesic(ROUND, state_from_angle(ROUND, SurfacePoint(math.pi / 2, 0.0), 0.4),
                              math.pi, math.pi / 2000)
    # every geodesic from the equator returns to the equator at the antipode
    assert tr.r[-1] == pytest.approx(math.pi / 2, abs=1e-9)
    assert wrap_angle(tr.theta[-1] - math.pi) == pytest.approx(0.0, abs=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.4, 2.7), st.floats(-math.pi, math.pi))
def test_clairaut_and_unit_speed(r0, phi):
    p = SurfacePoint(r0, 0.0)
    if abs(float(TS.m(r0)) * math.cos(phi)) < 0.05:
        return
    tr = integrate_h_geodesic(TS, state_from_angle(TS, p, phi), 2.0, 2e-3)
    assert np.max(np.abs(tr.nu - tr.nu[0])) < 1e-8
    assert np.max(np.abs(tr.dr ** 2 + (TS.m(tr.r) * tr.dtheta) ** 2 - 1)) < 1e-8


def test_near_pole_drift_is_chart_limited():
    """Geodesics that graze a pole lose Clairaut accuracy to the polar chart.

    With ``nu = 0.003`` the drift is of order 1e-6 at step 1e-3; it drops to
    round-off once ``|nu| >= 0.05``.  The conservation suite samples on that side.
    """
    phi = math.acos(0.003 / float(TS.m(Q.r)))
    fan = integrate_h_fan(TS, Q, [phi, 0.5], 2 * math.pi, 1e-3)
    grazing, regular = (h_trace_from_fan(TS, fan, j) for j in range(2))
    d_graze = float(np.max(np.abs(grazing.nu - grazing.nu[0])))
    d_reg = float(np.max(np.abs(regular.nu - regular.nu[0])))
    assert d_reg < 1e-9
    assert d_graze > 100 * d_reg
    assert d_graze < 1e-4


def test_non_unit_initial_state_rejected():
    st0 = state_from_angle(TS, Q, 0.3)
    bad = type(st0)(st0.r, st0.theta, 2 * st0.dr, st0.dtheta, st0.clairaut_nu, st0.angle_phi)
    with pytest.raises(DomainError):
        integrate_h_geodesic(TS, bad, 1.0)


def test_conjugate_distance_round_and_scaled_spheres():
    fan = integrate_h_fan(ROUND, SurfacePoint(1.0, 0.0), [0.2, 1.4, -2.0], 3.5, 1e-3)
    for j in range(3):
        assert first_conjugate_distance(ROUND, h_trace_from_fan(ROUND, fan, j)) == pytest.approx(
            math.pi, abs=1e-4)
    # m = sin(2r)/2: constant curvature 4, first conjugate point at pi/2
    prof = make_profile("custom", h=lambda r: 2 * r, dh=lambda r: 2 + 0 * r, d2h=lambda r: 0 * r)
    s4 = Surface(prof, poles=(0.0, math.pi / 2))
    fan = integrate_h_fan(s4, SurfacePoint(math.pi / 4, 0.0), [0.3, 2.0], 2.0, 1e-3)
    for j in range(2):
        assert first_conjugate_distance(s4, h_trace_from_fan(s4, fan, j)) == pytest.approx(
            math.pi / 2, abs=1e-4)


def test_zero_wind_hamiltonian_matches_riemannian():
    nav = NavigationData(TS)
    cov = covector_for_angle(nav, Q, 0.7)
    tr = integrate_randers_geodesic(nav, Q, cov, 2.0, 1e-3)
    ref = integrate_h_geodesic(TS, state_from_angle(TS, Q, 0.7), 2.0, 1e-3)
    assert trace_distance(tr, ref, TS) < 1e-10


def test_randers_geodesic_is_flow_image():
    nav = NavigationData(TS, rotation(0.3))
    tr = integrate_randers_geodesic(nav, Q, covector_for_angle(nav, Q, 1.1), math.pi, 1e-3)
    ref = integrate_h_geodesic(TS, state_from_angle(TS, Q, 1.1), math.pi, 1e-3)
    mapped = deform_trace_by_flow(ref, FlowMap(rotation(0.3), 1e-3))
    assert trace_distance(tr, mapped, TS) < 1e-5
    assert np.max(np.abs(hamiltonian_along(nav, tr) - 1)) < 1e-10


def test_initial_covector_reproduces_velocity():
    nav = NavigationData(TS, rotation(0.3))
    m = float(TS.m(Q.r))
    u = np.array([math.sin(0.8), math.cos(0.8) / m])
    W = np.array(nav.wind(Q.r, Q.theta))
    cov = initial_covector(nav, Q, u + W)
    assert cov == pytest.approx(covector_for_angle(nav, Q, 0.8), abs=1e-12)


def test_jacobian_conjugate_matches_h():
    nav = NavigationData(TS, rotation(0.3))
    ref = integrate_h_geodesic(TS, state_from_angle(TS, Q, 0.2), 2 * math.pi, 1e-3)
    c_h = first_conjugate_distance(TS, ref)
    c_j = jacobi_determinant_conjugate(nav, Q, 0.2, 2 * math.pi, 1e-3)
    assert c_j == pytest.approx(c_h, abs=1e-5)


def test_strong_wind_raises_nonconvex():
    nav = NavigationData(TS, rotation(1.5))
    with pytest.raises(NonConvexError):
        covector_for_angle(nav, Q, math.pi)
    with pytest.raises(NonConvexError):
        integrate_randers_geodesic(nav, Q, [0.0, 1.0], 1.0)
    # weak at the start, too strong near the equator
    nav = NavigationData(TS, rotation(0.55))
    cov = covector_for_angle(nav, SurfacePoint(0.3, 0.0), 1.4)
    with pytest.raises(NonConvexError):
        integrate_randers_geodesic(nav, SurfacePoint(0.3, 0.0), cov, 3.0, 1e-2)


def test_pole_crossing_halts_trace():
    tr = integrate_h_geodesic(TS, state_from_angle(TS, Q, -math.pi / 2), 3.0, 1e-3)
    assert tr.halted
    assert tr.length < Q.r + 1e-2


def test_alpha_geodesic_projectively_matches_randers_for_closed_beta():
    nav = NavigationData(TS, radial("ratio"))
    v = np.array([0.6, 0.8 / float(TS.m(Q.r))])
    tr = integrate_randers_geodesic(nav, Q, initial_covector(nav, Q, v), 1.5, 1e-3)
    al = integrate_alpha_geodesic(nav, Q, v, 1.1 * alpha_length(nav, tr), 1e-3)
    al = truncate_to_nearest(al, (tr.r[-1], tr.theta[-1]), TS)
    assert hausdorff_distance(TS, tr, al) < 1e-4


def test_csv_export_and_envelope(tmp_path):
    tr = integrate_h_geodesic(TS, state_from_angle(TS, Q, 0.4), 0.1, 1e-2)
    path = tmp_path / "t.csv"
    write_trace_csv(tr, path)
    rows = list(csv.reader(open(path)))
    assert tuple(rows[0]) == TRACE_COLUMNS
    assert len(rows) == len(tr) + 1
    env = trace_envelope(tr, TS.id, ["rotation:0.3"])
    assert env["metric_tag"] == "h" and env["step"] == 1e-2 and env["winds"] == ["rotation:0.3"]
    write_trace_csv(tr, path, member=0)
    write_trace_csv(tr, path, member=1, append=True)
    rows = list(csv.reader(open(path)))
    assert rows[0][0] == "member" and rows[-1][0] == "1"


def test_round_sphere_great_circle_closes():
    p = SurfacePoint(math.pi / 2, 0.0)
    tr = integrate_h_geodesic(ROUND, state_from_angle(ROUND, p, math.pi / 4), 2 * math.pi,
                              2 * math.pi / 6000)
    assert tr.r[-1] == pytest.approx(p.r, abs=1e-6)
    assert abs(wrap_angle(tr.theta[-1])) < 1e-6
