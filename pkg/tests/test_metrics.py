import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randers_sphere.errors import NonConvexError
from randers_sphere.fields import radial, rotation, sum_field
from randers_sphere.metrics import (MetricMatrix, NavigationData, beta_change_matrix, epsilon,
                                    hamiltonian_eval, legendre_covector, make_chain,
                                    navigation_to_randers, randers_norm, randers_to_navigation,
                                    riemann_eval, zermelo_to_randers)
from randers_sphere.surface import SurfacePoint, make_surface

TS = make_surface("twisted-sine", alpha=0.25)

points = st.builds(SurfacePoint, st.floats(0.1, math.pi - 0.1), st.floats(0, 2 * math.pi))


def h_vector(p, norm, ang):
    m = float(TS.m(p.r))
    return np.array([norm * math.cos(ang), norm * math.sin(ang) / m])


@settings(max_examples=100, deadline=None)
@given(points, st.floats(0, 0.95), st.floats(0, 2 * math.pi))
def test_navigation_round_trip(p, norm, ang):
    V = h_vector(p, norm, ang)
    h = riemann_eval(TS, p)
    a, b = navigation_to_randers(h, V)
    h2, V2 = randers_to_navigation(a, b)
    assert np.allclose(h2.array, h.array, atol=1e-10)
    assert np.allclose(V2, V, atol=1e-10)
    assert epsilon(a, b) == pytest.approx(1 - norm ** 2, abs=1e-10)


@settings(max_examples=100, deadline=None)
@given(points, st.floats(0, 0.95), st.floats(0, 2 * math.pi), st.floats(0, 0.99), st.floats(0, 2 * math.pi))
def test_indicatrix_is_translated_unit_circle(p, norm, ang, u_ang, _):
    # F(u + V) = 1 for every h-unit u
    V = h_vector(p, norm, ang)
    a, b = navigation_to_randers(riemann_eval(TS, p), V)
    u = h_vector(p, 1.0, u_ang)
    assert randers_norm(a, b, u + V) == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=100, deadline=None)
@given(points, st.floats(0, 0.9), st.floats(0, 2 * math.pi), st.floats(0, 0.9), st.floats(0, 2 * math.pi))
def test_sigma_equals_eps_eta(p, nv, av, nw, aw):
    V, W = h_vector(p, nv, av), h_vector(p, nw, aw)
    h = riemann_eval(TS, p)
    U = V + W
    sigma = 1 - h.inner(U, U)
    a, b = navigation_to_randers(h, V)
    if sigma <= 1e-3:
        with pytest.raises(NonConvexError):
            beta_change_matrix(a, b, W)
        return
    at, bt, eta = beta_change_matrix(a, b, W)
    assert sigma == pytest.approx(epsilon(a, b) * eta, abs=1e-12)
    a2, b2 = navigation_to_randers(h, U)
    assert np.allclose(at.array, a2.array, atol=1e-9 * max(1.0, np.abs(a2.array).max()))
    assert np.allclose(bt.array, b2.array, atol=1e-9)


def test_positivity_boundary():
    p = SurfacePoint(1.0, 0.0)
    h = riemann_eval(TS, p)
    V = h_vector(p, 0.5, 0.0)
    a, b = navigation_to_randers(h, V)
    assert randers_norm(a, b, -h_vector(p, 0.49, 0.0)) < 1
    assert randers_norm(a, b, -h_vector(p, 0.51, 0.0)) >= 1
    W = h_vector(p, 0.51, 0.0)
    assert (randers_norm(a, b, -W) < 1) == (h.norm(V + W) < 1)


def test_non_convex_raised():
    h = MetricMatrix(1.0, 0.0, 1.0)
    with pytest.raises(NonConvexError):
        navigation_to_randers(h, [1.0, 0.0])


def test_legendre_covector_has_unit_hamiltonian():
    nav = NavigationData(TS, rotation(0.3))
    p = SurfacePoint(1.0, 0.5)
    a, b = zermelo_to_randers(TS, nav.wind, p)
    for ang in np.linspace(0, 2 * math.pi, 13):
        y = np.array([math.cos(ang), math.sin(ang)])
        y = y / randers_norm(a, b, y)
        cov = legendre_covector(a, b, y)
        assert hamiltonian_eval(nav, p, cov) == pytest.approx(1.0, abs=1e-12)
        assert float(cov @ y) == pytest.approx(1.0, abs=1e-12)


def test_hamiltonian_zero_wind_is_dual_norm():
    nav = NavigationData(TS)
    p = SurfacePoint(0.7, 0.0)
    m = float(TS.m(p.r))
    assert hamiltonian_eval(nav, p, [0.6, 0.8 * m]) == pytest.approx(1.0)


def test_stepwise_chain_equals_total_navigation():
    W = sum_field([radial("ratio"), rotation(-0.3)])
    chain = make_chain(TS, [rotation(0.2), rotation(0.1)], [W])
    F = chain.stepwise_randers()
    for p in (SurfacePoint(0.5, 0.1), SurfacePoint(1.3, 2.0), SurfacePoint(2.4, 4.0)):
        a, b = F.at(p)
        a2, b2 = zermelo_to_randers(TS, chain.cumulative_wind(2), p)
        assert np.allclose(a.array, a2.array, atol=1e-12)
        assert np.allclose(b.array, b2.array, atol=1e-12)
    assert chain.ids == ["rotation:0.2", "rotation:0.1", W.id]
