import hashlib

import numpy as np
import pytest

from randers_sphere.errors import DomainError
from randers_sphere.surface import gauss_curvature, make_surface
from randers_sphere.svg import DEFAULT_STYLE, Curve, emit_svg, render_svg


def curvature_curve():
    s = make_surface("twisted-sine", alpha=0.25)
    r = np.linspace(0.01, np.pi - 0.01, 200)
    return Curve(r, gauss_curvature(s, r), "G(r)")


def test_empty_rejected():
    with pytest.raises(DomainError):
        render_svg([])


def test_defaults_applied():
    svg = render_svg([curvature_curve()])
    assert svg.startswith("<svg")
    assert f'width="{DEFAULT_STYLE["width"]}"' in svg
    assert "<polyline" in svg and "G(r)" in svg


def test_byte_identical(tmp_path):
    a = emit_svg([curvature_curve()], tmp_path / "a.svg", {"title": "G"})
    b = emit_svg([curvature_curve()], tmp_path / "b.svg", {"title": "G"})
    assert hashlib.sha256(a.read_bytes()).digest() == hashlib.sha256(b.read_bytes()).digest()


def test_azimuthal_and_points():
    th = np.linspace(0, 2 * np.pi, 20)
    svg = render_svg([Curve(th, np.full(20, 2.0), points=True)], projection="azimuthal")
    assert svg.count("<circle") >= 20
    with pytest.raises(DomainError):
        render_svg([Curve(th, th)], projection="mercator")


def test_nan_breaks_polyline():
    x = np.array([0.0, 1.0, np.nan, 2.0, 3.0])
    svg = render_svg([Curve(x, x)])
    assert svg.count("<polyline") == 2
