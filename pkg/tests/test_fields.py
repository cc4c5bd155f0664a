import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hreilly import fields as F
from hreilly.calculus import horizontal_ops


def test_catalog_values():
    p = np.array([[1.0, 2.0, 3.0]])
    assert F.rho2_half()(p)[0] == 2.5
    assert F.two_t()(p)[0] == 6.0
    assert F.coordinate(1)(p)[0] == 2.0
    assert F.linear_horizontal([1.0, -1.0])(p)[0] == -1.0
    assert F.euclidean_sphere(0.0, 1.0)(np.array([[1.0, 0.0, 0.0]]))[0] == pytest.approx(0.0)
    assert F.exp_cos()(np.array([[0.0, 0.0, 5.0]]))[0] == 1.0


@pytest.mark.parametrize("spec,expect", [
    ("x1^2 + 0.5*x1*y1*t - 3", 1.0 + 0.5 * 1 * 2 * 3 - 3),
    ("t", 3.0),
    ("-y1**3", -8.0),
    ("2", 2.0),
])
def test_polynomial_parser(spec, expect):
    p = np.array([[1.0, 2.0, 3.0]])
    assert F.resolve_field(spec)(p)[0] == pytest.approx(expect)


@pytest.mark.parametrize("bad", ["x1^-1", "sin(x1)", "z1", "x0", "x1^0.5", "import os"])
def test_polynomial_rejects(bad):
    with pytest.raises((ValueError, KeyError)):
        F.resolve_field(bad)(np.zeros((1, 3)))


def test_resolve_catalog_and_errors():
    f = F.resolve_field("ellipsoid(1, 2, 0.5)")
    assert f.label.startswith("ellipsoid")
    assert F.resolve_field(f) is f
    with pytest.raises(F.CatalogError):
        F.resolve_field("nonexistent_field(3)")
    with pytest.raises(ValueError):
        F.resolve_field("x2")(np.zeros((1, 3)))  # x2 needs n >= 2
    with pytest.raises(ValueError):
        F.linear_horizontal([1.0, 2.0, 3.0])


def test_field_algebra():
    p = np.array([[0.5, -1.0, 2.0]])
    a, b = F.polynomial("x1"), F.polynomial("t")
    assert (a + b)(p)[0] == 2.5
    assert (a * b)(p)[0] == 1.0
    assert a.scaled(4.0)(p)[0] == 2.0
    assert b.shifted(2.0)(p)[0] == 0.0


@given(st.floats(0.2, 3), st.floats(0, 6.28), st.floats(-2, 2))
def test_radial_distance_is_eikonal(r, th, t):
    p = np.array([[r * np.cos(th), r * np.sin(th), t]])
    g = horizontal_ops(F.radial_distance(1.0), p).gradH
    assert np.linalg.norm(g) == pytest.approx(1.0, abs=1e-12)
