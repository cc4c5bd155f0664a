import itertools

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from hreilly import jets as J

X = sp.symbols("x0:3")
CASES = [
    (lambda c: c[0] * c[1] * c[2] + c[0] ** 3, X[0] * X[1] * X[2] + X[0] ** 3),
    (lambda c: J.exp(c[0]) * J.cos(c[1]) - J.sin(c[2] * c[0]),
     sp.exp(X[0]) * sp.cos(X[1]) - sp.sin(X[2] * X[0])),
    (lambda c: J.sqrt(c[0] * c[0] + c[1] * c[1] + 1.0) / (c[2] + 3.0),
     sp.sqrt(X[0] ** 2 + X[1] ** 2 + 1) / (X[2] + 3)),
    (lambda c: J.log(c[0] + 2.0) * c[1] ** 2 - 1.0 / (1.0 + c[2] * c[2]),
     sp.log(X[0] + 2) * X[1] ** 2 - 1 / (1 + X[2] ** 2)),
]


def sympy_partials(expr, p, r):
    sub = dict(zip(X, p))
    out = np.zeros((3,) * r)
    for idx in itertools.product(range(3), repeat=r):
        out[idx] = float(sp.diff(expr, *[X[i] for i in idx]).subs(sub))
    return out


@pytest.mark.parametrize("k", range(len(CASES)))
def test_against_symbolic_derivatives(k):
    fn, expr = CASES[k]
    p = np.array([0.3, -0.7, 0.4])
    jet = fn(J.coordinates(p[None], 3))
    assert jet.v[0] == pytest.approx(float(expr.subs(dict(zip(X, p)))), rel=1e-14)
    for r in (1, 2, 3):
        np.testing.assert_allclose(jet.dense(r)[0], sympy_partials(expr, p, r),
                                   rtol=1e-12, atol=1e-12)


@given(st.lists(st.floats(-2, 2), min_size=3, max_size=3),
       st.lists(st.floats(-2, 2), min_size=3, max_size=3))
def test_product_rule(p, coef):
    c = J.coordinates(np.array([p]), 3)
    a = c[0] * coef[0] + c[1] * c[2]
    b = J.sin(c[1]) + c[2] * coef[1]
    prod = a * b
    np.testing.assert_allclose(prod.dense(1), a.v[..., None] * b.dense(1) + b.v[..., None] * a.dense(1),
                               rtol=1e-12, atol=1e-12)


@given(st.lists(st.floats(0.1, 3), min_size=3, max_size=3))
def test_exp_log_roundtrip(p):
    c = J.coordinates(np.array([p]), 3)
    f = c[0] * c[1] + c[2]
    g = J.log(J.exp(f))
    for r in (1, 2, 3):
        np.testing.assert_allclose(g.dense(r), f.dense(r), rtol=1e-10, atol=1e-10)


def test_second_partials_symmetric():
    c = J.coordinates(np.array([[0.2, 0.5, -1.0]]), 3)
    f = J.exp(c[0] * c[2]) * c[1] ** 3
    H = f.dense(2)[0]
    np.testing.assert_allclose(H, H.T, rtol=0, atol=1e-14)
    K = f.dense(3)[0]
    np.testing.assert_allclose(K, np.transpose(K, (1, 0, 2)), atol=1e-13)
    np.testing.assert_allclose(K, np.transpose(K, (2, 1, 0)), atol=1e-13)


def test_partial_jet_lowers_order():
    c = J.coordinates(np.array([[1.0, 2.0, 3.0]]), 3)
    f = c[0] ** 2 * c[1]
    d0 = f.partial_jet(0)
    assert d0.order == 2
    assert d0.v[0] == pytest.approx(4.0)
    np.testing.assert_allclose(d0.dense(1)[0], [2 * 2.0, 2 * 1.0, 0.0])


def test_unsupported_order():
    with pytest.raises(J.UnsupportedOrder):
        J.coordinates(np.zeros((1, 3)), 4)
    with pytest.raises(J.UnsupportedOrder):
        J.Jet(5, 0.0)
    assert J.n_partials(3, 2) == 6
