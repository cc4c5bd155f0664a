import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hreilly import charts as C
from hreilly import fields as F
from hreilly.quadrature import (QuadratureSpec, coarea_slices, domain_integral,
                                excised_surface_integral, extrapolate_excision, fit_power_law,
                                sobol_rule, surface_integral, tensor_rule, trail_is_cauchy)

ONE = lambda P: np.ones(P.shape[:-1])  # noqa: E731


def test_tensor_rule_exact_for_polynomials():
    U, W = tensor_rule([0, -1], [2, 1], [3, 4])
    assert U.shape == (12, 2)
    # degree 5 in u, degree 7 in v are integrated exactly
    val = np.sum(W * U[:, 0] ** 5 * (U[:, 1] ** 6 + 1))
    assert val == pytest.approx((2 ** 6 / 6) * (2 / 7 + 2), rel=1e-14)


def test_tensor_rule_cuts_remove_interval():
    U, W = tensor_rule([0.0], [1.0], [8], {0: [(0.4, 0.6)]})
    assert np.all((U[:, 0] <= 0.4) | (U[:, 0] >= 0.6))
    assert W.sum() == pytest.approx(0.8)


def test_sobol_rule_reproducible():
    a = sobol_rule([0, 0], [1, 2], 1000, seed=3)
    b = sobol_rule([0, 0], [1, 2], 1000, seed=3)
    np.testing.assert_array_equal(a[0], b[0])
    assert a[1].sum() == pytest.approx(2.0)


@pytest.mark.parametrize("n", [1, 2])
def test_ball_volume(n):
    spec = QuadratureSpec(base_order=12, levels=2)
    res = domain_integral(C.ball_radial(0, 1, n), ONE, spec)
    assert res.value == pytest.approx(C.unit_ball_volume(2 * n + 1), rel=1e-12)
    assert res.cauchy


def test_left_translated_ball_keeps_volume():
    spec = QuadratureSpec(base_order=12, levels=2)
    res = domain_integral(C.ball_radial([1.0, -2.0, 0.5], 0.7), ONE, spec)
    assert res.value == pytest.approx(4 * math.pi / 3 * 0.7 ** 3, rel=1e-12)


def test_monte_carlo_rule():
    spec = QuadratureSpec(rule="monte-carlo", samples=2 ** 14, levels=2, seed=5)
    res = domain_integral(C.box([0, 0, 0], [1, 2, 3]), lambda P: P[..., 0] * P[..., 2], spec)
    assert res.value == pytest.approx(0.5 * 2 * 4.5, rel=1e-3)


def test_box_polynomial():
    res = domain_integral(C.box([0, 0, 0], [1, 1, 1]), lambda P: P[..., 0] * P[..., 1] ** 2,
                          QuadratureSpec(base_order=4, levels=2))
    assert res.value == pytest.approx(1 / 6, rel=1e-14)


def test_trail_is_cauchy():
    assert trail_is_cauchy([1.0, 1.1, 1.11, 1.111])
    assert not trail_is_cauchy([1.0, 1.1, 1.3])
    assert not trail_is_cauchy([1.0])
    assert not trail_is_cauchy([1.0, float("nan")])
    # roundoff-level wobble counts as converged
    assert trail_is_cauchy([1.0, 1.0 + 1e-16, 1.0 - 2e-16])


@settings(max_examples=20)
@given(st.floats(-5, 5), st.floats(0.3, 3.0), st.floats(0.5, 3.0).filter(lambda c: abs(c) > 0.1),
       st.floats(-1, 1))
def test_fit_recovers_power_law(L, alpha, c1, c2):
    d = 0.2 * 0.5 ** np.arange(8)
    v = L + c1 * d ** alpha + c2 * d ** (2 * alpha)
    fit = fit_power_law(d, v)
    assert fit.converged
    assert fit.limit == pytest.approx(L, abs=1e-6 * max(1.0, abs(c1)))
    assert fit.alpha == pytest.approx(alpha, rel=1e-4)


def test_fit_flags_divergence_and_flat_trails():
    d = 0.2 * 0.5 ** np.arange(8)
    div = fit_power_law(d, -np.log(d) * 100)
    assert not div.converged
    flat = fit_power_law(d, np.full(8, 3.0))
    assert flat.converged and flat.limit == 3.0 and math.isinf(flat.alpha)


def test_extrapolate_excision_trail_holds_limits():
    spec = QuadratureSpec(levels=2, cap_count=6)
    res = extrapolate_excision(lambda lvl, dl: 1.0 + 2.0 * dl + 1e-3 * 0.5 ** lvl, spec)
    assert len(res.refinementTrail) == 2
    assert res.value == pytest.approx(1.0005, abs=1e-10)
    assert res.fit.alpha == pytest.approx(1.0, rel=1e-6)
    assert len(res.excisionTrail) == 6


def test_excised_h_perimeter_matches_unexcised_for_smooth_integrand():
    S = C.sphere_chart(0, 1, 1)
    spec = QuadratureSpec(base_order=24, levels=2)
    ex = excised_surface_integral(S, lambda g: np.ones(g.p.shape[:-1]), "h_perimeter", spec)
    # H-perimeter density vanishes at the poles, so the Gauss rule (no nodes on the poles)
    # converges without excision too
    full = surface_integral(S, lambda g: np.ones(g.p.shape[:-1]), "h_perimeter", spec)
    assert ex.converged
    assert ex.value == pytest.approx(full.value, rel=1e-7)


def test_coarea_on_cylinder_slab():
    res = coarea_slices(C.cylinder_family(0.0, 1.0), 0.2, 8, F.polynomial("1 + t*x1^2"),
                        QuadratureSpec(base_order=12, levels=2))
    assert res.lhs.value == pytest.approx(res.rhs.value, rel=1e-10)


def test_spec_validation_and_orders():
    with pytest.raises(ValueError):
        QuadratureSpec(rule="simpson")
    with pytest.raises(ValueError):
        QuadratureSpec(cap_ratio=1.5)
    spec = QuadratureSpec(base_order=4, orders=(2, 3))
    assert spec.axis_orders(2, 1) == [4, 6]
    assert spec.axis_orders(3, 0) == [4, 4, 4]
    np.testing.assert_allclose(QuadratureSpec().cap_radii()[:3], [0.2, 0.1, 0.05])
