"""Tensor Gauss-Legendre quadrature over charts, cap excision and coarea slicing.

All sums go through :mod:`hreilly.reduce`, so a result depends only on the
rule and the integrand, never on chunking or worker count.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.stats import qmc

from .charts import DomainChart, RayFamily, SurfaceChart
from .reduce import weighted_sum
from .surface import CharacteristicPoint, SurfaceGeometry, surface_geometry

log = logging.getLogger(__name__)

MEASURES = ("riemannian", "h_perimeter")


class QuadratureFailure(ArithmeticError):
    pass


@dataclass(frozen=True)
class QuadratureSpec:
    """Rule parameters.

    ``orders`` overrides the per-axis base order for charts whose parameter
    dimension equals its length; other charts use ``base_order``.
    """

    rule: str = "gauss-legendre-tensor"
    base_order: int = 32
    levels: int = 3
    orders: tuple | None = None
    cap_delta0: float = 0.2
    cap_ratio: float = 0.5
    cap_count: int = 8
    samples: int = 2 ** 16
    seed: int = 0
    chunk: int = 32768
    workers: int = 1

    def __post_init__(self):
        if self.rule not in ("gauss-legendre-tensor", "monte-carlo"):
            raise ValueError(f"unknown rule {self.rule!r}")
        if self.base_order < 1 or self.levels < 1:
            raise ValueError("orders and levels must be positive")
        if not (0 < self.cap_ratio < 1 and self.cap_delta0 > 0 and self.cap_count >= 3):
            raise ValueError("cap radii must form a decreasing sequence of >= 3 terms")

    def axis_orders(self, dim: int, level: int) -> list[int]:
        if self.orders is not None and len(self.orders) == dim:
            base = self.orders
        else:
            base = (self.base_order,) * dim
        return [int(b) * 2 ** level for b in base]

    def cap_radii(self) -> np.ndarray:
        return self.cap_delta0 * self.cap_ratio ** np.arange(self.cap_count)


@dataclass(frozen=True)
class ExcisionFit:
    limit: float
    alpha: float
    coeff: float
    misfit: float
    converged: bool
    note: str = ""


@dataclass(frozen=True)
class IntegralResult:
    value: float
    refinementTrail: tuple
    errorEstimate: float
    excisionTrail: tuple | None = None
    fit: ExcisionFit | None = None
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def cauchy(self) -> bool:
        return trail_is_cauchy([v for _, v in self.refinementTrail])

    @property
    def converged(self) -> bool:
        ok = self.cauchy
        if self.fit is not None:
            ok = ok and self.fit.converged
        return bool(ok)

    def as_dict(self) -> dict:
        out = {
            "value": self.value,
            "errorEstimate": self.errorEstimate,
            "refinementTrail": [list(t) for t in self.refinementTrail],
            "cauchy": self.cauchy,
        }
        if self.excisionTrail is not None:
            out["excisionTrail"] = [list(t) for t in self.excisionTrail]
            out["fit"] = {"limit": self.fit.limit, "alpha": self.fit.alpha, "coeff": self.fit.coeff,
                          "misfit": self.fit.misfit, "converged": self.fit.converged,
                          "note": self.fit.note}
        return out


def trail_is_cauchy(values: Sequence[float], floor: float = 1e-11) -> bool:
    """Two-level differences decrease, or have already reached the noise floor.

    ``floor`` is relative to the magnitude of the values; differences below it
    are treated as converged because roundoff makes them non-monotone.
    """
    v = np.asarray(values, float)
    if v.size < 2 or not np.all(np.isfinite(v)):
        return False
    scale = max(1.0, float(np.max(np.abs(v))))
    diffs = np.abs(np.diff(v))
    for a, b in zip(diffs[:-1], diffs[1:]):
        if b > a and b > floor * scale:
            return False
    return bool(diffs[-1] <= max(diffs[0], floor * scale))


# -- node generation ---------------------------------------------------------

@lru_cache(maxsize=64)
def _leggauss(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _axis_rule(lo: float, hi: float, order: int, cuts: Sequence[tuple[float, float]] = ()):
    """Gauss-Legendre nodes on ``[lo, hi]`` minus the excluded intervals ``cuts``."""
    pieces = [(lo, hi)]
    for a, b in sorted(cuts):
        nxt = []
        for p, q in pieces:
            if b <= p or a >= q:
                nxt.append((p, q))
                continue
            if a > p:
                nxt.append((p, a))
            if b < q:
                nxt.append((b, q))
        pieces = nxt
    x, w = _leggauss(order)
    xs, ws = [], []
    for p, q in pieces:
        half = 0.5 * (q - p)
        xs.append(p + half * (x + 1.0))
        ws.append(half * w)
    if not xs:
        return np.empty(0), np.empty(0)
    return np.concatenate(xs), np.concatenate(ws)


def tensor_rule(lo, hi, orders, cuts: dict | None = None):
    """Flattened tensor-product nodes ``(N, dim)`` and weights ``(N,)`` (C order)."""
    cuts = cuts or {}
    rules = [_axis_rule(a, b, o, cuts.get(k, ())) for k, (a, b, o) in enumerate(zip(lo, hi, orders))]
    grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    wgrids = np.meshgrid(*[r[1] for r in rules], indexing="ij")
    U = np.stack([g.ravel() for g in grids], axis=-1)
    W = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
    return U, W


def sobol_rule(lo, hi, samples: int, seed: int, cuts: dict | None = None):
    """Scrambled Sobol points with equal weights (fixed seed, so reproducible)."""
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    m = int(math.ceil(math.log2(max(samples, 2))))
    U = qmc.Sobol(len(lo), scramble=True, seed=seed).random_base2(m)
    U = lo + U * (hi - lo)
    keep = np.ones(len(U), bool)
    for axis, ivs in (cuts or {}).items():
        for a, b in ivs:
            keep &= ~((U[:, axis] > a) & (U[:, axis] < b))
    W = np.full(len(U), float(np.prod(hi - lo)) / len(U))
    return U[keep], W[keep]


def _rule(spec: QuadratureSpec, lo, hi, level: int, cuts=None):
    if spec.rule == "monte-carlo":
        return sobol_rule(lo, hi, spec.samples * 2 ** level, spec.seed + level, cuts)
    return tensor_rule(lo, hi, spec.axis_orders(len(lo), level), cuts)


def _map_chunks(fn: Callable[[np.ndarray, slice], np.ndarray], N: int, spec: QuadratureSpec):
    """Evaluate ``fn`` on index chunks; output order is independent of workers."""
    slices = [slice(i, min(N, i + spec.chunk)) for i in range(0, N, spec.chunk)]
    if spec.workers > 1 and len(slices) > 1:
        with ThreadPoolExecutor(spec.workers) as ex:
            parts = list(ex.map(lambda s: fn(s), slices))
    else:
        parts = [fn(s) for s in slices]
    return np.concatenate(parts) if parts else np.empty(0)


# -- surface integrals -------------------------------------------------------

SurfaceIntegrand = Callable[[SurfaceGeometry], np.ndarray]


def _cap_cuts(chart: SurfaceChart, delta: float | None) -> dict:
    if not delta:
        return {}
    cuts: dict = {}
    for cap in chart.caps:
        cuts.setdefault(cap.axis, []).append((cap.at - delta, cap.at + delta))
    return cuts


def surface_values(chart: SurfaceChart, integrand: SurfaceIntegrand, measure: str,
                   U: np.ndarray, spec: QuadratureSpec) -> np.ndarray:
    """Integrand times area element at parameter nodes ``U``."""
    if measure not in MEASURES:
        raise ValueError(f"measure must be one of {MEASURES}")

    def chunk(sl):
        P, dA = chart.pullback(U[sl])
        geom = surface_geometry(chart.surface, P)
        if np.any(geom.characteristic):
            k = int(np.argmax(geom.characteristic))
            raise CharacteristicPoint(geom.pH_norm[k], P[k])
        vals = np.asarray(integrand(geom), float)
        dens = dA * geom.pH_norm if measure == "h_perimeter" else dA
        return np.broadcast_to(vals, dens.shape) * dens

    return _map_chunks(chunk, len(U), spec)


def _surface_at(chart, integrand, measure, spec, level, delta):
    U, W = _rule(spec, chart.lo, chart.hi, level, _cap_cuts(chart, delta))
    vals = surface_values(chart, integrand, measure, U, spec)
    if not np.all(np.isfinite(vals)):
        raise QuadratureFailure(f"non-finite integrand on {chart.name} at level {level}")
    return weighted_sum(W, vals)


def _trail(values_by_level) -> tuple[tuple, float]:
    trail = tuple((lvl, float(v)) for lvl, v in values_by_level)
    err = abs(trail[-1][1] - trail[-2][1]) if len(trail) > 1 else float("nan")
    return trail, err


def surface_integral(chart: SurfaceChart, integrand: SurfaceIntegrand,
                     measure: str = "h_perimeter", spec: QuadratureSpec = QuadratureSpec(),
                     delta: float | None = None) -> IntegralResult:
    """Integral over the chart (minus caps of radius ``delta``) at every level."""
    vals = [(lvl, _surface_at(chart, integrand, measure, spec, lvl, delta))
            for lvl in range(spec.levels)]
    trail, err = _trail(vals)
    return IntegralResult(trail[-1][1], trail, err, meta={"chart": chart.name, "measure": measure})


def _projected_fit(x, v, alpha, terms):
    A = np.stack([np.ones_like(x)] + [x ** (k * alpha) for k in range(1, terms + 1)], axis=1)
    coef, *_ = np.linalg.lstsq(A, v, rcond=None)
    return coef, A @ coef - v


def _refine(sse, lo: float, hi: float) -> tuple[float, float]:
    # bounded Brent stops at ~sqrt(eps)*|x|, so minimize over an offset and recentre once
    centre, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    for _ in range(2):
        sol = minimize_scalar(lambda u: sse(centre + u), bounds=(-half, half), method="bounded",
                              options={"xatol": 1e-15})
        centre, half = centre + float(sol.x), max(abs(float(sol.x)), 1e-7)
    return float(sol.fun), centre


def fit_power_law(deltas, values, terms: int = 3) -> ExcisionFit:
    """Fit ``L + c_1 delta^alpha + ... + c_k delta^(k alpha)`` to an excision trail.

    ``alpha`` is found by a grid search refined with a bounded scalar
    minimization; the linear coefficients are solved by least squares for each
    trial exponent. ``coeff`` is the leading coefficient ``c_1``.
    """
    d = np.asarray(deltas, float)
    v = np.asarray(values, float)
    spread = float(np.max(v) - np.min(v))
    scale = max(1.0, float(np.max(np.abs(v))))
    if spread <= 1e-12 * scale:
        return ExcisionFit(float(v[-1]), float("inf"), 0.0, 0.0, True, "flat trail")
    terms = max(1, min(terms, len(v) - 3))
    x = d / d[0]

    def sse(a):
        return float(np.sum(_projected_fit(x, v, a, terms)[1] ** 2))

    # the objective has narrow valleys, so every local grid minimum is refined
    grid = np.geomspace(0.05, 8.0, 400)
    vals = np.array([sse(a) for a in grid])
    cands = [(float(np.min(vals)), float(grid[int(np.argmin(vals))]))]
    for k in range(len(grid)):
        if vals[k] > vals[max(k - 1, 0)] or vals[k] > vals[min(k + 1, len(grid) - 1)]:
            continue
        cands.append(_refine(sse, grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]))
    # alpha/k reproduces an exact delta^alpha law with c_1 = 0; among fits that are
    # equally good up to roundoff keep the largest exponent
    floor = min(c[0] for c in cands) + len(v) * (1e-12 * scale) ** 2
    a = max(c[1] for c in cands if c[0] <= floor)
    coef, res = _projected_fit(x, v, a, terms)
    misfit = float(np.max(np.abs(res)))
    at_bound = a <= grid[0] * 1.001 or a >= grid[-1] * 0.999
    ok = bool(not at_bound and misfit <= 0.1 * spread and np.isfinite(coef[0]))
    note = "" if ok else ("exponent at search bound" if at_bound else "power law misfit")
    return ExcisionFit(float(coef[0]), a, float(coef[1] / d[0] ** a), misfit, ok, note)


def extrapolate_excision(value_at: Callable[[int, float], float], spec: QuadratureSpec,
                         name: str = "", meta: dict | None = None) -> IntegralResult:
    """Tabulate ``value_at(level, delta)`` over levels and cap radii, fit each row.

    The refinement trail holds the per-level extrapolated limits.
    """
    radii = spec.cap_radii()
    table = np.array([[value_at(lvl, float(dl)) for dl in radii] for lvl in range(spec.levels)])
    fits = [fit_power_law(radii, row) for row in table]
    trail, err = _trail([(lvl, f.limit) for lvl, f in enumerate(fits)])
    fit = fits[-1]
    ex = tuple((float(dl), float(v)) for dl, v in zip(radii, table[-1]))
    if not fit.converged:
        log.warning("excision trail on %s did not converge: %s", name, fit.note)
    value = fit.limit if fit.converged else float("nan")
    return IntegralResult(value, trail, err, ex, fit, meta=dict(meta or {}))


def excised_surface_integral(chart: SurfaceChart, integrand: SurfaceIntegrand,
                             measure: str = "h_perimeter",
                             spec: QuadratureSpec = QuadratureSpec()) -> IntegralResult:
    """Integrals with shrinking characteristic caps, extrapolated to zero cap size.

    Charts without caps are integrated directly.
    """
    if not chart.caps:
        return surface_integral(chart, integrand, measure, spec)
    return extrapolate_excision(
        lambda lvl, dl: _surface_at(chart, integrand, measure, spec, lvl, dl), spec,
        chart.name, {"chart": chart.name, "measure": measure})


# -- domain integrals --------------------------------------------------------

DomainIntegrand = Callable[[np.ndarray], np.ndarray]


def domain_values(chart: DomainChart, integrand: DomainIntegrand, U, spec) -> np.ndarray:
    def chunk(sl):
        P, jac = chart.pullback(U[sl])
        return np.broadcast_to(np.asarray(integrand(P), float), jac.shape) * jac

    return _map_chunks(chunk, len(U), spec)


def _domain_at(chart, integrand, spec, lvl, cuts):
    U, W = _rule(spec, chart.lo, chart.hi, lvl, cuts)
    v = domain_values(chart, integrand, U, spec)
    if not np.all(np.isfinite(v)):
        raise QuadratureFailure(f"non-finite integrand on {chart.name} at level {lvl}")
    return weighted_sum(W, v)


def domain_integral(chart: DomainChart, integrand: DomainIntegrand,
                    spec: QuadratureSpec = QuadratureSpec(), cuts: dict | None = None,
                    ) -> IntegralResult:
    """Haar (= Lebesgue) volume integral over the chart's image, level trail."""
    vals = [(lvl, _domain_at(chart, integrand, spec, lvl, cuts)) for lvl in range(spec.levels)]
    trail, err = _trail(vals)
    return IntegralResult(trail[-1][1], trail, err, meta={"chart": chart.name})


def excised_domain_integral(chart: DomainChart, integrand: DomainIntegrand, caps: Sequence,
                            spec: QuadratureSpec = QuadratureSpec()) -> IntegralResult:
    """Domain integral with parameter strips around ``caps`` removed and extrapolated."""
    if not caps:
        return domain_integral(chart, integrand, spec)

    def value_at(lvl, dl):
        cuts: dict = {}
        for cap in caps:
            cuts.setdefault(cap.axis, []).append((cap.at - dl, cap.at + dl))
        return _domain_at(chart, integrand, spec, lvl, cuts)

    return extrapolate_excision(value_at, spec, chart.name, {"chart": chart.name})


# -- coarea ------------------------------------------------------------------

@dataclass(frozen=True)
class CoareaResult:
    lhs: IntegralResult
    rhs: IntegralResult


def _horizontal_gradient_norm(f, P):
    from .calculus import frame_jet
    d1 = frame_jet(f, P).d1
    return np.linalg.norm(d1[..., :-1], axis=-1)


def coarea_slices(family: RayFamily, eps: float, slice_count: int,
                  integrand: DomainIntegrand, spec: QuadratureSpec = QuadratureSpec(),
                  ) -> CoareaResult:
    """Both sides of the coarea formula on the slab ``{-eps < F < eps}``.

    ``lhs`` integrates ``psi |grad_H F|`` over the slab chart; ``rhs`` applies
    a ``slice_count``-point Gauss-Legendre rule in ``s`` to H-perimeter
    integrals of ``psi`` over the level sets.
    """
    slab = family.slab_chart(eps)
    lhs = domain_integral(slab, lambda P: integrand(P) * _horizontal_gradient_norm(family.F, P), spec)
    xs, ws = _axis_rule(-eps, eps, slice_count)

    def level_value(lvl):
        total = []
        for s in xs:
            ch = family.level_chart(float(s))
            total.append(_surface_at(ch, lambda g: integrand(g.p), "h_perimeter", spec, lvl, None))
        return weighted_sum(ws, np.array(total))

    trail, err = _trail([(lvl, level_value(lvl)) for lvl in range(spec.levels)])
    rhs = IntegralResult(trail[-1][1], trail, err, meta={"slices": slice_count})
    return CoareaResult(lhs, rhs)


def with_levels(spec: QuadratureSpec, levels: int) -> QuadratureSpec:
    return replace(spec, levels=levels)


def sliced_integral(family: RayFamily, eps: float, slice_count: int,
                    integrand: SurfaceIntegrand, spec: QuadratureSpec = QuadratureSpec(),
                    ) -> IntegralResult:
    """``int_{-eps}^{eps} ds int_{F = s} integrand sigma_H`` with cap excision per slice."""
    xs, ws = _axis_rule(-eps, eps, slice_count)
    charts = [family.level_chart(float(s)) for s in xs]

    def value_at(lvl, dl):
        vals = [_surface_at(ch, integrand, "h_perimeter", spec, lvl, dl) for ch in charts]
        return weighted_sum(ws, np.array(vals))

    meta = {"family": family.label, "slices": slice_count, "eps": eps}
    if not family.caps:
        trail, err = _trail([(lvl, value_at(lvl, None)) for lvl in range(spec.levels)])
        return IntegralResult(trail[-1][1], trail, err, meta=meta)
    return extrapolate_excision(value_at, spec, f"slices[{family.label}]", meta)
