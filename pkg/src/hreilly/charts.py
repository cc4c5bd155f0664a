"""Parametrizations of surfaces and domains used by the quadrature rules.

Chart maps are written in jet arithmetic over the parameters, so evaluating a
chart at order 1 yields the points together with the exact Jacobian.
Translations are left translations ``p -> q * p``; they preserve the frame,
the metric and the volume, so a translated chart describes the translated
surface with identical geometry.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import jets as J
from . import fields as F
from .fields import ScalarField, parse_call
from .group import coordinate_metric, dim_of, group_inv
from .surface import ImplicitSurface

TWO_PI = 2.0 * math.pi


class ChartError(ValueError):
    pass


# -- jet helpers -------------------------------------------------------------

def translate_jets(q, c: list) -> list:
    """``q * p`` applied to coordinate jets ``c`` (exact: the law is polynomial)."""
    q = np.asarray(q, float)
    out = [ci + qi for ci, qi in zip(c, q)]
    t = out[-1]
    for i in range(len(q) // 2):
        t = t + (c[2 * i + 1] * q[2 * i] - c[2 * i] * q[2 * i + 1]) * 0.5
    out[-1] = t
    return out


def translated(f: ScalarField, q) -> ScalarField:
    """The field ``p -> f(q^{-1} * p)`` whose zero set is ``q * {f = 0}``."""
    if q is None or not np.any(np.asarray(q, float)):
        return f
    q = np.asarray(q, float)
    qi = group_inv(q)
    return ScalarField(lambda c: f.fn(translate_jets(qi, c)), f"L[{q.tolist()}]{f.label}",
                       f.n, f.max_order, dict(f.meta))


def sphere_directions(u: list, n: int) -> list:
    """Unit vectors of S^{2n} in coordinates ``(theta, omega...)``.

    ``theta`` is the polar angle from the t axis; ``omega`` parametrizes the
    horizontal unit sphere S^{2n-1}: the circle angle for n = 1, Hopf
    coordinates ``(eta, xi_1, xi_2)`` for n = 2.
    """
    th = u[0]
    s, c = J.sin(th), J.cos(th)
    if n == 1:
        w = [J.cos(u[1]), J.sin(u[1])]
    elif n == 2:
        ce, se = J.cos(u[1]), J.sin(u[1])
        w = [ce * J.cos(u[2]), ce * J.sin(u[2]), se * J.cos(u[3]), se * J.sin(u[3])]
    else:
        raise ChartError("sphere-type charts are implemented for n = 1, 2")
    return [s * wi for wi in w] + [c]


def sphere_bounds(n: int):
    if n == 1:
        return [0.0, 0.0], [math.pi, TWO_PI]
    if n == 2:
        return [0.0, 0.0, 0.0, 0.0], [math.pi, 0.5 * math.pi, TWO_PI, TWO_PI]
    raise ChartError("sphere-type charts are implemented for n = 1, 2")


# -- surface charts ----------------------------------------------------------

@dataclass(frozen=True)
class Cap:
    """Excluded parameter strip ``[at - delta, at + delta]`` along ``axis``."""

    axis: int
    at: float


@dataclass(frozen=True)
class SurfaceChart:
    name: str
    surface: ImplicitSurface
    lo: np.ndarray
    hi: np.ndarray
    fn: Callable[[list], list]
    closed: bool = True
    caps: tuple = ()
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def dim(self) -> int:
        return len(self.lo)

    def jets(self, U) -> list:
        U = np.asarray(U, float)
        return self.fn(J.coordinates(U, 1))

    def points(self, U) -> np.ndarray:
        return np.stack([np.asarray(j.v) for j in self.jets(U)], axis=-1)

    def pullback(self, U):
        """Points and Riemannian area element ``sqrt(det(J^T G J))``."""
        js = self.jets(U)
        P = np.stack([np.asarray(j.v) for j in js], axis=-1)
        Jm = np.stack([j.dense(1) for j in js], axis=-2)  # (..., 2n+1, k)
        G = coordinate_metric(P)
        M = np.swapaxes(Jm, -1, -2) @ G @ Jm
        return P, np.sqrt(np.clip(np.linalg.det(M), 0.0, None))


def _with_translation(fn, q):
    if q is None or not np.any(q):
        return fn
    return lambda u: translate_jets(q, fn(u))


def _center(c, d):
    if c is None:
        return None
    c = np.broadcast_to(np.asarray(c, float), (d,)) if np.ndim(c) == 0 else np.asarray(c, float)
    if c.shape != (d,):
        raise ChartError(f"center must have {d} components")
    return c


def sphere_chart(c=0.0, r: float = 1.0, n: int = 1) -> SurfaceChart:
    """Euclidean sphere of radius ``r`` left-translated by ``c``.

    Characteristic points sit at the polar edges ``theta = 0, pi``.
    """
    d = 2 * n + 1
    q = _center(c, d)
    lo, hi = sphere_bounds(n)
    base = lambda u: [r * e for e in sphere_directions(u, n)]  # noqa: E731
    f = translated(F.euclidean_sphere(0.0, r), q)
    return SurfaceChart(f"sphere({np.asarray(c).tolist()},{r})", ImplicitSurface(f),
                        np.array(lo), np.array(hi), _with_translation(base, q),
                        caps=(Cap(0, 0.0), Cap(0, math.pi)), meta={"n": n, "r": r})


def ellipsoid_chart(a: float = 1.0, b: float = 1.0, c: float = 1.0, n: int = 1,
                    center=None) -> SurfaceChart:
    """``sum x_i^2/a^2 + y_i^2/b^2 + t^2/c^2 = 1``; characteristic only at the poles."""
    d = 2 * n + 1
    q = _center(center, d)
    lo, hi = sphere_bounds(n)
    scale = [a, b] * n + [c]

    def base(u):
        return [s * e for s, e in zip(scale, sphere_directions(u, n))]

    f = translated(F.ellipsoid(a, b, c), q)
    return SurfaceChart(f"ellipsoid({a},{b},{c})", ImplicitSurface(f), np.array(lo), np.array(hi),
                        _with_translation(base, q), caps=(Cap(0, 0.0), Cap(0, math.pi)),
                        meta={"n": n, "abc": (a, b, c)})


def torus_chart(R: float = 2.0, r: float = 1.0, center=None) -> SurfaceChart:
    """Torus of revolution about the t axis in H^1 (no characteristic points)."""
    if not R > r > 0:
        raise ChartError("torus needs R > r > 0")
    q = _center(center, 3)

    def base(u):
        xi, beta = u
        rho = J.cos(beta) * r + R
        return [rho * J.cos(xi), rho * J.sin(xi), J.sin(beta) * r]

    f = translated(F.torus(R, r), q)
    return SurfaceChart(f"torus({R},{r})", ImplicitSurface(f), np.zeros(2),
                        np.array([TWO_PI, TWO_PI]), _with_translation(base, q),
                        meta={"n": 1, "R": R, "r": r})


def cylinder_patch(r: float = 1.0, t0: float = 0.0, t1: float = 1.0) -> SurfaceChart:
    """Piece ``t0 <= t <= t1`` of the vertical cylinder ``|z| = r`` in H^1 (not closed)."""

    def base(u):
        xi, t = u
        return [J.cos(xi) * r, J.sin(xi) * r, t * 1.0]

    return SurfaceChart(f"cylinder_patch({r},{t0},{t1})", ImplicitSurface(F.cylinder(r)),
                        np.array([0.0, t0]), np.array([TWO_PI, t1]), base, closed=False,
                        meta={"n": 1, "r": r})


def plane_patch(a: float = 1.0) -> SurfaceChart:
    """Square ``|x|, |y| <= a`` of the plane ``t = 0``; characteristic at the origin."""

    def base(u):
        x, y = u
        return [x * 1.0, y * 1.0, x * 0.0]

    return SurfaceChart(f"plane_patch({a})", ImplicitSurface(F.coordinate(2)),
                        np.array([-a, -a]), np.array([a, a]), base, closed=False,
                        meta={"n": 1})


# -- domain charts -----------------------------------------------------------

@dataclass(frozen=True)
class DomainChart:
    name: str
    lo: np.ndarray
    hi: np.ndarray
    fn: Callable[[list], list]
    boundary: SurfaceChart | None = None
    volume: float | None = None  # closed-form volume when known
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def dim(self) -> int:
        return len(self.lo)

    def points(self, U) -> np.ndarray:
        return np.stack([np.asarray(j.v) for j in self.fn(J.coordinates(np.asarray(U, float), 1))],
                        axis=-1)

    def pullback(self, U):
        """Points and ``|det d(point)/d(params)|`` (Lebesgue = Haar volume)."""
        js = self.fn(J.coordinates(np.asarray(U, float), 1))
        P = np.stack([np.asarray(j.v) for j in js], axis=-1)
        Jm = np.stack([j.dense(1) for j in js], axis=-2)
        return P, np.abs(np.linalg.det(Jm))


def unit_ball_volume(dim: int) -> float:
    return math.pi ** (dim / 2) / math.gamma(dim / 2 + 1)


def ball_radial(c=0.0, r: float = 1.0, n: int = 1) -> DomainChart:
    """Euclidean ball of radius ``r`` left-translated by ``c``; radial chart."""
    d = 2 * n + 1
    q = _center(c, d)
    lo, hi = sphere_bounds(n)

    def base(u):
        rad = u[0] * r
        return [rad * e for e in sphere_directions(u[1:], n)]

    return DomainChart(f"ball_radial({np.asarray(c).tolist()},{r})", np.array([0.0] + lo),
                       np.array([1.0] + hi), _with_translation(base, q),
                       boundary=sphere_chart(c, r, n), volume=unit_ball_volume(d) * r ** d,
                       meta={"n": n})


def solid_ellipsoid(a: float = 1.0, b: float = 1.0, c: float = 1.0, n: int = 1,
                    center=None) -> DomainChart:
    d = 2 * n + 1
    q = _center(center, d)
    lo, hi = sphere_bounds(n)
    scale = [a, b] * n + [c]

    def base(u):
        return [u[0] * s * e for s, e in zip(scale, sphere_directions(u[1:], n))]

    vol = unit_ball_volume(d) * a ** n * b ** n * c
    return DomainChart(f"solid_ellipsoid({a},{b},{c})", np.array([0.0] + lo), np.array([1.0] + hi),
                       _with_translation(base, q), boundary=ellipsoid_chart(a, b, c, n, center),
                       volume=vol, meta={"n": n})


def solid_torus(R: float = 2.0, r: float = 1.0, center=None) -> DomainChart:
    q = _center(center, 3)

    def base(u):
        s, xi, beta = u
        rho = J.cos(beta) * (s * r) + R
        return [rho * J.cos(xi), rho * J.sin(xi), J.sin(beta) * (s * r)]

    return DomainChart(f"solid_torus({R},{r})", np.zeros(3), np.array([1.0, TWO_PI, TWO_PI]),
                       _with_translation(base, q), boundary=torus_chart(R, r, center),
                       volume=2 * math.pi ** 2 * R * r * r, meta={"n": 1})


def box(lo: Sequence[float], hi: Sequence[float]) -> DomainChart:
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    dim_of(lo)
    return DomainChart(f"box({lo.tolist()},{hi.tolist()})", lo, hi, lambda u: [ui * 1.0 for ui in u],
                       volume=float(np.prod(hi - lo)), meta={"n": dim_of(lo)})


# -- level-set families ------------------------------------------------------

@dataclass(frozen=True)
class RayFamily:
    """Level sets ``{F = s}`` reached along rays ``base(u) + R dir(u)``.

    ``F`` must be monotone along each ray near ``R = 1``; the radius solving
    ``F = s`` is found by Newton's method and differentiated implicitly, so
    the resulting charts carry exact first derivatives.
    """

    F: ScalarField
    base: Callable[[list], list]
    direction: Callable[[list], list]
    lo: np.ndarray
    hi: np.ndarray
    caps: tuple = ()
    closed: bool = True
    label: str = ""
    orientation: int = 1

    def _radius(self, U, s):
        U = np.asarray(U, float)
        u0 = J.coordinates(U, 1)
        b = np.stack([np.asarray(j.v) for j in self.base(u0)], axis=-1)
        e = np.stack([np.asarray(j.v) for j in self.direction(u0)], axis=-1)
        R = np.ones(U.shape[:-1])
        s = np.broadcast_to(np.asarray(s, float), R.shape)
        for _ in range(60):
            jet = self.F.jet(b + R[..., None] * e, 1)
            slope = np.einsum("...i,...i->...", jet.dense(1), e)
            step = (jet.v - s) / slope
            R = R - step
            if np.all(np.abs(step) <= 1e-15 * np.maximum(1.0, np.abs(R))):
                break
        return R

    def points_jets(self, u: list, s_jet) -> list:
        """Coordinate jets of ``base + R dir`` with ``R`` differentiated implicitly."""
        U = np.stack([np.asarray(ui.v) for ui in u], axis=-1)
        s_val = np.asarray(s_jet.v) if isinstance(s_jet, J.Jet) else s_jet
        R = self._radius(U, s_val)
        b, e = self.base(u), self.direction(u)
        P = np.stack([np.asarray(bi.v) + R * np.asarray(ei.v) for bi, ei in zip(b, e)], axis=-1)
        grad = self.F.jet(P, 1).dense(1)  # Euclidean gradient of F
        ev = np.stack([np.asarray(ei.v) for ei in e], axis=-1)
        slope = np.einsum("...i,...i->...", grad, ev)
        # dR = (ds - grad F . (db + R de)) / (grad F . dir)
        dpos = sum(_dense(bi) * grad[..., i, None] + _dense(ei) * (R * grad[..., i])[..., None]
                   for i, (bi, ei) in enumerate(zip(b, e)))
        ds = _dense(s_jet) if isinstance(s_jet, J.Jet) else 0.0
        dR = (ds - dpos) / slope[..., None]
        Rj = J.Jet(1, R, dR, d=u[0].d)
        return [bi + Rj * ei for bi, ei in zip(b, e)]

    def level_chart(self, s: float) -> SurfaceChart:
        fam = self

        def fn(u):
            return fam.points_jets(u, float(s))

        surf = ImplicitSurface(self.F.shifted(s) if s else self.F, self.orientation)
        return SurfaceChart(f"level[{self.label}]({s:+.6g})", surf, self.lo, self.hi, fn,
                            closed=self.closed, caps=self.caps)

    def slab_chart(self, eps: float) -> DomainChart:
        """The region ``{-eps < F < eps}`` with parameters ``(s, u)``."""
        fam = self

        def fn(v):
            return fam.points_jets(v[1:], v[0])

        return DomainChart(f"slab[{self.label}]({eps})", np.concatenate([[-eps], self.lo]),
                           np.concatenate([[eps], self.hi]), fn, meta={"family": self})


def _dense(j) -> np.ndarray:
    return j.dense(1) if j.order >= 1 else np.zeros(np.shape(j.v) + (j.d,))


def _zero_like(u0, value=0.0):
    return u0 * 0.0 + value


def cylinder_family(t0: float = 0.0, t1: float = 1.0) -> RayFamily:
    """Level sets of ``|z| - 1`` in H^1 over ``t0 <= t <= t1`` (coaxial cylinders)."""

    def base(u):
        return [_zero_like(u[0]), _zero_like(u[0]), u[1] * 1.0]

    def direction(u):
        return [J.cos(u[0]), J.sin(u[0]), _zero_like(u[0])]

    return RayFamily(F.radial_distance(1.0), base, direction, np.array([0.0, t0]),
                     np.array([TWO_PI, t1]), closed=False, label="cylinder")


def ellipsoid_family(a: float = 1.0, b: float = 1.0, c: float = 1.0, n: int = 1,
                     F_field: ScalarField | None = None) -> RayFamily:
    """Level sets of ``F`` (default: the ellipsoid function) along ellipsoidal rays."""
    lo, hi = sphere_bounds(n)
    scale = [a, b] * n + [c]

    def base(u):
        return [_zero_like(u[0]) for _ in scale]

    def direction(u):
        return [s * e for s, e in zip(scale, sphere_directions(u, n))]

    Ff = F_field if F_field is not None else F.ellipsoid(a, b, c)
    return RayFamily(Ff, base, direction, np.array(lo), np.array(hi),
                     caps=(Cap(0, 0.0), Cap(0, math.pi)), label=Ff.label)


# -- catalog -----------------------------------------------------------------

SURFACE_CHARTS = {
    "sphere": sphere_chart,
    "ellipsoid": ellipsoid_chart,
    "torus": torus_chart,
    "cylinder_patch": cylinder_patch,
    "plane_patch": plane_patch,
}

DOMAIN_CHARTS = {
    "ball_radial": ball_radial,
    "solid_ellipsoid": solid_ellipsoid,
    "solid_torus": solid_torus,
    "box": box,
    "slab": None,  # handled specially: slab(<field>, eps)
}

_N_AWARE = {"sphere", "ellipsoid", "ball_radial", "solid_ellipsoid"}


def _call(table, spec: str, n: int):
    name, args = parse_call(spec)
    if name not in table:
        raise F.CatalogError(name, table)
    fn = table[name]
    kwargs = {"n": n} if name in _N_AWARE else {}
    if name not in _N_AWARE and n != 1 and name not in ("box",):
        raise ChartError(f"chart {name!r} is only available in H^1")
    try:
        return fn(*args, **kwargs)
    except TypeError as exc:
        raise ChartError(f"bad arguments for chart {name!r}: {exc}") from None


def resolve_surface_chart(spec: str, n: int = 1) -> SurfaceChart:
    return _call(SURFACE_CHARTS, spec, n)


_SLAB = re.compile(r"^slab\s*\((.*),\s*([^,()]+)\)$", re.S)


def resolve_domain_chart(spec: str, n: int = 1):
    """Domain chart from a catalog reference; ``slab(<family>, eps)`` gives a RayFamily slab."""
    m = _SLAB.match(spec.strip())
    if m:
        inner, eps = m.group(1).strip(), float(m.group(2))
        return resolve_family(inner, n).slab_chart(eps)
    return _call(DOMAIN_CHARTS, spec, n)


def resolve_family(spec: str, n: int = 1) -> RayFamily:
    name, args = parse_call(spec)
    if name == "cylinder":
        return cylinder_family(*args)
    if name == "ellipsoid":
        return ellipsoid_family(*args, n=n)
    raise F.CatalogError(name, ["cylinder", "ellipsoid"])
