"""Integral and pointwise identities as LHS/RHS report pairs.

Every report integrates both sides independently and compares them. Surface
integrals use the H-perimeter measure with characteristic caps excised and
extrapolated; volume integrals use the domain chart's tensor rule.

Several tags come in two flavours. The plain tag evaluates the formula as
stated (``c1f``, ``c2f``, ...). The ``-derived`` tags evaluate the form the
integrations by parts actually produce; see ``reilly_boundary_integrand``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import fields as F
from .calculus import derossi_terms, hessian_split, horizontal_ops
from .charts import DomainChart, RayFamily, SurfaceChart, ellipsoid_family
from .fields import ScalarField
from .group import dim_of, perp, structural_matrix
from .quadrature import (IntegralResult, QuadratureSpec, domain_integral, excised_domain_integral,
                         excised_surface_integral, sliced_integral)
from .surface import (CHAR_TOL, HorizontalField, ImplicitSurface, SurfaceGeometry,
                      constant_field, d_hs, dvarpi_perp, gradient_field, lap_hs_intrinsic,
                      nabla_nu_check, normal_field, normalize_defining, skew_reference,
                      surface_geometry, tangent_part, tangential_ops)

TOLERANCES = {"pointwise": 1e-8, "surface": 1e-3, "foliation": 1e-2, "gap": 1e-6}

STATUSES = ("pass", "fail", "inconclusive")


class NotClosed(ValueError):
    """The operation needs a closed (boundaryless) surface chart."""


@dataclass(frozen=True)
class IdentityReport:
    name: str
    lhs: IntegralResult | float
    rhs: IntegralResult | float
    residual: float
    relResidual: float
    inputs: dict
    tolerance: float
    status: str
    meta: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    @property
    def lhs_value(self) -> float:
        return _value(self.lhs)

    @property
    def rhs_value(self) -> float:
        return _value(self.rhs)

    def as_dict(self) -> dict:
        trails = {}
        for side in ("lhs", "rhs"):
            r = getattr(self, side)
            if isinstance(r, IntegralResult):
                trails[side] = r.as_dict()
        return {
            "name": self.name,
            "inputs": self.inputs,
            "lhs": self.lhs_value,
            "rhs": self.rhs_value,
            "residual": self.residual,
            "relResidual": self.relResidual,
            "tolerance": self.tolerance,
            "trails": trails,
            "meta": self.meta,
            "status": self.status,
        }


def _value(x) -> float:
    return float(x.value) if isinstance(x, IntegralResult) else float(x)


def _converged(*results) -> bool:
    return all(r.converged for r in results if isinstance(r, IntegralResult))


def make_report(name: str, lhs, rhs, tolerance: float, inputs: dict | None = None,
                meta: dict | None = None, extra: Sequence[IntegralResult] = ()) -> IdentityReport:
    """Compare two sides; a small residual on unconverged trails is inconclusive."""
    lv, rv = _value(lhs), _value(rhs)
    residual = abs(lv - rv)
    rel = residual / max(abs(lv), abs(rv), 1.0)
    if not math.isfinite(rel):
        status = "inconclusive"
    elif rel <= tolerance:
        status = "pass" if _converged(lhs, rhs, *extra) else "inconclusive"
    else:
        status = "fail"
    return IdentityReport(name, lhs, rhs, residual, rel, dict(inputs or {}), tolerance, status,
                          dict(meta or {}))


# -- shared integrands -------------------------------------------------------

def _tangent_quadratic(geom: SurfaceGeometry, X: np.ndarray) -> np.ndarray:
    """``S_H(X_HS, X_HS)`` for horizontal vectors ``X``."""
    c = np.einsum("...ia,...i->...a", geom.tangentFrame, X)
    return np.einsum("...a,...ab,...b->...", c, geom.S_sym, c)


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def reilly_volume_integrand(phi: ScalarField) -> Callable[[np.ndarray], np.ndarray]:
    """``psi^2 - |Hess_H phi|^2 + 2 <grad_H T phi, (grad_H phi)^perp>`` with ``psi = Delta_H phi``."""
    def integrand(P):
        o = horizontal_ops(phi, P)
        return (o.lapH ** 2 - np.sum(o.hessH ** 2, axis=(-2, -1))
                + 2.0 * _dot(o.gradH_Tphi, perp(o.gradH)))
    return integrand


def reilly_boundary_integrand(surf: ImplicitSurface, phi: ScalarField, cross: float = 1.0,
                              vertical: bool = False):
    """Boundary density of the Reilly identity.

    ``2 phi_nu (Delta_HS phi - (cross/2) varpi phi_perp) - H phi_nu^2 - S(grad_HS phi, grad_HS phi)``.
    ``cross = 1`` is the combination ``2 phi_nu (L_HS phi + varpi phi_perp / 2)``;
    ``cross = 3`` is ``2 phi_nu (L_HS phi - varpi phi_perp / 2)``. With
    ``vertical=True`` the term ``-T phi phi_perp`` is added; it comes from the
    vertical part of the bracket ``[nu_H, tau]`` and is what makes the
    identity hold when ``T phi`` does not vanish.
    """
    def integrand(geom):
        to = tangential_ops(surf, geom, phi)
        dn, dp = to.dd_nuH, to.dd_nuH_perp
        val = (2.0 * dn * (to.lapHS - 0.5 * cross * geom.varpi * dp)
               - geom.Hcurv * dn ** 2 - _tangent_quadratic(geom, to.gradHS))
        if vertical:
            val = val - to.Tphi * dp
        return val
    return integrand


def _boundary_chart(D: DomainChart, S: SurfaceChart | None) -> SurfaceChart:
    S = S if S is not None else D.boundary
    if S is None:
        raise NotClosed(f"domain {D.name} has no boundary chart")
    if not S.closed:
        raise NotClosed(f"surface chart {S.name} is not closed")
    return S


def _inputs(**kw) -> dict:
    out = {}
    for k, v in kw.items():
        if hasattr(v, "label"):
            v = v.label
        elif hasattr(v, "name"):
            v = v.name
        out[k] = v
    return out


# -- pointwise battery -------------------------------------------------------

def sample_surface_points(chart: SurfaceChart, count: int, seed: int = 0,
                          min_ratio: float = 1e-2) -> np.ndarray:
    """``count`` chart points drawn uniformly in parameters, away from characteristic points."""
    rng = np.random.default_rng(seed)
    out = []
    need = count
    while need > 0:
        U = chart.lo + rng.random((4 * need + 8, chart.lo.size)) * (chart.hi - chart.lo)
        P = chart.points(U)
        g = surface_geometry(chart.surface, P, shape=False)
        P = P[g.pH_norm > min_ratio]
        out.append(P[:need])
        need -= len(out[-1])
    return np.concatenate(out)


def _pointwise(name, lhs, rhs, inputs, tol, note=""):
    lhs = np.asarray(lhs, float)
    rhs = np.broadcast_to(np.asarray(rhs, float), lhs.shape)
    diff = np.abs(lhs - rhs)
    rel = diff / np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
    k = int(np.argmax(rel)) if rel.size else 0
    meta = {"points": int(lhs.size)}
    if note:
        meta["note"] = note
    status = "pass" if rel.size == 0 or rel[k] <= tol else "fail"
    if not rel.size:
        return IdentityReport(name, 0.0, 0.0, 0.0, 0.0, inputs, tol, status, meta)
    return IdentityReport(name, float(lhs.flat[k]), float(rhs.flat[k]), float(np.max(diff)),
                          float(rel.flat[k]), inputs, tol, status, meta)


def pointwise_battery(surf: ImplicitSurface, phi: ScalarField, points,
                      tolerance: float = TOLERANCES["pointwise"],
                      char_tol: float = CHAR_TOL) -> list[IdentityReport]:
    """Per-point residuals of six local identities at non-characteristic points.

    ``ljjjkl``: intrinsic ``Delta_HS phi`` against ``Delta_H phi + H phi_nu - Hess(nu, nu)``.
    ``derossi``: ``1/2 Delta_H |grad_H phi|^2`` computed directly against its expansion.
    ``hessian-skew``: skew part of ``Hess_H phi`` against ``-(T phi / 2) C`` and the norm split.
    ``a-h``: ``A_H`` against ``(varpi/2) C`` on ``HS``, ``|A_H|^2`` and ``A_H nu_perp = 0``.
    ``trace``: ``Tr B_H(., C_HS .) = (n - 1) varpi``.
    ``nabla-nu``: ``nabla_nu nu = -varpi C nu`` for the normalized extension.
    """
    P = np.asarray(points, float)
    P = P.reshape(-1, P.shape[-1])
    n = dim_of(P)
    geom0 = surface_geometry(surf, P, char_tol, shape=False)
    keep = ~geom0.characteristic
    note = f"skipped {int(np.sum(~keep))} characteristic point(s)" if not np.all(keep) else ""
    P = P[keep]
    inputs = _inputs(surface=surf, phi=phi, n=n)
    if len(P) == 0:
        names = ("ljjjkl", "derossi", "hessian-skew", "a-h", "trace", "nabla-nu")
        return [_pointwise(nm, [], [], inputs, tolerance, note) for nm in names]
    geom = surface_geometry(surf, P, char_tol)
    to = tangential_ops(surf, geom, phi)
    ops = horizontal_ops(phi, P)
    C = structural_matrix(n)
    reports = [_pointwise("ljjjkl", lap_hs_intrinsic(surf, geom, phi), to.lapHS, inputs,
                          tolerance, note)]
    dr = derossi_terms(phi, P)
    reports.append(_pointwise("derossi", dr["direct"], dr["rhs"], inputs, tolerance, note))

    split = hessian_split(ops.hessH, ops.Tphi, tol=np.inf)
    skew_err = np.max(np.abs(split.skew + 0.5 * ops.Tphi[..., None, None] * C), axis=(-2, -1))
    norm2 = np.sum(ops.hessH ** 2, axis=(-2, -1))
    lhs = norm2 + skew_err
    reports.append(_pointwise("hessian-skew", lhs, split.gramSym + 0.5 * n * ops.Tphi ** 2,
                              inputs, tolerance, note))

    A = geom.A_skew
    a_err = (np.max(np.abs(A - skew_reference(geom)), axis=(-2, -1))
             + np.linalg.norm(A[..., :, 0], axis=-1))
    reports.append(_pointwise("a-h", np.sum(A * A, axis=(-2, -1)) + a_err,
                              0.5 * (n - 1) * geom.varpi ** 2, inputs, tolerance, note))

    tau = geom.tangentFrame
    M = np.einsum("...ib,ij,...ja->...ba", tau, C, tau)
    tr = np.einsum("...ab,...ba->...", geom.B, M)
    reports.append(_pointwise("trace", tr, (n - 1) * geom.varpi, inputs, tolerance, note))

    reports.append(_pointwise("nabla-nu", nabla_nu_check(surf, geom), 0.0, inputs, tolerance, note))
    return reports


# -- Reilly identity ---------------------------------------------------------

def reilly_report(D: DomainChart, S: SurfaceChart | None, phi: ScalarField,
                  spec: QuadratureSpec = QuadratureSpec(), tolerance: float | None = None,
                  vertical: bool = False) -> IdentityReport:
    """Volume side against boundary side for ``psi := Delta_H phi``, ``phi_b := phi|_S``.

    ``vertical=True`` gives the ``reilly-vertical`` report, which adds the
    ``-T phi phi_perp`` boundary term.
    """
    S = _boundary_chart(D, S)
    tol = TOLERANCES["surface"] if tolerance is None else tolerance
    lhs = domain_integral(D, reilly_volume_integrand(phi), spec)
    rhs = excised_surface_integral(S, reilly_boundary_integrand(S.surface, phi, 1.0, vertical),
                                   "h_perimeter", spec)
    name = "reilly-vertical" if vertical else "reilly"
    return make_report(name, lhs, rhs, tol, _inputs(domain=D, surface=S, phi=phi),
                       {"boundaryForm": "with -T phi phi_perp" if vertical else "L_HS + varpi/2"})


# -- divergence identity and Green's formulas -----------------------------------

def horizontal_field(spec, surf: ImplicitSurface | None = None, n: int = 1) -> HorizontalField:
    """Horizontal field from ``nu_perp``, ``nu``, ``zero``, ``constant(a, b, ...)`` or ``grad(<field>)``."""
    if isinstance(spec, HorizontalField):
        return spec
    spec = str(spec).strip()
    if spec.startswith("grad(") and spec.endswith(")"):
        return gradient_field(F.resolve_field(spec[5:-1]))
    name, args = F.parse_call(spec)
    if name in ("nu_perp", "nu"):
        if surf is None:
            raise ValueError(f"field {name!r} needs a surface")
        return normal_field(surf, perp_=name == "nu_perp")
    if name == "zero":
        return constant_field([0.0] * (2 * n))
    if name == "constant":
        if len(args) != 2 * n:
            raise ValueError(f"constant field needs {2 * n} components, got {len(args)}")
        return constant_field(args)
    raise F.CatalogError(name, ["constant", "grad", "nu", "nu_perp", "zero"])


def _closed(S: SurfaceChart):
    if not S.closed:
        raise NotClosed(f"surface chart {S.name} is not closed")


def gd2_report(S: SurfaceChart, X: HorizontalField, spec: QuadratureSpec = QuadratureSpec(),
               tolerance: float | None = None) -> IdentityReport:
    """``int D_HS X = -int H_H <X, nu_H>``; the tangent part's integral is kept in ``meta``."""
    _closed(S)
    surf = S.surface
    tol = TOLERANCES["surface"] if tolerance is None else tolerance
    lhs = excised_surface_integral(S, lambda g: d_hs(g, X), "h_perimeter", spec)
    rhs = excised_surface_integral(S, lambda g: -g.Hcurv * _dot(X(g.p), g.nuH), "h_perimeter",
                                   spec)
    XT = tangent_part(surf, X)
    tang = excised_surface_integral(S, lambda g: d_hs(g, XT), "h_perimeter", spec)
    meta = {"tangentPart": tang.value, "tangentPartConverged": tang.converged}
    return make_report("gd2", lhs, rhs, tol, _inputs(surface=S, X=X), meta, extra=(tang,))


def green_report(S: SurfaceChart, phi: ScalarField, psi: ScalarField,
                 spec: QuadratureSpec = QuadratureSpec(),
                 tolerance: float | None = None) -> list[IdentityReport]:
    """The three Green formulas for ``L_HS`` on a closed surface."""
    _closed(S)
    surf = S.surface
    tol = TOLERANCES["surface"] if tolerance is None else tolerance
    inputs = _inputs(surface=S, phi=phi, psi=psi)

    def integral(fn):
        return excised_surface_integral(S, fn, "h_perimeter", spec)

    def ops(g, f):
        return tangential_ops(surf, g, f)

    i1 = integral(lambda g: ops(g, phi).Lhs)
    out = [make_report("green-i", i1, 0.0, tol, inputs)]

    lhs2 = integral(lambda g: psi(g.p) * ops(g, phi).Lhs)
    rhs2 = integral(lambda g: -_dot(ops(g, phi).gradHS, ops(g, psi).gradHS))
    out.append(make_report("green-ii", lhs2, rhs2, tol, inputs))

    half = (phi * phi).scaled(0.5)
    lhs3 = integral(lambda g: phi(g.p) * ops(g, phi).Lhs)
    rhs3 = integral(lambda g: -np.sum(ops(g, phi).gradHS ** 2, axis=-1))
    whole = integral(lambda g: ops(g, half).Lhs)
    out.append(make_report("green-iii", lhs3, rhs3, tol, inputs,
                           {"halfSquare": whole.value, "halfSquareConverged": whole.converged},
                           extra=(whole,)))
    return out


def mio_report(S: SurfaceChart, spec: QuadratureSpec = QuadratureSpec(),
               tolerance: float | None = None) -> IdentityReport:
    """``int (d varpi / d nu_perp - n varpi^2) sigma_H = 0`` on a closed surface."""
    _closed(S)
    surf = S.surface
    tol = TOLERANCES["surface"] if tolerance is None else tolerance

    def integrand(g):
        return dvarpi_perp(surf, g) - g.n * g.varpi ** 2

    lhs = excised_surface_integral(S, integrand, "h_perimeter", spec)
    return make_report("mio", lhs, 0.0, tol, _inputs(surface=S))


# -- volume and curvature balances ---------------------------------------------

def _xs(geom):
    """``x_H``, ``<x_H, nu>``, ``<x_H^perp, nu>``, ``<x_H, nu^perp>`` at the nodes."""
    m = 2 * geom.n
    x = geom.p[..., :m]
    return x, _dot(x, geom.nuH), _dot(perp(x), geom.nuH), _dot(x, geom.nuH_perp)


def c1f_report(S: SurfaceChart, V: Sequence[float], spec: QuadratureSpec = QuadratureSpec(),
               tolerance: float | None = None, derived: bool = False) -> IdentityReport:
    """``int {H <V,nu>^2 - S(V_HS, V_HS)} = k int varpi <V,nu><V,nu_perp>``; ``k`` is 3, or 1 if derived.

    ``meta["reillyBoundary"]`` is the Reilly boundary integral for ``phi = <V, x_H>``,
    computed through the same integrand as ``reilly_report``.
    """
    _closed(S)
    V = np.asarray(V, float)
    tol = TOLERANCES["surface"] if tolerance is None else tolerance
    k = 1.0 if derived else 3.0

    def lhs_fn(g):
        return g.Hcurv * _dot(V, g.nuH) ** 2 - _tangent_quadratic(g, np.broadcast_to(V, g.nuH.shape))

    lhs = excised_surface_integral(S, lhs_fn, "h_perimeter", spec)
    rhs0 = excised_surface_integral(S, lambda g: g.varpi * _dot(V, g.nuH) * _dot(V, g.nuH_perp),
                                    "h_perimeter", spec)
    rhs = replace(rhs0, value=k * rhs0.value,
                  refinementTrail=tuple((l, k * v) for l, v in rhs0.refinementTrail))
    phi = F.linear_horizontal(V)
    bnd = excised_surface_integral(S, reilly_boundary_integrand(S.surface, phi), "h_perimeter",
                                   spec)
    name = "c1f-derived" if derived else "c1f"
    return make_report(name, lhs, rhs, tol, _inputs(surface=S, V=V.tolist()),
                       {"coefficient": k, "reillyBoundary": bnd.value})


def _volume(D: DomainChart, spec: QuadratureSpec) -> IntegralResult:
    return domain_integral(D, lambda P: np.ones(P.shape[:-1]), spec)


def _scaled(r: IntegralResult, k: float) -> IntegralResult:
    return replace(r, value=k * r.value,
                   refinementTrail=tuple((l, k * v) for l, v in r.refinementTrail),
                   errorEstimate=abs(k) * r.errorEstimate)


def volume_recovery(D: DomainChart, S: SurfaceChart | None, tag: str,
                    spec: QuadratureSpec = QuadratureSpec(),
                    tolerance: float | None = None) -> IdentityReport:
    """Volume of ``D`` against a boundary formula: ``c2f``, ``c3f``, ``c4f`` and their ``-derived`` forms.

    Stated forms (``a = <x,nu>``, ``b = <x^perp,nu>``, ``c = <x,nu^perp>``):
      c2f: ``Vol = -(1/2n) int {H b^2 - 3 varpi a b - S(x^perp_HS)}``
      c3f: ``Vol = (1/(2n(2n-1))) int {-H a^2 + 3 varpi a c + S(x_HS)}``
      c4f: ``Vol = (1/(4n(n-1))) int {-H (a^2 - b^2) + S(x_HS) - S(x^perp_HS)}``
    Derived forms:
      c2f: ``Vol = (1/2n) int {H b^2 - varpi a b - S(x^perp_HS)}``
      c3f: ``Vol = (1/(2n(2n-1))) int {-H a^2 + varpi a c + S(x_HS)}``
      c4f: ``Vol = (1/(4n(n-1))) int {-H (a^2 + b^2) + S(x_HS) + S(x^perp_HS)}``
    """
    S = _boundary_chart(D, S)
    n = dim_of(S.points(np.atleast_2d(0.5 * (S.lo + S.hi))))
    tol = TOLERANCES["surface"] if tolerance is None else tolerance
    base, _, flavour = tag.partition("-")
    derived = flavour == "derived"
    if base == "c4f" and n < 2:
        raise ValueError("c4f needs n > 1")

    def integrand(g):
        x, a, b, c = _xs(g)
        H = g.Hcurv
        Sx, Sp = _tangent_quadratic(g, x), _tangent_quadratic(g, perp(x))
        if base == "c2f":
            return H * b ** 2 - (1.0 if derived else 3.0) * g.varpi * a * b - Sp
        if base == "c3f":
            return -H * a ** 2 + (1.0 if derived else 3.0) * g.varpi * a * c + Sx
        if derived:
            return -H * (a ** 2 + b ** 2) + Sx + Sp
        return -H * (a ** 2 - b ** 2) + Sx - Sp

    factor = {"c2f": (1.0 if derived else -1.0) / (2 * n),
              "c3f": 1.0 / (2 * n * (2 * n - 1)),
              "c4f": 1.0 / (4 * n * (n - 1)) if n > 1 else float("nan")}[base]
    surf_int = excised_surface_integral(S, integrand, "h_perimeter", spec)
    vol = _volume(D, spec)
    rec = _scaled(surf_int, factor)
    meta = {"oracleVolume": D.volume, "recoveredVolume": rec.value,
            "form": "derived" if derived else "stated"}
    return make_report(tag, vol, rec, tol, _inputs(domain=D, surface=S, n=n), meta)


def c0f_report(D: DomainChart, S: SurfaceChart | None, phi: ScalarField,
               spec: QuadratureSpec = QuadratureSpec(), tolerance: float | None = None,
               equality: bool | None = None) -> IdentityReport:
    """Gap of the Newton-type inequality: volume side minus boundary side.

    Passes when the relative gap is ``>= -tolerance``; in the equality case
    (``phi`` with ``Hess^sym = (psi / 2n) Id``, e.g. ``rho2_half``) it must
    also be ``<= tolerance``.
    """
    S = _boundary_chart(D, S)
    tol = TOLERANCES["gap"] if tolerance is None else tolerance
    n = D.meta.get("n") if D.meta.get("n") else dim_of(D.points(np.atleast_2d(0.5 * (D.lo + D.hi))))

    def volume_side(P):
        o = horizontal_ops(phi, P)
        return ((2 * n - 1) / (2 * n) * o.lapH ** 2 - 0.5 * n * o.Tphi ** 2
                + 2.0 * _dot(o.gradH_Tphi, perp(o.gradH)))

    lhs = domain_integral(D, volume_side, spec)
    rhs = excised_surface_integral(S, reilly_boundary_integrand(S.surface, phi), "h_perimeter",
                                   spec)
    if equality is None:
        equality = phi.label == "rho2_half"
    gap = lhs.value - rhs.value
    scale = max(abs(lhs.value), abs(rhs.value), 1.0)
    rel = gap / scale if math.isfinite(gap) else float("nan")
    ok = rel >= -tol and (not equality or rel <= tol)
    if not math.isfinite(rel):
        status = "inconclusive"
    elif ok:
        status = "pass" if _converged(lhs, rhs) else "inconclusive"
    else:
        status = "fail"
    return IdentityReport("c0f", lhs, rhs, abs(gap), abs(rel),
                          _inputs(domain=D, surface=S, phi=phi), tol, status,
                          {"gap": gap, "relGap": rel, "equalityCase": bool(equality)})


# -- foliation ---------------------------------------------------------------

@dataclass(frozen=True)
class Foliation:
    """Slab ``{|f~| < eps}`` of level sets of the normalized defining function ``f~``."""

    family: RayFamily
    eps: float
    base: ImplicitSurface
    normalized: ImplicitSurface

    @property
    def phi(self) -> ScalarField:
        return self.normalized.f


def ellipsoid_foliation(a: float = 1.0, b: float = 1.0, c: float = 1.0, n: int = 1,
                        eps: float = 0.01) -> Foliation:
    base = ImplicitSurface(F.ellipsoid(a, b, c), label=f"ellipsoid({a},{b},{c})")
    norm = normalize_defining(base)
    fam = ellipsoid_family(a, b, c, n, F_field=norm.f)
    return Foliation(fam, float(eps), base, norm)


def _leaf(fol: Foliation, s: float, orientation: int = 1) -> SurfaceChart:
    ch = fol.family.level_chart(s)
    surf = ch.surface if orientation > 0 else ch.surface.flipped()
    return replace(ch, surface=surf)


def _two_sided(fol: Foliation, integrand_for, spec):
    """Sum of excised integrals over ``S+`` (outward ``+grad f~``) and ``S-`` (outward ``-grad f~``)."""
    parts = [excised_surface_integral(_leaf(fol, sgn * fol.eps, sgn), integrand_for(sgn),
                                      "h_perimeter", spec) for sgn in (1, -1)]
    value = parts[0].value + parts[1].value
    trail = tuple((l, v0 + v1) for (l, v0), (_, v1) in zip(parts[0].refinementTrail,
                                                           parts[1].refinementTrail))
    return IntegralResult(value, trail, parts[0].errorEstimate + parts[1].errorEstimate,
                          parts[0].excisionTrail, parts[0].fit,
                          meta={"plus": parts[0].value, "minus": parts[1].value,
                                "converged": [p.converged for p in parts]}), parts


def foliation_report(fol: Foliation, spec: QuadratureSpec = QuadratureSpec(),
                     slice_count: int = 8, tolerance: float | None = None,
                     points: int = 100, seed: int = 0) -> list[IdentityReport]:
    """Slab identities for the foliation by level sets of ``f~``.

    ``pfa2``: slab integral of the Reilly volume density of ``f~`` against
    ``-int_{S+ u S-} H_H``. ``foliation-curvature``: the sliced integral of
    ``H^2 - |S_H|^2 + ((3n-1)/2) varpi^2`` against the same right side.
    ``foliation-coarea``: the slab integral against the sliced integral of
    ``H^2 - |S_H|^2 + 2 d varpi/d nu_perp - ((n+1)/2) varpi^2``.
    ``foliation-jnorm``: pointwise ``|J_H nu_H|^2 = |S_H|^2 + ((n+1)/2) varpi^2`` on ``f~ = 0``.
    """
    tol = TOLERANCES["foliation"] if tolerance is None else tolerance
    fam, phi = fol.family, fol.phi
    slab = fam.slab_chart(fol.eps)
    caps = [replace(cap, axis=cap.axis + 1) for cap in fam.caps]
    inputs = {"family": fam.label, "eps": fol.eps, "slices": slice_count}

    lhsA = excised_domain_integral(slab, reilly_volume_integrand(phi), caps, spec)
    rhs, parts = _two_sided(fol, lambda sgn: (lambda g: -g.Hcurv), spec)

    def curvature(g):
        return (g.Hcurv ** 2 - np.sum(g.S_sym ** 2, axis=(-2, -1))
                + 0.5 * (3 * g.n - 1) * g.varpi ** 2)

    lhsB = sliced_integral(fam, fol.eps, slice_count, curvature, spec)

    leaves = ImplicitSurface(phi)

    def second_variation(g):
        return (g.Hcurv ** 2 - np.sum(g.S_sym ** 2, axis=(-2, -1))
                + 2.0 * dvarpi_perp(leaves, g) - 0.5 * (g.n + 1) * g.varpi ** 2)

    lhsM = sliced_integral(fam, fol.eps, slice_count, second_variation, spec)

    reports = [
        make_report("pfa2", lhsA, rhs, tol, inputs, {"plus": parts[0].value,
                                                      "minus": parts[1].value},
                    extra=parts),
        make_report("foliation-curvature", lhsB, rhs, tol, inputs, extra=parts),
        make_report("foliation-coarea", lhsA, lhsM, tol, inputs),
    ]

    chart0 = fam.level_chart(0.0)
    P = sample_surface_points(chart0, points, seed)
    geom = surface_geometry(fol.normalized, P)
    m = 2 * geom.n
    jn = np.sum(geom.Jnu[..., :m] ** 2, axis=(-2, -1))
    expect = np.sum(geom.S_sym ** 2, axis=(-2, -1)) + 0.5 * (geom.n + 1) * geom.varpi ** 2
    edge = sample_surface_points(_leaf(fol, fol.eps), points, seed)
    eik = {where: float(np.max(np.abs(np.linalg.norm(horizontal_ops(phi, Q).gradH, axis=-1) - 1)))
           for where, Q in (("leaf0", P), ("leafPlus", edge))}
    jrep = _pointwise("foliation-jnorm", jn, expect, _inputs(surface=fol.normalized),
                      TOLERANCES["pointwise"])
    reports.append(replace(jrep, meta={**jrep.meta, "eikonalDeviation": eik}))
    return reports
