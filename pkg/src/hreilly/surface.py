"""Per-point geometry of implicit hypersurfaces ``S = {f = 0}`` in H^n.

Everything here is batched: geometry is computed for an array of points at
once and characteristic points are carried in a boolean mask (their entries
are NaN). The single-point helpers raise instead.

Frame conventions (all vectors in frame components):

* ``J[..., i, j] = X_j(nuH_i)`` for the unit horizontal normal extension
  ``nuH = grad_H f / |grad_H f|``;
* ``B[a, b] = -tau_a . J . tau_b`` over the tangent frame, whose skew part is
  ``(varpi / 2) tau^T C tau``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from . import jets as J
from .calculus import frame_gradient, frame_gradient_vec, horizontal_ops
from .fields import ScalarField
from .group import dim_of, perp, structural_matrix

CHAR_TOL = 1e-8


class CharacteristicPoint(ArithmeticError):
    def __init__(self, pH_norm, where=None):
        self.pH_norm = float(np.min(pH_norm))
        self.where = where
        loc = "" if where is None else f" at {np.round(np.asarray(where), 6).tolist()}"
        super().__init__(f"characteristic point{loc} (|P_H nu| = {self.pH_norm:.3e})")


class DegenerateGradient(ArithmeticError):
    pass


class NotTangent(ValueError):
    pass


class HorizontalGradientVanishes(ArithmeticError):
    pass


class EikonalFailure(ArithmeticError):
    pass


@dataclass(frozen=True)
class ImplicitSurface:
    """Zero set of ``f``; ``orientation=+1`` means the inside is ``{f < 0}``."""

    f: ScalarField
    orientation: int = 1
    label: str = ""

    def __post_init__(self):
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        if not self.label:
            object.__setattr__(self, "label", self.f.label)

    def flipped(self) -> "ImplicitSurface":
        return replace(self, orientation=-self.orientation)


# -- horizontal vector fields ------------------------------------------------

@dataclass(frozen=True)
class HorizontalField:
    """Horizontal vector field given by jets of its 2n frame components.

    ``fn`` maps order-2 coordinate jets to a Jet with a trailing axis of
    length 2n (order >= 1, so one frame derivative is available).
    """

    fn: Callable[[list], J.Jet]
    label: str

    def jet(self, points) -> J.Jet:
        return self.fn(J.coordinates(np.asarray(points, float), 2))

    def __call__(self, points) -> np.ndarray:
        return np.asarray(self.jet(points).v)

    def __add__(self, other):
        return HorizontalField(lambda c: self.fn(c) + other.fn(c), f"{self.label}+{other.label}")

    def __sub__(self, other):
        return HorizontalField(lambda c: self.fn(c) - other.fn(c), f"{self.label}-{other.label}")

    def times(self, s: ScalarField | Callable) -> "HorizontalField":
        sf = s.fn if isinstance(s, ScalarField) else s
        return HorizontalField(lambda c: self.fn(c) * sf(c).expand(), f"({self.label})*s")


def _const_jet(c, value):
    return J.Jet.constant(np.broadcast_to(value, c[0].shape), len(c), c[0].order)


def constant_field(V: Sequence[float]) -> HorizontalField:
    V = np.asarray(V, float)

    def fn(c):
        return J.Jet.stack([_const_jet(c, v) for v in V])

    return HorizontalField(fn, f"const{V.tolist()}")


def from_scalars(comps: Sequence[ScalarField]) -> HorizontalField:
    def fn(c):
        out = []
        for s in comps:
            j = s.fn(c)
            out.append(j if isinstance(j, J.Jet) else _const_jet(c, j))
        return J.Jet.stack(out)

    return HorizontalField(fn, "[" + ", ".join(s.label for s in comps) + "]")


def _horizontal_gradient_jet(f: ScalarField, c) -> J.Jet:
    """Jet of ``grad_H f`` one order below the coordinate seed."""
    G = frame_gradient(f.fn(c), c)
    m = len(c) - 1
    return J.Jet.stack([G.component(i) for i in range(m)])


def gradient_field(phi: ScalarField) -> HorizontalField:
    """``grad_H phi`` (needs ``phi`` at order 3 for one derivative of the field)."""

    def fn(c):
        c3 = J.coordinates(np.stack([ci.v for ci in c], axis=-1), 3)
        return _horizontal_gradient_jet(phi, c3).truncate(2)

    return HorizontalField(fn, f"grad_H[{phi.label}]")


def _unit_normal_jet(surf: ImplicitSurface, c) -> J.Jet:
    g = _horizontal_gradient_jet(surf.f, c)
    norm = J.sqrt(J.sum_components(g * g))
    return g * (norm.reciprocal() * float(surf.orientation)).expand()


def _perp_jet(v: J.Jet) -> J.Jet:
    m = v.shape[-1]
    comps = []
    for i in range(m // 2):
        comps.append(-v.component(2 * i + 1))
        comps.append(v.component(2 * i))
    return J.Jet.stack(comps)


def normal_field(surf: ImplicitSurface, perp_: bool = False) -> HorizontalField:
    """Extension ``grad_H f / |grad_H f|`` (or its perp) off the surface."""
    def fn(c):
        nu = _unit_normal_jet(surf, c)
        return _perp_jet(nu) if perp_ else nu

    return HorizontalField(fn, ("nuH_perp" if perp_ else "nuH") + f"[{surf.label}]")


def varpi_jet(surf: ImplicitSurface, c) -> J.Jet:
    """``varpi = orientation * Tf / |grad_H f|`` as a jet (order of c minus 1)."""
    G = frame_gradient(surf.f.fn(c), c)
    m = len(c) - 1
    g2 = G.component(0) * G.component(0)
    for i in range(1, m):
        g2 = g2 + G.component(i) * G.component(i)
    return G.component(m) * (J.sqrt(g2).reciprocal() * float(surf.orientation))


def varpi_field(surf: ImplicitSurface) -> ScalarField:
    return ScalarField(lambda c: varpi_jet(surf, c), f"varpi[{surf.label}]", max_order=2)


def tangent_part(surf: ImplicitSurface, X: HorizontalField) -> HorizontalField:
    def fn(c):
        x = X.fn(c)
        nu = _unit_normal_jet(surf, c)
        return x - nu * J.sum_components(x * nu).expand()

    return HorizontalField(fn, f"({X.label})_HS")


# -- geometry ----------------------------------------------------------------

@dataclass(frozen=True)
class SurfaceGeometry:
    """Batched per-point surface record; entries at characteristic points are NaN."""

    p: np.ndarray
    fval: np.ndarray
    nu: np.ndarray
    grad_norm: np.ndarray
    pH_norm: np.ndarray
    nuH: np.ndarray
    nuH_perp: np.ndarray
    varpi: np.ndarray
    characteristic: np.ndarray
    tangentFrame: np.ndarray | None = None  # (..., 2n, 2n-1): columns tau_2..tau_2n
    Jnu: np.ndarray | None = None           # (..., 2n, 2n+1)
    B: np.ndarray | None = None
    S_sym: np.ndarray | None = None
    A_skew: np.ndarray | None = None
    Hcurv: np.ndarray | None = None

    @property
    def n(self) -> int:
        return dim_of(self.p)

    def __len__(self):
        return int(np.prod(self.p.shape[:-1]))


def _normal_arrays(f_jet: J.Jet, coords, orientation: int, char_tol: float):
    G = frame_gradient(f_jet, coords)
    d1 = G.v
    m = d1.shape[-1] - 1
    grad_norm = np.sqrt(np.sum(d1 * d1, axis=-1))
    g = d1[..., :m]
    gH = np.sqrt(np.sum(g * g, axis=-1))
    with np.errstate(divide="ignore", invalid="ignore"):
        nu = orientation * d1 / grad_norm[..., None]
        pH = gH / grad_norm
        char = ~(pH > char_tol)
        nuH = np.where(char[..., None], np.nan, orientation * g / gH[..., None])
        varpi = np.where(char, np.nan, orientation * d1[..., m] / gH)
    return G, d1, grad_norm, pH, char, nu, nuH, varpi


def tangent_frame(nuH) -> np.ndarray:
    """Deterministic orthonormal basis of ``nuH``'s orthogonal complement.

    ``tau_2 = nuH^perp``; the remaining vectors come from projecting the
    standard basis off ``{nuH, nuH^perp}``, dropping the two most-aligned
    (shortest projected) columns and orthonormalizing the rest in index order.
    """
    nuH = np.asarray(nuH, float)
    m = nuH.shape[-1]
    batch = nuH.shape[:-1]
    tau = np.zeros(batch + (m, m - 1))
    vp = perp(nuH)
    tau[..., 0] = vp
    if m == 2:
        return tau
    P = np.eye(m) - nuH[..., :, None] * nuH[..., None, :] - vp[..., :, None] * vp[..., None, :]
    norms = np.linalg.norm(np.nan_to_num(P), axis=-2)
    # indices of the two shortest columns, ties broken by lowest index
    order = np.argsort(norms, axis=-1, kind="stable")
    keep = np.ones(batch + (m,), bool)
    np.put_along_axis(keep, order[..., :2], False, axis=-1)
    idx = np.nonzero(keep.reshape(-1, m))[1].reshape(batch + (m - 2,))
    cols = np.take_along_axis(P, idx[..., None, :], axis=-1)
    basis = [nuH, vp]
    for k in range(m - 2):
        v = cols[..., k]
        for b in basis:
            v = v - np.sum(v * b, axis=-1, keepdims=True) * b
        v = v / np.linalg.norm(v, axis=-1, keepdims=True)
        basis.append(v)
        tau[..., k + 1] = v
    return tau


def surface_geometry(surf: ImplicitSurface, points, char_tol: float = CHAR_TOL,
                     shape: bool = True) -> SurfaceGeometry:
    """Normal data, adapted frame and (optionally) shape operators at ``points``."""
    p = np.asarray(points, float)
    n = dim_of(p)
    coords = J.coordinates(p, 2)
    fj = surf.f.jet(p, 2)
    G, d1, grad_norm, pH, char, nu, nuH, varpi = _normal_arrays(
        fj, coords, surf.orientation, char_tol)
    with np.errstate(invalid="ignore"):
        vperp = perp(nuH)
        tau = tangent_frame(nuH)
    geom = SurfaceGeometry(p, np.asarray(fj.v), nu, grad_norm, pH, nuH, vperp, varpi, char,
                           tangentFrame=tau)
    if not shape:
        return geom
    m = 2 * n
    g = J.Jet.stack([G.component(i) for i in range(m)])
    with np.errstate(divide="ignore", invalid="ignore"):
        norm = J.sqrt(J.sum_components(g * g))
        nuhat = g * (norm.reciprocal() * float(surf.orientation)).expand()
        Jn = frame_gradient_vec(nuhat, coords).v
        Jn = np.where(char[..., None, None], np.nan, Jn)
        B = -np.einsum("...ib,...ij,...ja->...ab", tau, Jn[..., :m], tau)  # -<nabla_a nu, tau_b>
    S = 0.5 * (B + np.swapaxes(B, -1, -2))
    A = 0.5 * (B - np.swapaxes(B, -1, -2))
    H = np.trace(B, axis1=-2, axis2=-1)
    return replace(geom, Jnu=Jn, B=B, S_sym=S, A_skew=A, Hcurv=H)


def _single(p):
    p = np.asarray(p, float)
    if p.ndim != 1:
        raise ValueError("expected a single point")
    return p


def normal_data(surf: ImplicitSurface, p, char_tol: float = CHAR_TOL,
                surf_tol: float | None = None) -> SurfaceGeometry:
    """Normal data at one point; raises at characteristic or degenerate points."""
    p = _single(p)
    geom = surface_geometry(surf, p, char_tol, shape=False)
    if surf_tol is not None and abs(float(geom.fval)) > surf_tol:
        raise ValueError(f"point is off the surface: f = {float(geom.fval):.3e}")
    if not geom.grad_norm > 1e-14:
        raise DegenerateGradient(f"grad f vanishes at {p.tolist()}")
    if geom.characteristic:
        raise CharacteristicPoint(geom.pH_norm, p)
    return geom


def adapted_frame(geom: SurfaceGeometry) -> np.ndarray:
    if np.any(geom.characteristic):
        raise CharacteristicPoint(np.min(geom.pH_norm))
    return tangent_frame(geom.nuH)


def shape_data(surf: ImplicitSurface, p, char_tol: float = CHAR_TOL) -> SurfaceGeometry:
    p = _single(p)
    normal_data(surf, p, char_tol)
    return surface_geometry(surf, p, char_tol)


def skew_reference(geom: SurfaceGeometry) -> np.ndarray:
    """``A[a, b] = (varpi / 2) <C tau_a, tau_b>``, the expected skew part of ``B``."""
    C = structural_matrix(geom.n)
    tau = geom.tangentFrame
    return 0.5 * geom.varpi[..., None, None] * np.einsum("...ia,ji,...jb->...ab", tau, C, tau)


def nabla_nu_check(surf: ImplicitSurface, geom: SurfaceGeometry) -> np.ndarray:
    """``|nabla_nuH nuH + varpi C nuH|`` along ``S``.

    ``nabla_nuH nuH`` depends on how ``nuH`` is extended off the surface; the
    identity holds for extensions that are horizontally eikonal on ``S``, so
    the derivative is taken from the normalized defining function.
    """
    m = 2 * geom.n
    Jn = surface_geometry(normalize_defining(surf), geom.p).Jnu
    lhs = np.einsum("...ij,...j->...i", Jn[..., :m], geom.nuH)
    C = structural_matrix(geom.n)
    rhs = -geom.varpi[..., None] * np.einsum("ij,...j->...i", C, geom.nuH)
    return np.linalg.norm(lhs - rhs, axis=-1)


# -- tangential operators ----------------------------------------------------

@dataclass(frozen=True)
class TangentialOps:
    gradHS: np.ndarray
    dd_nuH: np.ndarray
    dd_nuH_perp: np.ndarray
    lapHS: np.ndarray
    Lhs: np.ndarray
    Tphi: np.ndarray


def tangential_ops(surf: ImplicitSurface, geom: SurfaceGeometry, phi: ScalarField) -> TangentialOps:
    ops = horizontal_ops(phi, geom.p)
    dn = np.einsum("...i,...i->...", ops.gradH, geom.nuH)
    dp = np.einsum("...i,...i->...", ops.gradH, geom.nuH_perp)
    gHS = ops.gradH - dn[..., None] * geom.nuH
    hnn = np.einsum("...i,...ij,...j->...", geom.nuH, ops.hessH, geom.nuH)
    lap = ops.lapH + geom.Hcurv * dn - hnn
    return TangentialOps(gHS, dn, dp, lap, lap - geom.varpi * dp, ops.Tphi)


def trace_hs(geom: SurfaceGeometry, X: HorizontalField) -> np.ndarray:
    """``sum_a <nabla_{tau_a} X, tau_a>`` for any horizontal field ``X``."""
    c = J.coordinates(geom.p, 2)
    DX = frame_gradient_vec(X.fn(c), c).v
    m = 2 * geom.n
    return np.einsum("...ia,...ij,...ja->...", geom.tangentFrame, DX[..., :m], geom.tangentFrame)


def div_hs(surf: ImplicitSurface, geom: SurfaceGeometry, X: HorizontalField,
           tol: float = 1e-8) -> np.ndarray:
    """Tangential divergence of a field tangent to ``S``; raises ``NotTangent``."""
    x = X(geom.p)
    scale = np.maximum(1.0, np.linalg.norm(x, axis=-1))
    normal = np.abs(np.einsum("...i,...i->...", x, geom.nuH)) / scale
    if np.any(normal > tol):
        raise NotTangent(f"field has normal component {np.nanmax(normal):.3e}")
    return trace_hs(geom, X)


def d_hs(geom: SurfaceGeometry, X: HorizontalField) -> np.ndarray:
    """``D_HS X = div_HS X - varpi <nuH^perp, X>`` applied to the full field."""
    x = X(geom.p)
    return trace_hs(geom, X) - geom.varpi * np.einsum("...i,...i->...", geom.nuH_perp, x)


def lap_hs_intrinsic(surf: ImplicitSurface, geom: SurfaceGeometry, phi: ScalarField) -> np.ndarray:
    """``Delta_HS phi`` as the tangential trace of ``nabla grad_HS phi``."""
    return trace_hs(geom, tangent_part(surf, gradient_field(phi)))


def dvarpi_perp(surf: ImplicitSurface, geom: SurfaceGeometry) -> np.ndarray:
    """``d varpi / d nuH^perp`` from the order-1 jet of the varpi extension."""
    c = J.coordinates(geom.p, 2)
    G = frame_gradient(varpi_jet(surf, c), c).v
    m = 2 * geom.n
    return np.einsum("...i,...i->...", G[..., :m], geom.nuH_perp)


# -- defining-function normalization -----------------------------------------

def normalize_defining(surf: ImplicitSurface, tol: float = 1e-10) -> ImplicitSurface:
    """Replace ``f`` by ``f / |grad_H f|`` (eikonal along the zero set).

    The new field supports one order less than ``f``; its jets are built by
    reseeding the coordinates at one order higher so that the quotient rule
    runs on exact Taylor data.
    """
    f = surf.f
    if f.max_order < 2:
        raise J.UnsupportedOrder("normalization needs f of order >= 2")

    def fn(c):
        k = c[0].order
        pts = np.stack([np.asarray(ci.v) for ci in c], axis=-1)
        c1 = J.coordinates(pts, k + 1)
        g = _horizontal_gradient_jet(f, c1)
        g2 = J.sum_components(g * g)
        if np.any(np.sqrt(g2.v) <= tol):
            raise HorizontalGradientVanishes(
                f"|grad_H f| <= {tol:g} at {int(np.sum(np.sqrt(g2.v) <= tol))} point(s)")
        return f.fn(c1).truncate(k) * J.sqrt(g2).reciprocal()

    tf = ScalarField(fn, f"normalized[{f.label}]", f.n, f.max_order - 1, dict(f.meta))
    return ImplicitSurface(tf, surf.orientation, f"normalized[{surf.label}]")


# -- characteristic scan -----------------------------------------------------

def char_scan(surf: ImplicitSurface, chart, grid: Sequence[int],
              char_tol: float = CHAR_TOL) -> list[tuple[int, ...]]:
    """Parameter cells whose corners or center touch the characteristic set.

    ``grid`` gives the number of cells per parameter axis. Returns the flagged
    cell multi-indices in lexicographic order.
    """
    lo, hi = np.asarray(chart.lo, float), np.asarray(chart.hi, float)
    grid = tuple(int(g) for g in grid)
    if len(grid) != lo.size:
        raise ValueError(f"grid needs {lo.size} entries")
    edges = [np.linspace(a, b, g + 1) for a, b, g in zip(lo, hi, grid)]
    mids = [0.5 * (e[1:] + e[:-1]) for e in edges]

    def ratio(axes):
        U = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        geom = surface_geometry(surf, chart.points(U.reshape(-1, lo.size)), char_tol, shape=False)
        return geom.pH_norm.reshape(U.shape[:-1])

    corner = ratio(edges)
    center = ratio(mids)
    flagged = []
    for idx in np.ndindex(*grid):
        sl = tuple(slice(i, i + 2) for i in idx)
        if min(np.min(corner[sl]), center[idx]) <= char_tol:
            flagged.append(idx)
    return flagged


def merge_cells(cells: Sequence[tuple[int, ...]], axis: int) -> list[tuple[int, int]]:
    """Merge flagged cells into contiguous index runs along ``axis``."""
    rows = sorted({c[axis] for c in cells})
    runs: list[list[int]] = []
    for r in rows:
        if runs and r == runs[-1][1] + 1:
            runs[-1][1] = r
        else:
            runs.append([r, r])
    return [tuple(r) for r in runs]
