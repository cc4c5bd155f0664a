"""Frame derivatives of scalar fields and the horizontal operators.

Index convention: ``d2[..., i, j] = X_j(X_i(phi))``, i.e. row ``i`` is the
first derivative and column ``j`` is applied after it. With this convention
the skew part of the horizontal Hessian is ``-(T phi / 2) C``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets as J
from .fields import ScalarField
from .group import dim_of, group_mul, structural_matrix


def frame_gradient(jet: J.Jet, coords: list) -> J.Jet:
    """Jets of ``X_1 f, Y_1 f, ..., X_n f, Y_n f, T f`` stacked on a trailing axis.

    ``coords`` are the seeded coordinate jets at the same base points; the
    frame coefficients ``-y_i/2`` and ``x_i/2`` are multiplied in as jets so
    that their derivatives enter higher-order assembly exactly.
    """
    d = jet.d
    n = (d - 1) // 2
    parts = [jet.partial_jet(mu) for mu in range(d)]
    Pt = parts[-1]
    out = []
    for i in range(n):
        x, y = coords[2 * i], coords[2 * i + 1]
        if jet.order - 1 == 0:
            x, y = x.v, y.v
        out.append(parts[2 * i] - Pt * (0.5 * y))
        out.append(parts[2 * i + 1] + Pt * (0.5 * x))
    out.append(Pt)
    if jet.order - 1 >= 1:
        out = [o if o.order == jet.order - 1 else o.truncate(jet.order - 1) for o in out]
    return J.Jet.stack(out)


def frame_gradient_vec(jet: J.Jet, coords: list) -> J.Jet:
    """Frame gradient of a vector-valued jet: batch ``(..., m)`` -> ``(..., m, 2n+1)``."""
    comps = [frame_gradient(jet.component(i), coords) for i in range(jet.shape[-1])]
    return _swap_batch(J.Jet.stack(comps))


def _swap_batch(jet: J.Jet) -> J.Jet:
    out = [np.swapaxes(jet.v, -1, -2)]
    for r, t in ((1, jet.g), (2, jet.h), (3, jet.k)):
        out.append(None if t is None else np.swapaxes(t, -1 - r, -2 - r))
    return J.Jet(jet.order, *out, d=jet.d)


@dataclass(frozen=True)
class FrameJet:
    """``value``, ``d1[a] = X_a phi`` and ``d2[i, j] = X_j X_i phi`` (frame order)."""

    value: np.ndarray
    d1: np.ndarray
    d2: np.ndarray

    @property
    def n(self) -> int:
        return (self.d1.shape[-1] - 1) // 2


def jet_eval(field: ScalarField, p, order: int) -> J.Jet:
    if order not in (1, 2, 3):
        raise J.UnsupportedOrder(f"order must be 1, 2 or 3, got {order}")
    return field.jet(p, order)


def frame_jet(field: ScalarField, p) -> FrameJet:
    p = np.asarray(p, dtype=float)
    coords = J.coordinates(p, 2)
    jet = field.jet(p, 2)
    G = frame_gradient(jet, coords)
    H = frame_gradient_vec(G, coords)
    return FrameJet(jet.v, G.v, H.v)


@dataclass(frozen=True)
class HorizontalOps:
    gradH: np.ndarray
    hessH: np.ndarray
    lapH: np.ndarray
    Tphi: np.ndarray
    gradH_Tphi: np.ndarray


def horizontal_from_framejet(fj: FrameJet) -> HorizontalOps:
    m = fj.d1.shape[-1] - 1
    hess = fj.d2[..., :m, :m]
    return HorizontalOps(
        gradH=fj.d1[..., :m],
        hessH=hess,
        lapH=np.trace(hess, axis1=-2, axis2=-1),
        Tphi=fj.d1[..., m],
        gradH_Tphi=fj.d2[..., m, :m],
    )


def horizontal_ops(field: ScalarField, p) -> HorizontalOps:
    return horizontal_from_framejet(frame_jet(field, p))


class SkewMismatch(ArithmeticError):
    pass


@dataclass(frozen=True)
class HessianSplit:
    sym: np.ndarray
    skew: np.ndarray
    gramSym: np.ndarray
    gramSkew: np.ndarray


def hessian_split(hessH, Tphi, tol: float = 1e-8) -> HessianSplit:
    """Symmetric/skew split; checks ``skew == -(T phi / 2) C``."""
    hessH = np.asarray(hessH, dtype=float)
    Tphi = np.asarray(Tphi, dtype=float)
    m = hessH.shape[-1]
    if hessH.shape[-2] != m or m % 2:
        raise ValueError("horizontal Hessian must be square of even size 2n")
    sym = 0.5 * (hessH + np.swapaxes(hessH, -1, -2))
    skew = 0.5 * (hessH - np.swapaxes(hessH, -1, -2))
    C = structural_matrix(m // 2)
    expected = -0.5 * Tphi[..., None, None] * C
    scale = np.maximum(1.0, np.max(np.abs(hessH), axis=(-2, -1)))
    err = np.max(np.abs(skew - expected), axis=(-2, -1)) / scale
    if np.any(err > tol):
        raise SkewMismatch(f"skew part deviates from -(Tphi/2) C by {np.max(err):.3e}")
    gs = np.sum(sym * sym, axis=(-2, -1))
    gk = np.sum(skew * skew, axis=(-2, -1))
    return HessianSplit(sym, skew, gs, gk)


def laplacian_grad_norm_half(field: ScalarField, p) -> np.ndarray:
    """``1/2 Delta_H |grad_H phi|^2`` from order-3 jets."""
    p = np.asarray(p, dtype=float)
    n = dim_of(p)
    coords = J.coordinates(p, 3)
    jet = field.jet(p, 3)
    G = frame_gradient(jet, coords)
    g = [G.component(i) for i in range(2 * n)]
    chi = g[0] * g[0]
    for gi in g[1:]:
        chi = chi + gi * gi
    chi = chi * 0.5
    DG = frame_gradient(chi, coords)
    DDG = frame_gradient_vec(DG, coords)
    return sum(DDG.v[..., i, i] for i in range(2 * n))


def derossi_terms(field: ScalarField, p) -> dict:
    """Both sides of the Bochner-type identity for ``1/2 Delta_H |grad_H phi|^2``."""
    p = np.asarray(p, dtype=float)
    n = dim_of(p)
    m = 2 * n
    coords = J.coordinates(p, 3)
    jet = field.jet(p, 3)
    G = frame_gradient(jet, coords)           # order 2
    H = frame_gradient_vec(G, coords)                    # order 1; H[..., i, j] = X_j X_i phi
    HH = frame_gradient_vec(_flatten_last2(H), coords)
    third = HH.v.reshape(H.shape + (m + 1,))  # [..., i, j, k] = X_k X_j X_i phi
    grad = G.v[..., :m]
    hess = H.v[..., :m, :m]
    lap_grad = np.einsum("...ijj->...i", third[..., :m, :m, :m])  # Delta_H (X_i phi)
    psi_grad = np.einsum("...iij->...j", third[..., :m, :m, :m])  # X_j (Delta_H phi)
    T_grad = H.v[..., :m, m]                  # T(X_i phi)
    C = structural_matrix(n)
    lhs = np.sum(hess * hess, axis=(-2, -1)) + np.einsum("...i,...i->...", lap_grad, grad)
    rhs = (np.sum(hess * hess, axis=(-2, -1)) + np.einsum("...i,...i->...", psi_grad, grad)
           + 2.0 * np.einsum("...i,ij,...j->...", T_grad, C, grad))
    return {"lhs": lhs, "rhs": rhs, "direct": laplacian_grad_norm_half(field, p)}


def _flatten_last2(jet: J.Jet) -> J.Jet:
    shape = jet.shape
    new = shape[:-2] + (shape[-2] * shape[-1],)
    out = [jet.v.reshape(new)]
    for r, t in ((1, jet.g), (2, jet.h), (3, jet.k)):
        out.append(None if t is None else t.reshape(new + t.shape[len(shape):]))
    return J.Jet(jet.order, *out, d=jet.d)


def fd_framejet(field: ScalarField, p, h: float = 1e-5) -> FrameJet:
    """Frame derivatives from central differences along the frame flows.

    ``X_a phi(q) = d/ds phi(q * exp(s e_a))`` at ``s = 0``. First derivatives
    difference field values; second derivatives difference first derivatives
    computed from order-1 jets contracted with the flow velocity, which is
    itself obtained from the group law.
    """
    p = np.asarray(p, dtype=float)
    d = p.shape[-1]
    E = np.eye(d)

    def flow_velocity(q, a):
        return (group_mul(q, h * E[a]) - group_mul(q, -h * E[a])) / (2 * h)

    def first(q, a):
        jet = field.jet(q, 1)
        return np.einsum("...m,...m->...", jet.dense(1), flow_velocity(q, a))

    value = field(p)
    d1 = np.stack([(field(group_mul(p, h * E[a])) - field(group_mul(p, -h * E[a]))) / (2 * h)
                   for a in range(d)], axis=-1)
    d2 = np.empty(p.shape[:-1] + (d, d))
    for j in range(d):
        qp, qm = group_mul(p, h * E[j]), group_mul(p, -h * E[j])
        for i in range(d):
            d2[..., i, j] = (first(qp, i) - first(qm, i)) / (2 * h)
    return FrameJet(value, d1, d2)


def fd_crosscheck(field: ScalarField, p, h: float = 1e-5) -> float:
    """Worst relative deviation between AD frame jets and the FD oracle.

    Deviations are measured against the per-point magnitude of the frame jet
    (floored at 1), so entries that vanish exactly do not blow up the ratio.
    """
    p = np.asarray(p, dtype=float)
    ad = frame_jet(field, p)
    fd = fd_framejet(field, p, h)
    scale = np.maximum.reduce([
        np.ones_like(ad.value), np.abs(ad.value),
        np.max(np.abs(ad.d1), axis=-1), np.max(np.abs(ad.d2), axis=(-2, -1)),
    ])
    dev = np.maximum.reduce([
        np.abs(ad.value - fd.value),
        np.max(np.abs(ad.d1 - fd.d1), axis=-1),
        np.max(np.abs(ad.d2 - fd.d2), axis=(-2, -1)),
    ]) / scale
    return float(np.max(dev))
