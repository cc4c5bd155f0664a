"""Truncated multivariate Taylor arithmetic (jets) up to order 3.

A :class:`Jet` carries the value and the Euclidean partial derivatives of a
scalar at one or many base points. Derivative tensors are stored densely and
symmetrically: ``g[..., i]``, ``h[..., i, j]``, ``k[..., i, j, l]``. A tensor
set to ``None`` is identically zero, which keeps affine jets (coordinates,
frame coefficients) cheap. Leading axes are batch axes.
"""

from __future__ import annotations

import math
from itertools import combinations_with_replacement

import numpy as np

MAX_ORDER = 3


class UnsupportedOrder(ValueError):
    pass


def n_partials(d: int, order: int) -> int:
    """Number of distinct partials of exact ``order`` in ``d`` variables."""
    return math.comb(d + order - 1, order)


def _add(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a + b


def _scale(a, s):
    """Multiply derivative tensor ``a`` by batch scalar ``s``."""
    if a is None:
        return None
    s = np.asarray(s)
    return a * s.reshape(s.shape + (1,) * (a.ndim - s.ndim))


def _outer(a, b):
    if a is None or b is None:
        return None
    return a[..., :, None] * b[..., None, :]


def _sym2(a, b):
    # a_i b_j + a_j b_i
    o = _outer(a, b)
    if o is None:
        return None
    return o + np.swapaxes(o, -1, -2)


def _sym3(H, g):
    # H_ij g_l + H_il g_j + H_jl g_i
    if H is None or g is None:
        return None
    t = H[..., :, :, None] * g[..., None, None, :]
    return t + np.swapaxes(t, -1, -2) + np.moveaxis(t, -1, -3)


def _outer3(g):
    if g is None:
        return None
    return g[..., :, None, None] * g[..., None, :, None] * g[..., None, None, :]


class Jet:
    """Value plus Euclidean partials up to ``order`` at one or more points."""

    __slots__ = ("order", "v", "g", "h", "k", "d")

    def __init__(self, order, v, g=None, h=None, k=None, d=None):
        if order not in (0, 1, 2, 3):
            raise UnsupportedOrder(f"jet order must be in 0..3, got {order}")
        self.order = order
        self.v = np.asarray(v, dtype=float)
        self.g = g if order >= 1 else None
        self.h = h if order >= 2 else None
        self.k = k if order >= 3 else None
        if d is None:
            for arr, r in ((g, 1), (h, 2), (k, 3)):
                if arr is not None:
                    d = arr.shape[-1]
                    break
        self.d = d

    # -- construction -----------------------------------------------------
    @classmethod
    def variable(cls, values, index: int, d: int, order: int = MAX_ORDER) -> "Jet":
        values = np.asarray(values, dtype=float)
        e = np.zeros(d)
        e[index] = 1.0
        g = np.broadcast_to(e, values.shape + (d,)) if order >= 1 else None
        return cls(order, values, g, None, None, d)

    @classmethod
    def constant(cls, value, d: int, order: int = MAX_ORDER) -> "Jet":
        return cls(order, np.asarray(value, dtype=float), None, None, None, d)

    @classmethod
    def stack(cls, jets, axis_name="component") -> "Jet":
        """Stack jets along a new trailing batch axis."""
        order = min(j.order for j in jets)
        d = jets[0].d
        shape = np.broadcast_shapes(*(np.shape(j.v) for j in jets))
        v = np.stack([np.broadcast_to(j.v, shape) for j in jets], axis=-1)
        parts = []
        for r, name in ((1, "g"), (2, "h"), (3, "k")):
            if order < r or all(getattr(j, name) is None for j in jets):
                parts.append(None)
                continue
            tshape = shape + (d,) * r
            arrs = [
                np.zeros(tshape) if getattr(j, name) is None
                else np.broadcast_to(getattr(j, name), tshape)
                for j in jets
            ]
            parts.append(np.stack(arrs, axis=-1 - r))
        return cls(order, v, *parts, d=d)

    # -- access -----------------------------------------------------------
    @property
    def shape(self):
        return np.shape(self.v)

    def tensors(self):
        return (self.v, self.g, self.h, self.k)

    def component(self, i) -> "Jet":
        """Index the trailing batch axis."""
        out = [self.v[..., i]]
        for r, t in ((1, self.g), (2, self.h), (3, self.k)):
            out.append(None if t is None else t[(Ellipsis, i) + (slice(None),) * r])
        return Jet(self.order, *out, d=self.d)

    def __getitem__(self, idx):
        if not isinstance(idx, tuple):
            idx = (idx,)
        out = [self.v[idx]]
        for r, t in ((1, self.g), (2, self.h), (3, self.k)):
            out.append(None if t is None else t[idx])
        return Jet(self.order, *out, d=self.d)

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise UnsupportedOrder("cannot raise the order of a jet")
        return Jet(order, self.v, self.g, self.h, self.k, d=self.d)

    def expand(self) -> "Jet":
        """Insert a length-1 trailing batch axis (for broadcasting)."""
        out = [self.v[..., None]]
        for r, t in ((1, self.g), (2, self.h), (3, self.k)):
            out.append(None if t is None else np.expand_dims(t, -1 - r))
        return Jet(self.order, *out, d=self.d)

    def dense(self, r: int) -> np.ndarray:
        """Derivative tensor of rank ``r`` with zeros materialized."""
        if r > self.order:
            raise UnsupportedOrder(f"jet of order {self.order} has no rank-{r} partials")
        t = (self.v, self.g, self.h, self.k)[r]
        if t is None:
            return np.zeros(self.shape + (self.d,) * r)
        return np.broadcast_to(t, self.shape + (self.d,) * r)

    def partial(self, *index) -> np.ndarray:
        """Euclidean partial for a multi-index, e.g. ``jet.partial(0, 1)``."""
        r = len(index)
        return self.dense(r)[(Ellipsis,) + tuple(index)]

    def compressed(self, r: int) -> np.ndarray:
        """Distinct rank-``r`` partials in lexicographic multi-index order."""
        T = self.dense(r)
        idx = list(combinations_with_replacement(range(self.d), r))
        return np.stack([T[(Ellipsis,) + i] for i in idx], axis=-1) if idx else T

    def partial_jet(self, mu: int) -> "Jet":
        """Jet of the coordinate derivative ``d/dx_mu`` (one order lower)."""
        if self.order < 1:
            raise UnsupportedOrder("cannot differentiate an order-0 jet")
        v = self.dense(1)[..., mu]
        g = None if self.h is None else self.h[..., mu, :]
        h = None if self.k is None else self.k[..., mu, :, :]
        return Jet(self.order - 1, v, g, h, None, d=self.d)

    # -- arithmetic -------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            return other
        return Jet(MAX_ORDER, np.asarray(other, dtype=float), d=self.d)

    def __add__(self, other):
        o = self._coerce(other)
        order = min(self.order, o.order)
        return Jet(order, self.v + o.v, _add(self.g, o.g), _add(self.h, o.h),
                   _add(self.k, o.k), d=self.d)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.order, -self.v, *(None if t is None else -t
                                          for t in (self.g, self.h, self.k)), d=self.d)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) + (-self)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            s = np.asarray(other, dtype=float)
            return Jet(self.order, self.v * s, _scale(self.g, s), _scale(self.h, s),
                       _scale(self.k, s), d=self.d)
        a, b = self, other
        order = min(a.order, b.order)
        v = a.v * b.v
        g = h = k = None
        if order >= 1:
            g = _add(_scale(a.g, b.v), _scale(b.g, a.v))
        if order >= 2:
            h = _add(_add(_scale(a.h, b.v), _scale(b.h, a.v)), _sym2(a.g, b.g))
        if order >= 3:
            k = _add(_scale(a.k, b.v), _scale(b.k, a.v))
            k = _add(k, _add(_sym3(a.h, b.g), _sym3(b.h, a.g)))
        return Jet(order, v, g, h, k, d=self.d)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return self * (1.0 / np.asarray(other, dtype=float))
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)) and p >= 0:
            out = Jet(self.order, np.ones_like(self.v), d=self.d)
            base = self
            while p:
                if p & 1:
                    out = out * base
                p >>= 1
                if p:
                    base = base * base
            return out
        p = float(p)
        x = self.v
        return self.compose(x ** p, p * x ** (p - 1), p * (p - 1) * x ** (p - 2),
                            p * (p - 1) * (p - 2) * x ** (p - 3))

    def compose(self, f0, f1, f2=None, f3=None) -> "Jet":
        """Chain rule for ``F(self)`` given ``F^(m)`` evaluated at ``self.v``."""
        g = h = k = None
        if self.order >= 1:
            g = _scale(self.g, f1)
        if self.order >= 2:
            h = _add(_scale(_outer(self.g, self.g), f2), _scale(self.h, f1))
        if self.order >= 3:
            k = _scale(_outer3(self.g), f3)
            k = _add(k, _scale(_sym3(self.h, self.g), f2))
            k = _add(k, _scale(self.k, f1))
        return Jet(self.order, f0, g, h, k, d=self.d)

    def reciprocal(self) -> "Jet":
        x = self.v
        r = 1.0 / x
        return self.compose(r, -r * r, 2 * r ** 3, -6 * r ** 4)

    def __repr__(self):
        return f"Jet(order={self.order}, shape={self.shape}, d={self.d})"


def exp(a: Jet) -> Jet:
    e = np.exp(a.v)
    return a.compose(e, e, e, e)


def log(a: Jet) -> Jet:
    x = a.v
    return a.compose(np.log(x), 1 / x, -1 / x ** 2, 2 / x ** 3)


def sin(a: Jet) -> Jet:
    s, c = np.sin(a.v), np.cos(a.v)
    return a.compose(s, c, -s, -c)


def cos(a: Jet) -> Jet:
    s, c = np.sin(a.v), np.cos(a.v)
    return a.compose(c, -s, -c, s)


def sqrt(a: Jet) -> Jet:
    r = np.sqrt(a.v)
    return a.compose(r, 0.5 / r, -0.25 / r ** 3, 0.375 / r ** 5)


def dot(a: Jet, b: Jet) -> Jet:
    """Sum over the trailing batch axis of ``a * b`` (vector-valued jets)."""
    return sum_components(a * b)


def sum_components(a: Jet) -> Jet:
    out = [a.v.sum(axis=-1)]
    for r, t in ((1, a.g), (2, a.h), (3, a.k)):
        out.append(None if t is None else t.sum(axis=-1 - r))
    return Jet(a.order, *out, d=a.d)


def coordinates(points, order: int = MAX_ORDER) -> list[Jet]:
    """Seed the coordinate functions as jets at ``points`` (shape ``(..., d)``)."""
    points = np.asarray(points, dtype=float)
    if order not in (1, 2, 3):
        raise UnsupportedOrder(f"requested order {order}; supported orders are 1, 2, 3")
    d = points.shape[-1]
    return [Jet.variable(points[..., mu], mu, d, order) for mu in range(d)]
