"""Scalar fields on H^n and the named field catalog.

A field is a function of the coordinate jets ``[x_1, y_1, ..., x_n, y_n, t]``
returning a :class:`~hreilly.jets.Jet`; evaluating it at points yields the
Taylor data needed by the frame calculus.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import jets as J
from .group import dim_of


class CatalogError(KeyError):
    def __init__(self, name, available):
        self.name = name
        self.available = sorted(available)
        super().__init__(f"unknown catalog entry {name!r}; available: {', '.join(self.available)}")

    def __str__(self):
        return self.args[0]


@dataclass(frozen=True)
class ScalarField:
    """A smooth function on H^n defined through jet arithmetic."""

    fn: Callable[[list], "J.Jet"]
    label: str
    n: int | None = None  # None: works for every n
    max_order: int = J.MAX_ORDER
    meta: dict = field(default_factory=dict, compare=False)

    def jet(self, points, order: int = 2) -> J.Jet:
        points = np.asarray(points, dtype=float)
        n = dim_of(points)
        if self.n is not None and self.n != n:
            raise ValueError(f"field {self.label!r} is defined on H^{self.n}, got H^{n} points")
        if order > self.max_order:
            raise J.UnsupportedOrder(f"field {self.label!r} supports order <= {self.max_order}")
        out = self.fn(J.coordinates(points, order))
        if not isinstance(out, J.Jet):
            # constant fields
            out = J.Jet.constant(np.broadcast_to(np.asarray(out, float), points.shape[:-1]),
                                 points.shape[-1], order)
        if out.order > order:
            out = out.truncate(order)
        if out.v.shape != points.shape[:-1]:
            out = J.Jet(out.order, np.broadcast_to(out.v, points.shape[:-1]), out.g, out.h,
                        out.k, d=out.d)
        return out

    def __call__(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return np.asarray(self.jet(points, 1).v)

    def __add__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(lambda c: self.fn(c) + other.fn(c), f"({self.label})+({other.label})",
                           self.n or other.n, min(self.max_order, other.max_order))

    def __mul__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(lambda c: self.fn(c) * other.fn(c), f"({self.label})*({other.label})",
                           self.n or other.n, min(self.max_order, other.max_order))

    def scaled(self, s: float) -> "ScalarField":
        return ScalarField(lambda c: self.fn(c) * s, f"{s}*({self.label})", self.n, self.max_order)

    def shifted(self, s: float) -> "ScalarField":
        """The field ``self - s`` (level set ``{self = s}`` becomes the zero set)."""
        return ScalarField(lambda c: self.fn(c) - s, f"({self.label})-{s}", self.n, self.max_order)


def _zs(c):
    return c[:-1:2], c[1:-1:2], c[-1]


def _rho2(c):
    xs, ys, _ = _zs(c)
    out = xs[0] * xs[0] + ys[0] * ys[0]
    for x, y in zip(xs[1:], ys[1:]):
        out = out + x * x + y * y
    return out


def constant(value: float = 1.0) -> ScalarField:
    return ScalarField(lambda c: c[0] * 0.0 + value, f"constant({value})")


def coordinate(index: int = 0) -> ScalarField:
    return ScalarField(lambda c: c[index] * 1.0, f"coordinate({index})")


def rho2_half() -> ScalarField:
    return ScalarField(lambda c: _rho2(c) * 0.5, "rho2_half")


def two_t() -> ScalarField:
    return ScalarField(lambda c: c[-1] * 2.0, "two_t")


def linear_horizontal(V: Sequence[float]) -> ScalarField:
    V = [float(v) for v in V]
    if len(V) % 2:
        raise ValueError("V must have 2n components")

    def fn(c):
        return sum((c[i] * V[i] for i in range(1, len(V))), c[0] * V[0])

    return ScalarField(fn, f"linear_horizontal({V})", n=len(V) // 2)


def _center(c, center):
    d = len(c)
    cen = np.broadcast_to(np.asarray(center, float), (d,))
    return [ci - cc for ci, cc in zip(c, cen)]


def euclidean_sphere(center=0.0, r: float = 1.0) -> ScalarField:
    def fn(c):
        u = _center(c, center)
        return sum((ui * ui for ui in u[1:]), u[0] * u[0]) - r * r

    return ScalarField(fn, f"euclidean_sphere({center},{r})",
                       meta={"kind": "sphere", "center": center, "r": r})


def ellipsoid(a: float = 1.0, b: float = 1.0, c: float = 1.0) -> ScalarField:
    def fn(co):
        xs, ys, t = _zs(co)
        out = t * t * (1.0 / c ** 2) - 1.0
        for x, y in zip(xs, ys):
            out = out + x * x * (1.0 / a ** 2) + y * y * (1.0 / b ** 2)
        return out

    return ScalarField(fn, f"ellipsoid({a},{b},{c})", meta={"kind": "ellipsoid", "abc": (a, b, c)})


def torus(R: float = 2.0, r: float = 1.0) -> ScalarField:
    """Torus of revolution about the t-axis: ``(|z| - R)^2 + t^2 - r^2``."""
    def fn(c):
        rho = J.sqrt(_rho2(c))
        return (rho - R) * (rho - R) + c[-1] * c[-1] - r * r

    return ScalarField(fn, f"torus({R},{r})", meta={"kind": "torus", "R": R, "r": r})


def cylinder(r: float = 1.0) -> ScalarField:
    """Vertical cylinder ``|z|^2 - r^2``."""
    return ScalarField(lambda c: _rho2(c) - r * r, f"cylinder({r})")


def radial_distance(r: float = 1.0) -> ScalarField:
    """``|z| - r``; satisfies ``|grad_H f| = 1`` off the t-axis."""
    return ScalarField(lambda c: J.sqrt(_rho2(c)) - r, f"radial_distance({r})")


def exp_cos() -> ScalarField:
    """``exp(x_1) cos(y_1)``, a transcendental test function."""
    return ScalarField(lambda c: J.exp(c[0]) * J.cos(c[1]), "exp_cos")


def exp_x_plus_t() -> ScalarField:
    return ScalarField(lambda c: J.exp(c[0] + c[-1]), "exp_x_plus_t")


# -- polynomial parser ------------------------------------------------------

_VAR = re.compile(r"^(x|y)(\d*)$")


def _var_index(name: str) -> int:
    if name == "t":
        return -1
    m = _VAR.match(name)
    if not m:
        raise ValueError(f"unknown variable {name!r}; use x<i>, y<i> or t")
    i = int(m.group(2) or 1)
    if i < 1:
        raise ValueError(f"variable index must be >= 1 in {name!r}")
    return 2 * (i - 1) + (0 if m.group(1) == "x" else 1)


def polynomial(expr: str) -> ScalarField:
    """Parse a polynomial such as ``"x1^2 + 0.5*x1*y1*t - 3"``."""
    src = expr.replace("^", "**")
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse polynomial {expr!r}: {exc.msg}") from None
    max_index = -1

    def check(node):
        nonlocal max_index
        if isinstance(node, ast.Expression):
            return check(node.body)
        if isinstance(node, ast.BinOp) and isinstance(node.op, (ast.Add, ast.Sub, ast.Mult)):
            check(node.left)
            check(node.right)
            return
        if isinstance(node, ast.BinOp) and isinstance(node.op, ast.Pow):
            check(node.left)
            e = node.right
            if not (isinstance(e, ast.Constant) and isinstance(e.value, int) and e.value >= 0):
                raise ValueError(f"exponents must be nonnegative integers in {expr!r}")
            return
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            return check(node.operand)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return
        if isinstance(node, ast.Name):
            idx = _var_index(node.id)
            max_index = max(max_index, idx)
            return
        raise ValueError(f"unsupported construct in polynomial {expr!r}")

    check(tree)
    code = compile(tree, "<polynomial>", "eval")
    names = {n.id for n in ast.walk(tree) if isinstance(n, ast.Name)}

    def fn(c):
        env = {name: c[_var_index(name)] for name in names}
        for name in names:
            if name != "t" and _var_index(name) >= len(c) - 1:
                raise ValueError(f"variable {name!r} not available in H^{(len(c) - 1) // 2}")
        out = eval(code, {"__builtins__": {}}, env)  # noqa: S307 - AST checked above
        return out

    return ScalarField(fn, f"poly[{expr}]")


# -- catalog ----------------------------------------------------------------

FIELD_CATALOG: dict[str, Callable[..., ScalarField]] = {
    "constant": constant,
    "coordinate": coordinate,
    "rho2_half": rho2_half,
    "two_t": two_t,
    "linear_horizontal": linear_horizontal,
    "euclidean_sphere": euclidean_sphere,
    "sphere": euclidean_sphere,
    "ellipsoid": ellipsoid,
    "torus": torus,
    "cylinder": cylinder,
    "radial_distance": radial_distance,
    "exp_cos": exp_cos,
    "exp_x_plus_t": exp_x_plus_t,
}


def parse_call(spec: str) -> tuple[str, tuple]:
    """Split ``"name(a, b)"`` into ``("name", (a, b))`` using literal parsing."""
    spec = spec.strip()
    m = re.match(r"^([A-Za-z_][A-Za-z0-9_]*)\s*(?:\((.*)\))?$", spec, re.S)
    if not m:
        raise ValueError(f"malformed catalog reference {spec!r}")
    name, args = m.group(1), m.group(2)
    if not args or not args.strip():
        return name, ()
    try:
        val = ast.literal_eval(f"({args},)")
    except (ValueError, SyntaxError):
        raise ValueError(f"arguments of {spec!r} must be numeric literals") from None
    return name, tuple(val)


def resolve_field(spec) -> ScalarField:
    """Field from a catalog reference, a polynomial string or a field itself."""
    if isinstance(spec, ScalarField):
        return spec
    spec = str(spec).strip()
    if spec.startswith("poly:"):
        return polynomial(spec[5:])
    try:
        name, args = parse_call(spec)
    except ValueError:
        return polynomial(spec)
    if name in FIELD_CATALOG:
        try:
            return FIELD_CATALOG[name](*args)
        except TypeError as exc:
            raise ValueError(f"bad arguments for field {name!r}: {exc}") from None
    if re.fullmatch(r"[xyt]\d*", name) or not re.fullmatch(r"[A-Za-z_]\w*", name):
        return polynomial(spec)
    try:
        return polynomial(spec)
    except ValueError:
        raise CatalogError(name, FIELD_CATALOG) from None
