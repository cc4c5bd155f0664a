"""Group and Lie-algebra structure of the Heisenberg group H^n.

Points are stored in exponential coordinates ``(x_1, y_1, ..., x_n, y_n, t)``.
Every function here accepts either a single point of shape ``(2n+1,)`` or a
batch of shape ``(..., 2n+1)``; ``n`` is always inferred from the last axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DimensionError(ValueError):
    """Raised when arrays disagree on the dimension of H^n."""


def dim_of(p) -> int:
    """Return n for a point (or batch) living in H^n."""
    m = np.shape(p)[-1]
    if m < 3 or m % 2 == 0:
        raise DimensionError(f"last axis must be 2n+1 with n >= 1, got {m}")
    return (m - 1) // 2


@dataclass(frozen=True)
class Point:
    """A single group element ``(z, t)`` with ``z`` in R^{2n}."""

    z: np.ndarray
    t: float

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float).copy()
        if z.ndim != 1 or z.size == 0 or z.size % 2:
            raise DimensionError("z must have even positive length 2n")
        if not (np.all(np.isfinite(z)) and np.isfinite(self.t)):
            raise ValueError("point components must be finite")
        z.setflags(write=False)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "t", float(self.t))

    @property
    def n(self) -> int:
        return self.z.size // 2

    @classmethod
    def from_array(cls, a) -> "Point":
        a = np.asarray(a, dtype=float)
        dim_of(a)
        return cls(a[:-1], a[-1])

    def as_array(self) -> np.ndarray:
        return np.append(self.z, self.t)

    def __mul__(self, other: "Point") -> "Point":
        return Point.from_array(group_mul(self.as_array(), other.as_array()))

    def inv(self) -> "Point":
        return Point(-self.z, -self.t)


def _as_points(p):
    if isinstance(p, Point):
        return p.as_array()
    return np.asarray(p, dtype=float)


def group_mul(p, q) -> np.ndarray:
    """Group law ``p * q``.

    The t-component is ``t + t' + 1/2 sum_i (x_i y'_i - x'_i y_i)``.
    """
    p = _as_points(p)
    q = _as_points(q)
    if np.shape(p)[-1] != np.shape(q)[-1]:
        raise DimensionError(
            f"points live in different groups: {np.shape(p)[-1]} vs {np.shape(q)[-1]}"
        )
    dim_of(p)
    out = p + q
    x, y = p[..., 0:-1:2], p[..., 1:-1:2]
    xq, yq = q[..., 0:-1:2], q[..., 1:-1:2]
    out[..., -1] += 0.5 * np.sum(x * yq - xq * y, axis=-1)
    return out


def group_inv(p) -> np.ndarray:
    return -_as_points(p)


def dilate(s: float, p) -> np.ndarray:
    """Heisenberg dilation ``(z, t) -> (s z, s^2 t)``."""
    if s < 0:
        raise ValueError("dilation factor must be nonnegative")
    p = _as_points(p)
    dim_of(p)
    out = s * p
    out[..., -1] = s * s * p[..., -1]
    return out


def frame_basis(p) -> np.ndarray:
    """Coordinate components of the left-invariant frame at ``p``.

    Column ``a`` holds ``X_1, Y_1, ..., X_n, Y_n, T`` (in that order) expressed
    in the coordinate basis, so ``frame_basis(p) @ v_frame = v_coords``.
    The matrix is unipotent (determinant 1).
    """
    p = _as_points(p)
    n = dim_of(p)
    m = 2 * n + 1
    F = np.broadcast_to(np.eye(m), p.shape[:-1] + (m, m)).copy()
    F[..., -1, 0:-1:2] = -0.5 * p[..., 1:-1:2]
    F[..., -1, 1:-1:2] = 0.5 * p[..., 0:-1:2]
    return F


def coordinate_metric(p) -> np.ndarray:
    """Left-invariant metric in coordinates, ``G = F^{-T} F^{-1}``."""
    F = frame_basis(p)
    Finv = np.linalg.inv(F)
    return np.swapaxes(Finv, -1, -2) @ Finv


def structural_matrix(n: int) -> np.ndarray:
    """Block-diagonal 2n x 2n matrix of ``[[0, 1], [-1, 0]]`` blocks."""
    if n < 1:
        raise DimensionError("n must be >= 1")
    C = np.zeros((2 * n, 2 * n))
    for i in range(n):
        C[2 * i, 2 * i + 1] = 1.0
        C[2 * i + 1, 2 * i] = -1.0
    return C


def perp(v) -> np.ndarray:
    """``v^perp = -C v``; on each (x_i, y_i) block ``(a, b) -> (-b, a)``."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] % 2:
        raise DimensionError("horizontal vectors have even length 2n")
    out = np.empty_like(v)
    out[..., 0::2] = -v[..., 1::2]
    out[..., 1::2] = v[..., 0::2]
    return out


def gram_norm2(M) -> np.ndarray:
    """Squared Gram (Frobenius) norm over the last two axes."""
    M = np.asarray(M)
    return np.sum(M * M, axis=(-2, -1))


def homogeneous_dimension(n: int) -> int:
    return 2 * n + 2
