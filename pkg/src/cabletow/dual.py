"""Vectorized forward-mode derivative arithmetic.

A ``Dual`` carries an array of values together with derivatives along a
fixed number of seed directions in its trailing axis.  Constraint evaluators
are written once against the dispatch helpers below (``sin``, ``hypot``,
...) and run either on plain ndarrays (fast value-only pass) or on duals
(value + jacobian pass), so the two code paths cannot drift apart.

The intended use is stencil differentiation: each residual row touches a
handful of decision variables, every row's slice of those variables becomes
one seeded direction, and whole arrays of rows are pushed through together.
"""

from __future__ import annotations

import numpy as np


class Dual:
    """Array of values with directional derivatives in the trailing axis."""

    __slots__ = ("val", "dot")
    __array_priority__ = 100  # numpy defers binary ops to us

    def __init__(self, val, dot):
        self.val = np.asarray(val, dtype=float)
        self.dot = np.asarray(dot, dtype=float)
        if self.dot.shape[:-1] != self.val.shape:
            raise ValueError(
                f"dot shape {self.dot.shape} does not extend val shape "
                f"{self.val.shape}")

    @staticmethod
    def variable(val, slot: int, n_dirs: int) -> "Dual":
        """Lift values to a dual with unit derivative along one direction."""
        val = np.asarray(val, dtype=float)
        dot = np.zeros(val.shape + (n_dirs,))
        dot[..., slot] = 1.0
        return Dual(val, dot)

    @staticmethod
    def constant(val, n_dirs: int) -> "Dual":
        val = np.asarray(val, dtype=float)
        return Dual(val, np.zeros(val.shape + (n_dirs,)))

    @property
    def n_dirs(self) -> int:
        return self.dot.shape[-1]

    def __repr__(self):
        return f"Dual(val={self.val!r}, n_dirs={self.n_dirs})"

    # -- arithmetic ---------------------------------------------------------

    def __neg__(self):
        return Dual(-self.val, -self.dot)

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val + other.val, self.dot + other.dot)
        return Dual(self.val + other, _keep(self.dot, np.shape(other), self.val))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val - other.val, self.dot - other.dot)
        return Dual(self.val - other, _keep(self.dot, np.shape(other), self.val))

    def __rsub__(self, other):
        return Dual(other - self.val, _keep(-self.dot, np.shape(other), self.val))

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val * other.val,
                        self.dot * other.val[..., None]
                        + other.dot * self.val[..., None])
        other = np.asarray(other, dtype=float)
        return Dual(self.val * other, self.dot * other[..., None])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            inv = 1.0 / other.val
            val = self.val * inv
            return Dual(val, (self.dot - other.dot * val[..., None])
                        * inv[..., None])
        other = np.asarray(other, dtype=float)
        return Dual(self.val / other, self.dot / other[..., None])

    def __rtruediv__(self, other):
        other = np.asarray(other, dtype=float)
        val = other / self.val
        return Dual(val, -self.dot * (val / self.val)[..., None])

    def __pow__(self, n):
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise ValueError("only positive integer powers are supported")
        val = self.val ** n
        return Dual(val, self.dot * (n * self.val ** (n - 1))[..., None])

    # -- elementary functions ----------------------------------------------

    def sin(self):
        return Dual(np.sin(self.val), self.dot * np.cos(self.val)[..., None])

    def cos(self):
        return Dual(np.cos(self.val), -self.dot * np.sin(self.val)[..., None])

    def sqrt(self):
        r = np.sqrt(self.val)
        return Dual(r, self.dot * (0.5 / r)[..., None])


def _keep(dot, other_shape, val):
    """Broadcast a derivative array when the value side broadcasts."""
    if other_shape == () or other_shape == np.shape(val):
        return dot
    target = np.broadcast_shapes(np.shape(val), other_shape)
    return np.broadcast_to(dot, target + dot.shape[-1:]).copy()


# -- dispatch helpers: one evaluator source, two execution modes ------------


def sin(x):
    return x.sin() if isinstance(x, Dual) else np.sin(x)


def cos(x):
    return x.cos() if isinstance(x, Dual) else np.cos(x)


def sqrt(x):
    return x.sqrt() if isinstance(x, Dual) else np.sqrt(x)


def hypot(a, b):
    return sqrt(a * a + b * b)


def value(x):
    """Strip derivatives; identity on plain arrays."""
    return x.val if isinstance(x, Dual) else np.asarray(x, dtype=float)
