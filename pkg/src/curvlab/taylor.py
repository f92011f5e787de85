"""Second-order forward-mode automatic differentiation.

A :class:`TaylorScalar` carries a value, its gradient and its full Hessian with
respect to ``n`` independent variables. Mixed arithmetic with plain floats is
supported, and :func:`sin`, :func:`cos`, :func:`sqrt`, :func:`exp`, :func:`log`
dispatch on the argument type so metric functions can be written once and
evaluated on floats or on Taylor scalars.
"""

from __future__ import annotations

import math

import numpy as np


class TaylorScalar:
    __slots__ = ("value", "grad", "hess")

    def __init__(self, value: float, grad, hess):
        self.value = float(value)
        self.grad = np.asarray(grad, dtype=float)
        self.hess = np.asarray(hess, dtype=float)

    @classmethod
    def variable(cls, value: float, index: int, n: int) -> "TaylorScalar":
        grad = np.zeros(n)
        grad[index] = 1.0
        return cls(value, grad, np.zeros((n, n)))

    @classmethod
    def constant(cls, value: float, n: int) -> "TaylorScalar":
        return cls(value, np.zeros(n), np.zeros((n, n)))

    def _lift(self, other) -> "TaylorScalar":
        if isinstance(other, TaylorScalar):
            return other
        return TaylorScalar(other, np.zeros_like(self.grad), np.zeros_like(self.hess))

    def _chain(self, f0: float, f1: float, f2: float) -> "TaylorScalar":
        """Compose a scalar function with derivatives ``f0, f1, f2`` at ``self.value``."""
        g = self.grad
        return TaylorScalar(f0, f1 * g, f1 * self.hess + f2 * np.outer(g, g))

    def __add__(self, other):
        if isinstance(other, TaylorScalar):
            return TaylorScalar(self.value + other.value, self.grad + other.grad, self.hess + other.hess)
        return TaylorScalar(self.value + other, self.grad, self.hess)

    __radd__ = __add__

    def __neg__(self):
        return TaylorScalar(-self.value, -self.grad, -self.hess)

    def __pos__(self):
        return self

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, TaylorScalar):
            a, b = self, other
            cross = np.outer(a.grad, b.grad)
            return TaylorScalar(
                a.value * b.value,
                a.value * b.grad + b.value * a.grad,
                a.value * b.hess + b.value * a.hess + cross + cross.T,
            )
        return TaylorScalar(self.value * other, self.grad * other, self.hess * other)

    __rmul__ = __mul__

    def reciprocal(self) -> "TaylorScalar":
        v = self.value
        if v == 0.0:
            raise ZeroDivisionError("TaylorScalar division by a zero value")
        return self._chain(1.0 / v, -1.0 / v**2, 2.0 / v**3)

    def __truediv__(self, other):
        if isinstance(other, TaylorScalar):
            return self * other.reciprocal()
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, TaylorScalar):
            return exp(p * log(self))
        v = self.value
        if isinstance(p, int) and p >= 0:
            if p == 0:
                return self._lift(1.0)
            f1 = p * v ** (p - 1)
            f2 = p * (p - 1) * v ** (p - 2) if p >= 2 else 0.0
            return self._chain(v**p, f1, f2)
        return self._chain(v**p, p * v ** (p - 1), p * (p - 1) * v ** (p - 2))

    def __float__(self):
        return self.value

    def __repr__(self):
        return f"TaylorScalar({self.value!r}, grad={self.grad!r})"


def _unary(x, f0, f1, f2, plain):
    if isinstance(x, TaylorScalar):
        v = x.value
        return x._chain(f0(v), f1(v), f2(v))
    return plain(x)


def sin(x):
    return _unary(x, math.sin, math.cos, lambda v: -math.sin(v), math.sin)


def cos(x):
    return _unary(x, math.cos, lambda v: -math.sin(v), lambda v: -math.cos(v), math.cos)


def exp(x):
    return _unary(x, math.exp, math.exp, math.exp, math.exp)


def log(x):
    return _unary(x, math.log, lambda v: 1.0 / v, lambda v: -1.0 / v**2, math.log)


def sqrt(x):
    return _unary(x, math.sqrt, lambda v: 0.5 / math.sqrt(v), lambda v: -0.25 * v**-1.5, math.sqrt)


def value(x) -> float:
    return x.value if isinstance(x, TaylorScalar) else float(x)


def jet(fn, x0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Evaluate a matrix-valued ``fn`` with its first and second partials at ``x0``.

    Returns ``(f, df, ddf)`` with ``df[k, ...] = d_k f`` and ``ddf[k, l, ...] = d_k d_l f``.
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    xs = [TaylorScalar.variable(v, i, n) for i, v in enumerate(x0)]
    out = fn(xs)
    rows = len(out)
    cols = len(out[0])
    f = np.zeros((rows, cols))
    df = np.zeros((n, rows, cols))
    ddf = np.zeros((n, n, rows, cols))
    for i in range(rows):
        for j in range(cols):
            e = out[i][j]
            if isinstance(e, TaylorScalar):
                f[i, j] = e.value
                df[:, i, j] = e.grad
                ddf[:, :, i, j] = e.hess
            else:
                f[i, j] = float(e)
    return f, df, ddf
