"""Closures carrying their first and second derivatives.

The strong operator, the divergence form, envelope checks and the identity
checks all need exact derivatives of smooth test functions, so data are
passed around as SmoothField objects rather than bare callables.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

Fn = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _zero(x, y):
    return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)


def _const(c: float) -> Fn:
    return lambda x, y: np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, float(c))


@dataclass(frozen=True)
class SmoothField:
    f: Fn
    fx: Fn = _zero
    fy: Fn = _zero
    fxx: Fn = _zero
    fxy: Fn = _zero
    fyy: Fn = _zero

    def __call__(self, x, y):
        return self.f(x, y)

    def jet(self, x, y):
        """(u, u_x, u_y, u_xx, u_xy, u_yy) at the given points."""
        return (self.f(x, y), self.fx(x, y), self.fy(x, y),
                self.fxx(x, y), self.fxy(x, y), self.fyy(x, y))

    # -- constructors ------------------------------------------------------
    @classmethod
    def constant(cls, c: float) -> "SmoothField":
        return cls(_const(c))

    @classmethod
    def affine(cls, d0: float, d2: float, d1: float = 0.0) -> "SmoothField":
        """d0 + d1 x + d2 y."""
        return cls(lambda x, y: d0 + d1 * np.asarray(x, float) + d2 * np.asarray(y, float),
                   _const(d1), _const(d2))

    @classmethod
    def exp_x(cls, ell: float, coef: float = 1.0) -> "SmoothField":
        """coef * exp(ell x)."""
        def e(x, y):
            return coef * np.exp(ell * np.asarray(x, float)) + 0.0 * np.asarray(y, float)
        return cls(e, lambda x, y: ell * e(x, y), _zero,
                   lambda x, y: ell**2 * e(x, y), _zero, _zero)

    @classmethod
    def exp_y(cls, k: float, coef: float = 1.0) -> "SmoothField":
        """coef * exp(k y)."""
        def e(x, y):
            return coef * np.exp(k * np.asarray(y, float)) + 0.0 * np.asarray(x, float)
        return cls(e, _zero, lambda x, y: k * e(x, y), _zero, _zero,
                   lambda x, y: k**2 * e(x, y))

    @classmethod
    def separable(cls, X, Y) -> "SmoothField":
        """X(x) Y(y) from 1-D triples (g, g', g'')."""
        gx, dgx, ddgx = X
        gy, dgy, ddgy = Y
        return cls(lambda x, y: gx(x) * gy(y),
                   lambda x, y: dgx(x) * gy(y),
                   lambda x, y: gx(x) * dgy(y),
                   lambda x, y: ddgx(x) * gy(y),
                   lambda x, y: dgx(x) * dgy(y),
                   lambda x, y: gx(x) * ddgy(y))

    @classmethod
    def from_sympy(cls, expr, x=None, y=None) -> "SmoothField":
        """Build from a sympy expression in symbols x, y."""
        import sympy as sp

        x = x if x is not None else sp.Symbol("x")
        y = y if y is not None else sp.Symbol("y")
        parts = [expr, sp.diff(expr, x), sp.diff(expr, y), sp.diff(expr, x, 2),
                 sp.diff(expr, x, y), sp.diff(expr, y, 2)]
        fns = []
        for e in parts:
            g = sp.lambdify((x, y), e, "numpy")
            fns.append(lambda X, Y, g=g: np.broadcast_to(
                np.asarray(g(np.asarray(X, float), np.asarray(Y, float)), float),
                np.broadcast(np.asarray(X), np.asarray(Y)).shape).copy())
        return cls(*fns)

    # -- algebra -------------------------------------------------------------
    def _parts(self):
        return (self.f, self.fx, self.fy, self.fxx, self.fxy, self.fyy)

    def __add__(self, other):
        if not isinstance(other, SmoothField):
            other = SmoothField.constant(float(other))
        return SmoothField(*[(lambda x, y, a=a, b=b: a(x, y) + b(x, y))
                             for a, b in zip(self._parts(), other._parts())])

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other if isinstance(other, SmoothField) else -float(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, SmoothField):
            c = float(other)
            return SmoothField(*[(lambda x, y, a=a: c * a(x, y)) for a in self._parts()])
        u, v = self, other
        return SmoothField(
            lambda x, y: u.f(x, y) * v.f(x, y),
            lambda x, y: u.fx(x, y) * v.f(x, y) + u.f(x, y) * v.fx(x, y),
            lambda x, y: u.fy(x, y) * v.f(x, y) + u.f(x, y) * v.fy(x, y),
            lambda x, y: (u.fxx(x, y) * v.f(x, y) + 2 * u.fx(x, y) * v.fx(x, y)
                          + u.f(x, y) * v.fxx(x, y)),
            lambda x, y: (u.fxy(x, y) * v.f(x, y) + u.fx(x, y) * v.fy(x, y)
                          + u.fy(x, y) * v.fx(x, y) + u.f(x, y) * v.fxy(x, y)),
            lambda x, y: (u.fyy(x, y) * v.f(x, y) + 2 * u.fy(x, y) * v.fy(x, y)
                          + u.f(x, y) * v.fyy(x, y)),
        )

    __rmul__ = __mul__

    def pullback_affine(self, change) -> "SmoothField":
        """u~(z, w) = u(x, y) where x = z/c - m w/a, y = w/a."""
        a, m, c = change.a, change.m, change.c
        inv = change.inverse
        u = self

        def at(g):
            return lambda z, w: g(*inv(z, w))

        return SmoothField(
            at(u.f),
            lambda z, w: at(u.fx)(z, w) / c,
            lambda z, w: (-m * at(u.fx)(z, w) + at(u.fy)(z, w)) / a,
            lambda z, w: at(u.fxx)(z, w) / c**2,
            lambda z, w: (-m * at(u.fxx)(z, w) + at(u.fxy)(z, w)) / (a * c),
            lambda z, w: (m**2 * at(u.fxx)(z, w) - 2 * m * at(u.fxy)(z, w)
                          + at(u.fyy)(z, w)) / a**2,
        )


def bump(center: float, radius: float):
    """C-infinity bump exp(-1/(1-s^2)) in one variable, as (g, g', g'')."""
    def g(t):
        s = (np.asarray(t, float) - center) / radius
        out = np.zeros_like(s)
        inside = np.abs(s) < 1
        si = s[inside]
        out[inside] = np.exp(-1.0 / (1.0 - si**2))
        return out

    def dg(t):
        s = (np.asarray(t, float) - center) / radius
        out = np.zeros_like(s)
        inside = np.abs(s) < 1
        si = s[inside]
        e = np.exp(-1.0 / (1.0 - si**2))
        out[inside] = e * (-2 * si / (1 - si**2) ** 2) / radius
        return out

    def ddg(t):
        s = (np.asarray(t, float) - center) / radius
        out = np.zeros_like(s)
        inside = np.abs(s) < 1
        si = s[inside]
        e = np.exp(-1.0 / (1.0 - si**2))
        d1 = -2 * si / (1 - si**2) ** 2
        d2 = -2 / (1 - si**2) ** 2 - 8 * si**2 / (1 - si**2) ** 3
        out[inside] = e * (d1**2 + d2) / radius**2
        return out

    return g, dg, ddg
