"""Heston coefficients, the constants derived from them, and the affine
coordinate changes that remove the constant drift term b1.

The operator is

    A v = -(y/2)(v_xx + 2 rho sigma v_xy + sigma^2 v_yy)
          - (r - q - y/2) v_x - kappa (theta - y) v_y + r v

on the upper half-plane, with the weight w = y^(beta-1) exp(-gamma|x| - mu y).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from typing import Callable

import numpy as np

from .errors import CoefficientError, NormalizationError


@dataclass(frozen=True)
class HestonParams:
    sigma: float
    rho: float
    kappa: float
    theta: float
    r: float
    q: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DerivedConstants:
    beta: float
    mu: float
    a1: float
    b1: float
    nu0: float
    C2: float
    C3: float
    C4: float
    gamma0: float
    gamma: float
    C1: float
    C5: float
    C6: float
    C7: float
    lambda0: float
    nu1: float

    def to_dict(self) -> dict:
        return asdict(self)


def validate(params: HestonParams) -> HestonParams:
    """Check the ellipticity and sign conditions.

    A negative sigma is folded into the canonical form (|sigma|, -rho); the
    operator only sees sigma^2 and rho*sigma so nothing else changes.
    """
    p = params
    vals = (p.sigma, p.rho, p.kappa, p.theta, p.r, p.q)
    if not all(np.isfinite(v) for v in vals):
        raise CoefficientError("coefficients must be finite")
    if p.sigma == 0:
        raise CoefficientError("sigma: require sigma != 0")
    if not -1.0 < p.rho < 1.0:
        raise CoefficientError("rho: require -1 < rho < 1")
    if not p.kappa > 0:
        raise CoefficientError("kappa: require kappa > 0")
    if not p.theta > 0:
        raise CoefficientError("theta: require theta > 0")
    if not p.r >= 0:
        raise CoefficientError("r: require r >= 0")
    if not p.q >= 0:
        raise CoefficientError("q: require q >= 0")
    if p.sigma < 0:
        p = replace(p, sigma=-p.sigma, rho=-p.rho)
    return p


def _b1(p: HestonParams) -> float:
    return p.r - p.q - p.kappa * p.theta * p.rho / p.sigma


def derive_constants(params: HestonParams, gamma: float | None = None) -> DerivedConstants:
    """Evaluate every constant of the weighted energy estimates.

    gamma defaults to gamma0; an override must lie in (0, gamma0].
    """
    p = params
    s, rho, kap, th, r = p.sigma, p.rho, p.kappa, p.theta, p.r
    beta = 2.0 * kap * th / s**2
    mu = 2.0 * kap / s**2
    a1 = kap * rho / s - 0.5
    b1 = _b1(p)
    nu0 = min(1.0, (1.0 - rho**2) * s**2)
    C2 = min(s**2 * (1.0 - rho**2) / 2.0, (1.0 - rho**2) / 2.0)
    C3 = max(abs(a1), abs(b1)) / 2.0 + max(0.5, abs(rho) * s / 2.0)
    C4 = max(s**2 * (1.0 - rho**2) / 2.0, (1.0 - rho**2) / 2.0)
    gamma0 = C2 / (2.0 * C3)
    if gamma is None:
        gamma = gamma0
    elif not 0 < gamma <= gamma0 * (1 + 1e-14):
        raise CoefficientError(f"gamma: require 0 < gamma <= gamma0 = {gamma0:.6g}, got {gamma}")
    C1 = max(C4 + gamma * C3, r + gamma * C3)
    C6 = abs(a1) + max(gamma / 2.0, gamma * rho * s / 2.0) + abs(b1)
    C7 = 0.5 + rho * s + s**2 / 2.0 + r
    return DerivedConstants(
        beta=beta, mu=mu, a1=a1, b1=b1, nu0=nu0, C2=C2, C3=C3, C4=C4,
        gamma0=gamma0, gamma=gamma, C1=C1, C5=C6 + C7, C6=C6, C7=C7,
        lambda0=C2, nu1=C2 / 2.0,
    )


@dataclass(frozen=True)
class CoordinateChange:
    """(x, y) -> (z, w) = (c (x + m y), a y), with u~(z, w) = b u(x, y).

    The transformed equation reads A~ u~ = source_scale * b * f at the image
    point.  c is an x-dilation needed after a shear to restore the
    (y/2)(v_x - v_xx) pairing of the log-price variable; it equals 1 in the
    pure scaling case.
    """
    a: float
    m: float
    b: float
    c: float
    source_scale: float
    original: HestonParams
    transformed: HestonParams

    @property
    def is_identity(self) -> bool:
        return self.a == 1.0 and self.m == 0.0 and self.b == 1.0 and self.c == 1.0

    def forward(self, x, y):
        return self.c * (x + self.m * y), self.a * y

    def inverse(self, z, w):
        y = w / self.a
        return z / self.c - self.m * y, y

    def to_dict(self) -> dict:
        return {
            "a": self.a, "m": self.m, "b": self.b, "c": self.c,
            "source_scale": self.source_scale,
            "transformed": self.transformed.to_dict(),
            "b1_transformed": _b1(self.transformed),
        }


def _scale(p: HestonParams, a: float) -> HestonParams:
    """Coefficients after (x, y) -> (x, a y) and multiplying the equation by a."""
    return HestonParams(sigma=p.sigma * a, rho=p.rho, kappa=p.kappa * a,
                        theta=p.theta * a, r=p.r * a, q=p.q * a)


def _shear(p: HestonParams, m: float):
    s, rho, kap, th, r, q = p.sigma, p.rho, p.kappa, p.theta, p.r, p.q
    xi = 1.0 + 2.0 * rho * s * m + s**2 * m**2
    sig_bar = abs(s) / math.sqrt(xi)
    rho_bar = (rho * s + m * s**2) / (abs(s) * math.sqrt(xi))
    r_bar = r / xi
    q_bar = (q - kap * th * m) / xi
    kap_bar = kap / xi
    bb = (2.0 * kap * m + 1.0) / xi
    return xi, sig_bar, rho_bar, kap_bar, r_bar, q_bar, bb


def affine_change(params: HestonParams, m: float = 0.0, a: float = 1.0) -> CoordinateChange:
    """Shear z = x + m y, the x-dilation that restores the log-price pairing,
    then y -> a y.  Exact for any m > -1/(2 kappa) and a > 0.

    The transformed b1 equals a b1 / (1 + 2 kappa m): affine changes of this
    family rescale b1 but never change its sign or make it vanish.
    """
    p = validate(params)
    if not a > 0:
        raise CoefficientError("scale a must be positive")
    if not 1.0 + 2.0 * p.kappa * m > 0:
        raise CoefficientError("shear m must satisfy 1 + 2 kappa m > 0")
    if m == 0.0:
        return CoordinateChange(a, 0.0, 1.0, 1.0, a, p, _scale(p, a))
    xi, sb, rb, kb, r_bar, q_bar, c = _shear(p, m)
    # After the shear the v_z drift carries (c y/2); dilating z by c restores
    # the Heston pairing and divides the equation by c^2.
    mid = HestonParams(sigma=sb / c, rho=rb, kappa=kb / c**2, theta=p.theta,
                       r=r_bar / c**2, q=r_bar / c**2 - (r_bar - q_bar) / c)
    return CoordinateChange(a, m, 1.0, c, a / (xi * c**2), p, _scale(mid, a))


def normalize_b1(params: HestonParams, tol: float = 1e-12) -> CoordinateChange:
    """Coordinate change with transformed b1 = 0.

    Returns the identity when b1 already vanishes.  Otherwise the candidate
    change (scale a = sqrt(kappa theta rho / ((r-q) sigma)) when that root is
    real, else the first shear m in {1, 2, ..., 2^20} with rho_bar > 0 and
    r_bar > q_bar followed by the same scaling) is built and its b1 checked.
    Since b1 only rescales under these maps the check fails whenever
    b1 != 0, and NormalizationError carries the candidate in `.change`.
    """
    p = validate(params)
    scale = 1.0 + abs(p.r) + abs(p.q)
    if abs(_b1(p)) <= tol * scale:
        return CoordinateChange(1.0, 0.0, 1.0, 1.0, 1.0, p, p)

    def root(t: HestonParams):
        ratio = t.rho / ((t.r - t.q) * t.sigma) if t.r != t.q else -1.0
        return math.sqrt(t.kappa * t.theta * ratio) if ratio > 0 else None

    change = None
    a = root(p)
    if a is not None:
        change = affine_change(p, 0.0, a)
    else:
        for k in range(21):
            m = float(2**k)
            _, _, rb, _, r_bar, q_bar, _ = _shear(p, m)
            if rb > 0 and r_bar - q_bar > 0:
                base = affine_change(p, m, 1.0)
                a = root(base.transformed)
                change = affine_change(p, m, a if a is not None else 1.0)
                break
    if change is None:
        raise NormalizationError("no shear m in {1, 2, ..., 2^20} satisfies "
                                 "rho_bar > 0 and r_bar - q_bar > 0")
    t = change.transformed
    tb = _b1(t)
    if abs(tb) <= tol * (1.0 + abs(t.r) + abs(t.q)):
        return change
    raise NormalizationError(
        f"transformed b1 = {tb:.6g} != 0 (a = {change.a:.6g}, m = {change.m:g}); "
        f"affine changes multiply b1 by a/(1 + 2 kappa m) and cannot remove it", change)


def map_function(change: CoordinateChange, u: Callable) -> Callable:
    """Express u in the new coordinates: u~(z, w) = b u(T^{-1}(z, w)).

    Works for plain callables and for SmoothField closures (derivatives are
    carried along by the affine chain rule).
    """
    from .fields import SmoothField

    if change.is_identity:
        return u
    if isinstance(u, SmoothField):
        return u.pullback_affine(change) * change.b

    def mapped(z, w):
        x, y = change.inverse(z, w)
        return change.b * u(x, y)

    return mapped


def map_source(change: CoordinateChange, f: Callable) -> Callable:
    """Source term of the transformed equation."""
    if change.is_identity:
        return f
    s = change.source_scale * change.b

    def mapped(z, w):
        x, y = change.inverse(z, w)
        return s * f(x, y)

    return mapped
