"""Explicit sub- and supersolutions for the four-term source family.

For a source bounded by

    n = c0 + c2 y + c3 (1+y) e^(l x) + c4 (1+y) e^(k y)
    N = C0 + C2 y + C3 (1+y) e^(L x) + C4 (1+y) e^(K y)

the functions m = d0 + d2 y + d3 e^(l x) + d4 e^(k y) and M (same with
capital letters) satisfy A m <= n and A M >= N, using

    A(d0 + d2 y) = (r d0 - d2 kappa theta) + (kappa + r) d2 y
    A(e^(L x))   = (r - L(r-q)) e^(L x) + (y/2) L(1-L) e^(L x)
    A(e^(K y))   = (r - kappa theta K) e^(K y) + y K(kappa - sigma^2 K/2) e^(K y)
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .assembly import apply_A
from .errors import BarrierError, SideConditionError
from .fields import SmoothField
from .params import DerivedConstants, HestonParams, derive_constants
from .weighted_space import WeightedGrid


@dataclass(frozen=True)
class EnvelopeCoeffs:
    c0: float
    c2: float
    c3: float
    c4: float
    C0: float
    C2e: float
    C3e: float
    C4e: float
    k: float
    K: float
    l: float  # noqa: E741
    L: float
    d0: float
    d2: float
    d3: float
    d4: float
    D0: float
    D2: float
    D3: float
    D4: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EnvelopePair:
    coeffs: EnvelopeCoeffs
    m: SmoothField
    M: SmoothField
    n: SmoothField
    N: SmoothField


def _four_term(a0, a2, a3, ell, a4, k) -> SmoothField:
    return (SmoothField.affine(a0, a2) + SmoothField.exp_x(ell, a3)
            + SmoothField.exp_y(k, a4))


def _source_bound(c0, c2, c3, ell, c4, k) -> SmoothField:
    one_py = SmoothField.affine(1.0, 1.0)
    return (SmoothField.affine(c0, c2) + one_py * SmoothField.exp_x(ell, c3)
            + one_py * SmoothField.exp_y(k, c4))


def _lin(c0, c2, p: HestonParams):
    d2 = c2 / (p.kappa + p.r) if c2 != 0 else 0.0
    if c0 == 0 and c2 == 0:
        return 0.0, 0.0
    d0 = (c0 + c2 * p.kappa * p.theta / (p.kappa + p.r)) / p.r
    return d0, d2


def _check_x_exp(c, ell, p: HestonParams, name):
    if c == 0:
        return
    if not 0 < ell < 1:
        raise SideConditionError(f"{name}: require 0 < {name[-1]} < 1")
    if not p.r - ell * (p.r - p.q) > 0:
        raise SideConditionError(f"{name}: require r > {name[-1]}(r - q)")


def _check_y_exp(c, k, p: HestonParams, name):
    if c == 0:
        return
    if not 0 < k < 2 * p.kappa / p.sigma**2:
        raise SideConditionError(f"{name}: require 0 < {name[-1]} < 2 kappa/sigma^2")
    if not p.kappa * p.theta * k < p.r:
        raise SideConditionError(f"{name}: require {name[-1]} < r/(kappa theta)")


def derive_envelopes(params: HestonParams, *, c0=0.0, c2=0.0, c3=0.0, c4=0.0,
                     C0=0.0, C2=0.0, C3=0.0, C4=0.0, k=0.0, K=0.0, l=0.0, L=0.0,  # noqa: E741
                     consts: DerivedConstants | None = None,
                     check_integrability: bool = True) -> EnvelopePair:
    """Envelope coefficients and closures from source-bound coefficients.

    check_integrability=False skips 2k, 2K < mu and 2l, 2L < gamma, which only
    matter for weighted integrability on unbounded domains.
    """
    p = params
    c = consts or derive_constants(p)
    lower, upper = (c0, c2, c3, c4), (C0, C2, C3, C4)
    for i, (lo, hi) in zip((0, 2, 3, 4), zip(lower, upper)):
        if lo > hi:
            raise SideConditionError(f"c{i} <= C{i}")
    if (c3 != 0 or C3 != 0) and not l <= L:
        raise SideConditionError("l <= L")
    if (c4 != 0 or C4 != 0) and not k <= K:
        raise SideConditionError("k <= K")
    for v, nm in ((c0, "c0"), (C0, "C0")):
        if v != 0 and not p.r > 0:
            raise SideConditionError(f"{nm} != 0: require r > 0")
    for v, nm in ((c2, "c2"), (C2, "C2")):
        if v != 0 and not min(p.kappa, p.r) > 0:
            raise SideConditionError(f"{nm} != 0: require min(kappa, r) > 0")
    _check_x_exp(c3, l, p, "c3/l")
    _check_x_exp(C3, L, p, "C3/L")
    _check_y_exp(c4, k, p, "c4/k")
    _check_y_exp(C4, K, p, "C4/K")
    if check_integrability:
        for val, bound, txt in ((k, c.mu, "2k < mu"), (K, c.mu, "2K < mu"),
                                (l, c.gamma, "2l < gamma"), (L, c.gamma, "2L < gamma")):
            if val != 0 and not 2 * val < bound:
                raise SideConditionError(txt)

    d0, d2 = _lin(c0, c2, p)
    D0, D2 = _lin(C0, C2, p)

    def x_coef(cc, ell, pick):
        if cc == 0:
            return 0.0
        return pick(cc / (p.r - ell * (p.r - p.q)), 2 * cc / (ell * (1 - ell)))

    def y_coef(cc, kk, pick):
        if cc == 0:
            return 0.0
        return pick(cc / (p.r - p.kappa * p.theta * kk), cc / (kk * (p.kappa - p.sigma**2 * kk / 2)))

    d3, D3 = x_coef(c3, l, min), x_coef(C3, L, max)
    d4, D4 = y_coef(c4, k, min), y_coef(C4, K, max)
    coeffs = EnvelopeCoeffs(c0, c2, c3, c4, C0, C2, C3, C4, k, K, l, L,
                            d0, d2, d3, d4, D0, D2, D3, D4)
    return EnvelopePair(coeffs, _four_term(d0, d2, d3, l, d4, k), _four_term(D0, D2, D3, L, D4, K),
                        _source_bound(c0, c2, c3, l, c4, k), _source_bound(C0, C2, C3, L, C4, K))


# --------------------------------------------------------------------------


@dataclass
class AdmissibilityReport:
    violations: dict
    integrability: dict
    tol: float = 1e-12

    @property
    def passed(self) -> bool:
        return all(v <= self.tol for v in self.violations.values()) and all(
            math.isfinite(v) for v in self.integrability.values())

    def to_json(self) -> str:
        return json.dumps({"violations": self.violations, "integrability": self.integrability,
                           "passed": self.passed}, sort_keys=True)


def _eval(fn, X, Y):
    val = fn(X, Y) if callable(fn) else fn
    return np.broadcast_to(np.asarray(val, float), X.shape)


def check_admissible_envelopes(pair: EnvelopePair, f, g, psi, grid: WeightedGrid,
                               params: HestonParams, tol: float = 1e-12) -> AdmissibilityReport:
    """Worst nodal violation of each envelope/source inequality (0 when satisfied)."""
    X, Y = grid.points
    bd = grid.dirichlet_mask
    m, M = _eval(pair.m, X, Y), _eval(pair.M, X, Y)
    Am, AM = apply_A(pair.m, X, Y, params), apply_A(pair.M, X, Y, params)
    fv, gv, pv = _eval(f, X, Y), _eval(g, X, Y), _eval(psi, X, Y)

    def worst(d):
        return float(max(np.max(d), 0.0)) if d.size else 0.0

    scale_AM = 1.0 + np.abs(Am) + np.abs(AM)
    violations = {
        "m<=g on boundary": worst(m[bd] - gv[bd]),
        "g<=M on boundary": worst(gv[bd] - M[bd]),
        "m<=M": worst(m - M),
        "Am<=AM": worst(Am - AM),
        "psi<=M": worst(pv - M),
        "Am<=f": worst((Am - fv) / scale_AM),
        "f<=AM": worst((fv - AM) / scale_AM),
    }
    w = grid.node_weights
    integrability = {
        "(1+y)^2 M in L2": float(np.sqrt(np.sum(w * ((1 + Y) ** 2 * M) ** 2))),
        "(1+y)^(1/2) M in L4": float(np.sum(w * ((1 + Y) ** 0.5 * np.abs(M)) ** 4) ** 0.25),
        "(1+y) f in L2": float(np.sqrt(np.sum(w * ((1 + Y) * fv) ** 2))),
    }
    return AdmissibilityReport(violations, integrability, tol)


@dataclass
class BarrierReport:
    checks: dict
    ratio: float

    @property
    def passed(self) -> bool:
        return all(v <= 1e-12 for v in self.checks.values()) and math.isfinite(self.ratio)

    def to_json(self) -> str:
        return json.dumps({"checks": self.checks, "ratio": self.ratio, "passed": self.passed},
                          sort_keys=True)


def check_barrier(phi: SmoothField, pair: EnvelopePair, g: SmoothField, grid: WeightedGrid,
                  params: HestonParams) -> BarrierReport:
    """Nodal checks of A phi >= A g, A(m + phi) > 2 A g, phi >= g on the
    Dirichlet edges, and the estimated sup of (1+y)(M+phi-2g)/A(m+phi-2g)
    (times a 1.1 safety factor)."""
    X, Y = grid.points
    bd = grid.dirichlet_mask
    Aphi, Ag = apply_A(phi, X, Y, params), apply_A(g, X, Y, params)
    Amp = apply_A(pair.m + phi, X, Y, params)
    den = Amp - 2 * Ag
    if np.any(den <= 0):
        i = int(np.argmin(den))
        raise BarrierError(f"A(m + phi - 2g) = {den[i]:.3g} <= 0 at (x, y) = ({X[i]:.3g}, {Y[i]:.3g})")
    num = (1 + Y) * (_eval(pair.M, X, Y) + _eval(phi, X, Y) - 2 * _eval(g, X, Y))
    checks = {
        "A phi >= A g": float(max(np.max(Ag - Aphi), 0.0)),
        "phi >= g on boundary": float(max(np.max(_eval(g, X, Y)[bd] - _eval(phi, X, Y)[bd]), 0.0)),
    }
    return BarrierReport(checks, float(1.1 * np.max(np.abs(num) / den)))


def barrier_from_envelopes(pair: EnvelopePair, params: HestonParams,
                           p3: float = 1.0, p4: float = 1.0) -> SmoothField:
    """phi = p3 e^(L x) + p4 e^(K y) - m, so that m + phi = p3 e^(L x) + p4 e^(K y).

    When every lower coefficient c_i <= 0, -m has nonnegative coefficients,
    phi >= 0 and A phi >= -n >= 0.  Missing upper exponents default to
    L = 1/2 and K = min(2 kappa/sigma^2, r/(kappa theta))/2, which keep both
    exponential images positive when r > 0.
    """
    c = pair.coeffs
    L = c.L if c.L > 0 else 0.5
    K = c.K if c.K > 0 else 0.5 * min(2 * params.kappa / params.sigma**2, params.r / (params.kappa * params.theta))
    return SmoothField.exp_x(L, p3) + SmoothField.exp_y(K, p4) - pair.m
