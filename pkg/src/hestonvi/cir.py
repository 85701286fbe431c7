"""Closed forms for the x-independent (CIR) reduction of the operator.

With a = r/kappa, z = mu y, the equation

    B u = -(sigma^2/2) y u'' - kappa (theta - y) u' + r u = 0

becomes Kummer's equation z v'' + (beta - z) v' - a v = 0, solved by the
confluent hypergeometric functions M(a, beta, z) (entire, the regular
branch) and U(a, beta, z) (singular at 0 when beta >= 1, with a nonzero
weighted Neumann trace when 0 < beta < 1).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy import integrate

from .errors import AccuracyWarning, ParamError
from .params import HestonParams, derive_constants, validate
from .weighted_space import _gauss_y, line_matrices, y_nodes_for

SERIES_Z_MAX = 700.0     # all-positive series stays accurate until exp overflows
SIGNED_SERIES_Z_MAX = 30.0
CONNECTION_Z_MAX = 0.5   # cancellation in the two-M formula grows like e^z


def _is_nonpos_int(b: float) -> bool:
    return b <= 0 and float(b).is_integer()


def rgamma(x: float) -> float:
    """1/Gamma(x), zero at the poles."""
    if _is_nonpos_int(x):
        return 0.0
    return 1.0 / math.gamma(x)


# --------------------------------------------------------------------------
# M


def _m_series(a: float, b: float, z: np.ndarray) -> np.ndarray:
    total = np.ones_like(z)
    term = np.ones_like(z)
    for n in range(100000):
        term = term * (a + n) / (b + n) * z / (n + 1)
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
        if a + n + 1 == 0:  # series terminates
            break
    return total


def _m_asymptotic(a: float, b: float, z: np.ndarray) -> np.ndarray:
    """Leading large-z behaviour with the divergent tail cut at its smallest term."""
    s = np.ones_like(z)
    t = np.ones_like(z)
    for k in range(60):
        nt = t * (b - a + k) * (1 - a + k) / ((k + 1) * z)
        if np.all(np.abs(nt) >= np.abs(t)):
            break
        t = nt
        s = s + t
    with np.errstate(over="ignore"):
        lead = math.gamma(b) * rgamma(a) * np.exp(z) * z ** (a - b) * s
    alg = math.gamma(b) * rgamma(b - a) * math.cos(math.pi * a) * z ** (-a)
    return lead + alg


def kummer_m(a: float, b: float, z):
    """M(a, b, z) = sum (a)_n z^n / ((b)_n n!) for z >= 0."""
    if _is_nonpos_int(b):
        raise ParamError(f"b = {b} is a non-positive integer")
    zz = np.asarray(z, float)
    if np.any(zz < 0):
        raise ParamError("kummer_m needs z >= 0")
    flat = np.atleast_1d(zz).ravel()
    out = np.empty_like(flat)
    positive = a >= 0 and b > 0
    terminating = _is_nonpos_int(a)
    zmax = SERIES_Z_MAX if (positive or terminating) else SIGNED_SERIES_Z_MAX
    small = flat <= zmax
    if np.any(small):
        out[small] = _m_series(a, b, flat[small])
    if np.any(~small):
        warnings.warn(f"kummer_m: asymptotic expansion used for z > {zmax:g}", AccuracyWarning,
                      stacklevel=2)
        out[~small] = _m_asymptotic(a, b, flat[~small])
    return out.reshape(zz.shape) if zz.ndim else float(out[0])


# --------------------------------------------------------------------------
# U


def _u_connection(a: float, b: float, z: np.ndarray) -> np.ndarray:
    c1 = math.gamma(1 - b) * rgamma(a - b + 1)
    c2 = math.gamma(b - 1) * rgamma(a)
    out = c1 * kummer_m(a, b, z)
    if c2 != 0:
        out = out + c2 * z ** (1 - b) * kummer_m(a - b + 1, 2 - b, z)
    return out


def _u_integral(a: float, b: float, z: float) -> float:
    """U = 1/Gamma(a) int_0^inf e^(-zt) t^(a-1) (1+t)^(b-a-1) dt, a > 0.

    With t = u/z the u^(a-1) endpoint singularity goes to an algebraic
    quadrature weight on [0, 1] and the kink of (1 + u/z) sits at u = z.
    """
    e = b - a - 1

    def g(u):
        return math.exp(-u) * (1 + u / z) ** e

    kw = dict(limit=400, epsabs=0.0, epsrel=1e-13)
    if z < 1:
        head = integrate.quad(g, 0.0, z, weight="alg", wvar=(a - 1, 0.0), **kw)[0]
        mid = integrate.quad(lambda u: g(u) * u ** (a - 1), z, 1.0, **kw)[0]
    else:
        head = integrate.quad(g, 0.0, 1.0, weight="alg", wvar=(a - 1, 0.0), **kw)[0]
        mid = 0.0
    tail = integrate.quad(lambda u: g(u) * u ** (a - 1), 1.0, math.inf, **kw)[0]
    return z ** (-a) * (head + mid + tail) / math.gamma(a)


def _u_routes(a: float, b: float, z: np.ndarray) -> np.ndarray:
    """True where the connection formula is used."""
    if float(b).is_integer():
        if a < 0:
            raise ParamError("kummer_u: integer b with a < 0 is not supported")
        return np.zeros(z.shape, bool)
    conn = z <= CONNECTION_Z_MAX
    if a < 0:
        if np.any(~conn):
            warnings.warn("kummer_u: connection formula used beyond its accurate range",
                          AccuracyWarning, stacklevel=3)
        conn = np.ones(z.shape, bool)
    return conn


def _u_eval(a: float, b: float, z: np.ndarray, conn: np.ndarray) -> np.ndarray:
    if a == 0:
        return np.ones_like(z)
    out = np.empty_like(z)
    if np.any(conn):
        out[conn] = _u_connection(a, b, z[conn])
    for i in np.flatnonzero(~conn):
        out[i] = _u_integral(a, b, float(z[i]))
    return out


def kummer_u(a: float, b: float, z):
    """Tricomi's U(a, b, z) for z > 0.

    Non-integer b with z <= CONNECTION_Z_MAX uses the two-M connection
    formula; otherwise the Laplace-integral representation (a > 0).  a = 0
    gives U = 1.  Negative a with large z falls back to the connection
    formula with an AccuracyWarning.
    """
    if _is_nonpos_int(b):
        raise ParamError(f"b = {b} is a non-positive integer")
    zz = np.asarray(z, float)
    if np.any(zz <= 0):
        raise ParamError("kummer_u needs z > 0")
    flat = np.atleast_1d(zz).ravel()
    out = _u_eval(a, b, flat, _u_routes(a, b, flat))
    return out.reshape(zz.shape) if zz.ndim else float(out[0])


def kummer_u_small_z_limit(a: float, b: float) -> float:
    """lim z^b U_z(a, b, z) as z -> 0 for 0 < b < 1, equal to -a Gamma(b)/Gamma(a+1)."""
    return -a * math.gamma(b) * rgamma(a + 1)


def kummer_u_trace_numeric(a: float, b: float, z: float = 1e-40) -> float:
    """z^b U_z(a, b, z) at a tiny z through U_z = -a U(a+1, b+1, z)."""
    return -a * z**b * kummer_u(a + 1, b + 1, z)


def kummer_residual(a: float, b: float, z, branch: str = "M"):
    """(|z v'' + (b-z) v' - a v|, |z v''| + |(b-z) v'| + |a v|) with v' and v''
    from 5-point central differences at steps h and 2h, h = min(z/50, 0.01),
    combined by one Richardson step.  Each U stencil is evaluated by a single
    route, the one chosen at its centre."""
    z = np.atleast_1d(np.asarray(z, float))
    if np.any(z <= 0):
        raise ParamError("residual sample points must be positive")
    if branch == "M":
        def f(t):
            return kummer_m(a, b, t)
    else:
        conn = _u_routes(a, b, z)

        def f(t):
            return _u_eval(a, b, t, conn)
    v0 = f(z)

    def diffs(h):
        v = [f(z + k * h) for k in (-2, -1, 1, 2)]
        d1 = (v[0] - 8 * v[1] + 8 * v[2] - v[3]) / (12 * h)
        d2 = (-v[0] + 16 * v[1] - 30 * v0 + 16 * v[2] - v[3]) / (12 * h**2)
        return d1, d2

    h = np.minimum(z / 50, 0.01)
    (p1, p2), (q1, q2) = diffs(h), diffs(2 * h)
    d1, d2 = (16 * p1 - q1) / 15, (16 * p2 - q2) / 15
    res = z * d2 + (b - z) * d1 - a * v0
    scale = np.abs(z * d2) + np.abs((b - z) * d1) + np.abs(a * v0)
    return np.abs(res), scale


# --------------------------------------------------------------------------
# CIR branches


def _cir_abm(params: HestonParams):
    p = validate(params)
    c = derive_constants(p)
    return p.r / p.kappa, c.beta, c.mu


def cir_homogeneous(params: HestonParams, y):
    """(M(a, beta, mu y), U(a, beta, mu y)), a = r/kappa: the two solutions of B u = 0."""
    a, beta, mu = _cir_abm(params)
    y = np.asarray(y, float)
    if np.any(y <= 0):
        raise ParamError("cir_homogeneous needs y > 0")
    z = mu * y
    return kummer_m(a, beta, z), kummer_u(a, beta, z)


def _branch_derivs(params: HestonParams, branch: str, y):
    """u, u', u'' of the branch as functions of y, through the shift relations
    M' = (a/b) M(a+1, b+1), U' = -a U(a+1, b+1)."""
    a, b, mu = _cir_abm(params)
    z = mu * np.asarray(y, float)
    if branch == "M":
        u = kummer_m(a, b, z)
        du = mu * a / b * kummer_m(a + 1, b + 1, z)
        ddu = mu**2 * a * (a + 1) / (b * (b + 1)) * kummer_m(a + 2, b + 2, z)
    elif branch == "U":
        u = kummer_u(a, b, z)
        du = -mu * a * kummer_u(a + 1, b + 1, z)
        ddu = mu**2 * a * (a + 1) * kummer_u(a + 2, b + 2, z)
    else:
        raise ValueError("branch must be 'M' or 'U'")
    return u, du, ddu


def cir_trace(params: HestonParams, branch: str, y) -> np.ndarray:
    """1-D weighted Neumann trace y^beta u'(y) of a branch."""
    _, beta, _ = _cir_abm(params)
    y = np.asarray(y, float)
    return y**beta * _branch_derivs(params, branch, y)[1]


def cir_trace_limit(params: HestonParams) -> float:
    """lim_{y->0} y^beta d/dy U(a, beta, mu y) = -a Gamma(beta)/Gamma(a+1) mu^(1-beta)."""
    a, beta, mu = _cir_abm(params)
    return kummer_u_small_z_limit(a, beta) * mu ** (1 - beta)


@dataclass
class BoundaryReport:
    beta: float
    cutoffs: list
    norms: dict          # (branch, kind) -> list of truncated norms squared
    classes: dict        # (branch, kind) -> "finite" | "infinite"

    def rows(self) -> list[dict]:
        out = []
        for (branch, kind), vals in sorted(self.norms.items()):
            for d, v in zip(self.cutoffs, vals):
                out.append({"branch": branch, "norm": kind, "delta": d, "value": v,
                            "class": self.classes[(branch, kind)]})
        return out


def _truncated_norm2(params, branch, kind, delta, Z):
    _, beta, mu = _cir_abm(params)

    def F(t):
        y = math.exp(t)
        u, du, ddu = (float(v) for v in _branch_derivs(params, branch, y))
        m = y ** (beta - 1) * math.exp(-mu * y)
        if kind == "H1":
            val = y * du**2 + (1 + y) * u**2
        else:
            val = y**2 * ddu**2 + (1 + y) ** 2 * du**2 + (1 + y) * u**2
        return val * m * y

    return integrate.quad(F, math.log(delta), math.log(Z), limit=400, epsabs=0.0, epsrel=1e-10)[0]


def classify_boundary(params: HestonParams, exponents=range(2, 13)) -> BoundaryReport:
    """Decide H1/H2 membership of both branches near y = 0 from truncated
    norms on [10^-k, Z].  A norm is "finite" when the increments between
    successive decades shrink by a factor below 0.9, "infinite" otherwise
    (algebraic growth gives ratio 10^s > 1, logarithmic growth ratio 1)."""
    _, beta, mu = _cir_abm(params)
    Z = min(1.0, CONNECTION_Z_MAX / mu)
    cut = [10.0 ** (-k) * Z for k in exponents]
    norms, classes = {}, {}
    for branch in ("M", "U"):
        for kind in ("H1", "H2"):
            vals = [_truncated_norm2(params, branch, kind, d, Z) for d in cut]
            inc = np.diff(vals)
            ratio = inc[-1] / inc[-2] if inc[-2] > 0 else 0.0
            norms[(branch, kind)] = vals
            classes[(branch, kind)] = "finite" if ratio < 0.9 else "infinite"
    return BoundaryReport(beta, cut, norms, classes)


# --------------------------------------------------------------------------
# 1-D Galerkin cross-check


def solve_cir_1d(params: HestonParams, Y: float, n: int = 512, grading: float = 2.0):
    """Q1 Galerkin solve of B u = 0 on (0, Y) with u(Y) = 1 and the natural
    (weighted) condition at 0.  The weak form is

        (sigma^2/2) int y u' v' m + r int u v m,  m = y^(beta-1) e^(-mu y).

    Returns (nodes, u_h, exact) with exact = M(a, beta, mu y)/M(a, beta, mu Y).
    """
    p = validate(params)
    a, beta, mu = _cir_abm(p)
    y = y_nodes_for(Y, n, grading)
    pts, wts = _gauss_y(y, beta, mu, 8)
    M0, _, _ = line_matrices(y, pts, wts)
    _, _, S1 = line_matrices(y, pts, wts, lambda t: t)
    K = (0.5 * p.sigma**2 * S1 + p.r * M0).tocsr()
    u = np.zeros(n)
    u[-1] = 1.0
    free = np.arange(n - 1)
    rhs = -K[free][:, [n - 1]].toarray().ravel()
    u[free] = spla.spsolve(sp.csc_matrix(K[free][:, free]), rhs)
    exact = kummer_m(a, beta, mu * y) / kummer_m(a, beta, mu * Y)
    return y, u, exact
