"""Weighted measure, tensor grids, quadrature and discrete norms.

The measure is w(x, y) dx dy with w = y^(beta-1) exp(-gamma|x| - mu y).  It
is separable, so every grid quantity is built from two 1-D quadrature
tables: a Gauss-Legendre rule per x-cell against exp(-gamma|x|), and in y a
Gauss-Jacobi rule on the first cell (which absorbs the y^(beta-1)
singularity exactly) and Gauss-Legendre on the rest.

Node ordering is y-major: index = j * nx + i.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy import integrate, special

from .errors import DomainError, PreconditionError
from .params import DerivedConstants, HestonParams

X_TAIL = 1e-10


def weight(x, y, consts: DerivedConstants):
    """y^(beta-1) exp(-gamma|x| - mu y) for y > 0."""
    y = np.asarray(y, float)
    if np.any(y <= 0):
        raise DomainError("weight is defined for y > 0 only")
    x = np.asarray(x, float)
    return y ** (consts.beta - 1.0) * np.exp(-consts.gamma * np.abs(x) - consts.mu * y)


def x_mass(lo: float, hi: float, gamma: float) -> float:
    """Closed form of int_lo^hi exp(-gamma|x|) dx (infinite limits allowed)."""
    def F(t):  # antiderivative, odd
        return math.copysign((1.0 - math.exp(-gamma * abs(t))) / gamma, t)
    return F(hi) - F(lo)


def y_mass(y_max: float, beta: float, mu: float, k: int = 0) -> float:
    """Closed form of int_0^y_max y^k y^(beta-1) exp(-mu y) dy."""
    s = beta + k
    full = math.gamma(s) / mu**s
    if math.isinf(y_max):
        return full
    return full * special.gammainc(s, mu * y_max)


@dataclass(frozen=True)
class Domain:
    """Axis-aligned rectangle (x_lo, x_hi) x (0, y_max).

    The bottom edge y = 0 is the degenerate boundary (no condition); the two
    x-sides and the top edge are Dirichlet.  Infinite x limits or y_max are
    allowed and are cut off by `truncated`.
    """
    x_lo: float
    x_hi: float
    y_max: float

    def __post_init__(self):
        if not self.x_lo < self.x_hi:
            raise ValueError("need x_lo < x_hi")
        if not self.y_max > 0:
            raise ValueError("need y_max > 0")

    @property
    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in (self.x_lo, self.x_hi, self.y_max))

    @property
    def edges(self) -> dict:
        return {
            "bottom": "degenerate",
            "left": "dirichlet" if math.isfinite(self.x_lo) else "artificial",
            "right": "dirichlet" if math.isfinite(self.x_hi) else "artificial",
            "top": "dirichlet" if math.isfinite(self.y_max) else "artificial",
        }

    def truncated(self, consts: DerivedConstants) -> tuple["Domain", float]:
        """Finite computational box and the fraction of weighted mass it drops."""
        xcut = math.log(1.0 / X_TAIL) / consts.gamma
        lo = self.x_lo if math.isfinite(self.x_lo) else -xcut
        hi = self.x_hi if math.isfinite(self.x_hi) else xcut
        ym = self.y_max if math.isfinite(self.y_max) else 20.0 / consts.mu * max(1.0, consts.beta)
        full = x_mass(self.x_lo, self.x_hi, consts.gamma) * y_mass(self.y_max, consts.beta, consts.mu)
        kept = x_mass(lo, hi, consts.gamma) * y_mass(ym, consts.beta, consts.mu)
        return Domain(lo, hi, ym), max(0.0, 1.0 - kept / full)

    def to_dict(self) -> dict:
        return {"x_lo": self.x_lo, "x_hi": self.x_hi, "y_max": self.y_max}


def x_nodes_for(domain: Domain, nx: int) -> np.ndarray:
    """Uniform-per-side x nodes with a grid line at x = 0 when 0 is inside."""
    lo, hi = domain.x_lo, domain.x_hi
    if lo < 0 < hi:
        nl = int(round(-lo / (hi - lo) * (nx - 1)))
        nl = min(max(nl, 1), nx - 2)
        return np.concatenate([np.linspace(lo, 0.0, nl + 1)[:-1], np.linspace(0.0, hi, nx - nl)])
    return np.linspace(lo, hi, nx)


def _gauss_x(nodes: np.ndarray, gamma: float, nq: int):
    t, wt = np.polynomial.legendre.leggauss(nq)
    a, b = nodes[:-1, None], nodes[1:, None]
    pts = 0.5 * (a + b) + 0.5 * (b - a) * t
    wts = 0.5 * (b - a) * wt * np.exp(-gamma * np.abs(pts))
    return pts, wts


def _gauss_y(nodes: np.ndarray, beta: float, mu: float, nq: int):
    t, wt = np.polynomial.legendre.leggauss(nq)
    a, b = nodes[:-1, None], nodes[1:, None]
    pts = 0.5 * (a + b) + 0.5 * (b - a) * t
    wts = 0.5 * (b - a) * wt * pts ** (beta - 1.0) * np.exp(-mu * pts)
    # First cell: Gauss-Jacobi for x^(beta-1) on [0, 1] reproduces the
    # moments h^(beta+k)/(beta+k) exactly for k < 2 nq.
    s, ws = special.roots_sh_jacobi(nq, beta, beta)
    h = nodes[1]
    pts[0] = h * s
    wts[0] = h**beta * ws * np.exp(-mu * h * s)
    return pts, wts


def line_matrices(nodes, pts, wts, factor=None):
    """Tridiagonal 1-D P1 matrices against a quadrature table.

    Returns (M, C, S) with M[i,j] = int phi_i phi_j, C[i,j] = int phi_i phi_j'
    and S[i,j] = int phi_i' phi_j', each multiplied by `factor(t)` if given.
    """
    n = len(nodes)
    h = np.diff(nodes)[:, None]
    wq = wts if factor is None else wts * factor(pts)
    left = (nodes[1:, None] - pts) / h
    right = (pts - nodes[:-1, None]) / h
    dl, dr = -1.0 / h, 1.0 / h
    idx = np.arange(n - 1)
    rows = np.concatenate([idx, idx, idx + 1, idx + 1])
    cols = np.concatenate([idx, idx + 1, idx, idx + 1])

    def build(fi_l, fi_r, fj_l, fj_r):
        vals = np.concatenate([
            (wq * fi_l * fj_l).sum(1), (wq * fi_l * fj_r).sum(1),
            (wq * fi_r * fj_l).sum(1), (wq * fi_r * fj_r).sum(1)])
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))

    ones = np.ones_like(pts)
    M = build(left, right, left, right)
    C = build(left, right, dl * ones, dr * ones)
    S = build(dl * ones, dr * ones, dl * ones, dr * ones)
    return M, C, S


@dataclass(frozen=True, eq=False)
class WeightedGrid:
    domain: Domain
    x_nodes: np.ndarray
    y_nodes: np.ndarray
    grading: float
    beta: float
    gamma: float
    mu: float
    nq: int = 8
    nqx: int = 4

    @property
    def nx(self) -> int:
        return len(self.x_nodes)

    @property
    def ny(self) -> int:
        return len(self.y_nodes)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, Y) arrays of shape (ny, nx)."""
        return np.meshgrid(self.x_nodes, self.y_nodes)

    @cached_property
    def points(self) -> tuple[np.ndarray, np.ndarray]:
        X, Y = self.mesh
        return X.ravel(), Y.ravel()

    @cached_property
    def x_rule(self):
        return _gauss_x(self.x_nodes, self.gamma, self.nqx)

    @cached_property
    def y_rule(self):
        return _gauss_y(self.y_nodes, self.beta, self.mu, self.nq)

    @cached_property
    def x_lumped(self) -> np.ndarray:
        """int phi_i exp(-gamma|x|) dx per x node."""
        return _lumped(self.x_nodes, *self.x_rule)

    @cached_property
    def y_lumped(self) -> np.ndarray:
        return _lumped(self.y_nodes, *self.y_rule)

    @cached_property
    def node_weights(self) -> np.ndarray:
        return np.outer(self.y_lumped, self.x_lumped).ravel()

    @cached_property
    def dirichlet_mask(self) -> np.ndarray:
        """True on x-sides and the top edge; the y = 0 row stays free."""
        mask = np.zeros((self.ny, self.nx), bool)
        mask[:, 0] = mask[:, -1] = True
        mask[-1, :] = True
        return mask.ravel()

    @cached_property
    def line_x(self) -> dict:
        pts, wts = self.x_rule
        M, C, S = line_matrices(self.x_nodes, pts, wts)
        Ms, Cs, _ = line_matrices(self.x_nodes, pts, wts, np.sign)
        return {"M": M, "C": C, "S": S, "Ms": Ms, "Cs": Cs}

    @cached_property
    def line_y(self) -> dict:
        pts, wts = self.y_rule
        M0, C0, S0 = line_matrices(self.y_nodes, pts, wts)
        M1, C1, S1 = line_matrices(self.y_nodes, pts, wts, lambda t: t)
        M2, _, _ = line_matrices(self.y_nodes, pts, wts, lambda t: t**2)
        return {"M0": M0, "C0": C0, "S0": S0, "M1": M1, "C1": C1, "S1": S1, "M2": M2}

    def quadrature(self, F: Callable) -> float:
        """int F(x, y) w dx dy by the tensor Gauss tables (F vectorized)."""
        xp, xw = self.x_rule
        yp, yw = self.y_rule
        X, Y = np.meshgrid(xp.ravel(), yp.ravel())
        W = np.outer(yw.ravel(), xw.ravel())
        return float(np.sum(F(X, Y) * W))

    def volume(self) -> float:
        return float(self.node_weights.sum())

    def exact_volume(self) -> float:
        return x_mass(self.domain.x_lo, self.domain.x_hi, self.gamma) * y_mass(
            self.domain.y_max, self.beta, self.mu)

    def nearest_row(self, y_level: float) -> int:
        return int(np.argmin(np.abs(self.y_nodes - y_level)))

    def to_json(self) -> str:
        return json.dumps({
            "domain": self.domain.to_dict(), "grading": self.grading,
            "beta": self.beta, "gamma": self.gamma, "mu": self.mu,
            "x_nodes": self.x_nodes.tolist(), "y_nodes": self.y_nodes.tolist(),
            "node_weights": self.node_weights.tolist(),
        }, sort_keys=True)

    def to_csv(self, path) -> None:
        X, Y = self.points
        _write_csv(path, X, Y, self.node_weights)


def _lumped(nodes, pts, wts) -> np.ndarray:
    h = np.diff(nodes)[:, None]
    left = ((nodes[1:, None] - pts) / h * wts).sum(1)
    right = ((pts - nodes[:-1, None]) / h * wts).sum(1)
    out = np.zeros(len(nodes))
    out[:-1] += left
    out[1:] += right
    return out


def y_nodes_for(y_max: float, ny: int, grading: float) -> np.ndarray:
    return y_max * (np.arange(ny) / (ny - 1)) ** grading


def build_grid(domain: Domain, nx: int, ny: int, grading: float, consts: DerivedConstants,
               nq: int = 8) -> WeightedGrid:
    """Tensor grid with y_j = y_max (j/(ny-1))^grading."""
    if nx < 3 or ny < 3:
        raise ValueError("need nx, ny >= 3")
    if not domain.is_finite:
        domain, _ = domain.truncated(consts)
    return WeightedGrid(domain, x_nodes_for(domain, nx), y_nodes_for(domain.y_max, ny, grading),
                        float(grading), consts.beta, consts.gamma, consts.mu, nq)


def _write_csv(path, X, Y, V) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "value"])
        for a, b, c in zip(X, Y, V):
            w.writerow([repr(float(a)), repr(float(b)), repr(float(c))])


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: WeightedGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, float).ravel()
        if v.size != self.grid.size:
            raise ValueError("value count does not match grid")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function values must be finite")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, grid: WeightedGrid, fn: Callable) -> "GridFunction":
        X, Y = grid.points
        return cls(grid, np.broadcast_to(np.asarray(fn(X, Y), float), X.shape))

    @classmethod
    def constant(cls, grid: WeightedGrid, c: float) -> "GridFunction":
        return cls(grid, np.full(grid.size, float(c)))

    def as_array(self) -> np.ndarray:
        return self.values.reshape(self.grid.ny, self.grid.nx)

    def __add__(self, other):
        o = other.values if isinstance(other, GridFunction) else other
        return GridFunction(self.grid, self.values + o)

    def __sub__(self, other):
        o = other.values if isinstance(other, GridFunction) else other
        return GridFunction(self.grid, self.values - o)

    def __mul__(self, c):
        return GridFunction(self.grid, self.values * c)

    __rmul__ = __mul__

    def to_csv(self, path) -> None:
        X, Y = self.grid.points
        _write_csv(path, X, Y, self.values)

    def to_json(self) -> str:
        X, Y = self.grid.points
        return json.dumps({"x": X.tolist(), "y": Y.tolist(), "value": self.values.tolist()})


def _derivs(u: GridFunction, second: bool = False):
    g = u.grid
    U = u.as_array()
    uy, ux = np.gradient(U, g.y_nodes, g.x_nodes, edge_order=2)
    if not second:
        return ux, uy
    uxy, uxx = np.gradient(ux, g.y_nodes, g.x_nodes, edge_order=2)
    uyy, _ = np.gradient(uy, g.y_nodes, g.x_nodes, edge_order=2)
    return ux, uy, uxx, uxy, uyy


def _nodal_integral(grid: WeightedGrid, F: np.ndarray) -> float:
    return float(np.sum(grid.node_weights * F.ravel()))


def norm_L2w(u: GridFunction) -> float:
    return math.sqrt(_nodal_integral(u.grid, u.as_array() ** 2))


def norm_H1w(u: GridFunction) -> float:
    ux, uy = _derivs(u)
    Y = u.grid.mesh[1]
    U = u.as_array()
    return math.sqrt(_nodal_integral(u.grid, Y * (ux**2 + uy**2) + (1 + Y) * U**2))


def norm_H2w(u: GridFunction) -> float:
    ux, uy, uxx, uxy, uyy = _derivs(u, second=True)
    Y = u.grid.mesh[1]
    U = u.as_array()
    F = (Y**2 * (uxx**2 + 2 * uxy**2 + uyy**2) + (1 + Y) ** 2 * (ux**2 + uy**2)
         + (1 + Y) * U**2)
    return math.sqrt(_nodal_integral(u.grid, F))


# --------------------------------------------------------------------------
# Weighted Neumann trace


def trace_neumann(u: GridFunction, params: HestonParams, y_level: float) -> float:
    """int |y^beta (rho u_x + sigma u_y)| exp(-gamma|x|) dx on the grid row
    nearest to y_level (which must not be the y = 0 row)."""
    g = u.grid
    j = g.nearest_row(y_level)
    if j == 0:
        raise PreconditionError("trace level must be a grid row with y > 0")
    ux, uy = _derivs(u)
    y = g.y_nodes[j]
    integrand = np.abs(y**g.beta * (params.rho * ux[j] + params.sigma * uy[j]))
    return float(np.sum(g.x_lumped * integrand))


def trace_levels(u: GridFunction, params: HestonParams, kmax: int = 12) -> list[tuple[float, float]]:
    """Trace values on the rows nearest y_max 2^-k, k = 1..kmax (distinct rows only)."""
    g = u.grid
    out, seen = [], set()
    for k in range(1, kmax + 1):
        j = g.nearest_row(g.domain.y_max * 2.0**-k)
        if j == 0 or j in seen:
            continue
        seen.add(j)
        out.append((float(g.y_nodes[j]), trace_neumann(u, params, g.y_nodes[j])))
    return out


def fit_loglog_slope(xs, ys) -> float:
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


# --------------------------------------------------------------------------
# Hardy inequality and the logarithmic cutoff


def _num_derivative(v: Callable, y: float) -> float:
    h = 1e-5 * max(1.0, abs(y))
    if y - 2 * h <= 0:
        h = y / 4 if y > 0 else 1e-8
    return (-v(y + 2 * h) + 8 * v(y + h) - 8 * v(y - h) + v(y - 2 * h)) / (12 * h)


def hardy_check(v: Callable, beta: float, p: float, Y: float = math.inf,
                dv: Callable | None = None, tol: float = 1e-6):
    """Both sides of int |v|^p y^(beta-p) <= (p/(beta-p+1))^p int |v'|^p y^beta.

    Returns (lhs, rhs, holds).  Needs v(0) = 0 when beta < p - 1 and v -> 0
    at infinity when beta > p - 1.
    """
    if abs(beta - (p - 1.0)) < 1e-14:
        raise PreconditionError("Hardy inequality needs beta != p - 1")
    d = dv if dv is not None else (lambda t: _num_derivative(v, t))
    const = (p / (beta - p + 1.0)) ** p
    cuts = [0.0, 1e-6, 1e-3, 0.1, 1.0, 4.0, 16.0, 64.0]
    cuts = [c for c in cuts if c < Y] + ([Y] if math.isfinite(Y) else [math.inf])
    kw = dict(limit=400, epsabs=1e-14, epsrel=1e-11)

    def integrate_piecewise(fn):
        total = 0.0
        for a, b in zip(cuts[:-1], cuts[1:]):
            total += integrate.quad(fn, a, b, **kw)[0]
        return total

    lhs = integrate_piecewise(lambda t: abs(float(v(t))) ** p * t ** (beta - p) if t > 0 else 0.0)
    rhs = const * integrate_piecewise(lambda t: abs(float(d(t))) ** p * t**beta)
    return lhs, rhs, bool(lhs <= rhs * (1.0 + tol) + 1e-300)


def _smooth_step(s):
    s = np.asarray(s, float)

    def h(t):
        return np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)

    return h(s) / (h(s) + h(1.0 - s))


def _smooth_step_prime(s):
    s = np.asarray(s, float)
    out = np.zeros_like(s)
    inside = (s > 0) & (s < 1)
    t = s[inside]
    a, b = np.exp(-1.0 / t), np.exp(-1.0 / (1.0 - t))
    da, db = a / t**2, -b / (1.0 - t) ** 2
    out[inside] = (da * (a + b) - a * (da + db)) / (a + b) ** 2
    return out


@dataclass(frozen=True)
class LogCutoff:
    """psi(y) = chi(log|y| - log eps), chi(t) = phi((log N + t)/(log N - log 2)).

    psi = 0 for |y| <= eps/N and psi = 1 for |y| >= eps/2.  profile "smooth"
    uses a C-infinity step phi; "linear" uses phi(s) = clip(s, 0, 1), the
    Lipschitz profile for which the (log N)^-2 energy law is sharp.
    """
    N: float
    eps: float
    profile: str = "smooth"

    @property
    def L(self) -> float:
        return math.log(self.N) - math.log(2.0)

    def _phi(self, s):
        return _smooth_step(s) if self.profile == "smooth" else np.clip(s, 0.0, 1.0)

    def _dphi(self, s):
        if self.profile == "smooth":
            return _smooth_step_prime(s)
        s = np.asarray(s, float)
        return np.where((s > 0) & (s < 1), 1.0, 0.0)

    def _s(self, y):
        y = np.abs(np.asarray(y, float))
        with np.errstate(divide="ignore"):
            t = np.log(y) - math.log(self.eps)
        return (math.log(self.N) + t) / self.L

    def __call__(self, y):
        return self._phi(self._s(y))

    def derivative(self, y):
        y = np.asarray(y, float)
        with np.errstate(divide="ignore", invalid="ignore"):
            d = self._dphi(self._s(y)) / (self.L * np.abs(y)) * np.sign(y)
        return np.where(y == 0, 0.0, d)

    @property
    def c(self) -> float:
        """sup|chi'| log N, the constant in |psi'(y)| <= c/(|y| log N)."""
        s = np.linspace(0.0, 1.0, 20001)
        return float(np.max(np.abs(self._dphi(s)))) * math.log(self.N) / self.L

    def energy(self, beta: float) -> float:
        """int_R |psi'(y)|^2 |y|^beta dy, via y = eps exp(-log N + L s)."""
        lnN, L, eps = math.log(self.N), self.L, self.eps

        def f(s):
            y = eps * math.exp(-lnN + L * s)
            return float(self._dphi(np.array([s]))[0]) ** 2 * y ** (beta - 1.0) / L

        pts = [0.5] if self.profile == "smooth" else None
        val = integrate.quad(f, 0.0, 1.0, limit=400, epsabs=0.0, epsrel=1e-11, points=pts)[0]
        return 2.0 * val

    def bound(self, beta: float) -> float:
        c, lnN = self.c, math.log(self.N)
        if beta > 1:
            return c**2 * 2.0 ** (2.0 - beta) / (beta - 1.0) / lnN**2 * self.eps ** (beta - 1.0)
        if beta == 1:
            return 2.0 * c**2 / lnN
        raise PreconditionError("energy bound stated for beta >= 1")


def log_cutoff(N: float, eps: float, profile: str = "smooth") -> LogCutoff:
    if not N > 4:
        raise PreconditionError("log cutoff needs N > 4")
    if not eps > 0:
        raise PreconditionError("log cutoff needs eps > 0")
    if profile not in ("smooth", "linear"):
        raise ValueError("profile must be 'smooth' or 'linear'")
    return LogCutoff(float(N), float(eps), profile)
