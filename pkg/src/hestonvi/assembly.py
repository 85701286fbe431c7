"""Strong operator evaluation and Galerkin assembly of the Heston forms.

Bilinear (Q1) elements on the tensor grid.  Every term of

    a(u,v) = 1/2 int (u_x v_x + rho sig u_y v_x + rho sig u_x v_y + sig^2 u_y v_y) y w
             - gamma/2 int (u_x + rho sig u_y) v sign(x) y w
             - int (a1 y + b1) u_x v w + int r u v w

is a product of an x-factor and a y-factor, so the global matrices are sums
of Kronecker products of 1-D tridiagonal matrices built on the grid's
weighted quadrature tables.  With y-major node ordering a term with y-matrix
B and x-matrix A is kron(B, A).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import AssemblyError, CoefficientWarning, DomainError
from .fields import SmoothField
from .params import DerivedConstants, HestonParams, derive_constants
from .weighted_space import GridFunction, WeightedGrid


# --------------------------------------------------------------------------
# Pointwise operator


def operator_terms(u: SmoothField, x, y, params: HestonParams) -> dict:
    """The six coefficient groups of A u at (x, y)."""
    y = np.asarray(y, float)
    if np.any(y < 0):
        raise DomainError("operator evaluated below the half-plane")
    p = params
    f, fx, fy, fxx, fxy, fyy = u.jet(x, y)
    return {
        "diffusion": -(y / 2) * (fxx + 2 * p.rho * p.sigma * fxy + p.sigma**2 * fyy),
        "drift_x": -(p.r - p.q - y / 2) * fx,
        "drift_y": -p.kappa * (p.theta - y) * fy,
        "reaction": p.r * f,
    }


def apply_A(u: SmoothField, x, y, params: HestonParams):
    """Strong form A u."""
    return sum(operator_terms(u, x, y, params).values())


def apply_A_lambda(u: SmoothField, x, y, params: HestonParams, lam: float):
    return apply_A(u, x, y, params) + lam * (1 + np.asarray(y, float)) * u(x, y)


def apply_A_divergence(u: SmoothField, x, y, params: HestonParams):
    """A u written as -1/2 y^(1-beta) div(y^beta S Du) - b1 u_x + y/2 u_x + kappa y u_y + r u."""
    y = np.asarray(y, float)
    if np.any(y <= 0):
        raise DomainError("divergence form needs y > 0")
    p = params
    c = derive_constants(p)
    beta, b1 = c.beta, c.b1
    rs, s2 = p.rho * p.sigma, p.sigma**2
    f, fx, fy, fxx, fxy, fyy = u.jet(x, y)
    yb = y**beta
    dyb = beta * y ** (beta - 1.0)
    flux_x_x = yb * fxx + rs * yb * fxy                      # (y^b u_x + rs y^b u_y)_x
    flux_y_y = rs * (dyb * fx + yb * fxy) + s2 * (dyb * fy + yb * fyy)
    return (-0.5 * y ** (1.0 - beta) * (flux_x_x + flux_y_y)
            - b1 * fx + (y / 2) * fx + p.kappa * y * fy + p.r * f)


# --------------------------------------------------------------------------
# Assembly


@dataclass(frozen=True, eq=False)
class DiscreteForm:
    grid: WeightedGrid
    params: HestonParams
    consts: DerivedConstants
    matrix_a: sp.csr_matrix
    matrix_mass: sp.csr_matrix
    matrix_mass_1py: sp.csr_matrix
    matrix_energy: sp.csr_matrix
    upwind: bool = False

    @property
    def dirichlet_mask(self) -> np.ndarray:
        return self.grid.dirichlet_mask

    @cached_property
    def lumped(self) -> np.ndarray:
        return self.grid.node_weights

    @cached_property
    def lumped_1py(self) -> np.ndarray:
        """int phi_i (1 + y) w per node."""
        g = self.grid
        ly = np.asarray((g.line_y["M0"] + g.line_y["M1"]).sum(axis=1)).ravel()
        return np.outer(ly, g.x_lumped).ravel()

    def a_lambda(self, lam: float) -> sp.csr_matrix:
        return (self.matrix_a + lam * self.matrix_mass_1py).tocsr()

    def form(self, u, v, lam: float = 0.0) -> float:
        """a_h(u, v) (+ lam ((1+y)u, v)) for nodal vectors; v is the test function."""
        u = _vals(u)
        v = _vals(v)
        return float(v @ (self.a_lambda(lam) @ u))

    def norm_V(self, u) -> float:
        u = _vals(u)
        return float(np.sqrt(max(u @ (self.matrix_energy @ u), 0.0)))

    def norm_H(self, u) -> float:
        u = _vals(u)
        return float(np.sqrt(max(u @ (self.matrix_mass @ u), 0.0)))

    def norm_H1py(self, u) -> float:
        """|(1+y)^(1/2) u|_H."""
        u = _vals(u)
        return float(np.sqrt(max(u @ (self.matrix_mass_1py @ u), 0.0)))

    def export_coo(self, path, which: str = "a") -> None:
        M = {"a": self.matrix_a, "mass": self.matrix_mass,
             "mass_1py": self.matrix_mass_1py, "energy": self.matrix_energy}[which].tocoo()
        order = np.lexsort((M.col, M.row))
        with open(path, "w") as fh:
            fh.write("row,col,value\n")
            for i, j, v in zip(M.row[order], M.col[order], M.data[order]):
                fh.write(f"{int(i)},{int(j)},{float(v)!r}\n")


def _vals(u) -> np.ndarray:
    return u.values if isinstance(u, GridFunction) else np.asarray(u, float)


def _check_cells(grid: WeightedGrid) -> None:
    for name, nodes in (("x", grid.x_nodes), ("y", grid.y_nodes)):
        if np.any(np.diff(nodes) <= 0):
            raise AssemblyError(f"degenerate {name}-cell (non-increasing nodes)")
    if grid.y_nodes[0] != 0.0:
        raise AssemblyError("first y node must be 0")


def assemble(grid: WeightedGrid, params: HestonParams, consts: DerivedConstants | None = None,
             upwind: bool = False) -> DiscreteForm:
    """Assemble a, the weighted mass forms and the V-norm Gram matrix.

    upwind=True gives the monotone variant: transverse masses in the
    diffusion terms and all zeroth-order terms are lumped and the first-order
    terms use nodal upwind differences.  For rho = 0 the resulting matrix
    (after Dirichlet elimination) has nonpositive off-diagonals and a
    nonnegative row sum, so the discrete comparison principle holds exactly.
    The perturbation of a(.,.) is O(h).
    """
    _check_cells(grid)
    c = consts if consts is not None else derive_constants(params)
    if abs(c.b1) > 1e-12 * (1 + abs(params.r) + abs(params.q)):
        warnings.warn("assembling with b1 != 0; the Garding bound then relies on Dirichlet "
                      "data on the x-sides", CoefficientWarning, stacklevel=2)
    p = params
    rs, s2 = p.rho * p.sigma, p.sigma**2
    lx, ly = grid.line_x, grid.line_y
    Mx, Cx, Sx, Msx, Csx = lx["M"], lx["C"], lx["S"], lx["Ms"], lx["Cs"]
    M0, M1, C1, S1 = ly["M0"], ly["M1"], ly["C1"], ly["S1"]
    kron = lambda B, A: sp.kron(B, A, format="csr")  # noqa: E731

    cross = rs * (kron(C1, Cx.T) + kron(C1.T, Cx))
    mass = kron(M0, Mx)
    mass_1py = kron(M0 + M1, Mx)
    energy = kron(M1, Sx) + kron(S1, Mx) + mass_1py

    if not upwind:
        second = 0.5 * (kron(M1, Sx) + cross + s2 * kron(S1, Mx))
        first = (-0.5 * c.gamma * (kron(M1, Csx) + rs * kron(C1, Msx))
                 - c.a1 * kron(M1, Cx) - c.b1 * kron(M0, Cx))
        zeroth = p.r * mass
        A = (second + first + zeroth).tocsr()
        return DiscreteForm(grid, p, c, A, mass, mass_1py, energy.tocsr(), False)

    dM1 = sp.diags(np.asarray(M1.sum(axis=1)).ravel())
    dMx = sp.diags(np.asarray(Mx.sum(axis=1)).ravel())
    second = 0.5 * (kron(dM1, Sx) + cross + s2 * kron(S1, dMx))
    W = grid.node_weights
    X, Y = grid.points
    sg = np.sign(X)
    dx = 0.5 * c.gamma * sg * Y + c.a1 * Y + c.b1      # operator term -dx u_x
    dy = 0.5 * c.gamma * rs * sg * Y                    # operator term -dy u_y
    first = _upwind(grid, W * dx, W * dy)
    lumped_1py = np.asarray(mass_1py.sum(axis=1)).ravel()
    A = (second + first + p.r * sp.diags(W)).tocsr()
    return DiscreteForm(grid, p, c, A, mass.tocsr(), sp.diags(lumped_1py).tocsr(),
                        energy.tocsr(), True)


def _upwind(grid: WeightedGrid, cx: np.ndarray, cy: np.ndarray) -> sp.csr_matrix:
    """Rows of -cx D_x u - cy D_y u with one-sided differences taken downwind
    of the sign so the off-diagonals are nonpositive."""
    nx, ny = grid.nx, grid.ny
    n = nx * ny
    idx = np.arange(n).reshape(ny, nx)
    rows, cols, vals = [], [], []

    def add(coef, nodes, axis):
        k = idx.ravel()
        j, i = np.divmod(k, nx)
        pos = coef > 0
        # coef > 0: forward difference (u_next - u)/h; coef < 0: backward
        if axis == 0:
            nxt, prv = np.minimum(i + 1, nx - 1), np.maximum(i - 1, 0)
            h_f = np.where(i < nx - 1, nodes[nxt] - nodes[i], np.inf)
            h_b = np.where(i > 0, nodes[i] - nodes[prv], np.inf)
            nb_f, nb_b = idx[j, nxt], idx[j, prv]
        else:
            nxt, prv = np.minimum(j + 1, ny - 1), np.maximum(j - 1, 0)
            h_f = np.where(j < ny - 1, nodes[nxt] - nodes[j], np.inf)
            h_b = np.where(j > 0, nodes[j] - nodes[prv], np.inf)
            nb_f, nb_b = idx[nxt, i], idx[prv, i]
        h = np.where(pos, h_f, h_b)
        nb = np.where(pos, nb_f, nb_b)
        w = np.where(np.isfinite(h), np.abs(coef) / np.where(np.isfinite(h), h, 1.0), 0.0)
        rows.extend([k, k])
        cols.extend([k, nb])
        vals.extend([w, -w])

    add(cx, grid.x_nodes, 0)
    add(cy, grid.y_nodes, 1)
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(n, n))


# --------------------------------------------------------------------------
# Identity checks


def interpolate(grid: WeightedGrid, u) -> np.ndarray:
    X, Y = grid.points
    return np.broadcast_to(np.asarray(u(X, Y), float), X.shape).copy()


def check_integration_by_parts(u: SmoothField, v: SmoothField, grid: WeightedGrid,
                               params: HestonParams, form: DiscreteForm | None = None) -> float:
    """|(A u, v)_H - a_h(I u, I v)| for u, v vanishing near the Dirichlet edges."""
    form = form or assemble(grid, params)
    lhs = grid.quadrature(lambda X, Y: apply_A(u, X, Y, params) * v(X, Y))
    rhs = form.form(interpolate(grid, u), interpolate(grid, v))
    return abs(lhs - rhs)


def energy_identity_rhs(u: SmoothField, phi: SmoothField, grid: WeightedGrid,
                        params: HestonParams, consts: DerivedConstants) -> float:
    """a(phi u, phi u) - a(u, phi^2 u) written without derivatives of u:

        1/2 int (phi_x^2 + 2 rho sig phi_x phi_y + sig^2 phi_y^2) u^2 y w
        - gamma/2 int phi (phi_x + rho sig phi_y) sign(x) u^2 y w
        - int (a1 y + b1) phi phi_x u^2 w
    """
    rs, s2 = params.rho * params.sigma, params.sigma**2
    c = consts

    def F(X, Y):
        ph, px, py = phi(X, Y), phi.fx(X, Y), phi.fy(X, Y)
        u2 = u(X, Y) ** 2
        return (0.5 * (px**2 + 2 * rs * px * py + s2 * py**2) * u2 * Y
                - 0.5 * c.gamma * ph * (px + rs * py) * np.sign(X) * u2 * Y
                - (c.a1 * Y + c.b1) * ph * px * u2)

    return grid.quadrature(F)


@dataclass(frozen=True)
class CommutatorReport:
    defect: float
    lhs: float
    rhs: float
    estimate_value: float
    estimate_bound: float
    estimate_constant: float

    @property
    def estimate_holds(self) -> bool:
        return self.estimate_value <= self.estimate_bound * (1 + 1e-6) + 1e-14


def commutator_identity_check(u: SmoothField, phi: SmoothField, grid: WeightedGrid,
                              params: HestonParams, form: DiscreteForm | None = None
                              ) -> CommutatorReport:
    """Compare a_h(phi u, phi u) - a_h(u, phi^2 u) with the derivative-free
    right side, and test |([A,phi]u, phi u)| <= C |y^(1/2)(|D phi| + |D phi|^(1/2)) u|^2."""
    form = form or assemble(grid, params)
    c = form.consts
    pu = interpolate(grid, phi * u)
    p2u = interpolate(grid, phi * phi * u)
    uu = interpolate(grid, u)
    lhs = form.form(pu, pu) - form.form(uu, p2u)
    rhs = energy_identity_rhs(u, phi, grid, params, c)

    X, Y = grid.points
    sup_phi = float(np.max(np.abs(phi(X, Y)))) if X.size else 0.0
    rs = abs(params.rho * params.sigma)
    if abs(c.b1) > 1e-12:
        C = float("nan")
        bound = float("nan")
    else:
        C = 0.5 * (max(1.0, params.sigma**2) + rs) + sup_phi * (0.5 * c.gamma * (1 + rs) + abs(c.a1))
        bound = C * grid.quadrature(lambda X, Y: Y * (
            np.hypot(phi.fx(X, Y), phi.fy(X, Y)) + np.sqrt(np.hypot(phi.fx(X, Y), phi.fy(X, Y)))
        ) ** 2 * u(X, Y) ** 2)
    return CommutatorReport(abs(lhs - rhs), lhs, rhs, abs(rhs), bound, C)
