"""Discrete solves: coercive equation, penalized equation, coercive VI by
eps-continuation, the monotone outer iterations for the non-coercive
problems, a projected SOR oracle for the discrete LCP, and diagnostics.

Conventions.  K = (a_lambda)_h is the assembled form, the load vector of a
source f is M_h f with the consistent weighted mass, and the penalty uses
the lumped weights W (so that the eps -> 0 limit is exactly the LCP
min{K u - M_h f, u - psi} = 0 solved by PSOR).  Residuals are reported in
mass-scaled form, i.e. divided by W node by node, which puts them on the
scale of the strong residual A u - f.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import DiscreteForm
from .envelopes import EnvelopePair, check_admissible_envelopes
from .errors import (EnvelopeError, LinearSolveError, NonconvergenceError, PreconditionError)
from .params import HestonParams
from .weighted_space import GridFunction, norm_H2w, norm_H1w, trace_levels

DEFAULT_EPS = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5)


@dataclass(frozen=True)
class PenaltyConfig:
    eps_sequence: tuple = DEFAULT_EPS
    newton_tol: float = 1e-10
    newton_max_iter: int = 60
    lam: float | None = None          # None: lambda0 of the form
    linear_tol: float = 1e-10
    outer_tol: float = 1e-8
    max_outer: int = 500

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps_sequence)
        if not eps or any(e <= 0 for e in eps):
            raise ValueError("eps_sequence must be nonempty and positive")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("eps_sequence must be strictly decreasing")
        object.__setattr__(self, "eps_sequence", eps)

    def resolve_lambda(self, form: DiscreteForm) -> float:
        lam = form.consts.lambda0 if self.lam is None else float(self.lam)
        _check_lambda(form, lam)
        return lam

    def to_dict(self) -> dict:
        return {"eps_sequence": list(self.eps_sequence), "newton_tol": self.newton_tol,
                "newton_max_iter": self.newton_max_iter, "lambda": self.lam,
                "linear_tol": self.linear_tol, "outer_tol": self.outer_tol,
                "max_outer": self.max_outer}


@dataclass
class SolveReport:
    solution: GridFunction
    iterations: int
    linear_residual: float
    complementarity_residual: float
    penalty_norm: float
    envelope_violation: float
    trace_levels: list
    converged: bool = True
    extras: dict = field(default_factory=dict)

    def summary(self) -> dict:
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return None
            if isinstance(v, dict):
                return {str(k): clean(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [clean(x) for x in v]
            if isinstance(v, np.generic):
                return clean(v.item())
            return v
        out = {
            "iterations": self.iterations, "linear_residual": self.linear_residual,
            "complementarity_residual": self.complementarity_residual,
            "penalty_norm": self.penalty_norm, "envelope_violation": self.envelope_violation,
            "trace_levels": [list(t) for t in self.trace_levels], "converged": self.converged,
        }
        out.update({k: v for k, v in self.extras.items() if not k.startswith("_")})
        return clean(out)

    def to_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True, indent=2)


# --------------------------------------------------------------------------
# helpers


def _check_lambda(form: DiscreteForm, lam: float) -> None:
    lam0 = form.consts.lambda0
    if not lam >= lam0 * (1 - 1e-14):
        raise PreconditionError(f"lambda = {lam} below lambda0 = {lam0}")


def nodal(form: DiscreteForm, v) -> np.ndarray:
    """Nodal values of a GridFunction, scalar or callable f(x, y)."""
    if v is None:
        return np.zeros(form.grid.size)
    if isinstance(v, GridFunction):
        return v.values.copy()
    if callable(v):
        X, Y = form.grid.points
        return np.broadcast_to(np.asarray(v(X, Y), float), X.shape).copy()
    arr = np.asarray(v, float)
    if arr.ndim == 0:
        return np.full(form.grid.size, float(arr))
    if arr.size != form.grid.size:
        raise ValueError("nodal vector has the wrong size")
    return arr.ravel().copy()


def load_vector(form: DiscreteForm, f) -> np.ndarray:
    """M_h f with the consistent weighted mass."""
    return form.matrix_mass @ nodal(form, f)


@dataclass
class _System:
    K: sp.csr_matrix
    free: np.ndarray
    bnd: np.ndarray
    Kff: sp.csc_matrix
    Kfb: sp.csr_matrix
    W: np.ndarray


def _system(form: DiscreteForm, lam: float) -> _System:
    K = form.a_lambda(lam)
    mask = form.dirichlet_mask
    free, bnd = np.flatnonzero(~mask), np.flatnonzero(mask)
    Kf = K[free]
    return _System(K, free, bnd, Kf[:, free].tocsc(), Kf[:, bnd].tocsr(), form.lumped)


def _linear_solve(A: sp.spmatrix, rhs: np.ndarray, tol: float):
    """Sparse direct solve with a preconditioned GMRES fallback."""
    nb = float(np.linalg.norm(rhs))
    if nb == 0.0:
        return np.zeros_like(rhs), 0.0
    A = sp.csc_matrix(A)
    try:
        x = spla.splu(A).solve(rhs)
        if not np.all(np.isfinite(x)):
            raise RuntimeError("non-finite direct solve")
    except RuntimeError:
        try:
            ilu = spla.spilu(A, drop_tol=1e-6, fill_factor=20)
            pre = spla.LinearOperator(A.shape, ilu.solve)
        except RuntimeError:
            pre = None
        x, info = spla.gmres(A, rhs, rtol=tol, atol=0.0, restart=200, maxiter=50, M=pre)
        if info != 0:
            raise LinearSolveError(f"GMRES stagnated (info = {info})")
    res = float(np.linalg.norm(A @ x - rhs)) / nb
    if not res <= max(tol, 1e-10):
        raise LinearSolveError(f"linear residual {res:.3g} above tolerance {tol:.3g}")
    return x, res


def complementarity_residual(form: DiscreteForm, lam: float, u, f, psi) -> float:
    """max over free nodes of |min{(K u - M f)_i / W_i, u_i - psi_i}|."""
    u = nodal(form, u)
    Ku = form.a_lambda(lam) @ u - load_vector(form, f)
    free = ~form.dirichlet_mask
    r = np.minimum(Ku[free] / form.lumped[free], u[free] - nodal(form, psi)[free])
    return float(np.max(np.abs(r))) if r.size else 0.0


def penalty_vector(form: DiscreteForm, u, psi, eps: float) -> np.ndarray:
    """Nodal penalty -(1/eps) W (psi - u)^+ (lumped weighted mass)."""
    d = np.maximum(nodal(form, psi) - nodal(form, u), 0.0)
    return -form.lumped * d / eps


def penalty_norm(form: DiscreteForm, u, psi) -> float:
    d = np.maximum(nodal(form, psi) - nodal(form, u), 0.0)
    return float(np.sqrt(np.sum(form.lumped * d**2)))


def _envelope_violation(u: np.ndarray, form, pair: EnvelopePair | None, psi=None) -> float:
    if pair is None:
        return float("nan")
    lo = nodal(form, pair.m)
    if psi is not None:
        lo = np.maximum(lo, nodal(form, psi))
    hi = nodal(form, pair.M)
    return float(max(np.max(lo - u), np.max(u - hi), 0.0))


def _traces(form: DiscreteForm, u: np.ndarray) -> list:
    try:
        return trace_levels(GridFunction(form.grid, u), form.params)
    except Exception:  # noqa: BLE001 - diagnostics only
        return []


# --------------------------------------------------------------------------
# coercive equation


def _solve_linear_system(sysm: _System, rhs: np.ndarray, gv: np.ndarray, tol: float):
    u = np.empty_like(rhs)
    u[sysm.bnd] = gv[sysm.bnd]
    b = rhs[sysm.free] - sysm.Kfb @ gv[sysm.bnd]
    u[sysm.free], res = _linear_solve(sysm.Kff, b, tol)
    return u, res


def solve_coercive(form: DiscreteForm, lam: float | None, f, g, tol: float = 1e-10) -> SolveReport:
    """Solve (a_lambda)_h u = M_h f with u = g on the Dirichlet nodes."""
    lam = form.consts.lambda0 if lam is None else float(lam)
    _check_lambda(form, lam)
    sysm = _system(form, lam)
    u, res = _solve_linear_system(sysm, load_vector(form, f), nodal(form, g), tol)
    rep = _report(form, lam, u, f, None, 1, res)
    rep.extras["lambda"] = lam
    return rep


def _report(form, lam, u, f, psi, iters, res, pair=None, converged=True) -> SolveReport:
    psi_eff = psi if psi is not None else -np.inf
    if psi is None:
        comp = _equation_residual(form, lam, u, f)
        pen = 0.0
    else:
        comp = complementarity_residual(form, lam, u, f, psi)
        pen = penalty_norm(form, u, psi)
    return SolveReport(GridFunction(form.grid, u), iters, float(res), comp, pen,
                       _envelope_violation(u, form, pair, None if psi is None else psi_eff),
                       _traces(form, u), converged)


def _equation_residual(form, lam, u, f) -> float:
    r = form.a_lambda(lam) @ nodal(form, u) - load_vector(form, f)
    free = ~form.dirichlet_mask
    return float(np.max(np.abs(r[free] / form.lumped[free]))) if free.any() else 0.0


# --------------------------------------------------------------------------
# penalized equation


def _newton_penalty(sysm: _System, rhs: np.ndarray, psi: np.ndarray, gv: np.ndarray,
                    eps: float, u0: np.ndarray, cfg: PenaltyConfig):
    """Semismooth Newton for K u - (1/eps) W (psi - u)^+ = rhs on free nodes.

    Returns (u, iterations, last linear residual, scaled nonlinear residual).
    """
    fr = sysm.free
    W = sysm.W[fr]
    b = rhs[fr] - sysm.Kfb @ gv[sysm.bnd]
    pf = psi[fr]
    x = u0[fr].copy()
    Kff = sysm.Kff

    def F(v):
        return Kff @ v - b - W * np.maximum(pf - v, 0.0) / eps

    absK = abs(Kff)

    def scaled(v, Fv):
        """Component-wise backward error |F_i| / ((|K||v|)_i + |b_i| + (W_i/eps)(|psi_i| + |v_i|) chi_i)."""
        if not v.size:
            return 0.0
        act = pf - v > 0
        den = (absK @ np.abs(v) + np.abs(b)
               + np.where(act, W * (np.abs(pf) + np.abs(v)) / eps, 0.0))
        F = np.abs(Fv)
        ok = den > 0
        if np.any(F[~ok] > 0):
            return math.inf
        return float(np.max(F[ok] / den[ok])) if ok.any() else 0.0

    Fx = F(x)
    lin_res = 0.0
    prev_active = None
    for it in range(1, cfg.newton_max_iter + 1):
        active = pf - x > 0
        J = Kff + sp.diags(np.where(active, W / eps, 0.0))
        dx, lin_res = _linear_solve(J, -Fx, cfg.linear_tol)
        n0 = float(np.linalg.norm(Fx))
        t = 1.0
        xn = x + dx
        Fn = F(xn)
        # A step that changes the active set is taken in full (active-set
        # exploration, monotone for M-matrices); otherwise backtrack on |F|.
        if np.array_equal(pf - xn > 0, active):
            for _ in range(40):
                if np.linalg.norm(Fn) <= (1 - 1e-4 * t) * n0 or n0 == 0.0:
                    break
                t *= 0.5
                xn = x + t * dx
                Fn = F(xn)
        x, Fx = xn, Fn
        new_active = pf - x > 0
        r = scaled(x, Fx)
        stable = t == 1.0 and prev_active is not None and np.array_equal(new_active, active) \
            and np.array_equal(active, prev_active)
        prev_active = active
        if r <= cfg.newton_tol or stable:
            u = np.empty_like(rhs)
            u[fr] = x
            u[sysm.bnd] = gv[sysm.bnd]
            return u, it, lin_res, r
    u = np.empty_like(rhs)
    u[fr] = x
    u[sysm.bnd] = gv[sysm.bnd]
    raise _Nonconv(u, cfg.newton_max_iter, lin_res, scaled(x, Fx))


class _Nonconv(Exception):
    def __init__(self, u, it, lin_res, res):
        super().__init__("newton")
        self.u, self.it, self.lin_res, self.res = u, it, lin_res, res


def _check_obstacle_bc(form: DiscreteForm, psi: np.ndarray, gv: np.ndarray) -> None:
    bd = form.dirichlet_mask
    bad = psi[bd] - gv[bd]
    if bad.size and np.max(bad) > 1e-12 * (1 + np.max(np.abs(gv[bd]))):
        raise PreconditionError("obstacle exceeds the Dirichlet data on the boundary")


def _penalized(form, cfg, lam, rhs, psi, gv, eps, u0, f_for_report):
    sysm = _system(form, lam)
    try:
        u, it, lres, r = _newton_penalty(sysm, rhs, psi, gv, eps, u0, cfg)
    except _Nonconv as e:
        rep = _report(form, lam, e.u, f_for_report, psi, e.it, e.lin_res, converged=False)
        rep.extras.update({"eps": eps, "newton_residual": e.res})
        raise NonconvergenceError(
            f"semismooth Newton did not converge at eps = {eps:g} (residual {e.res:.3g})",
            rep) from None
    return u, it, lres, r


def solve_penalized(form: DiscreteForm, config: PenaltyConfig, f, psi, g, eps: float,
                    u0=None) -> SolveReport:
    """Solve (a_lambda)_h u - (1/eps) W (psi - u)^+ = M_h f, u = g on the Dirichlet nodes."""
    lam = config.resolve_lambda(form)
    pv, gv = nodal(form, psi), nodal(form, g)
    _check_obstacle_bc(form, pv, gv)
    start = np.maximum(pv, gv) if u0 is None else nodal(form, u0)
    start = np.where(np.isfinite(start), start, 0.0)
    u, it, lres, r = _penalized(form, config, lam, load_vector(form, f), pv, gv, eps, start, f)
    rep = _report(form, lam, u, f, pv, it, lres)
    rep.extras.update({"eps": eps, "newton_residual": r, "lambda": lam})
    return rep


def solve_vi_coercive(form: DiscreteForm, config: PenaltyConfig, f, psi, g,
                      rhs: np.ndarray | None = None, u0=None, pair: EnvelopePair | None = None
                      ) -> SolveReport:
    """Penalized solves over config.eps_sequence with warm starts.

    rhs overrides the load vector M_h f (used by the outer iterations);
    f is then only used for the reported residuals.
    """
    lam = config.resolve_lambda(form)
    pv, gv = nodal(form, psi), nodal(form, g)
    _check_obstacle_bc(form, pv, gv)
    b = load_vector(form, f) if rhs is None else rhs
    u = np.maximum(np.where(np.isfinite(pv), pv, 0.0), 0.0) if u0 is None else nodal(form, u0)
    u = np.where(form.dirichlet_mask, gv, u)
    history, iterates = [], []
    total, lres = 0, 0.0
    prev = None
    for eps in config.eps_sequence:
        try:
            u, it, lres, r = _penalized(form, config, lam, b, pv, gv, eps, u, f)
        except NonconvergenceError as e:
            e.report.extras["history"] = history
            raise
        total += it
        inc = form.norm_V(u - prev) if prev is not None else float("nan")
        history.append({"eps": eps, "newton_iterations": it, "newton_residual": r,
                        "penalty_norm": penalty_norm(form, u, pv), "v_increment": inc})
        iterates.append(u.copy())
        prev = u.copy()
    rep = _report(form, lam, u, f, pv, total, lres, pair)
    if rhs is not None:
        rep.complementarity_residual = _comp_rhs(form, lam, u, b, pv)
    rep.extras.update({"history": history, "lambda": lam, "_iterates": iterates})
    return rep


def _comp_rhs(form, lam, u, b, pv) -> float:
    Ku = form.a_lambda(lam) @ u - b
    free = ~form.dirichlet_mask
    r = np.minimum(Ku[free] / form.lumped[free], u[free] - pv[free])
    return float(np.max(np.abs(r))) if r.size else 0.0


# --------------------------------------------------------------------------
# non-coercive problems


def solve_noncoercive_equation(form: DiscreteForm, f, g, lam: float | None = None,
                               tol: float = 1e-8, max_outer: int = 2000, u0=None,
                               pair: EnvelopePair | None = None) -> SolveReport:
    """Increasing iteration (a_lambda)_h u_n = M_h f + lambda M_(1+y) u_(n-1), u_0 = 0.

    Stops when |u_n - u_(n-1)|_H <= tol (1 + |u_n|_H).  The ledger records
    min over nodes of u_n - u_(n-1) per step.
    """
    p = form.params
    if not p.r > 0:
        raise PreconditionError("the non-coercive iteration needs r > 0")
    lam = form.consts.lambda0 if lam is None else float(lam)
    _check_lambda(form, lam)
    sysm = _system(form, lam)
    lu = spla.splu(sysm.Kff)
    gv = nodal(form, g)
    Mf = load_vector(form, f)
    u = np.zeros(form.grid.size) if u0 is None else nodal(form, u0)
    ledger = []
    shift = gv[sysm.bnd]
    for n in range(1, max_outer + 1):
        rhs = Mf + lam * (form.matrix_mass_1py @ u)
        un = np.empty_like(u)
        un[sysm.bnd] = shift
        b = rhs[sysm.free] - sysm.Kfb @ shift
        un[sysm.free] = lu.solve(b)
        lres = float(np.linalg.norm(sysm.Kff @ un[sysm.free] - b) / max(np.linalg.norm(b), 1e-300))
        d = un - u
        ledger.append(float(np.min(d)))
        u = un
        if form.norm_H(d) <= tol * (1 + form.norm_H(u)):
            rep = _report(form, 0.0, u, f, None, n, lres, pair)
            rep.extras.update({"ledger_min_increment": ledger, "lambda": lam,
                               "monotonicity_violation": max(0.0, -min(ledger[1:] or [0.0]))})
            return rep
    rep = _report(form, 0.0, u, f, None, max_outer, lres, pair, converged=False)
    rep.extras["ledger_min_increment"] = ledger
    raise NonconvergenceError(f"outer iteration did not converge in {max_outer} steps", rep)


def solve_vi_noncoercive(form: DiscreteForm, config: PenaltyConfig, f, psi, g,
                         pair: EnvelopePair, check_tol: float = 1e-10) -> SolveReport:
    """Decreasing iteration from u_0 = M: each step a coercive VI with load
    M_h f + lambda M_(1+y) u_(n-1).  u_0 only enters through that load, so
    its boundary values are irrelevant.  The first step runs the full
    eps-continuation; later steps warm-start at the final eps."""
    p = form.params
    if not p.r > 0:
        raise PreconditionError("the non-coercive iteration needs r > 0")
    adm = check_admissible_envelopes(pair, f, g, psi, form.grid, p, tol=check_tol)
    if not adm.passed:
        bad = {k: v for k, v in adm.violations.items() if v > check_tol}
        raise EnvelopeError(f"envelope admissibility fails: {bad}")
    lam = config.resolve_lambda(form)
    pv, gv = nodal(form, psi), nodal(form, g)
    Mf = load_vector(form, f)
    u = nodal(form, pair.M)
    last = PenaltyConfig(eps_sequence=(config.eps_sequence[-1],), newton_tol=config.newton_tol,
                         newton_max_iter=config.newton_max_iter, lam=lam,
                         linear_tol=config.linear_tol)
    ledger, total = [], 0
    for n in range(1, config.max_outer + 1):
        rhs = Mf + lam * (form.matrix_mass_1py @ u)
        cfg = config if n == 1 else last
        inner = solve_vi_coercive(form, cfg, f, pv, gv, rhs=rhs, u0=u if n > 1 else None)
        un = inner.solution.values
        total += inner.iterations
        d = un - u
        ledger.append(float(np.max(d)))
        u = un
        if form.norm_H(d) <= config.outer_tol * (1 + form.norm_H(u)):
            rep = _report(form, 0.0, u, f, pv, total, inner.linear_residual, pair)
            rep.extras.update({
                "outer_iterations": n, "ledger_max_increment": ledger, "lambda": lam,
                "monotonicity_violation": max(0.0, max(ledger)),
                "admissibility": adm.violations,
            })
            return rep
    rep = _report(form, 0.0, u, f, pv, total, 0.0, pair, converged=False)
    rep.extras["ledger_max_increment"] = ledger
    raise NonconvergenceError(f"outer iteration did not converge in {config.max_outer} steps", rep)


# --------------------------------------------------------------------------
# PSOR oracle


@numba.njit(cache=False)
def _psor_sweeps(indptr, indices, data, diag, b, lo, u, omega, nsweep):
    n = u.size
    for _ in range(nsweep):
        for i in range(n):
            acc = b[i]
            for k in range(indptr[i], indptr[i + 1]):
                acc -= data[k] * u[indices[k]]
            v = u[i] + omega * acc / diag[i]
            u[i] = v if v > lo[i] else lo[i]


def lcp_psor(form: DiscreteForm, lam: float | None, f, psi, g, omega: float = 1.2,
             tol: float = 1e-12, max_sweeps: int = 2_000_000, rhs: np.ndarray | None = None
             ) -> GridFunction:
    """Projected SOR on min{(a_lambda)_h u - M_h f, u - psi} = 0, u = g on the
    Dirichlet nodes.  Stops when the mass-scaled projected residual is below
    tol (1 + max |M_h f / W|).

    Over-relaxation can cycle when the matrix is not an M-matrix (rho != 0);
    when a batch of sweeps fails to reduce the residual, omega is pulled
    back to 1 and then shrunk geometrically.
    """
    if not 0 < omega < 2:
        raise ValueError("omega must lie in (0, 2)")
    lam = form.consts.lambda0 if lam is None else float(lam)
    _check_lambda(form, lam)
    sysm = _system(form, lam)
    pv, gv = nodal(form, psi), nodal(form, g)
    _check_obstacle_bc(form, pv, gv)
    fr = sysm.free
    b = (load_vector(form, f) if rhs is None else rhs)[fr] - sysm.Kfb @ gv[sysm.bnd]
    A = sysm.Kff.tocsr()
    A.sort_indices()
    diag = A.diagonal()
    if np.any(diag <= 0):
        raise LinearSolveError("PSOR needs a positive diagonal")
    lo = pv[fr].copy()
    W = sysm.W[fr]
    x = np.maximum(lo, 0.0)
    x = np.where(np.isfinite(x), x, 0.0)
    scale = 1.0 + float(np.max(np.abs(b / W))) if b.size else 1.0

    def resid(v):
        return float(np.max(np.abs(np.minimum((A @ v - b) / W, v - lo)))) if v.size else 0.0

    done, batch, prev = 0, 20, resid(x)
    while done < max_sweeps:
        _psor_sweeps(A.indptr, A.indices, A.data, diag, b, lo, x, omega, batch)
        done += batch
        r = resid(x)
        if r <= tol * scale:
            u = np.empty(form.grid.size)
            u[fr] = x
            u[sysm.bnd] = gv[sysm.bnd]
            return GridFunction(form.grid, u)
        if r >= 0.999 * prev and batch >= 500:
            omega = 1.0 if omega > 1.0 else 0.8 * omega
            batch = 20
        else:
            batch = min(2 * batch, 2000)
        prev = r
    raise NonconvergenceError(f"PSOR did not converge in {max_sweeps} sweeps")


# --------------------------------------------------------------------------
# comparison and diagnostics


def comparison_suite(form: DiscreteForm, lam: float | None, cases: Sequence, g=0.0,
                     config: PenaltyConfig | None = None) -> dict:
    """Solve each ordered pair and report min over nodes of u2 - u1.

    A case is (f1, f2) for the equation or (f1, psi1, f2, psi2) for the VI.
    """
    cfg = config or PenaltyConfig(lam=lam)
    lam_ = cfg.resolve_lambda(form) if lam is None else float(lam)
    worst = []
    for case in cases:
        if len(case) == 2:
            u1 = solve_coercive(form, lam_, case[0], g).solution.values
            u2 = solve_coercive(form, lam_, case[1], g).solution.values
        else:
            f1, p1, f2, p2 = case
            u1 = solve_vi_coercive(form, cfg, f1, p1, g).solution.values
            u2 = solve_vi_coercive(form, cfg, f2, p2, g).solution.values
        worst.append(float(np.min(u2 - u1)))
    return {"worst_per_case": worst, "worst": min(worst) if worst else 0.0,
            "upwind": form.upwind, "h": float(max(np.max(np.diff(form.grid.x_nodes)),
                                                  np.max(np.diff(form.grid.y_nodes))))}


def diagnostics(u, form: DiscreteForm, f, psi, params: HestonParams, lam: float = 0.0,
                pair: EnvelopePair | None = None) -> dict:
    """Complementarity residual, envelope violation, penalty norm, trace
    levels and the raw weighted-norm quantities of the H2 a priori estimate."""
    uv = nodal(form, u)
    gf = GridFunction(form.grid, uv)
    pv = nodal(form, psi) if psi is not None else None
    X, Y = form.grid.points
    fv = nodal(form, f)
    W = form.lumped
    out = {
        "complementarity_residual": (complementarity_residual(form, lam, uv, f, pv)
                                     if pv is not None else _equation_residual(form, lam, uv, f)),
        "penalty_norm": penalty_norm(form, uv, pv) if pv is not None else 0.0,
        "envelope_violation": _envelope_violation(uv, form, pair, pv),
        "trace_levels": trace_levels(gf, params),
        "norm_H2w_u": norm_H2w(gf),
        "norm_H1w_u": norm_H1w(gf),
        "norm_H_1py_f": float(np.sqrt(np.sum(W * ((1 + Y) * fv) ** 2))),
    }
    if pv is not None:
        out["norm_H_1py_psi"] = float(np.sqrt(np.sum(W * ((1 + Y) * pv) ** 2)))
        out["active_nodes"] = int(np.sum(np.abs(uv - pv) <= 1e-10 * (1 + np.abs(pv))))
    return out


def penalty_rate_table(form: DiscreteForm, config: PenaltyConfig, f, psi, g,
                       oracle: GridFunction | None = None) -> list[dict]:
    """(eps, |(psi - u_eps)^+|_H, |u_eps - u_oracle|_V) over the eps sequence."""
    lam = config.resolve_lambda(form)
    if oracle is None:
        oracle = lcp_psor(form, lam, f, psi, g)
    rep = solve_vi_coercive(form, config, f, psi, g)
    rows = []
    for h, u in zip(rep.extras["history"], rep.extras["_iterates"]):
        rows.append({"eps": h["eps"], "penalty_norm": h["penalty_norm"],
                     "v_distance": form.norm_V(u - oracle.values)})
    return rows

