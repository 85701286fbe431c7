"""Command-line front end.

    hestonvi check-constants CONFIG
    hestonvi envelopes CONFIG
    hestonvi solve CONFIG
    hestonvi sweep-eps CONFIG
    hestonvi refine-study CONFIG
    hestonvi cir CONFIG
    hestonvi suite [--only 1,2,...]

Every subcommand takes --out DIR, --tol and --seed.  Exit codes: 0 ok,
1 acceptance failure (suite), 2 nonconvergence, 64 usage, 65 config.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import warnings

import numpy as np

from .assembly import assemble
from .cir import classify_boundary, cir_homogeneous, cir_trace, cir_trace_limit, kummer_m
from .config import RunConfig, load_config
from .envelopes import check_admissible_envelopes
from .errors import CoefficientError, ConfigError, EnvelopeError, HestonError, \
    NonconvergenceError, NormalizationError, PreconditionError, SideConditionError
from .params import normalize_b1
from .problems import four_term, four_term_image
from .solvers import PenaltyConfig, lcp_psor, penalty_rate_table, solve_coercive, \
    solve_noncoercive_equation, solve_vi_coercive, solve_vi_noncoercive
from .weighted_space import GridFunction, build_grid, fit_loglog_slope, norm_L2w

EXIT_OK, EXIT_FAIL, EXIT_NONCONV, EXIT_USAGE, EXIT_CONFIG = 0, 1, 2, 64, 65


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _clean(v):
    if isinstance(v, float):
        return v if math.isfinite(v) else None
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.generic):
        return _clean(v.item())
    return v


def _dump(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2)


def _write(out: str, name: str, text: str) -> str:
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, name)
    with open(path, "w") as fh:
        fh.write(text if text.endswith("\n") else text + "\n")
    return path


def _write_csv(out: str, name: str, header, rows) -> str:
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, name)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return path


def _form(cfg: RunConfig):
    c = cfg.consts
    grid = build_grid(cfg.domain, cfg.nx, cfg.ny, cfg.grading, c)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return assemble(grid, cfg.params, c, upwind=cfg.upwind)


def _penalty(cfg: RunConfig, tol: float | None) -> PenaltyConfig:
    p = cfg.penalty
    if tol is None:
        return p
    return PenaltyConfig(p.eps_sequence, tol, p.newton_max_iter, p.lam, p.linear_tol,
                         p.outer_tol, p.max_outer)


# --------------------------------------------------------------------------
# subcommands


def cmd_check_constants(cfg: RunConfig, args) -> int:
    c = cfg.consts
    report = {"params": cfg.params.to_dict(), "constants": c.to_dict()}
    try:
        ch = normalize_b1(cfg.params)
        report["coordinate_change"] = {"status": "identity" if ch.is_identity else "normalized",
                                       **ch.to_dict()}
    except NormalizationError as e:
        block = {"status": "failed", "reason": str(e)}
        if e.change is not None:
            block.update(e.change.to_dict())
        report["coordinate_change"] = block
    text = _dump(report)
    print(text)
    _write(args.out, "constants.json", text)
    return EXIT_OK


def cmd_envelopes(cfg: RunConfig, args) -> int:
    pair = cfg.pair()
    if pair is None:
        raise ConfigError("envelopes needs an 'envelopes' block")
    report = {"coefficients": pair.coeffs.to_dict()}
    if cfg.data:
        form = _form(cfg)
        adm = check_admissible_envelopes(pair, cfg.data_field("f"), cfg.data_field("g"),
                                         cfg.data_field("psi", -np.inf), form.grid, cfg.params)
        report["admissibility"] = json.loads(adm.to_json())
    text = _dump(report)
    print(text)
    _write(args.out, "envelopes.json", text)
    return EXIT_OK


def _solve(cfg: RunConfig, form, tol):
    f, g = cfg.data_field("f"), cfg.data_field("g")
    pen = _penalty(cfg, tol)
    if cfg.kind == "equation":
        if cfg.method == "coercive":
            return solve_coercive(form, cfg.lam, f, g, tol=tol or 1e-10)
        return solve_noncoercive_equation(form, f, g, cfg.lam, tol=cfg.penalty.outer_tol,
                                          max_outer=cfg.penalty.max_outer, pair=cfg.pair())
    psi = cfg.data_field("psi")
    if cfg.method == "coercive":
        return solve_vi_coercive(form, pen, f, psi, g, pair=cfg.pair())
    pair = cfg.pair()
    if pair is None:
        raise ConfigError("the non-coercive VI needs an 'envelopes' block")
    return solve_vi_noncoercive(form, pen, f, psi, g, pair)


def _emit_report(rep, form, cfg: RunConfig, out: str) -> dict:
    summary = rep.summary()
    exact = cfg.data_field("exact", None)
    if exact is not None:
        e = rep.solution.values - GridFunction.from_callable(form.grid, exact).values
        summary["error_L2w"] = form.norm_H(e)
        summary["error_V"] = form.norm_V(e)
        summary["error_max"] = float(np.max(np.abs(e)))
    rep.solution.to_csv(os.path.join(out, "solution.csv"))
    _write_csv(out, "traces.csv", ["y", "trace"], rep.trace_levels)
    _write(out, "report.json", _dump(summary))
    return summary


def cmd_solve(cfg: RunConfig, args) -> int:
    form = _form(cfg)
    os.makedirs(args.out, exist_ok=True)
    try:
        rep = _solve(cfg, form, args.tol)
    except NonconvergenceError as e:
        if e.report is not None:
            summary = _emit_report(e.report, form, cfg, args.out)
            print(_dump(summary))
        print(f"nonconvergence: {e}", file=sys.stderr)
        return EXIT_NONCONV
    summary = _emit_report(rep, form, cfg, args.out)
    print(_dump(summary))
    return EXIT_OK


LINEAR_RATE, SQRT_RATE = 0.9, 0.45


def cmd_sweep_eps(cfg: RunConfig, args) -> int:
    if cfg.kind != "vi":
        raise ConfigError("sweep-eps needs problem.kind = 'vi'")
    eps = cfg.penalty.eps_sequence
    if len(eps) < 3:
        raise ConfigError("sweep-eps needs at least 3 eps values for a slope fit")
    if len(eps) == 3:
        warnings.warn("three eps points leave one degree of freedom in the slope fit",
                      UserWarning, stacklevel=1)
    form = _form(cfg)
    f, g, psi = cfg.data_field("f"), cfg.data_field("g"), cfg.data_field("psi")
    pen = _penalty(cfg, args.tol)
    try:
        oracle = lcp_psor(form, pen.lam, f, psi, g)
        rows = penalty_rate_table(form, pen, f, psi, g, oracle)
    except NonconvergenceError as e:
        print(f"nonconvergence: {e}", file=sys.stderr)
        return EXIT_NONCONV
    _write_csv(args.out, "rates.csv", ["eps", "penalty_norm", "v_distance"],
               [(r["eps"], r["penalty_norm"], r["v_distance"]) for r in rows])
    e = [r["eps"] for r in rows]
    floor = 1e-13 * (1 + form.norm_V(oracle.values))
    out = {"rows": rows}
    for key, thr in (("penalty_norm", LINEAR_RATE), ("v_distance", SQRT_RATE)):
        vals = [r[key] for r in rows]
        if max(vals) <= floor:
            # inactive obstacle: nothing to fit, the bound holds trivially
            out[key] = {"slope": None, "threshold": thr, "passed": True, "trivial": True}
        else:
            s = fit_loglog_slope(e, np.maximum(vals, floor))
            out[key] = {"slope": s, "threshold": thr, "passed": bool(s >= thr)}
    text = _dump(out)
    print(text)
    _write(args.out, "rates.json", text)
    return EXIT_OK


def _manufactured(cfg: RunConfig, lam: float):
    sol = cfg.refine.get("solution", {"kind": "exponential", "d0": 2.0, "d2": 1.0, "d3": 1.0,
                                      "ell": 0.1, "d4": 1.0, "k": 0.2})
    p = cfg.params
    if sol == "cir":
        Y = cfg.domain.y_max
        a, beta, mu = p.r / p.kappa, cfg.consts.beta, cfg.consts.mu
        norm = kummer_m(a, beta, mu * Y)

        def u(x, y):
            y = np.asarray(y, float)
            return kummer_m(a, beta, mu * y) / norm + 0.0 * np.asarray(x, float)

        def f(x, y):
            return lam * (1 + np.asarray(y, float)) * u(x, y)
        return "cir", u, f
    if not isinstance(sol, dict) or sol.get("kind") not in ("constant", "affine", "exponential"):
        raise ConfigError("refine.solution must be 'cir' or a constant/affine/exponential builtin")
    args = {k: float(v) for k, v in sol.items() if k != "kind"}
    if sol["kind"] == "constant":
        args = {"d0": args.get("value", 0.0)}
    bad = set(args) - {"d0", "d2", "d3", "ell", "d4", "k"}
    if bad:
        raise ConfigError(f"refine.solution does not take {sorted(bad)}")
    return sol["kind"], four_term(**args), four_term_image(p, lam=lam, **args)


def cmd_refine_study(cfg: RunConfig, args) -> int:
    sizes = [int(n) for n in cfg.refine.get("sizes", [17, 33, 65])]
    if len(sizes) < 2 or any(n < 3 for n in sizes) or sorted(set(sizes)) != sizes:
        raise ConfigError("refine.sizes must be increasing grid sizes >= 3 (at least two)")
    c = cfg.consts
    lam = c.lambda0 if cfg.lam is None else cfg.lam
    kind, u, f = _manufactured(cfg, lam)
    rows, prev = [], None
    for n in sizes:
        grid = build_grid(cfg.domain, n, n, cfg.grading, c)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            form = assemble(grid, cfg.params, c, upwind=cfg.upwind)
        us = GridFunction.from_callable(grid, u)
        uh = solve_coercive(form, lam, f, us, tol=args.tol or 1e-10).solution
        err = form.norm_H(uh.values - us.values)
        h = 1.0 / (n - 1)
        scale = 1e-10 * (1 + norm_L2w(us))
        if prev is None:
            order = ""
        elif err <= scale and prev[1] <= scale:
            order = "exact"
        else:
            order = math.log(prev[1] / err) / math.log(prev[0] / h)
        row = [n, h, err, order]
        if kind == "cir":
            row.append(float(np.max(np.abs(uh.values - us.values))))
        rows.append(row)
        prev = (h, err)
    header = ["n", "h", "l2w_error", "order"] + (["cir_max_gap"] if kind == "cir" else [])
    _write_csv(args.out, "refine.csv", header, rows)
    orders = [r[3] for r in rows[1:] if isinstance(r[3], float)]
    summary = {"solution": kind, "rows": [dict(zip(header, r)) for r in rows],
               "min_order": min(orders) if orders else None,
               "order_at_least_1.5": all(o >= 1.5 for o in orders)}
    text = _dump(summary)
    print(text)
    _write(args.out, "refine.json", text)
    return EXIT_OK


def cmd_cir(cfg: RunConfig, args) -> int:
    p = cfg.params
    ys = np.asarray(sorted(cfg.cir_y), float)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        mb, ub = cir_homogeneous(p, ys)
        tm, tu = cir_trace(p, "M", ys), cir_trace(p, "U", ys)
    _write_csv(args.out, "cir_branches.csv", ["y", "M", "U", "trace_M", "trace_U"],
               zip(ys, np.atleast_1d(mb), np.atleast_1d(ub), tm, tu))
    rep = classify_boundary(p)
    rows = rep.rows()
    _write_csv(args.out, "cir_classes.csv", ["branch", "norm", "delta", "value", "class"],
               [(r["branch"], r["norm"], r["delta"], r["value"], r["class"]) for r in rows])
    c = cfg.consts
    summary = {"a": p.r / p.kappa, "beta": c.beta, "mu": c.mu,
               "U_trace_limit": cir_trace_limit(p) if 0 < c.beta < 1 else None,
               "classes": {f"{b} {k}": v for (b, k), v in sorted(rep.classes.items())}}
    text = _dump(summary)
    print(text)
    _write(args.out, "cir.json", text)
    return EXIT_OK


def cmd_suite(args) -> int:
    from . import verification as V

    if args.only:
        try:
            nums = sorted({int(t) for t in args.only.split(",")})
        except ValueError:
            nums = None
        if nums is None or any(k not in V.CRITERIA for k in nums):
            print(f"--only takes comma-separated criterion numbers "
                  f"{min(V.CRITERIA)}..{max(V.CRITERIA)}", file=sys.stderr)
            return EXIT_USAGE
    else:
        nums = sorted(V.CRITERIA)
    results = []
    for k in nums:
        r = V.run_criterion(k, args.seed)
        print(r.line(), flush=True)
        results.append(r)
    payload = [{k: v for k, v in r.to_dict().items() if k != "seconds"} for r in results]
    _write(args.out, "suite.json", _dump(payload))
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


COMMANDS = {
    "check-constants": cmd_check_constants,
    "envelopes": cmd_envelopes,
    "solve": cmd_solve,
    "sweep-eps": cmd_sweep_eps,
    "refine-study": cmd_refine_study,
    "cir": cmd_cir,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", default="hestonvi-out", help="output directory")
    common.add_argument("--tol", type=float, default=None, help="solver tolerance override")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized data")
    ap = _Parser(prog="hestonvi", description="Heston obstacle-problem solvers")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp_ = sub.add_parser(name, parents=[common])
        sp_.add_argument("config", help="JSON run configuration")
    s = sub.add_parser("suite", parents=[common])
    s.add_argument("--only", default=None, help="comma-separated criterion numbers")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    np.random.seed(args.seed)
    try:
        if args.command == "suite":
            return cmd_suite(args)
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, CoefficientError, SideConditionError, PreconditionError,
            EnvelopeError) as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NonconvergenceError as e:
        print(f"NonconvergenceError: {e}", file=sys.stderr)
        return EXIT_NONCONV
    except HestonError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
