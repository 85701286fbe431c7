"""Run configuration: a JSON object with the blocks below (all optional
except params).

    {
      "params":    {"sigma": 1, "rho": -0.5, "kappa": 1, "theta": 0.5, "r": 0.5, "q": 0.2,
                    "gamma": null},
      "domain":    {"x_lo": -2, "x_hi": 2, "y_max": 2},
      "grid":      {"nx": 33, "ny": 33, "grading": 2.0, "upwind": false},
      "problem":   {"kind": "vi", "method": "coercive", "lambda": null},
      "data":      {"f": 0, "psi": {"kind": "put", "strike": 1}, "g": {"kind": "put"},
                    "exact": null},
      "envelopes": {"c0": -1, "C0": 1, "c2": 0, "C2": 0, "c3": 0, "C3": 0, "l": 0, "L": 0,
                    "c4": 0, "C4": 0, "k": 0, "K": 0},
      "penalty":   {"eps_sequence": [0.1, 0.01, 0.001, 0.0001, 1e-05], "newton_tol": 1e-10,
                    "newton_max_iter": 60, "outer_tol": 1e-8, "max_outer": 500},
      "refine":    {"sizes": [17, 33, 65], "solution": {"kind": "exponential", ...} | "cir"},
      "cir":       {"y": [0.001, 0.01, 0.1, 1.0]}
    }

Data entries are numbers or builtin families (see problems.builtin_field).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .envelopes import EnvelopePair, derive_envelopes
from .errors import ConfigError
from .params import HestonParams, derive_constants, validate
from .problems import builtin_field
from .solvers import DEFAULT_EPS, PenaltyConfig
from .weighted_space import Domain

_BLOCKS = {
    "params": {"sigma", "rho", "kappa", "theta", "r", "q", "gamma"},
    "domain": {"x_lo", "x_hi", "y_max"},
    "grid": {"nx", "ny", "grading", "upwind"},
    "problem": {"kind", "method", "lambda"},
    "data": {"f", "psi", "g", "exact"},
    "envelopes": {"c0", "C0", "c2", "C2", "c3", "C3", "c4", "C4", "k", "K", "l", "L"},
    "penalty": {"eps_sequence", "newton_tol", "newton_max_iter", "outer_tol", "max_outer"},
    "refine": {"sizes", "solution"},
    "cir": {"y"},
}


def _num(v, name) -> float:
    if isinstance(v, str) and v.lower() in ("inf", "+inf", "-inf"):
        return float(v)
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ConfigError(f"{name} must be a number, got {v!r}")
    return float(v)


@dataclass
class RunConfig:
    params: HestonParams
    gamma: float | None = None
    domain: Domain = field(default_factory=lambda: Domain(-2.0, 2.0, 2.0))
    nx: int = 33
    ny: int = 33
    grading: float = 2.0
    upwind: bool = False
    kind: str = "equation"
    method: str = "coercive"
    lam: float | None = None
    data: dict = field(default_factory=dict)
    envelopes: dict | None = None
    penalty: PenaltyConfig = field(default_factory=PenaltyConfig)
    refine: dict = field(default_factory=dict)
    cir_y: list = field(default_factory=lambda: [1e-3, 1e-2, 0.1, 1.0])

    @property
    def consts(self):
        return derive_constants(self.params, self.gamma)

    def pair(self) -> EnvelopePair | None:
        if self.envelopes is None:
            return None
        return derive_envelopes(self.params, consts=self.consts, **self.envelopes)

    def data_field(self, name: str, default=0.0):
        entry = self.data.get(name, default)
        if entry is None:
            return None
        return builtin_field(entry, self.pair() if name != "exact" else None)


def parse_config(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - set(_BLOCKS)
    if unknown:
        raise ConfigError(f"unknown config blocks {sorted(unknown)}")
    for blk, keys in _BLOCKS.items():
        sub = raw.get(blk)
        if sub is None:
            continue
        if not isinstance(sub, dict):
            raise ConfigError(f"'{blk}' must be an object")
        bad = set(sub) - keys
        if bad:
            raise ConfigError(f"unknown keys in '{blk}': {sorted(bad)}")
    if "params" not in raw:
        raise ConfigError("config needs a 'params' block")
    pr = raw["params"]
    missing = {"sigma", "rho", "kappa", "theta", "r", "q"} - set(pr)
    if missing:
        raise ConfigError(f"params missing {sorted(missing)}")
    params = validate(HestonParams(*(_num(pr[k], k) for k in
                                     ("sigma", "rho", "kappa", "theta", "r", "q"))))
    gamma = None if pr.get("gamma") is None else _num(pr["gamma"], "gamma")
    cfg = RunConfig(params, gamma)

    if "domain" in raw:
        d = raw["domain"]
        try:
            cfg.domain = Domain(_num(d.get("x_lo", -2.0), "x_lo"), _num(d.get("x_hi", 2.0), "x_hi"),
                                _num(d.get("y_max", 2.0), "y_max"))
        except ValueError as e:
            raise ConfigError(str(e)) from None
    g = raw.get("grid", {})
    cfg.nx, cfg.ny = int(g.get("nx", 33)), int(g.get("ny", 33))
    if cfg.nx < 3 or cfg.ny < 3:
        raise ConfigError("grid sizes must be >= 3")
    cfg.grading = _num(g.get("grading", 2.0), "grading")
    cfg.upwind = bool(g.get("upwind", False))

    p = raw.get("problem", {})
    cfg.kind = p.get("kind", "equation")
    if cfg.kind not in ("equation", "vi"):
        raise ConfigError("problem.kind must be 'equation' or 'vi'")
    cfg.method = p.get("method", "coercive")
    if cfg.method not in ("coercive", "noncoercive"):
        raise ConfigError("problem.method must be 'coercive' or 'noncoercive'")
    cfg.lam = None if p.get("lambda") is None else _num(p["lambda"], "lambda")

    cfg.data = dict(raw.get("data", {}))
    if "envelopes" in raw:
        cfg.envelopes = {k: _num(v, k) for k, v in raw["envelopes"].items()}
    pen = raw.get("penalty", {})
    eps = tuple(_num(e, "eps") for e in pen.get("eps_sequence", DEFAULT_EPS))
    try:
        cfg.penalty = PenaltyConfig(
            eps_sequence=eps, newton_tol=_num(pen.get("newton_tol", 1e-10), "newton_tol"),
            newton_max_iter=int(pen.get("newton_max_iter", 60)), lam=cfg.lam,
            outer_tol=_num(pen.get("outer_tol", 1e-8), "outer_tol"),
            max_outer=int(pen.get("max_outer", 500)))
    except ValueError as e:
        raise ConfigError(str(e)) from None
    cfg.refine = dict(raw.get("refine", {}))
    if "cir" in raw:
        ys = [_num(v, "cir.y") for v in raw["cir"].get("y", [])]
        if any(not (v > 0 and math.isfinite(v)) for v in ys):
            raise ConfigError("cir.y values must be positive and finite")
        cfg.cir_y = ys
    # resolve builtins early so mistakes surface as config errors
    for name in ("f", "psi", "g", "exact"):
        if name in cfg.data:
            cfg.data_field(name)
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e}") from None
    return parse_config(raw)
