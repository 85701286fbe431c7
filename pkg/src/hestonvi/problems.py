"""Builtin data families and the standard test problems.

Data for f, psi and g are either SmoothField objects (when exact
derivatives are needed) or plain callables f(x, y) (the put payoff, whose
kink rules out a strong image).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assembly import DiscreteForm, assemble
from .envelopes import EnvelopePair, derive_envelopes
from .errors import ConfigError
from .fields import SmoothField
from .params import HestonParams, derive_constants
from .weighted_space import Domain, build_grid


@dataclass(frozen=True)
class Put:
    """(E - e^x)^+, optionally shifted by a constant."""
    strike: float = 1.0
    shift: float = 0.0

    def __call__(self, x, y):
        x = np.asarray(x, float)
        return np.maximum(self.strike - np.exp(x), 0.0) + self.shift + 0.0 * np.asarray(y, float)


@dataclass(frozen=True)
class Ramp:
    """(c - y)^+, an x-independent obstacle."""
    level: float = 0.5

    def __call__(self, x, y):
        y = np.asarray(y, float)
        return np.maximum(self.level - y, 0.0) + 0.0 * np.asarray(x, float)


def four_term(d0=0.0, d2=0.0, d3=0.0, ell=0.0, d4=0.0, k=0.0) -> SmoothField:
    """d0 + d2 y + d3 e^(ell x) + d4 e^(k y)."""
    return SmoothField.affine(d0, d2) + SmoothField.exp_x(ell, d3) + SmoothField.exp_y(k, d4)


def four_term_image(params: HestonParams, d0=0.0, d2=0.0, d3=0.0, ell=0.0, d4=0.0, k=0.0,
                    lam: float = 0.0) -> SmoothField:
    """Closed-form A_lambda of four_term(...): each piece maps to
    (constant + y) times itself, plus lam (1+y) u."""
    p = params
    kt = p.kappa * p.theta
    img = (SmoothField.affine(p.r * d0 - d2 * kt, (p.kappa + p.r) * d2)
           + SmoothField.exp_x(ell, d3 * (p.r - ell * (p.r - p.q)))
           + SmoothField.affine(0.0, 1.0) * SmoothField.exp_x(ell, d3 * 0.5 * ell * (1 - ell))
           + SmoothField.exp_y(k, d4 * (p.r - kt * k))
           + SmoothField.affine(0.0, 1.0) * SmoothField.exp_y(k, d4 * k * (p.kappa - 0.5 * p.sigma**2 * k)))
    if lam:
        img = img + lam * SmoothField.affine(1.0, 1.0) * four_term(d0, d2, d3, ell, d4, k)
    return img


# --------------------------------------------------------------------------
# config builtins

_BUILTIN_KEYS = {
    "constant": {"value"},
    "affine": {"d0", "d2"},
    "exponential": {"d0", "d2", "d3", "ell", "d4", "k"},
    "put": {"strike", "shift"},
    "ramp": {"level"},
    "lower_envelope": set(),
    "upper_envelope": set(),
}


def builtin_field(entry, pair: EnvelopePair | None = None):
    """Data function from a config entry: a number or {"kind": ..., params}."""
    if isinstance(entry, (int, float)):
        return SmoothField.constant(float(entry))
    if not isinstance(entry, dict) or "kind" not in entry:
        raise ConfigError(f"data entry must be a number or an object with 'kind': {entry!r}")
    kind = entry["kind"]
    if kind not in _BUILTIN_KEYS:
        raise ConfigError(f"unknown builtin {kind!r}; choose from {sorted(_BUILTIN_KEYS)}")
    extra = set(entry) - {"kind"} - _BUILTIN_KEYS[kind]
    if extra:
        raise ConfigError(f"builtin {kind!r} does not take {sorted(extra)}")
    args = {k: float(v) for k, v in entry.items() if k != "kind"}
    if kind == "constant":
        return SmoothField.constant(args.get("value", 0.0))
    if kind == "affine":
        return SmoothField.affine(args.get("d0", 0.0), args.get("d2", 0.0))
    if kind == "exponential":
        return four_term(**args)
    if kind == "put":
        return Put(args.get("strike", 1.0), args.get("shift", 0.0))
    if kind == "ramp":
        return Ramp(args.get("level", 0.5))
    if pair is None:
        raise ConfigError(f"builtin {kind!r} needs an 'envelopes' block")
    return pair.m if kind == "lower_envelope" else pair.M


# --------------------------------------------------------------------------
# standard problems


@dataclass
class Problem:
    """A discretized obstacle problem: form plus data."""
    name: str
    form: DiscreteForm
    f: object
    psi: object
    g: object
    extra: dict = field(default_factory=dict)


def standard_params() -> HestonParams:
    return HestonParams(sigma=1.0, rho=-0.5, kappa=1.0, theta=0.5, r=0.5, q=0.2)


def active_obstacle(n: int = 33, params: HestonParams | None = None, upwind: bool = False,
                    strike: float = 1.0) -> Problem:
    """Put obstacle (E - e^x)^+ on the strip (-2, 2) x (0, 2) with f = 0 and
    g = psi, so the contact set is a nontrivial region around x < log E."""
    p = params or standard_params()
    c = derive_constants(p)
    grid = build_grid(Domain(-2.0, 2.0, 2.0), n, n, 2.0, c)
    put = Put(strike)
    return Problem("put strip", assemble(grid, p, c, upwind=upwind), 0.0, put, put)


def oracle_battery(n: int = 25) -> list[Problem]:
    """Five coercive VI problems varying beta, rho and the obstacle."""
    cases = [
        ("put, beta=1, rho=-0.5", HestonParams(1.0, -0.5, 1.0, 0.5, 0.5, 0.2), Put(1.0), 0.0),
        ("put, beta=0.5, rho=0.3", HestonParams(1.0, 0.3, 1.0, 0.25, 0.4, 0.1), Put(1.2), 0.0),
        ("put, beta=2, rho=0", HestonParams(1.0, 0.0, 1.0, 1.0, 0.3, 0.3), Put(0.8), 0.0),
        ("ramp, beta=1, rho=0.6", HestonParams(0.8, 0.6, 0.64, 0.5, 0.5, 0.0), Ramp(0.5), 0.0),
        ("shifted put with source, beta=1.5, rho=-0.7",
         HestonParams(1.0, -0.7, 1.5, 0.5, 0.6, 0.1), Put(1.0, -0.1),
         SmoothField.affine(-0.2, 0.3)),
    ]
    out = []
    for name, p, psi, f in cases:
        c = derive_constants(p)
        grid = build_grid(Domain(-2.0, 2.0, 2.0), n, n, 2.0, c)
        g = (lambda x, y, psi=psi: np.maximum(psi(x, y), 0.0))
        out.append(Problem(name, assemble(grid, p, c), f, psi, g))
    return out


def manufactured(params: HestonParams, lam: float, d0=2.0, d2=1.0, d3=1.0, ell=0.1, d4=1.0,
                 k=0.2):
    """(u*, f) with f = A_lambda u* in closed form; default u* = 2 + y + e^(0.1x) + e^(0.2y)."""
    coefs = dict(d0=d0, d2=d2, d3=d3, ell=ell, d4=d4, k=k)
    return four_term(**coefs), four_term_image(params, lam=lam, **coefs)


def envelope_problem(n: int = 41) -> tuple[Problem, EnvelopePair]:
    """Non-coercive test: rho = 0 (monotone upwind form), b1 = 0, r > 0 and
    a source between A m and A M."""
    p = HestonParams(sigma=1.0, rho=0.0, kappa=1.0, theta=0.5, r=0.5, q=0.5)
    c = derive_constants(p)
    pair = derive_envelopes(p, c0=-1.0, C0=1.0, c2=-0.5, C2=0.5, consts=c)
    grid = build_grid(Domain(-2.0, 2.0, 2.0), n, n, 2.0, c)
    form = assemble(grid, p, c, upwind=True)

    def f(x, y):
        return 0.5 * (1 + np.sin(2 * np.asarray(x, float))) + 0.0 * np.asarray(y, float)

    put = Put(1.0)
    return Problem("envelope strip", form, f, put, put), pair
