"""Profile functions a(x) and problem instances.

A profile defines the radial operator ``u'' + (n-1) a'/a u'``; the three
built-ins are ``a = sinh`` (geodesic balls in hyperbolic space), ``a = x``
(Euclidean balls) and ``a = x e^x``.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize
from scipy.differentiate import derivative as _richardson

from . import expr as _expr
from .errors import DomainError, InvalidRadius

log = logging.getLogger(__name__)

X_MIN_FACTOR = 1e-9


class ProfileKind(str, enum.Enum):
    SINH = "sinh"
    LINEAR_X = "x"
    XEXPX = "xexp"
    EXPRESSION = "expression"


def _xexp0(x):
    return x * np.exp(x)


def _xexp1(x):
    return np.exp(x) * (1.0 + x)


def _xexp2(x):
    return np.exp(x) * (2.0 + x)


def _xexp3(x):
    return np.exp(x) * (3.0 + x)


def _lin0(x):
    return np.asarray(x, dtype=float) * 1.0


def _one(x):
    return np.ones_like(np.asarray(x, dtype=float))


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


_BUILTINS = {
    ProfileKind.SINH: (np.sinh, np.cosh, np.sinh, np.cosh),
    ProfileKind.LINEAR_X: (_lin0, _one, _zero, _zero),
    ProfileKind.XEXPX: (_xexp0, _xexp1, _xexp2, _xexp3),
}

_ALIASES = {
    "sinh": ProfileKind.SINH,
    "x": ProfileKind.LINEAR_X,
    "linear": ProfileKind.LINEAR_X,
    "linearx": ProfileKind.LINEAR_X,
    "xexp": ProfileKind.XEXPX,
    "xexpx": ProfileKind.XEXPX,
    "x*exp(x)": ProfileKind.XEXPX,
}


@dataclass(frozen=True)
class ProfileFunction:
    """The weight a(x) on [0, R] together with a', a'' and a'''."""

    kind: ProfileKind
    R: float
    eval0: Callable = field(repr=False, compare=False)
    eval1: Callable = field(repr=False, compare=False)
    eval2: Callable = field(repr=False, compare=False)
    eval3: Callable = field(repr=False, compare=False)
    expression: str | None = None

    @property
    def name(self) -> str:
        return self.expression if self.kind is ProfileKind.EXPRESSION else self.kind.value

    @property
    def x_min(self) -> float:
        return self.R * X_MIN_FACTOR

    def derivatives(self, x):
        """(a, a', a'', a''') at ``x``."""
        return self.eval0(x), self.eval1(x), self.eval2(x), self.eval3(x)

    def with_radius(self, R: float) -> "ProfileFunction":
        return make_profile(self.name, R)

    def __reduce__(self):
        return (make_profile, (self.name, self.R))


def _check_radius(R):
    if not (np.isfinite(R) and R > 0):
        raise InvalidRadius(f"R must be a positive finite number, got {R!r}")


def make_builtin(kind: ProfileKind | str, R: float) -> ProfileFunction:
    """Built-in profile with closed-form derivatives."""
    _check_radius(R)
    kind = ProfileKind(kind) if not isinstance(kind, ProfileKind) else kind
    if kind not in _BUILTINS:
        raise ValueError(f"{kind!r} is not a built-in profile")
    f0, f1, f2, f3 = _BUILTINS[kind]
    return ProfileFunction(kind, float(R), f0, f1, f2, f3)


def parse_profile(text: str, R: float) -> ProfileFunction:
    """Parse an expression in x and differentiate it symbolically three times."""
    _check_radius(R)
    tree = _expr.parse(text)
    trees = [tree]
    for _ in range(3):
        trees.append(_expr.diff(trees[-1]))
    funcs = [_expr.compile_tree(t) for t in trees]
    profile = ProfileFunction(
        ProfileKind.EXPRESSION, float(R), *funcs, expression=_expr.to_string(tree)
    )

    grid = np.geomspace(R * 1e-6, R, 48)
    for k, f in enumerate(funcs):
        vals = np.asarray(f(grid), dtype=float)
        if not np.all(np.isfinite(vals)):
            bad = grid[~np.isfinite(vals)][0]
            raise DomainError(f"derivative {k} of {text!r} is not finite at x={bad:.6g}")
    _check_symbolic_derivatives(funcs, grid[8:])
    return profile


def _check_symbolic_derivatives(funcs, grid, rtol=1e-6):
    for k in range(3):
        res = _richardson(funcs[k], grid, initial_step=0.05 * grid, order=8)
        fd = res.df
        exact = np.asarray(funcs[k + 1](grid), dtype=float)
        scale = np.maximum(np.abs(exact), np.abs(np.asarray(funcs[k](grid))) / grid)
        err = np.abs(fd - exact) / np.maximum(scale, 1e-300)
        ok = ~res.success | (err < rtol)
        if not np.all(ok):
            raise DomainError(
                f"symbolic derivative {k + 1} disagrees with finite differences "
                f"(max rel err {err[~ok].max():.3g})"
            )


def make_profile(spec: str, R: float) -> ProfileFunction:
    """Built-in by name (sinh, x, xexp) or a parsed expression."""
    key = spec.strip().lower().replace(" ", "")
    if key in _ALIASES:
        return make_builtin(_ALIASES[key], R)
    return parse_profile(spec, R)


@dataclass(frozen=True)
class ValidationReport:
    a0: float
    a0_ok: bool
    min_aprime: float
    min_aprime_at: float
    aprime_ok: bool
    omega: float
    omega_at: float
    omega_ok: bool

    @property
    def passed(self) -> bool:
        return self.a0_ok and self.aprime_ok and self.omega_ok

    @property
    def failures(self) -> list[str]:
        out = []
        if not self.a0_ok:
            out.append("i")
        if not self.aprime_ok:
            out.append("ii")
        if not self.omega_ok:
            out.append("iii")
        return out

    def to_dict(self) -> dict:
        return {
            "a0": self.a0,
            "a0_ok": self.a0_ok,
            "min_aprime": self.min_aprime,
            "min_aprime_at": self.min_aprime_at,
            "aprime_ok": self.aprime_ok,
            "omega": self.omega,
            "omega_at": self.omega_at,
            "omega_ok": self.omega_ok,
            "passed": self.passed,
            "failures": self.failures,
        }


def _min_aprime(p: ProfileFunction) -> tuple[float, float]:
    grid = np.geomspace(p.x_min, p.R, 2048)[:-1]
    vals = np.asarray(p.eval1(grid), dtype=float)
    if not np.all(np.isfinite(vals)):
        return float("nan"), float(grid[~np.isfinite(vals)][0])
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    best_x, best = float(grid[i]), float(vals[i])
    if hi > lo:
        res = optimize.minimize_scalar(
            lambda t: float(p.eval1(t)), bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-12 * max(hi, 1e-300)},
        )
        if res.fun < best:
            best_x, best = float(res.x), float(res.fun)
    return best, best_x


def validate_hypotheses(p: ProfileFunction) -> ValidationReport:
    """Check a(0) = 0, a' > 0 on (0, R) and a'' >= omega a with omega >= 0."""
    from .thresholds import infimum_on_interval

    with np.errstate(all="ignore"):
        a0 = float(p.eval0(0.0))
    a0_ok = bool(np.isfinite(a0) and abs(a0) <= 1e-12)

    min_ap, min_ap_at = _min_aprime(p)
    aprime_ok = bool(np.isfinite(min_ap) and min_ap > 0.0)

    try:
        omega, omega_at = infimum_on_interval(lambda x: p.eval2(x) / p.eval0(x), p.R)
        omega_ok = omega >= -1e-10
    except Exception as exc:  # non-finite quotient counts as failure of (iii)
        log.debug("omega search failed: %s", exc)
        omega, omega_at, omega_ok = float("nan"), float("nan"), False
    return ValidationReport(a0, a0_ok, min_ap, min_ap_at, aprime_ok, omega, omega_at, bool(omega_ok))


@dataclass(frozen=True)
class ProblemSpec:
    """One instance of the boundary-value problem: profile, dimension n, lambda."""

    profile: ProfileFunction
    n: float
    lam: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.n) and self.n > 2):
            raise ValueError(f"n must exceed 2, got {self.n!r}")
        if not np.isfinite(self.lam):
            raise ValueError(f"lambda must be finite, got {self.lam!r}")

    @property
    def R(self) -> float:
        return self.profile.R

    @property
    def q(self) -> float:
        return (self.n + 2.0) / (self.n - 2.0)
