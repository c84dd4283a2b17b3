"""Closed forms for the profile a(x) = x e^x and threshold sweeps.

For a = x e^x both quotients a''/a = 1 + 2/x and a'''/a' = (3+x)/(1+x) decrease
on (0, R), so every infimum sits at x = R and the thresholds are explicit in
(n, R).  Writing s = (1+R)(2+R):

* the Hardy branch of C is the smaller one iff n >= n_hat(s);
* lambda* >= mu* iff F(n, R) >= 0, and F changes sign at n = n_tilde(s).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import BnradError, ValidityWarning
from .numerics import ordered_map
from .profile import ProfileKind, make_builtin, make_profile
from .thresholds import compute_thresholds


def s_of_R(R: float) -> float:
    return (1.0 + R) * (2.0 + R)


def n_hat(s: float) -> float:
    """Dimension above which C takes its Hardy branch for x e^x."""
    t = 1.0 + 1.0 / s
    return 0.5 * (t + math.sqrt(t * t + 8.0))


def n_tilde(s: float) -> float:
    """Root in n of F; lambda* >= mu* exactly for n below it (n > 2)."""
    return ((4.0 * s + 1.0) + math.sqrt(16.0 * s * s - 24.0 * s + 33.0)) / (2.0 * (s - 1.0))


@dataclass(frozen=True)
class CrossoverPoint:
    s: float
    n_hat: float
    n_tilde: float


def crossover(s: float) -> CrossoverPoint:
    if not s > 1.0:
        raise ValueError(f"s must exceed 1, got {s!r}")
    return CrossoverPoint(float(s), n_hat(s), n_tilde(s))


def _check(n, R):
    if not n > 2:
        raise ValueError(f"n must exceed 2, got {n!r}")
    if not R > 0:
        raise ValueError(f"R must be positive, got {R!r}")


def closed_mu_star(n: float, R: float) -> float:
    _check(n, R)
    return 0.25 * (n - 2.0) * (n + 2.0 * (n * (1.0 + R) - 1.0) / (R * (1.0 + R)))


def closed_D(n: float, R: float) -> float:
    """inf of (2n-3) a''/a + a'''/a', attained at x = R."""
    return (1.0 + 2.0 / R) * (2.0 * n - 3.0) + (3.0 + R) / (1.0 + R)


def closed_omega(R: float) -> float:
    return 1.0 + 2.0 / R


def closed_quarter_D_lambda_star(n: float, R: float) -> float:
    """lambda* when C = D/4, the branch taken for n < n_hat(s)."""
    _check(n, R)
    return n * (n - 1.0) / 16.0 * closed_D(n, R)


def lambda_star_formula_valid(n: float, R: float) -> bool:
    return n >= n_hat(s_of_R(R))


def closed_lambda_star(n: float, R: float) -> float:
    """Hardy-branch closed form; below n_hat falls back to the numeric thresholds."""
    _check(n, R)
    if not lambda_star_formula_valid(n, R):
        warnings.warn(
            f"closed form for lambda* needs n >= n_hat = {n_hat(s_of_R(R)):.6g}; "
            "using the numeric thresholds instead",
            ValidityWarning,
            stacklevel=2,
        )
        return compute_thresholds(make_builtin(ProfileKind.XEXPX, R), n).lambda_star
    return n * (n - 1.0) / (8.0 * (n + 2.0)) * ((1.0 + 2.0 / R) * (2.0 * n - 1.0) + (3.0 + R) / (1.0 + R))


def comparison_F(n: float, R: float) -> float:
    """Sign agrees with lambda* - mu* for x e^x wherever the closed form is valid."""
    _check(n, R)
    return 2.0 * (R * R + 3.0 * R) * (4.0 - n) * n + 2.0 * (8.0 - n) * (n - 1.0)


# ---------------------------------------------------------------------------
# sweeps

SWEEP_COLUMNS = (
    "n", "R", "s", "mu_star", "lambda_star", "D", "omega", "C", "C_branch",
    "winner", "F", "n_hat", "n_tilde", "error",
)


def _cell(args) -> dict:
    spec, n, R, eig = args
    s = s_of_R(R)
    row = dict.fromkeys(SWEEP_COLUMNS)
    row.update(n=float(n), R=float(R), s=s, error="", F=float("nan"), n_hat=float("nan"), n_tilde=float("nan"))
    try:
        profile = make_profile(spec, R)
        # the closed-form columns only mean something for x e^x
        if profile.kind is ProfileKind.XEXPX:
            row.update(n_hat=n_hat(s), n_tilde=n_tilde(s), F=comparison_F(n, R))
        rep = compute_thresholds(profile, n)
        row.update(
            mu_star=rep.mu_star, lambda_star=rep.lambda_star, D=rep.D, omega=rep.omega,
            C=rep.C, C_branch=rep.C_branch.value, winner=rep.winner,
        )
        if eig:
            from .solver import first_eigenvalue

            row["lambda1"] = first_eigenvalue(profile, n)
    except (BnradError, ValueError, ArithmeticError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def sweep(profile: str, n_grid, R_grid, eig: bool = False, workers: int | None = None) -> list[dict]:
    """Thresholds on the product grid, R varying fastest; failures go in ``error``."""
    n_grid, R_grid = list(n_grid), list(R_grid)
    if not n_grid or not R_grid:
        raise ValueError("sweep grids must be nonempty")
    jobs = [(profile, float(n), float(R), eig) for n in n_grid for R in R_grid]
    rows = ordered_map(_cell, jobs, workers)
    if eig:
        for row in rows:
            row.setdefault("lambda1", float("nan"))
    return rows


def sweep_columns(eig: bool = False) -> tuple[str, ...]:
    return SWEEP_COLUMNS + (("lambda1",) if eig else ())


def grid(lo: float, hi: float, steps: int) -> np.ndarray:
    if steps < 1:
        raise ValueError("steps must be at least 1")
    return np.linspace(lo, hi, steps) if steps > 1 else np.array([float(lo)])
