"""Non-existence thresholds mu* (Pohozaev via the conformal form) and lambda* (Pohozaev + Hardy)."""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize

from .errors import HypothesisViolation, NonFinite
from .numerics import hybrid_grid

GRID_POINTS = 4096
X_TOL = 1e-11
TIE_TOL = 1e-12


def _vectorized(f, x):
    try:
        vals = np.asarray(f(x), dtype=float)
        if vals.shape == x.shape:
            return vals
    except (TypeError, ValueError):
        pass
    return np.array([float(f(t)) for t in x])


def infimum_on_interval(f, R: float, x_min_factor: float = 1e-9) -> tuple[float, float]:
    """Approximate ``inf_{0<x<R} f`` and where it is attained.

    Hybrid geometric/uniform grid on ``[R*x_min_factor, R]``, then a bounded
    scalar minimisation on the bracketing cell.  A minimiser on the first grid
    point is reported as location 0 (one-sided limit at the origin).
    """
    lo = R * x_min_factor
    grid = hybrid_grid(lo, R, GRID_POINTS)
    with np.errstate(all="ignore"):
        vals = _vectorized(f, grid)
    if not np.all(np.isfinite(vals)):
        bad = grid[~np.isfinite(vals)][0]
        raise NonFinite(f"function is not finite at x={bad:.6g}")
    i = int(np.argmin(vals))
    best_x, best = float(grid[i]), float(vals[i])
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    if b > a:
        with np.errstate(all="ignore"):
            res = optimize.minimize_scalar(
                lambda t: float(f(t)), bounds=(a, b), method="bounded",
                options={"xatol": X_TOL, "maxiter": 500},
            )
        if not np.isfinite(res.fun):
            raise NonFinite(f"function is not finite at refined point x={res.x:.6g}")
        if res.fun < best:
            best_x, best = float(res.x), float(res.fun)
    if best_x <= lo * (1 + 1e-12):
        best_x = 0.0
    return best, min(max(best_x, 0.0), R)


def _quotient_sum(p, weight):
    def f(x):
        a, a1, a2, a3 = p.derivatives(x)
        return weight * (a2 / a) + a3 / a1

    return f


def compute_D(p, n: float) -> tuple[float, float]:
    """inf over (0, R) of (2n-3) a''/a + a'''/a'."""
    return infimum_on_interval(_quotient_sum(p, 2.0 * n - 3.0), p.R)


def compute_mu_infimand(p, n: float) -> tuple[float, float]:
    """inf over (0, R) of (n-1) a''/a + a'''/a'."""
    return infimum_on_interval(_quotient_sum(p, n - 1.0), p.R)


def compute_omega(p) -> float:
    """Largest omega with a'' >= omega a on (0, R); must be nonnegative."""
    omega, _ = infimum_on_interval(lambda x: p.eval2(x) / p.eval0(x), p.R)
    if omega < -1e-10:
        raise HypothesisViolation(f"hypothesis (iii) fails: inf a''/a = {omega:.6g} < 0")
    return omega


class CBranch(str, enum.Enum):
    HARDY = "HardyBranch"
    QUARTER_D = "QuarterD"


@dataclass(frozen=True)
class ThresholdReport:
    D: float
    omega: float
    C: float
    C_branch: CBranch
    mu_star: float
    lambda_star: float
    argmin_D: float
    argmin_mu: float
    n: float = float("nan")
    R: float = float("nan")

    @property
    def best(self) -> float:
        return max(self.mu_star, self.lambda_star)

    @property
    def winner(self) -> str:
        return "lambda_star" if self.lambda_star >= self.mu_star else "mu_star"

    def verdict(self, lam: float) -> dict:
        """Which theorems rule out nontrivial solutions at ``lam`` (non-strict inequalities)."""
        by = [name for name, t in (("theorem1", self.mu_star), ("theorem2", self.lambda_star)) if lam <= t]
        return {"lambda": lam, "no_solution": bool(by), "by": by}

    def to_dict(self) -> dict:
        d = asdict(self)
        d["C_branch"] = self.C_branch.value
        d.pop("n")
        d.pop("R")
        return d

    CSV_FIELDS = ("D", "omega", "C", "C_branch", "mu_star", "lambda_star", "argmin_D", "argmin_mu")

    def csv_row(self) -> list:
        d = self.to_dict()
        return [d[k] for k in self.CSV_FIELDS]


def combine_C(D: float, omega: float, n: float) -> tuple[float, CBranch]:
    hardy = (D + 2.0 * omega) / (2.0 * (n + 2.0))
    quarter = D / 4.0
    tied = abs(hardy - quarter) <= TIE_TOL * max(1.0, abs(quarter))
    branch = CBranch.HARDY if hardy <= quarter or tied else CBranch.QUARTER_D
    return min(hardy, quarter), branch


def compute_thresholds(p, n: float) -> ThresholdReport:
    if not n > 2:
        raise ValueError(f"n must exceed 2, got {n!r}")
    mu_inf, argmin_mu = compute_mu_infimand(p, n)
    D, argmin_D = compute_D(p, n)
    omega = compute_omega(p)
    C, branch = combine_C(D, omega, n)
    return ThresholdReport(
        D=D,
        omega=omega,
        C=C,
        C_branch=branch,
        mu_star=(n - 2.0) / 4.0 * mu_inf,
        lambda_star=n * (n - 1.0) * C / 4.0,
        argmin_D=argmin_D,
        argmin_mu=argmin_mu,
        n=n,
        R=p.R,
    )
