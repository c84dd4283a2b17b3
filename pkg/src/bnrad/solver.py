"""Shooting from the regular-singular point x = 0 and the first eigenvalue.

The initial-value problem ``u(0) = alpha, u'(0) = 0`` is started at a small
``h0`` from its two-term series and integrated with DOP853.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np
from scipy import integrate, linalg, optimize

from .errors import BlowUp, BracketFailure, StiffnessFailure
from .numerics import derivative, ordered_map
from .profile import ProblemSpec
from .radial import RadialFunction

log = logging.getLogger(__name__)

RTOL = 1e-10
ODE_TOL = 1e-6
BLOWUP = 1e8
N_SCAN = 64
ALPHA_RANGE = (1e-3, 1e3)
CHECK_LOWER = 1e-4

__all__ = [
    "Mode",
    "RadialFunction",
    "ShootingResult",
    "integrate_from_origin",
    "endpoint_value",
    "ode_residual",
    "shoot",
    "first_eigenvalue",
    "first_eigenvalue_fd",
]


class Mode(str, enum.Enum):
    NONLINEAR = "nonlinear"
    LINEAR = "linear"


def _forcing(spec: ProblemSpec, u, mode: Mode):
    """lambda u + |u|^(q-1) u (or just lambda u in linear mode)."""
    out = spec.lam * u
    if mode is Mode.NONLINEAR:
        out = out + np.abs(u) ** (spec.q - 1.0) * u
    return out


def _start(spec: ProblemSpec, alpha: float, mode: Mode):
    """Starting abscissa and state from the series u = alpha - c x^2."""
    p = spec.profile
    h0 = spec.R * 1e-6
    f = _forcing(spec, alpha, mode)
    # keep the neglected x^4 term below ~1e-12 relative
    curv = abs(f / alpha) if alpha else 0.0
    if curv > 0:
        h0 = min(h0, np.sqrt(1e-6 / curv))
    # a'/a ~ k/x near 0; k = 1 when a'(0) != 0
    k = h0 * p.eval1(h0) / p.eval0(h0)
    denom = 1.0 + (spec.n - 1.0) * k
    u0 = alpha - f * h0**2 / (2.0 * denom)
    du0 = -f * h0 / denom
    return h0, np.array([u0, du0])


def _rhs(spec: ProblemSpec, mode: Mode):
    p = spec.profile
    n1 = spec.n - 1.0

    def rhs(x, y):
        u, du = y
        return [du, -n1 * (p.eval1(x) / p.eval0(x)) * du - _forcing(spec, u, mode)]

    return rhs


def _solve(spec, alpha, mode, rtol, blowup, dense, zero_events=False):
    mode = Mode(mode)
    h0, y0 = _start(spec, alpha, mode)

    def blow(x, y):
        return abs(y[0]) - blowup

    blow.terminal = True
    events = [blow]
    if zero_events:
        def zero(x, y):
            return y[0]

        events.append(zero)
    atol = 1e-13 * max(1.0, abs(alpha))
    sol = integrate.solve_ivp(
        _rhs(spec, mode), (h0, spec.R), y0, method="DOP853", rtol=rtol, atol=atol,
        dense_output=dense, events=events,
    )
    if sol.status == -1:
        raise StiffnessFailure(f"integration failed for alpha={alpha:.6g}: {sol.message}")
    if sol.t_events[0].size:
        loc = float(sol.t_events[0][0])
        raise BlowUp(f"|u| exceeded {blowup:.3g} at x={loc:.6g} (alpha={alpha:.6g})", loc)
    return h0, sol


def output_grid(R: float, h0: float, n_out: int = 1537) -> np.ndarray:
    grid = np.concatenate([[0.0], np.geomspace(h0, R, 512), np.linspace(0.0, R, n_out)[1:]])
    grid = np.unique(grid)
    return grid[(grid == 0.0) | (grid >= h0)]


def integrate_from_origin(spec: ProblemSpec, alpha: float, mode: Mode | str = Mode.NONLINEAR,
                          rtol: float = RTOL, blowup: float = BLOWUP, n_out: int = 1537) -> RadialFunction:
    """u and u' on a grid over [0, R] for the IVP u(0) = alpha, u'(0) = 0."""
    if not np.isfinite(alpha):
        raise ValueError(f"alpha must be finite, got {alpha!r}")
    if alpha == 0.0:
        grid = output_grid(spec.R, spec.R * 1e-6, n_out)
        return RadialFunction(grid, np.zeros_like(grid), np.zeros_like(grid))
    h0, sol = _solve(spec, alpha, mode, rtol, blowup, dense=True)
    grid = output_grid(spec.R, h0, n_out)
    y = sol.sol(grid[1:])
    values = np.concatenate([[alpha], y[0]])
    derivs = np.concatenate([[0.0], y[1]])
    values[-1], derivs[-1] = sol.y[0, -1], sol.y[1, -1]
    return RadialFunction(grid, values, derivs)


def endpoint_value(spec: ProblemSpec, alpha: float, mode: Mode | str = Mode.NONLINEAR,
                   rtol: float = RTOL, blowup: float = BLOWUP) -> float:
    """u(R; alpha)."""
    if alpha == 0.0:
        return 0.0
    _, sol = _solve(spec, alpha, mode, rtol, blowup, dense=False)
    return float(sol.y[0, -1])


def count_interior_zeros(spec: ProblemSpec, alpha: float, mode: Mode | str = Mode.NONLINEAR,
                         rtol: float = RTOL) -> int:
    _, sol = _solve(spec, alpha, mode, rtol, BLOWUP, dense=False, zero_events=True)
    zeros = sol.t_events[1]
    return int(np.count_nonzero(zeros < spec.R * (1.0 - 1e-12)))


def ode_residual(spec: ProblemSpec, u: RadialFunction, mode: Mode | str = Mode.NONLINEAR) -> float:
    """max |-u'' - (n-1) a'/a u' - lambda u - |u|^(q-1) u| / (1 + |u|^q) on [R*1e-4, R].

    u'' comes from differencing the sampled u'.
    """
    mode = Mode(mode)
    p = spec.profile
    x = u.grid
    d2 = derivative(x, u.derivs, 1)
    mask = x >= spec.R * CHECK_LOWER
    xm = x[mask]
    res = -d2[mask] - (spec.n - 1.0) * (p.eval1(xm) / p.eval0(xm)) * u.derivs[mask] - _forcing(spec, u.values[mask], mode)
    scale = 1.0 + np.abs(u.values[mask]) ** spec.q
    return float(np.max(np.abs(res) / scale))


@dataclass(frozen=True)
class ShootingResult:
    alpha: float
    solution: RadialFunction
    residual: float
    lam: float
    n_sign_changes: int
    mode: Mode = Mode.NONLINEAR

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "lambda": self.lam,
            "residual": self.residual,
            "n_sign_changes": self.n_sign_changes,
            "mode": self.mode.value,
            "u_R": float(self.solution.values[-1]),
            "du_R": float(self.solution.derivs[-1]),
        }


def _scan_value(args):
    spec, alpha, mode, rtol, blowup = args
    try:
        return endpoint_value(spec, alpha, mode, rtol, blowup)
    except BlowUp:
        return float("nan")


def _sign_changes(values: np.ndarray) -> int:
    s = np.sign(values[np.abs(values) > 0])
    return int(np.count_nonzero(s[1:] != s[:-1]))


def _accept(spec, alpha, mode, rtol, ode_tol, blowup):
    sol = integrate_from_origin(spec, alpha, mode, rtol, blowup)
    residual = ode_residual(spec, sol, mode)
    if residual >= ode_tol:
        log.info("rejecting alpha=%.6g: ODE residual %.3g >= %.3g", alpha, residual, ode_tol)
        return None
    interior = sol.values[(sol.grid > 0) & (sol.grid < spec.R)]
    return ShootingResult(alpha, sol, residual, spec.lam, _sign_changes(interior), Mode(mode))


def shoot(spec: ProblemSpec, alpha_range: tuple[float, float] = ALPHA_RANGE,
          mode: Mode | str = Mode.NONLINEAR, n_scan: int = N_SCAN, ode_tol: float = ODE_TOL,
          rtol: float = RTOL, blowup: float = BLOWUP, root_tol: float = 1e-9,
          workers: int | None = None) -> ShootingResult | None:
    """Search for alpha with u(R; alpha) = 0 over a log-spaced scan of ``alpha_range``.

    ``alpha_range`` is either positive or negative (both ends of one sign).
    Returns the first accepted solution in order of increasing |alpha|, or
    None when no bracket yields one.
    """
    lo, hi = alpha_range
    if not lo < hi:
        raise ValueError("alpha_range must be increasing")
    if lo > 0:
        sign, mags = 1.0, (lo, hi)
    elif hi < 0:
        sign, mags = -1.0, (-hi, -lo)
    else:
        raise ValueError("alpha_range must not contain 0")
    mode = Mode(mode)
    alphas = sign * np.geomspace(mags[0], mags[1], n_scan)
    jobs = [(spec, float(a), mode, rtol, blowup) for a in alphas]
    vals = np.array(ordered_map(_scan_value, jobs, workers))

    for i, (a, v) in enumerate(zip(alphas, vals)):
        if np.isfinite(v) and abs(v) <= root_tol * abs(a):
            found = _accept(spec, float(a), mode, rtol, ode_tol, blowup)
            if found is not None:
                return found
        if i + 1 < len(alphas):
            w = vals[i + 1]
            if np.isfinite(v) and np.isfinite(w) and v * w < 0:
                try:
                    root = optimize.brentq(
                        lambda t: endpoint_value(spec, t, mode, rtol, blowup), a, alphas[i + 1],
                        xtol=1e-15 * abs(a), rtol=4 * np.finfo(float).eps, maxiter=200,
                    )
                except BlowUp:
                    continue
                u_end = endpoint_value(spec, root, mode, rtol, blowup)
                if abs(u_end) > root_tol * abs(root):
                    log.info("bracket [%.6g, %.6g]: |u(R)| = %.3g not below tolerance", a, alphas[i + 1], abs(u_end))
                    continue
                found = _accept(spec, float(root), mode, rtol, ode_tol, blowup)
                if found is not None:
                    return found
    return None


# ---------------------------------------------------------------------------
# first eigenvalue


def first_eigenvalue(profile, n: float, rtol: float = 1e-9, ode_rtol: float = RTOL) -> float:
    """Smallest lambda with a nontrivial solution of the linear Dirichlet-Neumann problem.

    Bisection on ``lambda`` of "u(.; lambda) has a zero in (0, R)" (monotone by
    Sturm comparison), polished with Brent on u(R; lambda).
    """
    def spec(lam):
        return ProblemSpec(profile, n, lam)

    def has_zero(lam):
        return count_interior_zeros(spec(lam), 1.0, Mode.LINEAR, ode_rtol) > 0

    lo = 0.0
    hi = 1.0 / profile.R**2
    # 1e6 cap in units of 1/R^2 so the search is scale free
    cap = 1e6 * max(1.0, 1.0 / profile.R**2)
    while not has_zero(hi):
        lo = hi
        hi *= 2.0
        if hi > cap:
            raise BracketFailure(f"no sign change for lambda up to {cap:.3g}")
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if has_zero(mid):
            hi = mid
        else:
            lo = mid
    f_lo = endpoint_value(spec(lo), 1.0, Mode.LINEAR, ode_rtol)
    f_hi = endpoint_value(spec(hi), 1.0, Mode.LINEAR, ode_rtol)
    if f_lo * f_hi < 0:
        return float(optimize.brentq(lambda lam: endpoint_value(spec(lam), 1.0, Mode.LINEAR, ode_rtol),
                                     lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))
    return 0.5 * (lo + hi)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _cell_integrals(w, left, right):
    mid, half = 0.5 * (left + right), 0.5 * (right - left)
    pts = mid[:, None] + half[:, None] * _GL_X[None, :]
    return half * (w(pts) * _GL_W[None, :]).sum(axis=1)


def _fd_level(profile, n: float, N: int) -> float:
    R = profile.R
    h = R / N
    x = np.arange(N) * h
    w = lambda t: profile.eval0(t) ** (n - 1.0)  # noqa: E731
    c = w(x + 0.5 * h) / h  # flux coefficient at x_{i+1/2}
    mass = _cell_integrals(w, np.maximum(x - 0.5 * h, 0.0), x + 0.5 * h)
    diag = c.copy()
    diag[1:] += c[:-1]
    off = -c[:-1]
    d = diag / mass
    e = off / np.sqrt(mass[:-1] * mass[1:])
    val = linalg.eigh_tridiagonal(d, e, eigvals_only=True, select="i", select_range=(0, 0))
    return float(val[0])


def first_eigenvalue_fd(profile, n: float, N: int = 1000, levels: int = 4) -> float:
    """Finite-volume discretisation of -(a^(n-1) u')' = lambda a^(n-1) u with
    Richardson extrapolation over ``levels`` grid doublings (error ~ h^2, h^4, ...).
    """
    table = [[_fd_level(profile, n, N * 2**k)] for k in range(levels)]
    for k in range(1, levels):
        for j in range(1, k + 1):
            f = 4.0**j
            table[k].append((f * table[k][j - 1] - table[k - 1][j - 1]) / (f - 1.0))
    return table[-1][-1]
