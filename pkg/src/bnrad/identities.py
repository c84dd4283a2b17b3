"""Weighted integral identities and inequalities behind the lambda* bound.

With ``G(x) = int_0^x a^(n-1)``, ``S = G a'/a - a^(n-1)/n`` and
``m = G a' - a^n/n`` this module evaluates, on sampled functions:

* the Pohozaev balance ``lam/n int u^2 a^(n-1) = u'(R)^2 G(R)/2 + (n-1) int u'^2 S``,
* the Hardy-type inequality ``int u^2 a^(n-1) < 4 int G^2 u'^2 / a^(n-1)``,
* the pointwise bound ``S >= C G^2 / G'`` and the auxiliary functions used to
  prove it,
* the virial balance of the conformally transformed equation.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from . import conformal
from .errors import NotASolution, QuadratureFailure, ZeroFunction
from .numerics import cumulative_quad, derivative, hybrid_grid, relative_gap, simpson
from .profile import ProblemSpec
from .radial import RadialFunction
from .solver import ODE_TOL, Mode, ode_residual

GRID_POINTS = 4096
SPLINE_KNOTS = 8


@dataclass(frozen=True)
class HardyFrame:
    """G, m and S for one (profile, n), cached on a grid.

    ``m`` is integrated from ``m' = G a''`` rather than assembled as
    ``G a' - a^n/n``; the two agree analytically but the second cancels badly
    when a^n is large.  ``S = m / a``.
    """

    profile: object
    n: float
    C: float
    grid: np.ndarray = field(repr=False)
    G_nodes: np.ndarray = field(repr=False)
    _spline: CubicHermiteSpline = field(repr=False)
    _m_spline: CubicHermiteSpline = field(repr=False)

    @property
    def R(self) -> float:
        return self.profile.R

    def weight(self, x):
        """G' = a^(n-1)."""
        return np.asarray(self.profile.eval0(x), dtype=float) ** (self.n - 1.0)

    def G(self, x):
        return self._spline(x)

    def m(self, x):
        return self._m_spline(x)

    def m_direct(self, x):
        """G a' - a^n / n evaluated as written."""
        a, a1 = self.profile.eval0(x), self.profile.eval1(x)
        return self.G(x) * a1 - a**self.n / self.n

    def S(self, x):
        with np.errstate(invalid="ignore", divide="ignore"):
            out = self.m(x) / self.profile.eval0(x)
        return np.where(np.asarray(x) == 0.0, 0.0, out)

    def hardy_weight(self, x):
        """G^2 / G', extended by 0 at the origin."""
        with np.errstate(invalid="ignore", divide="ignore"):
            out = self.G(x) ** 2 / self.weight(x)
        return np.where(np.asarray(x) == 0.0, 0.0, out)


def _cumulative(f, grid):
    first, _ = integrate.quad(f, 0.0, grid[1], epsabs=0.0, epsrel=1e-13)
    return np.concatenate([[0.0], first + cumulative_quad(f, grid[1:], epsabs=0.0, epsrel=1e-13)])


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _cumulative_gauss(f, grid):
    """Running integral of f by 8-point Gauss-Legendre on every cell."""
    left, right = grid[:-1], grid[1:]
    half = 0.5 * (right - left)
    t = (left + right)[:, None] * 0.5 + half[:, None] * _GL_NODES[None, :]
    cells = half * (np.asarray(f(t.ravel()), dtype=float).reshape(t.shape) @ _GL_WEIGHTS)
    return np.concatenate([[0.0], np.cumsum(cells)])


def build_frame(profile, n: float, C: float, n_grid: int = GRID_POINTS) -> HardyFrame:
    """Cache G and m on ``[0] + hybrid grid``; cubic Hermite interpolation (derivatives known)."""
    R = profile.R
    grid = np.concatenate([[0.0], hybrid_grid(R * 1e-9, R, n_grid)])
    w = lambda t: np.asarray(profile.eval0(t), dtype=float) ** (n - 1.0)  # noqa: E731
    G = _cumulative(w, grid)
    if not np.all(np.isfinite(G)):
        raise QuadratureFailure("G is not finite on [0, R]")
    spline = CubicHermiteSpline(grid, G, w(grid))
    dm = lambda t: spline(t) * profile.eval2(t)  # noqa: E731
    m = _cumulative_gauss(dm, grid)
    if not np.all(np.isfinite(m)):
        raise QuadratureFailure("m is not finite on [0, R]")
    return HardyFrame(profile, float(n), float(C), grid, G, spline, CubicHermiteSpline(grid, m, dm(grid)))


# ---------------------------------------------------------------------------
# integral checks


def _gate(spec: ProblemSpec, u: RadialFunction, ode_tol: float):
    if not np.any(u.values):
        return
    res = ode_residual(spec, u, Mode.NONLINEAR)
    if res > 10.0 * ode_tol:
        raise NotASolution(f"ODE residual {res:.3g} exceeds {10 * ode_tol:.3g}")


def pohozaev_balance(frame: HardyFrame, spec: ProblemSpec, u: RadialFunction,
                     ode_tol: float = ODE_TOL) -> tuple[float, float]:
    """(lam/n int u^2 a^(n-1),  u'(R)^2 G(R)/2 + (n-1) int u'^2 S)."""
    _gate(spec, u, ode_tol)
    n, x = frame.n, u.grid
    lhs = spec.lam / n * simpson(u.values**2 * frame.weight(x), x)
    rhs = 0.5 * u.derivs[-1] ** 2 * float(frame.G(x[-1])) + (n - 1.0) * simpson(u.derivs**2 * frame.S(x), x)
    return float(lhs), float(rhs)


def hardy_check(frame: HardyFrame, u: RadialFunction) -> float:
    """int u^2 a^(n-1) / (4 int G^2 u'^2 / a^(n-1)); below 1 for u(R) = 0."""
    x = u.grid
    scale = np.abs(u.values).max()
    if abs(u.values[-1]) > 1e-8 * max(scale, 1e-300):
        raise ValueError("test function must vanish at R")
    num = simpson(u.values**2 * frame.weight(x), x)
    if num < 1e-30:
        raise ZeroFunction("int u^2 a^(n-1) vanishes")
    den = 4.0 * simpson(u.derivs**2 * frame.hardy_weight(x), x)
    return float(num / den)


def rayleigh_lower_bound(frame: HardyFrame, u: RadialFunction) -> float:
    """n(n-1)/4 * int u'^2 S / int G^2 u'^2 / G' (a lower bound for lam on solutions)."""
    x, n = u.grid, frame.n
    num = simpson(u.derivs**2 * frame.S(x), x)
    den = simpson(u.derivs**2 * frame.hardy_weight(x), x)
    return float(n * (n - 1.0) / 4.0 * num / den)


# ---------------------------------------------------------------------------
# pointwise bound


@dataclass(frozen=True)
class Margin:
    value: float
    location: float
    relative: float


def _margin_grid(frame: HardyFrame, extra=()) -> np.ndarray:
    pts = [frame.grid[1:]]
    for c in extra:
        if np.isfinite(c) and 0.0 < c <= frame.R:
            lo, hi = max(c * (1 - 1e-2), frame.R * 1e-9), min(c * (1 + 1e-2), frame.R)
            pts.append(np.linspace(lo, hi, 257))
    return np.unique(np.concatenate(pts))


def lemma32_margin(frame: HardyFrame, extra_points=()) -> Margin:
    """min over the grid of S - C G^2/G'.

    ``relative`` divides by G a'/a + a^(n-1)/n, the size of the terms that
    make up S, so it is comparable across profiles of very different scale.
    """
    x = _margin_grid(frame, extra_points)
    a, a1 = frame.profile.eval0(x), frame.profile.eval1(x)
    margin = frame.S(x) - frame.C * frame.hardy_weight(x)
    scale = frame.G(x) * a1 / a + a ** (frame.n - 1.0) / frame.n + frame.C * frame.hardy_weight(x)
    rel = margin / np.maximum(scale, 1e-300)
    i = int(np.argmin(margin))
    return Margin(float(margin[i]), float(x[i]), float(rel.min()))


def auxiliary_functions(frame: HardyFrame, x) -> dict[str, np.ndarray]:
    """f = S G' - C G^2, g with f' = a^(n-3) g, and g' in closed form."""
    n, C = frame.n, frame.C
    a, a1, a2, a3 = frame.profile.derivatives(x)
    G = frame.G(x)
    m = frame.m(x)
    f = a ** (n - 2.0) * m - C * G**2
    g = (n - 2.0) * a1 * m + G * a * (a2 - 2.0 * C * a)
    gp_terms = [
        (2 * n - 3) * G * a1 * a2,
        (2.0 / n) * a**n * a2,
        -2.0 * C * a ** (n + 1.0),
        -4.0 * C * G * a * a1,
        G * a * a3,
    ]
    return {
        "f": f,
        "f_scale": a ** (n - 2.0) * (G * a1 + a**n / n) + C * G**2,
        "g": g,
        "g_scale": (n - 2.0) * a1 * (G * a1 + a**n / n) + G * a * (a2 + 2.0 * C * a),
        "gprime": sum(gp_terms),
        "gprime_scale": sum(np.abs(t) for t in gp_terms),
    }


def auxiliary_monotonicity(frame: HardyFrame, spec: ProblemSpec | None = None) -> dict:
    """Minima of f, g, g' on the frame grid, raw and relative to their term sizes,
    plus the values at 0 and a finite-difference check of g' against g.
    """
    x = frame.grid[1:]
    aux = auxiliary_functions(frame, x)
    out = {}
    for key in ("f", "g", "gprime"):
        vals, scale = aux[key], np.maximum(aux[key + "_scale"], 1e-300)
        out[f"{key}_min"] = float(vals.min())
        out[f"{key}_rel_min"] = float((vals / scale).min())
    at0 = auxiliary_functions(frame, np.array([0.0]))
    out["f0"] = float(at0["f"][0])
    out["g0"] = float(at0["g"][0])
    fd = derivative(x, aux["g"], 1, width=7)
    mask = x >= frame.R * 1e-3
    out["gprime_fd_rel_err"] = float(
        (np.abs(fd - aux["gprime"]) / np.maximum(aux["gprime_scale"], 1e-300))[mask].max()
    )
    return out


# ---------------------------------------------------------------------------
# virial balance


def virial_balance(map_: conformal.ConformalMap, spec: ProblemSpec, u: RadialFunction,
                   ode_tol: float = ODE_TOL) -> tuple[float, float]:
    """Both sides of the virial identity for v = p^(n/2-1) u on the conformal radius."""
    _gate(spec, u, ode_tol)
    if not np.any(u.values):
        return 0.0, 0.0
    v = conformal.to_conformal_frame(map_, u, spec.n)
    return conformal.virial_sides(map_, spec.n, spec.lam, v)


@dataclass(frozen=True)
class IdentityReport:
    pohozaev_lhs: float
    pohozaev_rhs: float
    hardy_ratio: float
    lemma32_min_margin: float
    lemma32_rel_margin: float
    virial_lhs: float
    virial_rhs: float
    rayleigh_bound: float
    lambda_star: float

    @property
    def pohozaev_gap(self) -> float:
        return relative_gap(self.pohozaev_lhs, self.pohozaev_rhs)

    @property
    def virial_gap(self) -> float:
        return relative_gap(self.virial_lhs, self.virial_rhs)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pohozaev_gap"] = self.pohozaev_gap
        d["virial_gap"] = self.virial_gap
        return d


def verify_solution(spec: ProblemSpec, u: RadialFunction, ode_tol: float = ODE_TOL) -> IdentityReport:
    """All identity checks for one accepted solution."""
    from .thresholds import compute_thresholds

    rep = compute_thresholds(spec.profile, spec.n)
    frame = build_frame(spec.profile, spec.n, rep.C)
    plhs, prhs = pohozaev_balance(frame, spec, u, ode_tol)
    cmap = conformal.build_map(spec.profile)
    vlhs, vrhs = virial_balance(cmap, spec, u, ode_tol)
    margin = lemma32_margin(frame, (rep.argmin_D, rep.argmin_mu))
    return IdentityReport(
        pohozaev_lhs=plhs,
        pohozaev_rhs=prhs,
        hardy_ratio=hardy_check(frame, u),
        lemma32_min_margin=margin.value,
        lemma32_rel_margin=margin.relative,
        virial_lhs=vlhs,
        virial_rhs=vrhs,
        rayleigh_bound=rayleigh_lower_bound(frame, u),
        lambda_star=rep.lambda_star,
    )


# ---------------------------------------------------------------------------
# random test functions


def random_splines(R: float, count: int, seed: int, knots: int = SPLINE_KNOTS,
                   n_points: int = 2049) -> list[RadialFunction]:
    """Cubic splines with u(R) = 0 and random knot values.

    Knots are uniform on [0, R]; the values at the first ``knots`` knots are
    standard normals drawn from ``numpy.random.Generator(Philox(seed))`` in
    order, spline after spline.  The end conditions are u'(0) = 0 and
    not-a-knot at R.  Each spline is sampled on ``[0] + hybrid grid``.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    xk = np.linspace(0.0, R, knots + 1)
    x = np.concatenate([[0.0], hybrid_grid(R * 1e-9, R, n_points - 1)])
    out = []
    for _ in range(count):
        yk = np.append(rng.standard_normal(knots), 0.0)
        cs = CubicSpline(xk, yk, bc_type=((1, 0.0), "not-a-knot"))
        vals = cs(x)
        vals[-1] = 0.0
        out.append(RadialFunction(x, vals, cs(x, 1)))
    return out


def hardy_suite(profile, n: float, count: int = 100, seed: int = 0) -> np.ndarray:
    """hardy_ratio of ``count`` seeded random splines."""
    frame = build_frame(profile, n, 0.0)
    return np.array([hardy_check(frame, u) for u in random_splines(profile.R, count, seed)])
