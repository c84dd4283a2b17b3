"""Change of variables theta -> r(theta) that writes the radial operator
``u'' + (n-1) a'/a u'`` as ``p^-n div(p^(n-2) grad u)`` in Euclidean radius r.

r is fixed by ``a = p r`` and ``dr/dtheta = 1/p``, i.e. ``log r`` is a primitive
of ``1/a``; it is determined up to a multiplicative constant, pinned here by
the value ``r0`` taken at ``theta0``.  All identity checks below are
invariant under that rescaling.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import GridMismatch, QuadratureFailure
from .numerics import cumulative_quad, derivative, hybrid_grid, simpson
from .radial import RadialFunction

log = logging.getLogger(__name__)

GRID_LOWER = 1e-6
CHECK_LOWER = 1e-4


@dataclass(frozen=True)
class ConformalMap:
    profile: object
    theta0: float
    r0: float
    grid: np.ndarray = field(repr=False)
    log_r: np.ndarray = field(repr=False)

    @property
    def R(self) -> float:
        return self.profile.R

    @property
    def r(self) -> np.ndarray:
        return np.exp(self.log_r)

    @property
    def p(self) -> np.ndarray:
        return self.profile.eval0(self.grid) / self.r

    @property
    def B(self) -> np.ndarray:
        return self.profile.eval1(self.grid) / self.profile.eval0(self.grid)

    def _inv_a(self, t):
        return 1.0 / self.profile.eval0(t)

    def log_r_of_theta(self, theta) -> np.ndarray:
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        k = np.clip(np.searchsorted(self.grid, th), 0, self.grid.size - 1)
        left = np.clip(k - 1, 0, self.grid.size - 1)
        closer_left = np.abs(self.grid[left] - th) < np.abs(self.grid[k] - th)
        k = np.where(closer_left, left, k)
        out = self.log_r[k].copy()
        for i in np.flatnonzero(th != self.grid[k]):
            val, _ = integrate.quad(self._inv_a, self.grid[k[i]], th[i], epsabs=1e-14, epsrel=1e-13, limit=200)
            out[i] += val
        return out if np.ndim(theta) else out[0]

    def r_of_theta(self, theta):
        return np.exp(self.log_r_of_theta(theta))

    def p_of_theta(self, theta):
        return self.profile.eval0(theta) / self.r_of_theta(theta)

    def B_of_theta(self, theta):
        return self.profile.eval1(theta) / self.profile.eval0(theta)

    def dB_dtheta(self, theta):
        a, a1, a2, _ = self.profile.derivatives(theta)
        B = a1 / a
        return a2 / a - B * B

    def d2B_dtheta2(self, theta):
        a, a1, a2, a3 = self.profile.derivatives(theta)
        B = a1 / a
        dB = a2 / a - B * B
        return a3 / a - a2 * a1 / (a * a) - 2.0 * B * dB

    def resample(self, grid) -> "ConformalMap":
        """Same map with log r evaluated on another grid inside (0, R]."""
        grid = np.asarray(grid, dtype=float)
        if grid[0] <= 0.0 or grid[-1] > self.R * (1 + 1e-12) or np.any(np.diff(grid) <= 0):
            raise GridMismatch("resampling grid must be increasing inside (0, R]")
        return ConformalMap(self.profile, self.theta0, self.r0, grid, self.log_r_of_theta(grid))

    def rescaled(self, r0: float) -> "ConformalMap":
        """Same map with a different integrating constant."""
        shift = np.log(r0) - np.log(self.r0)
        return ConformalMap(self.profile, self.theta0, r0, self.grid, self.log_r + shift)

    def table(self, n: float) -> dict[str, np.ndarray]:
        pot = potential_eval(self, n)
        return {
            "theta": self.grid,
            "r": self.r,
            "p": self.p,
            "B": self.B,
            "V": pot.V(self.grid),
            "T": pot.T(self.grid),
        }


def build_map(profile, theta0: float | None = None, r0: float = 1.0, n_grid: int = 2048,
              lower: float = GRID_LOWER) -> ConformalMap:
    """Integrate ``d log r / d theta = 1/a`` on a geometric+uniform grid over ``[R*lower, R]``."""
    R = profile.R
    theta0 = R / 2.0 if theta0 is None else float(theta0)
    if not 0.0 < theta0 < R:
        raise ValueError(f"theta0 must lie in (0, R), got {theta0!r}")
    grid = hybrid_grid(R * lower, R, n_grid)
    inv_a = lambda t: 1.0 / profile.eval0(t)  # noqa: E731
    with np.errstate(all="raise"):
        try:
            cum = cumulative_quad(inv_a, grid)
            k = int(np.clip(np.searchsorted(grid, theta0) - 1, 0, grid.size - 1))
            tail, _ = integrate.quad(inv_a, grid[k], theta0, epsabs=1e-14, epsrel=1e-13)
        except FloatingPointError as exc:
            raise QuadratureFailure(f"1/a is not integrable on [{grid[0]:.3g}, {R:.3g}]: {exc}") from exc
    log_r = np.log(r0) + cum - (cum[k] + tail)
    if not np.all(np.isfinite(log_r)):
        raise QuadratureFailure("non-finite log r on the map grid")
    return ConformalMap(profile, theta0, float(r0), grid, log_r)


# ---------------------------------------------------------------------------
# operators


def _on_test_grid(map_: ConformalMap, u, n_points: int):
    """Uniform resampled map plus samples of ``u``.

    Smooth test functions are differenced on a uniform theta grid: second
    differences on the geometric cache grid are roundoff-dominated near 0.
    """
    if isinstance(u, RadialFunction):
        keep = u.grid > 0
        if u.grid[-1] > map_.R * (1 + 1e-12) or np.count_nonzero(keep) < 5:
            raise GridMismatch("test function grid must lie in [0, R] with at least 5 positive nodes")
        return map_.resample(u.grid[keep]), u.values[keep]
    grid = np.linspace(map_.R * GRID_LOWER, map_.R, n_points)
    m = map_.resample(grid)
    return m, np.asarray(u(grid), dtype=float) * np.ones_like(grid)


def H_operator(map_: ConformalMap, values: np.ndarray, n: float, width: int = 5) -> np.ndarray:
    """u'' + (n-1) a'/a u' by differencing in theta."""
    th = map_.grid
    return derivative(th, values, 2, width) + (n - 1.0) * map_.B * derivative(th, values, 1, width)


def L_operator(map_: ConformalMap, values: np.ndarray, n: float, width: int = 5) -> np.ndarray:
    """p^-n r^(1-n) d/dr (r^(n-1) p^(n-2) du/dr) by nested differencing in r."""
    r, p = map_.r, map_.p
    flux = r ** (n - 1.0) * p ** (n - 2.0) * derivative(r, values, 1, width)
    return p ** (-n) * r ** (1.0 - n) * derivative(r, flux, 1, width)


def _check_mask(map_: ConformalMap, trim: int = 2) -> np.ndarray:
    mask = map_.grid >= map_.R * CHECK_LOWER
    mask[:trim] = False
    mask[-trim:] = False
    return mask


def operator_equivalence_residual(map_: ConformalMap, u, n: float, n_points: int = 4096) -> float:
    """max |H(u) - L(u)| over nodes in [R*1e-4, R] away from the stencil ends.

    ``u`` is a callable of theta (sampled on a uniform grid of ``n_points``)
    or a RadialFunction sampled on its own grid.
    """
    m, vals = _on_test_grid(map_, u, n_points)
    # 7-point stencils: the flux behaves like theta^n near 0 and must be
    # differenced exactly there for integer n up to 6
    diff = np.abs(H_operator(m, vals, n, 7) - L_operator(m, vals, n, 7))
    mask = _check_mask(m, trim=4)
    if np.any(~mask):
        log.debug("operator residual outside checked nodes: %.3g", diff[~mask].max())
    return float(diff[mask].max())


@dataclass(frozen=True)
class PotentialEval:
    """The potential V of the transformed equation and the function T."""

    map: ConformalMap = field(repr=False)
    n: float

    def V(self, theta):
        """Potential in terms of B, p and r (well conditioned near 0)."""
        n = self.n
        p = self.map.p_of_theta(theta)
        r = self.map.r_of_theta(theta)
        B = self.map.B_of_theta(theta)
        # dB/dr = p dB/dtheta
        return (n - 2.0) * (n / 4.0 * p**2 * B**2 + 0.5 * p**2 * self.map.dB_dtheta(theta)
                            - (n - 2.0) / (4.0 * r**2))

    def V_on_grid(self) -> np.ndarray:
        m, n = self.map, self.n
        p, r, B = m.p, m.r, m.B
        return (n - 2.0) * (n / 4.0 * p**2 * B**2 + 0.5 * p**2 * m.dB_dtheta(m.grid)
                            - (n - 2.0) / (4.0 * r**2))

    def V_from_p_derivatives(self) -> np.ndarray:
        """Potential from p, dp/dr and d2p/dr2, differenced on the r grid."""
        m, n = self.map, self.n
        r, p = m.r, m.p
        pd = derivative(r, p, 1)
        pdd = derivative(r, p, 2)
        return (n - 2.0) * (0.5 * pdd / p + 0.25 * (n - 4.0) * (pd / p) ** 2 + 0.5 * (n - 1.0) * pd / (r * p))

    def T(self, theta):
        """(n-1) a''/a + a'''/a'."""
        a, a1, a2, a3 = self.map.profile.derivatives(theta)
        return (self.n - 1.0) * (a2 / a) + a3 / a1

    def T_from_B(self, differenced: bool = True) -> np.ndarray:
        """n B^2 + (n+2) B' + B''/B with theta-derivatives of the cached B."""
        m, n = self.map, self.n
        B = m.B
        if differenced:
            dB, ddB = derivative(m.grid, B, 1, width=7), derivative(m.grid, B, 2, width=7)
        else:
            dB, ddB = m.dB_dtheta(m.grid), m.d2B_dtheta2(m.grid)
        return n * B**2 + (n + 1.0) * dB + ddB / B + dB


def potential_eval(map_: ConformalMap, n: float) -> PotentialEval:
    if not n > 2:
        raise ValueError(f"n must exceed 2, got {n!r}")
    return PotentialEval(map_, float(n))


def _scaled(lhs, rhs, scale):
    return np.abs(lhs - rhs) / np.maximum(np.abs(scale), 1e-300)


def identity_residuals(map_: ConformalMap, n: float) -> dict[str, float]:
    """Defects of the pointwise identities behind the transform, each divided
    by the magnitude of the terms it balances.

    Keys: ``a_eq_pr`` (a = p r), ``dr_dtheta`` (dr/dtheta = 1/p),
    ``d2r_dtheta2`` (r'' = -p_r/p^3, scale r'/theta), ``B_identity``
    (a'/a = 1/(p r) + p_r/p^2), ``V_forms`` (B-based V against the form in
    p_r, p_rr), ``T_forms`` (B-based T with differenced B against the a-based
    T), ``virial_potential`` ((1/2) r V_r + V against (n-2)/4 r B p^3 T).
    Measured on nodes in ``[R*1e-4, R]``.
    """
    m = map_
    th, r, p, B = m.grid, m.r, m.p, m.B
    a = m.profile.eval0(th)
    mask = _check_mask(m)
    pot = potential_eval(m, n)
    pd = derivative(r, p, 1)
    dB = m.dB_dtheta(th)
    V = pot.V_on_grid()
    V_terms = abs(n - 2.0) * (n / 4.0 * p**2 * B**2 + 0.5 * p**2 * np.abs(dB) + (n - 2.0) / (4.0 * r**2))
    T = pot.T(th)
    T_B = pot.T_from_B(differenced=True)
    T_terms = n * B**2 + (n + 2.0) * np.abs(dB) + np.abs(m.d2B_dtheta2(th) / B) + 1.0
    Vr = derivative(r, V, 1)
    rhs19 = (n - 2.0) / 4.0 * r * B * p**3 * T
    out = {
        "a_eq_pr": _scaled(a, p * r, a),
        "dr_dtheta": _scaled(derivative(th, r, 1), 1.0 / p, 1.0 / p),
        "d2r_dtheta2": _scaled(derivative(th, r, 2), -pd / p**3, 1.0 / (p * th)),
        "B_identity": _scaled(B, 1.0 / (p * r) + pd / p**2, B),
        "V_forms": _scaled(V, pot.V_from_p_derivatives(), V_terms),
        "T_forms": _scaled(T_B, T, T_terms),
        "virial_potential": _scaled(0.5 * r * Vr + V, rhs19, np.abs(0.5 * r * Vr) + V_terms + np.abs(rhs19)),
    }
    return {k: float(v[mask].max()) for k, v in out.items()}


def substitution_residual(map_: ConformalMap, u, n: float, lam: float, n_points: int = 4096) -> float:
    """Compare the transformed equation's residual for v = p^(n/2-1) u with
    p^(1+n/2) times the residual of -L(u) = lam u + |u|^(4/(n-2)) u.
    """
    map_, vals = _on_test_grid(map_, u, n_points)
    r, p = map_.r, map_.p
    expo = 4.0 / (n - 2.0)
    res_u = -L_operator(map_, vals, n) - lam * vals - np.abs(vals) ** expo * vals
    v = p ** (n / 2.0 - 1.0) * vals
    V = potential_eval(map_, n).V_on_grid()
    res_v = (-derivative(r, v, 2) - (n - 1.0) / r * derivative(r, v, 1) + V * v
             - lam * p**2 * v - np.abs(v) ** expo * v)
    scaled = p ** (1.0 + n / 2.0) * res_u
    scale = 1.0 + np.abs(p ** (1.0 + n / 2.0) * lam * vals) + np.abs(V * v)
    return float((np.abs(res_v - scaled) / scale)[_check_mask(map_)].max())


# ---------------------------------------------------------------------------
# virial identity


def to_conformal_frame(map_: ConformalMap, u: RadialFunction, n: float) -> RadialFunction:
    """v = p^(n/2-1) u on the r grid (nodes with theta > 0 only).

    ``derivs`` holds dv/dr from the chain rule with u'.
    """
    keep = u.grid > 0
    th = u.grid[keep]
    a, a1 = map_.profile.eval0(th), map_.profile.eval1(th)
    r = map_.r_of_theta(th)
    p = a / r
    dp = (a1 - 1.0) / r  # dp/dtheta
    uu, du = u.values[keep], u.derivs[keep]
    k = n / 2.0 - 1.0
    v = p**k * uu
    dv_dtheta = k * p ** (k - 1.0) * dp * uu + p**k * du
    return RadialFunction(r, v, p * dv_dtheta, theta=th)


def virial_rhs_integrand(map_: ConformalMap, n: float, lam: float, v: RadialFunction) -> RadialFunction:
    """v^2 p^3 B [lam - (n-2)/4 T] r^n on the r grid of ``v``."""
    if v.theta is None:
        raise GridMismatch("v must carry its theta nodes (use to_conformal_frame)")
    th, r = v.theta, v.grid
    p = map_.profile.eval0(th) / r
    B = map_.B_of_theta(th)
    T = potential_eval(map_, n).T(th)
    vals = v.values**2 * p**3 * B * (lam - (n - 2.0) / 4.0 * T) * r**n
    return RadialFunction(r, vals, np.zeros_like(vals), theta=th)


def virial_sides(map_: ConformalMap, n: float, lam: float, v: RadialFunction) -> tuple[float, float]:
    """(1/2 r(R)^n v_r(R)^2, integral of the virial integrand dr)."""
    integrand = virial_rhs_integrand(map_, n, lam, v)
    lhs = 0.5 * v.grid[-1] ** n * v.derivs[-1] ** 2
    rhs = simpson(integrand.values, integrand.grid)
    return float(lhs), rhs
