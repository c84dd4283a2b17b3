"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` (the lines are repeated in the
terminal summary) or ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import functools
import math
import time

import numpy as np
import pytest

from bnrad import casebook, conformal, identities
from bnrad.numerics import relative_gap
from bnrad.profile import ProblemSpec, make_builtin
from bnrad.solver import Mode, first_eigenvalue, first_eigenvalue_fd, integrate_from_origin, shoot
from bnrad.thresholds import compute_thresholds

try:
    from conftest import record
except ImportError:  # run as a script
    def record(line):
        print(line)


BUILTINS = ("sinh", "x", "xexp")
MATRIX_N = (3, 4, 5)
MATRIX_R = (0.5, 1.0, 2.0)


def report(number: int, title: str, ok: bool, detail: str) -> bool:
    record(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} -- {detail}")
    return ok


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


# ---------------------------------------------------------------------------


def criterion_1():
    t0 = time.perf_counter()
    worst = 0.0
    for n in (3, 4, 5, 6):
        for R in (0.5, 1.0, 2.0):
            rep = compute_thresholds(make_builtin("sinh", R), n)
            worst = max(worst, rel(rep.mu_star, n * (n - 2) / 4), rel(rep.lambda_star, n * n * (n - 1) / (4 * (n + 2))))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-9 and elapsed < 1.0
    return report(1, "hyperbolic thresholds", ok, f"max rel err {worst:.2e} (tol 1e-09), {elapsed:.2f}s (limit 1s)")


def criterion_2():
    worst = 0.0
    for n in (3, 4, 5, 6):
        for R in (0.5, 1.0, 2.0):
            rep = compute_thresholds(make_builtin("x", R), n)
            worst = max(worst, *(abs(v) for v in (rep.D, rep.omega, rep.C, rep.mu_star, rep.lambda_star)))
    return report(2, "Euclidean degeneracy", worst <= 1e-12, f"max |threshold| {worst:.2e} (tol 1e-12)")


def criterion_3():
    t0 = time.perf_counter()
    worst = 0.0
    for n in np.linspace(2.1, 10.0, 50):
        for R in np.linspace(0.1, 10.0, 50):
            rep = compute_thresholds(make_builtin("xexp", R), n)
            if casebook.lambda_star_formula_valid(n, R):
                lam = casebook.closed_lambda_star(n, R)
            else:
                lam = casebook.closed_quarter_D_lambda_star(n, R)
            worst = max(worst, rel(rep.mu_star, casebook.closed_mu_star(n, R)), rel(rep.lambda_star, lam))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-8 and elapsed < 30.0
    return report(3, "x e^x dual-path agreement (50x50)", ok,
                  f"max rel err {worst:.2e} (tol 1e-08), {elapsed:.1f}s (limit 30s)")


def criterion_4():
    nh = casebook.n_hat(2.0)
    nt2 = casebook.n_tilde(2.0)
    nt_inf = casebook.n_tilde(1e8)
    ok = abs(nh - 2.35078) < 5e-6 and abs(nt2 - 8.0) < 1e-9 and 4.0 < nt_inf < 4.001
    return report(4, "crossover constants", ok,
                  f"n_hat(2)={nh:.8f}, n_tilde(2)={nt2:.12f}, n_tilde(1e8)={nt_inf:.9f}")


@functools.lru_cache(maxsize=None)
def _xexp_sweep():
    return casebook.sweep("xexp", np.linspace(2.1, 10.0, 50), np.linspace(0.1, 10.0, 50))


def criterion_5_sign():
    mismatches, valid = [], 0
    for row in _xexp_sweep():
        if row["error"] or not casebook.lambda_star_formula_valid(row["n"], row["R"]):
            continue
        valid += 1
        if np.sign(row["F"]) != np.sign(row["lambda_star"] - row["mu_star"]):
            mismatches.append((row["n"], row["R"]))
    return report(5, "sign(F) matches sign(lambda*-mu*)", not mismatches and valid > 0,
                  f"{valid} valid cells, {len(mismatches)} mismatches")


def criterion_5_n_ge_4():
    bad = [(r["n"], r["R"]) for r in _xexp_sweep()
           if r["n"] >= 4 and casebook.lambda_star_formula_valid(r["n"], r["R"]) and r["lambda_star"] < r["mu_star"]]
    cells = sum(1 for r in _xexp_sweep() if r["n"] >= 4)
    detail = f"{len(bad)} of {cells} cells with n >= 4 have lambda* < mu*"
    if bad:
        n, R = bad[0]
        detail += (f"; e.g. n={n:.3f}, R={R:.3f}: mu*={casebook.closed_mu_star(n, R):.6g}, "
                   f"lambda*={casebook.closed_lambda_star(n, R):.6g}, F={casebook.comparison_F(n, R):.6g}")
    return report(5, "lambda* >= mu* for all n >= 4", not bad, detail)


def criterion_6():
    t0 = time.perf_counter()
    worst, count = 0.0, 0
    for name in BUILTINS:
        for n in (3, 4, 5):
            ratios = identities.hardy_suite(make_builtin(name, 1.0), n, count=100, seed=20240601)
            worst = max(worst, float(ratios.max()))
            count += ratios.size
    elapsed = time.perf_counter() - t0
    ok = worst < 1.0 and elapsed < 10.0
    return report(6, "Hardy random-spline suite", ok,
                  f"{count} splines, max ratio {worst:.4f} (< 1), {elapsed:.1f}s (limit 10s)")


def criterion_7():
    worst, where = math.inf, None
    for name in BUILTINS:
        for n in np.linspace(2.1, 10.0, 8):
            for R in np.linspace(0.1, 10.0, 8):
                p = make_builtin(name, R)
                rep = compute_thresholds(p, n)
                frame = identities.build_frame(p, n, rep.C)
                m = identities.lemma32_margin(frame, (rep.argmin_D, rep.argmin_mu))
                if m.value < worst:
                    worst, where = m.value, (name, n, R)
    return report(7, "pointwise S >= C G^2/G' margin over sweep grid", worst >= -1e-9,
                  f"min margin {worst:.3e} at {where[0]} n={where[1]:.3f} R={where[2]:.3f} (tol -1e-09)")


def criterion_8():
    lam1 = first_eigenvalue(make_builtin("x", math.pi), 3)
    sinc_err = abs(lam1 - 1.0)
    spec = ProblemSpec(make_builtin("x", 4.0), 3, 1.0)
    u = integrate_from_origin(spec, 1.0, Mode.LINEAR)
    x = u.grid
    sinc = np.sinc(x / np.pi)
    curve_err = float(np.max(np.abs(u.values - sinc)))
    worst = 0.0
    for name in BUILTINS:
        for n in (3, 4, 5):
            p = make_builtin(name, 1.0)
            worst = max(worst, rel(first_eigenvalue(p, n), first_eigenvalue_fd(p, n)))
    ok = sinc_err < 1e-8 and curve_err < 1e-8 and worst < 1e-6
    return report(8, "solver oracles", ok,
                  f"|lambda1-1|={sinc_err:.2e}, max|u-sinc|={curve_err:.2e} (tol 1e-08), "
                  f"shoot vs FD max rel {worst:.2e} (tol 1e-06)")


@functools.lru_cache(maxsize=None)
def _shooting_matrix():
    """All shooting runs for criteria 9 and 10."""
    forbidden, accepted = [], []
    for name in BUILTINS:
        for n in MATRIX_N:
            for R in MATRIX_R:
                p = make_builtin(name, R)
                rep = compute_thresholds(p, n)
                lam1 = first_eigenvalue(p, n)
                t = min(rep.mu_star, rep.lambda_star)
                top = max(rep.mu_star, rep.lambda_star)
                for lam in sorted({0.0, 0.5 * t, t, top}):
                    res = shoot(ProblemSpec(p, n, lam))
                    forbidden.append((name, n, R, lam, res))
                for frac in (0.25, 0.5, 0.75, 1.25):
                    lam = top + frac * (lam1 - top)
                    spec = ProblemSpec(p, n, lam)
                    res = shoot(spec)
                    if res is not None:
                        accepted.append((name, n, R, lam, rep, lam1, spec, res))
    return forbidden, accepted


def criterion_9():
    forbidden, accepted = _shooting_matrix()
    found = [(c[0], c[1], c[2], c[3]) for c in forbidden if c[4] is not None]
    bad = []
    positive = 0
    for name, n, R, lam, rep, lam1, _, res in accepted:
        if not lam > max(rep.mu_star, rep.lambda_star):
            bad.append((name, n, R, lam, "below threshold"))
        if res.n_sign_changes == 0:
            positive += 1
            if not lam < lam1:
                bad.append((name, n, R, lam, "positive solution at lambda >= lambda1"))
    ok = not found and not bad
    return report(9, "non-existence consistency", ok,
                  f"{len(forbidden)} runs at lambda <= thresholds, {len(found)} solutions found; "
                  f"{len(accepted)} accepted above ({positive} positive), {len(bad)} violations")


def criterion_10():
    _, accepted = _shooting_matrix()
    worst_p = worst_v = 0.0
    maps = {}
    for name, n, R, lam, rep, lam1, spec, res in accepted:
        frame = identities.build_frame(spec.profile, n, rep.C)
        lhs, rhs = identities.pohozaev_balance(frame, spec, res.solution)
        worst_p = max(worst_p, relative_gap(lhs, rhs))
        cmap = maps.setdefault((name, R), conformal.build_map(spec.profile))
        vl, vr = identities.virial_balance(cmap, spec, res.solution)
        worst_v = max(worst_v, relative_gap(vl, vr))
    ok = bool(accepted) and worst_p < 1e-4 and worst_v < 1e-3
    return report(10, "identity residuals on solutions", ok,
                  f"{len(accepted)} solutions, max Pohozaev gap {worst_p:.2e} (tol 1e-04), "
                  f"max virial gap {worst_v:.2e} (tol 1e-03)")


def criterion_11():
    worst_p = 0.0
    worst_op = 0.0
    for R in (0.5, 1.0, 2.0):
        p = make_builtin("sinh", R)
        theta0 = min(2.0 * math.atanh(0.5), 0.5 * R)
        cmap = conformal.build_map(p, theta0=theta0, r0=math.tanh(theta0 / 2.0))
        mask = cmap.grid >= R * 1e-4
        r = cmap.r[mask]
        worst_p = max(worst_p, float(np.max(np.abs(cmap.p[mask] - 2.0 / (1.0 - r * r)) / (2.0 / (1.0 - r * r)))))
        suite = (np.cos, lambda t: t * t, lambda t: np.exp(-t), lambda t: np.cos(np.pi * t / (2 * R)))
        for n in (3, 4, 5):
            for f in suite:
                worst_op = max(worst_op, conformal.operator_equivalence_residual(cmap, f, n))
    ok = worst_p < 1e-9 and worst_op < 1e-5
    return report(11, "conformal construction", ok,
                  f"max rel |p - 2/(1-r^2)| {worst_p:.2e} (tol 1e-09), operator residual {worst_op:.2e} (tol 1e-05)")


# ---------------------------------------------------------------------------

CRITERIA = [
    criterion_1, criterion_2, criterion_3, criterion_4, criterion_5_sign, criterion_5_n_ge_4,
    criterion_6, criterion_7, criterion_8, criterion_9, criterion_10, criterion_11,
]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[c.__name__ for c in CRITERIA])
def test_criterion(criterion):
    assert criterion()


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria passed")
