import math

import numpy as np
import pytest

from bnrad import conformal
from bnrad.profile import ProblemSpec, make_builtin, parse_profile
from bnrad.radial import RadialFunction
from bnrad.solver import shoot

TOL = {
    "a_eq_pr": 1e-10,
    "dr_dtheta": 1e-8,
    "d2r_dtheta2": 1e-6,
    "B_identity": 1e-7,
    "V_forms": 1e-7,
    "T_forms": 1e-7,
    "virial_potential": 1e-6,
}


@pytest.mark.parametrize("name", ["sinh", "x", "xexp"])
@pytest.mark.parametrize("R", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("n", [3, 4.5])
def test_identity_residuals(name, R, n):
    res = conformal.identity_residuals(conformal.build_map(make_builtin(name, R)), n)
    for key, tol in TOL.items():
        assert res[key] < tol, (key, res[key])


def test_map_is_monotone_and_positive():
    m = conformal.build_map(make_builtin("xexp", 2.0))
    assert np.all(np.diff(m.r) > 0) and np.all(m.p > 0)


def test_sinh_normalised_factor():
    theta0 = 2 * math.atanh(0.5)
    m = conformal.build_map(make_builtin("sinh", 2.0), theta0=theta0, r0=0.5)
    np.testing.assert_allclose(m.r, np.tanh(m.grid / 2), rtol=1e-11)
    np.testing.assert_allclose(m.p, 2 / (1 - m.r**2), rtol=1e-11)


def test_sinh_default_constant_one():
    # integrating constant 1 at theta0: r = tanh(theta/2) / tanh(theta0/2)
    theta0 = 2 * math.atanh(0.5)
    m = conformal.build_map(make_builtin("sinh", 2.0), theta0=theta0)
    np.testing.assert_allclose(m.r, 2 * np.tanh(m.grid / 2), rtol=1e-11)


def test_linear_map_is_identity():
    m = conformal.build_map(make_builtin("x", 2.0), theta0=1.0)
    np.testing.assert_allclose(m.r, m.grid, rtol=1e-12)
    np.testing.assert_allclose(m.p, 1.0, rtol=1e-12)


def test_rescaling_is_covariant():
    m = conformal.build_map(make_builtin("xexp", 1.0))
    k = m.rescaled(3.0 * m.r0)
    np.testing.assert_allclose(k.r, 3.0 * m.r, rtol=1e-14)
    a = conformal.identity_residuals(m, 3)
    b = conformal.identity_residuals(k, 3)
    # identity residuals are roundoff-level, so only their size is covariant
    for key in a:
        assert b[key] == pytest.approx(a[key], rel=1e-2, abs=1e-7)


def test_potential_special_cases():
    lin = conformal.potential_eval(conformal.build_map(make_builtin("x", 1.0)), 3)
    th = np.linspace(0.01, 1.0, 50)
    assert np.max(np.abs(lin.V(th))) < 1e-9
    sinh = conformal.potential_eval(conformal.build_map(make_builtin("sinh", 1.0)), 3)
    np.testing.assert_allclose(sinh.T(th), 3.0, rtol=1e-14)
    xexp = conformal.potential_eval(conformal.build_map(make_builtin("xexp", 2.0)), 3)
    assert float(xexp.T(1.0)) == pytest.approx(8.0, rel=1e-14)


def test_operator_equivalence_on_constants_and_linear_case():
    m = conformal.build_map(make_builtin("sinh", 1.0))
    assert conformal.operator_equivalence_residual(m, lambda t: 2.5 + 0 * t, 3) < 1e-7
    lin = conformal.build_map(make_builtin("x", 1.0), theta0=0.5, r0=0.5)
    assert conformal.operator_equivalence_residual(lin, lambda t: t * t, 3) < 1e-7


@pytest.mark.parametrize("name", ["sinh", "xexp"])
def test_operator_equivalence_smooth(name):
    m = conformal.build_map(make_builtin(name, 1.0))
    assert conformal.operator_equivalence_residual(m, np.cos, 3) < 1e-5


def test_operator_equivalence_on_expression_profile():
    m = conformal.build_map(parse_profile("x + x^3", 1.0))
    assert conformal.operator_equivalence_residual(m, np.cos, 4) < 1e-5


def test_substitution_consistency():
    m = conformal.build_map(make_builtin("sinh", 1.0))
    for f in (np.cos, lambda t: 1 - t**2):
        assert conformal.substitution_residual(m, f, 3, 2.0) < 1e-5


def test_virial_integrand_vanishes():
    m = conformal.build_map(make_builtin("sinh", 1.0))
    th = np.linspace(0.0, 1.0, 201)
    u = RadialFunction(th, np.cos(th), -np.sin(th))
    v = conformal.to_conformal_frame(m, u, 3)
    # T = n for sinh, so lam = (n-2) n / 4 kills the bracket
    assert np.max(np.abs(conformal.virial_rhs_integrand(m, 3, 0.75, v).values)) < 1e-12
    zero = RadialFunction(th, 0 * th, 0 * th)
    vz = conformal.to_conformal_frame(m, zero, 3)
    assert conformal.virial_sides(m, 3, 2.0, vz) == (0.0, 0.0)


def test_virial_on_solution():
    spec = ProblemSpec(make_builtin("sinh", 1.0), 3, 5.0)
    res = shoot(spec)
    assert res is not None
    m = conformal.build_map(spec.profile)
    v = conformal.to_conformal_frame(m, res.solution, 3)
    lhs, rhs = conformal.virial_sides(m, 3, 5.0, v)
    assert abs(lhs - rhs) / (abs(lhs) + abs(rhs)) < 1e-4


def test_table_columns():
    t = conformal.build_map(make_builtin("sinh", 1.0), n_grid=64).table(3)
    assert list(t) == ["theta", "r", "p", "B", "V", "T"]
    assert all(len(v) == len(t["theta"]) for v in t.values())


def test_theta0_outside_interval():
    with pytest.raises(ValueError):
        conformal.build_map(make_builtin("sinh", 1.0), theta0=1.5)
