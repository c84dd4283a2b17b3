"""Command line interface: ``bnrad <subcommand> [flags]``.

Exit codes: 0 success, 1 computational error (JSON description on stderr),
2 usage error.  Every output starts with a header carrying the package
version, a SHA-256 hash of the resolved configuration and the seed.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import sys

import click
import numpy as np

from . import __version__
from .errors import BnradError, HypothesisViolation

FORMATS = click.Choice(["json", "csv"])


# ---------------------------------------------------------------------------
# flag validation


def _finite(ctx, param, value):
    if value is not None and not math.isfinite(value):
        raise click.BadParameter("must be a finite number", ctx=ctx, param=param)
    return value


def _positive(ctx, param, value):
    _finite(ctx, param, value)
    if value is not None and not value > 0:
        raise click.BadParameter("must be positive", ctx=ctx, param=param)
    return value


def _dimension(ctx, param, value):
    _finite(ctx, param, value)
    if value is not None and not value > 2:
        raise click.BadParameter("must exceed 2", ctx=ctx, param=param)
    return value


def profile_option(default=None):
    return click.option("--profile", "profile", default=default, required=default is None,
                        help="sinh, x, xexp or an expression in x, e.g. 'x + x^3'")


n_option = click.option("--n", "n", type=float, required=True, callback=_dimension, help="dimension n > 2")
R_option = click.option("--R", "R", type=float, required=True, callback=_positive, help="radius R > 0")
seed_option = click.option("--seed", type=int, default=0, show_default=True, help="seed for random test functions")


def format_option(default="json"):
    return click.option("--format", "fmt", type=FORMATS, default=default, show_default=True)


# ---------------------------------------------------------------------------
# output


def _clean(obj):
    """JSON-ready copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def make_header(subcommand: str, config: dict, seed: int) -> dict:
    canon = json.dumps(_clean({"subcommand": subcommand, **config}), sort_keys=True, separators=(",", ":"))
    return {
        "tool": "bnrad",
        "version": __version__,
        "subcommand": subcommand,
        "config_hash": hashlib.sha256(canon.encode()).hexdigest(),
        "seed": seed,
    }


def _header_line(header: dict) -> str:
    return " ".join(f"{k}={header[k]}" for k in ("tool", "version", "subcommand", "config_hash", "seed"))


def render_json(header: dict, result) -> str:
    return json.dumps(_clean({"header": header, "result": result}), indent=2, sort_keys=True) + "\n"


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if math.isfinite(v) else "nan"
    return str(v)


def render_csv(header: dict, columns, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# {_header_line(header)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_csv_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def emit(text: str, out: str | None, header: dict):
    if out is None:
        click.echo(text, nl=False)
        return
    with open(out, "w", newline="") as fh:
        fh.write(text)
    click.echo(render_json(header, {"written": out}), nl=False)


def fail(exc: Exception):
    payload = exc.to_dict() if isinstance(exc, BnradError) else {"error": type(exc).__name__, "message": str(exc)}
    click.echo(json.dumps(_clean(payload), sort_keys=True), err=True)
    sys.exit(1)


class Group(click.Group):
    """Turns computational exceptions into exit code 1 with JSON on stderr."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (click.exceptions.Exit, click.ClickException, click.Abort):
            raise
        except (BnradError, ArithmeticError, ValueError) as exc:
            fail(exc)


@click.group(cls=Group)
@click.version_option(__version__, prog_name="bnrad")
def main():
    """Non-existence thresholds and numerics for radial Brezis-Nirenberg problems."""


def _profile(spec, R):
    from .profile import make_profile

    return make_profile(spec, R)


def _require_hypotheses(profile):
    from .profile import validate_hypotheses

    rep = validate_hypotheses(profile)
    if not rep.passed:
        raise HypothesisViolation(
            f"profile {profile.name!r} fails hypotheses ({', '.join(rep.failures)}) on (0, {profile.R:g})"
        )
    return rep


# ---------------------------------------------------------------------------
# subcommands


@main.command()
@profile_option()
@R_option
@seed_option
def validate(profile, R, seed):
    """Check a(0) = 0, a' > 0 and a'' >= omega a with omega >= 0."""
    from .profile import validate_hypotheses

    p = _profile(profile, R)
    header = make_header("validate", {"profile": profile, "R": R}, seed)
    report = validate_hypotheses(p)
    emit(render_json(header, {"profile": p.name, "R": R, **report.to_dict()}), None, header)


@main.command()
@profile_option()
@n_option
@R_option
@click.option("--lambda", "lam", type=float, default=None, callback=_finite,
              help="also report which theorem rules out solutions at this lambda")
@format_option()
@seed_option
def thresholds(profile, n, R, lam, fmt, seed):
    """mu* and lambda* for one (profile, n, R)."""
    from .thresholds import ThresholdReport, compute_thresholds

    p = _profile(profile, R)
    _require_hypotheses(p)
    rep = compute_thresholds(p, n)
    header = make_header("thresholds", {"profile": profile, "n": n, "R": R, "lambda": lam}, seed)
    result = {"profile": p.name, "n": n, "R": R, **rep.to_dict(), "winner": rep.winner}
    if lam is not None:
        result["verdict"] = rep.verdict(lam)
    if fmt == "csv":
        cols = ("n", "R") + ThresholdReport.CSV_FIELDS + ("winner",)
        emit(render_csv(header, cols, [result]), None, header)
    else:
        emit(render_json(header, result), None, header)


@main.command()
@profile_option()
@n_option
@R_option
@click.option("--theta0", type=float, default=None, callback=_positive, help="normalisation point (default R/2)")
@click.option("--r0", type=float, default=1.0, show_default=True, callback=_positive, help="r at theta0")
@click.option("--points", type=click.IntRange(min=16), default=2048, show_default=True)
@format_option()
@click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None)
@seed_option
def conformal(profile, n, R, theta0, r0, points, fmt, out, seed):
    """Tabulate theta, r, p, B, V and T of the conformal map."""
    from .conformal import build_map

    if theta0 is not None and not theta0 < R:
        raise click.BadParameter("must lie in (0, R)", param_hint="'--theta0'")
    p = _profile(profile, R)
    _require_hypotheses(p)
    cmap = build_map(p, theta0=theta0, r0=r0, n_grid=points)
    table = cmap.table(n)
    cols = ("theta", "r", "p", "B", "V", "T")
    header = make_header("conformal", {"profile": profile, "n": n, "R": R, "theta0": cmap.theta0,
                                       "r0": r0, "points": points, "format": fmt}, seed)
    if fmt == "csv":
        rows = [dict(zip(cols, vals)) for vals in zip(*(table[c] for c in cols))]
        emit(render_csv(header, cols, rows), out, header)
    else:
        result = {"profile": p.name, "n": n, "R": R, "theta0": cmap.theta0, "r0": cmap.r0,
                  "columns": {c: table[c] for c in cols}}
        emit(render_json(header, result), out, header)


def _label(found, lam, rep) -> str:
    if found:
        return "solution-found"
    if rep is None:
        return "none-found"
    by = [k for k, t in ((1, rep.mu_star), (2, rep.lambda_star)) if lam <= t]
    if not by:
        return "none-found"
    if len(by) == 2:
        return "none-found (consistent with Theorems 1 and 2)"
    return f"none-found (consistent with Theorem {by[0]})"


@main.command()
@profile_option()
@n_option
@R_option
@click.option("--lambda", "lam", type=float, required=True, callback=_finite)
@click.option("--alpha-min", type=float, default=1e-3, show_default=True, callback=_finite)
@click.option("--alpha-max", type=float, default=1e3, show_default=True, callback=_finite)
@click.option("--mode", type=click.Choice(["nonlinear", "linear"]), default="nonlinear", show_default=True)
@click.option("--ode-tol", type=float, default=1e-6, show_default=True, callback=_positive)
@click.option("--scan", "n_scan", type=click.IntRange(min=2), default=64, show_default=True,
              help="number of log-spaced alpha samples")
@click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None,
              help="write the solution as CSV (x, u, du)")
@seed_option
def solve(profile, n, R, lam, alpha_min, alpha_max, mode, ode_tol, n_scan, out, seed):
    """Shoot from the origin for a solution with u'(0) = u(R) = 0."""
    from .profile import ProblemSpec
    from .solver import shoot
    from .thresholds import compute_thresholds

    if not alpha_min < alpha_max:
        raise click.BadParameter("must exceed --alpha-min", param_hint="'--alpha-max'")
    if alpha_min <= 0 <= alpha_max:
        raise click.BadParameter("the alpha range must not contain 0", param_hint="'--alpha-min'")
    p = _profile(profile, R)
    spec = ProblemSpec(p, n, lam)
    try:
        rep = compute_thresholds(p, n)
    except HypothesisViolation:
        rep = None
    config = {"profile": profile, "n": n, "R": R, "lambda": lam, "alpha_min": alpha_min,
              "alpha_max": alpha_max, "mode": mode, "ode_tol": ode_tol, "scan": n_scan}
    header = make_header("solve", config, seed)
    res = shoot(spec, (alpha_min, alpha_max), mode, n_scan=n_scan, ode_tol=ode_tol)
    result = {
        "profile": p.name,
        "n": n,
        "R": R,
        "lambda": lam,
        "mode": mode,
        "found": res is not None,
        "label": _label(res is not None, lam, rep),
        "mu_star": rep.mu_star if rep else None,
        "lambda_star": rep.lambda_star if rep else None,
        "solution": res.to_dict() if res else None,
    }
    if res is not None and out is not None:
        res.solution.to_csv(out, comments=[_header_line(header)])
        result["written"] = out
    emit(render_json(header, result), None, header)


@main.command()
@profile_option()
@n_option
@R_option
@click.option("--method", type=click.Choice(["shoot", "fd", "both"]), default="shoot", show_default=True)
@seed_option
def eig(profile, n, R, method, seed):
    """First eigenvalue of the linear problem."""
    from .solver import first_eigenvalue, first_eigenvalue_fd

    p = _profile(profile, R)
    _require_hypotheses(p)
    header = make_header("eig", {"profile": profile, "n": n, "R": R, "method": method}, seed)
    result = {"profile": p.name, "n": n, "R": R, "method": method}
    if method in ("shoot", "both"):
        result["lambda1"] = first_eigenvalue(p, n)
    if method in ("fd", "both"):
        result["lambda1_fd"] = first_eigenvalue_fd(p, n)
    if method == "fd":
        result["lambda1"] = result["lambda1_fd"]
    emit(render_json(header, result), None, header)


@main.command()
@profile_option()
@n_option
@R_option
@click.option("--lambda", "lam", type=float, default=0.0, callback=_finite)
@click.option("--solution", type=click.Path(exists=True, dir_okay=False), default=None,
              help="CSV with columns x, u, du (as written by solve --out)")
@click.option("--splines", type=click.IntRange(min=0), default=0, show_default=True,
              help="also run the Hardy inequality on this many seeded random splines")
@click.option("--ode-tol", type=float, default=1e-6, show_default=True, callback=_positive)
@seed_option
def verify(profile, n, R, lam, solution, splines, ode_tol, seed):
    """Integral identities on a solution and/or the seeded Hardy spline suite."""
    from . import identities
    from .profile import ProblemSpec
    from .radial import RadialFunction
    from .thresholds import compute_thresholds

    if solution is None and splines == 0:
        raise click.UsageError("give --solution and/or --splines")
    p = _profile(profile, R)
    _require_hypotheses(p)
    config = {"profile": profile, "n": n, "R": R, "lambda": lam, "solution": solution,
              "splines": splines, "ode_tol": ode_tol}
    header = make_header("verify", config, seed)
    result = {"profile": p.name, "n": n, "R": R, "lambda": lam}
    rep = compute_thresholds(p, n)
    frame = identities.build_frame(p, n, rep.C)
    result["auxiliary"] = identities.auxiliary_monotonicity(frame)
    if solution is not None:
        u = RadialFunction.from_csv(solution)
        if abs(u.grid[0]) > 0 or abs(u.grid[-1] - R) > 1e-12 * R:
            raise click.BadParameter(f"solution grid must span [0, {R:g}]", param_hint="'--solution'")
        report = identities.verify_solution(ProblemSpec(p, n, lam), u, ode_tol)
        result["identities"] = report.to_dict()
    if splines:
        ratios = identities.hardy_suite(p, n, splines, seed)
        result["hardy_suite"] = {
            "count": int(ratios.size),
            "generator": "numpy Philox",
            "max_ratio": float(ratios.max()),
            "min_ratio": float(ratios.min()),
            "all_below_one": bool(np.all(ratios < 1.0)),
        }
    emit(render_json(header, result), None, header)


def _range_options(f):
    for name, default in (("--R-steps", 20), ("--R-max", 5.0), ("--R-min", 0.1),
                          ("--n-steps", 20), ("--n-max", 9.0), ("--n-min", 2.1)):
        if name.endswith("steps"):
            f = click.option(name, type=click.IntRange(min=1), default=default, show_default=True)(f)
        elif name.startswith("--n"):
            f = click.option(name, type=float, default=default, show_default=True, callback=_dimension)(f)
        else:
            f = click.option(name, type=float, default=default, show_default=True, callback=_positive)(f)
    return f


def _run_sweep(name, profile, n_min, n_max, n_steps, R_min, R_max, R_steps, eig_flag, fmt, out, seed):
    from .casebook import grid, sweep, sweep_columns

    if n_max < n_min:
        raise click.BadParameter("must be at least --n-min", param_hint="'--n-max'")
    if R_max < R_min:
        raise click.BadParameter("must be at least --R-min", param_hint="'--R-max'")
    _profile(profile, R_max)
    config = {"profile": profile, "n_min": n_min, "n_max": n_max, "n_steps": n_steps, "R_min": R_min,
              "R_max": R_max, "R_steps": R_steps, "eig": eig_flag, "format": fmt}
    header = make_header(name, config, seed)
    rows = sweep(profile, grid(n_min, n_max, n_steps), grid(R_min, R_max, R_steps), eig=eig_flag)
    cols = sweep_columns(eig_flag)
    if fmt == "csv":
        emit(render_csv(header, cols, rows), out, header)
    else:
        emit(render_json(header, {"profile": profile, "columns": list(cols), "rows": rows}), out, header)


@main.command(name="sweep")
@profile_option()
@_range_options
@click.option("--eig", "eig_flag", is_flag=True, help="add the first eigenvalue column lambda1")
@format_option()
@click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None)
@seed_option
def sweep_cmd(profile, n_min, n_max, n_steps, r_min, r_max, r_steps, eig_flag, fmt, out, seed):
    """Thresholds over an (n, R) grid for any profile."""
    _run_sweep("sweep", profile, n_min, n_max, n_steps, r_min, r_max, r_steps, eig_flag, fmt, out, seed)


@main.command()
@profile_option(default="xexp")
@_range_options
@format_option()
@click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None)
@seed_option
@click.pass_context
def casebook(ctx, profile, n_min, n_max, n_steps, r_min, r_max, r_steps, fmt, out, seed):
    """(n, R) table with the x e^x comparison function F and crossover curves."""
    explicit = ctx.get_parameter_source("fmt") is click.core.ParameterSource.COMMANDLINE
    if out is not None and out.endswith(".csv") and not explicit:
        fmt = "csv"
    _run_sweep("casebook", profile, n_min, n_max, n_steps, r_min, r_max, r_steps, False, fmt, out, seed)


if __name__ == "__main__":
    main()
