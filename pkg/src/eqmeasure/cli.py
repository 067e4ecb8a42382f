"""Command-line interface: solve, scan, validate, operator, particles.

Every subcommand writes plain CSV/JSON artifacts with full-precision floats
(17 significant digits) so results round-trip exactly and plots can be
reproduced with any stack.  Exit codes: 0 success, 1 invalid input,
2 no admissible measure (gap regime), 3 validation failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import analytic, jacobi, oracles, solver
from .operators import build_operator, operator_metadata

__all__ = ["main"]

_FMT = "%.17g"


def _fmt(x: float) -> str:
    return _FMT % x


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) if isinstance(v, float) else v for v in row])


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("config file must contain a JSON object")
    return data


def _merged(args: argparse.Namespace, key: str, default=None):
    val = getattr(args, key, None)
    if val is not None:
        return val
    return args._config.get(key, default)


def _problem_from_args(args: argparse.Namespace) -> solver.ProblemParams:
    alpha = _merged(args, "alpha")
    beta = _merged(args, "beta")
    dim = _merged(args, "dim")
    mass = _merged(args, "mass", 1.0)
    if alpha is None or beta is None or dim is None:
        raise ValueError("--alpha, --beta and --dim are required")
    return solver.ProblemParams(alpha=float(alpha), beta=float(beta), d=int(dim), M=float(mass))


def _solver_config_from_args(args: argparse.Namespace) -> solver.SolverConfig:
    defaults = solver.SolverConfig()
    return solver.SolverConfig(
        N=int(_merged(args, "N", defaults.N)),
        s_rel=float(_merged(args, "reg", defaults.s_rel)),
        r_bracket=(
            float(_merged(args, "rmin", defaults.r_bracket[0])),
            float(_merged(args, "rmax", defaults.r_bracket[1])),
        ),
        grid_points=int(_merged(args, "grid_points", defaults.grid_points)),
        r_tol=float(_merged(args, "rtol", defaults.r_tol)),
        positivity_tol=float(_merged(args, "positivity_tol", defaults.positivity_tol)),
        eval_grid=int(_merged(args, "eval_grid", defaults.eval_grid)),
    )


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(_merged(args, "out", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_solution(out: Path, params: solver.ProblemParams, config: solver.SolverConfig,
                    measure: solver.Measure, report: solver.SolveReport) -> None:
    G = config.eval_grid
    rr = np.sin(np.pi * np.arange(G) / (2.0 * G)) * measure.R
    dens = solver.evaluate_measure(measure, rr)
    _write_csv(out / "measure.csv", ["r_physical", "density"], zip(rr.tolist(), dens.tolist()))
    _write_csv(
        out / "energy_trace.csv",
        ["R", "E", "feasible"],
        [(R, E, int(ok)) for R, E, ok in report.energy_trace],
    )
    basis = measure.rho.basis
    payload = {
        "alpha": params.alpha,
        "beta": params.beta,
        "dim": params.d,
        "mass": params.M,
        "N": config.N,
        "s_rel": config.s_rel,
        "R": measure.R,
        "E": measure.E,
        "basis": {"d": basis.d, "ell": basis.ell, "a": basis.a, "b": basis.b},
        "coefficients": list(measure.rho.coeffs),
        "residual_norm": report.residual_norm,
        "min_density_ratio": report.min_density_ratio,
        "feasible": report.feasible,
        "refinement": report.refinement,
        "iterations": report.iterations,
    }
    with open(out / "solve_report.json", "w") as fh:
        json.dump(payload, fh, indent=2)


def cmd_solve(args: argparse.Namespace) -> int:
    try:
        params = _problem_from_args(args)
        config = _solver_config_from_args(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out = _out_dir(args)
    ops = solver.build_operator_pair(params, config)
    try:
        measure, report = solver.minimize_radius(params, config, ops)
    except solver.NoFeasibleMinimumError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 2
    _write_solution(out, params, config, measure, report)
    print(f"R = {_fmt(measure.R)}  E = {_fmt(measure.E)}  (files in {out})")
    return 0


def cmd_scan(args: argparse.Namespace) -> int:
    try:
        dim = int(_merged(args, "dim"))
        step = float(_merged(args, "step", 0.05))
        a_lo = float(_merged(args, "alpha_min"))
        a_hi = float(_merged(args, "alpha_max"))
        b_lo = float(_merged(args, "beta_min"))
        b_hi = float(_merged(args, "beta_max"))
        config = _solver_config_from_args(args)
    except (TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out = _out_dir(args)
    cells = solver.gap_scan((a_lo, a_hi), (b_lo, b_hi), step, dim, config)
    _write_csv(
        out / "gap.csv",
        ["alpha", "beta", "feasible"],
        [(c.alpha, c.beta, int(c.feasible)) for c in cells],
    )
    n_ok = sum(c.feasible for c in cells)
    print(f"scan complete: {n_ok}/{len(cells)} feasible cells -> {out / 'gap.csv'}")
    return 0


# Parameter sets of the quadratic- and quartic-attraction reference suites.
_A2_SUITE = [
    (1.2, 1, 1.0),
    (1.0 / 3.0, 2, 2.6),
    (-0.5, 3, 1.0),
    (-2.5, 4, 0.5),
    (-4 * math.pi / 5, 5, 1.0),
    (-3.2, 6, 1.0),
]
_A4_SUITE = [(0.5, 2, 1.0), (-1.1, 3, 1.0), (-3.9, 6, 2.0)]

_R_TOL = {2.0: 1e-8, 4.0: 1e-8}
_DENSITY_TOL = {2.0: 1e-8, 4.0: 1e-6}


def run_reference_case(alpha: float, beta: float, dim: int, mass: float,
                       n_coeffs: int = 8, s_rel: float = 1e-14,
                       perturb: float = 0.0) -> dict:
    """Solve one closed-form case and report radius/density errors."""
    params = solver.ProblemParams(alpha=alpha, beta=beta, d=dim, M=mass)
    ref = analytic.alpha2_solution(beta, dim, mass) if alpha == 2.0 else analytic.alpha4_solution(beta, dim, mass)
    lo, hi = 0.5 * ref.R, 1.5 * ref.R
    config = solver.SolverConfig(N=n_coeffs, s_rel=s_rel, r_bracket=(lo, hi), grid_points=100)
    ops = solver.build_operator_pair(params, config)
    if perturb:
        ops[0].matrix *= 1.0 + perturb
    measure, report = solver.minimize_radius(params, config, ops)
    rr = np.linspace(0.0, 0.98 * measure.R, 50)
    got = solver.evaluate_measure(measure, rr)
    want = ref.density(rr)
    scale = np.abs(want).max()
    return {
        "alpha": alpha,
        "beta": beta,
        "dim": dim,
        "mass": mass,
        "R_ref": ref.R,
        "R": measure.R,
        "r_err": abs(measure.R - ref.R),
        "density_err": float(np.abs(got - want).max() / scale),
    }


def cmd_validate(args: argparse.Namespace) -> int:
    which = _merged(args, "case", "all")
    custom_beta = getattr(args, "beta", None)
    perturb = float(getattr(args, "perturb_operator", 0.0) or 0.0)
    cases: list[tuple[float, float, int, float]] = []
    if custom_beta is not None:
        alpha = 2.0 if which in ("a2", "all") else 4.0
        cases.append((alpha, float(custom_beta), int(_merged(args, "dim", 2)), float(_merged(args, "mass", 1.0))))
    else:
        if which in ("a2", "all"):
            cases += [(2.0, b, d, m) for b, d, m in _A2_SUITE]
        if which in ("a4", "all"):
            cases += [(4.0, b, d, m) for b, d, m in _A4_SUITE]
    if not cases:
        print(f"error: unknown case selector {which!r}", file=sys.stderr)
        return 1
    print(f"{'alpha':>6} {'beta':>9} {'d':>2} {'M':>4} {'R_ref':>18} {'|R err|':>10} {'dens err':>10}  status")
    failed = False
    for alpha, beta, dim, mass in cases:
        try:
            res = run_reference_case(alpha, beta, dim, mass, perturb=perturb)
        except Exception as exc:
            print(f"{alpha:6.2f} {beta:9.4f} {dim:2d} {mass:4.1f}  failed: {exc}")
            failed = True
            continue
        ok = res["r_err"] <= _R_TOL[alpha] and res["density_err"] <= _DENSITY_TOL[alpha]
        failed = failed or not ok
        print(
            f"{alpha:6.2f} {beta:9.4f} {dim:2d} {mass:4.1f} {res['R_ref']:18.12f} "
            f"{res['r_err']:10.2e} {res['density_err']:10.2e}  {'ok' if ok else 'FAIL'}"
        )
    return 3 if failed else 0


def cmd_operator(args: argparse.Namespace) -> int:
    try:
        alpha = float(_merged(args, "alpha"))
        dim = int(_merged(args, "dim"))
        kernel = _merged(args, "beta")
        kernel = float(kernel) if kernel is not None else alpha
        N = int(_merged(args, "N", 60))
        basis = jacobi.choose_basis(alpha, dim)
    except (TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out = _out_dir(args)
    op = build_operator(kernel, basis, N)
    _write_csv(out / "operator.csv", [f"c{j}" for j in range(N)], (list(row) for row in op.matrix))
    with open(out / "operator.json", "w") as fh:
        json.dump(operator_metadata(op), fh, indent=2)
    print(f"operator {N}x{N} ({op.storage}) -> {out / 'operator.csv'}")
    return 0


def cmd_particles(args: argparse.Namespace) -> int:
    try:
        params = _problem_from_args(args)
        n_p = int(_merged(args, "n_particles", 1000))
        seed = int(_merged(args, "seed", 0))
        bins = int(_merged(args, "bins", 20))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out = _out_dir(args)
    state = oracles.particle_simulate(params, n_p, seed)
    _write_csv(
        out / "particles.csv",
        [f"x{j}" for j in range(params.d)],
        (list(p) for p in state.positions),
    )
    centers, dens = oracles.radial_histogram(state, bins)
    _write_csv(out / "histogram.csv", ["r_center", "density"], zip(centers.tolist(), dens.tolist()))
    print(f"{n_p} particles converged in {state.iterations} steps -> {out}")
    return 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, help="attractive kernel power")
    p.add_argument("--beta", type=float, help="repulsive kernel power")
    p.add_argument("--dim", type=int, help="ambient dimension d")
    p.add_argument("--mass", type=float, help="total mass M (default 1)")
    p.add_argument("--N", type=int, dest="N", help="truncation size")
    p.add_argument("--reg", type=float, help="relative Tikhonov parameter")
    p.add_argument("--rmin", type=float, help="lower radius bracket")
    p.add_argument("--rmax", type=float, help="upper radius bracket")
    p.add_argument("--grid-points", type=int, dest="grid_points", help="radius grid size")
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--out", type=str, help="output directory")
    p.add_argument("--config", type=str, help="JSON file with the same keys as the flags")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eqmeasure",
        description="Power-law equilibrium measures on d-dimensional balls",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one problem and write measure/energy artifacts")
    _add_common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("scan", help="map single-ball feasibility over an (alpha, beta) grid")
    _add_common(p)
    p.add_argument("--alpha-min", type=float, dest="alpha_min")
    p.add_argument("--alpha-max", type=float, dest="alpha_max")
    p.add_argument("--beta-min", type=float, dest="beta_min")
    p.add_argument("--beta-max", type=float, dest="beta_max")
    p.add_argument("--step", type=float, help="grid step (default 0.05)")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("validate", help="compare solver output against the closed-form references")
    _add_common(p)
    p.add_argument("--case", choices=["a2", "a4", "all"], default=None)
    p.add_argument("--perturb-operator", type=float, dest="perturb_operator",
                   help="test hook: multiply the attractive operator by (1+eps)")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("operator", help="dump a potential operator matrix and metadata")
    _add_common(p)
    p.set_defaults(func=cmd_operator)

    p = sub.add_parser("particles", help="run the particle gradient-flow oracle")
    _add_common(p)
    p.add_argument("--n-particles", type=int, dest="n_particles")
    p.add_argument("--bins", type=int)
    p.set_defaults(func=cmd_particles)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args._config = _load_config_file(getattr(args, "config", None))
    except (OSError, ValueError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
