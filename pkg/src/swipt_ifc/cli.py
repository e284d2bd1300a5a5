"""Command-line front end.

Exit codes: 0 ok, 1 bad input, 2 no equilibrium, 3 existence at the
boundary, 4 dynamics did not converge.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .equilibrium import best_response_dynamics, existence_check, verify_ne
from .experiments import (
    SweepSpec,
    library_version,
    run_convergence_experiment,
    run_eh_sweep,
    run_existence_sweep,
    write_trace_csv,
)
from .oracle import GridConfig, oracle_min_total_power
from .scenario import RNG_ALGORITHM, ScenarioError, load_scenario, scenario_to_dict, watt_to_dbm

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_NONEXISTENT = 2
EXIT_BOUNDARY = 3
EXIT_NONCONVERGED = 4

_VERDICT_EXIT = {"exists": EXIT_OK, "not-exists": EXIT_NONEXISTENT, "boundary": EXIT_BOUNDARY}


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _write_sidecar(output: Path, args: argparse.Namespace, extra: dict | None = None) -> None:
    config = {k: v for k, v in vars(args).items() if k != "func"}
    doc = {"command": args.command, "resolved_config": config, "library_version": library_version(), "rng_algorithm": RNG_ALGORITHM}
    if extra:
        doc.update(extra)
    output.with_suffix(".json").write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")


def _verdict_line(report) -> str:
    return f"rho={report.spectral_radius:.6f} exists={'true' if report.exists else 'false'} verdict={report.verdict}"


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------
def cmd_check(args) -> int:
    s = load_scenario(args.scenario)
    report = existence_check(s)
    print(_verdict_line(report))
    print(f"bounds=[{report.lower:.12g}, {report.upper:.12g}] iterations={report.iterations_used}")
    return _VERDICT_EXIT[report.verdict]


def cmd_solve(args) -> int:
    s = load_scenario(args.scenario)
    report = existence_check(s)
    print(_verdict_line(report))
    if not report.exists and not args.force:
        print("no equilibrium; rerun with --force to observe the dynamics", file=sys.stderr)
        return _VERDICT_EXIT[report.verdict]

    res = best_response_dynamics(s, schedule=args.schedule, tol=args.tol, max_iter=args.max_iter)
    if args.output:
        out = Path(args.output)
        write_trace_csv([res], out)
        _write_sidecar(out, args, {"scenario": scenario_to_dict(s)})
    print(f"converged={'true' if res.converged else 'false'} iterations={res.iterations} residual={res.residual:.3e}")
    if not res.converged:
        return EXIT_NONCONVERGED
    check = verify_ne(res.final, s)
    for n in range(s.n_pairs):
        print(f"pair {n}: p={watt_to_dbm(float(res.final.p[n])):.4f} dBm alpha={res.final.alpha[n]:.6f}")
    print(f"total={watt_to_dbm(float(res.final.p.sum())):.4f} dBm verified={'true' if check.ok else 'false'}")
    return EXIT_OK if check.ok else EXIT_NONCONVERGED


def cmd_oracle(args) -> int:
    s = load_scenario(args.scenario)
    if s.n_pairs > 3:
        print(f"error: n_pairs: the exhaustive search supports at most 3 pairs, got {s.n_pairs}", file=sys.stderr)
        return EXIT_PARSE
    report = existence_check(s)
    print(_verdict_line(report))
    if not report.exists:
        return _VERDICT_EXIT[report.verdict]
    ne = best_response_dynamics(s, tol=1e-14, max_iter=max(args.max_iter, 20_000), keep_trace=False)
    if not ne.converged:
        return EXIT_NONCONVERGED
    grid = GridConfig(steps_per_decade=args.steps_per_decade, refine_rounds=args.refine_rounds)
    res = oracle_min_total_power(s, grid, warm_start=ne.final.p)
    for n in range(s.n_pairs):
        print(f"pair {n}: p={watt_to_dbm(float(res.p[n])):.4f} dBm alpha={res.alpha[n]:.6f}")
    ne_total = float(ne.final.p.sum())
    print(f"oracle_total={watt_to_dbm(res.total):.4f} dBm ne_total={watt_to_dbm(ne_total):.4f} dBm "
          f"gap_db={watt_to_dbm(ne_total) - watt_to_dbm(res.total):.6f}")
    if args.output:
        out = Path(args.output)
        out.write_text(json.dumps({
            "p_dbm": watt_to_dbm(res.p).tolist(),
            "alpha": res.alpha.tolist(),
            "oracle_total_dbm": watt_to_dbm(res.total),
            "ne_total_dbm": watt_to_dbm(ne_total),
            "round_totals_w": res.round_totals,
        }, indent=2) + "\n")
    return EXIT_OK


def _sweep_spec(args, variable: str, values, **fixed) -> SweepSpec:
    base = {}
    if args.config:
        base = json.loads(Path(args.config).read_text())
    base.update({k: v for k, v in fixed.items() if v is not None})
    base["sweep_variable"] = variable
    base["values"] = values
    for key in ("trials", "seed"):
        if getattr(args, key) is not None:
            base[key] = getattr(args, key)
    return SweepSpec(**base)


def cmd_sweep_existence(args) -> int:
    spec = _sweep_spec(args, "inter_distance", args.distances, n_pairs=args.n_pairs, sinr_threshold_db=args.sinr_db)
    result = run_existence_sweep(spec)
    result.to_csv(args.output)
    for row in result.rows:
        print(f"d={row['sweep_value']:g} m p_exist={row['existence_probability']:.4f}")
    return EXIT_OK


def cmd_sweep_eh(args) -> int:
    spec = _sweep_spec(
        args,
        "eh_threshold_dbm",
        args.eh_dbm,
        n_pairs=args.n_pairs,
        sinr_threshold_db=args.sinr_db,
        admission_sinr_db=args.admission_sinr_db,
    )
    result = run_eh_sweep(spec)
    result.to_csv(args.output)
    for row in result.rows:
        print(f"E={row['sweep_value']:g} dBm ne={row['ne_total_dbm']:.4f} dBm "
              f"oracle={row['oracle_total_dbm']:.4f} dBm gap={row['gap_db']:.6f} dB n={row['trials_feasible']}")
    return EXIT_OK


def cmd_trace(args) -> int:
    s = load_scenario(args.scenario)
    report = existence_check(s)
    print(_verdict_line(report))
    if not report.exists and not args.force:
        return _VERDICT_EXIT[report.verdict]
    results = run_convergence_experiment(
        s, n_inits=args.n_inits, seed=args.seed, schedule=args.schedule, tol=args.tol, max_iter=args.max_iter
    )
    out = Path(args.output)
    write_trace_csv(results, out)
    _write_sidecar(out, args, {"scenario": scenario_to_dict(s)})
    for k, r in enumerate(results):
        print(f"run {k}: converged={'true' if r.converged else 'false'} iterations={r.iterations}")
    return EXIT_OK if all(r.converged for r in results) else EXIT_NONCONVERGED


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swipt-ifc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def dynamics_flags(p):
        p.add_argument("--tol", type=float, default=1e-8)
        p.add_argument("--max-iter", type=int, default=1000)
        p.add_argument("--schedule", choices=("jacobi", "gauss-seidel"), default="jacobi")
        p.add_argument("--force", action="store_true", help="run the dynamics even without an equilibrium")

    p = sub.add_parser("check", help="existence/uniqueness verdict")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("solve", help="run best-response dynamics to the equilibrium")
    p.add_argument("scenario")
    dynamics_flags(p)
    p.add_argument("--output", help="trace CSV path")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", help="cooperative minimum total power (N <= 3)")
    p.add_argument("scenario")
    p.add_argument("--max-iter", type=int, default=20_000)
    p.add_argument("--steps-per-decade", type=int, default=50)
    p.add_argument("--refine-rounds", type=int, default=3)
    p.add_argument("--output", help="JSON result path")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("sweep-existence", help="existence probability versus inter-link distance")
    p.add_argument("--config", help="JSON file with SweepSpec fields")
    p.add_argument("--distances", type=_floats, default=[float(d) for d in range(5, 55, 5)])
    p.add_argument("--n-pairs", type=int, default=None)
    p.add_argument("--sinr-db", type=float, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output", default="existence.csv")
    p.set_defaults(func=cmd_sweep_existence)

    p = sub.add_parser("sweep-eh", help="average NE and oracle power versus EH target")
    p.add_argument("--config", help="JSON file with SweepSpec fields")
    p.add_argument("--eh-dbm", type=_floats, default=[-30.0, -25.0, -20.0, -15.0, -10.0])
    p.add_argument("--n-pairs", type=int, default=2)
    p.add_argument("--sinr-db", type=float, default=None)
    p.add_argument("--admission-sinr-db", type=float, default=None)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output", default="eh_sweep.csv")
    p.set_defaults(func=cmd_sweep_eh)

    p = sub.add_parser("trace", help="per-iteration convergence traces from random initial points")
    p.add_argument("scenario")
    dynamics_flags(p)
    p.add_argument("--n-inits", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default="trace.csv")
    p.set_defaults(func=cmd_trace)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (OSError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
