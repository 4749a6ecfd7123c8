"""Command-line entry point.

Exit codes: 0 on success, 1 when the scenario is infeasible, 2 on bad
configuration or calibration input.
"""

from __future__ import annotations

import argparse
import sys

from ..errors import CalibrationError, ConfigError, InfeasibleError
from ..pose import calibrate_surrogate
from .config import ScenarioConfig, load_config
from .io import (
    read_skeleton_csv,
    read_targets_csv,
    synthesize_trace,
    write_cloud_csv,
    write_surrogate_toml,
)
from .sweep import PARAM_FIELDS, SCHEMES, SweepSpec, run_sweep, solve_scenario, write_sweep_csv


def _load(path: str | None) -> ScenarioConfig:
    return load_config(path) if path else ScenarioConfig()


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def cmd_solve(args: argparse.Namespace) -> int:
    config = _load(args.config)
    result = solve_scenario(config, seed=args.seed, with_oracle=args.oracle)
    allocation = result["allocation"]
    report = result["feasibility"]
    print("status: ok")
    print(f"depth_l: {allocation.depth}")
    print(f"p_r_w: {_fmt(allocation.sensing_power)}")
    print(f"p_c_total_w: {_fmt(allocation.total_comm_power)}")
    print(f"mpjpe_cm: {_fmt(result['mpjpe_cm'])}")
    print(f"iterations: {result['trace'].iterations_used}")
    print(f"converged: {'true' if result['trace'].converged else 'false'}")
    print(f"binding: {', '.join(report.binding) if report.binding else 'none'}")
    if args.oracle:
        oracle = result["oracle_allocation"]
        print(f"oracle_depth_l: {oracle.depth}")
        print(f"oracle_p_r_w: {_fmt(oracle.sensing_power)}")
        print(f"oracle_mpjpe_cm: {_fmt(result['oracle_mpjpe_cm'])}")
        print(f"oracle_gap_cm: {_fmt(result['oracle_gap_cm'])}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _load(args.config)
    spec = SweepSpec(
        parameter=args.param,
        from_value=args.from_value,
        to_value=args.to,
        steps=args.steps,
        schemes=tuple(s.strip() for s in args.schemes.split(",") if s.strip()),
    )
    rows = run_sweep(config, spec, seed=args.seed, max_workers=args.workers)
    write_sweep_csv(rows, args.out)
    n_ok = sum(1 for r in rows if r["status"] == "ok")
    print(f"wrote {len(rows)} rows ({n_ok} ok) to {args.out}")
    return 0


def cmd_synth_cloud(args: argparse.Namespace) -> int:
    config = _load(args.config)
    skeleton = read_skeleton_csv(args.skeleton)
    frames = synthesize_trace(config, skeleton, args.power_w, args.seed)
    write_cloud_csv(frames, args.out)
    n_points = sum(f.n_points for f in frames)
    print(f"wrote {len(frames)} frames ({n_points} points) to {args.out}")
    return 0


def cmd_calibrate(args: argparse.Namespace) -> int:
    config = _load(args.config)
    targets = read_targets_csv(args.targets)
    model = calibrate_surrogate(
        targets,
        sensing=config.sensing_params(),
        reference_distance=config.reference_distance_m,
    )
    write_surrogate_toml(model, args.out)
    print(f"floor_a_cm: {_fmt(model.floor_a)}")
    print(f"floor_b_cm: {_fmt(model.floor_b)}")
    print(f"floor_rho: {_fmt(model.floor_rho)}")
    print(f"jitter_kappa: {_fmt(model.jitter_kappa)}")
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isccsim",
        description="Joint sensing/communication/compute resource allocation "
        "for pose estimation over a shared mmWave slot.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one scenario and print the allocation")
    p_solve.add_argument("--config", help="scenario TOML; defaults apply when omitted")
    p_solve.add_argument("--seed", type=int, default=None, help="channel seed override")
    p_solve.add_argument(
        "--oracle", action="store_true",
        help="also run the exhaustive reference solver and report the gap",
    )
    p_solve.set_defaults(func=cmd_solve)

    p_sweep = sub.add_parser("sweep", help="sweep one parameter and write a CSV")
    p_sweep.add_argument("--config", help="scenario TOML; defaults apply when omitted")
    p_sweep.add_argument("--param", required=True, choices=sorted(PARAM_FIELDS))
    p_sweep.add_argument("--from", dest="from_value", type=float, required=True)
    p_sweep.add_argument("--to", type=float, required=True)
    p_sweep.add_argument("--steps", type=int, required=True)
    p_sweep.add_argument(
        "--schemes", default="proposed,fixed_l1,fixed_prmin",
        help=f"comma-separated subset of {','.join(SCHEMES)}",
    )
    p_sweep.add_argument("--seed", type=int, default=0)
    p_sweep.add_argument("--workers", type=int, default=None, help="thread count")
    p_sweep.add_argument("--out", required=True, help="output CSV path")
    p_sweep.set_defaults(func=cmd_sweep)

    p_cloud = sub.add_parser(
        "synth-cloud", help="turn a skeleton trace into sensed point-cloud frames"
    )
    p_cloud.add_argument("--skeleton", required=True, help="input skeleton CSV")
    p_cloud.add_argument("--out", required=True, help="output point-cloud CSV")
    p_cloud.add_argument("--power-w", type=float, default=1.0, help="sensing power in watts")
    p_cloud.add_argument("--seed", type=int, default=0)
    p_cloud.add_argument("--config", help="scenario TOML; defaults apply when omitted")
    p_cloud.set_defaults(func=cmd_synth_cloud)

    p_cal = sub.add_parser(
        "calibrate", help="fit surrogate parameters to accuracy measurements"
    )
    p_cal.add_argument("--targets", required=True, help="CSV of p_r_w,depth,mpjpe_cm rows")
    p_cal.add_argument("--out", required=True, help="output TOML path")
    p_cal.add_argument("--config", help="scenario TOML; defaults apply when omitted")
    p_cal.set_defaults(func=cmd_calibrate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        if exc.violations:
            print(f"violated: {', '.join(exc.violations)}", file=sys.stderr)
        return 1
    except (ConfigError, CalibrationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
