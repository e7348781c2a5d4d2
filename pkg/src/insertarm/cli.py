"""Command-line entry points.

``run-experiments [tracking|admittance|insertion|all] --config <file>
--out <dir> --seed <n>`` runs the benchmark experiments and exits 0 iff
every gate passes.

``serve --scenario <file> --bind <addr:port> --timescale <f>`` exposes a live
simulation session over the teleoperation protocol.
"""

from __future__ import annotations

import argparse
import sys

from .experiments import run_experiments


def run_experiments_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="run-experiments",
        description="Run the benchmark experiments and gate their metrics.",
    )
    parser.add_argument(
        "which",
        nargs="?",
        default="all",
        choices=["tracking", "admittance", "insertion", "all"],
        help="which experiment to run (default: all)",
    )
    parser.add_argument("--config", default=None, help="experiment config YAML (default: packaged)")
    parser.add_argument("--out", default=None, help="directory for raw logs and reports")
    parser.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    args = parser.parse_args(argv)

    reports = run_experiments(args.which, config=args.config, out_dir=args.out, seed=args.seed)
    all_pass = True
    for report in reports:
        for row in report.rows:
            for gate, ok in row.gates.items():
                print(f"[{report.experiment}/{row.scenario_id}] {gate}: {'PASS' if ok else 'FAIL'}")
                all_pass = all_pass and ok
        print(f"[{report.experiment}] overall: {'PASS' if report.passed else 'FAIL'} "
              f"(wall {report.meta.get('wall_time_s', float('nan')):.1f} s)")
    return 0 if all_pass else 1


def serve_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="serve",
        description="Serve a live simulation session over the teleop protocol (v1).",
    )
    parser.add_argument("--scenario", required=True, help="scenario YAML file or packaged name")
    parser.add_argument("--bind", default="127.0.0.1:8765", help="addr:port to listen on")
    parser.add_argument(
        "--timescale",
        type=float,
        default=1.0,
        help="simulated seconds per wall second; 0 disables pacing (max speed)",
    )
    args = parser.parse_args(argv)

    from .simulate import load_scenario
    from .teleop_server import serve

    host, _, port = args.bind.rpartition(":")
    if not host or not port:
        parser.error("--bind must look like addr:port")
    scenario = load_scenario(args.scenario)
    try:
        serve(host, int(port), scenario, timescale=args.timescale)
    except KeyboardInterrupt:
        pass
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(run_experiments_main())
