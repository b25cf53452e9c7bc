"""wpt-dq command line.

    wpt-dq <sweep|step|phase|identify> --config FILE --out DIR [--oracle] [--check] [--seed N]

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 acceptance bound violated (only with --check).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import runner
from .errors import ConfigError, WptError
from .scenarios import Kind, load_config

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECK = 0, 2, 3, 4


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wpt-dq", description="dq model verification experiments for SP-compensated WPT links")
    p.add_argument("command", choices=[k.value for k in Kind])
    p.add_argument("--config", required=True, type=Path, help="scenario YAML file")
    p.add_argument("--out", required=True, type=Path, help="output directory")
    p.add_argument("--oracle", action="store_true", help="sweep: also run the time-domain oracle at spot frequencies")
    p.add_argument("--check", action="store_true", help="exit 4 if an acceptance bound is violated")
    p.add_argument("--seed", type=int, default=0, help="seed for optional sensor-noise injection")
    return p


def run(argv: list[str]) -> int:
    args = build_parser().parse_args(argv)
    try:
        scenario = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    kind = Kind(args.command)
    try:
        runner.self_test(scenario)
        if kind is Kind.FREQUENCY_SWEEP:
            report = runner.run_frequency_sweep(scenario, out, oracle=args.oracle)
        elif kind is Kind.STEP_RESPONSE:
            report = runner.run_step_response(scenario, out)
        elif kind is Kind.PHASE_CHECK:
            report = runner.run_phase_check(scenario, out)
        else:
            report = runner.run_identify_sweep(scenario, out, seed=args.seed)
    except WptError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    runner.write_manifest(out, scenario, report, [args.command] + argv[1:])
    summary = dict(report.summary)
    table = summary.pop("table", None)
    if table:
        print("\n".join(table))
    print(json.dumps(summary, indent=2, sort_keys=True, default=str))
    print(f"{report.kind}: {'PASS' if report.passed else 'FAIL'}  ({', '.join(report.files)})")

    if report.hard_errors:
        return EXIT_NUMERIC
    if args.check and not report.passed:
        return EXIT_CHECK
    return EXIT_OK


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
