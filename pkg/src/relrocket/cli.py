"""Command-line scenario runner.

Usage::

    relrocket simulate --config scenario.json --out traj.csv
    relrocket design   --config scenario.json
    relrocket verify   --config scenario.json --format json
    relrocket schema

``--config -`` reads the scenario from stdin. ``--format`` picks the
trajectory file format (csv or json); with ``json`` the report is printed as
JSON as well. Exit codes: 0 success, 2 terminal event (``verify``: also any
failed check), 1 error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .errors import RocketError
from .io import trajectory_to_csv, trajectory_to_json
from .runner import EXIT_ERROR, EXIT_OK, design, execute, verify
from .scenario import parse_scenario, schema_text


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relrocket",
                                     description="Relativistic rocket control scenarios.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, trajectory=False):
        p.add_argument("--config", required=True, help="scenario JSON path, or - for stdin")
        p.add_argument("--format", choices=("csv", "json"), default=None,
                       help="trajectory format; json also switches the report to JSON")
        p.add_argument("--seed", type=int, default=None, help="reserved; runs are deterministic")
        p.add_argument("--quiet", action="store_true", help="suppress the report")
        if trajectory:
            p.add_argument("--out", default=None, help="trajectory output path")

    common(sub.add_parser("simulate", help="run a scenario and write its trajectory"),
           trajectory=True)
    common(sub.add_parser("design", help="print designed gains or steering plan"))
    common(sub.add_parser("verify", help="run the invariant suite"))
    sub.add_parser("schema", help="print the scenario JSON schema")
    return parser


def _read_config(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise RocketError(f"cannot read config {path}: {exc.strerror or exc}") from None


def _emit_report(report, as_json: bool, stream) -> None:
    if as_json:
        stream.write(json.dumps(report.to_dict(), indent=2) + "\n")
    else:
        stream.write(report.to_text())


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "schema":
        sys.stdout.write(schema_text())
        return EXIT_OK
    try:
        scenario = parse_scenario(_read_config(args.config))
        as_json = args.format == "json"
        if args.command == "design":
            report = design(scenario)
            stream = sys.stdout
        elif args.command == "verify":
            report = verify(scenario)
            stream = sys.stdout
        else:
            fmt = args.format or scenario.output.format
            to_stdout = args.out is None and scenario.output.path is None
            report, traj = execute(scenario, out=args.out, fmt=fmt)
            if to_stdout:
                text = trajectory_to_json(traj) if fmt == "json" else trajectory_to_csv(traj)
                sys.stdout.write(text)
            # keep stdout clean when it carries the trajectory
            stream = sys.stderr if to_stdout else sys.stdout
            as_json = fmt == "json"
    except (RocketError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if not args.quiet:
        _emit_report(report, as_json, stream)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
