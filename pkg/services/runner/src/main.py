"""
kinetex command line.

    kinetex run <config> [--out DIR] [--seed N] [--threads N]
    kinetex audit <geometry|stencil|landau> [--preset P] [--samples N] [--n N]
    kinetex schema

Exit codes: 0 all checks passed, 1 a check failed or a module raised,
2 missing config file, 3 config parse error, 4 schema violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from dotenv import load_dotenv

from kinetex import __version__
from kinetex.checks import log_checks
from kinetex.errors import KinetexError
from kinetex.logging_utils import logger, run_context, setup_logging

from .reports import emit_reports
from .scenarios import run_scenario
from .schema import ScenarioConfig, ScenarioFileError, config_schema, parse_config, validate_config

# Load environment variables from .env file
load_dotenv()

# Initialize logging early
setup_logging(service_name="runner")

DEFAULT_RUNS_DIR = Path("runs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kinetex", description="Kinetic-equation numerics and audits")
    parser.add_argument("--version", action="version", version=f"kinetex {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario file")
    run_p.add_argument("config", type=Path)
    run_p.add_argument("--out", type=Path, default=None, help="output directory (default runs/<name>)")
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--threads", type=int, default=None)

    audit_p = sub.add_parser("audit", help="run one module audit with preset parameters")
    audit_p.add_argument("module", choices=["geometry", "stencil", "landau"])
    audit_p.add_argument("--preset", action="append", default=None, help="chart preset (repeatable)")
    audit_p.add_argument("--samples", type=int, default=None)
    audit_p.add_argument("--n", type=int, default=None, help="velocity points per axis (landau)")
    audit_p.add_argument("--delta", type=float, default=None, help="ellipticity constant (stencil)")
    audit_p.add_argument("--no-e3", action="store_true", help="skip the boundary-convolution check")
    audit_p.add_argument("--seed", type=int, default=None)
    audit_p.add_argument("--out", type=Path, default=None)

    sub.add_parser("schema", help="print the scenario JSON schema")
    return parser


def _with_overrides(cfg: ScenarioConfig, **overrides: Any) -> ScenarioConfig:
    updates = {k: v for k, v in overrides.items() if v is not None}
    if not updates:
        return cfg
    return validate_config({**cfg.model_dump(exclude_none=True), **updates}, "command line")


def audit_config(args: argparse.Namespace) -> ScenarioConfig:
    data: dict[str, Any] = {"version": 1, "name": f"{args.module}-audit"}
    if args.seed is not None:
        data["seed"] = args.seed
    if args.module == "geometry":
        block: dict[str, Any] = {"include_e3": not args.no_e3}
        if args.preset:
            block["presets"] = args.preset
        if args.samples is not None:
            block["samples"] = args.samples
        data.update(kind="geometry_audit", geometry=block)
    elif args.module == "stencil":
        block = {}
        if args.samples is not None:
            block["samples"] = args.samples
        if args.delta is not None:
            block["delta"] = args.delta
        data.update(kind="stencil_audit", stencil=block)
    else:
        grid: dict[str, Any] = {"half_width": 2.0, "n": args.n if args.n is not None else 17}
        data.update(kind="landau_build", landau_build={"grid": grid, "export": False})
    return validate_config(data, "command line")


def execute(cfg: ScenarioConfig, out_dir: Path | None) -> int:
    with run_context(f"{cfg.run_name}-{cfg.seed}"):
        record = run_scenario(cfg, out_dir)
        passed = log_checks(record.checks)
        brief = record.brief()
        if out_dir is not None:
            manifest = emit_reports(record, out_dir)
            brief["out"] = out_dir.as_posix()
            brief["files"] = [e.path for e in manifest]
    print(json.dumps(brief, indent=2, default=str))
    if passed:
        logger.success("{kind} scenario passed", kind=cfg.kind)
        return 0
    logger.error("{kind} scenario failed", kind=cfg.kind)
    return 1


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "schema":
            print(json.dumps(config_schema(), indent=2))
            return 0
        if args.command == "run":
            cfg = _with_overrides(parse_config(args.config), seed=args.seed, threads=args.threads)
            out_dir = args.out or (Path(cfg.out) if cfg.out else DEFAULT_RUNS_DIR / cfg.run_name)
            return execute(cfg, out_dir)
        return execute(audit_config(args), args.out)
    except ScenarioFileError as e:
        logger.error(e.qualified())
        for violation in e.violations:
            logger.error("  {violation}", violation=violation)
        return e.exit_code
    except KinetexError as e:
        logger.error(e.qualified())
        return 1


if __name__ == "__main__":
    sys.exit(main())
