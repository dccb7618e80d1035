from __future__ import annotations

import argparse
import sys
from pathlib import Path

from dotenv import load_dotenv

ROOT = Path(__file__).resolve().parent
sys.path.append(str(ROOT))
load_dotenv(dotenv_path=ROOT / ".env", override=False)

from src import __version__
from src.cli.commands import COMMANDS, RunContext, cmd_gap, regenerate_goldens
from src.cli.config import load_config
from src.cli.output import config_digest, render_csv, write_csv
from src.core.errors import SpinSimError
from src.core.logger import log_event, setup_logger
from src.core.logging_context import start_new_run


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML run configuration")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", type=Path, help="CSV output path (stdout when omitted)")
    common.add_argument("--geometry-file", type=Path, help="position table replacing the [geometry] section")
    common.add_argument("--workers", type=int, help="trajectory worker threads")

    parser = argparse.ArgumentParser(prog="spin-squeeze-sim", description="Squeezing and GHZ simulator for dipolar spin ensembles")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name, parents=[common])
        if name == "gap":
            cmd.add_argument("--export-geometry", type=Path, help="write the placed positions as a table")
    goldens = sub.add_parser("regenerate-goldens", parents=[common])
    goldens.add_argument("--recipes", type=Path, default=ROOT / "configs", help="directory of recipe TOML files")
    goldens.add_argument("--target", type=Path, default=ROOT / "goldens", help="output directory")
    return parser


def run(args: argparse.Namespace) -> int:
    logger = setup_logger()
    run_id = start_new_run()
    log_event(logger, "INFO", "run_started", command=args.command, run_id=run_id, version=__version__)

    if args.command == "regenerate-goldens":
        summary = regenerate_goldens(args.recipes, args.target, logger, workers=args.workers)
        write_csv(render_csv(summary, args.command, config_digest(""), 0), args.out)
        return 0

    config, text = load_config(args.config)
    seed = args.seed if args.seed is not None else config.seed
    ctx = RunContext(
        config=config,
        config_text=text,
        seed=seed,
        logger=logger,
        workers=args.workers,
        geometry_file=args.geometry_file,
    )
    if args.command == "gap":
        table = cmd_gap(ctx, export_geometry=args.export_geometry)
    else:
        table = COMMANDS[args.command](ctx)
    out = args.out if args.out is not None else (Path(config.out) if config.out else None)
    write_csv(render_csv(table, args.command, config_digest(text), seed), out)
    log_event(logger, "INFO", "run_finished", command=args.command, rows=len(table.rows), out=str(out) if out else "stdout")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except SpinSimError as exc:
        log_event(setup_logger(), "ERROR", "command_rejected", command=args.command, error=str(exc), exit_code=exc.exit_code)
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001
        log_event(setup_logger(), "ERROR", "command_failed", command=args.command, error=repr(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
