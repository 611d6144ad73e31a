"""
Command-line entry point: ``nvhp <experiment> --config <path> [--seed N] [--out DIR]``.

Exit codes: 0 success, 2 configuration error, 3 numeric or internal failure.
Failures print a JSON error document on stderr and leave ``error.json`` in the
output directory.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from rich.console import Console

from nvhp import __version__
from nvhp.config.config import parse_config
from nvhp.errors import ConfigError, InternalError, NvhpError
from nvhp.logging_config import get_logger, setup_logging
from nvhp.models.models import ExperimentEnum
from nvhp.result_writers import write_error_json

console = Console()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nvhp",
        description="Hyperpolarization of 13C in nanodiamonds by NV centres: spin-dynamics experiments",
    )
    parser.add_argument("experiment", choices=[e.value for e in ExperimentEnum], help="Experiment to run")
    parser.add_argument("--config", type=Path, default=None, help="YAML run document")
    parser.add_argument("--seed", type=int, default=None, help="Seed for all stochastic components")
    parser.add_argument("--out", type=str, default=None, help="Output directory (default: NVHP_OUTPUT_DIR)")
    parser.add_argument("--log-level", type=str, default=None, help="Override the configured log level")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


def _report(error: NvhpError, out_dir: Optional[str]) -> int:
    doc = error.to_dict()
    print(json.dumps(doc, sort_keys=True), file=sys.stderr)
    if out_dir:
        try:
            write_error_json(doc, Path(out_dir))
        except OSError:
            pass
    return error.exit_code


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    logger = get_logger("nvhp.system")

    # runner reads NVHP_* settings at import; import after logging is up
    from nvhp import runner

    out_dir = args.out or runner.OUTPUT_DIR
    try:
        text = ""
        if args.config is not None:
            try:
                text = args.config.read_text(encoding="utf-8")
            except OSError as e:
                raise ConfigError(f"Cannot read run document: {e}",
                                  fields=[{"field": "config", "code": "invalid-value", "message": str(e)}])

        overrides = {"experiment": args.experiment}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.out is not None:
            overrides["output"] = args.out
        cfg = parse_config(text, overrides=overrides)
        out_dir = cfg.output or out_dir
    except ConfigError as e:
        logger.error(f"Configuration rejected: {e.message}", event_type="config_error",
                     fields=[f["field"] for f in e.fields])
        return _report(e, out_dir)

    try:
        outcome = runner.run(cfg, out_dir)
    except NvhpError as e:
        # runner already wrote error.json and the ledger entry
        print(json.dumps(e.to_dict(), sort_keys=True), file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.error(f"Unexpected failure: {e}", event_type="internal_error", exc_info=True)
        return _report(InternalError(str(e), error_type=type(e).__name__), out_dir)

    for name in sorted(outcome.files):
        console.print(f"[bold green]✓[/] {outcome.files[name]}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
