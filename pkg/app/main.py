"""
============================================================================
PROTOSCRIPT COMMAND LINE
============================================================================
Entry point untuk CLI.

Features:
    - Global options (--config, --seed, --out, --log-level, --n-jobs)
    - Subcommands dari app.api.api.api_router
    - RunConfig merge (defaults < env < flags < --config < command fixed)
    - run_config.json di setiap output directory
    - Exit codes: 0 ok, 1 usage, 2 data, 3 numeric

Jalankan dengan:
    python -m app.main pipeline --out out
    python -m app.main --seed 3 train --corpus data/manifest.json
============================================================================
"""

import argparse
import sys
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from app.api import deps
from app.api.api import api_router
from app.core.config import resolve_run_config, settings
from app.core.errors import NumericError, ProtoscriptError, UsageError
from app.core.logging import get_logger, log_banner, setup_logging
from app.crud.crud_outputs import write_run_config

logger = get_logger("app.main")

GLOBAL_CONFIG_KEYS = ("seed", "paths.out_dir", "train.n_jobs")


class ArgumentParser(argparse.ArgumentParser):
    """argparse yang melempar UsageError (exit 1) alih-alih exit 2."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{self.prog}: {message}")


# ============================================================================
# PARSER
# ============================================================================

def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog=settings.PROJECT_NAME, description="Aligned character prototypes for script analysis")
    parser.add_argument("--config", metavar="FILE", help="JSON run configuration (highest priority)")
    parser.add_argument("--seed", dest="seed", type=int, default=None, help="Master seed")
    parser.add_argument("--out", dest="paths.out_dir", default=None, metavar="DIR", help="Output directory")
    parser.add_argument("--n-jobs", dest="train.n_jobs", type=int, default=None, help="joblib workers")
    parser.add_argument("--log-level", default=None, choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    api_router.build(subparsers)
    return parser


def collect_flags(args: argparse.Namespace) -> Dict[str, Any]:
    """Dotted config keys yang di-set di command line."""
    namespace = vars(args)
    keys = set(GLOBAL_CONFIG_KEYS) | api_router.config_keys()
    return {key: namespace[key] for key in sorted(keys) if namespace.get(key) is not None}


# ============================================================================
# MAIN
# ============================================================================

def run(args: argparse.Namespace) -> None:
    config = resolve_run_config(args.config, collect_flags(args), fixed=args.fixed)
    out_dir = deps.get_out_dir(config)
    write_run_config(config, out_dir)
    log_banner(
        logger,
        f"{settings.PROJECT_NAME} {args.command}",
        f"Environment: {settings.ENVIRONMENT}",
        f"Seed: {config.seed}",
        f"Output: {out_dir}",
    )
    try:
        args.handler(deps.RunContext(args, config, out_dir))
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        raise NumericError(f"numeric failure: {exc}")
    log_banner(logger, f"{args.command} finished")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse argv, jalankan subcommand, map error ke exit code.

    Returns:
        int: 0 sukses, 1 usage, 2 data, 3 numeric
    """
    argv_list: List[str] = list(sys.argv[1:] if argv is None else argv)
    setup_logging(settings.LOG_LEVEL)
    try:
        args = build_parser().parse_args(argv_list)
        if args.log_level:
            setup_logging(args.log_level)
        run(args)
    except ProtoscriptError as exc:
        logger.debug("failed with %s", type(exc).__name__)
        print(f"error: {exc.detail}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())


# ============================================================================
# USAGE NOTES
# ============================================================================
"""
Workflow step-by-step:

1. SYNTHETIC CORPUS:
    python -m app.main --out out/synth synth --docs-per-subtype 4

2. TRAIN REFERENCE:
    python -m app.main --out out/ref train --corpus out/synth/corpus/manifest.json

3. FINETUNE:
    python -m app.main --out out/ft finetune \\
        --corpus out/synth/corpus/manifest.json --reference out/ref/models/reference.pscm

4. ANALYSIS:
    python -m app.main --out out/an filter --models-dir out/ft/models
    python -m app.main --out out/an graph --corpus ... --models-dir out/ft/models
    python -m app.main --out out/an variability --corpus ... --models-dir out/ft/models
    python -m app.main --out out/cmp compare --model-a A.pscm --model-b B.pscm

Semua sekaligus:
    python -m app.main --out out pipeline

Environment (prefix PROTOSCRIPT_):
    PROTOSCRIPT_PROTO_SIDE=32 PROTOSCRIPT_LINE_HEIGHT=32 python -m app.main pipeline
"""
