#!/usr/bin/env python3
"""Command-line entry point and orchestrator for the Campanato/Morrey experiment suites."""

import os
os.environ['EXPERIMENT_NAME'] = os.getenv('EXPERIMENT_NAME', 'campanato')
os.environ['RUN_ID'] = os.getenv('RUN_ID', 'local-run')

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

from core.errors import CampanatoError, ConfigurationError, StageError, describe
from utils import debug, save_state, validate_environment, write_csv, write_report
from utils.config import ExperimentConfig, ExperimentKind, load_config
from utils.suite import SuiteResult
from assets.dirichlet_forward.dirichlet_forward import process_dirichlet_forward
from assets.equivalence.equivalence import process_equivalence
from assets.explore.explore import process_engine_build, process_limits, process_norm, process_semigroup
from assets.kernel_bounds.kernel_bounds import process_kernel_bounds
from assets.kernel_triviality.kernel_triviality import process_kernel_triviality
from assets.lemma_checks.lemma_checks import process_lemma_checks
from assets.rh_certify.rh_certify import process_rh_certify
from assets.trace_inverse.trace_inverse import process_trace_inverse

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_STAGE_ERROR = 1
EXIT_CRITERIA_FAILED = 2
EXIT_CONFIGURATION = 3

Processor = Callable[[ExperimentConfig], SuiteResult]

SUITES: Dict[ExperimentKind, Processor] = {
    ExperimentKind.EQUIVALENCE: process_equivalence,
    ExperimentKind.KERNEL_TRIVIALITY: process_kernel_triviality,
    ExperimentKind.DIRICHLET_FORWARD: process_dirichlet_forward,
    ExperimentKind.TRACE_INVERSE: process_trace_inverse,
    ExperimentKind.KERNEL_BOUNDS: process_kernel_bounds,
    ExperimentKind.LEMMA_CHECKS: process_lemma_checks,
    ExperimentKind.RH_CERTIFY: process_rh_certify,
}

COMMANDS: Dict[str, Optional[Processor]] = {
    'engine-build': process_engine_build,
    'norm': process_norm,
    'semigroup': process_semigroup,
    'limits': process_limits,
    'rh-check': process_rh_certify,
    'dirichlet': process_dirichlet_forward,
    'trace': process_trace_inverse,
    'experiment': None,  # dispatched on experiment.kind
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='campanato', description=__doc__)
    subcommands = parser.add_subparsers(dest='command', required=True)
    for name in COMMANDS:
        sub = subcommands.add_parser(name)
        sub.add_argument('--config', type=Path, required=True, help="experiment TOML file")
        sub.add_argument('--out', type=Path, default=None, help="output directory (default: output.dir)")
        sub.add_argument('--log-level', default='INFO', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    return parser


def resolve_processor(command: str, config: ExperimentConfig) -> Processor:
    processor = COMMANDS[command]
    return processor if processor is not None else SUITES[config.kind]


def emit(result: SuiteResult, config: ExperimentConfig, out_dir: Path):
    write_csv(result.table, out_dir, result.name)
    write_report(result.report(config), out_dir, result.name)
    save_state(result.name, {
        'config_digest': config.digest(),
        'seed': config.seed,
        'passed': result.passed,
        'checks': result.checks,
    })


def finish(result: SuiteResult) -> int:
    if not result.passed:
        failed = [name for name, ok in result.checks.items() if not ok]
        logger.warning(f"{result.name}: criteria failed: {failed}")
        debug.log_run_end('criteria_failed')
        return EXIT_CRITERIA_FAILED
    logger.info(f"{result.name}: all {len(result.checks)} criteria met")
    debug.log_run_end('completed')
    return EXIT_OK


def run(command: str, config_path: Path, out: Optional[Path] = None) -> int:
    """Load, run, emit; the return value is the process exit code."""
    try:
        validate_environment()
    except ValueError as e:
        logger.error(f"Environment is incomplete: {e}")
        return EXIT_CONFIGURATION

    debug.log_run_start()
    try:
        config = load_config(config_path)
        result = resolve_processor(command, config)(config)
        emit(result, config, out or config.out_dir)
        return finish(result)
    except ConfigurationError as e:
        logger.error(describe(e))
        debug.log_run_end('failed', e)
        return EXIT_CONFIGURATION
    except StageError as e:
        logger.error(describe(e.cause, e.stage))
        debug.log_run_end('failed', e)
        return EXIT_CONFIGURATION if e.is_configuration else EXIT_STAGE_ERROR
    except CampanatoError as e:
        logger.error(describe(e))
        debug.log_run_end('failed', e)
        return EXIT_STAGE_ERROR
    finally:
        debug.close()


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), force=True)
    return run(args.command, args.config, args.out)


if __name__ == "__main__":
    sys.exit(main())
