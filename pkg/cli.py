#!/usr/bin/env python3
"""
Command-line interface for extropy experiments
"""

import argparse
import sys
from typing import List, Optional

from dotenv import load_dotenv

from core.exceptions import ExtropyConfigError, InadmissibleSequenceError, RuntimeGuardError
from core.utils import configure_logging
from runner.experiment_runner import ExperimentRunner
from runner.task_registry import EXPERIMENT_TASKS

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_GUARD = 3


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', '-c', help='Path to configuration file (YAML or JSON)')
    common.add_argument('--seed', type=int, help='Sampler seed, overrides sampler.seed')
    common.add_argument('--workers', type=int, help='Worker processes, overrides global.workers')
    common.add_argument('--out', help='Output directory, overrides global.out_dir')
    common.add_argument('--verbose', '-v', action='store_true', help='Verbose output')

    parser = argparse.ArgumentParser(
        description='extropy - complexity and entropy per unit time and volume of lattice systems',
    )
    parser.set_defaults(config=None, root_config=None, seed=None, workers=None, out=None, verbose=False)
    parser.add_argument('--config', '-c', dest='root_config', help='Configuration file for run queries')
    parser.add_argument('--list-runs', action='store_true', help='List recorded runs')
    parser.add_argument('--run-status', help='Get status of a specific run id')

    subparsers = parser.add_subparsers(dest='command')
    for task in EXPERIMENT_TASKS:
        subparsers.add_parser(task["name"], help=task["description"], parents=[common])
    return parser


def config_overrides(args: argparse.Namespace) -> dict:
    overrides = {}
    if args.seed is not None:
        overrides.setdefault('sampler', {})['seed'] = args.seed
    if args.workers is not None:
        overrides.setdefault('global', {})['workers'] = args.workers
    if args.out:
        overrides.setdefault('global', {})['out_dir'] = args.out
    return overrides


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point; returns the process exit code"""
    load_dotenv()
    configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        runner = ExperimentRunner(args.config or args.root_config, config_overrides(args), verbose=args.verbose)

        # Handle utility commands
        if args.list_runs:
            runs = runner.list_runs()
            if not runs:
                print("No recorded runs found")
                return EXIT_OK
            print(f"Found {len(runs)} recorded runs:")
            for run in runs:
                print(f"  {run['run_id']}: {run['subcommand']} - {run['current_step']}")
            return EXIT_OK

        if args.run_status:
            status = runner.get_run_status(args.run_status)
            if status['status'] == 'not_found':
                print(f"Run not found: {args.run_status}")
                return EXIT_FAILURE
            if status['status'] == 'error':
                print(f"Error reading run: {status['error']}")
                return EXIT_FAILURE
            print(f"Run: {status['run_id']}")
            for run in status['runs']:
                print(f"  {run['subcommand']}: {run['current_step']}")
            return EXIT_OK

        if not args.command:
            parser.print_help()
            return EXIT_CONFIG

        manifest = runner.run(args.command)
        print(f"{args.command} completed (run {manifest['run_id']})")
        print(f"Outputs: {', '.join(manifest['outputs'])}")
        return EXIT_OK

    except ExtropyConfigError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except InadmissibleSequenceError as e:
        print(f"Inadmissible window sequence: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except RuntimeGuardError as e:
        print(f"Runtime guard: {e}", file=sys.stderr)
        for suggestion in e.recovery_suggestions:
            print(f"  - {suggestion}", file=sys.stderr)
        return EXIT_GUARD
    except Exception as e:
        print(f"Error: {e}", file=sys.stderr)
        if args.verbose:
            import traceback
            traceback.print_exc()
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
