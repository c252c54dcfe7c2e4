"""
Command line module for shadowtree.
Parses arguments, runs the pipeline or a replay, and writes the reports.
"""

import argparse
import logging
import sys
from pathlib import Path

from shadowtree.config import DEFAULT_CONFIG, load_config, parse_config, update_config
from shadowtree.errors import ConfigError
from shadowtree.pipeline import EXIT_CONFIG_ERROR, EXIT_FAILURE, EXIT_OK, run_pipeline, run_sequence
from shadowtree.reports import canonical_value, diff_reports, emit, load_report, save_excel, write_telemetry

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


def build_parser():
    parser = argparse.ArgumentParser(
        prog='shadowtree',
        description="Construct and certify semigroups whose critical exponent approximates a group's.",
    )
    parser.add_argument('--config', type=Path, help="JSON run configuration (defaults apply when omitted)")
    parser.add_argument('--mode', choices=('single', 'sequence'), default='single')
    parser.add_argument('--emit', choices=('json', 'csv', 'both'), default=None,
                        help="report format; overrides output.emit")
    parser.add_argument('--replay', type=Path, metavar='REPORT',
                        help="re-run the configuration echoed in a JSON report and compare")
    parser.add_argument('--threads', type=int, default=1, help="worker threads for certification")
    parser.add_argument('--seed', type=int, default=None, help="random seed; overrides the configuration")
    parser.add_argument('--output', type=Path, default=None, help="output directory; overrides output.directory")
    parser.add_argument('--excel', action='store_true', help="also write an Excel workbook")
    parser.add_argument('--verbose', action='store_true', help="debug logging")
    return parser


def configure_logging(verbose=False):
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, format=LOG_FORMAT, force=True)


def _resolve_config(args):
    config = load_config(args.config) if args.config else parse_config(DEFAULT_CONFIG)
    overrides = {}
    if args.seed is not None:
        overrides['seed'] = args.seed
    output = {}
    if args.emit:
        output['emit'] = args.emit
    if args.output:
        output['directory'] = str(args.output)
    if args.excel:
        output['excel'] = True
    if output:
        overrides['output'] = output
    return update_config(config, **overrides) if overrides else config


def _replay(args):
    recorded = load_report(args.replay)
    if 'runs' in recorded:
        raise ConfigError("Replay takes a single-run report", ['replay: sequence reports are not replayed'])
    config = parse_config(recorded['config'])
    report = run_pipeline(config, threads=args.threads)
    replayed = canonical_value(report.to_dict())
    mismatches = diff_reports(recorded, replayed)
    if mismatches:
        logger.error("Replay differs at %d paths: %s", len(mismatches), ', '.join(mismatches[:10]))
        return EXIT_FAILURE
    logger.info("Replay of %s reproduces the recorded report", args.replay)
    return EXIT_OK


def main(argv=None):
    """
    Entry point of ``python -m shadowtree``.

    Returns:
        int exit code: 0 success, 1 other stage failure, 2 certification
        FAIL, 3 seed not found, 4 configuration error
    """
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        if args.replay:
            return _replay(args)
        config = _resolve_config(args)
        if args.mode == 'sequence':
            report = run_sequence(config, threads=args.threads)
        else:
            report = run_pipeline(config, threads=args.threads)
    except ConfigError as exc:
        logger.error("%s", exc.message)
        for line in exc.field_errors:
            logger.error("  %s", line)
        return EXIT_CONFIG_ERROR
    except ValueError as exc:
        logger.error("Invalid run request: %s", exc)
        return EXIT_CONFIG_ERROR
    except OSError as exc:
        logger.error("%s", exc)
        return EXIT_FAILURE

    output = config.output
    directory = Path(output.directory)
    try:
        emit(report, directory, fmt=output.emit, name=output.name)
        write_telemetry(report, directory / f"{output.name}_telemetry.json")
        if output.excel:
            save_excel(report, directory / f"{output.name}.xlsx")
    except OSError as exc:
        logger.error("%s", exc)
        return EXIT_FAILURE
    return report.exit_code


if __name__ == '__main__':
    sys.exit(main())
