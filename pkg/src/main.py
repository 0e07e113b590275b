"""Command-line entry point.

This module parses arguments, configures logging and dispatches the run,
check, flow-test, presets and history subcommands. Exit codes: 0 on
success, 1 when a check or run fails, 2 on configuration errors.
"""

import argparse
import logging
import os
import sys
from collections.abc import Sequence
from pathlib import Path

from src.config.defaults import DEFAULT_CONFIG_PATH, PRESET_DIMS, WORKERS_ENV_VAR
from src.config.loader import ConfigLoader
from src.config.models import RunConfig
from src.errors import ConfigurationError, TwoScaleError

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
CSV_NAME = "convergence.csv"
RESOLVED_CONFIG_NAME = "resolved_config.toml"

logger = logging.getLogger(__name__)


def configure_logging(level: str, log_file: str | None) -> None:
    """Configure the root logger, optionally adding a file handler.

    Args:
        level: Level name (DEBUG, INFO, WARNING, ERROR)
        log_file: Optional path of a log file
    """
    logging.basicConfig(level=level, format=LOG_FORMAT, force=True)
    if log_file:
        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(level)
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logging.getLogger().addHandler(file_handler)


def resolve_workers(flag: int | None, config: RunConfig) -> int:
    """Worker count from the flag, else TS_WORKERS, else the configuration.

    Raises:
        ConfigurationError: If TS_WORKERS is not a positive integer
    """
    if flag is not None:
        if flag < 1:
            raise ConfigurationError("--workers must be at least 1", key="workers")
        return flag
    raw = os.environ.get(WORKERS_ENV_VAR)
    if raw:
        try:
            value = int(raw)
        except ValueError as e:
            raise ConfigurationError(
                f"{WORKERS_ENV_VAR}={raw!r} is not an integer", key=WORKERS_ENV_VAR
            ) from e
        if value < 1:
            raise ConfigurationError(f"{WORKERS_ENV_VAR} must be at least 1", key=WORKERS_ENV_VAR)
        return value
    return config.sweep.workers


def parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    """Parse command-line arguments.

    Returns:
        Parsed arguments
    """
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging level (default: WARNING)",
    )
    common.add_argument("--log-file", default=None, help="Also write the log to this file")
    common.add_argument(
        "--workers",
        type=int,
        default=None,
        help=f"Concurrent reference solves (default: ${WORKERS_ENV_VAR}, then [sweep] workers)",
    )

    parser = argparse.ArgumentParser(
        description="Two-scale expansions of singularly perturbed convection equations"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", parents=[common], help="Run a convergence sweep")
    run.add_argument(
        "--config",
        default=DEFAULT_CONFIG_PATH,
        help=f"Path to configuration file (default: {DEFAULT_CONFIG_PATH})",
    )
    run.add_argument("--out", default=None, help="Output directory (default: [output] directory)")

    check = commands.add_parser("check", parents=[common], help="Run the invariant suite")
    check.add_argument("--preset", choices=sorted(PRESET_DIMS), default=None)
    check.add_argument("--config", default=None, help="Check this configuration instead")

    flow_test = commands.add_parser(
        "flow-test", parents=[common], help="Check analytic and Runge-Kutta flows of a preset"
    )
    flow_test.add_argument("--preset", choices=sorted(PRESET_DIMS), required=True)
    flow_test.add_argument("--tol", type=float, default=1e-6, help="Tolerance (default: 1e-6)")
    flow_test.add_argument(
        "--substeps", type=int, default=64, help="Runge-Kutta steps per unit τ (default: 64)"
    )

    commands.add_parser("presets", parents=[common], help="List the preset catalog")

    history = commands.add_parser("history", parents=[common], help="List archived sweeps")
    history.add_argument("--db", required=True, help="Path to the DuckDB archive")
    history.add_argument("--show", type=int, default=None, help="Print the rows of one sweep")

    return parser.parse_args(argv)


def _print_config_error(error: Exception) -> None:
    print("\n❌ Configuration error:", file=sys.stderr)
    print(f"   {error}", file=sys.stderr)


def command_run(args: argparse.Namespace) -> int:
    """Run a sweep and write the CSV report and the resolved configuration."""
    from src.execution.executor import run_sweep
    from src.execution.report import write_report

    config_path = Path(args.config)
    config = ConfigLoader.load(config_path)
    print(f"✓ Configuration loaded from {config_path}")
    workers = resolve_workers(args.workers, config)
    out = Path(args.out or config.output.directory)
    print(
        f"   - Preset {config.problem.preset}, K={config.expansion.order}, "
        f"{len(config.sweep.eps)} eps values, {workers} worker(s)"
    )

    report = run_sweep(config, workers)
    csv_path = write_report(report, out / CSV_NAME)
    resolved_path = out / RESOLVED_CONFIG_NAME
    ConfigLoader.save(config, resolved_path)
    print(f"✓ Report written to {csv_path}")
    print(f"✓ Resolved configuration written to {resolved_path}")

    for k in range(report.order + 1):
        fit = report.fits.get(k)
        if fit is None:
            print(f"   - K={k}: no slope (fewer than two errors)")
        elif fit.reliable:
            print(f"   - K={k}: slope {fit.slope:.3f} (R²={fit.r_squared:.4f})")
        else:
            print(f"   - K={k}: slope unreliable (R²={fit.r_squared:.4f}, {fit.points} points)")

    if config.output.database:
        from src.database.connection import open_archive
        from src.database.repositories import ReportRepository

        db = open_archive(config.output.database)
        try:
            sweep_id = ReportRepository(db).save_report(
                report, resolved_path.read_text(encoding="utf-8")
            )
        finally:
            db.close()
        print(f"✓ Archived as sweep #{sweep_id} in {config.output.database}")

    if report.failed_count:
        print(f"\n❌ {report.failed_count} reference run(s) failed or timed out", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def command_check(args: argparse.Namespace) -> int:
    """Run the invariant suite and print the ledger."""
    from src.execution.invariants import run_invariant_suite, run_invariants

    if args.config:
        ledger = run_invariant_suite(ConfigLoader.load(args.config))
    elif args.preset:
        ledger = run_invariants(args.preset)
    else:
        raise ConfigurationError("check needs --preset or --config")
    print(f"Invariant checks for {ledger.preset}:")
    for check in ledger.checks:
        print(f"   {check.summary()}")
    if ledger.passed:
        print(f"✓ All {len(ledger.checks)} checks passed")
        return EXIT_OK
    print(f"\n❌ {len(ledger.failures())} of {len(ledger.checks)} checks failed", file=sys.stderr)
    return EXIT_FAILED


def command_flow_test(args: argparse.Namespace) -> int:
    """Compare the analytic flow of a preset with its Runge–Kutta counterpart."""
    from src.config.defaults import CHECK_RESOLUTION
    from src.flow.diagnostics import (
        check_periodicity,
        check_volume,
        compare_flows,
        sample_flow_points,
    )
    from src.presets.registry import default_limit_model

    model = default_limit_model(args.preset, CHECK_RESOLUTION[args.preset])
    sample = sample_flow_points(model.problem.grid)
    numeric = model.numeric_flow(args.substeps)
    results = {
        "analytic closure": check_periodicity(model.flow, sample),
        "analytic volume": check_volume(model.flow, sample),
        "numeric closure": check_periodicity(numeric, sample),
        "analytic vs numeric": compare_flows(model.flow, numeric, sample),
    }
    passed = True
    for name, value in results.items():
        ok = value <= args.tol
        passed = passed and ok
        print(f"   {'✓' if ok else '❌'} {name}: {value:.3e} (tolerance {args.tol:.1e})")
    return EXIT_OK if passed else EXIT_FAILED


def command_presets(args: argparse.Namespace) -> int:
    """Print the preset catalog."""
    from src.presets.registry import preset_catalog

    for info in preset_catalog():
        print(f"{info.name:<6} dims={info.dims}  theta={info.theta:.6f}  {info.description}")
    return EXIT_OK


def command_history(args: argparse.Namespace) -> int:
    """List archived sweeps or print one of them."""
    from src.database.connection import open_archive
    from src.database.repositories import ReportRepository

    if not Path(args.db).exists():
        raise ConfigurationError(f"archive not found: {args.db}", key="--db")
    db = open_archive(args.db)
    try:
        repository = ReportRepository(db)
        if args.show is not None:
            report = repository.get_report(args.show)
            if report is None:
                print(f"❌ No sweep #{args.show} in {args.db}", file=sys.stderr)
                return EXIT_FAILED
            for row in report.sorted_rows():
                error = "-" if row.error is None else f"{row.error:.3e}"
                print(f"   K={row.order} eps={row.eps:.6g} error={error} [{row.status.value}]")
            return EXIT_OK
        sweeps = repository.list_sweeps()
    finally:
        db.close()
    if not sweeps:
        print("No archived sweeps")
    for sweep in sweeps:
        print(
            f"#{sweep.id:<4} {sweep.created_at:%Y-%m-%d %H:%M:%S}  {sweep.preset:<6} "
            f"K={sweep.max_order} norm={sweep.norm} rows={sweep.rows}"
        )
    return EXIT_OK


_COMMANDS = {
    "run": command_run,
    "check": command_check,
    "flow-test": command_flow_test,
    "presets": command_presets,
    "history": command_history,
}


def main(argv: Sequence[str] | None = None) -> int:
    """Main application entry point.

    Args:
        argv: Arguments without the program name (defaults to sys.argv[1:])

    Returns:
        Process exit code
    """
    args = parse_args(argv)
    configure_logging(args.log_level, args.log_file)
    try:
        return _COMMANDS[args.command](args)
    except FileNotFoundError as e:
        _print_config_error(e)
        return EXIT_CONFIG
    except ConfigurationError as e:
        _print_config_error(e)
        return EXIT_CONFIG
    except OSError as e:
        logger.error("Command %s could not write its output: %s", args.command, e)
        print(f"\n❌ Cannot write output: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except TwoScaleError as e:
        logger.exception("Command %s failed", args.command)
        print(f"\n❌ {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
