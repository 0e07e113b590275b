"""CSV emission and parse-back of convergence reports.

Rows are written ε descending, then K ascending. Floats use the shortest
round-trip form (repr) and missing values are empty fields, so identical
reports give byte-identical files.
"""

import csv
import logging
from pathlib import Path

from src.models.report import ConvergenceReport, RunStatus, SlopeFit, SweepRow

logger = logging.getLogger(__name__)

CSV_HEADER = (
    "preset",
    "K",
    "eps",
    "norm",
    "error",
    "slope_fit",
    "r_squared",
    "w_closure_residual",
    "flow_residual",
    "norm_drift",
    "engine_seconds",
    "reference_seconds",
)

_OPTIONAL = ("error", "slope_fit", "r_squared", "norm_drift", "engine_seconds", "reference_seconds")


def _number(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def _row_fields(row: SweepRow) -> list[str]:
    return [
        row.preset,
        str(row.order),
        _number(row.eps),
        row.norm,
        _number(row.error),
        _number(row.slope_fit),
        _number(row.r_squared),
        _number(row.w_closure_residual),
        _number(row.flow_residual),
        _number(row.norm_drift),
        _number(row.engine_seconds),
        _number(row.reference_seconds),
    ]


def write_report(report: ConvergenceReport, path: str | Path) -> Path:
    """Write a report as CSV.

    Args:
        report: Report to write
        path: Target file (parent directories are created)

    Returns:
        The written path

    Raises:
        OSError: If the file cannot be written; the message names the path
    """
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        with target.open("w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for row in report.sorted_rows():
                writer.writerow(_row_fields(row))
    except OSError as e:
        raise OSError(f"Cannot write report to {target}: {e}") from e
    logger.info("Wrote %d rows to %s", len(report.rows), target)
    return target


def _optional(value: str) -> float | None:
    return float(value) if value else None


def read_report(path: str | Path) -> ConvergenceReport:
    """Parse a CSV written by write_report.

    Slope fits are restored from the slope_fit/r_squared columns; the
    intercept is not part of the CSV and reads back as 0.

    Raises:
        FileNotFoundError: If the file does not exist
        ValueError: If the header does not match
    """
    source = Path(path)
    if not source.exists():
        raise FileNotFoundError(f"Report file not found: {source}")
    with source.open(encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"{source}: unexpected header {reader.fieldnames}")
        rows = []
        for record in reader:
            values = {key: _optional(record[key]) for key in _OPTIONAL}
            rows.append(
                SweepRow(
                    preset=record["preset"],
                    order=int(record["K"]),
                    eps=float(record["eps"]),
                    norm=record["norm"],
                    w_closure_residual=float(record["w_closure_residual"]),
                    flow_residual=float(record["flow_residual"]),
                    status=RunStatus.COMPLETED if values["error"] is not None else RunStatus.FAILED,
                    **values,
                )
            )
    report = ConvergenceReport(
        preset=rows[0].preset if rows else "",
        order=max((row.order for row in rows), default=0),
        norm=rows[0].norm if rows else "2",
        rows=rows,
        flow_residual=rows[0].flow_residual if rows else 0.0,
    )
    for row in rows:
        if row.r_squared is not None and row.order not in report.fits:
            count = len(report.errors(row.order)[0])
            report.fits[row.order] = SlopeFit(
                slope=row.slope_fit if row.slope_fit is not None else float("nan"),
                intercept=0.0,
                r_squared=row.r_squared,
                points=count,
                reliable=row.slope_fit is not None,
            )
    return report
