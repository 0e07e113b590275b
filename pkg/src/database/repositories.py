"""Database repository for archived convergence reports."""

import logging
from datetime import datetime

from pydantic import BaseModel

from src.database.connection import DatabaseConnection
from src.models.report import ConvergenceReport, RunStatus, SweepRow

logger = logging.getLogger(__name__)


class SweepSummary(BaseModel):
    """Listing entry of an archived sweep.

    Attributes:
        id: Database ID
        preset: Preset name
        max_order: Highest expansion order K
        norm: Norm label
        rows: Number of stored rows
        created_at: Archive timestamp
    """

    id: int
    preset: str
    max_order: int
    norm: str
    rows: int
    created_at: datetime


class ReportRepository:
    """Stores and retrieves convergence reports."""

    def __init__(self, db: DatabaseConnection):
        """Initialize repository with database connection.

        Args:
            db: DatabaseConnection instance
        """
        self.db = db

    def save_report(self, report: ConvergenceReport, config_toml: str | None = None) -> int:
        """Archive a report with all of its rows.

        Args:
            report: Report to store
            config_toml: Resolved configuration the report was produced with

        Returns:
            Database ID of the sweep

        Raises:
            RuntimeError: If no ID is returned
        """
        conn = self.db.connect()
        result = conn.execute(
            """
            INSERT INTO sweeps (preset, max_order, norm, engine_seconds, flow_residual, config_toml)
            VALUES (?, ?, ?, ?, ?, ?)
            RETURNING id
            """,
            [
                report.preset,
                report.order,
                report.norm,
                report.engine_seconds,
                report.flow_residual,
                config_toml,
            ],
        ).fetchone()
        if result is None:
            raise RuntimeError("Failed to archive sweep: no ID returned")
        sweep_id: int = result[0]

        for row in report.sorted_rows():
            conn.execute(
                """
                INSERT INTO sweep_rows
                (sweep_id, K, eps, status, error, slope_fit, r_squared, w_closure_residual,
                 flow_residual, norm_drift, engine_seconds, reference_seconds)
                VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
                """,
                [
                    sweep_id,
                    row.order,
                    row.eps,
                    row.status.value,
                    row.error,
                    row.slope_fit,
                    row.r_squared,
                    row.w_closure_residual,
                    row.flow_residual,
                    row.norm_drift,
                    row.engine_seconds,
                    row.reference_seconds,
                ],
            )
        conn.commit()
        logger.info("Archived %s sweep as #%d (%d rows)", report.preset, sweep_id, len(report.rows))
        return sweep_id

    def get_report(self, sweep_id: int) -> ConvergenceReport | None:
        """Load an archived report.

        Args:
            sweep_id: Database ID of the sweep

        Returns:
            The report, or None if the ID is unknown
        """
        conn = self.db.connect()
        sweep = conn.execute(
            "SELECT preset, max_order, norm, engine_seconds, flow_residual "
            "FROM sweeps WHERE id = ?",
            [sweep_id],
        ).fetchone()
        if sweep is None:
            return None
        preset, max_order, norm, engine_seconds, flow_residual = sweep
        records = conn.execute(
            """
            SELECT K, eps, status, error, slope_fit, r_squared, w_closure_residual,
                   flow_residual, norm_drift, engine_seconds, reference_seconds
            FROM sweep_rows WHERE sweep_id = ? ORDER BY eps DESC, K ASC
            """,
            [sweep_id],
        ).fetchall()
        rows = [
            SweepRow(
                preset=preset,
                order=r[0],
                eps=r[1],
                norm=norm,
                status=RunStatus(r[2]),
                error=r[3],
                slope_fit=r[4],
                r_squared=r[5],
                w_closure_residual=r[6],
                flow_residual=r[7],
                norm_drift=r[8],
                engine_seconds=r[9],
                reference_seconds=r[10],
            )
            for r in records
        ]
        return ConvergenceReport(
            preset=preset,
            order=max_order,
            norm=norm,
            rows=rows,
            engine_seconds=engine_seconds,
            flow_residual=flow_residual,
        )

    def get_config(self, sweep_id: int) -> str | None:
        """Return the stored configuration of a sweep, if any."""
        result = self.db.connect().execute(
            "SELECT config_toml FROM sweeps WHERE id = ?", [sweep_id]
        ).fetchone()
        return None if result is None else result[0]

    def list_sweeps(self, limit: int = 50) -> list[SweepSummary]:
        """List archived sweeps, newest first.

        Args:
            limit: Maximum number of entries

        Returns:
            Sweep summaries
        """
        records = self.db.connect().execute(
            """
            SELECT s.id, s.preset, s.max_order, s.norm, COUNT(r.id), s.created_at
            FROM sweeps s LEFT JOIN sweep_rows r ON r.sweep_id = s.id
            GROUP BY s.id, s.preset, s.max_order, s.norm, s.created_at
            ORDER BY s.created_at DESC, s.id DESC
            LIMIT ?
            """,
            [limit],
        ).fetchall()
        return [
            SweepSummary(
                id=r[0], preset=r[1], max_order=r[2], norm=r[3], rows=r[4], created_at=r[5]
            )
            for r in records
        ]
