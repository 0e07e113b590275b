"""DuckDB connection management for the sweep report archive.

This module opens the archive file and creates the schema on first use.
"""

import logging
from pathlib import Path

import duckdb

from .schema import ALL_DDL_STATEMENTS, SCHEMA_VERSION

logger = logging.getLogger(__name__)


class DatabaseConnection:
    """Lazily opened DuckDB connection to one archive file.

    Attributes:
        db_path: Path to the DuckDB file
        conn: Active connection (None until connect is called)
    """

    def __init__(self, db_path: str | Path) -> None:
        self.db_path = Path(db_path)
        self.conn: duckdb.DuckDBPyConnection | None = None

    def connect(self) -> duckdb.DuckDBPyConnection:
        """Open the connection if needed and return it.

        Raises:
            duckdb.Error: If the file cannot be opened
        """
        if self.conn is None:
            self.db_path.parent.mkdir(parents=True, exist_ok=True)
            self.conn = duckdb.connect(str(self.db_path))
        return self.conn

    def close(self) -> None:
        """Close the connection."""
        if self.conn is not None:
            self.conn.close()
            self.conn = None

    def initialize_schema(self) -> None:
        """Create missing tables and record the schema version.

        Raises:
            duckdb.Error: If a DDL statement fails
        """
        conn = self.connect()
        for ddl in ALL_DDL_STATEMENTS:
            conn.execute(ddl)
        recorded = conn.execute(
            "SELECT version FROM schema_metadata WHERE version = ?", [SCHEMA_VERSION]
        ).fetchone()
        if recorded is None:
            conn.execute("INSERT INTO schema_metadata (version) VALUES (?)", [SCHEMA_VERSION])
            logger.info("Initialized report archive %s (schema v%d)", self.db_path, SCHEMA_VERSION)
        conn.commit()

    def __enter__(self) -> duckdb.DuckDBPyConnection:
        return self.connect()

    def __exit__(self, exc_type: type, exc_val: Exception, exc_tb: object) -> None:
        self.close()


def open_archive(db_path: str | Path) -> DatabaseConnection:
    """Open an archive file, creating its schema when missing.

    Args:
        db_path: Path to the DuckDB file

    Returns:
        Connected DatabaseConnection
    """
    db = DatabaseConnection(db_path)
    db.initialize_schema()
    return db
