"""Database schema definitions for DuckDB.

This module contains the DDL statements of the sweep report archive.
"""

# Schema version for migration tracking
SCHEMA_VERSION = 1

CREATE_SCHEMA_METADATA_TABLE = """
CREATE TABLE IF NOT EXISTS schema_metadata (
    version INTEGER PRIMARY KEY,
    applied_at TIMESTAMP NOT NULL DEFAULT CURRENT_TIMESTAMP
);
"""

# One row per archived convergence report
CREATE_SWEEPS_TABLE = """
CREATE SEQUENCE IF NOT EXISTS sweeps_id_seq START 1;
CREATE TABLE IF NOT EXISTS sweeps (
    id INTEGER PRIMARY KEY DEFAULT nextval('sweeps_id_seq'),
    preset TEXT NOT NULL CHECK(length(trim(preset)) > 0),
    max_order INTEGER NOT NULL CHECK(max_order >= 0),
    norm TEXT NOT NULL CHECK(norm IN ('1', '2', 'inf')),
    engine_seconds DOUBLE,
    flow_residual DOUBLE NOT NULL,
    config_toml TEXT,
    created_at TIMESTAMP NOT NULL DEFAULT CURRENT_TIMESTAMP
);
"""

CREATE_SWEEPS_CREATED_AT_INDEX = """
CREATE INDEX IF NOT EXISTS idx_sweeps_created_at
ON sweeps(created_at DESC);
"""

CREATE_SWEEP_ROWS_TABLE = """
CREATE SEQUENCE IF NOT EXISTS sweep_rows_id_seq START 1;
CREATE TABLE IF NOT EXISTS sweep_rows (
    id INTEGER PRIMARY KEY DEFAULT nextval('sweep_rows_id_seq'),
    sweep_id INTEGER NOT NULL REFERENCES sweeps(id),
    K INTEGER NOT NULL CHECK(K >= 0),
    eps DOUBLE NOT NULL CHECK(eps > 0 AND eps < 1),
    status TEXT NOT NULL CHECK(status IN ('running', 'completed', 'failed', 'timeout')),
    error DOUBLE,
    slope_fit DOUBLE,
    r_squared DOUBLE,
    w_closure_residual DOUBLE NOT NULL,
    flow_residual DOUBLE NOT NULL,
    norm_drift DOUBLE,
    engine_seconds DOUBLE,
    reference_seconds DOUBLE,
    FOREIGN KEY (sweep_id) REFERENCES sweeps(id)
);
"""

CREATE_SWEEP_ROWS_SWEEP_ID_INDEX = """
CREATE INDEX IF NOT EXISTS idx_sweep_rows_sweep_id
ON sweep_rows(sweep_id);
"""

# All DDL statements in execution order
ALL_DDL_STATEMENTS = [
    CREATE_SCHEMA_METADATA_TABLE,
    CREATE_SWEEPS_TABLE,
    CREATE_SWEEPS_CREATED_AT_INDEX,
    CREATE_SWEEP_ROWS_TABLE,
    CREATE_SWEEP_ROWS_SWEEP_ID_INDEX,
]
