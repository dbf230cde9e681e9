"""Run log for experiment suites, kept in duckdb.

Two databases, both only touched when ``CAMPANATO_DEBUG_LOG=true``:

* ``$DATA_DIR/runs.db`` holds one row per run id across every experiment.
* ``$DATA_DIR/<experiment>/debug/logs.db`` holds stage timings, emitted
  reports and ``.state`` transitions for a single experiment name.
"""
import os
import json
import logging
import traceback
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

import duckdb

from .environment import get_data_dir, get_experiment_name, get_run_id, is_debug_log_enabled

logger = logging.getLogger(__name__)

RUNS_SCHEMA = [
    """
    CREATE TABLE IF NOT EXISTS runs (
        run_id VARCHAR PRIMARY KEY,
        experiment VARCHAR,
        started_at TIMESTAMP,
        ended_at TIMESTAMP,
        status VARCHAR,
        environment JSON,
        error_message VARCHAR,
        error_traceback TEXT,
        total_stages INTEGER DEFAULT 0,
        failed_stages INTEGER DEFAULT 0,
        report_rows_output BIGINT DEFAULT 0
    )
    """,
    "CREATE INDEX IF NOT EXISTS idx_experiment ON runs(experiment)",
]

LOGS_SCHEMA = [
    "CREATE SEQUENCE IF NOT EXISTS seq_stages START 1",
    "CREATE SEQUENCE IF NOT EXISTS seq_report_outputs START 1",
    "CREATE SEQUENCE IF NOT EXISTS seq_state_changes START 1",
    """
    CREATE TABLE IF NOT EXISTS stages (
        id INTEGER PRIMARY KEY DEFAULT nextval('seq_stages'),
        run_id VARCHAR,
        timestamp TIMESTAMP,
        stage VARCHAR,
        duration_ms INTEGER,
        status VARCHAR,
        error_message VARCHAR,
        metrics JSON
    )
    """,
    "CREATE INDEX IF NOT EXISTS idx_stage_run ON stages(run_id)",
    """
    CREATE TABLE IF NOT EXISTS report_outputs (
        id INTEGER PRIMARY KEY DEFAULT nextval('seq_report_outputs'),
        run_id VARCHAR,
        name VARCHAR,
        timestamp TIMESTAMP,
        row_count BIGINT,
        column_count INTEGER,
        path VARCHAR,
        schema JSON
    )
    """,
    """
    CREATE TABLE IF NOT EXISTS state_changes (
        id INTEGER PRIMARY KEY DEFAULT nextval('seq_state_changes'),
        run_id VARCHAR,
        suite VARCHAR,
        timestamp TIMESTAMP,
        old_state JSON,
        new_state JSON,
        changed_keys JSON
    )
    """,
    """
    CREATE OR REPLACE VIEW failed_stages AS
    SELECT * FROM stages WHERE status = 'failed'
    """,
    """
    CREATE OR REPLACE VIEW stage_timings AS
    SELECT split_part(stage, ':', 1) AS suite, stage,
           COUNT(*) AS runs, AVG(duration_ms) AS avg_duration_ms, MAX(duration_ms) AS max_duration_ms
    FROM stages
    GROUP BY 1, 2
    """,
]

# path -> open connection; the data dir can change between runs in one process
_connections: Dict[Path, duckdb.DuckDBPyConnection] = {}


def _connect(path: Path, schema: List[str]) -> duckdb.DuckDBPyConnection:
    conn = _connections.get(path)
    if conn is None:
        path.parent.mkdir(parents=True, exist_ok=True)
        conn = duckdb.connect(str(path))
        for statement in schema:
            conn.execute(statement)
        _connections[path] = conn
        logger.info(f"Run log opened at {path}")
    return conn


def _runs() -> duckdb.DuckDBPyConnection:
    return _connect(Path(get_data_dir()) / "runs.db", RUNS_SCHEMA)


def _logs() -> duckdb.DuckDBPyConnection:
    return _connect(Path(get_data_dir()) / get_experiment_name() / "debug" / "logs.db", LOGS_SCHEMA)


def _json(value: Any) -> Optional[str]:
    return None if value is None else json.dumps(value, default=str)


def log_run_start():
    if not is_debug_log_enabled():
        return
    env_vars = {k: v for k, v in os.environ.items()
                if k.startswith(('CAMPANATO_', 'ENABLE_', 'RUN_', 'DATA_', 'EXPERIMENT_'))}
    _runs().execute("""
        INSERT INTO runs (run_id, experiment, started_at, status, environment)
        VALUES (?, ?, ?, 'started', ?)
        ON CONFLICT (run_id) DO UPDATE SET
            started_at = EXCLUDED.started_at,
            status = EXCLUDED.status,
            ended_at = NULL,
            error_message = NULL
    """, [get_run_id(), get_experiment_name(), datetime.now(), _json(env_vars)])


def log_run_end(status: str = 'completed', error: Optional[Exception] = None):
    """Close the run row with stage and output counts taken from the experiment log."""
    if not is_debug_log_enabled():
        return
    run_id = get_run_id()
    try:
        stages, failed, rows = _logs().execute("""
            SELECT
                (SELECT COUNT(*) FROM stages WHERE run_id = ?),
                (SELECT COUNT(*) FROM failed_stages WHERE run_id = ?),
                (SELECT COALESCE(SUM(row_count), 0) FROM report_outputs WHERE run_id = ?)
        """, [run_id] * 3).fetchone()
    except duckdb.Error as e:
        logger.warning(f"Could not count stages for {run_id}: {e}")
        stages, failed, rows = 0, 0, 0

    _runs().execute("""
        UPDATE runs
        SET ended_at = ?, status = ?, error_message = ?, error_traceback = ?,
            total_stages = ?, failed_stages = ?, report_rows_output = ?
        WHERE run_id = ?
    """, [datetime.now(), status,
          str(error) if error else None,
          ''.join(traceback.format_exception(error)) if error else None,
          stages or 0, failed or 0, rows or 0, run_id])


def log_stage(stage: str, duration_ms: int, status: str = 'completed',
              error: Optional[str] = None, metrics: Optional[Dict] = None):
    if not is_debug_log_enabled():
        return
    _logs().execute("""
        INSERT INTO stages (run_id, timestamp, stage, duration_ms, status, error_message, metrics)
        VALUES (?, ?, ?, ?, ?, ?, ?)
    """, [get_run_id(), datetime.now(), stage, duration_ms, status, error, _json(metrics)])


def log_report_output(name: str, row_count: int, column_count: int, path: str,
                      schema: Optional[List[Dict]] = None):
    if not is_debug_log_enabled():
        return
    _logs().execute("""
        INSERT INTO report_outputs (run_id, name, timestamp, row_count, column_count, path, schema)
        VALUES (?, ?, ?, ?, ?, ?, ?)
    """, [get_run_id(), name, datetime.now(), row_count, column_count, path, _json(schema)])


def log_state_change(suite: str, old_state: Dict[str, Any], new_state: Dict[str, Any]):
    if not is_debug_log_enabled():
        return
    # _metadata always differs between runs
    keys = (set(old_state) | set(new_state)) - {'_metadata'}
    changed = sorted(k for k in keys if old_state.get(k) != new_state.get(k))
    _logs().execute("""
        INSERT INTO state_changes (run_id, suite, timestamp, old_state, new_state, changed_keys)
        VALUES (?, ?, ?, ?, ?, ?)
    """, [get_run_id(), suite, datetime.now(), _json(old_state), _json(new_state), _json(changed)])


def close():
    for conn in _connections.values():
        conn.close()
    _connections.clear()
