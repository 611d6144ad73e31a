"""
Database storage module for the run ledger - one SQLite file per output
directory, written through aiosqlite from the async runner.
"""

import json
import os
import sqlite3
from datetime import datetime
from typing import Any, Dict, List, Optional

import aiosqlite

DB_NAME = "run_summaries.db"


def db_path_for(output_dir: str) -> str:
    return os.path.join(output_dir, DB_NAME)


def ensure_db_initialized(db_path: str):
    """Create the run_summaries table if it doesn't exist"""
    os.makedirs(os.path.dirname(db_path) or ".", exist_ok=True)

    conn = sqlite3.connect(db_path)
    try:
        conn.execute('''
        CREATE TABLE IF NOT EXISTS run_summaries (
            run_id TEXT PRIMARY KEY,
            experiment TEXT NOT NULL,
            seed INTEGER NOT NULL,
            config_hash TEXT NOT NULL,
            parameters TEXT NOT NULL,
            status TEXT NOT NULL,
            created_at TEXT NOT NULL,
            started_at TEXT,
            completed_at TEXT,
            worker_count INTEGER,
            cpu_time_seconds REAL,
            error_code TEXT,
            result_files TEXT
        )
        ''')
        conn.commit()
    finally:
        conn.close()


async def save_run_summary(
    db_path: str,
    run_id: str,
    experiment: str,
    seed: int,
    config_hash: str,
    parameters: Dict,
    status: str,
    created_at: datetime,
    started_at: Optional[datetime] = None,
    completed_at: Optional[datetime] = None,
    worker_count: Optional[int] = None,
    cpu_time_seconds: Optional[float] = None,
    error_code: Optional[str] = None,
    result_files: Optional[Dict[str, str]] = None
) -> None:
    """Save or update a run summary"""
    ensure_db_initialized(db_path)
    async with aiosqlite.connect(db_path) as db:
        await db.execute('''
        INSERT OR REPLACE INTO run_summaries (
            run_id, experiment, seed, config_hash, parameters, status,
            created_at, started_at, completed_at,
            worker_count, cpu_time_seconds, error_code, result_files
        ) VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
        ''', (
            run_id, experiment, seed, config_hash, json.dumps(parameters, sort_keys=True), status,
            created_at.isoformat(),
            started_at.isoformat() if started_at else None,
            completed_at.isoformat() if completed_at else None,
            worker_count, cpu_time_seconds, error_code,
            json.dumps(result_files) if result_files else None
        ))
        await db.commit()


def _decode(row: aiosqlite.Row) -> Dict[str, Any]:
    run = dict(row)
    if run.get('parameters'):
        run['parameters'] = json.loads(run['parameters'])
    if run.get('result_files'):
        run['result_files'] = json.loads(run['result_files'])
    return run


async def get_run_summaries(db_path: str, limit: int = 100, offset: int = 0) -> List[Dict[str, Any]]:
    """Most recent runs first"""
    ensure_db_initialized(db_path)
    async with aiosqlite.connect(db_path) as db:
        db.row_factory = aiosqlite.Row
        cursor = await db.execute('''
        SELECT * FROM run_summaries
        ORDER BY created_at DESC
        LIMIT ? OFFSET ?
        ''', (limit, offset))
        return [_decode(row) for row in await cursor.fetchall()]


async def get_run_by_id(db_path: str, run_id: str) -> Optional[Dict[str, Any]]:
    ensure_db_initialized(db_path)
    async with aiosqlite.connect(db_path) as db:
        db.row_factory = aiosqlite.Row
        cursor = await db.execute("SELECT * FROM run_summaries WHERE run_id = ?", (run_id,))
        row = await cursor.fetchone()
        return _decode(row) if row else None
