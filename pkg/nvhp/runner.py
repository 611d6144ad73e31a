"""
Runner module for executing experiments - dispatches a validated RunConfig to
its experiment handler on a worker thread, fans parameter grids out over a
bounded pool, writes result tables and records every run in the ledger.
"""

import asyncio
import concurrent.futures
import hashlib
import json
import multiprocessing
import os
import time
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, TypeVar

from nvhp import db_storage
from nvhp.config.config import load_config
from nvhp.errors import NvhpError
from nvhp.logging_config import get_logger
from nvhp.models.models import RunConfig, RunStatusEnum
from nvhp.result_writers import ResultTable, run_metadata, write_csv, write_error_json, write_sidecar_json

logger = get_logger("nvhp.runs")

T = TypeVar("T")

_runner_cfg = load_config().get("runner", {})

# NVHP_THREADS caps grid-point parallelism
MAX_WORKERS = int(os.environ.get("NVHP_THREADS", _runner_cfg.get("max_workers", multiprocessing.cpu_count())))
LEDGER_ENABLED = bool(_runner_cfg.get("ledger", True))

# Default output directory
OUTPUT_DIR = os.environ.get("NVHP_OUTPUT_DIR", os.path.join(os.getcwd(), "wd/outputs"))

# one experiment at a time per process; grid points share a separate pool
run_semaphore = asyncio.Semaphore(1)
thread_pool = concurrent.futures.ThreadPoolExecutor(max_workers=1)
grid_pool = concurrent.futures.ThreadPoolExecutor(max_workers=max(1, MAX_WORKERS))


def parallel_map(func: Callable[..., T], items: Iterable[Any]) -> List[T]:
    """
    Evaluate ``func`` over independent grid points; results come back in input order.
    """
    items = list(items)
    if MAX_WORKERS <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    return list(grid_pool.map(func, items))


@dataclass
class RunOutcome:
    run_id: str
    status: RunStatusEnum
    tables: List[ResultTable] = field(default_factory=list)
    files: Dict[str, str] = field(default_factory=dict)
    wall_clock_seconds: float = 0.0


def config_echo(cfg: RunConfig) -> Dict[str, Any]:
    """The configuration as it is embedded in every output (no output path)"""
    return cfg.model_dump(mode="json", exclude={"output"})


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(json.dumps(config_echo(cfg), sort_keys=True).encode()).hexdigest()[:16]


def dispatch(cfg: RunConfig) -> List[ResultTable]:
    """Run the handler registered for ``cfg.experiment``"""
    # handlers import the physics modules; keep that out of CLI start-up
    from nvhp.experiments import HANDLERS

    return HANDLERS[cfg.experiment](cfg)


def write_tables(tables: List[ResultTable], cfg: RunConfig, out_dir: Path,
                 wall_clock_seconds: float) -> Dict[str, str]:
    """Single writer, deterministic order: CSV and JSON sidecar per table"""
    metadata = run_metadata(config_echo(cfg), cfg.seed, cfg.experiment.value)
    files = {}
    for table in tables:
        files[f"{table.name}.csv"] = str(write_csv(table, out_dir, metadata))
        files[f"{table.name}.json"] = str(write_sidecar_json(table, out_dir, metadata, wall_clock_seconds))
    return files


async def run_experiment(cfg: RunConfig, out_dir: Optional[str] = None) -> RunOutcome:
    """
    Execute one experiment end to end.

    The handler runs on a worker thread; tables are written after it returns.
    Status, timing and CPU time are always stored in the ledger, also when
    the handler raises.
    """
    out_dir = Path(out_dir or cfg.output or OUTPUT_DIR)
    run_id = str(uuid.uuid4())
    run_logger = get_logger("nvhp.runs", run_id=run_id, experiment=cfg.experiment.value, seed=cfg.seed)

    created_at = datetime.now(timezone.utc)
    started_at = None
    status = RunStatusEnum.RUNNING
    error_code = None
    files: Dict[str, str] = {}
    cpu_start = time.process_time()
    wall_start = time.perf_counter()

    try:
        async with run_semaphore:
            started_at = datetime.now(timezone.utc)
            run_logger.info(f"Run started: {cfg.experiment.value}", event_type="run_started",
                            output_dir=str(out_dir), workers=MAX_WORKERS)
            tables = await asyncio.get_running_loop().run_in_executor(thread_pool, dispatch, cfg)

        wall = time.perf_counter() - wall_start
        files = write_tables(tables, cfg, out_dir, wall)
        status = RunStatusEnum.FINISHED
        run_logger.info(f"Run completed in {wall:.2f}s", event_type="run_completed",
                        wall_clock_seconds=round(wall, 3), files=sorted(files))
        return RunOutcome(run_id, status, tables, files, wall)

    except NvhpError as e:
        status = RunStatusEnum.FAILED
        error_code = e.code
        run_logger.error(f"Run failed: {e.message}", event_type="run_failed", error_code=e.code)
        files = {"error.json": str(write_error_json(e.to_dict(), out_dir))}
        raise

    except Exception as e:
        status = RunStatusEnum.FAILED
        error_code = "internal-error"
        run_logger.error(f"Unexpected error in run: {e}", event_type="run_failed",
                         error_code=error_code, exc_info=True)
        raise

    finally:
        if LEDGER_ENABLED:
            try:
                await db_storage.save_run_summary(
                    db_path=db_storage.db_path_for(str(out_dir)),
                    run_id=run_id,
                    experiment=cfg.experiment.value,
                    seed=cfg.seed,
                    config_hash=config_hash(cfg),
                    parameters=config_echo(cfg),
                    status=status.value,
                    created_at=created_at,
                    started_at=started_at,
                    completed_at=datetime.now(timezone.utc),
                    worker_count=MAX_WORKERS,
                    cpu_time_seconds=time.process_time() - cpu_start,
                    error_code=error_code,
                    result_files=files,
                )
            except Exception as e:
                run_logger.warning(f"Could not record run in ledger: {e}", event_type="ledger_failed")


def run(cfg: RunConfig, out_dir: Optional[str] = None) -> RunOutcome:
    """Synchronous entry point used by the CLI"""
    return asyncio.run(run_experiment(cfg, out_dir))
