"""
Result writer module - turns experiment tables into CSV files with a comment
metadata header and JSON sidecars carrying run provenance.
"""

import json
import platform
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from nvhp import __version__

FLOAT_FORMAT = "%.12g"


########################################### Tables

@dataclass
class ResultTable:
    """
    A named rectangular table plus metadata.

    ``metadata`` holds values that are a pure function of the run (config echo,
    seed, tool version); ``summary`` holds scalar results worth reporting
    alongside the table.
    """

    name: str
    frame: pd.DataFrame
    metadata: Dict[str, Any] = field(default_factory=dict)
    summary: Dict[str, Any] = field(default_factory=dict)

    @property
    def columns(self) -> List[str]:
        return list(self.frame.columns)

    @classmethod
    def from_columns(cls, name: str, columns: Dict[str, Any], **kwargs) -> "ResultTable":
        return cls(name=name, frame=pd.DataFrame({k: np.asarray(v) for k, v in columns.items()}), **kwargs)


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    return value


def run_metadata(config_echo: Dict[str, Any], seed: int, experiment: str) -> Dict[str, Any]:
    """Deterministic provenance block shared by every table of a run"""
    return {
        "experiment": experiment,
        "seed": seed,
        "tool": "nvhp",
        "tool_version": __version__,
        "config": config_echo,
    }


########################################### Writers

def write_csv(table: ResultTable, out_dir: Path, metadata: Optional[Dict[str, Any]] = None) -> Path:
    """
    Write ``<out_dir>/<name>.csv``: ``# key: value`` comment lines, then the table.

    The bytes depend only on the table and the metadata passed in.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{table.name}.csv"
    header = {**(metadata or {}), **table.metadata}

    lines = []
    for key in sorted(header):
        value = header[key]
        if not isinstance(value, str):
            value = json.dumps(_jsonable(value), sort_keys=True, separators=(",", ":"))
        lines.append(f"# {key}: {value}\n")

    with open(path, "w", encoding="utf-8", newline="") as f:
        f.writelines(lines)
        table.frame.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def read_csv(path: Path) -> pd.DataFrame:
    """Read a CSV written by ``write_csv`` (comment header skipped)"""
    return pd.read_csv(path, comment="#")


def library_versions() -> Dict[str, str]:
    import pydantic
    import scipy

    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
        "pydantic": pydantic.__version__,
    }


def write_sidecar_json(table: ResultTable, out_dir: Path, metadata: Optional[Dict[str, Any]] = None,
                       wall_clock_seconds: Optional[float] = None) -> Path:
    """Write ``<out_dir>/<name>.json`` with metadata, column names, summary and timing"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{table.name}.json"

    doc = {
        "metadata": {
            **_jsonable(metadata or {}),
            **_jsonable(table.metadata),
            "versions": library_versions(),
            "written_at": datetime.now(timezone.utc).isoformat(),
            "wall_clock_seconds": wall_clock_seconds,
        },
        "columns": table.columns,
        "rows": int(len(table.frame)),
        "summary": _jsonable(table.summary),
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2)
    return path


def write_error_json(error: Dict[str, Any], out_dir: Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "error.json"
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_jsonable(error), f, indent=2)
    return path
