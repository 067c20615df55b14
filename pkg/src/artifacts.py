"""Writing run artifacts: CSV tables with metadata headers and JSON summaries.

Every artifact carries the configuration hash, the seed and the code version so that a
result file can be traced back to the run that produced it.
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np
import pandas as pd

from src.config import settings

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def _to_jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _to_jsonable(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, "model_dump"):
        return _to_jsonable(value.model_dump())
    return value


def canonical_json(config: Dict[str, Any]) -> str:
    return json.dumps(_to_jsonable(config), sort_keys=True, separators=(",", ":"))


def config_hash(config: Dict[str, Any]) -> str:
    """sha256 of the canonical JSON rendering of ``config``."""
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def run_metadata(config: Dict[str, Any], seed: Optional[int] = None) -> Dict[str, Any]:
    return {
        "config_hash": config_hash(config),
        "seed": settings.seed if seed is None else seed,
        "code_version": settings.code_version,
    }


def write_csv(path: Path, frame: pd.DataFrame, metadata: Dict[str, Any]) -> Path:
    """Write ``frame`` with one ``# key=value`` comment line per metadata entry."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        for key in sorted(metadata):
            f.write(f"# {key}={metadata[key]}\n")
        frame.to_csv(f, index=False, float_format=FLOAT_FORMAT)
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def read_csv(path: Path) -> Tuple[pd.DataFrame, Dict[str, str]]:
    """Inverse of :func:`write_csv`: the table and its metadata header."""
    metadata = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.startswith("# "):
                break
            key, _, value = line[2:].rstrip("\n").partition("=")
            metadata[key] = value
    frame = pd.read_csv(path, comment="#")
    return frame, metadata


def write_json(path: Path, payload: Dict[str, Any], metadata: Dict[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {**_to_jsonable(payload), "metadata": _to_jsonable(metadata)}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(document, f, indent=2, sort_keys=True)
    logger.info(f"Wrote {path}")
    return path
