"""CSV and JSON artifacts. Floats are written with 10 significant digits."""
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np
import pandas as pd

from .exceptions import ParameterError
from .sweep import GRID_COLUMNS, PhaseDiagram

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.10g"
PathLike = Union[str, Path]


def _prepare(path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_table(df: pd.DataFrame, path: PathLike) -> Path:
    """Comma-separated, one header row, empty fields for missing values."""
    path = _prepare(path)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep="", lineterminator="\n")
    logger.info("Wrote %d rows to %s", len(df), path)
    return path


def write_grid(diagram: PhaseDiagram, path: PathLike) -> Path:
    return write_table(diagram.to_frame(), path)


def write_boundary(diagram: PhaseDiagram, path: PathLike) -> Path:
    return write_table(diagram.boundary_frame(), path)


def read_grid(path: PathLike) -> pd.DataFrame:
    df = pd.read_csv(path)
    missing = [c for c in GRID_COLUMNS if c not in df.columns]
    if missing:
        raise ParameterError(f"{path} is not a sweep grid table (missing {missing})")
    return df


def jsonable(value: Any) -> Any:
    """Plain-JSON view: numpy scalars unwrapped, non-finite floats as None, complex as [re, im]."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [jsonable(float(value.real)), jsonable(float(value.imag))]
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def write_json(record: Dict[str, Any], path: PathLike) -> Path:
    path = _prepare(path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(jsonable(record), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
    logger.info("Wrote %s", path)
    return path


def read_json(path: PathLike) -> Dict[str, Any]:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
