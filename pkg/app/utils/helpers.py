import hashlib
import json
import math
from typing import Any, Optional

import numpy as np

from app.exceptions import InvalidDimensionError


def frozen(array: Any, dtype=float) -> np.ndarray:
    """Copy ``array`` into a read-only numpy array"""
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def as_matrix(value: Any, rows: Optional[int] = None, cols: Optional[int] = None,
              name: str = "matrix", dtype=float) -> np.ndarray:
    """
    Coerce ``value`` to a 2-D array and check its shape

    Args:
        value: Nested sequence or array
        rows: Expected number of rows (None = any)
        cols: Expected number of columns (None = any)
        name: Name used in error messages
        dtype: Target dtype

    Returns:
        2-D numpy array

    Raises:
        InvalidDimensionError: If the shape does not match
    """
    arr = np.asarray(value, dtype=dtype)
    if arr.ndim == 1 and arr.size == 0 and rows is not None and cols is not None:
        arr = arr.reshape(rows, cols)
    if arr.ndim != 2:
        raise InvalidDimensionError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if rows is not None and arr.shape[0] != rows:
        raise InvalidDimensionError(f"{name} must have {rows} rows, got {arr.shape[0]}")
    if cols is not None and arr.shape[1] != cols:
        raise InvalidDimensionError(f"{name} must have {cols} columns, got {arr.shape[1]}")
    return arr


def as_vector(value: Any, size: Optional[int] = None, name: str = "vector") -> np.ndarray:
    """Coerce ``value`` to a 1-D float array of the given size"""
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise InvalidDimensionError(f"{name} must be 1-dimensional, got shape {arr.shape}")
    if size is not None and arr.shape[0] != size:
        raise InvalidDimensionError(f"{name} must have length {size}, got {arr.shape[0]}")
    return arr


def max_abs(array: np.ndarray) -> float:
    """Entrywise max norm; zero for empty arrays"""
    if array.size == 0:
        return 0.0
    return float(np.max(np.abs(array)))


def to_jsonable(value: Any) -> Any:
    """Convert numpy values, complex numbers and tuples into plain JSON types"""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": float(value.real), "im": float(value.imag)}
    if isinstance(value, (float, np.floating)):
        return float(value)
    return value


def _encode(value: Any) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            return "null"
        return format(value, ".17g")
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, list):
        return "[" + ",".join(_encode(v) for v in value) + "]"
    if isinstance(value, dict):
        items = sorted(value.items())
        return "{" + ",".join(f"{json.dumps(k, ensure_ascii=False)}:{_encode(v)}" for k, v in items) + "}"
    raise TypeError(f"Cannot serialize {type(value).__name__}")


def canonical_dumps(value: Any) -> str:
    """
    Serialize ``value`` deterministically

    Keys are sorted and every float is written with 17 significant digits so
    that reports are byte-identical across runs and round-trip exactly.
    """
    return _encode(to_jsonable(value))


def digest(value: Any) -> str:
    """SHA-256 hex digest of the canonical JSON encoding of ``value``"""
    return hashlib.sha256(canonical_dumps(value).encode("utf-8")).hexdigest()


def check_rectangular(rows: Optional[list], name: str = "matrix") -> Optional[list]:
    """Reject ragged nested lists; used by the pydantic schemas"""
    if rows is None:
        return rows
    widths = {len(row) for row in rows}
    if len(widths) > 1:
        raise ValueError(f"{name} rows must all have the same length")
    return rows


def check_square(rows: Optional[list], name: str = "matrix") -> Optional[list]:
    check_rectangular(rows, name)
    if rows is not None and rows and len(rows) != len(rows[0]):
        raise ValueError(f"{name} must be square")
    return rows
