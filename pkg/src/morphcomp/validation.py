"""Input validation helpers shared by the public entry points."""

from __future__ import annotations

import numbers

import numpy as np
from numpy.typing import ArrayLike, NDArray


def check_scalar(value, name: str, *, minimum=None, maximum=None,
                 include_min: bool = True, include_max: bool = True) -> float:
    """Validate a real scalar, optionally against an interval.

    Returns the value as a plain float.  Raises ValueError with the offending
    name on any violation, so config parsing can surface precise messages.
    """
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise ValueError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not np.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    if minimum is not None:
        ok = value >= minimum if include_min else value > minimum
        if not ok:
            op = ">=" if include_min else ">"
            raise ValueError(f"{name} must be {op} {minimum}, got {value}")
    if maximum is not None:
        ok = value <= maximum if include_max else value < maximum
        if not ok:
            op = "<=" if include_max else "<"
            raise ValueError(f"{name} must be {op} {maximum}, got {value}")
    return value


def check_int(value, name: str, *, minimum=None, maximum=None) -> int:
    """Validate an integer (bools rejected), optionally against bounds."""
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise ValueError(f"{name} must be <= {maximum}, got {value}")
    return value


def check_finite_array(arr: ArrayLike, name: str, *, shape=None) -> NDArray[np.float64]:
    """Coerce to a float64 array, requiring finite entries and an optional shape."""
    out = np.asarray(arr, dtype=float)
    if shape is not None and out.shape != tuple(shape):
        raise ValueError(f"{name} must have shape {tuple(shape)}, got {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} contains non-finite entries")
    return out


def as_point_array(points: ArrayLike, name: str = "points"):
    """Coerce query points to shape (n, 2).

    Accepts a single (x, y) pair or an (n, 2) array.  Returns the array and a
    flag telling the caller whether the input was a single point, so results
    can be squeezed back to scalars.
    """
    out = np.asarray(points, dtype=float)
    single = out.ndim == 1
    if single:
        out = out[np.newaxis, :]
    if out.ndim != 2 or out.shape[1] != 2:
        raise ValueError(f"{name} must be an (x, y) pair or an (n, 2) array, "
                         f"got shape {np.shape(points)}")
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} contains non-finite coordinates")
    return out, single
