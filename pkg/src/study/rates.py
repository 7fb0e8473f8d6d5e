from typing import Optional, Sequence

import numpy as np

from src.errors import RateError


def estimate_rate(h: Sequence[float], errors: Sequence[float], window: Optional[int] = None) -> float:
    """Least-squares slope of log(error) against log(h) over the last ``window`` rows."""
    h = np.asarray(h, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if h.shape != errors.shape:
        raise RateError(f"{len(h)} mesh sizes for {len(errors)} errors")
    if window is not None:
        h, errors = h[-window:], errors[-window:]
    if len(h) < 2:
        raise RateError("a rate needs at least two rows")
    if np.any(errors <= 0.0) or np.any(h <= 0.0):
        raise RateError("rates need positive mesh sizes and errors; exact runs carry no slope")
    slope, _ = np.polyfit(np.log(h), np.log(errors), 1)
    return float(slope)
