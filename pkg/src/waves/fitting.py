"""Exponential rate fits on diagnostic time series."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats


@dataclass
class RateFit:
    rate: float
    half_width: float
    window: tuple
    n: int
    intercept: float

    def to_dict(self):
        return {"rate": self.rate, "half_width": self.half_width, "window": list(self.window),
                "n": self.n, "intercept": self.intercept}


def fit_rate(t, y, window=None, floor=0.0) -> RateFit:
    """Least squares slope of log|y| against t on the window (default [0.3T, 0.9T]).

    Samples with |y| <= floor are dropped. The half-width is two standard errors.
    """
    t = np.asarray(t, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    if window is None:
        window = (0.3 * t[-1], 0.9 * t[-1])
    m = (t >= window[0]) & (t <= window[1]) & (y > floor) & np.isfinite(y)
    if np.sum(m) < 3:
        raise ValueError(f"fewer than three usable samples in window {window}")
    res = stats.linregress(t[m], np.log(y[m]))
    return RateFit(float(res.slope), float(2.0 * res.stderr), (float(window[0]), float(window[1])),
                   int(np.sum(m)), float(res.intercept))
