import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ExperimentError


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    stderr: float
    r2: float


def ols(xs, ys):
    """Ordinary least squares ``y = slope * x + intercept``."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise ExperimentError("need at least two paired points")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ExperimentError("non-finite values in fit")
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx <= 1e-300:
        raise ExperimentError("x values have no variance")
    sxy = float(np.sum((x - xm) * (y - ym)))
    syy = float(np.sum((y - ym) ** 2))
    slope = sxy / sxx
    intercept = ym - slope * xm
    resid = y - (slope * x + intercept)
    sse = float(np.sum(resid**2))
    n = x.size
    stderr = math.sqrt(sse / (n - 2) / sxx) if n > 2 else math.nan
    if syy <= 1e-300:
        r2 = 1.0
    else:
        r2 = min(1.0, max(0.0, 1.0 - sse / syy))
    return LineFit(slope, intercept, stderr, r2)
