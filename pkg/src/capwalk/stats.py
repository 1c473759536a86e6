"""Interval estimates and log-log fits used by the experiments."""

import math

import numpy as np
from scipy import stats

from .errors import GeometryDomainError


def binomial_ci(hits, trials, level=0.99):
    """Clopper-Pearson interval for a binomial proportion."""
    if not 0 <= hits <= trials or trials < 1:
        raise GeometryDomainError("need 0 <= hits <= trials and trials >= 1")
    if not 0 < level < 1:
        raise GeometryDomainError("level must lie in (0, 1)")
    alpha = 1.0 - level
    lo = 0.0 if hits == 0 else float(stats.beta.ppf(alpha / 2, hits, trials - hits + 1))
    hi = 1.0 if hits == trials else float(stats.beta.ppf(1 - alpha / 2, hits + 1, trials - hits))
    return lo, hi


def loglog_slope(x, y, y_ci=None):
    """Weighted least-squares slope of log y against log x.

    Returns (slope, standard error, intercept). With intervals, each point
    is weighted by the inverse variance of log y implied by the interval
    width (taken as a 99% normal interval); without, weights are equal and
    the error comes from the residuals.
    """
    x, y = np.asarray(x, float), np.asarray(y, float)
    if len(x) < 3 or len(x) != len(y):
        raise GeometryDomainError("need at least three points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise GeometryDomainError("log-log fit needs positive values")
    lx, ly = np.log(x), np.log(y)
    if y_ci is not None:
        ci = np.asarray(y_ci, float)
        if np.any(ci <= 0):
            raise GeometryDomainError("log-log fit needs positive interval ends")
        sd = (np.log(ci[:, 1]) - np.log(ci[:, 0])) / (2 * 2.5758293035489004)
        w = 1.0 / np.maximum(sd, 1e-300) ** 2
    else:
        w = np.ones_like(lx)
    W = w.sum()
    mx, my = (w * lx).sum() / W, (w * ly).sum() / W
    sxx = (w * (lx - mx) ** 2).sum()
    slope = (w * (lx - mx) * (ly - my)).sum() / sxx
    intercept = my - slope * mx
    if y_ci is not None:
        se = math.sqrt(1.0 / sxx)
    else:
        resid = ly - intercept - slope * lx
        dof = len(x) - 2
        se = math.sqrt((resid**2).sum() / dof / sxx) if dof > 0 else 0.0
    return float(slope), float(se), float(intercept)
