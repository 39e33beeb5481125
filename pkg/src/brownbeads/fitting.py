"""Weighted power-law fits in log-log coordinates."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["ExponentFit", "fit_power_law", "binomial_log_stderr", "tail_fit"]


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    stderr: float
    log_x: tuple = ()
    log_p: tuple = ()
    log_p_stderr: tuple = ()
    dt: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def alpha(self) -> float:
        return -self.slope

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "stderr": self.stderr,
                "alpha": self.alpha, "dt": self.dt,
                "points": [{"log_x": a, "log_p": b, "stderr": c}
                           for a, b, c in zip(self.log_x, self.log_p, self.log_p_stderr)],
                **self.extra}


def binomial_log_stderr(p, n):
    """Delta-method standard error of log p-hat for a binomial proportion."""
    p = np.asarray(p, dtype=float)
    return np.sqrt((1 - p) / (n * p))


def fit_power_law(xs, ps, ws=None, dt: float | None = None) -> ExponentFit:
    """Fit log p = intercept + slope * log x.

    ``ws`` are absolute weights 1 / var(log p); the slope error then comes
    from the weights alone.  Without weights an ordinary fit is done and
    the error comes from the residuals.
    """
    x = np.asarray(xs, dtype=float)
    p = np.asarray(ps, dtype=float)
    if x.shape != p.shape or x.ndim != 1:
        raise ValueError("xs and ps must be 1-d of equal length")
    if x.size < 3:
        raise ValueError("need at least 3 points")
    if np.any(x <= 0) or np.any(p <= 0) or not np.all(np.isfinite(x) & np.isfinite(p)):
        raise ValueError("xs and ps must be positive and finite")
    lx, lp = np.log(x), np.log(p)
    weighted = ws is not None
    w = np.ones_like(lx) if ws is None else np.asarray(ws, dtype=float)
    if w.shape != lx.shape or np.any(w <= 0):
        raise ValueError("weights must be positive, one per point")
    W = w.sum()
    mx, mp = (w * lx).sum() / W, (w * lp).sum() / W
    sxx = (w * (lx - mx) ** 2).sum()
    if sxx <= 0:
        raise ValueError("xs must not all be equal")
    slope = (w * (lx - mx) * (lp - mp)).sum() / sxx
    icpt = mp - slope * mx
    if weighted:
        se = np.sqrt(1.0 / sxx)
        sig = 1 / np.sqrt(w)
    else:
        res = lp - icpt - slope * lx
        se = np.sqrt((res**2).sum() / (x.size - 2) / sxx)
        se = max(se, 1e-15 * max(1.0, abs(slope)))
        sig = np.full_like(lx, np.nan)
    return ExponentFit(float(slope), float(icpt), float(se), tuple(lx.tolist()),
                       tuple(lp.tolist()), tuple(sig.tolist()), dt)


def tail_fit(samples, grid, dt: float | None = None, n_total: int | None = None) -> ExponentFit:
    """Fit the empirical survival function P(X > x) of ``samples`` on
    ``grid`` with binomial weights.  Samples may include +inf."""
    s = np.sort(np.asarray(samples, dtype=float))
    n = s.size if n_total is None else n_total
    grid = np.asarray(grid, dtype=float)
    counts = s.size - np.searchsorted(s, grid, side="right")
    p = counts / n
    if np.any(counts == 0):
        raise ValueError("empty tail at the largest grid point; need more samples")
    se = binomial_log_stderr(p, n)
    return fit_power_law(grid, p, 1 / se**2, dt)
