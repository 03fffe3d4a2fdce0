from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.stats

from varhom.exceptions import FitRefused
from varhom.homogenize.sweep import ScaleCurve

MIN_LEVELS = 3
MIN_TAIL_SAMPLES = 8


@dataclass
class RateFit:
    """
    Empirical decay of a mean error with the cube size 3ⁿ.

    ``alpha`` is the fitted exponent in mean ≈ C·3^{−αn}; ``alpha_ci`` the half-width of its 95% confidence
    interval. ``s_hat`` is the tail exponent of the per-sample errors at the top level, P(X > t) ≈ t^{−s},
    or None when there were too few positive samples to fit it.
    """

    levels: Tuple[int, ...]
    means: Tuple[float, ...]
    alpha: float
    alpha_ci: float
    intercept: float
    residual: float
    s_hat: Optional[float] = None
    s_residual: Optional[float] = None

    @property
    def significant(self) -> bool:
        """alpha > 0 at 95% confidence."""
        return self.alpha - self.alpha_ci > 0


def _tail_fit(values: Sequence[float]) -> Tuple[Optional[float], Optional[float]]:
    x = np.sort(np.asarray(values, dtype=np.float64))
    x = x[x > 0]
    if x.size < MIN_TAIL_SAMPLES:
        return None, None
    survival = (x.size - np.arange(x.size)) / x.size
    # upper half of the empirical distribution
    half = x.size // 2
    tail_x, tail_s = np.log(x[half:]), np.log(survival[half:])
    if np.ptp(tail_x) == 0:
        return None, None
    fit = scipy.stats.linregress(tail_x, tail_s)
    resid = tail_s - (fit.intercept + fit.slope * tail_x)
    return float(-fit.slope), float(np.sqrt(np.mean(resid**2)))


def fit_rate(
    data: Union[ScaleCurve, Mapping[int, Sequence[float]]],
) -> RateFit:
    """
    Least-squares fit of log(mean error) against n·log 3.

    ``data`` is either a scale curve, whose error is the bracket gap mean μ₀ − mean μ − pairing, or a mapping
    from level to per-sample errors. Non-positive means and fewer than three levels are refused.
    """
    if isinstance(data, ScaleCurve):
        levels = [s.level for s in data.levels]
        samples = [np.asarray(s.mu0_values) - np.asarray(s.mu_values) - data.pairing for s in data.levels]
    else:
        levels = sorted(int(n) for n in data)
        samples = [np.asarray(data[n], dtype=np.float64) for n in levels]
    if len(levels) < MIN_LEVELS:
        raise FitRefused(f"rate fit needs at least {MIN_LEVELS} levels, got {len(levels)}")
    means = np.array([s.mean() for s in samples])
    if np.any(~np.isfinite(means)) or np.any(means <= 0):
        raise FitRefused(f"rate fit needs positive mean errors, got {means.tolist()}")

    x = np.array(levels, dtype=np.float64) * np.log(3.0)
    y = np.log(means)
    fit = scipy.stats.linregress(x, y)
    resid = y - (fit.intercept + fit.slope * x)
    ci = float(scipy.stats.t.ppf(0.975, len(levels) - 2) * fit.stderr)
    s_hat, s_residual = _tail_fit(samples[-1])
    return RateFit(
        tuple(levels),
        tuple(float(m) for m in means),
        float(-fit.slope),
        ci,
        float(fit.intercept),
        float(np.sqrt(np.mean(resid**2))),
        s_hat,
        s_residual,
    )
