from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.stats

from varhom.exceptions import FitRefused, InsufficientSamples, InvalidInput
from varhom.fields.ensemble import CoefficientSample, EnsembleSpec, region_around, sample_field
from varhom.utils.utils import log

# bounded statistic of a sample evaluated at a cell, |X| ≤ 1
Functional = Callable[[CoefficientSample, Tuple[int, int]], float]

MIN_SAMPLES = 8


def phase_indicator(phase: int = 1) -> Functional:
    def indicator(sample: CoefficientSample, cell: Tuple[int, int]) -> float:
        return float(sample.phase_at([cell])[0] == phase)

    indicator.__name__ = f"phase_indicator_{phase}"
    return indicator


@dataclass
class CovarianceRow:
    distance: int
    covariance: float
    stderr: float
    samples: int

    def within(self, sigmas: float = 3.0) -> bool:
        return abs(self.covariance) <= sigmas * self.stderr + 1e-15


@dataclass
class CovarianceTable:
    ensemble_id: str
    functional: str
    rows: List[CovarianceRow] = field(default_factory=list)

    def beyond(self, distance: int) -> List[CovarianceRow]:
        return [r for r in self.rows if r.distance > distance]

    def to_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write("distance,covariance,stderr,samples\n")
            for r in self.rows:
                f.write(f"{r.distance},{r.covariance:.10e},{r.stderr:.10e},{r.samples}\n")


def covariance_estimate(x0: np.ndarray, xz: np.ndarray) -> Tuple[float, float]:
    """Unbiased sample covariance and the standard error of the centred products."""
    n = x0.size
    prod = (x0 - x0.mean()) * (xz - xz.mean())
    cov = float(prod.sum() / (n - 1))
    stderr = float(prod.std(ddof=1) / np.sqrt(n)) if n > 1 else float("nan")
    return cov, stderr


def mixing_probe(
    spec: EnsembleSpec,
    functional: Functional,
    distances: Sequence[int],
    samples: int,
    seed_offset: int = 0,
) -> CovarianceTable:
    """
    Monte-Carlo covariance cov[X(0), X(z)] for z = (distance, 0), one independent realization per sample.

    Samples use seeds ``spec.seed + seed_offset + i`` and are reduced in sample order.
    """
    if samples < MIN_SAMPLES:
        raise InsufficientSamples(f"mixing_probe needs at least {MIN_SAMPLES} samples, got {samples}")
    distances = sorted(int(d) for d in distances)
    if distances and distances[0] < 0:
        raise InvalidInput("distances must be nonnegative")
    cells = [(0, 0)] + [(d, 0) for d in distances]
    region = region_around(cells)

    values = np.empty((samples, len(cells)))
    for i in range(samples):
        sample = sample_field(spec, region, spec.seed + seed_offset + i)
        values[i] = [functional(sample, c) for c in cells]
    if np.any(np.abs(values) > 1.0 + 1e-12):
        raise InvalidInput("functional must be bounded by 1 in absolute value")

    name = getattr(functional, "__name__", "functional")
    table = CovarianceTable(spec.ensemble_id, name)
    for k, d in enumerate(distances):
        cov, se = covariance_estimate(values[:, 0], values[:, k + 1])
        table.rows.append(CovarianceRow(d, cov, se, samples))
    log.debug(f"mixing_probe {spec.ensemble_id}: {len(distances)} distances, {samples} samples")
    return table


@dataclass
class TailFit:
    slope: float
    stderr: float
    points: int
    kernel_beta: float

    @property
    def consistent(self) -> bool:
        """Decay exponent −slope at least β_kernel − 0.5."""
        return -self.slope >= self.kernel_beta - 0.5


def kernel_tail_check(table: CovarianceTable, kernel_beta: float, min_distance: int = 1) -> TailFit:
    """Log-log slope of the positive covariances against (1 + distance)."""
    rows = [r for r in table.rows if r.distance >= min_distance and r.covariance > 0]
    if len(rows) < 3:
        raise FitRefused(f"need 3 positive covariances for a tail fit, got {len(rows)}")
    x = np.log([1.0 + r.distance for r in rows])
    y = np.log([r.covariance for r in rows])
    fit = scipy.stats.linregress(x, y)
    return TailFit(float(fit.slope), float(fit.stderr), len(rows), kernel_beta)


def finite_range_ok(table: CovarianceTable, dependence_range: int, sigmas: float = 3.0) -> Optional[bool]:
    """All covariances beyond the declared range within ``sigmas`` standard errors of zero (None if none tested)."""
    rows = table.beyond(dependence_range)
    if not rows:
        return None
    return all(r.within(sigmas) for r in rows)
