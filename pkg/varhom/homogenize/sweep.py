from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy import ndarray

from varhom.exceptions import InsufficientSamples, InvalidInput
from varhom.fields.ensemble import EnsembleSpec, sample_field
from varhom.grid.cube import build_cube
from varhom.subadd.quantities import SolverParams, solve_mu, solve_mu0
from varhom.utils.jobs import run_jobs
from varhom.utils.seed import derive_seed
from varhom.utils.utils import log, pairing

MIN_SAMPLES = 4
# cube side 3^5 at three grid steps per unit is ~5·10⁵ cells per solve
MAX_LEVEL = 5

Vector = Tuple[float, float]


def level_seed(spec: EnsembleSpec, level: int, index: int) -> int:
    """Seed of the ``index``-th independent sample at ``level``."""
    return derive_seed(spec.seed, spec.ensemble_id, "level", level, index)


def mean_and_se(values: Sequence[float]) -> Tuple[float, float]:
    values = np.asarray(values, dtype=np.float64)
    se = float(values.std(ddof=1) / np.sqrt(values.size)) if values.size > 1 else 0.0
    return float(values.mean()), se


def solve_pair(
    spec: EnsembleSpec,
    level: int,
    seed: int,
    p: Vector,
    q: Vector,
    qstar: Vector,
    pstar: Vector,
    params: SolverParams,
    trimmed: bool = False,
    beta: float = 1.0,
) -> Tuple[float, float, float]:
    """(μ(□, q*, p*), μ₀(□, p, q), ε) on one realization; runs in worker processes."""
    cube = build_cube(level, trimmed, beta)
    sample = sample_field(spec, build_cube(level), seed)
    mu, pair = solve_mu(sample, cube, qstar, pstar, params)
    mu0, pair0 = solve_mu0(sample, cube, p, q, params)
    return mu, mu0, max(pair.eps, pair0.eps)


@dataclass
class LevelStats:
    level: int
    mu_mean: float
    mu_se: float
    mu0_mean: float
    mu0_se: float
    samples: int
    eps: float
    mu_values: List[float] = field(default_factory=list, repr=False)
    mu0_values: List[float] = field(default_factory=list, repr=False)


@dataclass
class ScaleCurve:
    ensemble_id: str
    p: Vector
    q: Vector
    qstar: Vector
    pstar: Vector
    levels: List[LevelStats] = field(default_factory=list)

    @property
    def pairing(self) -> float:
        return pairing(self.p, self.q, self.qstar, self.pstar)

    @property
    def gap(self) -> ndarray:
        """Mean μ₀ − mean μ − (p·q* + p*·q) per level."""
        return np.array([s.mu0_mean - s.mu_mean - self.pairing for s in self.levels])

    def trap_ok(self) -> List[bool]:
        """Two-sided trap per level, within two standard errors and the solver tolerance."""
        return [g >= -2.0 * (s.mu_se + s.mu0_se) - s.eps for g, s in zip(self.gap, self.levels)]

    def monotonicity_flags(self) -> List[str]:
        """Levels where mean μ decreases or mean μ₀ increases by more than two standard errors."""
        flags = []
        for a, b in zip(self.levels, self.levels[1:]):
            if b.mu_mean < a.mu_mean - 2.0 * (a.mu_se + b.mu_se) - a.eps - b.eps:
                flags.append(f"mu decreases from n={a.level} to n={b.level}")
            if b.mu0_mean > a.mu0_mean + 2.0 * (a.mu0_se + b.mu0_se) + a.eps + b.eps:
                flags.append(f"mu0 increases from n={a.level} to n={b.level}")
        return flags

    def to_csv(self, path: Union[str, Path]) -> None:
        with open(path, "w") as f:
            f.write("ensemble_id,n,samples,mu_mean,mu_se,mu0_mean,mu0_se,gap\n")
            for s, g in zip(self.levels, self.gap):
                f.write(
                    f"{self.ensemble_id},{s.level},{s.samples},{s.mu_mean:.10e},{s.mu_se:.10e},"
                    f"{s.mu0_mean:.10e},{s.mu0_se:.10e},{g:.10e}\n"
                )


def scale_sweep(
    spec: EnsembleSpec,
    levels: Sequence[int],
    samples_per_level: int,
    p: Vector = (1.0, 0.0),
    q: Vector = (1.0, 0.0),
    qstar: Vector = (1.0, 0.0),
    pstar: Vector = (1.0, 0.0),
    params: Optional[SolverParams] = None,
    trimmed: bool = False,
    beta: float = 1.0,
    workers: int = 1,
) -> ScaleCurve:
    """
    Sample means of μ(□_n, q*, p*) and μ₀(□_n, p, q) over independent realizations for each level n.

    One job per (level, sample); results are reduced in job order, so the curve does not depend on
    ``workers``. Monotonicity violations beyond two standard errors are logged, not raised.
    """
    levels = [int(n) for n in levels]
    if samples_per_level < MIN_SAMPLES:
        raise InsufficientSamples(f"scale_sweep needs at least {MIN_SAMPLES} samples per level")
    if not levels or any(b <= a for a, b in zip(levels, levels[1:])):
        raise InvalidInput(f"levels must be strictly increasing, got {levels}")
    if levels[0] < 0 or levels[-1] > MAX_LEVEL:
        raise InvalidInput(f"levels must lie in [0, {MAX_LEVEL}], got {levels}")
    params = params or SolverParams()
    p, q, qstar, pstar = (tuple(float(v) for v in x) for x in (p, q, qstar, pstar))

    jobs = [
        ((n, i), (spec, n, level_seed(spec, n, i), p, q, qstar, pstar, params, trimmed, beta))
        for n in levels
        for i in range(samples_per_level)
    ]
    results = run_jobs(solve_pair, jobs, workers)

    curve = ScaleCurve(spec.ensemble_id, p, q, qstar, pstar)
    for n in levels:
        rows = [results[(n, i)] for i in range(samples_per_level)]
        mu_values = [r[0] for r in rows]
        mu0_values = [r[1] for r in rows]
        mu_mean, mu_se = mean_and_se(mu_values)
        mu0_mean, mu0_se = mean_and_se(mu0_values)
        eps = max(r[2] for r in rows)
        curve.levels.append(
            LevelStats(n, mu_mean, mu_se, mu0_mean, mu0_se, samples_per_level, eps, mu_values, mu0_values)
        )
        log.info(f"{spec.ensemble_id} n={n}: mu={mu_mean:.6f}±{mu_se:.1e} mu0={mu0_mean:.6f}±{mu0_se:.1e}")

    for flag in curve.monotonicity_flags():
        log.warning(f"{spec.ensemble_id}: {flag}")
    return curve


def scale_curves_to_csv(curves: Sequence[ScaleCurve], path: Union[str, Path]) -> None:
    """Several curves (e.g. one per parameter point) in one file."""
    with open(path, "w") as f:
        f.write("ensemble_id,p1,p2,q1,q2,qstar1,qstar2,pstar1,pstar2,n,samples,mu_mean,mu_se,mu0_mean,mu0_se,gap\n")
        for c in curves:
            head = ",".join(f"{v:.6f}" for v in (*c.p, *c.q, *c.qstar, *c.pstar))
            for s, g in zip(c.levels, c.gap):
                f.write(
                    f"{c.ensemble_id},{head},{s.level},{s.samples},{s.mu_mean:.10e},{s.mu_se:.10e},"
                    f"{s.mu0_mean:.10e},{s.mu0_se:.10e},{g:.10e}\n"
                )
