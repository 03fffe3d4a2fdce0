from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from varhom.exceptions import InvalidInput
from varhom.fields.ensemble import CoefficientSample
from varhom.grid.cube import TriadicCube, build_cube
from varhom.subadd.problem import CellProblem, affine_data
from varhom.subadd.quantities import SolverParams, solve_mu, solve_mu0
from varhom.utils.utils import log, pairing

Vector = Tuple[float, float]


def _vec(v) -> Vector:
    return tuple(float(x) for x in np.asarray(v, dtype=np.float64).reshape(2))


def mu_window(Lambda: float, K0: float, qstar, pstar) -> Tuple[float, float]:
    """−(Λ+1)(K₀²+|p*|²+|q*|²) ≤ μ ≤ (Λ/2)K₀²."""
    s = K0**2 + float(np.sum(np.square(qstar)) + np.sum(np.square(pstar)))
    return -(Lambda + 1.0) * s, 0.5 * Lambda * K0**2


def mu0_window(Lambda: float, K0: float, p, q) -> Tuple[float, float]:
    """(|p|²+|q|²)/(4Λ) − (Λ+1/(2Λ))K₀² ≤ μ₀ ≤ Λ(|p|²+|q|²) + (Λ+1)K₀²."""
    s = float(np.sum(np.square(p)) + np.sum(np.square(q)))
    return s / (4.0 * Lambda) - (Lambda + 0.5 / Lambda) * K0**2, Lambda * s + (Lambda + 1.0) * K0**2


@dataclass
class BoundsReport:
    quantity: str
    value: float
    lower: float
    upper: float
    eps: float
    # p·q for μ₀, which must not be undercut
    floor: Optional[float] = None

    @property
    def ok(self) -> bool:
        inside = self.lower - self.eps <= self.value <= self.upper + self.eps
        return inside and (self.floor is None or self.value >= self.floor - self.eps)


def check_bounds(quantity: str, value: float, first, second, Lambda: float, K0: float, eps: float) -> BoundsReport:
    """Energy window of one solve; ``first, second`` are (q*, p*) for μ and (p, q) for μ₀."""
    if quantity == "mu":
        lo, hi = mu_window(Lambda, K0, first, second)
        return BoundsReport("mu", value, lo, hi, eps)
    if quantity == "mu0":
        lo, hi = mu0_window(Lambda, K0, first, second)
        return BoundsReport("mu0", value, lo, hi, eps, float(np.dot(first, second)))
    raise InvalidInput(f"unknown quantity {quantity!r}")


@dataclass
class PartitionReport:
    level: int
    mu_parent: float
    mu_children: List[float]
    mu0_parent: float
    mu0_children: List[float]
    eps: float

    @property
    def superadditivity(self) -> float:
        return self.mu_parent - float(np.mean(self.mu_children))

    @property
    def subadditivity(self) -> float:
        return float(np.mean(self.mu0_children)) - self.mu0_parent

    @property
    def ok(self) -> bool:
        return self.superadditivity >= -self.eps and self.subadditivity >= -self.eps


def check_partition(
    sample: CoefficientSample,
    cube: TriadicCube,
    p=(1.0, 0.0),
    q=(1.0, 0.0),
    qstar=(1.0, 0.0),
    pstar=(0.0, 0.0),
    params: Optional[SolverParams] = None,
) -> PartitionReport:
    """μ on the parent against the mean over its 3^d children (≥), and μ₀ the other way (≤)."""
    mu_parent, pair = solve_mu(sample, cube, qstar, pstar, params)
    mu0_parent, pair0 = solve_mu0(sample, cube, p, q, params)
    mu_children, mu0_children, eps = [], [], []
    for child in cube.children():
        mu_c, pc = solve_mu(sample, child, qstar, pstar, params)
        mu0_c, pc0 = solve_mu0(sample, child, p, q, params)
        mu_children.append(mu_c)
        mu0_children.append(mu0_c)
        eps.append(max(pc.eps, pc0.eps))
    report = PartitionReport(
        cube.level, mu_parent, mu_children, mu0_parent, mu0_children, max(pair.eps, pair0.eps) + float(np.mean(eps))
    )
    if not report.ok:
        log.warning(
            f"partition check at n={cube.level}: super {report.superadditivity:.3e}, "
            f"sub {report.subadditivity:.3e}, eps {report.eps:.1e}"
        )
    return report


@dataclass
class OrderingRow:
    p: Vector
    q: Vector
    qstar: Vector
    pstar: Vector
    mu: float
    mu0: float
    eps: float

    @property
    def slack(self) -> float:
        """μ₀(p, q) − μ(q*, p*) − (p·q* + p*·q)."""
        return self.mu0 - self.mu - pairing(self.p, self.q, self.qstar, self.pstar)

    @property
    def ok(self) -> bool:
        return self.slack >= -self.eps


@dataclass
class OrderingReport:
    rows: List[OrderingRow] = field(default_factory=list)

    @property
    def violations(self) -> List[OrderingRow]:
        return [r for r in self.rows if not r.ok]

    @property
    def ok(self) -> bool:
        return not self.violations


def check_ordering(
    sample: CoefficientSample,
    cube: TriadicCube,
    count: int = 10,
    radius: float = 1.0,
    seed: int = 0,
    params: Optional[SolverParams] = None,
) -> OrderingReport:
    """μ(q*, p*) + p·q* + p*·q ≤ μ₀(p, q) for ``count`` random tuples in [−radius, radius]^8."""
    rng = np.random.default_rng(seed)
    report = OrderingReport()
    for p, q, qstar, pstar in rng.uniform(-radius, radius, size=(count, 4, 2)):
        mu, pair = solve_mu(sample, cube, qstar, pstar, params)
        mu0, pair0 = solve_mu0(sample, cube, p, q, params)
        report.rows.append(OrderingRow(_vec(p), _vec(q), _vec(qstar), _vec(pstar), mu, mu0, pair.eps + pair0.eps))
    if not report.ok:
        log.warning(f"ordering violated for {len(report.violations)}/{count} tuples at n={cube.level}")
    return report


@dataclass
class UniformConvexityRow:
    distance2: float
    excess: float
    bound: float

    @property
    def ok(self) -> bool:
        return self.distance2 <= self.bound


@dataclass
class UniformConvexityReport:
    Lambda: float
    rows: List[UniformConvexityRow] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.rows)


def check_uniform_convexity(
    sample: CoefficientSample,
    cube: TriadicCube,
    qstar=(1.0, 0.0),
    pstar=(0.0, 0.0),
    perturbations: int = 3,
    scale: float = 0.1,
    seed: int = 0,
    params: Optional[SolverParams] = None,
) -> UniformConvexityReport:
    """
    ⨍|(∇u, g) − (∇u', g')|² ≤ 4Λ(E(u, g) + E(u', g') − 2μ) for the minimizer and perturbed feasible pairs.

    With the computed minimum μ_h ≥ μ the right-hand side is taken as 4Λ(E' − μ_h + 2ε).
    """
    mu, pair = solve_mu(sample, cube, qstar, pstar, params)
    problem = CellProblem(sample, cube, zero_boundary=False)
    z0, ell = np.zeros(4), affine_data(qstar, pstar)
    rng = np.random.default_rng(seed)
    report = UniformConvexityReport(problem.Lambda)
    for _ in range(perturbations):
        delta = scale * rng.normal(size=problem.size)
        energy = problem.energy(pair.x + delta, z0, ell)
        dz = problem.cell_vectors(delta)
        distance2 = float(np.mean(np.sum(dz**2, axis=-1)))
        excess = energy - mu
        report.rows.append(UniformConvexityRow(distance2, excess, 4.0 * problem.Lambda * (excess + 2.0 * pair.eps)))
    return report


@dataclass
class ContinuityRow:
    first: Tuple[Vector, Vector]
    second: Tuple[Vector, Vector]
    difference: float
    bound: float

    @property
    def ok(self) -> bool:
        return self.difference <= self.bound


@dataclass
class ContinuityReport:
    rows: List[ContinuityRow] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.rows)


def check_continuity(
    sample: CoefficientSample,
    cube: TriadicCube,
    count: int = 5,
    radius: float = 1.0,
    seed: int = 0,
    params: Optional[SolverParams] = None,
) -> ContinuityReport:
    """|μ(q₁*, p₁*) − μ(q₂*, p₂*)| ≤ 4Λ(K₀ + Σ|·|)(|p₁*−p₂*| + |q₁*−q₂*|) for random pairs of dual data."""
    rng = np.random.default_rng(seed)
    Lambda = CellProblem(sample, cube, zero_boundary=False).Lambda
    report = ContinuityReport()
    for q1, p1, q2, p2 in rng.uniform(-radius, radius, size=(count, 4, 2)):
        mu1, pair1 = solve_mu(sample, cube, q1, p1, params)
        mu2, pair2 = solve_mu(sample, cube, q2, p2, params)
        size = sample.spec.K0 + sum(float(np.linalg.norm(v)) for v in (q1, p1, q2, p2))
        step = float(np.linalg.norm(p1 - p2) + np.linalg.norm(q1 - q2))
        bound = 4.0 * Lambda * size * step + pair1.eps + pair2.eps
        report.rows.append(ContinuityRow((_vec(q1), _vec(p1)), (_vec(q2), _vec(p2)), abs(mu1 - mu2), bound))
    return report


@dataclass
class UniquenessReport:
    distance2: float
    threshold: float

    @property
    def ok(self) -> bool:
        return self.distance2 <= self.threshold


def check_uniqueness(
    sample: CoefficientSample,
    cube: TriadicCube,
    qstar=(1.0, 0.0),
    pstar=(0.0, 0.0),
    params: Optional[SolverParams] = None,
    seed: int = 0,
    scale: float = 1.0,
) -> UniquenessReport:
    """Minimizers from the zero start and from a random start agree: ⨍|Δ(∇u, g)|² ≤ 10·4Λ·(ε₁ + ε₂)."""
    problem = CellProblem(sample, cube, zero_boundary=False)
    _, first = solve_mu(sample, cube, qstar, pstar, params)
    start = scale * np.random.default_rng(seed).normal(size=problem.size)
    _, second = solve_mu(sample, cube, qstar, pstar, params, x0=start)
    dz = problem.cell_vectors(first.x - second.x)
    distance2 = float(np.mean(np.sum(dz**2, axis=-1)))
    threshold = 10.0 * 4.0 * problem.Lambda * (first.gap + second.gap)
    return UniquenessReport(distance2, threshold)


@dataclass
class CutupReport:
    level: int
    beta: float
    mu_trimmed: float
    mu_full: float
    bound: float
    eps: float

    @property
    def excess(self) -> float:
        return self.mu_trimmed - self.mu_full

    @property
    def ok(self) -> bool:
        return self.excess <= self.bound + self.eps


def check_cutup(
    sample: CoefficientSample,
    cube: TriadicCube,
    qstar=(1.0, 0.0),
    pstar=(0.0, 0.0),
    beta: float = 1.0,
    params: Optional[SolverParams] = None,
) -> CutupReport:
    """
    μ(⧈_n) ≤ μ(□_n) + (1 − θ)(sup − inf of the μ window), θ the realised volume fraction of the trimmed cube.

    Follows from superadditivity over the partition of □_n into ⧈_n and the trimmed rim.
    """
    full = build_cube(cube.level, False, beta, cube.base, cube.r_cell)
    trimmed = build_cube(cube.level, True, beta, cube.base, cube.r_cell)
    mu_full, pair_full = solve_mu(sample, full, qstar, pstar, params)
    mu_trim, pair_trim = solve_mu(sample, trimmed, qstar, pstar, params)
    Lambda = CellProblem(sample, full, zero_boundary=False).Lambda
    lo, hi = mu_window(Lambda, sample.spec.K0, qstar, pstar)
    theta = (trimmed.grid_side / full.grid_side) ** full.dim
    return CutupReport(cube.level, beta, mu_trim, mu_full, (1.0 - theta) * (hi - lo), pair_full.eps + pair_trim.eps)

