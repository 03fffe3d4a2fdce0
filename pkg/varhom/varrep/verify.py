from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from numpy import ndarray

from varhom.exceptions import HomogenizationError
from varhom.utils.utils import log, midpoint_gap
from varhom.varrep.fitzpatrick import fitzpatrick
from varhom.varrep.integrand import QuadraticIntegrand, VariationalIntegrand
from varhom.varrep.legendre import legendre_transform
from varhom.varrep.monotone import MonotoneMap
from varhom.varrep.recover import recover_monotone_map
from varhom.varrep.table import TabulatedIntegrand


@dataclass
class RepresentationReport:
    samples: int
    below_pairing: List[Tuple[float, ...]] = field(default_factory=list)
    graph_gaps: List[Tuple[float, ...]] = field(default_factory=list)
    off_graph_equalities: List[Tuple[float, ...]] = field(default_factory=list)
    dual_errors: List[Tuple[float, ...]] = field(default_factory=list)
    dual_checked: bool = False
    k0: Optional["K0Report"] = None

    @property
    def violations(self) -> int:
        k0_bad = 0 if self.k0 is None or self.k0.ok else 1
        return (
            len(self.below_pairing)
            + len(self.graph_gaps)
            + len(self.off_graph_equalities)
            + len(self.dual_errors)
            + k0_bad
        )

    @property
    def ok(self) -> bool:
        return self.violations == 0


@dataclass
class K0Report:
    infimum: float
    lower: float
    upper: float
    tol: float

    @property
    def ok(self) -> bool:
        return self.lower - self.tol <= self.infimum <= self.upper + self.tol


@dataclass
class ConvexityReport:
    pairs: int
    lower_constant: float
    upper_constant: float
    convexity_violations: List[float] = field(default_factory=list)
    smoothness_violations: List[float] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.convexity_violations and not self.smoothness_violations


def _sample_radius(F: VariationalIntegrand, radius: float) -> float:
    if isinstance(F, TabulatedIntegrand):
        return min(radius, 0.5 * float(np.min(np.minimum(-F.lower, F.upper))))
    return radius


def _trusted_rows(F: VariationalIntegrand, p: ndarray, q: ndarray) -> ndarray:
    if isinstance(F, TabulatedIntegrand):
        return F.is_trusted(p, q)
    return np.ones(p.shape[0], dtype=bool)


def _dual_of(F: VariationalIntegrand) -> Optional[VariationalIntegrand]:
    """F* with swapped arguments, or None when F offers no conjugate."""
    if isinstance(F, TabulatedIntegrand):
        return legendre_transform(F).swapped()
    if isinstance(F, QuadraticIntegrand):
        return F.conjugate().swapped()
    return None


def check_k0_bounds(F: VariationalIntegrand, a: MonotoneMap, tol: float = 1e-6) -> K0Report:
    """inf F ∈ [−(Λ/2)|a(0)|², −|a(0)|²/(2Λ)], the infimum taken in closed form or over trusted table nodes."""
    a0 = float(np.sum(a(np.zeros(a.dim)) ** 2))
    if isinstance(F, QuadraticIntegrand):
        infimum = float(F.c - 0.5 * F.b @ np.linalg.solve(F.H, F.b))
    elif isinstance(F, TabulatedIntegrand):
        infimum = float(np.min(np.where(F.trusted, F.values, np.inf)))
    else:
        raise HomogenizationError(f"no infimum available for {type(F).__name__}")
    return K0Report(infimum, -0.5 * F.Lambda * a0, -a0 / (2 * F.Lambda), tol)


def verify_representation(
    F: VariationalIntegrand,
    a: MonotoneMap,
    sample_count: int = 10_000,
    radius: float = 2.0,
    seed: int = 0,
    tol: float = 1e-6,
    graph_tol: float = 1e-4,
    check_dual: bool = True,
) -> RepresentationReport:
    """
    Sampled check that F represents ``a``.

    Off the graph F − p·q must be nonnegative and may only vanish where |q − a(p)| < ``graph_tol``; on the graph
    it must vanish within ``tol``. When F has a conjugate, recovering from F* with swapped arguments at a(p)
    must give back p.
    """
    if F.dim != a.dim:
        raise HomogenizationError(f"dimension mismatch: F has d={F.dim}, a has d={a.dim}")
    rng = np.random.default_rng(seed)
    d = a.dim
    r = _sample_radius(F, radius)
    report = RepresentationReport(samples=sample_count)

    p = rng.uniform(-r, r, size=(sample_count, d))
    q = rng.uniform(-r, r, size=(sample_count, d))
    keep = _trusted_rows(F, p, q)
    p, q = p[keep], q[keep]
    gap = F(p, q) - np.einsum("ij,ij->i", p, q)
    dist = np.linalg.norm(q - a(p), axis=-1)
    for k in np.flatnonzero(gap < -tol):
        report.below_pairing.append((*p[k], *q[k], float(gap[k])))
    for k in np.flatnonzero((np.abs(gap) < tol) & (dist >= graph_tol)):
        report.off_graph_equalities.append((*p[k], *q[k], float(dist[k])))

    # graph points, kept inside the sampling box
    p_graph = rng.uniform(-r, r, size=(sample_count, d)) / a.lam
    q_graph = a(p_graph)
    inside = np.all(np.abs(q_graph) <= r, axis=-1) & _trusted_rows(F, p_graph, np.clip(q_graph, -r, r))
    p_graph, q_graph = p_graph[inside], q_graph[inside]
    graph_gap = F(p_graph, q_graph) - np.einsum("ij,ij->i", p_graph, q_graph)
    for k in np.flatnonzero(np.abs(graph_gap) >= tol):
        report.graph_gaps.append((*p_graph[k], *q_graph[k], float(graph_gap[k])))

    dual = _dual_of(F) if check_dual else None
    if dual is not None:
        report.dual_checked = True
        p_dual = p_graph[: min(200, p_graph.shape[0])]
        recovered = recover_monotone_map(dual, a(p_dual), tol=1e-9)
        err = np.linalg.norm(recovered - p_dual, axis=-1)
        dual_tol = max(graph_tol, np.sqrt(tol))
        for k in np.flatnonzero(err > dual_tol):
            report.dual_errors.append((*p_dual[k], float(err[k])))

    if isinstance(F, (QuadraticIntegrand, TabulatedIntegrand)):
        report.k0 = check_k0_bounds(F, a, tol=max(tol, 1e-9))

    if report.violations:
        log.warning(
            f"verify_representation: {len(report.below_pairing)} below p.q, {len(report.graph_gaps)} graph gaps, "
            f"{len(report.off_graph_equalities)} off-graph equalities, {len(report.dual_errors)} dual errors"
        )
    return report


def _node_pairs(F: TabulatedIntegrand, count: int, rng) -> Tuple[ndarray, ndarray, ndarray]:
    """Random node pairs with matching index parity per axis, so that the midpoint is a node."""
    shape = np.array(F.shape)
    i1 = rng.integers(0, shape, size=(count, len(shape)))
    i2 = rng.integers(0, shape, size=(count, len(shape)))
    i2 = np.where((i2 - i1) % 2, np.where(i2 > 0, i2 - 1, i2 + 1), i2)
    mid = (i1 + i2) // 2
    return i1, i2, mid


def check_convexity_window(
    F: VariationalIntegrand,
    pairs: int = 1000,
    radius: float = 2.0,
    seed: int = 0,
    lower: Optional[float] = None,
    upper: Optional[float] = None,
    tol: float = 1e-8,
) -> ConvexityReport:
    """
    Midpoint test of c|Δ|²/8 ≤ ½F(z₁) + ½F(z₂) − F(½z₁ + ½z₂) ≤ C|Δ|²/8.

    The window [c, C] defaults to [1/(2Λ), Λ/2]. Tabulated integrands are probed at node triples only, so no
    interpolation error enters the test.
    """
    lower = 1.0 / (2 * F.Lambda) if lower is None else lower
    upper = 0.5 * F.Lambda if upper is None else upper
    rng = np.random.default_rng(seed)
    report = ConvexityReport(pairs, lower, upper)

    if isinstance(F, TabulatedIntegrand):
        i1, i2, mid = _node_pairs(F, pairs, rng)
        nodes = np.stack(np.meshgrid(*F.axes, indexing="ij"), axis=-1)
        ok = F.trusted[tuple(i1.T)] & F.trusted[tuple(i2.T)] & F.trusted[tuple(mid.T)]
        z1, z2 = nodes[tuple(i1.T)][ok], nodes[tuple(i2.T)][ok]
        gap = (
            0.5 * F.values[tuple(i1.T)][ok]
            + 0.5 * F.values[tuple(i2.T)][ok]
            - F.values[tuple(mid.T)][ok]
        )
    else:
        k = 2 * F.dim
        z1 = rng.uniform(-radius, radius, size=(pairs, k))
        z2 = rng.uniform(-radius, radius, size=(pairs, k))
        gap = midpoint_gap(F.value_z, z1, z2)

    dz2 = np.einsum("ij,ij->i", z1 - z2, z1 - z2)
    low = lower * dz2 / 8 - gap
    high = gap - upper * dz2 / 8
    report.convexity_violations = [float(v) for v in low[low > tol]]
    report.smoothness_violations = [float(v) for v in high[high > tol]]
    if not report.ok:
        log.warning(
            f"convexity window [{lower:.4g}, {upper:.4g}]: {len(report.convexity_violations)} convexity and "
            f"{len(report.smoothness_violations)} smoothness violations"
        )
    return report


def check_fitzpatrick_minimality(
    a: MonotoneMap,
    F: VariationalIntegrand,
    sample_count: int = 200,
    radius: float = 1.0,
    seed: int = 0,
    tol: float = 1e-6,
) -> List[Tuple[float, ...]]:
    """Points where the Fitzpatrick function of ``a`` exceeds another representative F of ``a``."""
    rng = np.random.default_rng(seed)
    r = _sample_radius(F, radius)
    p = rng.uniform(-r, r, size=(sample_count, a.dim))
    q = rng.uniform(-r, r, size=(sample_count, a.dim))
    keep = _trusted_rows(F, p, q)
    p, q = p[keep], q[keep]
    fitz = fitzpatrick(a, pmax=r * np.sqrt(a.dim), qmax=r * np.sqrt(a.dim))
    excess = fitz(p, q) - F(p, q)
    return [(*p[k], *q[k], float(excess[k])) for k in np.flatnonzero(excess > tol)]
