from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np
import scipy.fft
import scipy.stats
from numpy import ndarray

from varhom.dirichlet.problem import DirichletProblem
from varhom.dirichlet.solver import DirichletSolution, DirichletSystem, solve_dirichlet
from varhom.exceptions import FitRefused, InvalidInput
from varhom.fields.ensemble import CoefficientSample
from varhom.grid.averages import cell_averages
from varhom.grid.field import GridField
from varhom.grid.operators import discrete_gradient
from varhom.subadd.quantities import SolverParams

DEFAULT_C_LIP = 10.0
DEFAULT_MEYERS_DELTA = 0.1
DEFAULT_P = 4.0


def _centre(f: GridField, center) -> ndarray:
    if center is not None:
        return np.asarray(center, dtype=np.float64)
    lower = np.asarray(f.lower)
    return lower + 0.5 * f.spacing * np.asarray(f.intervals)


def _max_radius(f: GridField, center: ndarray) -> float:
    lower = np.asarray(f.lower)
    upper = lower + f.spacing * np.asarray(f.intervals)
    return float(min(np.min(center - lower), np.min(upper - center)))


def _ball(f: GridField, r: float, center: ndarray) -> ndarray:
    """Grid points of ``f`` (cell centres or nodes) within distance r of the centre."""
    return np.linalg.norm(f.coordinates() - center, axis=-1) <= r + 1e-12


def _masked_mean(values: ndarray, mask: ndarray) -> float:
    if not mask.any():
        raise InvalidInput("empty ball")
    return float(values[mask].mean())


def homogenization_error(u: GridField, ubar: GridField, R: float, mask: Optional[ndarray] = None) -> float:
    """R^{−2} ⨍_U |u − ū|² over the nodes of U (all nodes unless ``mask`` is given)."""
    if not u.same_grid(ubar):
        raise InvalidInput("homogenization_error needs both fields on the same grid")
    sq = (u.values - ubar.values) ** 2
    w = u.weights()
    if mask is not None:
        w = np.where(mask, w, 0.0)
    return float(np.sum(w * sq) / np.sum(w) / R**2)


@dataclass
class LipschitzProfile:
    """⨍_{B_r}|∇u|² per radius against the bound C_lip·M²; ``r0`` is the least radius from which it holds."""

    radii: List[float]
    profile: List[float]
    M: float
    C_lip: float
    r0: Optional[float]

    @property
    def bound(self) -> float:
        return self.C_lip * self.M**2

    def r0_at(self, C_lip: float) -> Optional[float]:
        """Least radius of the trailing run of radii whose profile stays below C_lip·M²."""
        r0 = None
        for r, v in zip(reversed(self.radii), reversed(self.profile)):
            if v > C_lip * self.M**2:
                break
            r0 = r
        return r0

    def to_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write("r,profile,bound\n")
            for r, v in zip(self.radii, self.profile):
                f.write(f"{r:.6f},{v:.10e},{self.bound:.10e}\n")


def lipschitz_profile(
    u: GridField, radii: Sequence[float], M: float, C_lip: float = DEFAULT_C_LIP, center=None
) -> LipschitzProfile:
    c = _centre(u, center)
    radii = sorted(float(r) for r in radii)
    if not radii or radii[0] <= 0 or radii[-1] > _max_radius(u, c) + 1e-12:
        raise InvalidInput(f"radii {radii} must be positive and inside the domain")
    grad = discrete_gradient(u)
    sq = np.sum(grad.values**2, axis=-1)
    profile = [_masked_mean(sq, _ball(grad, r, c)) for r in radii]
    result = LipschitzProfile(radii, profile, float(M), float(C_lip), None)
    result.r0 = result.r0_at(C_lip)
    return result


def flatness(u: GridField, r: float, center=None) -> float:
    """(1/r)·min over affine ℓ of (⨍_{B_r}|u − ℓ|²)^{1/2}, by least squares over the nodes in B_r."""
    c = _centre(u, center)
    if r <= 0 or r > _max_radius(u, c) + 1e-12:
        raise InvalidInput(f"radius {r} is not inside the domain")
    mask = _ball(u, r, c)
    if mask.sum() < 3:
        raise InvalidInput(f"ball of radius {r} holds fewer than 3 nodes")
    x = u.coordinates()[mask] - c
    design = np.hstack([np.ones((x.shape[0], 1)), x])
    vals = u.values[mask]
    coef, *_ = np.linalg.lstsq(design, vals, rcond=None)
    resid = vals - design @ coef
    return float(np.sqrt(np.mean(resid**2)) / r)


@dataclass
class CampanatoRow:
    r: float
    flatness: float
    flatness_inner: float

    @property
    def improved(self) -> bool:
        """Membership in A(r, σ): flatness at σr at most half the flatness at r."""
        return self.flatness_inner <= 0.5 * self.flatness


def campanato_check(u: GridField, radii: Sequence[float], sigma: float, center=None) -> List[CampanatoRow]:
    if not 0 < sigma < 1:
        raise InvalidInput(f"sigma must lie in (0, 1), got {sigma}")
    return [CampanatoRow(float(r), flatness(u, r, center), flatness(u, sigma * r, center)) for r in radii]


def hminus1_norm(rhs: GridField, mask: Optional[ndarray] = None) -> float:
    """
    Periodic surrogate for ‖rhs‖_{H⁻¹(U)}.

    The nodal values (zero outside ``mask``) are embedded in a periodic box twice the size and the norm is
    ⟨f, (−Δ)⁻¹f⟩^{1/2} there, with the mean mode weighted like the lowest nonzero frequency.
    """
    values = rhs.values if mask is None else np.where(mask, rhs.values, 0.0)
    shape = tuple(2 * n for n in values.shape)
    padded = np.zeros(shape)
    padded[tuple(slice(0, n) for n in values.shape)] = values
    h = rhs.spacing
    ks = np.meshgrid(*[2 * np.pi * scipy.fft.fftfreq(n, d=h) for n in shape], indexing="ij")
    k2 = sum(k**2 for k in ks)
    k2[(0,) * len(shape)] = (2 * np.pi / (h * max(shape))) ** 2
    coeff = scipy.fft.fftn(padded) / padded.size
    volume = h ** len(shape) * padded.size
    return float(np.sqrt(volume * np.sum(np.abs(coeff) ** 2 / k2)))


def m_parameter(
    u: GridField, rhs: GridField, R: float, K0: float = 0.0, p: float = DEFAULT_P, mask: Optional[ndarray] = None
) -> float:
    """M = K₀ + R⁻¹ inf_a (⨍|u − a|²)^{1/2} + R (⨍|rhs|^p)^{1/p} over the nodes of U."""
    w = u.weights() if mask is None else np.where(mask, u.weights(), 0.0)
    w = w / w.sum()
    mean = np.sum(w * u.values)
    spread = np.sqrt(np.sum(w * (u.values - mean) ** 2))
    size = np.sum(w * np.abs(rhs.values) ** p) ** (1.0 / p)
    return float(K0 + spread / R + R * size)


@dataclass
class RegularityReport:
    """Regularity diagnostics of one solution; fields not computed stay empty."""

    lipschitz: Optional[LipschitzProfile] = None
    flatness: List[CampanatoRow] = field(default_factory=list)
    caccioppoli: List[float] = field(default_factory=list)
    meyers: List[float] = field(default_factory=list)
    homogenization_errors: Dict[int, float] = field(default_factory=dict)
    C_caccioppoli: float = DEFAULT_C_LIP
    delta: float = DEFAULT_MEYERS_DELTA

    @property
    def r0(self) -> Optional[float]:
        return None if self.lipschitz is None else self.lipschitz.r0

    @property
    def finite(self) -> bool:
        values = list(self.caccioppoli) + list(self.meyers) + list(self.homogenization_errors.values())
        if self.lipschitz is not None:
            values += self.lipschitz.profile
        return bool(np.all(np.isfinite(values)))

    @property
    def ok(self) -> bool:
        return self.finite and all(c <= self.C_caccioppoli for c in self.caccioppoli)


def regularity_checks(
    u: GridField,
    problem: DirichletProblem,
    K0: float = 0.0,
    inner: float = 0.5,
    delta: float = DEFAULT_MEYERS_DELTA,
    C: float = DEFAULT_C_LIP,
) -> RegularityReport:
    """
    Caccioppoli ratio ‖∇u‖_{L²(V)} / (K₀ + ‖u‖_{L²(U)} + ‖rhs‖_{H⁻¹(U)}) and the Meyers norm ‖∇u‖_{L^{2+δ}(V)}
    on V = B_{inner·R}.
    """
    if not 0 < inner < 1:
        raise InvalidInput(f"V must lie compactly inside U, got inner fraction {inner}")
    grad = discrete_gradient(u)
    in_v = _ball(grad, inner * problem.R, _centre(u, (0.0, 0.0)))
    in_u = problem.cell_mask
    cell_area = grad.spacing**2
    sq = np.sum(grad.values**2, axis=-1)
    grad_v = np.sqrt(cell_area * sq[in_v].sum())
    u_norm = float(np.sqrt(np.sum(np.where(problem.node_mask, u.weights(), 0.0) * u.values**2)))
    rhs_norm = hminus1_norm(problem.rhs_field(), problem.node_mask)
    ratio = float(grad_v / (K0 + u_norm + rhs_norm)) if K0 + u_norm + rhs_norm > 0 else float("inf")
    meyers = float((cell_area * np.sum(sq[in_v & in_u] ** (1.0 + delta / 2))) ** (1.0 / (2.0 + delta)))
    return RegularityReport(caccioppoli=[ratio], meyers=[meyers], C_caccioppoli=C, delta=delta)


@dataclass
class FluxReport:
    mean_excess: float
    max_excess: float
    eps: float

    @property
    def ok(self) -> bool:
        return self.mean_excess <= self.eps


def flux_consistency(solution: DirichletSolution, system: DirichletSystem) -> FluxReport:
    """F(∇u, g, x) − ∇u·g at the minimizer: nonnegative per cell, zero in mean up to the solver tolerance."""
    z = solution.cell_vectors
    excess = system._evaluate(z, 0) - np.sum(z[:, :2] * z[:, 2:], axis=-1)
    return FluxReport(float(excess.mean()), float(excess.max()), solution.eps)


@dataclass
class MesoscopicReport:
    mean_gap: float
    norm: float
    averaged_norm: float

    @property
    def ok(self) -> bool:
        return self.mean_gap <= 1e-10 * (1.0 + self.norm) and self.averaged_norm <= self.norm * (1.0 + 1e-12)


def mesoscopic_average_check(u: GridField, r_cell: int) -> MesoscopicReport:
    """Unit-cell averages of ∇u keep its mean and do not increase its L² norm."""
    grad = discrete_gradient(u)
    avg = cell_averages(grad, r_cell)
    gap = float(np.max(np.abs(np.asarray(avg.mean()) - np.asarray(grad.mean()))))
    return MesoscopicReport(gap, grad.norm(), avg.norm())


@dataclass
class DecayFit:
    """error ≈ C·R^{−rate}, with the 95% confidence half-width of the rate."""

    radii: List[float]
    means: List[float]
    rate: float
    rate_ci: float
    intercept: float
    residual: float

    @property
    def significant(self) -> bool:
        return self.rate - self.rate_ci > 0


def fit_error_decay(errors: Mapping[float, Sequence[float]]) -> DecayFit:
    """Log-linear fit of the mean error against log R; ``errors`` maps R to per-seed errors."""
    radii = sorted(float(r) for r in errors)
    if len(radii) < 3:
        raise FitRefused(f"decay fit needs at least 3 radii, got {len(radii)}")
    means = np.array([np.mean(errors[r]) for r in sorted(errors)])
    if np.any(means <= 0) or not np.all(np.isfinite(means)):
        raise FitRefused(f"decay fit needs positive mean errors, got {means.tolist()}")
    x, y = np.log(radii), np.log(means)
    fit = scipy.stats.linregress(x, y)
    resid = y - (fit.intercept + fit.slope * x)
    ci = float(scipy.stats.t.ppf(0.975, len(radii) - 2) * fit.stderr)
    rms = float(np.sqrt(np.mean(resid**2)))
    return DecayFit(radii, means.tolist(), float(-fit.slope), ci, float(fit.intercept), rms)


@dataclass
class StabilityReport:
    h1_difference: float
    hminus1_difference: float
    C: float

    @property
    def ratio(self) -> float:
        return self.h1_difference / self.hminus1_difference if self.hminus1_difference > 0 else float("inf")

    @property
    def ok(self) -> bool:
        return self.ratio <= self.C


def energy_stability_check(
    sample: CoefficientSample,
    problem: DirichletProblem,
    rhs1,
    rhs2,
    C: float = DEFAULT_C_LIP,
    params: Optional[SolverParams] = None,
) -> StabilityReport:
    """
    ‖u₁ − u₂‖_{H¹} against ‖rhs₁ − rhs₂‖_{H⁻¹} for two right-hand sides with the same boundary data.

    The H¹ norm is (‖∇w‖² + R⁻²‖w‖²)^{1/2} over U, which keeps both sides at the same scale.
    """
    first, second = problem.with_rhs(rhs1), problem.with_rhs(rhs2)
    u1 = solve_dirichlet(DirichletSystem.heterogeneous(sample, first), params).u
    u2 = solve_dirichlet(DirichletSystem.heterogeneous(sample, second), params).u
    w = GridField(u1.values - u2.values, u1.lower, u1.spacing, "zero", "node", 1)
    grad = discrete_gradient(w)
    grad_sq = np.sum(grad.values**2, axis=-1)[problem.cell_mask].sum() * grad.spacing**2
    w_sq = np.sum(np.where(problem.node_mask, w.weights(), 0.0) * w.values**2)
    h1 = float(np.sqrt(grad_sq + w_sq / problem.R**2))
    diff = GridField(first.rhs_values() - second.rhs_values(), u1.lower, u1.spacing, "free", "node", 1)
    return StabilityReport(h1, hminus1_norm(diff, problem.node_mask), C)
