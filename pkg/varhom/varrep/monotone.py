from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from numpy import ndarray

from varhom.exceptions import InvalidInput, SolverFailure
from varhom.utils.utils import as_vectors


@dataclass(frozen=True)
class MonotoneMap:
    """
    Lipschitz, uniformly monotone vector field p ↦ a(p) on ℝ^d.

    ``evaluate`` must accept arrays of shape ``(N, d)``. ``jacobian`` is optional; when missing it is
    approximated by central differences.
    """

    evaluate: Callable[[ndarray], ndarray]
    lam: float
    a0_bound: float
    dim: int = 2
    jacobian_fn: Optional[Callable[[ndarray], ndarray]] = None
    name: str = "a"

    def __post_init__(self):
        if self.lam < 1.0:
            raise InvalidInput(f"lambda must be >= 1, got {self.lam}")
        if self.a0_bound < 0.0:
            raise InvalidInput(f"K0 must be >= 0, got {self.a0_bound}")

    def __call__(self, p) -> ndarray:
        return self.evaluate(as_vectors(p, self.dim))

    def jacobian(self, p, eps: float = 1e-6) -> ndarray:
        p = as_vectors(p, self.dim)
        if self.jacobian_fn is not None:
            return self.jacobian_fn(p)
        jac = np.empty((p.shape[0], self.dim, self.dim))
        for k in range(self.dim):
            step = np.zeros(self.dim)
            step[k] = eps
            jac[:, :, k] = (self.evaluate(p + step) - self.evaluate(p - step)) / (2 * eps)
        return jac

    def inverse(self, q, tol: float = 1e-12, max_iter: int = 100) -> ndarray:
        """Solve a(p) = q by damped Newton, one system per row of ``q``."""
        q = as_vectors(q, self.dim)
        p = q * self.lam
        residual = self.evaluate(p) - q
        norm = np.linalg.norm(residual, axis=-1)
        for it in range(max_iter):
            active = norm > tol
            if not active.any():
                return p
            jac = self.jacobian(p[active])
            step = np.linalg.solve(jac, residual[active][..., None])[..., 0]
            t = np.ones(active.sum())
            for _ in range(30):
                trial = p[active] - t[:, None] * step
                trial_res = self.evaluate(trial) - q[active]
                trial_norm = np.linalg.norm(trial_res, axis=-1)
                worse = trial_norm >= norm[active]
                if not worse.any():
                    break
                t = np.where(worse, 0.5 * t, t)
            p[active] = trial
            residual[active] = trial_res
            norm[active] = trial_norm
        if (norm > tol).any():
            raise SolverFailure("inverse of monotone map did not converge", float(norm.max()), max_iter)
        return p

    def inverse_map(self) -> "MonotoneMap":
        """a⁻¹ as a monotone map with the same constant λ."""

        def jacobian_fn(q):
            return np.linalg.inv(self.jacobian(self.inverse(q)))

        a0_inv = float(np.linalg.norm(self.inverse(np.zeros(self.dim))))
        return MonotoneMap(self.inverse, self.lam, a0_inv, self.dim, jacobian_fn, name=f"{self.name}^-1")

    def shifted(self, tau: float) -> "MonotoneMap":
        """p ↦ a(p) − τp; only monotone (not uniformly) when τ reaches 1/λ."""

        def evaluate(p):
            return self.evaluate(p) - tau * p

        def jacobian_fn(p):
            return self.jacobian(p) - tau * np.eye(self.dim)

        return MonotoneMap(evaluate, self.lam + tau, self.a0_bound, self.dim, jacobian_fn, name=f"{self.name}-{tau:g}")

    def monotonicity_estimate(self, radius: float, count: int = 512, seed: int = 0) -> float:
        """Smallest sampled ratio (a(p₁)−a(p₂))·(p₁−p₂)/|p₁−p₂|² on a ball of the given radius."""
        rng = np.random.default_rng(seed)
        p1 = rng.uniform(-radius, radius, size=(count, self.dim))
        p2 = rng.uniform(-radius, radius, size=(count, self.dim))
        dp = p1 - p2
        da = self.evaluate(p1) - self.evaluate(p2)
        return float(np.min(np.einsum("ij,ij->i", da, dp) / np.einsum("ij,ij->i", dp, dp)))


@dataclass
class MonotoneMapReport:
    lam: float
    samples: int
    lipschitz_violations: List[float] = field(default_factory=list)
    monotonicity_violations: List[float] = field(default_factory=list)
    a0_violation: Optional[float] = None

    @property
    def ok(self) -> bool:
        return not self.lipschitz_violations and not self.monotonicity_violations and self.a0_violation is None


def check_monotone_map(
    a: MonotoneMap, radius: float = 4.0, count: int = 1000, seed: int = 0, lam: Optional[float] = None, tol=1e-8
) -> MonotoneMapReport:
    """Sampled check of |a(p₁)−a(p₂)| ≤ λ|p₁−p₂|, (a(p₁)−a(p₂))·(p₁−p₂) ≥ |p₁−p₂|²/λ and |a(0)| ≤ K₀."""
    lam = a.lam if lam is None else lam
    rng = np.random.default_rng(seed)
    p1 = rng.uniform(-radius, radius, size=(count, a.dim))
    p2 = rng.uniform(-radius, radius, size=(count, a.dim))
    dp = p1 - p2
    da = a(p1) - a(p2)
    dp2 = np.einsum("ij,ij->i", dp, dp)
    lip = np.linalg.norm(da, axis=-1) - lam * np.sqrt(dp2)
    mono = dp2 / lam - np.einsum("ij,ij->i", da, dp)
    report = MonotoneMapReport(lam=lam, samples=count)
    report.lipschitz_violations = [float(v) for v in lip[lip > tol * (1 + dp2)]]
    report.monotonicity_violations = [float(v) for v in mono[mono > tol * (1 + dp2)]]
    a0 = float(np.linalg.norm(a(np.zeros(a.dim))))
    if a0 > a.a0_bound + tol:
        report.a0_violation = a0
    return report


def linear_map(A, M=None, shift=None, lam: Optional[float] = None) -> MonotoneMap:
    """p ↦ (A + M)p + s, with λ derived from the spectrum when not given."""
    A = np.asarray(A, dtype=np.float64)
    d = A.shape[0]
    M = np.zeros((d, d)) if M is None else np.asarray(M, dtype=np.float64)
    s = np.zeros(d) if shift is None else np.asarray(shift, dtype=np.float64)
    B = A + M
    if lam is None:
        sym_min = np.linalg.eigvalsh(0.5 * (B + B.T)).min()
        if sym_min <= 0:
            raise InvalidInput("A + M is not uniformly monotone")
        lam = max(1.0, np.linalg.norm(B, 2), 1.0 / sym_min)

    def evaluate(p):
        return p @ B.T + s

    def jacobian_fn(p):
        return np.broadcast_to(B, (p.shape[0], d, d)).copy()

    return MonotoneMap(evaluate, float(lam), float(np.linalg.norm(s)), d, jacobian_fn, name="linear")


def radial_map(c: float, b: float = 0.0, skew: float = 0.0, shift=None, lam: Optional[float] = None) -> MonotoneMap:
    """
    p ↦ c·p + b·p/(1+|p|) + m·Jp + s in d=2.

    The radial term has derivative eigenvalues 1/(1+|p|) and 1/(1+|p|)² in (0, 1], which gives the monotonicity
    constant c + min(b, 0) and the Lipschitz constant c + max(b, 0) + |m|.
    """
    if c <= 0:
        raise InvalidInput(f"non-positive phase coefficient c={c}")
    low = c + min(b, 0.0)
    if low <= 0:
        raise InvalidInput(f"phase (c={c}, b={b}) is not uniformly monotone")
    high = c + max(b, 0.0) + abs(skew)
    lam_needed = max(1.0, high, 1.0 / low)
    if lam is None:
        lam = lam_needed
    elif lam < lam_needed - 1e-12:
        raise InvalidInput(f"phase (c={c}, b={b}, m={skew}) needs lambda >= {lam_needed:.4g}, got {lam}")
    s = np.zeros(2) if shift is None else np.asarray(shift, dtype=np.float64)
    J = np.array([[0.0, 1.0], [-1.0, 0.0]])

    def evaluate(p):
        r = np.linalg.norm(p, axis=-1, keepdims=True)
        return c * p + b * p / (1.0 + r) + skew * p @ J.T + s

    def jacobian_fn(p):
        r = np.linalg.norm(p, axis=-1)
        eye = np.broadcast_to(np.eye(2), (p.shape[0], 2, 2))
        with np.errstate(invalid="ignore", divide="ignore"):
            outer = np.where(r[:, None, None] > 0, np.einsum("ni,nj->nij", p, p) / (r**2)[:, None, None], 0.0)
        radial = eye / (1.0 + r)[:, None, None] - outer * (r / (1.0 + r) ** 2)[:, None, None]
        return c * eye + b * radial + skew * J

    return MonotoneMap(evaluate, float(lam), float(np.linalg.norm(s)), 2, jacobian_fn, name=f"radial(c={c},b={b})")
