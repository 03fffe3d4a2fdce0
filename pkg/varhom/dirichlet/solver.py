from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.sparse.linalg as spla
from numpy import ndarray

from varhom.dirichlet.problem import DirichletProblem
from varhom.exceptions import InvalidInput
from varhom.fields.ensemble import CoefficientSample
from varhom.grid.field import GridField
from varhom.grid.operators import curl_matrix, gradient_matrix
from varhom.grid.preconditioner import laplacian_preconditioner, masked_preconditioner
from varhom.homogenize.model import HomogenizedModel, affine_fit
from varhom.subadd.newton import minimize_newton_cg
from varhom.subadd.problem import GridEnergy, interleave
from varhom.subadd.quantities import SolverParams
from varhom.utils.utils import log
from varhom.varrep.integrand import VariationalIntegrand, make_affine_representative


@dataclass
class DirichletSolution:
    u: GridField
    g: GridField
    # ⨍_U F(∇u, g, x) − ∇u·g, zero exactly at the solution
    null_value: float
    gap: float
    eps: float
    iterations: int
    cell_vectors: ndarray = field(repr=False)


class DirichletSystem(GridEnergy):
    """
    Null minimization of x ↦ ⨍_U F(∇u, g, x) − ∇u·g over u = f + v, v ∈ H¹₀, and g = g₀ + curl ψ.

    g₀ is a fixed flux with ∇·g₀ = −rhs at the interior nodes; stream images have no divergence there, and
    the cross term ∇v·curl ψ integrates to zero, so the energy is convex in x = [v; ψ] and vanishes exactly
    at the solution of −∇·a(∇u, x) = rhs.
    """

    def __init__(self, problem: DirichletProblem, phases: ndarray, integrand_of: Callable[[int], VariationalIntegrand]):
        self.problem = problem
        n = problem.intervals
        self.n = n
        self.h = problem.spacing
        self.cells = np.flatnonzero(problem.cell_mask.ravel())
        self.ncells = self.cells.size
        self.u_free = np.flatnonzero(problem.interior_mask.ravel())
        self.psi_free = np.flatnonzero(problem.node_mask.ravel())
        if self.u_free.size == 0:
            raise InvalidInput("Dirichlet domain has no interior node")

        rows = np.stack([2 * self.cells, 2 * self.cells + 1], axis=-1).ravel()
        G = gradient_matrix(n, n, self.h)[rows]
        C = curl_matrix(n, n, self.h)[rows]
        Gu = G[:, self.u_free].tocsr()
        Cp = C[:, self.psi_free].tocsr()
        self.nu, self.npsi = Gu.shape[1], Cp.shape[1]
        self.B = interleave(Gu, Cp, self.ncells)
        self.BT = self.B.T.tocsr()

        self.lift = problem.boundary_values().ravel()
        grad_f = (G @ self.lift).reshape(self.ncells, 2)
        rhs = problem.rhs_values().ravel()[self.u_free]
        phi = spla.spsolve((Gu.T @ Gu).tocsc(), rhs) if np.any(rhs) else np.zeros(self.nu)
        self.g0 = (Gu @ phi).reshape(self.ncells, 2)
        self.z0 = np.hstack([grad_f, self.g0])
        self.ell = np.hstack([self.g0, grad_f])
        self.offset = -float(np.mean(np.sum(grad_f * self.g0, axis=-1)))
        self._set_groups(np.asarray(phases).reshape(-1), integrand_of)

    @classmethod
    def heterogeneous(cls, sample: CoefficientSample, problem: DirichletProblem) -> "DirichletSystem":
        region = problem.sample_region
        if any(lo > rlo or hi < rhi for (lo, hi), (rlo, rhi) in zip(sample.region, region)):
            raise InvalidInput(f"sample region {sample.region} does not cover the domain cells {region}")
        centres = problem.cell_centres().reshape(-1, 2)[np.flatnonzero(problem.cell_mask.ravel())]
        return cls(problem, sample.phase_at(sample.cell_of(centres)), sample.integrand)

    @classmethod
    def homogeneous(cls, integrand: VariationalIntegrand, problem: DirichletProblem) -> "DirichletSystem":
        return cls(problem, np.zeros(int(problem.cell_mask.sum()), dtype=np.int64), lambda _: integrand)

    @property
    def size(self) -> int:
        return self.nu + self.npsi

    def preconditioner(self):
        s_u, s_psi = self.block_scales(self.z0)
        apply_u = masked_preconditioner(self.problem.interior_mask, self.h)
        apply_psi = laplacian_preconditioner(self.n, self.n, self.h, "free")
        full = (self.n + 1) ** 2

        def precond(r: ndarray) -> ndarray:
            out = np.empty_like(r)
            out[: self.nu] = apply_u(r[: self.nu]) * self.ncells / s_u
            embedded = np.zeros(full)
            embedded[self.psi_free] = r[self.nu :]
            out[self.nu :] = apply_psi(embedded)[self.psi_free] * self.ncells / s_psi
            return out

        return precond

    def projector(self):
        def project(x: ndarray) -> ndarray:
            x = x.copy()
            x[self.nu :] -= x[self.nu :].mean()
            return x

        return project

    def split(self, x: ndarray) -> Tuple[GridField, GridField]:
        n = self.n
        u = self.lift.copy()
        u[self.u_free] += x[: self.nu]
        g = np.zeros((n * n, 2))
        g[self.cells] = self.z0[:, 2:] + self.cell_vectors(x)[:, 2:]
        lower, h = self.problem.lower, self.h
        return GridField(u.reshape(n + 1, n + 1), lower, h, "free", "node", 1), GridField(
            g.reshape(n, n, 2), lower, h, "free", "cell", 2
        )


def solve_dirichlet(system: DirichletSystem, params: Optional[SolverParams] = None) -> DirichletSolution:
    params = params or SolverParams()
    system.check_start(system.z0)
    res = minimize_newton_cg(
        system.objective(system.z0, system.ell),
        system.hessian(system.z0),
        np.zeros(system.size),
        precond=system.preconditioner(),
        project=system.projector(),
        tol=params.tol,
        max_iter=params.max_iter,
        cg_max_iter=params.cg_max_iter,
        c_armijo=params.c_armijo,
        coarse_tol=params.coarse_tol,
        what=f"dirichlet R={system.problem.R}",
    )
    u, g = system.split(res.x)
    gap = max(res.gap, params.tol)
    null_value = res.value + system.offset
    log.debug(f"dirichlet R={system.problem.R}: null value {null_value:.3e} after {res.iterations} steps")
    z = system.z0 + system.cell_vectors(res.x)
    return DirichletSolution(u, g, null_value, gap, gap + system.tabulation_error, res.iterations, z)


def solve_heterogeneous(
    sample: CoefficientSample, problem: DirichletProblem, params: Optional[SolverParams] = None
) -> GridField:
    """Solution of −∇·a(∇u, x) = rhs with the sample's coefficients."""
    return solve_dirichlet(DirichletSystem.heterogeneous(sample, problem), params).u


def homogenized_integrand(model: HomogenizedModel, tol: float = 1e-6) -> VariationalIntegrand:
    """
    Representative of ā for the homogenized equation.

    When the sampled ā is affine up to ``tol`` its closed-form representative is used, which has no range
    limit; otherwise the F̄ table itself, so ∇ū and the flux must stay inside the table.
    """
    try:
        A, s, misfit = affine_fit(model)
    except InvalidInput:
        return model.Fbar
    sym, skew = 0.5 * (A + A.T), 0.5 * (A - A.T)
    if misfit <= tol * (1.0 + np.nanmax(np.abs(model.abar))) and np.linalg.eigvalsh(sym).min() > 0:
        return make_affine_representative(sym, skew, s)
    log.info(f"{model.ensemble_id}: abar is not affine (misfit {misfit:.2e}), using the F̄ table")
    return model.Fbar


def solve_homogenized(
    model: HomogenizedModel, problem: DirichletProblem, params: Optional[SolverParams] = None
) -> GridField:
    """Solution of −∇·ā(∇ū) = rhs."""
    return solve_dirichlet(DirichletSystem.homogeneous(homogenized_integrand(model), problem), params).u
