from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from numpy import ndarray

from varhom.fields.ensemble import CoefficientSample
from varhom.grid.cube import TriadicCube
from varhom.subadd.newton import minimize_newton_cg
from varhom.subadd.problem import CellProblem, MinimizerPair, affine_data
from varhom.utils.utils import log


@dataclass(frozen=True)
class SolverParams:
    tol: float = 1e-8
    max_iter: int = 50
    cg_max_iter: int = 500
    c_armijo: float = 1e-4
    coarse_tol: float = 0.5


def _solve(
    problem: CellProblem, z0: ndarray, ell: ndarray, params: SolverParams, x0: Optional[ndarray], what: str
) -> MinimizerPair:
    problem.check_start(z0)
    x0 = np.zeros(problem.size) if x0 is None else np.asarray(x0, dtype=np.float64)
    res = minimize_newton_cg(
        problem.objective(z0, ell),
        problem.hessian(z0),
        x0,
        precond=problem.preconditioner(z0),
        project=problem.projector(),
        tol=params.tol,
        max_iter=params.max_iter,
        cg_max_iter=params.cg_max_iter,
        c_armijo=params.c_armijo,
        coarse_tol=params.coarse_tol,
        what=what,
    )
    u, g = problem.split(res.x)
    # the decrement estimate is never reported below the requested tolerance
    gap = max(res.gap, params.tol)
    shift = (tuple(z0[:2].tolist()), tuple(z0[2:].tolist()))
    eps = gap + problem.tabulation_error
    return MinimizerPair(u, g, res.value, res.grad_norm, gap, eps, res.iterations, shift, res.x)


def solve_mu(
    sample: CoefficientSample,
    cube: TriadicCube,
    qstar,
    pstar,
    params: Optional[SolverParams] = None,
    x0: Optional[ndarray] = None,
) -> Tuple[float, MinimizerPair]:
    """
    μ(U, q*, p*) = min ⨍_U F(∇u, g, x) − q*·∇u − p*·g over free potentials u and solenoidal g = curl ψ.

    ``x0`` optionally starts the solver from [u; ψ] instead of zero.
    """
    params = params or SolverParams()
    problem = CellProblem(sample, cube, zero_boundary=False)
    ell = affine_data(qstar, pstar)
    pair = _solve(problem, np.zeros(4), ell, params, x0, f"mu n={cube.level}")
    log.debug(f"mu(n={cube.level}, q*={ell[:2]}, p*={ell[2:]}) = {pair.energy:.10g} in {pair.iterations} steps")
    return pair.energy, pair


def solve_mu0(
    sample: CoefficientSample,
    cube: TriadicCube,
    p,
    q,
    params: Optional[SolverParams] = None,
    x0: Optional[ndarray] = None,
) -> Tuple[float, MinimizerPair]:
    """
    μ₀(U, p, q) = min ⨍_U F(p + ∇v, q + h, x) over v ∈ H¹₀ and zero-normal solenoidal h.

    A value below p·q by more than the solver tolerance clears ``pair.pairing_ok``.
    """
    params = params or SolverParams()
    problem = CellProblem(sample, cube, zero_boundary=True)
    z0 = affine_data(p, q)
    pair = _solve(problem, z0, np.zeros(4), params, x0, f"mu0 n={cube.level}")
    floor = float(z0[:2] @ z0[2:])
    if pair.energy < floor - pair.eps:
        pair.pairing_ok = False
        log.warning(f"mu0(n={cube.level}) = {pair.energy:.10g} below p.q = {floor:.10g}")
    log.debug(f"mu0(n={cube.level}, p={z0[:2]}, q={z0[2:]}) = {pair.energy:.10g} in {pair.iterations} steps")
    return pair.energy, pair
