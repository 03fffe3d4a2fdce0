from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.sparse.linalg as spla
from numpy import ndarray

from varhom.exceptions import OutOfDomain, SolverFailure
from varhom.utils.utils import log

Objective = Callable[[ndarray], Tuple[float, ndarray]]


@dataclass
class NewtonResult:
    x: ndarray
    value: float
    grad_norm: float
    # ½ gᵀH⁻¹g at the last iterate, an estimate of value − min
    gap: float
    iterations: int
    cg_iterations: int
    converged: bool


def _descent_direction(H, g: ndarray, precond: Optional[Callable], rtol: float, maxiter: int) -> Tuple[ndarray, int]:
    n = g.size
    M = spla.LinearOperator((n, n), matvec=precond, dtype=np.float64) if precond is not None else None
    count = [0]

    def callback(_):
        count[0] += 1

    d, _ = spla.cg(H, -g, rtol=rtol, atol=0.0, maxiter=maxiter, M=M, callback=callback)
    if not np.all(np.isfinite(d)) or g @ d >= 0:
        d = -(precond(g) if precond is not None else g)
    return d, count[0]


def minimize_newton_cg(
    objective: Objective,
    hessian: Callable[[ndarray], object],
    x0: ndarray,
    precond: Optional[Callable[[ndarray], ndarray]] = None,
    project: Optional[Callable[[ndarray], ndarray]] = None,
    tol: float = 1e-8,
    max_iter: int = 50,
    cg_max_iter: int = 500,
    c_armijo: float = 1e-4,
    max_backtracking: int = 30,
    coarse_tol: float = 0.5,
    what: str = "newton-cg",
) -> NewtonResult:
    """
    Inexact Newton-CG for a smooth uniformly convex objective.

    The Newton system is solved by preconditioned CG to the Eisenstat-Walker forcing tolerance
    min(coarse_tol, sqrt(|g|/|g₀|)); steps are globalized by Armijo backtracking. The iteration stops once
    the Newton decrement ½|(g, d)| drops below ``tol``. ``objective`` returns (value, gradient) and ``hessian``
    anything :func:`scipy.sparse.linalg.cg` accepts. ``project`` is applied after every step
    (e.g. to fix a constant of integration) and must not change the objective.
    """
    x = np.array(x0, dtype=np.float64)
    if project is not None:
        x = project(x)
    f, g = objective(x)
    g0 = max(float(np.linalg.norm(g)), 1e-300)
    total_cg = 0
    gap = float("inf")

    for it in range(max_iter):
        gnorm = float(np.linalg.norm(g))
        if gnorm == 0.0:
            return NewtonResult(x, f, 0.0, 0.0, it, total_cg, True)

        rtol = min(coarse_tol, np.sqrt(gnorm / g0))
        d, n_cg = _descent_direction(hessian(x), g, precond, rtol, cg_max_iter)
        total_cg += n_cg
        slope = float(g @ d)
        gap = -0.5 * slope
        log.debug(f"{what} it={it} f={f:.12e} |g|={gnorm:.3e} gap={gap:.3e} cg={n_cg}")
        if gap <= tol:
            return NewtonResult(x, f, gnorm, gap, it, total_cg, True)

        t = 1.0
        for _ in range(max_backtracking):
            x_new = x + t * d
            if project is not None:
                x_new = project(x_new)
            try:
                f_new, g_new = objective(x_new)
            except OutOfDomain:
                t *= 0.5
                continue
            if f_new <= f + c_armijo * t * slope:
                break
            t *= 0.5
        else:
            # tabulated energies carry gradients only consistent to the table accuracy; near the minimum a
            # full step that still reduces the gradient is accepted
            x_new = x + d
            if project is not None:
                x_new = project(x_new)
            f_new, g_new = objective(x_new)
            if np.linalg.norm(g_new) >= gnorm:
                raise SolverFailure(f"{what}: line search failed", residual=gnorm, iterations=it)
            log.debug(f"{what}: Armijo failed, accepted full step on gradient decrease")

        x, f, g = x_new, f_new, g_new

    raise SolverFailure(
        f"{what}: no convergence in {max_iter} iterations (gap {gap:.3e} > {tol:.1e})",
        residual=float(np.linalg.norm(g)),
        iterations=max_iter,
    )
