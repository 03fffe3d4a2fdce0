from typing import Callable, Optional, Tuple

import numpy as np
from numpy import ndarray

from varhom.exceptions import SolverFailure
from varhom.utils.utils import as_vectors, log
from varhom.varrep.integrand import VariationalIntegrand


def _damped_newton(
    residual_fn: Callable[[ndarray, ndarray], Tuple[ndarray, ndarray]],
    x0: ndarray,
    tol: float,
    max_iter: int,
    what: str,
) -> ndarray:
    """
    Batched damped Newton for the roots of a strongly monotone gradient map.

    ``residual_fn(x, rows)`` returns the residual (N, k) and its Jacobian (N, k, k) for the problems
    indexed by ``rows``. A step is halved while it does not decrease the residual norm.
    """
    x = x0.copy()
    all_rows = np.arange(x.shape[0])
    res, jac = residual_fn(x, all_rows)
    norm = np.linalg.norm(res, axis=-1)
    for _ in range(max_iter):
        rows = np.flatnonzero(norm > tol)
        if rows.size == 0:
            break
        step = np.linalg.solve(jac[rows], res[rows][..., None])[..., 0]
        t = np.ones(rows.size)
        accepted = np.zeros(rows.size, dtype=bool)
        for _ in range(40):
            trial = x[rows] - t[:, None] * step
            trial_res, _ = residual_fn(trial, rows)
            ok = (np.linalg.norm(trial_res, axis=-1) < norm[rows]) & ~accepted
            x[rows[ok]] = trial[ok]
            accepted |= ok
            if accepted.all():
                break
            t = np.where(accepted, t, 0.5 * t)
        if not accepted.any():
            break
        res, jac = residual_fn(x, all_rows)
        norm = np.linalg.norm(res, axis=-1)
    worst = float(norm.max(initial=0.0))
    if worst > tol:
        raise SolverFailure(f"{what} did not converge", worst, max_iter)
    log.debug(f"{what}: {x.shape[0]} problems, max residual {worst:.2e}")
    return x


def recover_monotone_map(
    F: VariationalIntegrand, p, q0: Optional[ndarray] = None, tol: float = 1e-10, max_iter: int = 100
) -> ndarray:
    """
    The map a represented by F: a(p) = argmin_q (F(p, q) − p·q).

    Solves ∂_q F(p, q) = p by damped Newton. Returns shape (N, d), or (d,) for a single p.
    Tabulated integrands raise :class:`~varhom.exceptions.OutOfDomain` when an iterate leaves the table.
    """
    single = np.ndim(p) == 1
    d = F.dim
    p = as_vectors(p, d)
    q = p.copy() if q0 is None else as_vectors(q0, d).copy()

    def residual_fn(qq, rows):
        pp = p[rows]
        return F.gradient(pp, qq)[:, d:] - pp, F.hessian(pp, qq)[:, d:, d:]

    q = _damped_newton(residual_fn, q, tol, max_iter, "recover_monotone_map")
    return q[0] if single else q


def invert_gradient(
    F: VariationalIntegrand, zstar, z0: Optional[ndarray] = None, tol: float = 1e-10, max_iter: int = 100
) -> ndarray:
    """
    Solve ∇F(p, q) = (q*, p*) for z = (p, q), i.e. the primal point dual to ``zstar = (q*, p*)``.

    ``zstar`` is given in gradient order (∂_p F, ∂_q F).
    """
    single = np.ndim(zstar) == 1
    k = 2 * F.dim
    zstar = as_vectors(zstar, k)
    z = np.zeros_like(zstar) if z0 is None else as_vectors(z0, k).copy()

    def residual_fn(zz, rows):
        pp, qq = zz[:, : F.dim], zz[:, F.dim :]
        return F.gradient(pp, qq) - zstar[rows], F.hessian(pp, qq)

    z = _damped_newton(residual_fn, z, tol, max_iter, "invert_gradient")
    return z[0] if single else z
