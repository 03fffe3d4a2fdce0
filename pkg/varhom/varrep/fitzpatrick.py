from typing import Optional, Tuple

import numba as nb
import numpy as np
from numpy import ndarray

from varhom.exceptions import EnlargeDomain
from varhom.utils.utils import log
from varhom.varrep.integrand import VariationalIntegrand
from varhom.varrep.monotone import MonotoneMap


@nb.njit("Tuple((f8[:],i8[:]))(f8[:,:],f8[:,:],f8[:,:],f8[:,:],f8[:])", cache=True)
def _grid_argmax_kernel(p, q, xi, a_xi, a_dot_xi):
    n = p.shape[0]
    best = np.empty(n)
    arg = np.zeros(n, dtype=np.int64)
    for k in range(n):
        top = -np.inf
        for g in range(xi.shape[0]):
            val = -a_dot_xi[g]
            for c in range(p.shape[1]):
                val += q[k, c] * xi[g, c] + p[k, c] * a_xi[g, c]
            if val > top:
                top = val
                arg[k] = g
        best[k] = top
    return best, arg


def search_radius(a: MonotoneMap, pmax: float, qmax: float, radius_hint: Optional[float] = None) -> float:
    """
    Radius of a box that contains every maximizer of q·ξ − a(ξ)·(ξ−p) for |p| ≤ pmax, |q| ≤ qmax.

    Comparing the maximizer with ξ = p gives |ξ − p| ≤ (|q| + K₀ + L|p|)/m, with m the sampled
    monotonicity constant and L the Lipschitz constant of ``a``.
    """
    probe = radius_hint if radius_hint is not None else max(1.0, pmax + qmax)
    m = a.monotonicity_estimate(probe)
    if m <= 1e-9:
        raise EnlargeDomain(f"{a.name} is not uniformly monotone on |p| <= {probe:g}; the supremum may be infinite")
    return 1.1 * (pmax + (qmax + a.a0_bound + a.lam * pmax) / m)


class FitzpatrickIntegrand(VariationalIntegrand):
    """F(p, q) = sup_ξ (q·ξ − a(ξ)·(ξ − p)), evaluated on demand."""

    def __init__(
        self,
        a: MonotoneMap,
        xi_box: float,
        grid_step: Optional[float] = None,
        refine_steps: int = 50,
        c_armijo: float = 1e-4,
    ):
        super().__init__(a.dim, max(3.0, 2 * a.lam + 1), a.a0_bound)
        self.a = a
        self.xi_box = float(xi_box)
        self.grid_step = self.xi_box / 32 if grid_step is None else float(grid_step)
        self.refine_steps = refine_steps
        self.c_armijo = c_armijo
        axis = np.arange(-self.xi_box, self.xi_box + 0.5 * self.grid_step, self.grid_step)
        mesh = np.meshgrid(*([axis] * a.dim), indexing="ij")
        self._xi = np.ascontiguousarray(np.stack([m.ravel() for m in mesh], axis=-1))
        self._a_xi = np.ascontiguousarray(a(self._xi))
        self._a_dot_xi = np.einsum("ij,ij->i", self._a_xi, self._xi)
        self._edge = axis[-1]

    def _objective(self, xi: ndarray, p: ndarray, q: ndarray) -> ndarray:
        return np.einsum("ij,ij->i", q, xi) - np.einsum("ij,ij->i", self.a(xi), xi - p)

    def maximize(self, p, q) -> Tuple[ndarray, ndarray]:
        """Return the supremum and the maximizing ξ for each (p, q) row."""
        p, q = self._split(p, q)
        p = np.ascontiguousarray(p)
        q = np.ascontiguousarray(q)
        _, arg = _grid_argmax_kernel(p, q, self._xi, self._a_xi, self._a_dot_xi)
        xi = self._xi[arg].copy()
        on_edge = np.any(np.abs(xi) >= self._edge - 1e-12, axis=-1)
        if on_edge.any():
            raise EnlargeDomain(
                f"{int(on_edge.sum())} grid maximizers on the search box boundary (xi_box={self.xi_box:g})"
            )

        value = self._objective(xi, p, q)
        step = -1
        for step in range(self.refine_steps):
            a_xi = self.a(xi)
            jac = self.a.jacobian(xi)
            grad = q - a_xi - np.einsum("nji,nj->ni", jac, xi - p)
            if np.max(np.linalg.norm(grad, axis=-1)) < 1e-13:
                break
            # ascent direction preconditioned by the monotone part Da + Daᵀ
            sym = jac + np.swapaxes(jac, 1, 2)
            direction = np.linalg.solve(sym, grad[..., None])[..., 0]
            slope = np.einsum("ij,ij->i", grad, direction)
            t = np.ones(p.shape[0])
            accepted = np.zeros(p.shape[0], dtype=bool)
            trial_value = value.copy()
            for _ in range(30):
                trial = xi + t[:, None] * direction
                cand = self._objective(trial, p, q)
                ok = (cand >= value + self.c_armijo * t * slope) & ~accepted
                trial_value[ok] = cand[ok]
                xi[ok] = trial[ok]
                accepted |= ok
                if accepted.all():
                    break
                t = np.where(accepted, t, 0.5 * t)
            value = trial_value
        log.debug(f"fitzpatrick: refined {p.shape[0]} maximizers in {step + 1} ascent steps")

        if np.any(np.abs(xi) >= self.xi_box):
            raise EnlargeDomain(f"refined maximizer left the search box (xi_box={self.xi_box:g})")
        return value, xi

    def value(self, p, q) -> ndarray:
        return self.maximize(p, q)[0]

    def gradient(self, p, q, eps=None) -> ndarray:
        # envelope theorem: ∂_p F = a(ξ*), ∂_q F = ξ*
        _, xi = self.maximize(p, q)
        return np.concatenate([self.a(xi), xi], axis=-1)


def fitzpatrick(
    a: MonotoneMap,
    xi_box: Optional[float] = None,
    grid_step: Optional[float] = None,
    pmax: float = 1.0,
    qmax: float = 1.0,
    refine_steps: int = 50,
) -> FitzpatrickIntegrand:
    """
    Fitzpatrick function of ``a``: coarse grid search with stride ``xi_box/32`` then Armijo ascent.

    When ``xi_box`` is not given it is derived from the largest |p| and |q| that will be queried.
    """
    if xi_box is None:
        xi_box = search_radius(a, pmax, qmax)
    return FitzpatrickIntegrand(a, xi_box, grid_step, refine_steps)
