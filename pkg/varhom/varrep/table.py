from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
from numpy import ndarray
from scipy.interpolate import RegularGridInterpolator

from varhom.exceptions import InvalidInput, OutOfDomain
from varhom.utils.utils import as_vectors
from varhom.varrep.integrand import VariationalIntegrand


def uniform_axes(bound, n: int, k: int) -> list:
    """``k`` identical uniform axes on [−bound, bound] with ``n`` nodes, or per-axis (lo, hi) pairs."""
    if np.isscalar(bound):
        return [np.linspace(-bound, bound, n) for _ in range(k)]
    return [np.linspace(lo, hi, n) for lo, hi in bound]


class TabulatedIntegrand(VariationalIntegrand):
    """
    Integrand stored on a uniform grid of the (p, q) space with multilinear interpolation.

    Gradient and Hessian are centred differences of the table, interpolated the same way. Queries outside
    the table raise :class:`OutOfDomain`; nothing is extrapolated. Entries whose construction hit a search
    boundary are marked in ``trusted``.
    """

    def __init__(
        self,
        axes: Sequence[ndarray],
        values: ndarray,
        Lambda: float,
        K0: float = 0.0,
        selfdual: bool = False,
        trusted: Optional[ndarray] = None,
    ):
        axes = [np.asarray(ax, dtype=np.float64) for ax in axes]
        values = np.array(values, dtype=np.float64)
        if len(axes) % 2 or values.shape != tuple(len(ax) for ax in axes):
            raise InvalidInput(f"table shape {values.shape} does not match axes {[len(ax) for ax in axes]}")
        for ax in axes:
            if len(ax) < 3 or not np.allclose(np.diff(ax), ax[1] - ax[0]):
                raise InvalidInput("table axes must be uniform with at least 3 nodes")
        super().__init__(len(axes) // 2, Lambda, K0, selfdual)
        self.axes = axes
        self.values = values
        self.values.setflags(write=False)
        self.trusted = np.ones(values.shape, dtype=bool) if trusted is None else np.asarray(trusted, dtype=bool)

    @property
    def shape(self):
        return self.values.shape

    @property
    def spacing(self) -> ndarray:
        return np.array([ax[1] - ax[0] for ax in self.axes])

    @property
    def lower(self) -> ndarray:
        return np.array([ax[0] for ax in self.axes])

    @property
    def upper(self) -> ndarray:
        return np.array([ax[-1] for ax in self.axes])

    def nodes(self) -> ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @cached_property
    def _value_interp(self):
        return RegularGridInterpolator(self.axes, self.values, method="linear")

    @cached_property
    def gradient_table(self) -> ndarray:
        grads = np.gradient(self.values, *self.spacing, edge_order=2)
        return np.stack(grads, axis=-1)

    @cached_property
    def hessian_table(self) -> ndarray:
        k = len(self.axes)
        hess = np.empty(self.shape + (k, k))
        for i in range(k):
            cols = np.gradient(self.gradient_table[..., i], *self.spacing, edge_order=2)
            for j in range(k):
                hess[..., i, j] = cols[j]
        return 0.5 * (hess + np.swapaxes(hess, -1, -2))

    @cached_property
    def _gradient_interp(self):
        return RegularGridInterpolator(self.axes, self.gradient_table, method="linear")

    @cached_property
    def _hessian_interp(self):
        return RegularGridInterpolator(self.axes, self.hessian_table, method="linear")

    @cached_property
    def _trusted_interp(self):
        return RegularGridInterpolator(self.axes, self.trusted.astype(np.float64), method="linear")

    def _points(self, p, q) -> ndarray:
        p, q = self._split(p, q)
        z = np.concatenate([p, q], axis=-1)
        slack = 1e-9 * (1.0 + np.abs(self.upper - self.lower))
        outside = np.any((z < self.lower - slack) | (z > self.upper + slack), axis=-1)
        if outside.any():
            bad = z[outside][0]
            raise OutOfDomain(f"query {np.round(bad, 6).tolist()} outside table [{self.lower[0]}, {self.upper[0]}]")
        return np.clip(z, self.lower, self.upper)

    def value(self, p, q) -> ndarray:
        return self._value_interp(self._points(p, q))

    def gradient(self, p, q, eps=None) -> ndarray:
        return self._gradient_interp(self._points(p, q))

    def hessian(self, p, q, eps=None, clip: bool = True) -> ndarray:
        hess = self._hessian_interp(self._points(p, q))
        if not clip:
            return hess
        # project onto the convexity window [1/Λ, Λ]
        w, v = np.linalg.eigh(hess)
        w = np.clip(w, 1.0 / self.Lambda, self.Lambda)
        return np.einsum("nij,nj,nkj->nik", v, w, v)

    def is_trusted(self, p, q) -> ndarray:
        """True where every surrounding table node is trusted."""
        return self._trusted_interp(self._points(p, q)) > 1.0 - 1e-9

    def conjugate(self, dual_axes: Optional[Sequence[ndarray]] = None) -> "TabulatedIntegrand":
        from varhom.varrep.legendre import legendre_transform

        return legendre_transform(self, dual_axes)

    def swapped(self) -> "TabulatedIntegrand":
        """(p, q) ↦ F(q, p), i.e. the first d and last d table axes exchanged."""
        d = self.dim
        perm = list(range(d, 2 * d)) + list(range(d))
        return TabulatedIntegrand(
            [self.axes[i] for i in perm],
            np.transpose(self.values, perm),
            self.Lambda,
            self.K0,
            self.selfdual,
            np.transpose(self.trusted, perm),
        )

    def interior_mask(self, margin: int = 1) -> ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[tuple(slice(margin, n - margin) for n in self.shape)] = True
        return mask


def tabulate(
    fn: Callable[[ndarray, ndarray], ndarray],
    bound,
    n: int,
    dim: int = 2,
    Lambda: float = 3.0,
    K0: float = 0.0,
    selfdual: bool = False,
    chunk: int = 1 << 15,
) -> TabulatedIntegrand:
    """Evaluate ``fn(p, q)`` (an integrand or any vectorised callable) on a uniform (p, q) grid."""
    axes = uniform_axes(bound, n, 2 * dim)
    mesh = np.meshgrid(*axes, indexing="ij")
    z = np.stack([m.ravel() for m in mesh], axis=-1)
    values = np.empty(z.shape[0])
    for start in range(0, z.shape[0], chunk):
        zz = as_vectors(z[start : start + chunk], 2 * dim)
        values[start : start + chunk] = fn(zz[:, :dim], zz[:, dim:])
    if isinstance(fn, VariationalIntegrand):
        Lambda, K0, selfdual = fn.Lambda, fn.K0, fn.selfdual
    return TabulatedIntegrand(axes, values.reshape(mesh[0].shape), Lambda, K0, selfdual)


def tabulation_error(spacing: float, Lambda: float, dim: int = 2) -> float:
    """
    Documented bound for grid-based evaluation of a C^{1,1} integrand with constant Λ.

    A maximizer that falls between nodes is at most ``h·√(2d)/2`` away from one, which costs at most
    ``Λ/2`` times that distance squared: Λ·d·h²/4. Multilinear interpolation obeys the same bound.
    """
    return Lambda * dim * spacing**2 / 4.0
