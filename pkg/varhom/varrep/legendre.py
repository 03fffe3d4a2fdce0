from typing import Optional, Sequence

import numba as nb
import numpy as np
from numpy import ndarray

from varhom.exceptions import InvalidInput
from varhom.utils.utils import log
from varhom.varrep.table import TabulatedIntegrand


@nb.njit("f8[:,:](f8[:,:],f8[:],f8[:])", cache=True)
def _conjugate_axis_kernel(values, z, s):
    # out[l, j] = max_i (values[l, i] + s[j] * z[i]); strict comparison keeps the smallest index on ties
    n_lines = values.shape[0]
    out = np.empty((n_lines, s.shape[0]))
    for line in range(n_lines):
        for j in range(s.shape[0]):
            best = values[line, 0] + s[j] * z[0]
            for i in range(1, z.shape[0]):
                cand = values[line, i] + s[j] * z[i]
                if cand > best:
                    best = cand
            out[line, j] = best
    return out


def _separable_max(values: ndarray, axes: Sequence[ndarray], dual_axes: Sequence[ndarray]) -> ndarray:
    """max over the grid of Σ s_i z_i + values(z), one axis at a time."""
    work = values
    for axis in reversed(range(len(axes))):
        moved = np.moveaxis(work, axis, -1)
        lead = moved.shape[:-1]
        flat = np.ascontiguousarray(moved.reshape(-1, moved.shape[-1]))
        reduced = _conjugate_axis_kernel(flat, np.ascontiguousarray(axes[axis]), np.ascontiguousarray(dual_axes[axis]))
        work = np.moveaxis(reduced.reshape(lead + (len(dual_axes[axis]),)), -1, axis)
    return work


def legendre_transform(
    f: TabulatedIntegrand, dual_axes: Optional[Sequence[ndarray]] = None, tol: float = 1e-12
) -> TabulatedIntegrand:
    """
    Discrete Legendre-Fenchel transform f*(z*) = max_z (z·z* − f(z)) over the table nodes.

    The maximum over a product grid separates into one-dimensional maxima taken axis by axis, which is
    what makes 4-dimensional tables affordable. An entry is trusted when the maximum is also attained
    with every coordinate strictly inside the primal grid; otherwise the true supremum may lie beyond the
    table (for an affine f it is +∞) and the entry is flagged.

    Parameters
    ----------
    f
        Tabulated convex function. Untrusted input entries are excluded from the maximization.
    dual_axes
        Axes of the dual grid; defaults to the primal axes.
    tol
        Relative tolerance used to compare the interior and full maxima.

    Returns
    -------
    TabulatedIntegrand
        f* on the dual grid with its trust mask.
    """
    axes = f.axes
    dual_axes = axes if dual_axes is None else [np.asarray(ax, dtype=np.float64) for ax in dual_axes]
    if len(dual_axes) != len(axes):
        raise InvalidInput("dual grid must have the same dimension as the primal grid")
    neg = -np.where(f.trusted, f.values, np.inf)
    if not np.isfinite(neg).any():
        raise InvalidInput("no trusted entries to transform")
    full = _separable_max(neg, axes, dual_axes)

    interior = tuple(slice(1, len(ax) - 1) for ax in axes)
    inner = _separable_max(np.ascontiguousarray(neg[interior]), [ax[1:-1] for ax in axes], dual_axes)
    trusted = inner >= full - tol * (1.0 + np.abs(full))

    untrusted = int((~trusted).sum())
    if untrusted:
        log.debug(f"legendre_transform: {untrusted}/{trusted.size} dual entries have boundary maximizers")
    return TabulatedIntegrand(dual_axes, full, f.Lambda, f.K0, f.selfdual, trusted)


def biconjugate_gap(f: TabulatedIntegrand) -> ndarray:
    """f − f** on the primal grid; nonnegative for any table, zero where f is convex and well resolved."""
    fss = legendre_transform(legendre_transform(f), f.axes)
    return f.values - fss.values
