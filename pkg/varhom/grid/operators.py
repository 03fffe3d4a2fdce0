from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from varhom.exceptions import InvalidInput
from varhom.grid.field import GridField


@lru_cache(maxsize=32)
def gradient_matrix(nx: int, ny: int, h: float) -> sp.csr_matrix:
    """
    One-point bilinear gradient from nodes to cell centres.

    Nodes (i, j), 0 ≤ i ≤ nx, 0 ≤ j ≤ ny, are flattened in C order; cell c = i·ny + j owns rows 2c (∂x) and
    2c + 1 (∂y). In a cell with corner values u00, u10, u01, u11,
    ∂x = (−u00 + u10 − u01 + u11)/(2h) and ∂y = (−u00 − u10 + u01 + u11)/(2h).
    """
    ci, cj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    c = (ci * ny + cj).ravel()
    n00 = (ci * (ny + 1) + cj).ravel()
    n10 = n00 + (ny + 1)
    n01 = n00 + 1
    n11 = n10 + 1
    s = 1.0 / (2.0 * h)
    rows = np.concatenate([np.repeat(2 * c, 4), np.repeat(2 * c + 1, 4)])
    cols_x = np.stack([n00, n10, n01, n11], axis=-1).ravel()
    vals_x = np.tile([-s, s, -s, s], c.size)
    vals_y = np.tile([-s, -s, s, s], c.size)
    G = sp.coo_matrix(
        (np.concatenate([vals_x, vals_y]), (rows, np.concatenate([cols_x, cols_x]))),
        shape=(2 * nx * ny, (nx + 1) * (ny + 1)),
    )
    return G.tocsr()


@lru_cache(maxsize=32)
def curl_matrix(nx: int, ny: int, h: float) -> sp.csr_matrix:
    """Stream-function map ψ ↦ (∂yψ, −∂xψ) at cell centres, same layout as :func:`gradient_matrix`."""
    G = gradient_matrix(nx, ny, h)
    perm = np.arange(G.shape[0]).reshape(-1, 2)[:, ::-1].ravel()
    sign = np.tile([1.0, -1.0], G.shape[0] // 2)
    return (sp.diags(sign) @ G[perm]).tocsr()


def interior_nodes(nx: int, ny: int) -> np.ndarray:
    i, j = np.meshgrid(np.arange(1, nx), np.arange(1, ny), indexing="ij")
    return (i * (ny + 1) + j).ravel()


def boundary_nodes(nx: int, ny: int) -> np.ndarray:
    mask = np.ones((nx + 1, ny + 1), dtype=bool)
    mask[1:-1, 1:-1] = False
    return np.flatnonzero(mask.ravel())


def discrete_gradient(u: GridField) -> GridField:
    if u.location != "node" or u.components != 1 or u.dim != 2:
        raise InvalidInput("discrete_gradient expects a scalar nodal field in d=2")
    nx, ny = u.intervals
    g = gradient_matrix(nx, ny, u.spacing) @ u.values.ravel()
    return GridField(g.reshape(nx, ny, 2), u.lower, u.spacing, u.boundary, "cell", 2)


def discrete_divergence(g: GridField) -> GridField:
    """
    Nodal divergence −Gᵀg with lumped weights, so that ⟨∇u, g⟩ = −⟨u, ∇·g⟩ exactly.

    At boundary nodes the value carries the outward flux; it vanishes at interior nodes for any stream image.
    """
    if g.location != "cell" or g.components != 2 or g.dim != 2:
        raise InvalidInput("discrete_divergence expects a cell-centred vector field in d=2")
    nx, ny = g.grid_shape
    div = -(gradient_matrix(nx, ny, g.spacing).T @ g.values.reshape(-1))
    return GridField(div.reshape(nx + 1, ny + 1), g.lower, g.spacing, g.boundary, "node", 1)


def inner_cells(f: GridField, g: GridField) -> float:
    """∫ f·g for two cell-centred fields on the same grid."""
    if not f.same_grid(g):
        raise InvalidInput("fields live on different grids")
    return float(np.sum(f.values * g.values) * f.spacing**f.dim)


def inner_nodes(u: GridField, v: GridField) -> float:
    """Σ u·v with lumped h^d node weights (the pairing adjoint to :func:`inner_cells`)."""
    if not u.same_grid(v):
        raise InvalidInput("fields live on different grids")
    return float(np.sum(u.values * v.values) * u.spacing**u.dim)
