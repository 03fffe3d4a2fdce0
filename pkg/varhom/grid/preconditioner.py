from typing import Callable

import numpy as np
import scipy.fft
from numpy import ndarray

from varhom.exceptions import InvalidInput


def _bilinear_eigenvalues(nx: int, ny: int, h: float) -> ndarray:
    # DST-I modes sin(πk i/nx) diagonalize GᵀG on interior nodes exactly
    tx = np.pi * np.arange(1, nx) / nx
    ty = np.pi * np.arange(1, ny) / ny
    sx, cx = np.sin(tx / 2) ** 2, np.cos(tx / 2) ** 2
    sy, cy = np.sin(ty / 2) ** 2, np.cos(ty / 2) ** 2
    return (4.0 / h**2) * (np.outer(sx, cy) + np.outer(cx, sy))


def _neumann_eigenvalues(nx: int, ny: int, h: float) -> ndarray:
    kx = np.arange(nx + 1)
    ky = np.arange(ny + 1)
    ex = 4.0 * np.sin(np.pi * kx / (2 * (nx + 1))) ** 2
    ey = 4.0 * np.sin(np.pi * ky / (2 * (ny + 1))) ** 2
    return (ex[:, None] + ey[None, :]) / h**2


def laplacian_preconditioner(nx: int, ny: int, h: float, boundary: str = "zero") -> Callable[[ndarray], ndarray]:
    """
    Fast approximate inverse of the discrete Laplacian GᵀG on an nx × ny interval grid.

    ``boundary="zero"`` acts on interior nodes ((nx−1)(ny−1) unknowns) and is exact there (DST-I).
    ``boundary="free"`` acts on all nodes with the five-point Neumann Laplacian (DCT-II) and the
    pseudo-inverse on the constant mode.
    """
    if boundary == "zero":
        if nx < 2 or ny < 2:
            raise InvalidInput("zero-boundary preconditioner needs at least one interior node")
        eig = _bilinear_eigenvalues(nx, ny, h)
        shape = (nx - 1, ny - 1)

        def apply(r: ndarray) -> ndarray:
            r_hat = scipy.fft.dstn(r.reshape(shape), type=1, norm="ortho")
            return scipy.fft.idstn(r_hat / eig, type=1, norm="ortho").ravel()

        return apply

    if boundary == "free":
        eig = _neumann_eigenvalues(nx, ny, h)
        inv = np.where(eig > 0, 1.0 / np.where(eig > 0, eig, 1.0), 0.0)
        shape = (nx + 1, ny + 1)

        def apply(r: ndarray) -> ndarray:
            r_hat = scipy.fft.dctn(r.reshape(shape), type=2, norm="ortho")
            return scipy.fft.idctn(r_hat * inv, type=2, norm="ortho").ravel()

        return apply

    raise InvalidInput(f"no preconditioner for boundary {boundary!r}")


def masked_preconditioner(mask: ndarray, h: float) -> Callable[[ndarray], ndarray]:
    """
    Zero-boundary preconditioner for the nodes selected by ``mask`` inside its bounding box.

    Residuals are embedded in the box (zeros elsewhere), inverted there and restricted back.
    """
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    i0, i1 = rows[0] - 1, rows[-1] + 1
    j0, j1 = cols[0] - 1, cols[-1] + 1
    if i0 < 0 or j0 < 0 or i1 >= mask.shape[0] or j1 >= mask.shape[1]:
        raise InvalidInput("masked nodes must stay off the grid boundary")
    sub = mask[i0 + 1 : i1, j0 + 1 : j1]
    inner = laplacian_preconditioner(i1 - i0, j1 - j0, h, "zero")

    def apply(r: ndarray) -> ndarray:
        box = np.zeros(sub.shape)
        box[sub] = r
        return inner(box.ravel()).reshape(sub.shape)[sub]

    return apply
