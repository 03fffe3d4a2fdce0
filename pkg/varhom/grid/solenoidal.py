from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp
from numpy import ndarray

from varhom.exceptions import InvalidInput, UnsupportedDimension
from varhom.grid.field import GridField
from varhom.grid.operators import curl_matrix, interior_nodes


@dataclass
class SolenoidalParam:
    """
    Divergence-free cell fields as curls of nodal stream functions, g = (∂yψ, −∂xψ).

    With ``zero_normal`` the stream function vanishes on the boundary, which gives zero flux through every
    boundary face (the zero-normal class); otherwise ψ is free and the image is the full divergence-free class
    of the (simply connected) box.
    """

    shape: Tuple[int, int]
    spacing: float
    lower: Tuple[float, float] = (0.0, 0.0)
    zero_normal: bool = False

    def __post_init__(self):
        nx, ny = self.shape
        self.free = interior_nodes(nx, ny) if self.zero_normal else np.arange((nx + 1) * (ny + 1))
        C = curl_matrix(nx, ny, self.spacing)
        self.matrix: sp.csr_matrix = C[:, self.free].tocsr()

    @property
    def size(self) -> int:
        return int(self.free.size)

    def embed(self, psi_free: ndarray) -> ndarray:
        """Free unknowns to the full nodal stream function (zeros on fixed nodes)."""
        nx, ny = self.shape
        psi = np.zeros((nx + 1) * (ny + 1))
        psi[self.free] = psi_free
        return psi.reshape(nx + 1, ny + 1)

    def __call__(self, psi: ndarray) -> GridField:
        """Image of ψ, given either as free unknowns or as a full nodal array."""
        psi = np.asarray(psi, dtype=np.float64)
        nx, ny = self.shape
        if psi.size == (nx + 1) * (ny + 1) and psi.size != self.size:
            psi_full = psi.reshape(nx + 1, ny + 1)
            if self.zero_normal:
                rim = psi_full.copy()
                rim[1:-1, 1:-1] = 0.0
                if np.any(rim != 0.0):
                    raise InvalidInput("zero-normal stream functions must vanish on the boundary")
            psi = psi_full.ravel()[self.free]
        g = self.matrix @ psi.reshape(-1)
        boundary = "zero" if self.zero_normal else "free"
        return GridField(g.reshape(nx, ny, 2), self.lower, self.spacing, boundary, "cell", 2)


def solenoidal_param(
    shape: Tuple[int, ...], spacing: float, zero_normal: bool = False, lower: Optional[Tuple[float, ...]] = None
) -> SolenoidalParam:
    if len(shape) != 2:
        raise UnsupportedDimension(f"stream-function parametrization needs d=2, got d={len(shape)}")
    lower = (0.0, 0.0) if lower is None else tuple(lower)
    return SolenoidalParam(tuple(int(n) for n in shape), float(spacing), lower, zero_normal)
