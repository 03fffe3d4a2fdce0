from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from numpy import ndarray

from varhom.exceptions import InvalidInput, OutOfDomain, UnsupportedDimension
from varhom.fields.ensemble import CoefficientSample
from varhom.grid.cube import TriadicCube
from varhom.grid.field import GridField
from varhom.grid.operators import gradient_matrix, interior_nodes
from varhom.grid.preconditioner import laplacian_preconditioner
from varhom.grid.solenoidal import solenoidal_param
from varhom.varrep.integrand import VariationalIntegrand
from varhom.varrep.table import TabulatedIntegrand, tabulation_error


@dataclass
class MinimizerPair:
    """
    Minimizing pair of a cell problem: a nodal potential and a solenoidal cell field.

    For μ these are (u, g) themselves; for μ₀ they are the perturbations (v, h) of the affine data ``shift``.
    """

    u: GridField
    g: GridField
    energy: float
    residual: float
    gap: float
    eps: float
    iterations: int
    shift: Tuple[Tuple[float, ...], Tuple[float, ...]] = ((0.0, 0.0), (0.0, 0.0))
    # solver unknowns [u; ψ]
    x: Optional[ndarray] = field(default=None, repr=False)
    # false when a μ₀ value falls below p·q by more than eps
    pairing_ok: bool = True

    @property
    def grad(self) -> ndarray:
        """Cell gradient of u, shape (nx, ny, 2)."""
        nx, ny = self.u.intervals
        return (gradient_matrix(nx, ny, self.u.spacing) @ self.u.values.ravel()).reshape(nx, ny, 2)

    @property
    def P(self) -> ndarray:
        return np.asarray(self.shift[0]) + self.grad.reshape(-1, 2).mean(axis=0)

    @property
    def Q(self) -> ndarray:
        return np.asarray(self.shift[1]) + self.g.values.reshape(-1, 2).mean(axis=0)


class GridEnergy:
    """
    Discrete energy x ↦ ⨍ F(z₀ + Bx, x) − ℓ·Bx over the grid cells of a domain.

    ``B`` maps the unknowns to interleaved cell 4-vectors (∇u, g); ``groups`` maps each phase to its cell rows
    and integrand. ``z0`` and ``ell`` are a single 4-vector or one row per cell.
    """

    B: sp.csr_matrix
    BT: sp.csr_matrix
    ncells: int
    groups: Dict[int, Tuple[ndarray, VariationalIntegrand]]

    def _set_groups(self, phases: ndarray, integrand_of) -> None:
        self.groups = {int(k): (np.flatnonzero(phases == k), integrand_of(int(k))) for k in np.unique(phases)}
        self.Lambda = max(F.Lambda for _, F in self.groups.values())
        self.K0 = max(F.K0 for _, F in self.groups.values())

    @property
    def tabulation_error(self) -> float:
        errs = [
            tabulation_error(float(np.max(F.spacing)), F.Lambda, F.dim)
            for _, F in self.groups.values()
            if isinstance(F, TabulatedIntegrand)
        ]
        return max(errs, default=0.0)

    def cell_vectors(self, x: ndarray) -> ndarray:
        return (self.B @ x).reshape(self.ncells, 4)

    def _evaluate(self, z: ndarray, order: int):
        out = np.empty((self.ncells,) + (4,) * order)
        for rows, F in self.groups.values():
            zr = z[rows]
            if order == 0:
                out[rows] = F.value(zr[:, :2], zr[:, 2:])
            elif order == 1:
                out[rows] = F.gradient(zr[:, :2], zr[:, 2:])
            else:
                out[rows] = F.hessian(zr[:, :2], zr[:, 2:])
        return out

    def energy(self, x: ndarray, z0: ndarray, ell: ndarray) -> float:
        zc = self.cell_vectors(x)
        return float(np.mean(self._evaluate(z0 + zc, 0) - np.sum(zc * ell, axis=-1)))

    def objective(self, z0: ndarray, ell: ndarray):
        def fun(x: ndarray) -> Tuple[float, ndarray]:
            zc = self.cell_vectors(x)
            z = z0 + zc
            value = float(np.mean(self._evaluate(z, 0) - np.sum(zc * ell, axis=-1)))
            grad = self.BT @ ((self._evaluate(z, 1) - ell) / self.ncells).ravel()
            return value, grad

        return fun

    def hessian(self, z0: ndarray):
        indptr = np.arange(self.ncells + 1)
        indices = np.arange(self.ncells)

        def hess(x: ndarray) -> sp.csr_matrix:
            blocks = self._evaluate(z0 + self.cell_vectors(x), 2) / self.ncells
            D = sp.bsr_matrix((blocks, indices, indptr), shape=(4 * self.ncells, 4 * self.ncells))
            return (self.BT @ D @ self.B).tocsr()

        return hess

    def block_scales(self, z0: ndarray) -> Tuple[float, float]:
        """Mean half-traces of the (∇u, ∇u) and (g, g) Hessian blocks at x = 0."""
        blocks = self._evaluate(np.broadcast_to(z0, (self.ncells, 4)).copy(), 2)
        s_u = float(np.mean(np.trace(blocks[:, :2, :2], axis1=1, axis2=2))) / 2
        s_g = float(np.mean(np.trace(blocks[:, 2:, 2:], axis1=1, axis2=2))) / 2
        return s_u, s_g

    def check_start(self, z0: ndarray) -> None:
        try:
            self._evaluate(np.broadcast_to(z0, (self.ncells, 4)).copy(), 0)
        except OutOfDomain as exc:
            raise InvalidInput(f"affine data outside the tabulated integrands: {exc}") from exc


def interleave(Gu: sp.csr_matrix, Cp: sp.csr_matrix, ncells: int) -> sp.csr_matrix:
    """[u; ψ] ↦ cell 4-vectors (∇u, g): rows 2c+k of Gu and Cp go to 4c+k and 4c+2+k."""
    stacked = sp.block_diag([Gu, Cp], format="csr")
    c = np.arange(ncells)
    order = np.stack([2 * c, 2 * c + 1, 2 * ncells + 2 * c, 2 * ncells + 2 * c + 1], axis=-1).ravel()
    return stacked[order].tocsr()


class CellProblem(GridEnergy):
    """
    Cell energy x ↦ ⨍_U F(z₀ + (∇u, g), x) − ℓ·(∇u, g) on the grid of a cube.

    Unknowns are x = [u; ψ] with g = curl ψ. With ``zero_boundary`` both u and ψ vanish on ∂U (the μ₀
    class), otherwise both are free (the μ class, constants fixed by projection). Cell vectors are
    evaluated at grid-cell centres, one quadrature point per cell.
    """

    def __init__(self, sample: CoefficientSample, cube: TriadicCube, zero_boundary: bool):
        if not isinstance(cube, TriadicCube):
            raise InvalidInput("cell problems are posed on triadic cubes only")
        if cube.dim != 2:
            raise UnsupportedDimension(f"cell problems need d=2, got d={cube.dim}")
        if not sample.covers(cube):
            raise InvalidInput(f"cube at {cube.base} level {cube.level} is not inside the sample region")
        self.cube = cube
        self.zero_boundary = zero_boundary
        n = cube.nodes_per_side
        if zero_boundary and n < 2:
            raise InvalidInput("zero-boundary problem needs at least one interior node")
        self.nx = self.ny = n
        self.h = cube.spacing
        self.lower = tuple(float(v) for v in cube.lower)
        self.ncells = n * n

        G = gradient_matrix(n, n, self.h)
        self.stream = solenoidal_param((n, n), self.h, zero_normal=zero_boundary, lower=self.lower)
        self.u_free = interior_nodes(n, n) if zero_boundary else np.arange((n + 1) ** 2)
        Gu = G[:, self.u_free]
        Cp = self.stream.matrix
        self.nu, self.npsi = Gu.shape[1], Cp.shape[1]
        self.B = interleave(Gu, Cp, self.ncells)
        self.BT = self.B.T.tocsr()

        x = self.lower[0] + (np.arange(n) + 0.5) * self.h
        centres = np.stack(np.meshgrid(x, self.lower[1] + (np.arange(n) + 0.5) * self.h, indexing="ij"), axis=-1)
        self._set_groups(sample.phase_at(sample.cell_of(centres.reshape(-1, 2))), sample.integrand)

    @property
    def size(self) -> int:
        return self.nu + self.npsi

    def preconditioner(self, z0: ndarray):
        """Block Laplacian inverse for (u, ψ), scaled by the mean cell Hessian at the affine data."""
        s_u, s_psi = self.block_scales(z0)
        apply = laplacian_preconditioner(self.nx, self.ny, self.h, "zero" if self.zero_boundary else "free")

        def precond(r: ndarray) -> ndarray:
            out = np.empty_like(r)
            out[: self.nu] = apply(r[: self.nu]) * self.ncells / s_u
            out[self.nu :] = apply(r[self.nu :]) * self.ncells / s_psi
            return out

        return precond

    def projector(self):
        if self.zero_boundary:
            return None

        def project(x: ndarray) -> ndarray:
            x = x.copy()
            x[: self.nu] -= x[: self.nu].mean()
            x[self.nu :] -= x[self.nu :].mean()
            return x

        return project

    def split(self, x: ndarray) -> Tuple[GridField, GridField]:
        """Nodal potential and solenoidal cell field of the unknown vector."""
        n = self.nx
        u = np.zeros((n + 1) ** 2)
        u[self.u_free] = x[: self.nu]
        boundary = "zero" if self.zero_boundary else "free"
        u_field = GridField(u.reshape(n + 1, n + 1), self.lower, self.h, boundary, "node", 1)
        return u_field, self.stream(x[self.nu :])


def affine_data(first: Optional[ndarray], second: Optional[ndarray]) -> ndarray:
    first = np.zeros(2) if first is None else np.asarray(first, dtype=np.float64).reshape(2)
    second = np.zeros(2) if second is None else np.asarray(second, dtype=np.float64).reshape(2)
    return np.concatenate([first, second])
