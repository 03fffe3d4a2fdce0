from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence, Tuple, Union

import numpy as np
from numpy import ndarray

from varhom.exceptions import InvalidInput
from varhom.grid.field import GridField

SHAPES = ("box", "ball")

BoundaryData = Union[Sequence[float], Callable[[ndarray], ndarray]]


@dataclass
class DirichletProblem:
    """
    −∇·a(∇u, x) = rhs in U, u = f on ∂U, for U centred at the origin.

    U is the union of the unit cells centred at integer points with |k|_∞ ≤ R (``box``), or of the grid cells
    whose centres lie within distance R of the origin (``ball``). The grid covers [−R−½, R+½]² with ``r_cell``
    intervals per unit length, so it is aligned with the unit cells of the coefficient field.

    ``boundary`` is either a slope ξ (f = ξ·x) or a vectorised callable f(x) of points of shape (N, 2);
    ``rhs`` is a constant or an array of nodal values.
    """

    R: int
    shape: str = "box"
    boundary: BoundaryData = (1.0, 0.0)
    rhs: Union[float, ndarray] = 0.0
    r_cell: int = 3

    def __post_init__(self):
        if self.R < 1:
            raise InvalidInput(f"domain radius must be at least 1, got {self.R}")
        if self.shape not in SHAPES:
            raise InvalidInput(f"unknown domain shape {self.shape!r}")
        if self.r_cell < 1:
            raise InvalidInput(f"r_cell must be positive, got {self.r_cell}")
        if not callable(self.boundary):
            xi = np.asarray(self.boundary, dtype=np.float64)
            if xi.shape != (2,) or not np.all(np.isfinite(xi)):
                raise InvalidInput(f"affine boundary data needs a finite slope in R^2, got {self.boundary}")
        rhs = np.asarray(self.rhs.values if isinstance(self.rhs, GridField) else self.rhs, dtype=np.float64)
        if rhs.ndim and rhs.shape != (self.intervals + 1,) * 2:
            raise InvalidInput(f"rhs array of shape {rhs.shape} does not match the {self.intervals + 1}² node grid")
        if not np.all(np.isfinite(rhs)):
            raise InvalidInput("rhs has non-finite values")

    @property
    def intervals(self) -> int:
        return (2 * self.R + 1) * self.r_cell

    @property
    def spacing(self) -> float:
        return 1.0 / self.r_cell

    @property
    def lower(self) -> Tuple[float, float]:
        return (-self.R - 0.5, -self.R - 0.5)

    @property
    def sample_region(self) -> Tuple[Tuple[int, int], ...]:
        """Unit cells the coefficient sample must cover."""
        return ((-self.R, self.R + 1), (-self.R, self.R + 1))

    def node_coordinates(self) -> ndarray:
        x = self.lower[0] + self.spacing * np.arange(self.intervals + 1)
        return np.stack(np.meshgrid(x, x, indexing="ij"), axis=-1)

    def cell_centres(self) -> ndarray:
        x = self.lower[0] + self.spacing * (np.arange(self.intervals) + 0.5)
        return np.stack(np.meshgrid(x, x, indexing="ij"), axis=-1)

    @cached_property
    def cell_mask(self) -> ndarray:
        n = self.intervals
        if self.shape == "box":
            return np.ones((n, n), dtype=bool)
        return np.linalg.norm(self.cell_centres(), axis=-1) <= self.R

    @cached_property
    def node_mask(self) -> ndarray:
        """Corners of domain cells."""
        c = self.cell_mask
        mask = np.zeros((self.intervals + 1,) * 2, dtype=bool)
        for di in (0, 1):
            for dj in (0, 1):
                mask[di : di + c.shape[0], dj : dj + c.shape[1]] |= c
        return mask

    @cached_property
    def interior_mask(self) -> ndarray:
        """Nodes all four of whose cells belong to the domain."""
        c = self.cell_mask
        mask = np.zeros((self.intervals + 1,) * 2, dtype=bool)
        mask[1:-1, 1:-1] = c[:-1, :-1] & c[1:, :-1] & c[:-1, 1:] & c[1:, 1:]
        return mask

    def boundary_values(self) -> ndarray:
        """f at every grid node, shape (n+1, n+1); used on ∂U and as the starting extension."""
        x = self.node_coordinates().reshape(-1, 2)
        if callable(self.boundary):
            values = np.asarray(self.boundary(x), dtype=np.float64).reshape(-1)
        else:
            values = x @ np.asarray(self.boundary, dtype=np.float64)
        if values.size != x.shape[0] or not np.all(np.isfinite(values)):
            raise InvalidInput("boundary data must be finite at every grid node")
        return values.reshape((self.intervals + 1,) * 2)

    def rhs_values(self) -> ndarray:
        rhs = self.rhs.values if isinstance(self.rhs, GridField) else self.rhs
        return np.broadcast_to(np.asarray(rhs, dtype=np.float64), (self.intervals + 1,) * 2).copy()

    def rhs_field(self) -> GridField:
        return GridField(self.rhs_values(), self.lower, self.spacing, "free", "node", 1)

    def with_rhs(self, rhs: Union[float, ndarray]) -> "DirichletProblem":
        return DirichletProblem(self.R, self.shape, self.boundary, rhs, self.r_cell)

    def with_boundary(self, boundary: BoundaryData) -> "DirichletProblem":
        return DirichletProblem(self.R, self.shape, boundary, self.rhs, self.r_cell)
