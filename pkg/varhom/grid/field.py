from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Tuple, Union

import numpy as np
from numpy import ndarray

from varhom.exceptions import InvalidInput

BOUNDARY_TAGS = ("free", "zero", "periodic")
LOCATIONS = ("node", "cell")


@dataclass
class GridField:
    """
    Scalar or vector values on a uniform box grid.

    ``location="node"`` stores one value per grid node (shape (nx+1, ny+1, ...), or (nx, ny, ...) when periodic);
    ``location="cell"`` stores one value per grid cell at its centre (shape (nx, ny, ...)). A trailing axis of
    length ``components`` holds vector components.
    """

    values: ndarray
    lower: Tuple[float, ...]
    spacing: float
    boundary: str = "free"
    location: str = "node"
    components: int = 1

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.lower = tuple(float(x) for x in self.lower)
        if self.boundary not in BOUNDARY_TAGS:
            raise InvalidInput(f"unknown boundary tag {self.boundary!r}")
        if self.location not in LOCATIONS:
            raise InvalidInput(f"unknown location {self.location!r}")
        if self.spacing <= 0:
            raise InvalidInput(f"grid spacing must be positive, got {self.spacing}")
        expected = len(self.lower) + (1 if self.components > 1 else 0)
        if self.values.ndim != expected:
            raise InvalidInput(f"values of shape {self.values.shape} do not fit a {len(self.lower)}-d grid")
        if self.components > 1 and self.values.shape[-1] != self.components:
            raise InvalidInput(f"expected {self.components} components, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise InvalidInput("grid field has non-finite values")

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def grid_shape(self) -> Tuple[int, ...]:
        return self.values.shape[: self.dim]

    @property
    def intervals(self) -> Tuple[int, ...]:
        """Number of grid intervals per axis."""
        if self.location == "cell" or self.boundary == "periodic":
            return self.grid_shape
        return tuple(n - 1 for n in self.grid_shape)

    def axes(self) -> Sequence[ndarray]:
        offset = 0.5 * self.spacing if self.location == "cell" else 0.0
        return [lo + offset + self.spacing * np.arange(n) for lo, n in zip(self.lower, self.grid_shape)]

    def coordinates(self) -> ndarray:
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack(mesh, axis=-1)

    def weights(self) -> ndarray:
        """Quadrature weights: h^d per cell, trapezoid weights per node."""
        h = self.spacing
        if self.location == "cell" or self.boundary == "periodic":
            return np.full(self.grid_shape, h**self.dim)
        w = np.ones(self.grid_shape)
        for axis, n in enumerate(self.grid_shape):
            edge = [slice(None)] * self.dim
            for idx in (0, n - 1):
                edge[axis] = idx
                w[tuple(edge)] *= 0.5
        return w * h**self.dim

    def mean(self) -> Union[float, ndarray]:
        w = self.weights()
        vals = self.values if self.components > 1 else self.values[..., None]
        avg = np.tensordot(w, vals, axes=self.dim) / w.sum()
        return avg if self.components > 1 else float(avg[0])

    def norm(self) -> float:
        """L² norm with the quadrature weights."""
        sq = self.values**2 if self.components == 1 else np.sum(self.values**2, axis=-1)
        return float(np.sqrt(np.sum(self.weights() * sq)))

    def same_grid(self, other: "GridField") -> bool:
        return (
            self.grid_shape == other.grid_shape
            and np.allclose(self.lower, other.lower)
            and np.isclose(self.spacing, other.spacing)
            and self.location == other.location
        )

    def to_csv(self, path: Union[str, Path], fmt: str = "%.10e") -> None:
        """One row per grid point: coordinates then value(s)."""
        coords = self.coordinates().reshape(-1, self.dim)
        vals = self.values.reshape(coords.shape[0], -1)
        names = ["x", "y", "z"][: self.dim]
        if self.components == 1:
            header = names + ["value"]
        else:
            header = names + [f"value{k}" for k in range(self.components)]
        np.savetxt(path, np.hstack([coords, vals]), fmt=fmt, delimiter=",", header=",".join(header), comments="")
