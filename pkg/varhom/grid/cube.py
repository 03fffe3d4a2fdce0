import itertools
import math
from dataclasses import dataclass, field, replace
from typing import List, Tuple

import numpy as np
from numpy import ndarray

from varhom.exceptions import InvalidInput


@dataclass(frozen=True)
class TrimInfo:
    """Grid-aligned trimming width: ``exact`` = 3^{n/(1+β)} rounded up to ``nodes`` grid steps (an even number)."""

    exact: float
    nodes: int
    r_cell: int

    @property
    def width(self) -> float:
        return self.nodes / self.r_cell


def grid_trim(n: int, beta: float, r_cell: int = 3) -> TrimInfo:
    exact = 3.0 ** (n / (1.0 + beta))
    nodes = 2 * math.ceil(exact * r_cell / 2 - 1e-12)
    return TrimInfo(exact, nodes, r_cell)


@dataclass(frozen=True)
class TriadicCube:
    """
    The cube □_n(z) of side 3ⁿ centred at z ∈ 3ⁿℤ^d, or its trimmed version ⧈_n(z).

    Unit cells are centred at integer points, so □_n(z) is the union of 3ⁿ×…×3ⁿ of them.
    """

    level: int
    base: Tuple[int, ...] = (0, 0)
    trimmed: bool = False
    beta: float = 1.0
    r_cell: int = 3
    trim: TrimInfo = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "trim", grid_trim(self.level, self.beta, self.r_cell))

    @property
    def dim(self) -> int:
        return len(self.base)

    @property
    def full_side(self) -> int:
        return 3**self.level

    @property
    def side(self) -> float:
        """Exact side length 3ⁿ, or 3ⁿ − 3^{n/(1+β)} when trimmed."""
        if self.trimmed:
            return self.full_side - self.trim.exact
        return float(self.full_side)

    @property
    def grid_side(self) -> float:
        """Side length realised on the grid: trimming removes ``trim.width`` in total."""
        if self.trimmed:
            return self.full_side - self.trim.width
        return float(self.full_side)

    @property
    def nodes_per_side(self) -> int:
        """Number of grid intervals along each side."""
        if self.trimmed:
            return self.full_side * self.r_cell - self.trim.nodes
        return self.full_side * self.r_cell

    @property
    def spacing(self) -> float:
        return 1.0 / self.r_cell

    @property
    def lower(self) -> ndarray:
        return np.asarray(self.base, dtype=np.float64) - 0.5 * self.grid_side

    @property
    def upper(self) -> ndarray:
        return np.asarray(self.base, dtype=np.float64) + 0.5 * self.grid_side

    @property
    def volume(self) -> float:
        return self.side**self.dim

    def children(self) -> List["TriadicCube"]:
        """The 3^d subcubes of level n − 1 that partition the untrimmed cube."""
        if self.level == 0:
            raise InvalidInput("a level-0 cube has no children")
        step = 3 ** (self.level - 1)
        return [
            replace(self, level=self.level - 1, base=tuple(b + step * k for b, k in zip(self.base, offset)))
            for offset in itertools.product((-1, 0, 1), repeat=self.dim)
        ]

    def cells(self) -> ndarray:
        """Integer centres of the unit cells of the untrimmed cube, shape (3^{nd}, d), in C order."""
        half = (self.full_side - 1) // 2
        axes = [np.arange(b - half, b + half + 1) for b in self.base]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def cell_range(self) -> Tuple[Tuple[int, int], ...]:
        """Per axis the first and one-past-last unit cell index covered by the untrimmed cube."""
        half = (self.full_side - 1) // 2
        return tuple((b - half, b + half + 1) for b in self.base)

    def contains(self, other: "TriadicCube") -> bool:
        return bool(np.all(other.lower >= self.lower - 1e-12) and np.all(other.upper <= self.upper + 1e-12))


def build_cube(
    n: int, trimmed: bool = False, beta: float = 1.0, base: Tuple[int, ...] = (0, 0), r_cell: int = 3
) -> TriadicCube:
    if n < 0:
        raise InvalidInput(f"cube level must be >= 0, got {n}")
    if beta <= 0:
        raise InvalidInput(f"trimming exponent beta must be > 0, got {beta}")
    if r_cell < 1:
        raise InvalidInput(f"r_cell must be >= 1, got {r_cell}")
    if any(b % 3**n for b in base):
        raise InvalidInput(f"base {base} is not in 3^{n} Z^d")
    cube = TriadicCube(n, tuple(int(b) for b in base), trimmed, beta, r_cell)
    if trimmed and (cube.side <= 0 or cube.nodes_per_side <= 0):
        raise InvalidInput(f"trimmed cube at level {n} with beta={beta} has non-positive side")
    return cube


def trimmed_partition_gap(n: int, beta: float, r_cell: int = 3) -> int:
    """
    Gap, in grid steps, between neighbouring trimmed cubes of level n.

    Cubes of the partition occupy [k·N, (k+1)·N] in grid units with N = 3ⁿ·r_cell; trimming keeps
    [k·N + w/2, (k+1)·N − w/2], so neighbours are w apart.
    """
    N = 3**n * r_cell
    w = grid_trim(n, beta, r_cell).nodes
    right_of_first = N - w // 2
    left_of_second = N + w // 2
    return left_of_second - right_of_first


def separation_holds(n: int, beta: float, r_cell: int = 3) -> bool:
    """Trimmed neighbours are at least 3^{n/(1+β)} apart."""
    return trimmed_partition_gap(n, beta, r_cell) >= grid_trim(n, beta, r_cell).exact * r_cell - 1e-9


def sculpt_ratio(n: int, beta: float, dim: int = 2) -> float:
    """|□_n ∖ ⧈_n| / |□_n| for the exact trimmed side."""
    x = 3.0 ** (-n * beta / (1.0 + beta))
    return 1.0 - (1.0 - x) ** dim


def sculpt_bound(n: int, beta: float, dim: int = 2) -> float:
    """d·3^{−nβ/(1+β)}, which dominates :func:`sculpt_ratio` since 1 − (1 − x)^d ≤ d·x."""
    return dim * 3.0 ** (-n * beta / (1.0 + beta))
