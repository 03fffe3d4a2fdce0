import functools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.ndimage
import scipy.stats
from numpy import ndarray

from varhom.exceptions import InvalidInput
from varhom.grid.cube import TriadicCube
from varhom.utils.seed import region_uniforms
from varhom.utils.utils import as_vectors, log
from varhom.varrep.integrand import VariationalIntegrand, make_affine_representative
from varhom.varrep.monotone import MonotoneMap, radial_map
from varhom.varrep.proximal import represent

KINDS = ("checkerboard", "moving_average")
MIXING_CLASSES = ("finite-range", "algebraic", "stretched-exponential")

J = np.array([[0.0, 1.0], [-1.0, 0.0]])

Region = Tuple[Tuple[int, int], ...]


@dataclass(frozen=True)
class Phase:
    """Coefficient of one phase: a(p) = c·p + b·p/(1+|p|) + m·Jp + s."""

    c: float
    b: float = 0.0
    skew: float = 0.0
    shift: Tuple[float, float] = (0.0, 0.0)

    @property
    def is_affine(self) -> bool:
        return self.b == 0.0

    def monotone_map(self, lam: Optional[float] = None) -> MonotoneMap:
        return radial_map(self.c, self.b, self.skew, self.shift, lam)


@dataclass(frozen=True)
class EnsembleSpec:
    """
    Law of a stationary cellwise random coefficient field.

    ``checkerboard``: every unit cell independently takes phase 1 with probability ``p1`` (range 1).
    ``moving_average``: uniforms attached to cells are averaged with the kernel (1+|y|)^{−β_kernel} over
    |y|_∞ ≤ range//2 and thresholded, so cells further apart than ``range`` are independent.
    """

    kind: str = "checkerboard"
    phases: Tuple[Phase, ...] = (Phase(1.0), Phase(4.0))
    p1: float = 0.5
    range: int = 1
    kernel_beta: float = 2.0
    lam: float = 4.0
    K0: float = 0.0
    seed: int = 0
    mixing: str = "finite-range"
    ensemble_id: str = "checkerboard"
    table_nodes: int = 17
    table_bound: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInput(f"unknown ensemble kind {self.kind!r}")
        if self.mixing not in MIXING_CLASSES:
            raise InvalidInput(f"unknown mixing class {self.mixing!r}")
        if not 1 <= len(self.phases) <= 2:
            raise InvalidInput("an ensemble has one or two phases")
        if not 0.0 <= self.p1 <= 1.0:
            raise InvalidInput(f"phase probability must be in [0, 1], got {self.p1}")
        if self.range < 1:
            raise InvalidInput(f"dependence range must be a positive number of cells, got {self.range}")
        for ph in self.phases:
            if ph.c <= 0:
                raise InvalidInput(f"non-positive phase coefficient c={ph.c}")
            # raises InvalidInput when the phase needs a larger λ
            ph.monotone_map(self.lam)
            if np.linalg.norm(ph.shift) > self.K0 + 1e-12:
                raise InvalidInput(f"phase shift {ph.shift} exceeds K0={self.K0}")

    @property
    def linear(self) -> bool:
        return all(ph.is_affine for ph in self.phases)

    @property
    def constant(self) -> bool:
        return len(set(self.phases)) == 1 or (len(self.phases) == 2 and self.p1 in (0.0, 1.0))


@functools.lru_cache(maxsize=32)
def phase_integrand(phase: Phase, lam: float, table_nodes: int = 17, table_bound: float = 4.0) -> VariationalIntegrand:
    """
    Representative of one phase, built once per distinct phase.

    Affine phases get the closed form; nonlinear ones are tabulated through the Fitzpatrick and
    proximal-average pipeline.
    """
    if phase.is_affine:
        return make_affine_representative(phase.c * np.eye(2), phase.skew * J, np.asarray(phase.shift), lam)
    log.info(f"tabulating representative of phase {phase} on [-{table_bound:g},{table_bound:g}]^4")
    return represent(phase.monotone_map(lam), table_bound, table_nodes).integrand


def _region_cells(region: Region) -> Tuple[ndarray, Tuple[int, ...]]:
    axes = [np.arange(lo, hi) for lo, hi in region]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1), tuple(len(ax) for ax in axes)


def _kernel(spec: EnsembleSpec) -> ndarray:
    R = spec.range // 2
    y = np.arange(-R, R + 1)
    dist = np.maximum(np.abs(y)[:, None], np.abs(y)[None, :])
    return (1.0 + dist) ** (-spec.kernel_beta)


def cell_phases(spec: EnsembleSpec, region: Region, seed: Optional[int] = None) -> ndarray:
    """Phase index (0 or 1) of every unit cell of ``region``, a deterministic function of absolute cell coordinates."""
    seed = spec.seed if seed is None else seed
    if len(spec.phases) == 1:
        return np.zeros(tuple(hi - lo for lo, hi in region), dtype=np.int8)
    if spec.kind == "checkerboard":
        cells, shape = _region_cells(region)
        u = region_uniforms(seed, map(tuple, cells)).reshape(shape)
        return (u < spec.p1).astype(np.int8)

    R = spec.range // 2
    padded = tuple((lo - R, hi + R) for lo, hi in region)
    cells, shape = _region_cells(padded)
    u = region_uniforms(seed, map(tuple, cells)).reshape(shape)
    k = _kernel(spec)
    smoothed = scipy.ndimage.correlate(u, k, mode="constant")
    inner = tuple(slice(R, n - R) for n in shape)
    # sum of independent uniforms, thresholded at its (1−p1)-quantile in the normal approximation
    mean = 0.5 * k.sum()
    std = np.sqrt(np.sum(k**2) / 12.0)
    threshold = mean if spec.p1 == 0.5 else scipy.stats.norm.ppf(1.0 - spec.p1, loc=mean, scale=std)
    return (smoothed[inner] > threshold).astype(np.int8)


@dataclass
class CoefficientSample:
    """One realization of the field on a box of unit cells, piecewise constant on cells."""

    spec: EnsembleSpec
    region: Region
    seed: int
    phases: ndarray
    _integrands: Dict[int, VariationalIntegrand] = field(default_factory=dict, repr=False)

    @property
    def coefficient(self) -> ndarray:
        """c value of every cell."""
        return np.array([ph.c for ph in self.spec.phases])[self.phases]

    def covers(self, cube: TriadicCube) -> bool:
        return all(lo <= clo and chi <= hi for (lo, hi), (clo, chi) in zip(self.region, cube.cell_range()))

    def _index(self, cells: ndarray) -> Tuple[ndarray, ...]:
        cells = np.atleast_2d(np.asarray(cells, dtype=np.int64))
        idx = []
        for axis, (lo, hi) in enumerate(self.region):
            col = cells[:, axis]
            if np.any((col < lo) | (col >= hi)):
                raise InvalidInput(f"cell outside sample region {self.region}")
            idx.append(col - lo)
        return tuple(idx)

    def phase_at(self, cells) -> ndarray:
        return self.phases[self._index(cells)]

    def cell_of(self, x) -> ndarray:
        """Unit cell containing each point (cells are centred at integers)."""
        return np.floor(as_vectors(x, len(self.region)) + 0.5).astype(np.int64)

    def phase_block(self, cube: TriadicCube) -> ndarray:
        """Phases of the cube's unit cells, shape (3ⁿ, 3ⁿ)."""
        if not self.covers(cube):
            raise InvalidInput(f"cube at {cube.base} level {cube.level} is not inside the sample region")
        sl = tuple(slice(clo - lo, chi - lo) for (lo, _), (clo, chi) in zip(self.region, cube.cell_range()))
        return self.phases[sl]

    def integrand(self, phase: int) -> VariationalIntegrand:
        if phase not in self._integrands:
            bound = self.spec.table_bound if self.spec.table_bound is not None else 4.0 * (self.spec.K0 + 1.0)
            self._integrands[phase] = phase_integrand(
                self.spec.phases[phase], self.spec.lam, self.spec.table_nodes, bound
            )
        return self._integrands[phase]

    def a(self, p, x) -> ndarray:
        """a(p, x) for points x (one row per p)."""
        p = as_vectors(p, 2)
        ph = self.phase_at(self.cell_of(x))
        out = np.empty_like(p)
        for k in np.unique(ph):
            rows = ph == k
            out[rows] = self.spec.phases[k].monotone_map(self.spec.lam)(p[rows])
        return out

    def F(self, p, q, x) -> ndarray:
        """F(p, q, x) for points x (one row per (p, q))."""
        p, q = as_vectors(p, 2), as_vectors(q, 2)
        ph = self.phase_at(self.cell_of(x))
        out = np.empty(p.shape[0])
        for k in np.unique(ph):
            rows = ph == k
            out[rows] = self.integrand(int(k))(p[rows], q[rows])
        return out


def sample_field(
    spec: EnsembleSpec, region: Union[Region, TriadicCube], seed: Optional[int] = None
) -> CoefficientSample:
    """Realize the field on ``region``: cell index ranges per axis, or the cells of a cube."""
    if isinstance(region, TriadicCube):
        region = region.cell_range()
    region = tuple((int(lo), int(hi)) for lo, hi in region)
    if any(hi <= lo for lo, hi in region):
        raise InvalidInput(f"empty region {region}")
    seed = spec.seed if seed is None else int(seed)
    return CoefficientSample(spec, region, seed, cell_phases(spec, region, seed))


def dump_sample_csv(sample: CoefficientSample, path: Union[str, Path]) -> None:
    """Rows: cell x, cell y, phase id, c value."""
    cells, _ = _region_cells(sample.region)
    phase = sample.phases.ravel()
    c = sample.coefficient.ravel()
    with open(path, "w") as f:
        f.write("cell_x,cell_y,phase,c\n")
        for (x, y), k, cv in zip(cells, phase, c):
            f.write(f"{x},{y},{k},{cv:.10g}\n")


def region_around(cells: Sequence[Tuple[int, int]], margin: int = 0) -> Region:
    cells = np.asarray(cells)
    return tuple((int(cells[:, k].min()) - margin, int(cells[:, k].max()) + margin + 1) for k in range(cells.shape[1]))
