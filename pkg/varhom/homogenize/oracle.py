from dataclasses import dataclass

import numpy as np
import scipy.fft
from numpy import ndarray

from varhom.exceptions import InvalidInput, SolverFailure
from varhom.fields.ensemble import CoefficientSample
from varhom.grid.cube import TriadicCube
from varhom.utils.utils import log


@dataclass
class OracleResult:
    A: ndarray
    iterations: int
    residual: float


def _frequencies(shape) -> ndarray:
    axes = [2.0 * np.pi * scipy.fft.fftfreq(n) for n in shape]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def periodic_cell_oracle(coefficient: ndarray, tol: float = 1e-10, max_iter: int = 5000) -> OracleResult:
    """
    Effective matrix of −∇·(c(x)∇u) = 0 with c periodic on a voxel box.

    Basic fixed-point scheme: with reference conductivity c₀ = (min c + max c)/2 and Green operator
    Γ̂(ξ) = ξ⊗ξ/(c₀|ξ|²), iterate e ← E − Γ * (c e) until the flux is divergence free,
    |ξ·σ̂|/|σ̂(0)| ≤ tol. Column j of A is the mean flux for the unit load E = e_j.
    """
    c = np.asarray(coefficient, dtype=np.float64)
    if c.ndim < 1 or np.any(c <= 0):
        raise InvalidInput("oracle needs a positive coefficient array")
    d = c.ndim
    xi = _frequencies(c.shape)
    xi2 = np.sum(xi**2, axis=-1)
    c0 = 0.5 * (c.min() + c.max())
    safe = np.where(xi2 > 0, xi2, 1.0)[..., None, None]
    gamma = np.where(xi2[..., None, None] > 0, xi[..., :, None] * xi[..., None, :] / (c0 * safe), 0.0)
    axes = tuple(range(d))

    A = np.zeros((d, d))
    iterations, worst = 0, 0.0
    for j in range(d):
        E = np.zeros(d)
        E[j] = 1.0
        e = np.broadcast_to(E, c.shape + (d,)).copy()
        for it in range(max_iter):
            sigma = c[..., None] * e
            sigma_hat = scipy.fft.fftn(sigma, axes=axes)
            flux0 = np.linalg.norm(sigma_hat[(0,) * d])
            residual = float(np.sqrt(np.sum(np.abs(np.sum(xi * sigma_hat, axis=-1)) ** 2)) / flux0)
            if residual <= tol:
                break
            # polarization form: e = E − Γ * ((c − c₀)e)
            tau_hat = sigma_hat - c0 * scipy.fft.fftn(e, axes=axes)
            e_hat = -np.einsum("...ij,...j->...i", gamma, tau_hat)
            e_hat[(0,) * d] = E * c.size
            e = scipy.fft.ifftn(e_hat, axes=axes).real
        else:
            raise SolverFailure(f"periodic oracle: no convergence in {max_iter} iterations", residual, max_iter)
        A[:, j] = sigma.reshape(-1, d).mean(axis=0)
        iterations += it
        worst = max(worst, residual)
    log.debug(f"periodic oracle on {c.shape}: {iterations} iterations, residual {worst:.1e}")
    return OracleResult(0.5 * (A + A.T), iterations, worst)


def sample_oracle(sample: CoefficientSample, cube: TriadicCube, resolution: int = 8) -> OracleResult:
    """Oracle on the cube's phase block of a linear sample, ``resolution`` voxels per unit cell."""
    if not sample.spec.linear or any(ph.skew or any(ph.shift) for ph in sample.spec.phases):
        raise InvalidInput("the periodic oracle handles scalar linear coefficients only")
    block = np.array([ph.c for ph in sample.spec.phases])[sample.phase_block(cube)]
    voxels = np.kron(block, np.ones((resolution,) * block.ndim))
    return periodic_cell_oracle(voxels)
