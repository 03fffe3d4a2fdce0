from dataclasses import dataclass
from typing import List

import numpy as np
import scipy.fft
from numpy import ndarray

from varhom.exceptions import InvalidInput
from varhom.grid.field import GridField


@dataclass
class HelmholtzParts:
    """f = mean + ∇w − ∇·S; ``skew`` stores ∇·S."""

    mean: ndarray
    potential: GridField
    gradient: GridField
    skew: GridField

    def solenoidal(self) -> ndarray:
        return -self.skew.values

    def reconstruct(self) -> ndarray:
        return self.mean + self.gradient.values - self.skew.values


def _wavenumbers(shape, h) -> List[ndarray]:
    """Angular wavenumbers per axis with the Nyquist mode zeroed, so spectral derivatives stay real."""
    ks = []
    for n in shape:
        k = 2 * np.pi * scipy.fft.fftfreq(n, d=h)
        if n % 2 == 0:
            k[n // 2] = 0.0
        ks.append(k)
    return ks


def spectral_gradient(w: ndarray, h: float) -> ndarray:
    ks = np.meshgrid(*_wavenumbers(w.shape, h), indexing="ij")
    w_hat = scipy.fft.fftn(w)
    return np.stack([scipy.fft.ifftn(1j * k * w_hat).real for k in ks], axis=-1)


def spectral_divergence(f: ndarray, h: float) -> ndarray:
    d = f.shape[-1]
    ks = np.meshgrid(*_wavenumbers(f.shape[:d], h), indexing="ij")
    div_hat = sum(1j * ks[i] * scipy.fft.fftn(f[..., i]) for i in range(d))
    return scipy.fft.ifftn(div_hat).real


def helmholtz_project(f: GridField) -> HelmholtzParts:
    """
    Periodic Helmholtz-Hodge decomposition by FFT.

    Solves Δw = ∇·f on the torus (ŵ = −i k·f̂/|k|²) and takes the remainder f − f̄ − ∇w as the
    solenoidal part −∇·S. Works in any dimension.
    """
    if f.boundary != "periodic":
        raise InvalidInput("helmholtz_project needs a periodic field")
    if f.values.size == 0:
        raise InvalidInput("zero-size grid")
    d = f.dim
    values = f.values if f.components > 1 else f.values[..., None]
    if values.shape[-1] != d:
        raise InvalidInput(f"expected a {d}-vector field, got {values.shape[-1]} components")
    shape = values.shape[:d]
    h = f.spacing

    mean = values.reshape(-1, d).mean(axis=0)
    ks = np.meshgrid(*_wavenumbers(shape, h), indexing="ij")
    k2 = sum(k**2 for k in ks)
    f_hat = [scipy.fft.fftn(values[..., i]) for i in range(d)]
    k_dot_f = sum(ks[i] * f_hat[i] for i in range(d))
    with np.errstate(invalid="ignore", divide="ignore"):
        w_hat = np.where(k2 > 0, -1j * k_dot_f / k2, 0.0)
    w = scipy.fft.ifftn(w_hat).real
    grad_w = np.stack([scipy.fft.ifftn(1j * ks[i] * w_hat).real for i in range(d)], axis=-1)
    skew = -(values - mean - grad_w)

    def wrap(v, comps):
        return GridField(v, f.lower, h, "periodic", f.location, comps)

    return HelmholtzParts(mean, wrap(w, 1), wrap(grad_w, d), wrap(skew, d))


def orthogonality_residual(parts: HelmholtzParts) -> float:
    """Largest pairwise L² inner product of the three parts, relative to the product of their norms."""
    n = parts.gradient.values.reshape(-1, parts.mean.size).shape[0]
    fields = [
        np.broadcast_to(parts.mean, parts.gradient.values.shape),
        parts.gradient.values,
        parts.solenoidal(),
    ]
    norms = [np.sqrt(np.sum(x**2)) for x in fields]
    worst = 0.0
    for i in range(3):
        for j in range(i + 1, 3):
            scale = max(norms[i] * norms[j], 1e-300 * n)
            worst = max(worst, abs(float(np.sum(fields[i] * fields[j]))) / scale)
    return worst
