import numpy as np
import pytest

from varhom.exceptions import InvalidInput
from varhom.grid import GridField, helmholtz_project, orthogonality_residual
from varhom.grid.helmholtz import spectral_divergence

N = 32
H = 1.0 / N


def _periodic(values):
    return GridField(values, (0.0, 0.0), H, "periodic", "node", 2)


def _mesh():
    x = np.arange(N) * H
    return np.meshgrid(x, x, indexing="ij")


class TestHelmholtz:
    def test_pure_gradient(self):
        X, _ = _mesh()
        f = np.stack([2 * np.pi * np.cos(2 * np.pi * X), np.zeros_like(X)], axis=-1)
        parts = helmholtz_project(_periodic(f))
        np.testing.assert_allclose(parts.mean, 0.0, atol=1e-12)
        np.testing.assert_allclose(parts.skew.values, 0.0, atol=1e-10)
        np.testing.assert_allclose(parts.potential.values, np.sin(2 * np.pi * X), atol=1e-10)

    def test_pure_solenoidal(self):
        X, Y = _mesh()
        # (∂yψ, −∂xψ) for ψ = sin(2πx)sin(4πy)
        f = np.stack(
            [
                4 * np.pi * np.sin(2 * np.pi * X) * np.cos(4 * np.pi * Y),
                -2 * np.pi * np.cos(2 * np.pi * X) * np.sin(4 * np.pi * Y),
            ],
            axis=-1,
        )
        parts = helmholtz_project(_periodic(f))
        np.testing.assert_allclose(parts.gradient.values, 0.0, atol=1e-10)
        np.testing.assert_allclose(parts.potential.values, 0.0, atol=1e-10)

    def test_constant(self):
        parts = helmholtz_project(_periodic(np.broadcast_to([1.5, -2.0], (N, N, 2))))
        np.testing.assert_allclose(parts.mean, [1.5, -2.0])
        np.testing.assert_allclose(parts.gradient.values, 0.0, atol=1e-12)
        np.testing.assert_allclose(parts.skew.values, 0.0, atol=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_random_field(self, seed):
        f = np.random.default_rng(seed).normal(size=(N, N, 2))
        parts = helmholtz_project(_periodic(f))
        scale = np.abs(f).max()
        np.testing.assert_allclose(parts.reconstruct(), f, atol=1e-10 * scale)
        assert orthogonality_residual(parts) <= 1e-10
        np.testing.assert_allclose(spectral_divergence(parts.solenoidal(), H), 0.0, atol=1e-9 * scale / H)

        again = helmholtz_project(_periodic(parts.solenoidal()))
        np.testing.assert_allclose(again.solenoidal(), parts.solenoidal(), atol=1e-10 * scale)
        np.testing.assert_allclose(again.gradient.values, 0.0, atol=1e-10 * scale)

    def test_three_dimensional(self):
        f = np.random.default_rng(9).normal(size=(8, 8, 8, 3))
        parts = helmholtz_project(GridField(f, (0.0, 0.0, 0.0), 0.125, "periodic", "node", 3))
        np.testing.assert_allclose(parts.reconstruct(), f, atol=1e-10)
        assert orthogonality_residual(parts) <= 1e-10

    def test_needs_periodic(self):
        with pytest.raises(InvalidInput):
            helmholtz_project(GridField(np.zeros((4, 4, 2)), (0.0, 0.0), 0.25, "free", "node", 2))
