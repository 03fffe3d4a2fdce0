import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from varhom.exceptions import UnsupportedDimension
from varhom.grid import (
    GridField,
    cell_averages,
    discrete_divergence,
    discrete_gradient,
    gradient_matrix,
    inner_cells,
    inner_nodes,
    interior_nodes,
    laplacian_preconditioner,
    solenoidal_param,
)

NX, NY, H = 6, 9, 1.0 / 3


def _nodal(values, boundary="free"):
    return GridField(values, (0.0, 0.0), H, boundary, "node")


def _mesh():
    x = np.arange(NX + 1) * H
    y = np.arange(NY + 1) * H
    return np.meshgrid(x, y, indexing="ij")


class TestDiscreteCalculus:
    def test_affine_gradient(self):
        X, Y = _mesh()
        g = discrete_gradient(_nodal(2.0 * X - 0.5 * Y + 1.0))
        np.testing.assert_allclose(g.values[..., 0], 2.0, atol=1e-12)
        np.testing.assert_allclose(g.values[..., 1], -0.5, atol=1e-12)

    def test_constant_divergence(self):
        g = GridField(np.broadcast_to([1.0, -3.0], (NX, NY, 2)), (0.0, 0.0), H, "free", "cell", 2)
        div = discrete_divergence(g)
        np.testing.assert_allclose(div.values[1:-1, 1:-1], 0.0, atol=1e-12)

    def test_linear_divergence(self):
        g_vals = np.zeros((NX, NY, 2))
        g_vals[..., 0] = (np.arange(NX)[:, None] + 0.5) * H
        div = discrete_divergence(GridField(g_vals, (0.0, 0.0), H, "free", "cell", 2))
        np.testing.assert_allclose(div.values[1:-1, 1:-1], 1.0, atol=1e-12)

    @settings(deadline=None, max_examples=20)
    @given(
        u=arrays(np.float64, (NX + 1, NY + 1), elements=st.floats(-10, 10)),
        g=arrays(np.float64, (NX, NY, 2), elements=st.floats(-10, 10)),
    )
    def test_adjointness(self, u, g):
        u = u.copy()
        u[0, :] = u[-1, :] = u[:, 0] = u[:, -1] = 0.0
        uf = _nodal(u, "zero")
        gf = GridField(g, (0.0, 0.0), H, "free", "cell", 2)
        lhs = inner_cells(discrete_gradient(uf), gf)
        rhs = -inner_nodes(uf, discrete_divergence(gf))
        assert lhs == pytest.approx(rhs, abs=1e-12 * (1 + np.abs(u).sum() * np.abs(g).sum()))


class TestSolenoidal:
    def test_zero_stream(self):
        sol = solenoidal_param((NX, NY), H)
        np.testing.assert_array_equal(sol(np.zeros((NX + 1, NY + 1))).values, 0.0)

    def test_product_stream_is_divergence_free(self):
        X, Y = _mesh()
        sol = solenoidal_param((NX, NY), H)
        div = discrete_divergence(sol(X * Y))
        np.testing.assert_allclose(div.values[1:-1, 1:-1], 0.0, atol=1e-12)

    @settings(deadline=None, max_examples=20)
    @given(psi=arrays(np.float64, (NX + 1, NY + 1), elements=st.floats(-10, 10)))
    def test_images_are_exactly_divergence_free(self, psi):
        div = discrete_divergence(solenoidal_param((NX, NY), H)(psi))
        np.testing.assert_allclose(div.values[1:-1, 1:-1], 0.0, atol=1e-9)

    @pytest.mark.parametrize("seed", range(20))
    def test_zero_normal_orthogonal_to_gradients(self, seed):
        rng = np.random.default_rng(seed)
        sol = solenoidal_param((NX, NY), H, zero_normal=True)
        g = sol(rng.normal(size=sol.size))
        grad_u = discrete_gradient(_nodal(rng.normal(size=(NX + 1, NY + 1))))
        assert abs(inner_cells(g, grad_u)) <= 1e-12 * (1 + g.norm() * grad_u.norm())

    def test_three_dimensions_rejected(self):
        with pytest.raises(UnsupportedDimension):
            solenoidal_param((3, 3, 3), H)


class TestPreconditioner:
    def test_zero_boundary_is_exact_inverse(self):
        G = gradient_matrix(NX, NY, H)
        inner = interior_nodes(NX, NY)
        L = (G.T @ G)[inner][:, inner]
        x = np.random.default_rng(0).normal(size=inner.size)
        apply = laplacian_preconditioner(NX, NY, H, "zero")
        np.testing.assert_allclose(apply(L @ x), x, atol=1e-10)

    def test_free_boundary_pseudo_inverse(self):
        def neumann(n):
            main = np.full(n, 2.0)
            main[[0, -1]] = 1.0
            return sp.diags([main, -np.ones(n - 1), -np.ones(n - 1)], [0, -1, 1])

        L = (sp.kron(neumann(NX + 1), sp.eye(NY + 1)) + sp.kron(sp.eye(NX + 1), neumann(NY + 1))) / H**2
        x = np.random.default_rng(1).normal(size=(NX + 1) * (NY + 1))
        apply = laplacian_preconditioner(NX, NY, H, "free")
        np.testing.assert_allclose(apply(L @ x), x - x.mean(), atol=1e-10)


class TestCellAverages:
    def test_commutes_with_mean_and_contracts(self):
        rng = np.random.default_rng(2)
        g = GridField(rng.normal(size=(NX, NY, 2)), (0.0, 0.0), H, "free", "cell", 2)
        avg = cell_averages(g, 3)
        assert avg.grid_shape == (2, 3)
        np.testing.assert_allclose(avg.mean(), g.mean(), atol=1e-12)
        assert avg.norm() <= g.norm() + 1e-12

    def test_to_csv(self, tmp_path):
        X, _ = _mesh()
        path = tmp_path / "u.csv"
        _nodal(X).to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "x,y,value"
        assert len(lines) == 1 + (NX + 1) * (NY + 1)
