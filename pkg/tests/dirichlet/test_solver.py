import numpy as np
import pytest

from varhom.dirichlet import (
    DirichletProblem,
    DirichletSystem,
    homogenized_integrand,
    solve_dirichlet,
    solve_heterogeneous,
    solve_homogenized,
)
from varhom.exceptions import InvalidInput
from varhom.fields import sample_field
from varhom.homogenize import estimate_model


def paraboloid(R):
    return lambda x: (R**2 - np.sum(x**2, axis=1)) / 4.0


class TestDirichletProblem:
    def test_grid_is_aligned_with_unit_cells(self):
        problem = DirichletProblem(R=2, r_cell=3)
        assert problem.intervals == 15
        assert problem.lower == (-2.5, -2.5)
        assert problem.sample_region == ((-2, 3), (-2, 3))
        assert problem.cell_mask.all()
        assert problem.interior_mask.sum() == 14 * 14

    def test_ball_masks(self):
        problem = DirichletProblem(R=3, shape="ball")
        centres = problem.cell_centres()[problem.cell_mask]
        assert np.all(np.linalg.norm(centres, axis=-1) <= 3)
        assert not problem.cell_mask.all()
        assert np.all(problem.node_mask[problem.interior_mask])
        assert problem.interior_mask.sum() < problem.node_mask.sum()

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(R=0),
            dict(R=2, shape="disk"),
            dict(R=2, r_cell=0),
            dict(R=2, boundary=(1.0, 2.0, 3.0)),
            dict(R=2, boundary=(np.nan, 0.0)),
            dict(R=2, rhs=np.ones((4, 4))),
        ],
    )
    def test_rejects_bad_input(self, kwargs):
        with pytest.raises(InvalidInput):
            DirichletProblem(**kwargs)

    def test_non_finite_boundary_callable(self):
        problem = DirichletProblem(R=1, boundary=lambda x: np.full(x.shape[0], np.inf))
        with pytest.raises(InvalidInput):
            problem.boundary_values()

    def test_with_rhs_keeps_the_rest(self):
        problem = DirichletProblem(R=2, shape="ball", boundary=(0.5, 0.5))
        other = problem.with_rhs(2.0)
        assert other.shape == "ball" and other.boundary == (0.5, 0.5)
        np.testing.assert_array_equal(other.rhs_values(), 2.0)


class TestAffineSolutions:
    @pytest.mark.parametrize("shape", ["box", "ball"])
    @pytest.mark.parametrize("xi", [(1.0, 0.0), (0.3, -0.7)])
    def test_affine_data_is_reproduced(self, quadratic_spec, shape, xi):
        problem = DirichletProblem(R=2, shape=shape, boundary=xi)
        sample = sample_field(quadratic_spec, problem.sample_region, seed=0)
        solution = solve_dirichlet(DirichletSystem.heterogeneous(sample, problem))
        np.testing.assert_allclose(solution.u.values, problem.boundary_values(), atol=1e-6)
        g = solution.g.values[problem.cell_mask]
        np.testing.assert_allclose(g, np.broadcast_to(xi, g.shape), atol=1e-6)
        assert abs(solution.null_value) <= 1e-6

    def test_uncovered_sample_is_rejected(self, quadratic_spec):
        problem = DirichletProblem(R=2)
        sample = sample_field(quadratic_spec, ((-1, 2), (-1, 2)), seed=0)
        with pytest.raises(InvalidInput):
            DirichletSystem.heterogeneous(sample, problem)


class TestPoisson:
    def test_paraboloid_with_exact_boundary_data(self, quadratic_spec):
        R = 3
        problem = DirichletProblem(R=R, shape="ball", boundary=paraboloid(R), rhs=1.0)
        sample = sample_field(quadratic_spec, problem.sample_region, seed=0)
        u = solve_heterogeneous(sample, problem)
        exact = problem.boundary_values()
        np.testing.assert_allclose(u.values[problem.node_mask], exact[problem.node_mask], atol=1e-6)

    def test_zero_boundary_on_a_ball(self, quadratic_spec):
        R = 6
        problem = DirichletProblem(R=R, shape="ball", boundary=(0.0, 0.0), rhs=1.0)
        sample = sample_field(quadratic_spec, problem.sample_region, seed=0)
        u = solve_heterogeneous(sample, problem)
        x = problem.node_coordinates()
        inner = np.linalg.norm(x, axis=-1) <= R / 2
        exact = (R**2 - np.sum(x**2, axis=-1)) / 4.0
        err = np.max(np.abs(u.values[inner] - exact[inner])) / exact.max()
        assert err <= 0.15

    def test_checkerboard_solution_is_finite(self, checkerboard_spec):
        problem = DirichletProblem(R=2, shape="ball", boundary=(1.0, 0.0), rhs=0.5)
        sample = sample_field(checkerboard_spec, problem.sample_region, seed=3)
        solution = solve_dirichlet(DirichletSystem.heterogeneous(sample, problem))
        assert np.all(np.isfinite(solution.u.values))
        assert abs(solution.null_value) <= 10 * solution.eps + 1e-6


class TestHomogenized:
    @pytest.fixture(scope="class")
    def identity_model(self, quadratic_spec):
        return estimate_model(quadratic_spec, n_top=0, bound=1.0, nodes=3, samples=1)

    def test_affine_abar_gives_closed_form(self, identity_model):
        F = homogenized_integrand(identity_model)
        assert F is not identity_model.Fbar
        grad = F.gradient(np.array([[0.5, 0.0]]), np.array([[0.5, 0.0]]))
        np.testing.assert_allclose(grad, [[0.5, 0.0, 0.5, 0.0]], atol=1e-6)

    def test_matches_the_constant_coefficient_solve(self, quadratic_spec, identity_model):
        R = 2
        problem = DirichletProblem(R=R, boundary=paraboloid(R), rhs=1.0)
        sample = sample_field(quadratic_spec, problem.sample_region, seed=0)
        u = solve_heterogeneous(sample, problem)
        ubar = solve_homogenized(identity_model, problem)
        assert u.same_grid(ubar)
        np.testing.assert_allclose(ubar.values, u.values, atol=1e-4)
