import numpy as np
import pytest

from varhom.dirichlet import (
    DirichletProblem,
    DirichletSystem,
    campanato_check,
    energy_stability_check,
    fit_error_decay,
    flatness,
    flux_consistency,
    hminus1_norm,
    homogenization_error,
    lipschitz_profile,
    m_parameter,
    mesoscopic_average_check,
    regularity_checks,
    solve_dirichlet,
)
from varhom.exceptions import FitRefused, InvalidInput
from varhom.fields import sample_field
from varhom.grid import GridField


def nodal(problem, values):
    return GridField(values, problem.lower, problem.spacing, "free", "node", 1)


@pytest.fixture(scope="module")
def box():
    return DirichletProblem(R=2, boundary=(0.6, -0.8))


@pytest.fixture(scope="module")
def affine(box):
    return nodal(box, box.boundary_values())


@pytest.fixture(scope="module")
def bowl(box):
    x = box.node_coordinates()
    return nodal(box, np.sum(x**2, axis=-1))


@pytest.fixture(scope="module")
def checkerboard_solution(checkerboard_spec):
    problem = DirichletProblem(R=2, boundary=(1.0, 0.0), rhs=0.5)
    system = DirichletSystem.heterogeneous(sample_field(checkerboard_spec, problem.sample_region, seed=1), problem)
    return system, solve_dirichlet(system)


class TestHomogenizationError:
    def test_zero_and_symmetric(self, affine, bowl):
        assert homogenization_error(affine, affine, R=2) == 0.0
        assert homogenization_error(affine, bowl, R=2) == pytest.approx(homogenization_error(bowl, affine, R=2))

    def test_constant_shift(self, box, affine):
        shifted = nodal(box, affine.values + 1.0)
        assert homogenization_error(affine, shifted, R=2) == pytest.approx(0.25)

    def test_grid_mismatch(self, affine):
        other = GridField(np.zeros((4, 4)), (0.0, 0.0), 1.0)
        with pytest.raises(InvalidInput):
            homogenization_error(affine, other, R=2)


class TestLipschitzProfile:
    def test_affine_profile_is_constant(self, affine):
        prof = lipschitz_profile(affine, [0.5, 1.0, 2.0], M=1.0, C_lip=1.01)
        np.testing.assert_allclose(prof.profile, 1.0, rtol=1e-10)
        assert prof.r0 == 0.5

    def test_bound_violated_everywhere(self, affine):
        assert lipschitz_profile(affine, [0.5, 1.0], M=1.0, C_lip=0.5).r0 is None

    def test_r0_is_the_least_radius_of_the_tail(self, bowl):
        # |∇u|² = 4|x|² grows with r, so only small balls satisfy the bound
        prof = lipschitz_profile(bowl, [0.5, 1.0, 2.0], M=1.0, C_lip=2.0)
        assert prof.profile[0] < prof.profile[-1]
        assert prof.r0 is None

    def test_r0_curve_shrinks_with_C_lip(self, bowl):
        prof = lipschitz_profile(bowl, [0.5, 1.0, 2.0], M=1.0, C_lip=2.0)
        curve = [prof.r0_at(C) for C in (0.1, 2.0, 1e6)]
        assert curve[0] is None and curve[1] is None
        assert curve[2] == 0.5
        assert prof.r0_at(prof.C_lip) == prof.r0

    def test_quadratic_scaling(self, box, bowl):
        t = 3.0
        a = lipschitz_profile(bowl, [1.0, 2.0], M=1.0)
        b = lipschitz_profile(nodal(box, t * bowl.values), [1.0, 2.0], M=1.0)
        np.testing.assert_allclose(b.profile, t**2 * np.asarray(a.profile), rtol=1e-10)

    @pytest.mark.parametrize("radii", [[], [0.0, 1.0], [1.0, 3.0]])
    def test_bad_radii(self, affine, radii):
        with pytest.raises(InvalidInput):
            lipschitz_profile(affine, radii, M=1.0)

    def test_csv(self, affine, tmp_path):
        lipschitz_profile(affine, [1.0, 2.0], M=1.0).to_csv(tmp_path / "profile.csv")
        lines = (tmp_path / "profile.csv").read_text().splitlines()
        assert lines[0] == "r,profile,bound"
        assert len(lines) == 3


class TestFlatness:
    def test_affine_is_flat(self, affine):
        assert flatness(affine, 2.0) == pytest.approx(0.0, abs=1e-12)

    def test_curved_is_not_flat(self, box, bowl):
        f = flatness(bowl, 2.0)
        assert f > 0.1
        assert flatness(nodal(box, 2.0 * bowl.values), 2.0) == pytest.approx(2.0 * f)

    def test_too_few_nodes(self, bowl):
        with pytest.raises(InvalidInput):
            flatness(bowl, 0.1)

    def test_campanato_rows(self, bowl):
        rows = campanato_check(bowl, [2.0], sigma=0.25)
        assert len(rows) == 1
        assert rows[0].flatness_inner < rows[0].flatness
        assert rows[0].improved

    @pytest.mark.parametrize("sigma", [0.0, 1.0, 1.5])
    def test_bad_sigma(self, bowl, sigma):
        with pytest.raises(InvalidInput):
            campanato_check(bowl, [2.0], sigma=sigma)


class TestNorms:
    def test_hminus1_zero_and_homogeneous(self, box):
        assert hminus1_norm(nodal(box, np.zeros_like(box.rhs_values()))) == 0.0
        f = nodal(box, np.cos(box.node_coordinates()[..., 0]))
        assert hminus1_norm(nodal(box, 2.0 * f.values)) == pytest.approx(2.0 * hminus1_norm(f))

    def test_m_parameter(self, box):
        u = nodal(box, np.full_like(box.rhs_values(), 3.0))
        zero = nodal(box, np.zeros_like(u.values))
        assert m_parameter(u, zero, R=2, K0=0.7) == pytest.approx(0.7)
        half = nodal(box, np.full_like(u.values, 0.5))
        assert m_parameter(u, half, R=2, K0=0.7) == pytest.approx(0.7 + 2 * 0.5)


class TestRegularity:
    def test_paraboloid(self):
        problem = DirichletProblem(R=3, shape="ball", boundary=lambda x: (9.0 - np.sum(x**2, axis=1)) / 4, rhs=1.0)
        u = nodal(problem, problem.boundary_values())
        report = regularity_checks(u, problem)
        assert report.finite
        assert report.caccioppoli[0] > 0
        assert report.meyers[0] > 0
        assert report.ok

    @pytest.mark.parametrize("inner", [0.0, 1.0])
    def test_v_must_sit_inside_u(self, box, affine, inner):
        with pytest.raises(InvalidInput):
            regularity_checks(affine, box, inner=inner)


class TestSolutionChecks:
    def test_flux_consistency(self, checkerboard_solution):
        system, solution = checkerboard_solution
        report = flux_consistency(solution, system)
        assert report.max_excess >= -1e-8
        assert report.ok

    def test_mesoscopic_average(self, checkerboard_solution):
        _, solution = checkerboard_solution
        report = mesoscopic_average_check(solution.u, r_cell=3)
        assert report.ok
        assert report.averaged_norm <= report.norm

    def test_energy_stability(self, quadratic_spec):
        problem = DirichletProblem(R=2, boundary=(0.0, 0.0))
        sample = sample_field(quadratic_spec, problem.sample_region, seed=0)
        report = energy_stability_check(sample, problem, 1.0, 0.0)
        assert 0 < report.ratio
        assert report.ok


class TestDecayFit:
    def test_power_law(self):
        errors = {R: [2.0 * R**-0.5, 2.0 * R**-0.5] for R in (2, 4, 8, 16)}
        fit = fit_error_decay(errors)
        assert fit.rate == pytest.approx(0.5, abs=1e-10)
        assert fit.intercept == pytest.approx(np.log(2.0))
        assert fit.significant

    def test_two_radii_refused(self):
        with pytest.raises(FitRefused):
            fit_error_decay({2: [0.1], 4: [0.05]})

    def test_zero_errors_refused(self):
        with pytest.raises(FitRefused):
            fit_error_decay({2: [0.0], 4: [0.0], 8: [0.0]})
