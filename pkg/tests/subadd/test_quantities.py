import numpy as np
import pytest
import scipy.sparse as sp

from varhom.exceptions import InvalidInput, SolverFailure
from varhom.fields import sample_field
from varhom.grid import build_cube, discrete_divergence
from varhom.subadd import CellProblem, minimize_newton_cg, solve_mu, solve_mu0
from varhom.subadd.records import SolveRecord, write_records
from varhom.varrep import QuadraticIntegrand


class TestNewtonCG:
    def test_quadratic(self):
        rng = np.random.default_rng(0)
        R = rng.normal(size=(20, 20))
        A = sp.csr_matrix(R @ R.T + 20 * np.eye(20))
        b = rng.normal(size=20)

        def objective(x):
            return 0.5 * x @ (A @ x) - b @ x, A @ x - b

        res = minimize_newton_cg(objective, lambda x: A, np.zeros(20), tol=1e-12)
        assert res.converged
        np.testing.assert_allclose(res.x, np.linalg.solve(A.toarray(), b), atol=1e-5)

    def test_smooth_convex(self):
        def objective(x):
            return float(np.sum(np.cosh(x - 1.0))), np.sinh(x - 1.0)

        res = minimize_newton_cg(objective, lambda x: sp.diags(np.cosh(x - 1.0)), np.full(5, 3.0))
        np.testing.assert_allclose(res.x, 1.0, atol=1e-4)
        assert res.value == pytest.approx(5.0, abs=1e-7)

    def test_budget_exhausted(self):
        def objective(x):
            return float(np.sum(np.cosh(x))), np.sinh(x)

        with pytest.raises(SolverFailure):
            minimize_newton_cg(objective, lambda x: sp.diags(np.cosh(x)), np.full(3, 5.0), max_iter=1)


class TestConstantQuadraticField:
    @pytest.fixture
    def sample(self, quadratic_spec):
        return sample_field(quadratic_spec, build_cube(1), seed=0)

    def test_mu_zero_data(self, sample):
        mu, pair = solve_mu(sample, build_cube(1), (0.0, 0.0), (0.0, 0.0))
        assert mu == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(pair.grad, 0.0, atol=1e-12)
        np.testing.assert_allclose(pair.g.values, 0.0, atol=1e-12)

    def test_mu_dual_data(self, sample):
        mu, pair = solve_mu(sample, build_cube(1), (1.0, 0.0), (0.0, 0.0))
        assert mu == pytest.approx(-0.5, abs=1e-6)
        np.testing.assert_allclose(pair.P, [1.0, 0.0], atol=1e-3)
        np.testing.assert_allclose(pair.Q, [0.0, 0.0], atol=1e-3)
        assert abs(pair.u.values.mean()) <= 1e-10

    @pytest.mark.parametrize("p,q", [((1.0, 0.0), (0.0, 0.0)), ((1.0, -0.5), (0.3, 2.0)), ((0.0, 0.0), (0.0, 0.0))])
    def test_mu0(self, sample, p, q):
        mu0, pair = solve_mu0(sample, build_cube(1), p, q)
        expected = 0.5 * (np.dot(p, p) + np.dot(q, q))
        assert mu0 == pytest.approx(expected, abs=1e-8)
        assert mu0 - np.dot(p, q) == pytest.approx(0.5 * np.sum(np.subtract(p, q) ** 2), abs=1e-8)
        np.testing.assert_allclose(pair.P, p, atol=1e-12)
        np.testing.assert_allclose(pair.Q, q, atol=1e-12)


class TestCheckerboard:
    @pytest.fixture
    def sample(self, checkerboard_spec):
        return sample_field(checkerboard_spec, build_cube(1), seed=3)

    def test_flux_is_solenoidal(self, sample):
        _, pair = solve_mu(sample, build_cube(1), (1.0, 0.5), (0.2, 0.0))
        div = discrete_divergence(pair.g)
        np.testing.assert_allclose(div.values[1:-1, 1:-1], 0.0, atol=1e-10)

    def test_zero_normal_flux(self, sample):
        _, pair = solve_mu0(sample, build_cube(1), (1.0, 0.0), (0.5, 0.5))
        div = discrete_divergence(pair.g)
        np.testing.assert_allclose(div.values, 0.0, atol=1e-10)
        assert pair.residual >= 0.0

    def test_mu0_above_pairing(self, sample):
        mu0, pair = solve_mu0(sample, build_cube(1), (1.0, 0.0), (2.0, 0.0))
        assert mu0 >= 2.0 - pair.eps
        assert pair.pairing_ok

    def test_mu0_below_pairing_is_flagged(self, quadratic_spec):
        cube = build_cube(1)
        sample = sample_field(quadratic_spec, cube, seed=0)
        # ½|p|² + ½|q|² − 1 is not a representative: μ₀ = 2.5 − 1 < p·q = 2
        sample._integrands[0] = QuadraticIntegrand(np.eye(4), c=-1.0)
        mu0, pair = solve_mu0(sample, cube, (1.0, 0.0), (2.0, 0.0))
        assert mu0 == pytest.approx(1.5, abs=1e-6)
        assert not pair.pairing_ok
        rec = SolveRecord.from_pair("bad", 0, cube, "mu0", ((1.0, 0.0), (2.0, 0.0)), pair)
        assert not rec.pairing_ok
        assert rec.to_row().endswith(",0")

    def test_cube_outside_sample(self, sample):
        with pytest.raises(InvalidInput):
            solve_mu(sample, build_cube(2), (1.0, 0.0), (0.0, 0.0))

    def test_problem_size(self, sample):
        assert CellProblem(sample, build_cube(1), zero_boundary=True).size == 2 * 8 * 8
        assert CellProblem(sample, build_cube(1), zero_boundary=False).size == 2 * 10 * 10


class TestRecords:
    def test_csv_is_deterministic(self, quadratic_spec, tmp_path):
        cube = build_cube(1)
        sample = sample_field(quadratic_spec, cube, seed=0)
        _, pair = solve_mu(sample, cube, (1.0, 0.0), (0.0, 0.0))
        rec = SolveRecord.from_pair("identity", 0, cube, "mu", ((1.0, 0.0), (0.0, 0.0)), pair, wall_time=1.25)
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        write_records(first, [rec])
        write_records(second, [rec])
        assert first.read_bytes() == second.read_bytes()
        header, row = first.read_text().splitlines()
        assert "wall_time" not in header
        assert header.endswith(",pairing_ok")
        assert row.endswith(",1")
        assert row.startswith("identity,0,1,0,mu,")

        write_records(first, [rec], timings=True)
        assert first.read_text().splitlines()[1].endswith(",1.250")
