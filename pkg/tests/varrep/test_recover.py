import numpy as np
import pytest

from varhom.exceptions import InvalidInput, OutOfDomain
from varhom.varrep import (
    MonotoneMap,
    QuadraticIntegrand,
    check_monotone_map,
    invert_gradient,
    linear_map,
    make_linear_representative,
    radial_map,
    recover_monotone_map,
    tabulate,
)

J = np.array([[0.0, 1.0], [-1.0, 0.0]])


class TestRecoverMonotoneMap:
    @pytest.mark.parametrize(
        "F, p, expected",
        [
            (QuadraticIntegrand(np.eye(4)), (1.0, 0.0), (1.0, 0.0)),
            (make_linear_representative(2 * np.eye(2)), (1.0, 0.0), (2.0, 0.0)),
            (make_linear_representative(np.eye(2), J), (0.0, 1.0), (1.0, 1.0)),
        ],
    )
    def test_examples(self, F, p, expected):
        np.testing.assert_allclose(recover_monotone_map(F, p), expected, atol=1e-10)

    def test_batched(self):
        A = np.diag([1.0, 3.0])
        F = make_linear_representative(A, 0.5 * J)
        p = np.random.default_rng(0).normal(size=(64, 2))
        np.testing.assert_allclose(recover_monotone_map(F, p), p @ (A + 0.5 * J).T, atol=1e-9)

    def test_recovered_map_regularity(self):
        F = make_linear_representative(np.diag([1.0, 2.0]), J)
        a = MonotoneMap(lambda p: recover_monotone_map(F, p), 4 * F.Lambda, 0.0, name="recovered")
        assert check_monotone_map(a, radius=2.0, count=200).ok

    def test_out_of_table(self):
        F = tabulate(QuadraticIntegrand(np.eye(4)), 1.0, 5)
        with pytest.raises(OutOfDomain):
            recover_monotone_map(F, (3.0, 0.0))

    def test_invert_gradient_dual_pair(self):
        F = QuadraticIntegrand(np.eye(4))
        # for (|p|²+|q|²)/2 the point with gradient (q*, p*) = ((1,0),(0,0)) is (p, q) = ((1,0),(0,0))
        np.testing.assert_allclose(invert_gradient(F, [1.0, 0.0, 0.0, 0.0]), [1.0, 0.0, 0.0, 0.0], atol=1e-12)


class TestMonotoneMap:
    def test_inverse_round_trip(self):
        a = radial_map(2.0, b=-0.5, skew=0.3)
        p = np.random.default_rng(1).normal(size=(20, 2))
        np.testing.assert_allclose(a.inverse(a(p)), p, atol=1e-10)

    @pytest.mark.parametrize("c, b", [(0.0, 0.0), (-1.0, 0.0), (1.0, -1.0)])
    def test_radial_rejects(self, c, b):
        with pytest.raises(InvalidInput):
            radial_map(c, b)

    def test_radial_lambda_too_small(self):
        with pytest.raises(InvalidInput):
            radial_map(4.0, b=1.0, lam=3.0)

    @pytest.mark.parametrize("c, b, skew", [(1.0, 0.0, 0.0), (2.0, 0.5, 0.0), (3.0, -1.0, 0.5)])
    def test_radial_constants(self, c, b, skew):
        assert check_monotone_map(radial_map(c, b, skew), radius=3.0).ok

    def test_report_flags_wrong_lambda(self):
        report = check_monotone_map(linear_map(np.diag([1.0, 4.0])), lam=2.0)
        assert report.lipschitz_violations
        assert not report.ok
