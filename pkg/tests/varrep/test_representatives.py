import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varhom.exceptions import InvalidInput
from varhom.varrep import (
    QuadraticIntegrand,
    check_convexity_window,
    check_k0_bounds,
    linear_map,
    make_affine_representative,
    make_linear_representative,
    verify_representation,
)

J = np.array([[0.0, 1.0], [-1.0, 0.0]])


def _spd(theta, e1, e2):
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    return rot @ np.diag([e1, e2]) @ rot.T


class TestLinearRepresentative:
    @pytest.mark.parametrize(
        "M, p, q, expected",
        [
            (None, (1.0, 0.0), (1.0, 0.0), 1.0),
            (None, (1.0, 0.0), (0.0, 1.0), 1.0),
            (J, (1.0, 0.0), (1.0, -1.0), 1.0),
        ],
    )
    def test_values(self, M, p, q, expected):
        F = make_linear_representative(np.eye(2), M)
        assert F(p, q)[0] == pytest.approx(expected, abs=1e-12)

    def test_strict_off_graph(self):
        F = make_linear_representative(np.eye(2))
        assert F((1.0, 0.0), (0.0, 1.0))[0] > 0.0

    @pytest.mark.parametrize(
        "A, M",
        [
            (np.array([[1.0, 0.5], [0.0, 1.0]]), None),
            (np.eye(2), np.array([[0.0, 1.0], [1.0, 0.0]])),
            (np.diag([1.0, 0.0]), None),
        ],
    )
    def test_rejects_bad_input(self, A, M):
        with pytest.raises(InvalidInput):
            make_linear_representative(A, M)

    def test_self_dual(self):
        F = make_linear_representative(np.diag([2.0, 0.5]), 0.7 * J)
        dual = F.conjugate().swapped()
        rng = np.random.default_rng(0)
        z = rng.normal(size=(50, 4))
        np.testing.assert_allclose(dual.value_z(z), F.value_z(z), atol=1e-10)

    def test_affine_shift_on_graph(self):
        shift = np.array([0.3, -0.2])
        F = make_affine_representative(np.eye(2), J, shift)
        a = linear_map(np.eye(2), J, shift)
        report = verify_representation(F, a, sample_count=2000)
        assert report.ok, report
        assert report.dual_checked


class TestVerifyRepresentation:
    def test_identity_has_no_violations(self):
        F = make_linear_representative(np.eye(2))
        report = verify_representation(F, linear_map(np.eye(2)))
        assert report.ok
        assert report.k0 is not None and report.k0.ok

    def test_graph_mismatch_is_reported(self):
        F = QuadraticIntegrand(np.eye(4))
        report = verify_representation(F, linear_map(2 * np.eye(2)), sample_count=500)
        assert len(report.graph_gaps) > 0
        assert not report.ok
        assert F((1.0, 0.0), (2.0, 0.0))[0] - 2.0 == pytest.approx(0.5)

    @pytest.mark.parametrize("shift", [(0.0, 0.0), (1.0, 0.0), (0.5, -2.0)])
    def test_k0_window(self, shift):
        F = make_affine_representative(np.diag([1.0, 2.0]), None, shift)
        report = check_k0_bounds(F, linear_map(np.diag([1.0, 2.0]), shift=shift))
        assert report.ok
        assert report.infimum <= 0.0

    @settings(deadline=None, max_examples=25)
    @given(
        theta=st.floats(0.0, np.pi),
        e1=st.floats(0.3, 3.0),
        e2=st.floats(0.3, 3.0),
        m=st.floats(-1.5, 1.5),
    )
    def test_random_linear_maps(self, theta, e1, e2, m):
        A = _spd(theta, e1, e2)
        A = 0.5 * (A + A.T)
        F = make_linear_representative(A, m * J)
        report = verify_representation(F, linear_map(A, m * J), sample_count=300, seed=1)
        assert not report.below_pairing
        assert not report.graph_gaps
        assert not report.dual_errors


class TestConvexityWindow:
    @pytest.mark.parametrize("A", [np.eye(2), 2 * np.eye(2), np.diag([0.5, 3.0])])
    @pytest.mark.parametrize("m", [0.0, 1.0])
    def test_linear_representatives_fit_window(self, A, m):
        F = make_linear_representative(A, m * J)
        report = check_convexity_window(F, pairs=1000)
        assert report.ok
        assert report.lower_constant == pytest.approx(1.0 / (2 * F.Lambda))
        assert report.upper_constant == pytest.approx(F.Lambda / 2)

    def test_narrow_window_is_violated(self):
        F = make_linear_representative(np.diag([0.5, 3.0]))
        report = check_convexity_window(F, pairs=200, lower=1.0, upper=1.0)
        assert report.convexity_violations
        assert report.smoothness_violations

    def test_lambda_below_three_rejected(self):
        with pytest.raises(InvalidInput):
            QuadraticIntegrand(np.eye(4), Lambda=2.0)
