import numpy as np
import pytest

from varhom.exceptions import InvalidInput
from varhom.fields import sample_field
from varhom.grid import build_cube
from varhom.subadd import (
    check_bounds,
    check_continuity,
    check_cutup,
    check_ordering,
    check_partition,
    check_uniform_convexity,
    check_uniqueness,
    mu0_window,
    mu_window,
    solve_mu,
    solve_mu0,
)

CUBE = build_cube(1)


@pytest.fixture(scope="module")
def checkerboard(checkerboard_spec):
    return sample_field(checkerboard_spec, CUBE, seed=1)


class TestPartition:
    def test_constant_field_is_additive(self, quadratic_spec):
        report = check_partition(sample_field(quadratic_spec, CUBE, seed=0), CUBE)
        assert report.superadditivity == pytest.approx(0.0, abs=report.eps + 1e-10)
        assert report.subadditivity == pytest.approx(0.0, abs=report.eps + 1e-10)
        assert report.ok

    @pytest.mark.parametrize("seed", range(5))
    def test_checkerboard(self, checkerboard_spec, seed):
        report = check_partition(sample_field(checkerboard_spec, CUBE, seed=seed), CUBE)
        assert len(report.mu_children) == 9
        assert report.ok

    def test_level_zero_has_no_children(self, checkerboard):
        with pytest.raises(InvalidInput):
            check_partition(checkerboard, build_cube(0))


class TestOrdering:
    def test_checkerboard(self, checkerboard):
        report = check_ordering(checkerboard, CUBE, count=10, seed=0)
        assert len(report.rows) == 10
        assert report.ok

    def test_constant_field_slack(self, quadratic_spec):
        report = check_ordering(sample_field(quadratic_spec, CUBE, seed=0), CUBE, count=3, seed=4)
        for row in report.rows:
            p, q, qs, ps = (np.asarray(v) for v in (row.p, row.q, row.qstar, row.pstar))
            expected = 0.5 * np.sum((p - qs) ** 2) + 0.5 * np.sum((q - ps) ** 2)
            assert row.slack == pytest.approx(expected, abs=1e-6)


class TestBounds:
    def test_windows(self):
        lo, hi = mu_window(3.0, 0.0, (1.0, 0.0), (0.0, 0.0))
        assert (lo, hi) == (-4.0, 0.0)
        lo, hi = mu0_window(3.0, 0.0, (1.0, 0.0), (1.0, 0.0))
        assert lo == pytest.approx(2.0 / 12.0)
        assert hi == pytest.approx(6.0)

    @pytest.mark.parametrize("data", [((1.0, 0.0), (0.0, 0.0)), ((0.5, -1.0), (1.0, 1.0))])
    def test_checkerboard_solves(self, checkerboard, data):
        mu, pair = solve_mu(checkerboard, CUBE, *data)
        mu0, pair0 = solve_mu0(checkerboard, CUBE, *data)
        Lambda = checkerboard.integrand(0).Lambda
        assert check_bounds("mu", mu, *data, Lambda, 0.0, pair.eps).ok
        assert check_bounds("mu0", mu0, *data, Lambda, 0.0, pair0.eps).ok

    def test_floor(self):
        report = check_bounds("mu0", 0.5, (1.0, 0.0), (1.0, 0.0), 3.0, 0.0, 1e-8)
        assert not report.ok

    def test_unknown_quantity(self):
        with pytest.raises(InvalidInput):
            check_bounds("nu", 0.0, (0, 0), (0, 0), 3.0, 0.0, 0.0)


class TestMinimizers:
    def test_uniform_convexity(self, checkerboard):
        report = check_uniform_convexity(checkerboard, CUBE, perturbations=3)
        assert len(report.rows) == 3
        assert all(row.excess > 0 for row in report.rows)
        assert report.ok

    def test_continuity(self, checkerboard):
        assert check_continuity(checkerboard, CUBE, count=3).ok

    def test_uniqueness(self, checkerboard):
        report = check_uniqueness(checkerboard, CUBE, (1.0, 0.5), (0.0, 0.3))
        assert report.ok

    def test_cutup(self, checkerboard):
        report = check_cutup(checkerboard, CUBE, beta=1.0)
        assert report.bound > 0
        assert report.ok
