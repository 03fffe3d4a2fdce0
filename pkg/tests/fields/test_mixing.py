import numpy as np
import pytest

from varhom.exceptions import FitRefused, InsufficientSamples, InvalidInput
from varhom.fields import (
    CovarianceRow,
    CovarianceTable,
    EnsembleSpec,
    Phase,
    covariance_estimate,
    finite_range_ok,
    kernel_tail_check,
    mixing_probe,
    phase_indicator,
)


@pytest.fixture(scope="module")
def checkerboard_table():
    return mixing_probe(EnsembleSpec(), phase_indicator(1), [0, 1, 2, 5], samples=400)


class TestMixingProbe:
    def test_variance_at_zero(self, checkerboard_table):
        row = checkerboard_table.rows[0]
        assert row.distance == 0
        assert row.covariance == pytest.approx(0.25, abs=0.05)

    @pytest.mark.parametrize("index", [1, 2, 3])
    def test_independent_beyond_range(self, checkerboard_table, index):
        assert checkerboard_table.rows[index].within(3.0)

    def test_finite_range(self, checkerboard_table):
        assert finite_range_ok(checkerboard_table, 1)
        assert finite_range_ok(checkerboard_table, 10) is None

    def test_moving_average(self):
        spec = EnsembleSpec(kind="moving_average", range=3, ensemble_id="ma3")
        table = mixing_probe(spec, phase_indicator(1), [1, 5], samples=400)
        near, far = table.rows
        assert near.covariance > 3.0 * near.stderr
        assert far.within(3.0)

    def test_constant_field(self):
        spec = EnsembleSpec(phases=(Phase(2.0), Phase(2.0)), p1=0.0)
        table = mixing_probe(spec, phase_indicator(1), [0, 3], samples=8)
        for row in table.rows:
            assert row.covariance == 0.0

    def test_refuses_few_samples(self):
        with pytest.raises(InsufficientSamples):
            mixing_probe(EnsembleSpec(), phase_indicator(1), [1], samples=7)

    def test_refuses_unbounded_functional(self):
        with pytest.raises(InvalidInput):
            mixing_probe(EnsembleSpec(), lambda sample, cell: 2.0, [1], samples=8)

    def test_deterministic(self):
        a = mixing_probe(EnsembleSpec(), phase_indicator(1), [1, 2], samples=16)
        b = mixing_probe(EnsembleSpec(), phase_indicator(1), [2, 1], samples=16)
        assert a.rows == b.rows

    def test_to_csv(self, checkerboard_table, tmp_path):
        path = tmp_path / "cov.csv"
        checkerboard_table.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "distance,covariance,stderr,samples"
        assert len(lines) == 5


class TestTailFit:
    def test_power_law(self):
        rows = [CovarianceRow(d, 0.3 * (1.0 + d) ** -2.5, 1e-4, 100) for d in range(1, 8)]
        fit = kernel_tail_check(CovarianceTable("ma", "x", rows), kernel_beta=2.0)
        assert fit.slope == pytest.approx(-2.5, abs=1e-10)
        assert fit.consistent

    def test_too_few_points(self):
        rows = [CovarianceRow(1, 0.1, 0.01, 10), CovarianceRow(2, -0.1, 0.01, 10)]
        with pytest.raises(FitRefused):
            kernel_tail_check(CovarianceTable("ma", "x", rows), kernel_beta=2.0)


def test_covariance_estimate():
    x = np.array([0.0, 1.0, 0.0, 1.0])
    cov, _ = covariance_estimate(x, x)
    assert cov == pytest.approx(np.var(x, ddof=1))
