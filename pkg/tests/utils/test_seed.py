import numpy as np
import pytest

from varhom.utils.seed import cell_uniforms, derive_seed, region_uniforms


class TestDeriveSeed:
    def test_deterministic(self):
        assert derive_seed(7, "level", 2) == derive_seed(7, "level", 2)

    @pytest.mark.parametrize("other", [(8, "level", 2), (7, "level", 3), (7, "sample", 2)])
    def test_labels_separate_streams(self, other):
        assert derive_seed(7, "level", 2) != derive_seed(*other)

    def test_fits_in_64_bits(self):
        assert 0 <= derive_seed(-1, "x") < 2**64


class TestCellUniforms:
    def test_in_unit_interval(self):
        draws = cell_uniforms(3, (0, 0), count=5)
        assert len(draws) == 5
        assert all(0.0 <= u < 1.0 for u in draws)

    def test_stream_changes_draws(self):
        assert cell_uniforms(3, (1, 2), stream=0) != cell_uniforms(3, (1, 2), stream=1)

    def test_region_does_not_change_a_cell(self):
        small = region_uniforms(5, [(0, 0), (1, 0)])
        large = region_uniforms(5, [(x, y) for x in range(-3, 4) for y in range(-3, 4)])
        assert small[0] == large[3 * 7 + 3]
        assert small[1] == large[4 * 7 + 3]

    def test_negative_coordinates(self):
        cells = [(-1, 0), (0, -1), (-1, -1)]
        values = region_uniforms(5, cells)
        assert len(np.unique(values)) == 3
