import numpy as np
import pytest

from varhom.exceptions import InvalidInput
from varhom.grid import build_cube, grid_trim, sculpt_bound, sculpt_ratio, separation_holds, trimmed_partition_gap


class TestTriadicCube:
    def test_untrimmed_side(self):
        cube = build_cube(2)
        assert cube.side == 9
        assert cube.nodes_per_side == 27
        np.testing.assert_allclose(cube.lower, [-4.5, -4.5])

    def test_trimmed_side(self):
        cube = build_cube(2, trimmed=True, beta=1.0)
        assert cube.side == pytest.approx(6.0)
        # 3 unit lengths at r_cell=3 is 9 grid steps, rounded up to an even count
        assert cube.trim.nodes == 10
        assert cube.nodes_per_side == 17

    def test_children_partition_parent(self):
        cube = build_cube(2, base=(9, -9))
        children = cube.children()
        assert len(children) == 9
        assert {c.base for c in children} == {(9 + 3 * i, -9 + 3 * j) for i in (-1, 0, 1) for j in (-1, 0, 1)}
        cells = np.concatenate([c.cells() for c in children])
        assert len({tuple(c) for c in cells}) == 81
        assert {tuple(c) for c in cells} == {tuple(c) for c in cube.cells()}
        assert all(cube.contains(c) for c in children)

    def test_level_zero_trimmed_rejected(self):
        with pytest.raises(InvalidInput):
            build_cube(0, trimmed=True)

    @pytest.mark.parametrize("n, beta, base", [(-1, 1.0, (0, 0)), (1, 0.0, (0, 0)), (1, 1.0, (1, 0))])
    def test_rejects(self, n, beta, base):
        with pytest.raises(InvalidInput):
            build_cube(n, beta=beta, base=base)

    @pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
    @pytest.mark.parametrize("n", range(1, 7))
    def test_volume_deficit(self, n, beta):
        assert sculpt_ratio(n, beta) <= sculpt_bound(n, beta)
        cube = build_cube(n, trimmed=True, beta=beta)
        assert 1.0 - (cube.side / cube.full_side) ** 2 == pytest.approx(sculpt_ratio(n, beta))

    @pytest.mark.parametrize("beta", [0.25, 0.5, 1.0, 3.0])
    @pytest.mark.parametrize("n", range(1, 13))
    def test_separation(self, n, beta):
        assert separation_holds(n, beta)
        assert trimmed_partition_gap(n, beta) == grid_trim(n, beta).nodes
        assert trimmed_partition_gap(n, beta) % 2 == 0
