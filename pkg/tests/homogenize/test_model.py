import numpy as np
import pytest

from varhom.fields import sample_field
from varhom.grid import build_cube
from varhom.homogenize import (
    bracket_width,
    check_abar,
    check_duality_closure,
    check_musord,
    error_E,
    estimate_model,
    load_model,
    save_model,
)


@pytest.fixture(scope="module")
def quadratic_model(quadratic_spec):
    return estimate_model(quadratic_spec, n_top=0, bound=1.0, nodes=3, samples=1)


class TestConstantQuadraticModel:
    def test_fbar_is_the_cell_integrand(self, quadratic_model):
        z = quadratic_model.Fbar.nodes()
        np.testing.assert_allclose(quadratic_model.Fbar.values.ravel(), 0.5 * np.sum(z**2, axis=1), atol=1e-8)

    def test_mubar_is_minus_the_conjugate(self, quadratic_model):
        zs = quadratic_model.mubar.nodes()
        np.testing.assert_allclose(quadratic_model.mubar.values.ravel(), -0.5 * np.sum(zs**2, axis=1), atol=1e-6)

    def test_abar_is_identity(self, quadratic_model):
        np.testing.assert_allclose(quadratic_model.abar, quadratic_model.p_grid, atol=1e-6)
        np.testing.assert_allclose(quadratic_model.a([0.2, -0.1]), [0.2, -0.1], atol=1e-6)

    def test_dual_pair(self, quadratic_model):
        np.testing.assert_allclose(quadratic_model.dual_pair((1.0, 0.0), (0.0, 0.0)), [1.0, 0.0, 0.0, 0.0], atol=1e-6)

    def test_dual_pairs_cover_the_grid(self, quadratic_model):
        pairs = quadratic_model.dual_pairs
        assert pairs.shape == (81, 4)
        np.testing.assert_allclose(pairs, quadratic_model.mubar.nodes(), atol=1e-6)

    def test_bracket(self, quadratic_model):
        assert quadratic_model.bracket.shape == (3, 3, 3, 3)
        assert quadratic_model.bracket.min() >= -1e-6
        assert quadratic_model.bracket.max() <= 1e-6
        assert bracket_width(quadratic_model) == pytest.approx(float(quadratic_model.bracket.max()))
        assert not quadratic_model.low_confidence

    def test_duality_closure(self, quadratic_model):
        report = check_duality_closure(quadratic_model)
        assert report.checked >= 1
        assert report.max_deviation <= 1e-6
        assert report.ok

    def test_musord(self, quadratic_model):
        report = check_musord(quadratic_model, tol=1e-6)
        assert report.ok
        assert report.worst_excess <= 1e-6

    def test_abar_constants(self, quadratic_model):
        report = check_abar(quadratic_model)
        assert report.at_zero == pytest.approx(0.0, abs=1e-8)
        assert report.lipschitz == pytest.approx(1.0, abs=1e-6)
        assert report.monotonicity == pytest.approx(1.0, abs=1e-6)
        assert report.ok

    def test_save_and_load(self, quadratic_model, tmp_path):
        save_model(quadratic_model, tmp_path / "model")
        loaded = load_model(tmp_path / "model")
        np.testing.assert_array_equal(loaded.Fbar.values, quadratic_model.Fbar.values)
        np.testing.assert_array_equal(loaded.mubar.values, quadratic_model.mubar.values)
        np.testing.assert_allclose(loaded.abar, quadratic_model.abar, atol=1e-9)
        assert loaded.Lambda == quadratic_model.Lambda
        assert loaded.ensemble_id == "identity"

        save_model(loaded, tmp_path / "again")
        for name in ("Fbar.hglf", "mubar.hglf", "model.csv"):
            assert (tmp_path / "model" / name).read_bytes() == (tmp_path / "again" / name).read_bytes()
        header = (tmp_path / "model" / "brackets.csv").read_text().splitlines()[0]
        assert header.endswith("bracket_width")


class TestErrorE:
    @pytest.mark.parametrize("p,q", [((1.0, 0.0), (0.0, 1.0)), ((0.0, 0.0), (0.0, 0.0)), ((-1.0, 1.0), (1.0, 0.0))])
    def test_constant_field_vanishes(self, quadratic_spec, quadratic_model, p, q):
        cube = build_cube(1)
        sample = sample_field(quadratic_spec, cube, seed=0)
        assert error_E(sample, cube, p, q, quadratic_model) == pytest.approx(0.0, abs=1e-6)

    @pytest.mark.parametrize("seed", range(3))
    def test_nonnegative(self, checkerboard_spec, quadratic_model, seed):
        cube = build_cube(1)
        sample = sample_field(checkerboard_spec, cube, seed=seed)
        assert error_E(sample, cube, (0.5, 0.0), (0.5, 0.5), quadratic_model) >= 0.0
