from pathlib import Path

import pytest

from varhom.cli.run import EXIT_CHECK_FAILED, EXIT_ERROR, EXIT_OK, main
from varhom.utils.tests import cli_args, read_summary, tree_digest, write_experiment

CONFIGS = Path(__file__).resolve().parents[2] / "experiment_configs"

IDENTITY = {"phases": [(1.0,)], "ensemble_id": "identity", "lam": 4.0}


@pytest.fixture
def dirichlet_experiment(tmp_path):
    return write_experiment(
        tmp_path / "dirichlet.ini",
        {
            "run": {"command": "dirichlet-error"},
            "ensemble": IDENTITY,
            "model": {"n_top": 0, "pq_nodes": 3, "model_samples": 1},
            "dirichlet": {"radii": [1, 2], "seeds": [0, 1], "shape": "box", "slope": (1.0, 0.5)},
        },
    )


class TestRun:
    def test_check_on_constant_field_passes(self, tmp_path):
        out = tmp_path / "out"
        assert main(cli_args(CONFIGS / "check_constant.ini", out, "--jobs", "1")) == EXIT_OK
        summary = read_summary(out / "summary.txt")
        assert summary["status"] == "PASS"
        for key in ("helmholtz", "solenoidal", "poisson", "ordering", "partition", "cutup"):
            assert summary[key] == "true"
        assert "poisson_tol" in summary and "kernel_tol" in summary
        assert (out / "solves.csv").read_text().startswith("ensemble_id")

    def test_malformed_config_exits_one(self, tmp_path):
        path = write_experiment(tmp_path / "bad.ini", {"run": {"command": "check", "no_such_key": 1}})
        assert main(cli_args(path, tmp_path / "out")) == EXIT_ERROR
        assert not (tmp_path / "out" / "summary.txt").exists()

    def test_invalid_ensemble_exits_one(self, tmp_path):
        path = write_experiment(
            tmp_path / "bad.ini", {"run": {"command": "mixing-probe"}, "ensemble": {"p1": 1.5}}
        )
        out = tmp_path / "out"
        assert main(cli_args(path, out)) == EXIT_ERROR
        assert read_summary(out / "summary.txt")["status"] == "ERROR"

    def test_failed_property_exits_two(self, tmp_path):
        path = write_experiment(
            tmp_path / "poisson.ini",
            {"run": {"command": "check"}, "ensemble": IDENTITY, "check": {"poisson_tol": 1e-30, "check_count": 2}},
        )
        out = tmp_path / "out"
        assert main(cli_args(path, out, "--jobs", "1")) == EXIT_CHECK_FAILED
        summary = read_summary(out / "summary.txt")
        assert summary["poisson"] == "false"
        assert summary["status"] == "FAIL"

    def test_mixing_probe_writes_covariances(self, tmp_path):
        path = write_experiment(
            tmp_path / "mixing.ini",
            {
                "run": {"command": "mixing-probe"},
                "ensemble": {"phases": [(1.0,), (4.0,)], "p1": 0.5},
                "mixing": {"distances": [0, 2, 3], "mixing_samples": 200},
            },
        )
        out = tmp_path / "out"
        assert main(cli_args(path, out)) in (EXIT_OK, EXIT_CHECK_FAILED)
        rows = (out / "covariance.csv").read_text().splitlines()
        assert rows[0] == "distance,covariance,stderr,samples"
        assert len(rows) == 4
        summary = read_summary(out / "summary.txt")
        assert summary["variance_oracle"] in ("true", "false")
        assert summary["sigmas"] == "3"


class TestDeterminism:
    def test_rerun_is_byte_identical(self, tmp_path, dirichlet_experiment):
        for name in ("a", "b"):
            main(cli_args(dirichlet_experiment, tmp_path / name, "--jobs", "1"))
        first, second = tree_digest(tmp_path / "a"), tree_digest(tmp_path / "b")
        assert "errors.csv" in first and "summary.txt" in first
        assert first == second

    def test_outputs_do_not_depend_on_workers(self, tmp_path, dirichlet_experiment):
        main(cli_args(dirichlet_experiment, tmp_path / "serial", "--jobs", "1"))
        main(cli_args(dirichlet_experiment, tmp_path / "pool", "--jobs", "2"))
        assert tree_digest(tmp_path / "serial") == tree_digest(tmp_path / "pool")

    def test_seed_offset_changes_realizations(self, tmp_path):
        path = write_experiment(
            tmp_path / "mixing.ini",
            {
                "run": {"command": "mixing-probe"},
                "ensemble": {"phases": [(1.0,), (4.0,)]},
                "mixing": {"distances": [0, 1], "mixing_samples": 50},
            },
        )
        main(cli_args(path, tmp_path / "a"))
        main(cli_args(path, tmp_path / "b", "--seed-offset", "1000"))
        a = (tmp_path / "a" / "covariance.csv").read_bytes()
        b = (tmp_path / "b" / "covariance.csv").read_bytes()
        assert a != b
