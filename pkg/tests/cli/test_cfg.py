import pytest

from varhom.cfg.cfg import ensemble_spec, parse_varhom_args
from varhom.cli.summary import Summary, format_value
from varhom.exceptions import ConfigError
from varhom.utils.tests import read_summary, write_experiment


@pytest.fixture
def experiment(tmp_path):
    return write_experiment(
        tmp_path / "exp.ini",
        {
            "run": {"command": "check"},
            "ensemble": {"phases": [(1.0,)], "lam": 3.0, "seed": 2},
            "solver": {"tol": 1e-6},
        },
    )


class TestParse:
    def test_file_values_become_defaults(self, experiment):
        cfg = parse_varhom_args(["--config", str(experiment)])
        assert cfg.command == "check"
        assert cfg.lam == 3.0
        assert cfg.tol == pytest.approx(1e-6)
        assert cfg.phases == [(1.0,)]

    def test_flags_override_file(self, experiment):
        cfg = parse_varhom_args(["--config", str(experiment), "--lam", "5", "represent"])
        assert cfg.lam == 5.0
        assert cfg.command == "represent"
        assert cfg.tol == pytest.approx(1e-6)

    def test_seed_offset_shifts_ensemble_seed(self, experiment):
        cfg = parse_varhom_args(["--config", str(experiment), "--seed-offset", "3"])
        assert ensemble_spec(cfg).seed == 5

    def test_vectors_become_pairs(self):
        cfg = parse_varhom_args(["check", "--p", "[1, 2]"])
        assert cfg.p == (1.0, 2.0)

    @pytest.mark.parametrize(
        "sections, key",
        [
            ({"run": {"command": "check", "bogus": 1}}, "bogus"),
            ({"run": {"command": "check"}, "solver": {"tol": "abc"}}, "tol"),
            ({"run": {"command": "nothing"}}, "command"),
            ({"run": {"command": "check"}, "dirichlet": {"seeds": []}}, "seeds"),
            ({"run": {"command": "check"}, "homogenize": {"p": (1.0, 2.0, 3.0)}}, "p"),
            ({"run": {"command": "check"}, "ensemble": {"lam": -1.0}}, "lam"),
            ({"ensemble": {"lam": 2.0}}, "command"),
        ],
    )
    def test_errors_name_the_key(self, tmp_path, sections, key):
        path = write_experiment(tmp_path / "bad.ini", sections)
        with pytest.raises(ConfigError) as e:
            parse_varhom_args(["--config", str(path)])
        assert e.value.key == key
        assert key in str(e.value)

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(ConfigError) as e:
            parse_varhom_args(["check", "--config", str(tmp_path / "missing.ini")])
        assert e.value.key == "config"

    def test_unknown_flag(self):
        with pytest.raises(ConfigError):
            parse_varhom_args(["check", "--not_a_flag", "1"])

    def test_bad_phase(self, experiment):
        cfg = parse_varhom_args(["--config", str(experiment), "--phases", "[(1.0, 0.0, 0.0, 0.0, 9.0)]"])
        with pytest.raises(ConfigError) as e:
            ensemble_spec(cfg)
        assert e.value.key == "phases"


class TestSummary:
    @pytest.mark.parametrize(
        "value, text",
        [
            (None, "none"),
            (True, "true"),
            (3, "3"),
            (0.1, "0.1"),
            (1.0 / 3.0, "0.3333333333"),
            ([1, 2.5], "[1, 2.5]"),
            ("ball", "ball"),
        ],
    )
    def test_format_value(self, value, text):
        assert format_value(value) == text

    def test_runtime_keys_are_left_out(self, tmp_path, experiment):
        cfg = parse_varhom_args(["--config", str(experiment), "--jobs", "3"])
        summary = Summary(cfg.command, cfg)
        summary.threshold("tol", 0.5)
        summary.verdict("passes", True)
        summary.verdict("untestable", None)
        summary.write(tmp_path / "summary.txt")
        entries = read_summary(tmp_path / "summary.txt")
        assert "jobs" not in entries and "out" not in entries and "config" not in entries
        assert entries["lam"] == "3"
        assert entries["untestable"] == "skipped"
        assert entries["status"] == "PASS"

    def test_failed_verdict_fails(self, experiment):
        summary = Summary("check", parse_varhom_args(["--config", str(experiment)]))
        summary.verdict("a", True)
        summary.verdict("b", False)
        assert summary.failures == ["b"]
        assert summary.status == "FAIL"
        summary.error = "boom"
        assert summary.status == "ERROR"
