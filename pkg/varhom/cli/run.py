import sys
from pathlib import Path
from typing import List, Optional

from varhom.cfg.cfg import ensemble_spec, parse_varhom_args
from varhom.cli.studies import (
    check_study,
    dirichlet_error_study,
    homogenize_study,
    lipschitz_study,
    mixing_probe_study,
    represent_study,
)
from varhom.cli.summary import Summary
from varhom.exceptions import ConfigError, HomogenizationError
from varhom.utils.utils import AttrDict, log, set_log_level

STUDIES = {
    "represent": represent_study,
    "homogenize": homogenize_study,
    "dirichlet-error": dirichlet_error_study,
    "lipschitz": lipschitz_study,
    "mixing-probe": mixing_probe_study,
    "check": check_study,
}

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CHECK_FAILED = 2


def run(cfg: AttrDict) -> int:
    """Run the study named by ``cfg.command`` and write its artifacts and ``summary.txt`` into ``cfg.out``."""
    set_log_level(cfg.log_level)
    out = Path(cfg.out)
    summary = Summary(cfg.command, cfg)
    try:
        out.mkdir(parents=True, exist_ok=True)
        spec = ensemble_spec(cfg)
        log.info(f"running {cfg.command} on {spec.ensemble_id} with {cfg.jobs} worker(s) into {out}")
        STUDIES[cfg.command](cfg, spec, out, summary)
    except (HomogenizationError, OSError) as e:
        log.error(f"{cfg.command} failed: {e}")
        summary.error = str(e)
        if out.is_dir():
            summary.write(out / "summary.txt")
        return EXIT_ERROR

    summary.write(out / "summary.txt")
    if summary.failures:
        log.error(f"{cfg.command}: failed checks {', '.join(summary.failures)}")
        return EXIT_CHECK_FAILED
    log.info(f"{cfg.command}: {len(summary.verdicts)} checks, status {summary.status}")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Script entry point."""
    try:
        cfg = parse_varhom_args(argv)
    except ConfigError as e:
        log.error(str(e))
        return EXIT_ERROR
    return run(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
