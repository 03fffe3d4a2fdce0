from pathlib import Path
from typing import Any, Mapping, Optional, Union

import numpy as np
from sortedcontainers import SortedDict

from varhom.cfg.cfg import RUNTIME_KEYS


def format_value(v: Any) -> str:
    """Fixed text form of a summary entry; floats are written with 10 significant digits."""
    if v is None:
        return "none"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.10g}"
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(format_value(x) for x in v) + "]"
    return str(v)


class Summary:
    """
    Resolved configuration, thresholds, results and verdicts of one study, written as ``summary.txt``.

    A verdict of ``None`` means the property was not testable for this configuration; it is reported as
    ``skipped`` and does not fail the run.
    """

    def __init__(self, command: str, cfg: Mapping[str, Any]):
        self.command = command
        self.config = SortedDict({k: v for k, v in cfg.items() if k not in RUNTIME_KEYS})
        self.thresholds = SortedDict()
        self.results = SortedDict()
        self.verdicts = SortedDict()
        self.error: Optional[str] = None

    def threshold(self, name: str, value: Any) -> None:
        self.thresholds[name] = value

    def result(self, name: str, value: Any) -> None:
        self.results[name] = value

    def verdict(self, name: str, ok: Optional[bool]) -> None:
        self.verdicts[name] = None if ok is None else bool(ok)

    @property
    def failures(self):
        return [k for k, v in self.verdicts.items() if v is False]

    @property
    def passed(self) -> bool:
        return self.error is None and not self.failures

    @property
    def status(self) -> str:
        if self.error is not None:
            return "ERROR"
        return "PASS" if self.passed else "FAIL"

    def write(self, path: Union[str, Path]) -> None:
        lines = [f"command = {self.command}", ""]
        for title, section in (("config", self.config), ("thresholds", self.thresholds), ("results", self.results)):
            lines.append(f"[{title}]")
            lines += [f"{k} = {format_value(v)}" for k, v in section.items()]
            lines.append("")
        lines.append("[verdicts]")
        lines += [f"{k} = {'skipped' if v is None else format_value(v)}" for k, v in self.verdicts.items()]
        lines.append("")
        if self.error is not None:
            lines.append(f"error = {self.error}")
        lines.append(f"status = {self.status}")
        with open(path, "w") as f:
            f.write("\n".join(lines) + "\n")
