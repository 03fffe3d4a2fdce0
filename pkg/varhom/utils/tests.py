import hashlib
from pathlib import Path
from typing import Any, Dict, List, Mapping, Union

from varhom.cli.summary import format_value


def write_experiment(path: Union[str, Path], sections: Mapping[str, Mapping[str, Any]]) -> Path:
    """Experiment file with one ``[section]`` per entry; values are written as the CLI would parse them."""
    path = Path(path)
    lines = []
    for name, entries in sections.items():
        lines.append(f"[{name}]")
        for key, value in entries.items():
            lines.append(f"{key} = {value if isinstance(value, str) else _literal(value)}")
        lines.append("")
    path.write_text("\n".join(lines))
    return path


def _literal(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return repr(value)
    return format_value(value)


def cli_args(config: Union[str, Path], out: Union[str, Path], *extra: str) -> List[str]:
    return ["--config", str(config), "--out", str(out), "--log_level", "warning", *extra]


def tree_digest(directory: Union[str, Path]) -> Dict[str, str]:
    """SHA-256 of every file below ``directory``, keyed by relative path."""
    directory = Path(directory)
    return {
        str(f.relative_to(directory)): hashlib.sha256(f.read_bytes()).hexdigest()
        for f in sorted(directory.rglob("*"))
        if f.is_file()
    }


def read_summary(path: Union[str, Path]) -> Dict[str, str]:
    """``key = value`` lines of a summary file, section headers dropped."""
    entries = {}
    for line in Path(path).read_text().splitlines():
        if " = " in line:
            key, value = line.split(" = ", 1)
            entries[key] = value
    return entries
