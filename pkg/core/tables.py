"""
CSV tables with leading ``# key=value`` comment lines.
"""
import csv
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple


def write_table(
    path: Path,
    fieldnames: Sequence[str],
    rows: Iterable[Mapping[str, Any]],
    meta: Optional[Mapping[str, Any]] = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        for key, value in (meta or {}).items():
            f.write(f"# {key}={value}\n")
        w = csv.DictWriter(f, fieldnames=list(fieldnames), extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: row.get(k, "") for k in fieldnames})
    return path


def read_table(path: Path) -> Tuple[Dict[str, str], List[Dict[str, str]]]:
    """Return (comment metadata, rows as string dicts)."""
    meta: Dict[str, str] = {}
    with Path(path).open("r", encoding="utf-8", newline="") as f:
        lines = f.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key] = value
        else:
            body.append(line)
    return meta, list(csv.DictReader(body))


def table_columns(path: Path) -> List[str]:
    """Header row of a table, also for tables without data rows."""
    with Path(path).open("r", encoding="utf-8", newline="") as f:
        for line in f:
            if not line.startswith("#"):
                return next(csv.reader([line]))
    return []
