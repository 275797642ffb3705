"""
Collision trajectory dumps.
"""
from pathlib import Path
from typing import Iterable, List, Mapping, Optional

from core.tables import read_table, write_table
from .flight import CollisionEvent

TRAJECTORY_COLUMNS = ["event", "cell_x", "cell_y", "r", "phi", "flight_time"]


def trajectory_rows(events: Iterable[CollisionEvent]) -> List[dict]:
    rows = []
    for index, event in enumerate(events):
        cell = tuple(event.coord.cell)
        rows.append({
            "event": index,
            "cell_x": cell[0],
            "cell_y": cell[1] if len(cell) > 1 else 0,
            "r": repr(event.coord.r),
            "phi": repr(event.coord.phi),
            "flight_time": repr(event.flight_time),
        })
    return rows


def write_trajectory_csv(path: Path, events: Iterable[CollisionEvent], meta: Optional[Mapping[str, str]] = None) -> Path:
    return write_table(path, TRAJECTORY_COLUMNS, trajectory_rows(events), meta)


def read_trajectory_csv(path: Path) -> List[dict]:
    _, rows = read_table(path)
    return [
        {
            "event": int(row["event"]),
            "cell": (int(row["cell_x"]), int(row["cell_y"])),
            "r": float(row["r"]),
            "phi": float(row["phi"]),
            "flight_time": float(row["flight_time"]),
        }
        for row in rows
    ]
