"""
Reduce a report CSV to the columns a plot of its report kind needs.
"""
import argparse
from pathlib import Path
from typing import List, Optional

from core.errors import ConfigurationError
from core.logging import logger
from core.tables import read_table, table_columns, write_table

# report kind -> plotted columns; a trailing "*" expands to every matching column
PLOT_COLUMNS = {
    "mllt": ["u*", "empirical", "reference", "se"],
    "correlation": ["n", "estimate", "se", "target"],
    "cube_mix": ["n", "size", "estimate", "se"],
    "escape": ["n", "fraction", "se"],
    "ladder": ["level", "in_measure", "max_deviation"],
    "covariance": ["i", "j", "value", "se"],
    "energy": ["t", "mean", "q10", "q50", "q90"],
    "quantiles": ["q", "direct", "transformed"],
    "horizon": None,
    "invariance": None,
}


def _select(wanted: Optional[List[str]], header: List[str], report: str) -> List[str]:
    if wanted is None:
        return header
    columns: List[str] = []
    for name in wanted:
        if name.endswith("*"):
            matches = [h for h in header if h.startswith(name[:-1]) and h[len(name) - 1:].isdigit()]
            if not matches:
                raise ConfigurationError(f"{report} report has no {name} columns")
            columns += matches
        elif name in header:
            columns.append(name)
        else:
            raise ConfigurationError(f"{report} report is missing column {name!r}")
    return columns


def emit_plotdata(report: Path, out: Optional[Path] = None) -> Path:
    """
    Write the plot columns of ``report`` to ``out`` (default ``<stem>.plot.csv``).

    Raises:
        ConfigurationError: no report kind in the metadata, unknown kind, missing columns
    """
    report = Path(report)
    meta, rows = read_table(report)
    kind = meta.get("report")
    if kind is None:
        raise ConfigurationError(f"{report} carries no report= metadata")
    if kind not in PLOT_COLUMNS:
        raise ConfigurationError(f"unknown report kind {kind!r} in {report}")
    columns = _select(PLOT_COLUMNS[kind], table_columns(report), kind)
    target = Path(out) if out else report.with_name(f"{report.stem}.plot.csv")
    write_table(target, columns, rows, meta)
    logger.info("plotdata_written", report=str(report), kind=kind, rows=len(rows), out=str(target))
    return target


def handle(args: argparse.Namespace) -> int:
    try:
        emit_plotdata(Path(args.report), Path(args.out) if args.out else None)
    except (OSError, ConfigurationError) as exc:
        logger.error("plotdata_failed", report=args.report, error=str(exc))
        return 1
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("plotdata", help="extract plot-ready columns from a report CSV")
    parser.add_argument("report")
    parser.add_argument("--out", default=None)
    parser.set_defaults(handler=handle)
