"""
Bundled experiment configs, addressable by name.
"""
import argparse
import json
from pathlib import Path
from typing import List, Optional, Tuple

RECIPE_DIR = Path(__file__).resolve().parent.parent / "recipes"


def recipe_path(name: str) -> Optional[Path]:
    path = RECIPE_DIR / f"{name}.json"
    return path if path.is_file() else None


def list_recipes() -> List[Tuple[str, str]]:
    """(name, description) of every bundled recipe, sorted by name."""
    out = []
    for path in sorted(RECIPE_DIR.glob("*.json")):
        with path.open("r", encoding="utf-8") as f:
            description = json.load(f).get("description", "")
        out.append((path.stem, description))
    return out


def handle(args: argparse.Namespace) -> int:
    for name, description in list_recipes():
        print(f"{name:<24} {description}")
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("recipes", help="list bundled experiment configs")
    parser.set_defaults(handler=handle)
