import argparse
import json

from ..schemas import ExperimentConfig


def handle(args: argparse.Namespace) -> int:
    print(json.dumps(ExperimentConfig.model_json_schema(), indent=2))
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("schema", help="print the JSON schema of experiment configs")
    parser.set_defaults(handler=handle)
