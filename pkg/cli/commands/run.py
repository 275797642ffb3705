"""
Run an experiment config: one CSV per estimator plus manifest.json.

Exit codes: 0 all pass, 2 some estimator failed, 1 config or runtime error.
"""
import argparse
import time
from pathlib import Path
from typing import List, Optional

import numpy as np
from pydantic import ValidationError

from core.config import settings
from core.errors import GlobmixError
from core.logging import logger
from .. import __version__
from ..registry import build_system
from ..runners import RUNNERS, SYSTEMLESS, RunContext
from ..schemas import EstimatorResult, ExperimentConfig, RunManifest, config_hash
from .recipes import recipe_path

MANIFEST = "manifest.json"


def load_config(source: str) -> ExperimentConfig:
    """Parse a config file, or a bundled recipe when ``source`` names one."""
    path = Path(source)
    if not path.is_file():
        path = recipe_path(source) or path
    return ExperimentConfig.model_validate_json(path.read_text(encoding="utf-8"))


def _write_manifest(out_dir: Path, manifest: RunManifest) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / MANIFEST).write_text(manifest.model_dump_json(indent=2), encoding="utf-8")


def _error_result(spec, exc: Exception) -> EstimatorResult:
    return EstimatorResult(name=spec.name, kind=spec.kind, verdict="error", message=f"{type(exc).__name__}: {exc}")


def _reject(source: str, seed: Optional[int], out: Optional[str], started: float, exc: Exception) -> int:
    out_dir = Path(out) if out else Path(settings.OUTPUT_ROOT) / Path(source).stem
    _write_manifest(
        out_dir,
        RunManifest(
            config_name=Path(source).stem,
            config_hash="",
            version=__version__,
            seed=seed,
            wall_clock=time.perf_counter() - started,
            exit_code=1,
            error=f"{type(exc).__name__}: {exc}",
        ),
    )
    return 1


def run_experiment(
    source: str,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
    out: Optional[str] = None,
) -> int:
    started = time.perf_counter()
    try:
        config = load_config(source)
    except (OSError, ValidationError, ValueError) as exc:
        logger.error("config_rejected", source=source, error=str(exc))
        return _reject(source, seed, out, started, exc)
    except Exception as exc:
        logger.error("config_crashed", source=source, error=repr(exc))
        return _reject(source, seed, out, started, exc)

    effective_seed = seed if seed is not None else config.seed if config.seed is not None else settings.DEFAULT_SEED
    config = config.model_copy(update={"seed": effective_seed})
    n_workers = workers or config.workers or settings.DEFAULT_WORKERS
    out_dir = Path(out or config.output or Path(settings.OUTPUT_ROOT) / config.name)
    digest = config_hash(config)
    meta = {"config_hash": digest, "config": config.name, "seed": effective_seed}
    logger.info("run_started", config=config.name, seed=effective_seed, workers=n_workers, out=str(out_dir))

    shared = None
    shared_error: Optional[Exception] = None
    if config.system is not None:
        try:
            shared = build_system(config.system)
        except Exception as exc:
            shared_error = exc

    results: List[EstimatorResult] = []
    for index, spec in enumerate(config.estimators):
        ctx = RunContext(out_dir, meta, np.random.default_rng([effective_seed, index]), n_workers)
        try:
            if spec.system is not None:
                system = build_system(spec.system)
            elif shared_error is not None:
                raise shared_error
            else:
                system = shared
            if system is None and spec.kind not in SYSTEMLESS:
                raise GlobmixError(f"estimator {spec.name} needs a system and the config declares none")
            result = RUNNERS[spec.kind](spec, system, ctx)
        except (GlobmixError, ValueError, ArithmeticError, OSError) as exc:
            logger.error("estimator_error", estimator=spec.name, error=str(exc))
            result = _error_result(spec, exc)
        except Exception as exc:
            # outside the error hierarchy; still recorded as an error result
            logger.error("estimator_crashed", estimator=spec.name, error=repr(exc))
            result = _error_result(spec, exc)
        logger.info("estimator_finished", estimator=spec.name, verdict=result.verdict)
        results.append(result)

    verdicts = {r.verdict for r in results}
    exit_code = 1 if "error" in verdicts else 2 if "fail" in verdicts else 0
    _write_manifest(
        out_dir,
        RunManifest(
            config_name=config.name,
            config_hash=digest,
            version=__version__,
            seed=effective_seed,
            wall_clock=time.perf_counter() - started,
            exit_code=exit_code,
            results=results,
            files=[name for r in results for name in r.files],
        ),
    )
    logger.info("run_finished", config=config.name, exit_code=exit_code)
    return exit_code


def handle(args: argparse.Namespace) -> int:
    return run_experiment(args.config, args.seed, args.workers, args.out)


def register(subparsers) -> None:
    parser = subparsers.add_parser("run", help="run an experiment config or a bundled recipe")
    parser.add_argument("config", help="path to a JSON config, or a recipe name")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--out", default=None, help="output directory")
    parser.set_defaults(handler=handle)
