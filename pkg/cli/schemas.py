"""
Experiment configuration, per-estimator results and the run manifest.

Every model rejects unknown keys.
"""
import hashlib
import json
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from estimators.reports import MlltWindow
from oracles.sde import SdeConfig


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class WalkSystem(_Strict):
    kind: Literal["random_walk"]
    law: Literal["simple", "lazy", "drift", "deterministic", "nearest_neighbour"] = "lazy"
    d: int = Field(1, ge=1)
    drift: int = 1
    step: List[int] = [1]
    seed: int = 7
    period: Optional[int] = Field(None, ge=1)


class BilliardSystem(_Strict):
    kind: Literal["lorentz", "lorentz_flow", "galton"]
    config: Literal["reference", "single_disk", "half_strip", "galton"] = "reference"
    radius: float = Field(0.4, gt=0.0)
    removed: List[Tuple[List[int], int]] = []
    field: Literal["none", "thermostat", "gravity", "coulomb"] = "none"
    E: List[float] = [0.1, 0.0]
    g: float = Field(1.0, gt=0.0)
    H: float = 1.0
    e: float = 0.01
    T: float = Field(1.0, gt=0.0)


class WallSystem(_Strict):
    kind: Literal["pingpong", "bouncing_flow"]
    profile: Literal["corner", "shallow", "parabolic", "triangle", "file"] = "corner"
    beta: float = 1.0
    slope: float = 0.2
    path: Optional[str] = None
    g: float = Field(1.0, gt=0.0)
    T: float = Field(0.5, gt=0.0)
    base_band: int = Field(50, ge=1)


SystemSpec = Annotated[Union[WalkSystem, BilliardSystem, WallSystem], Field(discriminator="kind")]

EstimatorKind = Literal[
    "covariance",
    "mllt",
    "local_global",
    "global_global",
    "escape",
    "galton_energy",
    "finite_horizon",
    "invariance",
    "pingpong_approx",
    "bounce_nonmixing",
    "sde_consistency",
]


class EstimatorSpec(_Strict):
    kind: EstimatorKind
    label: Optional[str] = None
    system: Optional[SystemSpec] = None
    n: int = Field(64, ge=1)
    n_list: List[int] = []
    N: int = Field(10_000, ge=1)
    window: Optional[MlltWindow] = None
    exact_oracle: bool = False
    psi1: Optional[str] = None
    psi2: Optional[str] = None
    apriori_constant: Optional[float] = None
    threshold: Optional[float] = None
    phi: str = "cell0"
    Phi: str = "const1"
    Phi2: Optional[str] = None
    sizes: List[int] = []
    centers: List[List[int]] = []
    require_decreasing: bool = False
    R: float = Field(5.0, ge=0.0)
    max_fraction: Optional[float] = None
    tolerance: Optional[float] = None
    levels: List[float] = []
    t_grid: List[float] = [0.0, 0.25, 0.5, 0.75, 1.0]
    sigma_bar: Optional[float] = Field(None, gt=0.0)
    sigma_steps: int = Field(200, ge=1)
    reference_N: int = Field(100_000, ge=1)
    sde: Optional[SdeConfig] = None
    expect_pass: bool = True
    bins: int = Field(32, ge=2)
    # collisions the invariance runner dumps next to its report; 0 skips the dump
    trajectory_events: int = Field(200, ge=0)
    quadrature_points: int = Field(200_000, ge=1000)

    @property
    def name(self) -> str:
        return self.label or self.kind


class ExperimentConfig(_Strict):
    name: str = Field(..., pattern=r"^[A-Za-z0-9_.-]+$")
    description: str = ""
    system: Optional[SystemSpec] = None
    estimators: List[EstimatorSpec] = Field(..., min_length=1)
    seed: Optional[int] = Field(None, ge=0)
    workers: Optional[int] = Field(None, ge=1)
    output: Optional[str] = None

    @model_validator(mode="after")
    def _unique_names(self):
        names = [e.name for e in self.estimators]
        clashes = sorted({n for n in names if names.count(n) > 1})
        if clashes:
            raise ValueError(f"estimator names must be unique, label the repeats of {clashes}")
        return self


class EstimatorResult(_Strict):
    name: str
    kind: str
    verdict: Literal["pass", "fail", "error"]
    message: str = ""
    files: List[str] = []
    summary: Dict[str, Any] = {}


class RunManifest(_Strict):
    config_name: str
    config_hash: str
    version: str
    seed: Optional[int] = None
    wall_clock: float = 0.0
    exit_code: int
    error: Optional[str] = None
    results: List[EstimatorResult] = []
    files: List[str] = []


def config_hash(config: ExperimentConfig) -> str:
    """sha256 of the canonical JSON of the config; worker count and output location do not enter."""
    payload = config.model_dump(mode="json", exclude={"workers", "output"})
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
