from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator


class CovarianceEstimate(BaseModel):
    n: int
    samples: int
    dropped: int = 0
    drift: List[float]
    drift_se: List[float]
    covariance: List[List[float]]
    covariance_se: List[List[float]]
    degenerate_axes: List[int] = []
    psd_within_se: bool = True


class MlltWindow(BaseModel):
    """Cells compared in rescaled coordinates (z - shift) / L_n."""
    model_config = ConfigDict(extra="forbid")

    scale: Optional[float] = Field(None, gt=0.0)
    K: float = Field(3.0, gt=0.0)
    R: float = Field(3.0, gt=0.0)
    eps: float = Field(0.0, ge=0.0)
    exclusion: List[Tuple[List[float], List[float]]] = []
    shift: str = Field("zero", pattern="^(zero|drift)$")

    @model_validator(mode="after")
    def _check_exclusion(self):
        for lo, hi in self.exclusion:
            if len(lo) != len(hi) or any(a > b for a, b in zip(lo, hi)):
                raise ValueError(f"malformed exclusion box {lo}..{hi}")
            if any(max(abs(a), abs(b)) > self.R for a, b in zip(lo, hi)):
                raise ValueError(f"exclusion box {lo}..{hi} leaves the ball |z| <= {self.R}")
        return self

    @classmethod
    def almost(cls, eps: float, dim: int, R: float = 3.0, **kwargs) -> "MlltWindow":
        """Window with the exceptional set B = {0}: one box of side 2 eps at the origin."""
        return cls(eps=eps, R=R, exclusion=[([-eps] * dim, [eps] * dim)], **kwargs)

    def scale_for(self, n: int) -> float:
        return self.scale if self.scale is not None else float(n) ** 0.5

    def excluded_volume(self) -> float:
        total = 0.0
        for lo, hi in self.exclusion:
            volume = 1.0
            for a, b in zip(lo, hi):
                volume *= b - a
            total += volume
        return total

    def excludes(self, point) -> bool:
        return any(all(a <= p <= b for p, a, b in zip(point, lo, hi)) for lo, hi in self.exclusion)


class MlltCell(BaseModel):
    cell: List[int]
    rescaled: List[float]
    empirical: float
    reference: float
    se: float
    resolved: bool
    excluded: bool


class MlltReport(BaseModel):
    system: str
    n: int
    samples: int
    dropped: int
    scale: float
    period: int
    shift: List[float]
    covariance: List[List[float]]
    nu_psi1: float
    nu_psi2: float
    total_mass: float
    apriori_max: float
    apriori_bound_ok: Optional[bool] = None
    excluded_volume: float
    sup_relative_deviation: float
    threshold: float
    verdict: str
    cells: List[MlltCell]


class CorrelationPoint(BaseModel):
    n: int
    estimate: float
    se: float


class CorrelationCurve(BaseModel):
    observable: str
    target: float
    points: List[CorrelationPoint]
    tolerance: float
    verdict: str
    dropped: int = 0


class CubeMixCell(BaseModel):
    n: int
    size: int
    center: List[int]
    estimate: float
    se: float


class CubeMixReport(BaseModel):
    target: float
    centering: str
    cells: List[CubeMixCell]
    origin_deviation: float
    uniform_deviation: float
    se_at_largest: float
    tolerance: float
    verdict: str
    dropped: int = 0


class EscapePoint(BaseModel):
    n: int
    fraction: float
    se: float


class EscapeReport(BaseModel):
    R: float
    initial: str
    samples: int
    dropped: int
    points: List[EscapePoint]
    decreasing: bool
