from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from mixhit.applib.types import ProbeFlavor


class McEstimate(BaseModel):
    """
    A Monte Carlo point estimate with a symmetric confidence halfwidth.
    When n_censored > 0 some runs were cut at the horizon and the point is a lower bound.
    """
    model_config = ConfigDict(frozen=True)

    point: float
    halfwidth: float = Field(ge=0.0)
    confidence: float = Field(gt=0.0, lt=1.0)
    n_samples: int = Field(ge=0)
    n_censored: int = Field(default=0, ge=0)

    @property
    def lower(self) -> float:
        return self.point - self.halfwidth

    @property
    def upper(self) -> float:
        return self.point + self.halfwidth

    @property
    def is_lower_bound(self) -> bool:
        return self.n_censored > 0

    def covers(self, value: float, widths: float = 1.0) -> bool:
        return abs(self.point - value) <= widths * self.halfwidth


class LargeHittingEstimate(BaseModel):
    """Empirical tau_g over a probed set family; an estimate over that family only."""
    model_config = ConfigDict(frozen=True)

    time: Optional[int]
    threshold: float
    alpha: float
    n_members: int
    n_starts: int
    n_samples: int
    worst_lower_bound: Optional[float] = None  # Wilson lower bound of the worst (start, set) pair at `time`


class ProbeResult(BaseModel):
    """Bad-event frequency of a coupon/ASF probe next to the analytic bound at the same parameters."""
    model_config = ConfigDict(frozen=True)

    flavor: ProbeFlavor
    d: int
    k: int
    estimate: McEstimate
    bound: float
    intermediate_bound: Optional[float] = None
    gamma: Optional[float] = None

    @property
    def passed(self) -> bool:
        return self.estimate.point - 3.0 * self.estimate.halfwidth <= self.bound
