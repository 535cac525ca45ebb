import math
from typing import ClassVar, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, field_serializer, model_validator

from mixhit.applib.types import HittingConvention


def _finite_or_str(x: float):
    return x if math.isfinite(x) else str(x)


class ContractionProfile(BaseModel):
    """d(t) and d-bar(t) for t = 0..horizon."""
    model_config = ConfigDict(frozen=True)

    horizon: int
    d_values: tuple[float, ...]
    dbar_values: tuple[float, ...]

    @model_validator(mode="after")
    def _check_lengths(self) -> "ContractionProfile":
        if len(self.d_values) != self.horizon + 1 or len(self.dbar_values) != self.horizon + 1:
            raise ValueError("profile length must be horizon + 1")
        return self


class MixingResult(BaseModel):
    """
    Smallest t with d(t) <= epsilon (or d-bar when standardized).
    time is None when the chain is unmixed within the search horizon.
    """
    model_config = ConfigDict(frozen=True)

    epsilon: float
    time: Optional[int]
    profile_used: Optional[ContractionProfile] = None
    standardized: bool = False
    t_max: int

    @property
    def unmixed(self) -> bool:
        return self.time is None


class HittingResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    target_set: tuple[int, ...]
    expected: np.ndarray  # E_x[tau_A] per start x, +inf where the target may be missed
    cdf: np.ndarray       # cdf[x, t] = P_x(tau_A <= t)
    convention: HittingConvention

    @field_serializer("expected")
    def _serialize_expected(self, e: np.ndarray) -> list:
        return [_finite_or_str(float(x)) for x in e]

    @field_serializer("cdf")
    def _serialize_cdf(self, c: np.ndarray) -> list[list[float]]:
        return c.tolist()

    @property
    def horizon(self) -> int:
        return int(self.cdf.shape[1] - 1)


class MaxHittingTime(BaseModel):
    model_config = ConfigDict(frozen=True)

    t_H: float
    witness_set: tuple[int, ...]
    witness_start: int
    n_sets: int
    lower_bound: bool = False  # set when only a caller-supplied family was searched

    @field_serializer("t_H")
    def _serialize_t_h(self, t: float):
        return _finite_or_str(t)


class EasyDirectionCertificate(BaseModel):
    """Intermediate quantities of the constructive bound l_H(alpha) <= 2 k0 C t_L."""
    model_config = ConfigDict(frozen=True)

    alpha: float
    C: int
    k0: int
    t_L: Optional[int]
    T: Optional[int] = None
    d_at_T: Optional[float] = None
    d_ok: Optional[bool] = None
    l_H: Optional[float] = None
    t_H: Optional[float] = None
    bound: Optional[int] = None
    passed: Optional[bool] = None
    vacuous: bool = False

    @property
    def ok(self) -> bool:
        return self.vacuous or bool(self.passed)


class EquivalenceReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    chain_id: str
    n: int
    alpha: float
    epsilon: float
    t_m: MixingResult
    t_bar_m: MixingResult
    t_L: MixingResult
    t_H: float
    tau_g: int
    witness_set: tuple[int, ...]
    witness_start: int
    ratio: Optional[float]  # t_L / max(t_H, 1); None when the chain or its lazy version is unmixed
    unmixed: bool
    reversible: bool
    maxlarge_ok: bool
    mixequivalent_ok: bool
    certificate: EasyDirectionCertificate

    CSV_COLUMNS: ClassVar[tuple[str, ...]] = (
        "chain_id", "n", "alpha", "t_m", "t_bar_m", "t_L", "t_H", "tau_g", "ratio", "maxlarge_ok", "certificate_ok",
    )

    def csv_row(self) -> dict:
        def _time(r: MixingResult):
            return "unmixed" if r.time is None else r.time

        return {
            "chain_id": self.chain_id,
            "n": self.n,
            "alpha": self.alpha,
            "t_m": _time(self.t_m),
            "t_bar_m": _time(self.t_bar_m),
            "t_L": _time(self.t_L),
            "t_H": self.t_H,
            "tau_g": self.tau_g,
            "ratio": "undefined" if self.ratio is None else self.ratio,
            "maxlarge_ok": self.maxlarge_ok,
            "certificate_ok": self.certificate.ok,
        }
