from datetime import datetime
import math
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from mixhit.applib.types import ExperimentName, ZooKind


class ZooSpec(BaseModel):
    """One catalog chain: a kind plus its parameters, e.g. cycle(8) or birth_death(1,2,1)."""
    model_config = ConfigDict(frozen=True)

    kind: ZooKind
    n: Optional[int] = None          # cycle, ehrenfest, random_reversible, lazy_uniform
    d: Optional[int] = None          # hypercube
    weights: Optional[tuple[float, ...]] = None  # birth_death
    seed: Optional[int] = None       # random_reversible

    @property
    def chain_id(self) -> str:
        match self.kind:
            case ZooKind.FLIP:
                return "flip"
            case ZooKind.HYPERCUBE:
                return f"hypercube({self.d})"
            case ZooKind.BIRTH_DEATH:
                return "birth_death(" + ",".join(f"{w:g}" for w in self.weights or ()) + ")"
            case ZooKind.RANDOM_REVERSIBLE:
                return f"random_reversible({self.n},{self.seed})"
            case _:
                return f"{self.kind.value}({self.n})"


class AuditRecord(BaseModel):
    """One checked inequality: ok iff lhs <= rhs (with the check's slack)."""
    model_config = ConfigDict(frozen=True)

    check: str
    chain_id: str
    lhs: Optional[float]
    rhs: Optional[float]
    ok: bool
    detail: str = ""


# === Experiment configuration (TOML) ===

class SeedsSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seed: int = 0


class ChainsSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    zoo: list[str] = Field(default_factory=list)  # zoo spec strings; empty means the default zoo
    max_states: int = Field(default=16, ge=1)


class ExperimentSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: ExperimentName
    alphas: list[float] = Field(default_factory=lambda: [0.25])
    epsilon: float = Field(default=0.25, gt=0.0, lt=1.0)
    n_samples: int = Field(default=100_000, ge=1)
    ks: list[int] = Field(default_factory=list)
    dims: list[int] = Field(default_factory=list)
    threshold: float = 0.9
    max_states: Optional[int] = Field(default=None, ge=1)  # only chains this small take part
    dump_trajectories: bool = False


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seeds: SeedsSection = Field(default_factory=SeedsSection)
    chains: ChainsSection = Field(default_factory=ChainsSection)
    experiments: list[ExperimentSection] = Field(default_factory=list)


# === Run outputs ===

class ExperimentOutput(BaseModel):
    name: ExperimentName
    index: int
    ok: bool
    files: list[str] = Field(default_factory=list)
    error: Optional[str] = None
    audit_failures: int = 0


class RunManifest(BaseModel):
    config_hash: str
    seed: int
    version: str
    timestamp: datetime
    outputs: list[ExperimentOutput] = Field(default_factory=list)
    extra: dict[str, Any] = Field(default_factory=dict)

    @property
    def audit_failed(self) -> bool:
        return any(o.audit_failures for o in self.outputs)


# === Experiment results ===

class Table(BaseModel):
    columns: list[str]
    rows: list[dict[str, Any]] = Field(default_factory=list)

    @field_validator("rows")
    @classmethod
    def _spell_non_finite(cls, rows: list[dict[str, Any]]) -> list[dict[str, Any]]:
        # JSON has no infinities; keep them as the same text the CSV cells use
        def cell(v):
            if isinstance(v, float) and not math.isfinite(v):
                return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
            return v

        return [{k: cell(v) for k, v in row.items()} for row in rows]


class PlotPoint(BaseModel):
    x: float
    y: float
    series: str


class ExperimentResult(BaseModel):
    name: ExperimentName
    index: int
    tables: dict[str, Table] = Field(default_factory=dict)
    plots: dict[str, list[PlotPoint]] = Field(default_factory=dict)
    audit_failures: int = 0
    headline: Optional[str] = None

    @property
    def stem(self) -> str:
        return f"{self.index:02d}-{self.name.value}"
