"""
Experiment Schemas

The batch-run configuration, its canonical text form and the hash that
stamps every artifact.
"""

import hashlib
from enum import Enum
from typing import Any, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from .dynamics import RecordMode, Scheme
from .measures import QuadrantPoint


class ProcessKind(str, Enum):
    MCB_INFINITY = "mcb_infinity"
    MCB_GAMMA = "mcb_gamma"
    LIMIT_DIFFUSION = "limit_diffusion"
    Y_THETA = "y_theta"


class HorizonUnit(str, Enum):
    MODEL = "model"         # unrescaled model time
    RESCALED = "rescaled"   # multiples of beta^N = N / log N


class InitialKind(str, Enum):
    HALF_HALF = "half_half"
    EXPLICIT = "explicit"
    HARMONIC = "harmonic"   # every site drawn from Q_theta


class SuiteName(str, Enum):
    NONE = "none"
    THEOREM0 = "theorem0"
    THEOREM1 = "theorem1"
    THEOREM2 = "theorem2"
    ACCEPTANCE = "acceptance"


def _split_list(value: Any) -> Any:
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


class RunSection(BaseModel):
    """Which process to simulate and how."""

    process: ProcessKind = Field(default=ProcessKind.MCB_INFINITY)
    n_sites: int = Field(default=10, ge=1)
    gamma: Optional[float] = Field(default=None, gt=0.0)
    scheme: Optional[Scheme] = Field(default=None)
    h: float = Field(default=0.01, gt=0.0)
    delta: Optional[float] = Field(default=None, gt=0.0, lt=1.0)
    horizon: float = Field(default=1.0, ge=0.0)
    horizon_unit: HorizonUnit = Field(default=HorizonUnit.MODEL)
    replicas: int = Field(default=1, ge=1)
    master_seed: int = Field(default=2017, ge=0, lt=2**64)
    block_size: int = Field(default=64, ge=1)
    record_mode: RecordMode = Field(default=RecordMode.TOTALS_ONLY)
    record_every: int = Field(default=1, ge=1)


class InitialCondition(BaseModel):
    """How the initial configuration is built."""

    kind: InitialKind = Field(default=InitialKind.HALF_HALF)
    magnitude: float = Field(default=1.0, ge=0.0)
    sites: list[tuple[float, float]] = Field(default_factory=list)
    theta: Optional[QuadrantPoint] = Field(default=None)

    @field_validator("sites", mode="before")
    @classmethod
    def _parse_sites(cls, value: Any) -> Any:
        value = _split_list(value)
        if isinstance(value, list):
            parsed = []
            for item in value:
                if isinstance(item, str):
                    x1, x2 = item.split(":")
                    parsed.append((float(x1), float(x2)))
                else:
                    parsed.append(item)
            return parsed
        return value

    @field_validator("theta", mode="before")
    @classmethod
    def _parse_theta(cls, value: Any) -> Any:
        if isinstance(value, str):
            x1, x2 = value.split(":")
            return {"x1": float(x1), "x2": float(x2)}
        return value


class SuiteSection(BaseModel):
    """Optional harness to run instead of a plain simulation."""

    name: SuiteName = Field(default=SuiteName.NONE)
    n_grid: list[int] = Field(default_factory=lambda: [32, 128, 512])
    gamma_grid: list[float] = Field(default_factory=lambda: [10.0, 50.0, 200.0])
    t: float = Field(default=1.0, gt=0.0)
    quick: bool = Field(default=False)

    _split_grids = field_validator("n_grid", "gamma_grid", mode="before")(
        classmethod(lambda cls, value: _split_list(value))
    )


class OutputSection(BaseModel):
    out_dir: str = Field(default="mcblab-out")
    plots: bool = Field(default=True)


class ExperimentConfig(BaseModel):
    """Complete description of one batch run."""

    run: RunSection = Field(default_factory=RunSection)
    initial: InitialCondition = Field(default_factory=InitialCondition)
    suite: SuiteSection = Field(default_factory=SuiteSection)
    output: OutputSection = Field(default_factory=OutputSection)

    @model_validator(mode="after")
    def _consistent(self) -> "ExperimentConfig":
        run = self.run
        if (run.process == ProcessKind.MCB_GAMMA) != (run.gamma is not None):
            raise ValueError("run.gamma is required iff run.process = mcb_gamma")
        tau_leap = run.process == ProcessKind.MCB_INFINITY and run.scheme == Scheme.TAU_LEAP
        if tau_leap != (run.delta is not None):
            raise ValueError("run.delta is required iff run.scheme = tau_leap")
        if self.initial.kind == InitialKind.EXPLICIT and len(self.initial.sites) != run.n_sites:
            raise ValueError("initial.sites must list exactly run.n_sites points")
        if self.initial.kind == InitialKind.HARMONIC and self.initial.theta is None:
            raise ValueError("initial.theta is required for harmonic initial conditions")
        if sorted(self.suite.n_grid) != list(self.suite.n_grid):
            raise ValueError("suite.n_grid must be increasing")
        if sorted(self.suite.gamma_grid) != list(self.suite.gamma_grid):
            raise ValueError("suite.gamma_grid must be increasing")
        return self

    def canonical_text(self) -> str:
        """Sorted `key = value` lines per sorted section; independent of field order."""
        lines: list[str] = []
        dumped = self.model_dump(mode="python")
        for section in sorted(dumped):
            lines.append(f"[{section}]")
            for key in sorted(dumped[section]):
                value = dumped[section][key]
                if value is None:
                    continue
                lines.append(f"{key} = {_render(value)}")
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode("utf-8")).hexdigest()[:16]


def _render(value: Any) -> str:
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, dict):
        return ":".join(_render(value[k]) for k in sorted(value))
    if isinstance(value, (list, tuple)):
        return ", ".join(
            ":".join(_render(v) for v in item) if isinstance(item, (list, tuple)) else _render(item)
            for item in value
        )
    return str(value)
