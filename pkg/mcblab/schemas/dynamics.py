"""
Dynamics Schemas

Simulation parameters (pydantic) and the numpy-backed state and path
containers used on the hot path (dataclasses).
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field

from .measures import BoundaryPoint, JumpMark, TruncationWindow


class Scheme(str, Enum):
    """Numerical schemes for the MCB(inf) system."""

    TAU_LEAP = "tau_leap"
    HARMONIC_SPLIT = "harmonic_split"


class RecordMode(str, Enum):
    """What a simulation keeps besides the time grid."""

    TOTALS_ONLY = "totals_only"
    FULL_CONFIG = "full_config"
    JUMP_LOG = "jump_log"


class SimParams(BaseModel):
    """Parameters of one MCB(inf) simulation."""

    scheme: Scheme = Field(default=Scheme.HARMONIC_SPLIT)
    h: float = Field(default=0.01, gt=0.0, description="Step size in model time")
    window: TruncationWindow = Field(default_factory=TruncationWindow)
    horizon: float = Field(default=1.0, ge=0.0, description="Horizon in model time")
    seed: int = Field(default=2017, ge=0, lt=2**64)
    record_mode: RecordMode = Field(default=RecordMode.TOTALS_ONLY)
    record_every: int = Field(default=1, ge=1, description="Record every k-th step")
    recompute_period: int = Field(
        default=10_000, ge=1, description="Steps between full recomputations of the totals"
    )
    jump_log_threshold: float = Field(
        default=0.0,
        ge=0.0,
        description="JumpLog keeps only jumps moving a total mass by at least this much",
    )

    @property
    def n_steps(self) -> int:
        return max(1, int(np.ceil(self.horizon / self.h - 1e-9))) if self.horizon > 0 else 0


@dataclass
class SystemState:
    """Configuration of N sites in E with cached means and clock.

    `coords` has shape (N, 2); every row has at least one zero entry.
    """

    coords: np.ndarray
    z: np.ndarray
    clock: float = 0.0
    steps_since_recompute: int = 0

    @classmethod
    def from_coords(cls, coords, clock: float = 0.0) -> "SystemState":
        arr = np.array(coords, dtype=float).reshape(-1, 2)
        return cls(coords=arr, z=arr.mean(axis=0), clock=clock)

    @classmethod
    def from_sites(cls, sites: list[BoundaryPoint], clock: float = 0.0) -> "SystemState":
        return cls.from_coords([site.coords for site in sites], clock=clock)

    @classmethod
    def half_half(cls, n_sites: int, magnitude: float = 1.0) -> "SystemState":
        """First half Type1, second half Type2, all with the same magnitude."""
        coords = np.zeros((n_sites, 2))
        half = n_sites // 2
        coords[:half, 0] = magnitude
        coords[half:, 1] = magnitude
        return cls.from_coords(coords)

    @property
    def n_sites(self) -> int:
        return self.coords.shape[0]

    @property
    def z1(self) -> float:
        return float(self.z[0])

    @property
    def z2(self) -> float:
        return float(self.z[1])

    @property
    def sites(self) -> list[BoundaryPoint]:
        return [BoundaryPoint.from_coords(x1, x2) for x1, x2 in self.coords]

    def recompute_totals(self) -> None:
        self.z = self.coords.mean(axis=0)
        self.steps_since_recompute = 0

    def copy(self) -> "SystemState":
        return SystemState(
            coords=self.coords.copy(),
            z=self.z.copy(),
            clock=self.clock,
            steps_since_recompute=self.steps_since_recompute,
        )


@dataclass(frozen=True)
class JumpEvent:
    """One applied jump: when, where, which mark and the resulting displacement."""

    time: float
    site: int
    mark: JumpMark
    displacement: tuple[float, float]
    replica: int = 0


@dataclass
class PathRecord:
    """Time-stamped totals and optional site snapshots / jump events of one run."""

    times: np.ndarray
    totals: np.ndarray
    n_sites: int
    snapshots: Optional[np.ndarray] = None
    events: Optional[list[JumpEvent]] = None
    time_scale: float = 1.0
    replica: int = 0

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.totals = np.asarray(self.totals, dtype=float).reshape(-1, 2)
        if self.times.shape[0] != self.totals.shape[0]:
            raise ValueError("times and totals have inconsistent lengths")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if self.snapshots is not None and self.snapshots.shape[0] != self.times.shape[0]:
            raise ValueError("times and snapshots have inconsistent lengths")

    @property
    def model_times(self) -> np.ndarray:
        """Unrescaled model times of the samples."""
        return self.times * self.time_scale

    @property
    def has_jump_log(self) -> bool:
        return self.events is not None


@dataclass
class BatchPath:
    """Totals of B replicas on a shared time grid; the vectorised PathRecord."""

    times: np.ndarray
    totals: np.ndarray  # (B, T, 2)
    n_sites: int
    final_coords: Optional[np.ndarray] = None  # (B, N, 2)
    snapshots: Optional[np.ndarray] = None  # (B, T, N, 2)
    events: Optional[list[JumpEvent]] = None
    max_coordinate: Optional[np.ndarray] = None  # (B,)
    first_replica: int = 0
    time_scale: float = 1.0
    extras: dict = field(default_factory=dict)

    @property
    def n_replicas(self) -> int:
        return self.totals.shape[0]

    def record(self, b: int) -> PathRecord:
        """Extract replica `b` as a PathRecord."""
        events = None
        if self.events is not None:
            replica = self.first_replica + b
            events = [e for e in self.events if e.replica == replica]
        return PathRecord(
            times=self.times,
            totals=self.totals[b],
            n_sites=self.n_sites,
            snapshots=None if self.snapshots is None else self.snapshots[b],
            events=events,
            time_scale=self.time_scale,
            replica=self.first_replica + b,
        )
