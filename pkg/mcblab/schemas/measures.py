from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator


class PointKind(str, Enum):
    """Which part of E = ∂(R+^2) a boundary point occupies."""

    TYPE1 = "type1"     # (m, 0)
    TYPE2 = "type2"     # (0, m)
    ORIGIN = "origin"   # (0, 0)


class Axis(str, Enum):
    """Axis carrying a jump mark."""

    AXIS1 = "axis1"
    AXIS2 = "axis2"


class BoundaryPoint(BaseModel):
    """A point of E, stored as a type flag plus a nonnegative magnitude."""

    model_config = ConfigDict(frozen=True)

    kind: PointKind = Field(..., description="Type1, Type2 or Origin")
    magnitude: float = Field(..., ge=0.0, description="Mass on the occupied axis")

    @model_validator(mode="after")
    def _canonical(self) -> "BoundaryPoint":
        if (self.kind == PointKind.ORIGIN) != (self.magnitude == 0.0):
            raise ValueError(
                "origin must have magnitude 0 and only the origin may have magnitude 0"
            )
        return self

    @classmethod
    def origin(cls) -> "BoundaryPoint":
        return cls(kind=PointKind.ORIGIN, magnitude=0.0)

    @classmethod
    def type1(cls, magnitude: float) -> "BoundaryPoint":
        return cls.from_coords(magnitude, 0.0)

    @classmethod
    def type2(cls, magnitude: float) -> "BoundaryPoint":
        return cls.from_coords(0.0, magnitude)

    @classmethod
    def from_coords(cls, x1: float, x2: float) -> "BoundaryPoint":
        """Build the canonical point from coordinates; one of them must vanish."""
        x1, x2 = float(x1), float(x2)
        if x1 < 0.0 or x2 < 0.0:
            raise ValueError(f"coordinates must be nonnegative, got ({x1}, {x2})")
        if x1 > 0.0 and x2 > 0.0:
            raise ValueError(f"({x1}, {x2}) is interior to the quadrant, not in E")
        if x1 > 0.0:
            return cls(kind=PointKind.TYPE1, magnitude=x1)
        if x2 > 0.0:
            return cls(kind=PointKind.TYPE2, magnitude=x2)
        return cls(kind=PointKind.ORIGIN, magnitude=0.0)

    @property
    def coords(self) -> tuple[float, float]:
        if self.kind == PointKind.TYPE1:
            return (self.magnitude, 0.0)
        if self.kind == PointKind.TYPE2:
            return (0.0, self.magnitude)
        return (0.0, 0.0)

    def as_quadrant(self) -> "QuadrantPoint":
        x1, x2 = self.coords
        return QuadrantPoint(x1=x1, x2=x2)


class QuadrantPoint(BaseModel):
    """A point of the closed quadrant R+^2."""

    model_config = ConfigDict(frozen=True)

    x1: float = Field(..., ge=0.0)
    x2: float = Field(..., ge=0.0)

    @property
    def on_boundary(self) -> bool:
        return self.x1 == 0.0 or self.x2 == 0.0

    def as_tuple(self) -> tuple[float, float]:
        return (self.x1, self.x2)


class JumpMark(BaseModel):
    """A draw from the jump measure: axis plus multiplier."""

    model_config = ConfigDict(frozen=True)

    axis: Axis = Field(..., description="Axis1 keeps the type, Axis2 switches it")
    value: float = Field(..., ge=0.0, description="Dimensionless multiplier")

    @property
    def point(self) -> tuple[float, float]:
        if self.axis == Axis.AXIS1:
            return (self.value, 0.0)
        return (0.0, self.value)


class TruncationWindow(BaseModel):
    """Excluded Axis1 interval (1 - delta, 1 + delta) around the pole."""

    model_config = ConfigDict(frozen=True)

    delta: float = Field(default=1e-3, gt=0.0, lt=1.0)
