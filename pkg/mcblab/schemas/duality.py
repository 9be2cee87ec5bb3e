import math

from pydantic import BaseModel, ConfigDict, Field, field_validator


class ComplexValue(BaseModel):
    """A complex number carried as an explicit (re, im) pair."""

    model_config = ConfigDict(frozen=True)

    re: float = Field(default=0.0)
    im: float = Field(default=0.0)

    @field_validator("re", "im")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("complex components must be finite")
        return value

    @classmethod
    def from_complex(cls, value: complex) -> "ComplexValue":
        return cls(re=float(value.real), im=float(value.imag))

    def to_complex(self) -> complex:
        return complex(self.re, self.im)

    @property
    def modulus(self) -> float:
        return math.hypot(self.re, self.im)
