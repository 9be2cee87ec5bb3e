from pydantic import BaseModel, ConfigDict, Field


class DiffusionState(BaseModel):
    """State of the limiting total-mass diffusion."""

    model_config = ConfigDict(frozen=True)

    z1: float = Field(..., ge=0.0)
    z2: float = Field(..., ge=0.0)

    def as_tuple(self) -> tuple[float, float]:
        return (self.z1, self.z2)


class GammaParams(BaseModel):
    """Parameters of the finite-rate MCB(gamma) Euler scheme."""

    gamma: float = Field(..., gt=0.0, description="Branching rate")
    h: float = Field(default=1e-3, gt=0.0, description="Euler step size")
    seed: int = Field(default=2017, ge=0, lt=2**64)
