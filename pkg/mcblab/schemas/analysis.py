from enum import Enum
from typing import Any

from pydantic import BaseModel, Field, model_validator


class Verdict(str, Enum):
    PASS = "pass"
    FAIL = "fail"


class HeuristicRates(BaseModel):
    """Large-jump and quadratic-variation rates of the half/half configuration."""

    large_jump_rate_case1: float = Field(..., ge=0.0)
    large_jump_rate_case2: float = Field(..., ge=0.0)
    qv_rate_case1: float = Field(..., ge=0.0)
    qv_rate_case2: float = Field(..., ge=0.0)
    qv_asymptotic_case1: float = Field(
        default=0.0, description="(1/log N) z1 z2 (4/pi) log(eps N / (2 z1))"
    )
    qv_asymptotic_case2: float = Field(
        default=0.0, description="(1/log N) z1 z2 (4/pi) log(eps N / (2 z2))"
    )


class TestReport(BaseModel):
    """Outcome of one statistical or closed-form check."""

    __test__ = False  # not a pytest test class

    name: str = Field(..., description="Check identifier")
    statistic: float = Field(..., description="Observed value")
    threshold: float = Field(..., description="Pass iff statistic <= threshold")
    n: int = Field(default=0, ge=0, description="Sample count")
    verdict: Verdict
    metadata: dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _consistent(self) -> "TestReport":
        expected = Verdict.PASS if self.statistic <= self.threshold else Verdict.FAIL
        if self.verdict != expected:
            raise ValueError("verdict must be pass iff statistic <= threshold")
        return self

    @classmethod
    def judge(
        cls, name: str, statistic: float, threshold: float, n: int = 0, **metadata: Any
    ) -> "TestReport":
        statistic, threshold = float(statistic), float(threshold)
        verdict = Verdict.PASS if statistic <= threshold else Verdict.FAIL
        return cls(
            name=name,
            statistic=statistic,
            threshold=threshold,
            n=n,
            verdict=verdict,
            metadata=metadata,
        )

    @property
    def passed(self) -> bool:
        return self.verdict == Verdict.PASS
