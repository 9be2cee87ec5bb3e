from .replicas import ReplicaRunner
from .dynamics import MeanFieldSimulator, simulate, simulate_batch
from .suites import SuiteResult, acceptance_battery, theorem0_suite, theorem1_suite, theorem2_suite

__all__ = [
    "ReplicaRunner",
    "MeanFieldSimulator",
    "simulate",
    "simulate_batch",
    "SuiteResult",
    "acceptance_battery",
    "theorem0_suite",
    "theorem1_suite",
    "theorem2_suite",
]
