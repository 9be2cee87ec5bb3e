from .measures import (
    PointKind,
    Axis,
    BoundaryPoint,
    QuadrantPoint,
    JumpMark,
    TruncationWindow,
)
from .dynamics import (
    Scheme,
    RecordMode,
    SimParams,
    SystemState,
    JumpEvent,
    PathRecord,
    BatchPath,
)
from .reference import DiffusionState, GammaParams
from .duality import ComplexValue
from .analysis import Verdict, HeuristicRates, TestReport
from .experiment import (
    ProcessKind,
    HorizonUnit,
    InitialKind,
    SuiteName,
    RunSection,
    InitialCondition,
    SuiteSection,
    OutputSection,
    ExperimentConfig,
)

__all__ = [
    "PointKind",
    "Axis",
    "BoundaryPoint",
    "QuadrantPoint",
    "JumpMark",
    "TruncationWindow",
    "Scheme",
    "RecordMode",
    "SimParams",
    "SystemState",
    "JumpEvent",
    "PathRecord",
    "BatchPath",
    "DiffusionState",
    "GammaParams",
    "ComplexValue",
    "Verdict",
    "HeuristicRates",
    "TestReport",
    "ProcessKind",
    "HorizonUnit",
    "InitialKind",
    "SuiteName",
    "RunSection",
    "InitialCondition",
    "SuiteSection",
    "OutputSection",
    "ExperimentConfig",
]
