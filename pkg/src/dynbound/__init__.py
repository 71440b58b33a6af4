"""dynbound - solve and verify degenerate parabolic flows with a dynamic boundary condition.

The package discretizes a bulk-surface problem on a periodic strip (or an interval
with two boundary points), regularizes the maximal monotone graph by its Yosida
approximation, integrates with implicit Euler and checks the discrete a-priori
bounds along the computed trajectory.

Example:
    >>> from dynbound import ScenarioRunner, load_config
    >>> outcome = ScenarioRunner().run(load_config("heleshaw.env"))
    >>> print(outcome.report.format_summary())
"""

from .config import RunConfig, load_config, parse_config
from .discretization import DiscreteOperators, Interval, Strip, build_operators
from .dual import DualSolverContext
from .estimates import BoundConstants, CheckRecord, EstimateReport, build_report
from .exceptions import (
    ConfigParseError,
    DynboundError,
    ForcingNotMeanZero,
    GraphNotValidated,
    GridTooSmall,
    InvalidParams,
    IterationDiverged,
    MismatchedRuns,
    NegativeIntercept,
    NewtonStalled,
    NotAffineFarField,
    NotMeanZero,
    ShapeMismatch,
    SolverDiverged,
    ValidationError,
    WrongGeometry,
)
from .graphs import GraphPair, MonotoneGraph, make_preset
from .scenarios import ScenarioRunner, single_mode_exact
from .stepper import ImplicitEulerStepper, ProblemData, StepParams, Trajectory, run

__version__ = "0.1.0"

__all__ = [
    # Graphs
    "MonotoneGraph",
    "GraphPair",
    "make_preset",
    # Discretization
    "Strip",
    "Interval",
    "DiscreteOperators",
    "build_operators",
    "DualSolverContext",
    # Time stepping
    "StepParams",
    "ProblemData",
    "Trajectory",
    "ImplicitEulerStepper",
    "run",
    # Estimates
    "BoundConstants",
    "CheckRecord",
    "EstimateReport",
    "build_report",
    # Configuration and scenarios
    "RunConfig",
    "parse_config",
    "load_config",
    "ScenarioRunner",
    "single_mode_exact",
    # Exceptions
    "DynboundError",
    "InvalidParams",
    "NotAffineFarField",
    "NegativeIntercept",
    "GridTooSmall",
    "ShapeMismatch",
    "WrongGeometry",
    "NotMeanZero",
    "ForcingNotMeanZero",
    "SolverDiverged",
    "IterationDiverged",
    "NewtonStalled",
    "GraphNotValidated",
    "MismatchedRuns",
    "ConfigParseError",
    "ValidationError",
]
