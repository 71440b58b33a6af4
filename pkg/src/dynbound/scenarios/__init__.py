"""Scenario orchestration: single runs, studies and manufactured solutions."""

from .manufactured import (
    ConvergenceTable,
    ManufacturedCase,
    convergence_study,
    single_mode_exact,
)
from .runner import RunOutcome, Scenario, ScenarioRunner, VerifyOutcome, prepare_scenario
from .studies import StudyOutcome, contraction_pair, sweep_lambda

__all__ = [
    "ScenarioRunner",
    "Scenario",
    "RunOutcome",
    "VerifyOutcome",
    "prepare_scenario",
    "ManufacturedCase",
    "ConvergenceTable",
    "single_mode_exact",
    "convergence_study",
    "StudyOutcome",
    "sweep_lambda",
    "contraction_pair",
]
