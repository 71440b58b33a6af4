"""Multi-run studies: lambda sweeps and contraction pairs."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..config import RunConfig
from ..estimates import (
    EstimateReport,
    LambdaCauchyTable,
    check_contraction,
    lambda_cauchy_study,
)
from ..exceptions import ValidationError
from ..utils import CONFIG_FILE, REPORT_FILE, ensure_run_directory, write_json, write_table
from .runner import Scenario, prepare_scenario, report_for, run_prepared

logger = logging.getLogger(__name__)

LAMBDA_TABLE_FILE = "lambda_table.csv"
CONTRACTION_FILE = "contraction.csv"


@dataclass
class StudyOutcome:
    """Directory, reports and summary of one study."""

    directory: Path
    reports: list[EstimateReport]
    summary: str
    payload: dict[str, Any] = field(default_factory=dict)

    @property
    def structural_ok(self) -> bool:
        return all(report.structural_ok for report in self.reports)

    @property
    def exit_code(self) -> int:
        return 0 if self.structural_ok else 1


def parse_lambdas(text: str) -> list[float]:
    """Comma-separated lambda values.

    Raises:
        ValidationError: On a value that is not a number.
    """
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ValidationError(f"invalid lambda list '{text}': {e}") from e


def parse_seeds(text: str) -> tuple[int, int]:
    """Two comma-separated seeds.

    Raises:
        ValidationError: Unless exactly two distinct integer seeds are given.
    """
    try:
        seeds = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ValidationError(f"invalid seed list '{text}': {e}") from e
    if len(seeds) != 2:
        raise ValidationError(f"contraction needs exactly two seeds, got {len(seeds)}")
    return seeds[0], seeds[1]


def sweep_lambda(
    config: RunConfig,
    lambdas: Sequence[float],
    *,
    root: Path,
    workers: int = 1,
) -> StudyOutcome:
    """Run the config for each lambda and tabulate consecutive dual distances.

    Every run is also checked on its own; one report per lambda is written under
    ``lambda_<index>/``.

    Args:
        config: Validated configuration; its lambda is replaced.
        lambdas: At least three strictly decreasing values.
        root: Output root.
        workers: Threads for the independent runs.

    Raises:
        ValidationError: If the lambda list is unsuitable.
    """
    scenario = prepare_scenario(config)
    table, trajectories = lambda_cauchy_study(
        scenario.data,
        scenario.params,
        scenario.ops,
        scenario.ctx,
        lambdas,
        workers=workers,
        project_forcing=scenario.project_forcing,
    )
    directory = ensure_run_directory(
        root, config.output.directory, f"sweep_{config.graph.preset}"
    )
    (directory / CONFIG_FILE).write_text(config.to_text(), encoding="utf-8")

    reports = []
    for index, (lam, traj) in enumerate(zip(table.lambdas, trajectories)):
        swept = prepare_scenario(config.with_entries({"run.lambda": repr(lam)}))
        report = report_for(swept, traj)
        sub = directory / f"lambda_{index}"
        sub.mkdir(exist_ok=True)
        write_json(sub / REPORT_FILE, report.to_dict())
        reports.append(report)

    write_table(
        directory / LAMBDA_TABLE_FILE,
        ("lambda", "next_lambda", "distance", "ratio"),
        _lambda_rows(table),
    )
    write_json(directory / "lambda_table.json", table.to_dict())
    logger.info("lambda sweep written to %s", directory)
    return StudyOutcome(
        directory=directory,
        reports=reports,
        summary=table.format_summary(),
        payload={"lambda_table": table.to_dict()},
    )


def _lambda_rows(table: LambdaCauchyTable) -> np.ndarray:
    ratios = [np.nan, *table.ratios]
    return np.array(
        [
            [table.lambdas[k], table.lambdas[k + 1], d, ratios[k]]
            for k, d in enumerate(table.distances)
        ],
        dtype=float,
    )


def contraction_pair(
    config: RunConfig,
    seeds: tuple[int, int],
    *,
    root: Path,
    workers: int = 1,
) -> StudyOutcome:
    """Run two random initial data under identical forcing and check the dual distance.

    Args:
        config: Configuration with ``initial.profile = random_mean_zero``.
        seeds: Two distinct initial-data seeds.
        root: Output root.
        workers: Threads for the two runs.

    Raises:
        ValidationError: If the seeds coincide or the profile is not random.
    """
    seed1, seed2 = seeds
    if seed1 == seed2:
        raise ValidationError(f"contraction needs two distinct seeds, got {seed1} twice")
    if config.initial.profile != "random_mean_zero":
        raise ValidationError(
            "contraction needs initial.profile = random_mean_zero, "
            f"got '{config.initial.profile}'"
        )
    scenarios = [prepare_scenario(config.with_entries({"initial.seed": s})) for s in seeds]

    with ThreadPoolExecutor(max_workers=max(1, min(workers, 2))) as pool:
        trajectories = list(pool.map(run_prepared, scenarios))

    first: Scenario = scenarios[0]
    record, distances = check_contraction(trajectories[0], trajectories[1], first.ctx)
    reports = [report_for(s, t) for s, t in zip(scenarios, trajectories)]
    reports[0].checks.append(record)
    reports[0].contraction = [float(d) for d in distances]

    directory = ensure_run_directory(
        root, config.output.directory, f"contraction_{config.graph.preset}"
    )
    (directory / CONFIG_FILE).write_text(first.config.to_text(), encoding="utf-8")
    write_table(
        directory / CONTRACTION_FILE,
        ("step", "t", "distance"),
        np.column_stack([np.arange(distances.size), trajectories[0].times, distances]),
    )
    for seed, report in zip(seeds, reports):
        write_json(directory / f"report_seed{seed}.json", report.to_dict())
    logger.info("contraction pair written to %s", directory)
    summary = (
        f"seeds {seed1}, {seed2}: d0 = {distances[0]:.6e}, dN = {distances[-1]:.6e}, "
        f"contraction {record.status}"
    )
    return StudyOutcome(
        directory=directory,
        reports=reports,
        summary=summary,
        payload={"contraction": record.to_dict(), "distances": reports[0].contraction},
    )
