"""Scenario orchestration: problem assembly from a config, single runs and verification."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..config import ForcingSpec, InitialSpec, RunConfig, load_config, output_root
from ..discretization import DiscreteOperators, FloatArray, Strip, build_operators
from ..dual import DualSolverContext
from ..estimates import EstimateReport, build_report, compute_constants, graphs_summary
from ..exceptions import ValidationError, WrongGeometry
from ..stepper import (
    Forcing,
    ProblemData,
    StepParams,
    Trajectory,
    run,
    shift_mean_mode,
    zero_forcing,
)
from ..utils import (
    CONFIG_FILE,
    DIAGNOSTICS_FILE,
    OPERATORS_FILE,
    REPORT_FILE,
    TRAJECTORY_FILE,
    ensure_run_directory,
    load_forcing_file,
    load_initial_file,
    load_trajectory,
    read_json,
    save_trajectory,
    write_diagnostics,
    write_json,
    write_operators,
    write_snapshot,
)

logger = logging.getLogger(__name__)

SNAPSHOT_DIR = "snapshots"


def _cosine_mode(spec: InitialSpec, ops: DiscreteOperators) -> FloatArray:
    geometry = ops.geometry
    if not isinstance(geometry, Strip):
        raise WrongGeometry(f"initial.profile = {spec.profile} needs the strip geometry")
    kappa = 2.0 * math.pi * spec.k / geometry.lx
    return spec.amplitude * np.cos(kappa * ops.x)


def build_initial(spec: InitialSpec, ops: DiscreteOperators) -> FloatArray:
    """Initial field of a profile.

    Random profiles draw seeded uniform values in [-1, 1] per node, scaled by the
    amplitude and projected to zero mean.
    """
    if spec.profile == "zero":
        return ops.constant(0.0)
    if spec.profile == "single_mode":
        return _cosine_mode(spec, ops)
    if spec.profile == "constant_plus_mode":
        return spec.m0 + _cosine_mode(spec, ops)
    if spec.profile == "random_mean_zero":
        rng = np.random.default_rng(spec.seed)
        return ops.project(spec.amplitude * rng.uniform(-1.0, 1.0, ops.dim))
    if spec.profile == "file":
        if not spec.path:
            raise ValidationError("initial.path is required for initial.profile = file")
        return load_initial_file(spec.path, ops)
    raise ValidationError(f"unknown initial profile '{spec.profile}'")


def build_forcing(spec: ForcingSpec, ops: DiscreteOperators) -> Forcing:
    """Forcing of a profile; ``random_mean_zero`` is a fixed seeded pattern times cos(2 pi f t)."""
    if spec.kind in ("zero", "manufactured"):
        return zero_forcing(ops)
    if spec.kind == "random_mean_zero":
        rng = np.random.default_rng(spec.seed)
        pattern = ops.project(spec.amplitude * rng.uniform(-1.0, 1.0, ops.dim))
        pattern.flags.writeable = False
        frequency = spec.frequency
        return lambda t: math.cos(2.0 * math.pi * frequency * t) * pattern
    if spec.kind == "file":
        if not spec.path:
            raise ValidationError("forcing.path is required for forcing.kind = file")
        return load_forcing_file(spec.path, ops)
    raise ValidationError(f"unknown forcing kind '{spec.kind}'")


@dataclass(frozen=True, eq=False)
class Scenario:
    """Everything one run needs, assembled from a config.

    ``data`` is the problem actually integrated: equal to ``original`` for mean-zero
    initial data, otherwise its mean-shifted counterpart.
    """

    config: RunConfig
    ops: DiscreteOperators
    ctx: DualSolverContext
    params: StepParams
    original: ProblemData
    data: ProblemData

    @property
    def shifted(self) -> bool:
        return self.data is not self.original

    @property
    def project_forcing(self) -> bool:
        return self.config.solver.project_forcing

    def meta(self) -> dict[str, Any]:
        """Run description stored in the report; derived from the config only."""
        config = self.config
        return {
            "geometry": self.ops.geometry.describe(),
            "graphs": graphs_summary(self.data.graphs),
            "lambda": config.lam,
            "tau": config.tau,
            "t_end": config.t_end,
            "m0": self.data.m0,
            "mode": "shifted" if self.shifted else "mean_zero",
            "initial": {"profile": config.initial.profile, "seed": config.initial.seed},
            "forcing": {"kind": config.forcing.kind, "seed": config.forcing.seed},
            "dual_method": self.ctx.method,
            "mu_min": self.ctx.mu_min,
        }


def prepare_scenario(config: RunConfig, *, project_forcing: bool | None = None) -> Scenario:
    """Assemble operators, graphs and problem data for a config.

    Args:
        config: Validated configuration.
        project_forcing: Override of ``solver.project_forcing``.

    Raises:
        DynboundError: If any piece cannot be built.
    """
    if project_forcing is not None and project_forcing != config.solver.project_forcing:
        config = config.with_entries({"solver.project_forcing": str(project_forcing).lower()})
    ops = build_operators(config.geometry)
    ctx = DualSolverContext(ops, method=config.solver.dual_method)
    params = StepParams(
        tau=config.tau,
        lam=config.lam,
        newton_tol=config.solver.newton_tol,
        newton_max_iter=config.solver.max_iter,
    )
    original = ProblemData(
        graphs=config.graphs(),
        initial=build_initial(config.initial, ops),
        t_end=config.t_end,
        forcing=build_forcing(config.forcing, ops),
    )
    return Scenario(
        config=config,
        ops=ops,
        ctx=ctx,
        params=params,
        original=original,
        data=shift_mean_mode(original, ops),
    )


def run_prepared(scenario: Scenario) -> Trajectory:
    return run(
        scenario.data,
        scenario.params,
        scenario.ops,
        scenario.ctx,
        project_forcing=scenario.project_forcing,
    )


def report_for(scenario: Scenario, traj: Trajectory) -> EstimateReport:
    """Bound constants and every single-trajectory check of a run."""
    constants = compute_constants(
        scenario.data,
        scenario.params,
        scenario.ops,
        scenario.ctx,
        relax_intercept=scenario.config.solver.relax_intercept,
        project_forcing=scenario.project_forcing,
    )
    report = build_report(traj, constants, scenario.ctx)
    report.meta = scenario.meta()
    return report


@dataclass
class RunOutcome:
    """Result of ``ScenarioRunner.run``."""

    directory: Path
    report: EstimateReport
    trajectory: Trajectory
    scenario: Scenario
    files: list[Path] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return 0 if self.report.structural_ok else 1


@dataclass
class VerifyOutcome:
    """Recomputed report compared with the stored one."""

    directory: Path
    report: EstimateReport
    stored: dict[str, Any]
    differences: list[str]

    @property
    def matches(self) -> bool:
        return not self.differences

    def format_summary(self) -> str:
        if self.matches:
            return f"{self.directory}: report reproduced exactly"
        return f"{self.directory}: report differs in {', '.join(self.differences)}"


class ScenarioRunner:
    """Runs scenarios and writes their run directories.

    Args:
        root: Output root; defaults to DYNBOUND_OUTPUT_ROOT or ``runs``.

    Example:
        >>> runner = ScenarioRunner()
        >>> outcome = runner.run(load_config("heleshaw.env"))
        >>> print(outcome.report.format_summary())
    """

    def __init__(self, root: str | Path | None = None) -> None:
        self.root = output_root(str(root) if root is not None else None)

    def run(
        self,
        config: RunConfig,
        *,
        project_forcing: bool | None = None,
        dump_operators: bool = False,
    ) -> RunOutcome:
        """Integrate one scenario, check it and write its run directory.

        Args:
            config: Validated configuration.
            project_forcing: Override of ``solver.project_forcing``.
            dump_operators: Also write the stiffness matrix in coordinate format.

        Returns:
            The outcome; ``exit_code`` is 0 iff every structural check passed.
        """
        scenario = prepare_scenario(config, project_forcing=project_forcing)
        config = scenario.config
        label = f"{config.graph.preset}_lam{config.lam:g}"
        directory = ensure_run_directory(self.root, config.output.directory, label)
        logger.info("Run directory: %s", directory)

        traj = run_prepared(scenario)
        report = report_for(scenario, traj)

        files = [directory / CONFIG_FILE]
        files[0].write_text(config.to_text(), encoding="utf-8")
        formats = config.output.formats
        if "npz" in formats:
            files.append(save_trajectory(directory / TRAJECTORY_FILE, traj))
        if "csv" in formats:
            files.append(
                write_diagnostics(directory / DIAGNOSTICS_FILE, traj.diagnostics_rows(scenario.ops))
            )
            files.extend(self._write_snapshots(directory, scenario, traj))
        if "json" in formats:
            files.append(write_json(directory / REPORT_FILE, report.to_dict()))
        if dump_operators:
            files.append(write_operators(directory / OPERATORS_FILE, scenario.ops))
        logger.info("Wrote %d files to %s", len(files), directory)
        return RunOutcome(
            directory=directory, report=report, trajectory=traj, scenario=scenario, files=files
        )

    def _write_snapshots(
        self, directory: Path, scenario: Scenario, traj: Trajectory
    ) -> list[Path]:
        snapshot_dir = directory / SNAPSHOT_DIR
        snapshot_dir.mkdir(exist_ok=True)
        stride = scenario.config.output.stride
        steps = sorted(set(range(0, traj.n_steps + 1, stride)) | {traj.n_steps})
        fields = traj.reconstructed()
        written = []
        for n in steps:
            metadata = {"step": n, "t": f"{traj.times[n]:.17g}", "lambda": f"{traj.params.lam:g}"}
            written.append(
                write_snapshot(snapshot_dir / f"u_{n:06d}.csv", scenario.ops, fields[n], metadata)
            )
        return written

    def verify(self, directory: str | Path) -> VerifyOutcome:
        """Rebuild the report of a stored run and compare it with ``report.json``.

        Raises:
            ValidationError: If the directory lacks the config, trajectory or report.
        """
        path = Path(directory)
        if not path.is_dir():
            raise ValidationError(f"Run directory not found: {directory}")
        missing = [
            name for name in (CONFIG_FILE, TRAJECTORY_FILE, REPORT_FILE)
            if not (path / name).is_file()
        ]
        if missing:
            raise ValidationError(f"{directory} is missing {', '.join(missing)}")

        scenario = prepare_scenario(load_config(path / CONFIG_FILE))
        traj = load_trajectory(path / TRAJECTORY_FILE, scenario.data.graphs)
        if traj.fields.shape[1] != scenario.ops.dim:
            raise ValidationError(
                f"stored trajectory has {traj.fields.shape[1]} unknowns, "
                f"config describes {scenario.ops.dim}"
            )
        report = report_for(scenario, traj)
        recomputed = json.loads(report.to_json())
        stored = read_json(path / REPORT_FILE)
        differences = sorted(
            key for key in set(recomputed) | set(stored) if recomputed.get(key) != stored.get(key)
        )
        if differences:
            logger.warning("Verification of %s differs in %s", path, ", ".join(differences))
        return VerifyOutcome(
            directory=path, report=report, stored=stored, differences=differences
        )
