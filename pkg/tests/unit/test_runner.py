"""Tests for scenario assembly, run directories and verification."""

import json

import numpy as np
import pytest

from dynbound.config import InitialSpec, parse_config
from dynbound.discretization import Interval, Strip, build_operators
from dynbound.estimates import weak_residual_tolerances
from dynbound.exceptions import ValidationError, WrongGeometry
from dynbound.scenarios.runner import (
    ScenarioRunner,
    build_forcing,
    build_initial,
    prepare_scenario,
    report_for,
    run_prepared,
)
from dynbound.utils import read_diagnostics, read_operators, read_snapshot
from tests.fixtures.configs import (
    HELESHAW_DESK,
    HELESHAW_SMALL,
    INTERVAL_DEADZONE,
    SHIFTED_MEAN,
    TWO_GRAPH,
    ZERO_DATA,
)


def _named(text, name):
    return parse_config(text).with_entries({"output.directory": name})


class TestBuilders:
    """Tests for initial data and forcing profiles."""

    def test_random_initial_is_mean_zero_and_seeded(self):
        """Test random data is reproducible and projected."""
        config = parse_config(HELESHAW_SMALL)
        ops = build_operators(config.geometry)
        a = build_initial(config.initial, ops)
        b = build_initial(config.initial, ops)
        np.testing.assert_array_equal(a, b)
        assert abs(ops.mean(a)) < 1e-14
        assert np.max(np.abs(a)) <= 4.0

    def test_constant_plus_mode(self):
        """Test the mean of constant_plus_mode data."""
        config = parse_config(SHIFTED_MEAN)
        ops = build_operators(config.geometry)
        assert ops.mean(build_initial(config.initial, ops)) == pytest.approx(0.3)

    def test_mode_on_interval(self):
        """Test cosine data needs the strip."""
        config = parse_config(SHIFTED_MEAN)
        with pytest.raises(WrongGeometry):
            build_initial(config.initial, build_operators(Interval(8)))

    def test_file_profile_needs_path(self):
        """Test a file profile without a path."""
        with pytest.raises(ValidationError):
            build_initial(InitialSpec(profile="file"), build_operators(Strip(1.0, 8, 4)))

    def test_random_forcing(self):
        """Test a mean-zero pattern modulated in time."""
        config = parse_config(HELESHAW_SMALL)
        ops = build_operators(config.geometry)
        forcing = build_forcing(config.forcing, ops)
        f0 = forcing(0.0)
        assert abs(ops.mean(f0)) < 1e-14
        assert np.linalg.norm(f0) > 0
        np.testing.assert_array_equal(forcing(0.0), f0)

    def test_zero_forcing(self):
        """Test the default forcing."""
        config = parse_config(ZERO_DATA)
        ops = build_operators(config.geometry)
        np.testing.assert_array_equal(build_forcing(config.forcing, ops)(0.3), 0.0)


class TestPrepareScenario:
    """Tests for prepare_scenario."""

    def test_mean_zero(self):
        """Test mean-zero data is integrated unchanged."""
        scenario = prepare_scenario(parse_config(HELESHAW_SMALL))
        assert not scenario.shifted
        assert scenario.data is scenario.original
        assert scenario.meta()["mode"] == "mean_zero"

    def test_shifted(self):
        """Test nonzero-mean data is shifted."""
        scenario = prepare_scenario(parse_config(SHIFTED_MEAN))
        assert scenario.shifted
        assert scenario.data.m0 == pytest.approx(0.3)
        assert abs(scenario.ops.mean(scenario.data.initial)) < 1e-14

    def test_project_forcing_override(self):
        """Test the flag overrides the config key."""
        scenario = prepare_scenario(parse_config(ZERO_DATA), project_forcing=True)
        assert scenario.project_forcing
        assert scenario.config.solver.project_forcing

    def test_meta(self):
        """Test the report description of a run."""
        meta = prepare_scenario(parse_config(HELESHAW_SMALL)).meta()
        assert meta["geometry"] == "strip lx=1 nx=8 ny=4"
        assert meta["lambda"] == 0.05
        assert meta["dual_method"] == "direct"
        assert meta["mu_min"] > 0


class TestRun:
    """Tests for ScenarioRunner.run."""

    def test_files(self, tmp_path):
        """Test every output of a run is written."""
        outcome = ScenarioRunner(tmp_path).run(_named(HELESHAW_SMALL, "a"))
        directory = tmp_path / "a"
        assert outcome.directory == directory
        assert outcome.exit_code == 0
        for name in ("config.env", "trajectory.npz", "diagnostics.csv", "report.json"):
            assert (directory / name).is_file()
        snapshots = sorted(p.name for p in (directory / "snapshots").iterdir())
        assert snapshots == ["u_000000.csv", "u_000002.csv", "u_000004.csv"]
        assert all(path.is_file() for path in outcome.files)

    def test_config_written_back(self, tmp_path):
        """Test the stored config reproduces the run config."""
        config = _named(HELESHAW_SMALL, "a")
        ScenarioRunner(tmp_path).run(config)
        assert parse_config((tmp_path / "a" / "config.env").read_text()) == config

    def test_diagnostics(self, tmp_path):
        """Test one diagnostics row per time level."""
        ScenarioRunner(tmp_path).run(_named(HELESHAW_SMALL, "a"))
        columns = read_diagnostics(tmp_path / "a" / "diagnostics.csv")
        np.testing.assert_allclose(columns["t"], [0.0, 0.05, 0.1, 0.15, 0.2])

    def test_report_json(self, tmp_path):
        """Test the stored report matches the outcome."""
        outcome = ScenarioRunner(tmp_path).run(_named(HELESHAW_SMALL, "a"))
        stored = json.loads((tmp_path / "a" / "report.json").read_text())
        assert stored == json.loads(outcome.report.to_json())
        assert stored["structural_ok"] is True

    def test_deterministic_outputs(self, tmp_path):
        """Test CSV and JSON outputs are byte-identical across runs."""
        runner = ScenarioRunner(tmp_path)
        runner.run(_named(HELESHAW_SMALL, "a"))
        runner.run(_named(HELESHAW_SMALL, "b"))
        for name in ("diagnostics.csv", "report.json", "snapshots/u_000004.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_formats(self, tmp_path):
        """Test only the selected formats are written."""
        config = parse_config(
            ZERO_DATA + "output.formats = json\noutput.directory = only_json\n"
        )
        ScenarioRunner(tmp_path).run(config)
        directory = tmp_path / "only_json"
        assert (directory / "report.json").is_file()
        assert not (directory / "trajectory.npz").exists()
        assert not (directory / "diagnostics.csv").exists()

    def test_dump_operators(self, tmp_path):
        """Test the stiffness matrix is written on request."""
        outcome = ScenarioRunner(tmp_path).run(_named(ZERO_DATA, "a"), dump_operators=True)
        matrix = read_operators(tmp_path / "a" / "stiffness.coo")
        np.testing.assert_array_equal(
            matrix.toarray(), outcome.scenario.ops.stiffness.toarray()
        )

    def test_shifted_snapshots_carry_the_mean(self, tmp_path):
        """Test snapshots of a shifted run store v + m0."""
        outcome = ScenarioRunner(tmp_path).run(_named(SHIFTED_MEAN, "s"))
        values, metadata = read_snapshot(tmp_path / "s" / "snapshots" / "u_000004.csv")
        assert outcome.scenario.ops.mean(values) == pytest.approx(0.3)
        assert metadata["step"] == "4"

    @pytest.mark.parametrize("text", [TWO_GRAPH, INTERVAL_DEADZONE])
    def test_other_geometries_and_graphs(self, tmp_path, text):
        """Test two-graph and interval runs pass their checks."""
        outcome = ScenarioRunner(tmp_path).run(_named(text, "r"))
        assert outcome.exit_code == 0

    def test_environment_root(self, tmp_path, monkeypatch):
        """Test the output root defaults to DYNBOUND_OUTPUT_ROOT."""
        monkeypatch.setenv("DYNBOUND_OUTPUT_ROOT", str(tmp_path))
        assert ScenarioRunner().root == tmp_path


class TestVerify:
    """Tests for ScenarioRunner.verify."""

    def test_reproduces(self, tmp_path):
        """Test an untouched run directory verifies."""
        runner = ScenarioRunner(tmp_path)
        runner.run(_named(HELESHAW_SMALL, "a"))
        outcome = runner.verify(tmp_path / "a")
        assert outcome.matches
        assert "reproduced exactly" in outcome.format_summary()

    def test_shifted_reproduces(self, tmp_path):
        """Test a shifted run directory verifies."""
        runner = ScenarioRunner(tmp_path)
        runner.run(_named(SHIFTED_MEAN, "s"))
        assert runner.verify(tmp_path / "s").matches

    def test_tampered_report(self, tmp_path):
        """Test an edited report is detected."""
        runner = ScenarioRunner(tmp_path)
        runner.run(_named(HELESHAW_SMALL, "a"))
        path = tmp_path / "a" / "report.json"
        payload = json.loads(path.read_text())
        payload["m1"] = payload["m1"] * 2.0
        path.write_text(json.dumps(payload))
        outcome = runner.verify(tmp_path / "a")
        assert not outcome.matches
        assert outcome.differences == ["m1"]

    def test_missing_trajectory(self, tmp_path):
        """Test a directory without its trajectory."""
        runner = ScenarioRunner(tmp_path)
        runner.run(_named(HELESHAW_SMALL, "a"))
        (tmp_path / "a" / "trajectory.npz").unlink()
        with pytest.raises(ValidationError) as exc:
            runner.verify(tmp_path / "a")
        assert "trajectory.npz" in exc.value.message

    def test_missing_directory(self, tmp_path):
        """Test a directory that does not exist."""
        with pytest.raises(ValidationError):
            ScenarioRunner(tmp_path).verify(tmp_path / "nowhere")


@pytest.mark.slow
class TestDeskScale:
    """Tests at the desk-scale resolution."""

    def test_heleshaw_structural_checks(self, tmp_path):
        """Test every structural check passes on the 32 x 16 Hele-Shaw run."""
        outcome = ScenarioRunner(tmp_path).run(_named(HELESHAW_DESK, "desk"))
        assert outcome.report.structural_ok
        assert outcome.trajectory.n_steps == 100

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_heleshaw_random_seeds_converge(self, seed):
        """Test every step converges for several random initial data."""
        config = parse_config(HELESHAW_DESK).with_entries({"initial.seed": seed})
        scenario = prepare_scenario(config)
        traj = run_prepared(scenario)
        assert traj.n_steps == 100
        assert np.all(traj.iterations <= scenario.params.newton_max_iter)
        assert np.all(traj.residuals <= weak_residual_tolerances(traj, scenario.ops))
        assert np.max(np.abs(traj.masses - traj.masses[0])) <= 1e-10


class TestSolverRobustness:
    """Tests for Newton on random Hele-Shaw data over whole runs."""

    @pytest.mark.parametrize("seed", [1, 2, 3, 4, 5])
    def test_random_seeds(self, seed):
        """Test runs from random amplitude-2 data converge on every step."""
        text = HELESHAW_SMALL.replace("geometry.nx = 8", "geometry.nx = 16").replace(
            "geometry.ny = 4", "geometry.ny = 8"
        )
        scenario = prepare_scenario(parse_config(text).with_entries({"initial.seed": seed}))
        traj = run_prepared(scenario)
        assert traj.n_steps == 4
        assert np.all(traj.residuals <= weak_residual_tolerances(traj, scenario.ops))
        assert report_for(scenario, traj).structural_ok
