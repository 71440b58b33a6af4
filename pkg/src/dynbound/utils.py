"""Utility functions for run directories and the file formats they contain."""

from __future__ import annotations

import json
import time
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any, TextIO

import numpy as np
import scipy.sparse as sp

from .discretization import DiscreteOperators, FloatArray
from .exceptions import ValidationError
from .graphs import GraphPair
from .stepper import Forcing, StepParams, Trajectory

DIAGNOSTIC_COLUMNS = (
    "step",
    "t",
    "mass",
    "phi_lambda",
    "newton_iters",
    "residual",
    "du_dualnorm",
    "xi_mean",
)
SNAPSHOT_COLUMNS = ("part", "x", "y_or_row", "value")
GRAPH_TABLE_COLUMNS = ("r", "beta_lo", "beta_hi", "resolvent", "yosida", "envelope")

CONFIG_FILE = "config.env"
TRAJECTORY_FILE = "trajectory.npz"
DIAGNOSTICS_FILE = "diagnostics.csv"
REPORT_FILE = "report.json"
OPERATORS_FILE = "stiffness.coo"


def ensure_run_directory(root: str | Path, name: str | None, label: str) -> Path:
    """Create the directory of one run.

    Args:
        root: Output root.
        name: Configured directory name, or None for an auto-generated one.
        label: Scenario label used in auto-generated names.

    Returns:
        The created directory.
    """
    if name:
        path = Path(name) if Path(name).is_absolute() else Path(root) / name
    else:
        label_safe = label.replace("/", "_").replace(" ", "_")
        path = Path(root) / f"{label_safe}_{int(time.time())}"
    path.mkdir(parents=True, exist_ok=True)
    return path


def require_file(path: str | Path) -> Path:
    """Validate that a path points to an existing file.

    Raises:
        ValidationError: If it does not.
    """
    file_path = Path(path)
    if not file_path.exists():
        raise ValidationError(f"File not found: {path}")
    if not file_path.is_file():
        raise ValidationError(f"Path is not a file: {path}")
    return file_path


def _comment_block(metadata: Mapping[str, Any]) -> str:
    return "\n".join(f"{key}: {value}" for key, value in metadata.items())


def _read_comments(path: Path) -> dict[str, str]:
    metadata = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if ":" in body:
                key, value = body.split(":", 1)
                metadata[key.strip()] = value.strip()
    return metadata


def write_snapshot(
    path: str | Path,
    ops: DiscreteOperators,
    field: FloatArray,
    metadata: Mapping[str, Any] | None = None,
) -> Path:
    """Write one field as CSV: bulk nodes (part 0, x, y) then surface nodes (part 1, x, row).

    Geometry and any extra metadata go into leading ``#`` comment lines.
    """
    values = ops.check(field)
    part = np.where(ops.bulk_mask, 0, 1)
    second = ops.y.copy()
    # surface rows are numbered 0 (bottom / left end) and 1 (top / right end)
    surface_row = np.repeat([0.0, 1.0], ops.n_surface // 2)
    second[ops.n_bulk :] = surface_row
    header = {"geometry": ops.geometry.describe(), **(metadata or {})}
    out = Path(path)
    np.savetxt(
        out,
        np.column_stack([part, ops.x, second, values]),
        fmt=["%d", "%.17g", "%.17g", "%.17g"],
        delimiter=",",
        header=_comment_block(header) + "\n" + ",".join(SNAPSHOT_COLUMNS),
        comments="# ",
    )
    return out


def read_snapshot(path: str | Path) -> tuple[FloatArray, dict[str, str]]:
    """Read a snapshot CSV back.

    Returns:
        The field (bulk values first, then surface values) and the metadata lines.
    """
    file_path = require_file(path)
    data = np.atleast_2d(np.loadtxt(file_path, delimiter=",", comments="#"))
    part = data[:, 0].astype(int)
    values = np.concatenate([data[part == 0, 3], data[part == 1, 3]])
    return values, _read_comments(file_path)


def write_diagnostics(path: str | Path, rows: Sequence[Mapping[str, float]]) -> Path:
    """Write per-step diagnostics CSV with the columns of ``DIAGNOSTIC_COLUMNS``."""
    table = np.array([[row[c] for c in DIAGNOSTIC_COLUMNS] for row in rows], dtype=float)
    out = Path(path)
    np.savetxt(
        out,
        table.reshape(-1, len(DIAGNOSTIC_COLUMNS)),
        fmt=["%d", "%.17g", "%.17g", "%.17g", "%d", "%.17g", "%.17g", "%.17g"],
        delimiter=",",
        header=",".join(DIAGNOSTIC_COLUMNS),
        comments="",
    )
    return out


def read_diagnostics(path: str | Path) -> dict[str, FloatArray]:
    """Read a diagnostics CSV into one array per column."""
    file_path = require_file(path)
    with open(file_path, encoding="utf-8") as f:
        columns = f.readline().strip().split(",")
    data = np.atleast_2d(np.loadtxt(file_path, delimiter=",", skiprows=1, ndmin=2))
    return {name: data[:, k] for k, name in enumerate(columns)}


def save_trajectory(path: str | Path, traj: Trajectory) -> Path:
    """Store a trajectory losslessly; graphs are rebuilt from the config on load."""
    out = Path(path)
    p = traj.params
    np.savez(
        out,
        times=traj.times,
        fields=traj.fields,
        fluxes=traj.fluxes,
        forcing=traj.forcing,
        iterations=traj.iterations,
        residuals=traj.residuals,
        du_dualnorm=traj.du_dualnorm,
        phi=traj.phi,
        masses=traj.masses,
        m0=np.array(traj.m0),
        params=np.array(
            [p.tau, p.lam, p.newton_tol, p.newton_max_iter, p.backtrack, p.max_halvings]
        ),
    )
    return out


def load_trajectory(path: str | Path, graphs: GraphPair) -> Trajectory:
    """Load a trajectory written by ``save_trajectory``.

    Args:
        path: ``trajectory.npz`` file.
        graphs: Graphs the run used (mean-shifted ones in shifted mode).
    """
    file_path = require_file(path)
    with np.load(file_path) as data:
        tau, lam, newton_tol, max_iter, backtrack, halvings = data["params"].tolist()
        params = StepParams(
            tau=tau,
            lam=lam,
            newton_tol=newton_tol,
            newton_max_iter=int(max_iter),
            backtrack=backtrack,
            max_halvings=int(halvings),
        )
        return Trajectory(
            times=data["times"],
            fields=data["fields"],
            fluxes=data["fluxes"],
            forcing=data["forcing"],
            iterations=data["iterations"],
            residuals=data["residuals"],
            du_dualnorm=data["du_dualnorm"],
            phi=data["phi"],
            masses=data["masses"],
            params=params,
            graphs=graphs,
            m0=float(data["m0"]),
        )


def write_json(path: str | Path, payload: Mapping[str, Any]) -> Path:
    out = Path(path)
    out.write_text(
        json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8"
    )
    return out


def read_json(path: str | Path) -> dict[str, Any]:
    file_path = require_file(path)
    try:
        payload = json.loads(file_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ValidationError(f"Invalid JSON in {path}: {e}") from e
    if not isinstance(payload, dict):
        raise ValidationError(f"Expected a JSON object in {path}")
    return payload


def write_operators(path: str | Path, ops: DiscreteOperators) -> Path:
    """Write the stiffness in coordinate text format: ``row col value`` per line."""
    coo = ops.stiffness.tocoo()
    out = Path(path)
    np.savetxt(
        out,
        np.column_stack([coo.row, coo.col, coo.data]),
        fmt=["%d", "%d", "%.17g"],
        header=f"{ops.geometry.describe()}\nshape {ops.dim} {ops.dim}\nrow col value",
        comments="# ",
    )
    return out


def read_operators(path: str | Path) -> sp.csr_matrix:
    """Read a coordinate-format stiffness file."""
    file_path = require_file(path)
    dim = None
    with open(file_path, encoding="utf-8") as f:
        for line in f:
            if line.startswith("# shape"):
                dim = int(line.split()[2])
                break
    if dim is None:
        raise ValidationError(f"{path} has no shape line")
    data = np.atleast_2d(np.loadtxt(file_path, comments="#", ndmin=2))
    return sp.coo_matrix(
        (data[:, 2], (data[:, 0].astype(int), data[:, 1].astype(int))), shape=(dim, dim)
    ).tocsr()


def write_graph_table(
    target: str | Path | TextIO, table: FloatArray, metadata: Mapping[str, Any]
) -> None:
    """Write r, beta bounds, resolvent, Yosida map and envelope as CSV to a path or stream."""
    np.savetxt(
        target,
        table,
        fmt="%.17g",
        delimiter=",",
        header=_comment_block(metadata) + "\n" + ",".join(GRAPH_TABLE_COLUMNS),
        comments="# ",
    )


def write_table(path: str | Path, columns: Sequence[str], rows: FloatArray) -> Path:
    """Plain CSV with a header line, used by the study tables."""
    out = Path(path)
    np.savetxt(
        out,
        np.atleast_2d(rows).reshape(-1, len(columns)),
        fmt="%.17g",
        delimiter=",",
        header=",".join(columns),
        comments="",
    )
    return out


def load_forcing_file(path: str | Path, ops: DiscreteOperators) -> Forcing:
    """Forcing stored as ``.npz`` with arrays ``times`` (K,) and ``fields`` (K, dim).

    Samples between stored times are interpolated linearly; outside the stored range
    the nearest sample is used.
    """
    file_path = require_file(path)
    with np.load(file_path) as data:
        times = np.asarray(data["times"], dtype=float)
        fields = np.asarray(data["fields"], dtype=float)
    if fields.ndim != 2 or fields.shape != (times.size, ops.dim):
        raise ValidationError(
            f"forcing file {path} has fields of shape {fields.shape}, "
            f"expected ({times.size}, {ops.dim})"
        )
    if times.size > 1 and np.any(np.diff(times) <= 0):
        raise ValidationError(f"forcing file {path}: times must increase")

    def forcing(t: float) -> FloatArray:
        k = int(np.searchsorted(times, t, side="right"))
        if k == 0:
            return fields[0].copy()
        if k == times.size:
            return fields[-1].copy()
        theta = (t - times[k - 1]) / (times[k] - times[k - 1])
        return (1.0 - theta) * fields[k - 1] + theta * fields[k]

    return forcing


def load_initial_file(path: str | Path, ops: DiscreteOperators) -> FloatArray:
    """Initial field from a snapshot CSV or a ``.npy`` vector."""
    file_path = require_file(path)
    if file_path.suffix.lower() == ".npy":
        values = np.load(file_path)
    else:
        values, _ = read_snapshot(file_path)
    return ops.check(np.asarray(values, dtype=float).ravel(), f"initial field from {path}")
