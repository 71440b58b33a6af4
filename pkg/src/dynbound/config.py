"""Run configuration: a flat ``section.key = value`` text file plus environment settings.

Example:
    geometry.kind = strip
    geometry.nx = 32
    geometry.ny = 16
    graph.preset = heleshaw_clipped
    graph.c0_prime = 1
    run.lambda = 0.05
    run.tau = 0.01
    run.t_end = 1
    initial.profile = random_mean_zero
    initial.seed = 7
"""

from __future__ import annotations

import io
import logging
import os
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from dotenv import load_dotenv
from dotenv.parser import parse_stream

from .discretization import Geometry, Interval, Strip
from .exceptions import (
    ConfigParseError,
    InvalidParams,
    NegativeIntercept,
    NotAffineFarField,
    ValidationError,
)
from .graphs import PRESETS, GraphPair, MonotoneGraph, from_records, make_preset

logger = logging.getLogger(__name__)

# Load environment variables from .env file
load_dotenv()

DEFAULT_OUTPUT_ROOT = "runs"
DEFAULT_WORKERS = 1

INITIAL_PROFILES = ("zero", "single_mode", "random_mean_zero", "file", "constant_plus_mode")
FORCING_KINDS = ("zero", "manufactured", "file", "random_mean_zero")
OUTPUT_FORMATS = ("csv", "npz", "json")
CUSTOM_PRESET = "custom"

# Parameters accepted by each graph preset.
PRESET_PARAMS: dict[str, tuple[str, ...]] = {
    "linear": ("c0",),
    "heleshaw_clipped": ("c0_prime",),
    "fast_diffusion_clipped": ("exponent", "threshold", "pieces"),
    "porous_clipped": ("exponent", "threshold", "pieces"),
    "deadzone_jump": ("a", "b", "c0", "c0_prime"),
    CUSTOM_PRESET: ("records", "c0", "threshold"),
}


def _to_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got '{text}'")


def _to_int(text: str) -> int:
    return int(text.strip())


def _to_float(text: str) -> float:
    return float(text.strip())


def _to_str(text: str) -> str:
    return text.strip()


def _to_list(text: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",") if part.strip())


def _to_records(text: str) -> tuple[tuple[float, float, float, float], ...]:
    records = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        parts = chunk.split(":")
        if len(parts) != 4:
            raise ValueError(f"record '{chunk.strip()}' must read breakpoint:left:right:slope")
        b, lo, hi, slope = (float(p) for p in parts)
        records.append((b, lo, hi, slope))
    return tuple(records)


def _graph_keys(section: str) -> dict[str, Callable[[str], Any]]:
    return {
        f"{section}.preset": _to_str,
        f"{section}.c0": _to_float,
        f"{section}.c0_prime": _to_float,
        f"{section}.exponent": _to_float,
        f"{section}.threshold": _to_float,
        f"{section}.pieces": _to_int,
        f"{section}.a": _to_float,
        f"{section}.b": _to_float,
        f"{section}.records": _to_records,
    }


KEYS: dict[str, Callable[[str], Any]] = {
    "geometry.kind": _to_str,
    "geometry.lx": _to_float,
    "geometry.nx": _to_int,
    "geometry.ny": _to_int,
    "geometry.n": _to_int,
    **_graph_keys("graph"),
    **_graph_keys("surface_graph"),
    "run.lambda": _to_float,
    "run.tau": _to_float,
    "run.t_end": _to_float,
    "initial.profile": _to_str,
    "initial.k": _to_int,
    "initial.seed": _to_int,
    "initial.amplitude": _to_float,
    "initial.path": _to_str,
    "initial.m0": _to_float,
    "forcing.kind": _to_str,
    "forcing.seed": _to_int,
    "forcing.amplitude": _to_float,
    "forcing.frequency": _to_float,
    "forcing.path": _to_str,
    "output.directory": _to_str,
    "output.stride": _to_int,
    "output.formats": _to_list,
    "solver.newton_tol": _to_float,
    "solver.max_iter": _to_int,
    "solver.project_forcing": _to_bool,
    "solver.relax_intercept": _to_bool,
    "solver.dual_method": _to_str,
}


@dataclass(frozen=True)
class GraphSpec:
    """Graph section: a preset name with its parameters, or custom records."""

    preset: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def build(self, relax_intercept: bool = False) -> MonotoneGraph:
        """Construct the graph.

        Raises:
            InvalidParams: If the preset or its parameters are invalid.
        """
        if self.preset == CUSTOM_PRESET:
            return from_records(
                self.params.get("records", ()),
                float(self.params.get("c0", 1.0)),
                float(self.params.get("threshold", 1.0)),
            )
        return make_preset(self.preset, self.params, relax_intercept=relax_intercept)


@dataclass(frozen=True)
class InitialSpec:
    profile: str = "zero"
    k: int = 1
    seed: int = 0
    amplitude: float = 1.0
    path: str | None = None
    m0: float = 0.0


@dataclass(frozen=True)
class ForcingSpec:
    kind: str = "zero"
    seed: int = 0
    amplitude: float = 1.0
    frequency: float = 1.0
    path: str | None = None


@dataclass(frozen=True)
class OutputSpec:
    directory: str | None = None
    stride: int = 10
    formats: tuple[str, ...] = OUTPUT_FORMATS


@dataclass(frozen=True)
class SolverSpec:
    newton_tol: float = 1e-11
    max_iter: int = 50
    project_forcing: bool = False
    relax_intercept: bool = False
    dual_method: str = "direct"


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration.

    Attributes:
        geometry: Strip or interval.
        graph: Bulk graph (and surface graph unless ``surface_graph`` is set).
        surface_graph: Separate surface graph for the two-graph mode.
        lam: Regularization parameter.
        tau: Time step.
        t_end: Horizon T.
        initial: Initial datum profile.
        forcing: Forcing profile.
        output: Output controls.
        solver: Solver controls.
        entries: Raw key/value text of every set key, in file order.
    """

    geometry: Geometry
    graph: GraphSpec
    lam: float
    tau: float
    t_end: float
    surface_graph: GraphSpec | None = None
    initial: InitialSpec = field(default_factory=InitialSpec)
    forcing: ForcingSpec = field(default_factory=ForcingSpec)
    output: OutputSpec = field(default_factory=OutputSpec)
    solver: SolverSpec = field(default_factory=SolverSpec)
    entries: Mapping[str, str] = field(default_factory=dict)

    def graphs(self) -> GraphPair:
        """Build the graph pair (a single shared graph unless a surface graph is set)."""
        bulk = self.graph.build(self.solver.relax_intercept)
        if self.surface_graph is None:
            return GraphPair.single(bulk)
        return GraphPair(bulk, self.surface_graph.build(self.solver.relax_intercept))

    def to_text(self) -> str:
        return "".join(f"{key} = {value}\n" for key, value in self.entries.items())

    def with_entries(self, updates: Mapping[str, Any]) -> RunConfig:
        """Copy with some keys replaced, validated again."""
        merged = dict(self.entries)
        merged.update({key: str(value) for key, value in updates.items()})
        return parse_config("".join(f"{k} = {v}\n" for k, v in merged.items()))


def tokenize(text: str) -> list[tuple[int, str, str]]:
    """Split config text into ``(line, key, raw value)`` triples.

    Raises:
        ConfigParseError: On a line the tokenizer cannot read or a key without value.
    """
    out = []
    for binding in parse_stream(io.StringIO(text)):
        original = binding.original
        leading = original.string[: len(original.string) - len(original.string.lstrip())]
        line = original.line + leading.count("\n")
        if binding.error:
            raise ConfigParseError(
                f"line {line}: cannot parse '{original.string.strip()}'", line=line
            )
        if binding.key is None:
            continue
        if binding.value is None:
            raise ConfigParseError(
                f"line {line}: key '{binding.key}' has no value", line=line, key=binding.key
            )
        out.append((line, binding.key, binding.value))
    return out


class _Collector:
    def __init__(self, values: dict[str, Any]) -> None:
        self.values = values
        self.violations: list[str] = []

    def add(self, message: str) -> None:
        self.violations.append(message)

    def get(self, key: str, default: Any = None) -> Any:
        return self.values.get(key, default)

    def require(self, key: str) -> Any:
        if key not in self.values:
            self.add(f"missing required key '{key}'")
            return None
        return self.values[key]


def _geometry(c: _Collector) -> Geometry | None:
    kind = c.get("geometry.kind", "strip")
    if kind == "strip":
        stray = [k for k in ("geometry.n",) if k in c.values]
        if stray:
            c.add("geometry.n applies to the interval geometry only")
        lx, nx, ny = c.get("geometry.lx", 1.0), c.get("geometry.nx", 32), c.get("geometry.ny", 16)
        ok = True
        if not lx > 0:
            c.add(f"geometry.lx must be positive, got {lx}")
            ok = False
        if nx < 4:
            c.add(f"geometry.nx must be at least 4, got {nx}")
            ok = False
        if ny < 2:
            c.add(f"geometry.ny must be at least 2, got {ny}")
            ok = False
        return Strip(lx, nx, ny) if ok else None
    if kind == "interval":
        stray = [k for k in ("geometry.lx", "geometry.nx", "geometry.ny") if k in c.values]
        if stray:
            c.add(f"{', '.join(stray)} apply to the strip geometry only")
        n = c.get("geometry.n", 64)
        if n < 2:
            c.add(f"geometry.n must be at least 2, got {n}")
            return None
        return Interval(n)
    c.add(f"geometry.kind must be 'strip' or 'interval', got '{kind}'")
    return None


def _graph_spec(c: _Collector, section: str) -> GraphSpec | None:
    preset = c.get(f"{section}.preset")
    if preset is None:
        c.add(f"missing required key '{section}.preset'")
        return None
    if preset not in PRESET_PARAMS:
        c.add(
            f"{section}.preset: unknown preset '{preset}'. "
            f"Valid presets: {', '.join((*PRESETS, CUSTOM_PRESET))}"
        )
        return None
    allowed = PRESET_PARAMS[preset]
    params = {}
    for key in _graph_keys(section):
        name = key.split(".", 1)[1]
        if name == "preset" or key not in c.values:
            continue
        if name not in allowed:
            c.add(f"{key} does not apply to preset '{preset}'")
            continue
        params[name] = c.values[key]
    if preset == CUSTOM_PRESET and "records" not in params:
        c.add(f"{section}.records is required for a custom graph")
    return GraphSpec(preset=preset, params=params)


def _build_graphs(
    c: _Collector, bulk: GraphSpec, surface: GraphSpec | None, relax: bool
) -> None:
    built: list[MonotoneGraph] = []
    for section, spec in (("graph", bulk), ("surface_graph", surface)):
        if spec is None:
            continue
        try:
            built.append(spec.build(relax))
        except InvalidParams as e:
            c.add(f"{section}: {e.message}")
    if len(built) != (2 if surface is not None else 1):
        return
    pair = GraphPair(built[0], built[1]) if surface is not None else GraphPair.single(built[0])
    try:
        pair.shared_far_field(relax)
    except (NotAffineFarField, NegativeIntercept) as e:
        c.add(e.message)


def parse_config(text: str) -> RunConfig:
    """Parse and validate a run configuration.

    Args:
        text: Configuration text.

    Returns:
        The validated configuration.

    Raises:
        ConfigParseError: If a line cannot be tokenized.
        ValidationError: With every violation found (unknown or duplicate keys,
            bad values, inconsistent sections).
    """
    raw: dict[str, str] = {}
    values: dict[str, Any] = {}
    c = _Collector(values)
    for line, key, value in tokenize(text):
        if key not in KEYS:
            c.add(f"line {line}: unknown key '{key}'")
            continue
        if key in raw:
            c.add(f"line {line}: duplicate key '{key}'")
            continue
        raw[key] = value
        try:
            values[key] = KEYS[key](value)
        except ValueError as e:
            c.add(f"line {line}: {key}: {e}")

    geometry = _geometry(c)
    graph = _graph_spec(c, "graph")
    surface = _graph_spec(c, "surface_graph") if any(
        k.startswith("surface_graph.") for k in raw
    ) else None

    lam = c.require("run.lambda")
    tau = c.require("run.tau")
    t_end = c.require("run.t_end")
    if lam is not None and not lam > 0:
        c.add(f"lambda must be positive, got {lam}")
    if tau is not None and not tau > 0:
        c.add(f"tau must be positive, got {tau}")
    if t_end is not None and not t_end >= 0:
        c.add(f"t_end must be nonnegative, got {t_end}")

    solver = SolverSpec(
        newton_tol=c.get("solver.newton_tol", 1e-11),
        max_iter=c.get("solver.max_iter", 50),
        project_forcing=c.get("solver.project_forcing", False),
        relax_intercept=c.get("solver.relax_intercept", False),
        dual_method=c.get("solver.dual_method", "direct"),
    )
    if not solver.newton_tol > 0:
        c.add(f"solver.newton_tol must be positive, got {solver.newton_tol}")
    if solver.max_iter < 1:
        c.add(f"solver.max_iter must be at least 1, got {solver.max_iter}")
    if solver.dual_method not in ("direct", "cg"):
        c.add(f"solver.dual_method must be 'direct' or 'cg', got '{solver.dual_method}'")

    if graph is not None:
        _build_graphs(c, graph, surface, solver.relax_intercept)

    initial = InitialSpec(
        profile=c.get("initial.profile", "zero"),
        k=c.get("initial.k", 1),
        seed=c.get("initial.seed", 0),
        amplitude=c.get("initial.amplitude", 1.0),
        path=c.get("initial.path"),
        m0=c.get("initial.m0", 0.0),
    )
    if initial.profile not in INITIAL_PROFILES:
        c.add(
            f"initial.profile must be one of {', '.join(INITIAL_PROFILES)}, "
            f"got '{initial.profile}'"
        )
    if initial.profile == "file" and not initial.path:
        c.add("initial.path is required for initial.profile = file")
    if initial.profile in ("single_mode", "constant_plus_mode"):
        if initial.k < 1:
            c.add(f"initial.k must be at least 1, got {initial.k}")
        if geometry is not None and not isinstance(geometry, Strip):
            c.add(f"initial.profile = {initial.profile} needs the strip geometry")

    forcing = ForcingSpec(
        kind=c.get("forcing.kind", "zero"),
        seed=c.get("forcing.seed", 0),
        amplitude=c.get("forcing.amplitude", 1.0),
        frequency=c.get("forcing.frequency", 1.0),
        path=c.get("forcing.path"),
    )
    if forcing.kind not in FORCING_KINDS:
        c.add(f"forcing.kind must be one of {', '.join(FORCING_KINDS)}, got '{forcing.kind}'")
    if forcing.kind == "file" and not forcing.path:
        c.add("forcing.path is required for forcing.kind = file")
    if forcing.kind == "manufactured":
        if initial.profile != "single_mode":
            c.add("forcing.kind = manufactured needs initial.profile = single_mode")
        if (graph is not None and graph.preset != "linear") or surface is not None:
            c.add("forcing.kind = manufactured needs a single linear graph")

    output = OutputSpec(
        directory=c.get("output.directory"),
        stride=c.get("output.stride", 10),
        formats=c.get("output.formats", OUTPUT_FORMATS),
    )
    if output.stride < 1:
        c.add(f"output.stride must be at least 1, got {output.stride}")
    unknown_formats = [f for f in output.formats if f not in OUTPUT_FORMATS]
    if unknown_formats:
        c.add(f"output.formats: unknown format(s) {', '.join(unknown_formats)}")

    if c.violations:
        raise ValidationError(
            f"{len(c.violations)} configuration problem(s): {c.violations[0]}", c.violations
        )
    assert geometry is not None and graph is not None
    return RunConfig(
        geometry=geometry,
        graph=graph,
        surface_graph=surface,
        lam=lam,
        tau=tau,
        t_end=t_end,
        initial=initial,
        forcing=forcing,
        output=output,
        solver=solver,
        entries=raw,
    )


def load_config(path: str | Path) -> RunConfig:
    """Read and parse a configuration file.

    Raises:
        ValidationError: If the file does not exist.
    """
    file_path = Path(path)
    if not file_path.is_file():
        raise ValidationError(f"Config file not found: {path}")
    logger.info("Loading configuration from %s", file_path)
    return parse_config(file_path.read_text(encoding="utf-8"))


def output_root(override: str | None = None) -> Path:
    """Root directory for run outputs: flag, then DYNBOUND_OUTPUT_ROOT, then ``runs``."""
    return Path(override or os.environ.get("DYNBOUND_OUTPUT_ROOT", DEFAULT_OUTPUT_ROOT))


def worker_count(override: int | None = None) -> int:
    """Threads for independent runs: flag, then DYNBOUND_WORKERS, then 1.

    Raises:
        ValidationError: If the value is not a positive integer.
    """
    if override is not None:
        value: Any = override
    else:
        value = os.environ.get("DYNBOUND_WORKERS", DEFAULT_WORKERS)
    try:
        workers = int(value)
    except (TypeError, ValueError) as e:
        raise ValidationError(f"DYNBOUND_WORKERS must be an integer, got '{value}'") from e
    if workers < 1:
        raise ValidationError(f"worker count must be at least 1, got {workers}")
    return workers
