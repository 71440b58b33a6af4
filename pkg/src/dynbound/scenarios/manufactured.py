"""Single-mode exact solutions and the discretization convergence study."""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np

from ..discretization import DiscreteOperators, FloatArray, Geometry, Strip, build_operators
from ..exceptions import ValidationError, WrongGeometry
from .runner import prepare_scenario, run_prepared

if TYPE_CHECKING:
    from ..config import RunConfig

logger = logging.getLogger(__name__)

TAU_ORDER_BAND = (0.8, 1.2)
H_ORDER_BAND = (1.6, 2.4)


@dataclass(frozen=True)
class ManufacturedCase:
    """Exact solution u(t, x, y) = A exp(-rate t) cos(kappa x) of the linear problem.

    The field is constant in y, so the normal derivative vanishes and the surface
    equation reduces to the surface heat equation with the same rate. The induced
    forcing is identically zero and the mass stays zero.

    Attributes:
        k: Mode index.
        lx: Period of the strip.
        c0: Slope of the linear graph.
        lam: Regularization parameter; the Yosida slope is c0 / (1 + lam c0).
        amplitude: Amplitude A.
    """

    k: int
    lx: float
    c0: float = 1.0
    lam: float = 0.0
    amplitude: float = 1.0

    @property
    def kappa(self) -> float:
        return 2.0 * math.pi * self.k / self.lx

    @property
    def rate(self) -> float:
        return self.c0 * self.kappa**2 / (1.0 + self.lam * self.c0)

    def decay_factor(self, dt: float) -> float:
        return math.exp(-self.rate * dt)

    def exact(self, ops: DiscreteOperators, t: float) -> FloatArray:
        return self.amplitude * self.decay_factor(t) * np.cos(self.kappa * ops.x)

    def to_dict(self) -> dict[str, Any]:
        return {
            "k": self.k,
            "kappa": self.kappa,
            "rate": self.rate,
            "amplitude": self.amplitude,
            "forcing": "zero",
        }


def single_mode_exact(
    geometry: Geometry,
    k: int,
    t: float,
    *,
    c0: float = 1.0,
    lam: float = 0.0,
    amplitude: float = 1.0,
) -> FloatArray:
    """Sample the exact single-mode solution at time t on every node.

    Args:
        geometry: Strip geometry.
        k: Mode index (>= 1).
        t: Time.
        c0: Linear graph slope.
        lam: Regularization parameter.
        amplitude: Initial amplitude.

    Raises:
        WrongGeometry: If the geometry is not a strip.
        ValidationError: If k < 1 or t < 0.
    """
    if not isinstance(geometry, Strip):
        raise WrongGeometry(
            f"single-mode solutions need the strip geometry, got {geometry.describe()}"
        )
    if k < 1:
        raise ValidationError(f"mode index must be at least 1, got {k}")
    if t < 0:
        raise ValidationError(f"time must be nonnegative, got {t}")
    case = ManufacturedCase(k=k, lx=geometry.lx, c0=c0, lam=lam, amplitude=amplitude)
    return case.exact(build_operators(geometry), t)


def parse_level(text: str) -> tuple[int, int, float]:
    """Parse one ``nx:ny:tau`` level.

    Raises:
        ValidationError: On a malformed level.
    """
    parts = text.strip().split(":")
    if len(parts) != 3:
        raise ValidationError(f"level '{text}' must read nx:ny:tau")
    try:
        nx, ny, tau = int(parts[0]), int(parts[1]), float(parts[2])
    except ValueError as e:
        raise ValidationError(f"level '{text}': {e}") from e
    if nx < 4 or ny < 2 or not tau > 0:
        raise ValidationError(f"level '{text}' needs nx >= 4, ny >= 2 and tau > 0")
    return nx, ny, tau


@dataclass
class ConvergenceTable:
    """Errors per level and observed orders between consecutive levels."""

    levels: list[tuple[int, int, float]]
    lx: float
    errors: list[float]

    @property
    def kinds(self) -> list[str]:
        """``"h"`` if the grid changes between two levels, else ``"tau"``."""
        return ["h" if a[0] != b[0] else "tau" for a, b in zip(self.levels, self.levels[1:])]

    @property
    def orders(self) -> list[float]:
        orders = []
        for (a, b), (ea, eb), kind in zip(
            zip(self.levels, self.levels[1:]), zip(self.errors, self.errors[1:]), self.kinds
        ):
            ratio = (b[0] / a[0]) if kind == "h" else (a[2] / b[2])
            if ea > 0 and eb > 0 and ratio != 1.0:
                orders.append(math.log(ea / eb) / math.log(ratio))
            else:
                orders.append(math.nan)
        return orders

    @property
    def passed(self) -> list[bool]:
        result = []
        for order, kind in zip(self.orders, self.kinds):
            low, high = H_ORDER_BAND if kind == "h" else TAU_ORDER_BAND
            result.append(low <= order <= high)
        return result

    def rows(self) -> FloatArray:
        """Columns nx, ny, tau, error, order (NaN on the first level)."""
        orders = [math.nan, *self.orders]
        return np.array(
            [[nx, ny, tau, e, p] for (nx, ny, tau), e, p in zip(self.levels, self.errors, orders)],
            dtype=float,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "levels": [{"nx": nx, "ny": ny, "tau": tau} for nx, ny, tau in self.levels],
            "errors": self.errors,
            "orders": [None if math.isnan(p) else p for p in self.orders],
            "kinds": self.kinds,
            "passed": self.passed,
        }

    def format_summary(self) -> str:
        lines = [f"{'nx':>5} {'ny':>5} {'tau':>10} {'sup error':>14} {'order':>8} {'':>4}"]
        orders = [math.nan, *self.orders]
        marks = ["", *("ok" if p else "OUT" for p in self.passed)]
        for (nx, ny, tau), e, p, mark in zip(self.levels, self.errors, orders, marks):
            lines.append(f"{nx:>5} {ny:>5} {tau:>10.3g} {e:>14.6e} {p:>8.3f} {mark:>4}")
        return "\n".join(lines)


def manufactured_case(config: RunConfig) -> ManufacturedCase:
    """Exact solution matching a single-mode config.

    Raises:
        ValidationError: If the config is not a single-mode run with a single linear
            graph and zero forcing on the strip.
    """
    problems = []
    if not isinstance(config.geometry, Strip):
        problems.append("the manufactured case needs the strip geometry")
    if config.initial.profile != "single_mode":
        problems.append("the manufactured case needs initial.profile = single_mode")
    if config.graph.preset != "linear" or config.surface_graph is not None:
        problems.append("the manufactured case needs a single linear graph")
    if config.forcing.kind not in ("zero", "manufactured"):
        problems.append("the manufactured case needs zero forcing")
    if problems:
        raise ValidationError(problems[0], problems)
    assert isinstance(config.geometry, Strip)
    return ManufacturedCase(
        k=config.initial.k,
        lx=config.geometry.lx,
        c0=float(config.graph.params.get("c0", 1.0)),
        lam=config.lam,
        amplitude=config.initial.amplitude,
    )


def sup_error(config: RunConfig) -> float:
    """sup_n |u^n - u_exact(t_n)|_H of one manufactured run."""
    case = manufactured_case(config)
    scenario = prepare_scenario(config)
    traj = run_prepared(scenario)
    ops = scenario.ops
    errors = [ops.norm_h(u - case.exact(ops, float(t))) for t, u in zip(traj.times, traj.fields)]
    return float(max(errors))


def convergence_study(
    config: RunConfig, levels: Sequence[str], *, workers: int = 1
) -> ConvergenceTable:
    """Run the manufactured case on each level and estimate observed orders.

    Args:
        config: Single-mode linear configuration; its grid and tau are replaced.
        levels: Levels as ``nx:ny:tau`` strings, at least two.
        workers: Threads for the independent level runs.

    Raises:
        ValidationError: If the config or the levels are unsuitable.
    """
    manufactured_case(config)
    parsed = [parse_level(text) for text in levels]
    if len(parsed) < 2:
        raise ValidationError(f"need at least 2 levels, got {len(parsed)}")

    def one(level: tuple[int, int, float]) -> float:
        nx, ny, tau = level
        logger.info("convergence study: level nx=%d ny=%d tau=%g", nx, ny, tau)
        return sup_error(
            config.with_entries({"geometry.nx": nx, "geometry.ny": ny, "run.tau": tau})
        )

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        errors = list(pool.map(one, parsed))
    assert isinstance(config.geometry, Strip)
    return ConvergenceTable(levels=parsed, lx=config.geometry.lx, errors=errors)
