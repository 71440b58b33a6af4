"""Implicit Euler for the regularized bulk-surface flow with a semismooth Newton solver.

Each step solves the nodal system

    M (u - u_prev) / dt + A xi(u) = M f,   xi = Yosida map of the graphs,

written here as the weighted residual ``R(u) = (u - u_prev)/dt - f + M^-1 A xi(u)``.
Bulk unknowns use the bulk graph and surface unknowns the surface graph; the flux is
one value per node, so its boundary value is the surface flux.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from numpy.typing import ArrayLike, NDArray

from .discretization import DiscreteOperators, FloatArray
from .dual import MEAN_ZERO_TOL, DualSolverContext
from .exceptions import (
    ForcingNotMeanZero,
    NewtonStalled,
    SolverDiverged,
    ValidationError,
)
from .graphs import GraphPair

logger = logging.getLogger(__name__)

Forcing = Callable[[float], FloatArray]

FORCING_MEAN_TOL = 1e-12
ARMIJO = 1e-4
MERIT_NOISE = 1e3 * float(np.finfo(float).eps)


@dataclass(frozen=True)
class StepParams:
    """Time step, regularization and Newton controls.

    Attributes:
        tau: Nominal time step.
        lam: Regularization parameter lambda.
        newton_tol: Tolerance on the weighted l2 norm of the nodal residual, relative to
            ``residual_scale``.
        newton_max_iter: Newton iterations allowed per step.
        backtrack: Step-length reduction factor of the line search.
        max_halvings: Step-length reductions tried before the step fails.
    """

    tau: float
    lam: float
    newton_tol: float = 1e-11
    newton_max_iter: int = 50
    backtrack: float = 0.5
    max_halvings: int = 20

    def __post_init__(self) -> None:
        problems = []
        if not self.tau > 0:
            problems.append(f"tau must be positive, got {self.tau}")
        if not self.lam > 0:
            problems.append(f"lambda must be positive, got {self.lam}")
        if not self.newton_tol > 0:
            problems.append(f"newton_tol must be positive, got {self.newton_tol}")
        if self.newton_max_iter < 1:
            problems.append(f"newton_max_iter must be at least 1, got {self.newton_max_iter}")
        if not 0 < self.backtrack < 1:
            problems.append(f"backtrack must lie in (0, 1), got {self.backtrack}")
        if problems:
            raise ValidationError(problems[0], problems)

    def to_dict(self) -> dict[str, Any]:
        return {
            "tau": self.tau,
            "lambda": self.lam,
            "newton_tol": self.newton_tol,
            "newton_max_iter": self.newton_max_iter,
        }


def zero_forcing(ops: DiscreteOperators) -> Forcing:
    zeros = np.zeros(ops.dim)
    zeros.flags.writeable = False
    return lambda t: zeros


@dataclass(frozen=True, eq=False)
class ProblemData:
    """Graphs, initial datum, forcing and horizon of one run.

    Attributes:
        graphs: Bulk and surface graphs.
        initial: Initial field u0.
        t_end: Horizon T.
        forcing: Map t -> forcing field, mean-zero at every sample.
        m0: Mean removed by ``shift_mean_mode`` (0 for unshifted data).
    """

    graphs: GraphPair
    initial: FloatArray
    t_end: float
    forcing: Forcing
    m0: float = 0.0

    def __post_init__(self) -> None:
        if not self.t_end >= 0:
            raise ValidationError(f"T must be nonnegative, got {self.t_end}")


@dataclass(frozen=True)
class StepResult:
    u: FloatArray
    xi: FloatArray
    iterations: int
    residual: float


@dataclass
class Trajectory:
    """Fields u^0..u^N of a run with per-step diagnostics.

    ``fluxes[n]`` is the Yosida flux of ``fields[n]``; ``forcing[n]`` is the sample
    used by step n (taken at ``times[n + 1]``). Per-step arrays have length N.
    """

    times: FloatArray
    fields: FloatArray
    fluxes: FloatArray
    forcing: FloatArray
    iterations: NDArray[np.int_]
    residuals: FloatArray
    du_dualnorm: FloatArray
    phi: FloatArray
    masses: FloatArray
    params: StepParams
    graphs: GraphPair
    m0: float = 0.0
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def n_steps(self) -> int:
        return int(self.times.size - 1)

    @property
    def steps(self) -> FloatArray:
        return np.diff(self.times)

    def reconstructed(self) -> FloatArray:
        """Fields of the original problem, u^n = v^n + m0."""
        return self.fields + self.m0

    def diagnostics_rows(self, ops: DiscreteOperators) -> list[dict[str, float]]:
        rows = []
        for n in range(self.n_steps + 1):
            rows.append(
                {
                    "step": n,
                    "t": float(self.times[n]),
                    "mass": float(self.masses[n]),
                    "phi_lambda": float(self.phi[n]),
                    "newton_iters": int(self.iterations[n - 1]) if n else 0,
                    "residual": float(self.residuals[n - 1]) if n else 0.0,
                    "du_dualnorm": float(self.du_dualnorm[n - 1]) if n else 0.0,
                    "xi_mean": ops.mean(self.fluxes[n]),
                }
            )
        return rows


def apply_graph_pair(
    graphs: GraphPair, lam: float, u: ArrayLike, n_bulk: int
) -> FloatArray:
    """Nodal Yosida flux: bulk graph on bulk unknowns, surface graph on surface ones."""
    uu = np.asarray(u, dtype=float)
    return np.concatenate(
        [
            np.atleast_1d(graphs.bulk.yosida(lam, uu[:n_bulk])),
            np.atleast_1d(graphs.surface.yosida(lam, uu[n_bulk:])),
        ]
    )


def flux_slopes(graphs: GraphPair, lam: float, u: FloatArray, n_bulk: int) -> FloatArray:
    return np.concatenate(
        [graphs.bulk.yosida_slope(lam, u[:n_bulk]), graphs.surface.yosida_slope(lam, u[n_bulk:])]
    )


def compute_phi_lambda(
    ops: DiscreteOperators, graphs: GraphPair, lam: float, u: ArrayLike
) -> float:
    """phi_lambda(u): weighted sum of the envelopes over bulk and surface."""
    bulk, surface = ops.split(u)
    w_bulk, w_surface = ops.weights[: ops.n_bulk], ops.weights[ops.n_bulk :]
    return float(
        w_bulk @ np.atleast_1d(graphs.bulk.envelope(lam, bulk))
        + w_surface @ np.atleast_1d(graphs.surface.envelope(lam, surface))
    )


def compute_phi_parts(
    ops: DiscreteOperators, graphs: GraphPair, u: ArrayLike
) -> tuple[float, float]:
    """Unregularized functional split as (bulk integral, surface integral) of beta_hat."""
    bulk, surface = ops.split(u)
    return (
        float(ops.weights[: ops.n_bulk] @ np.atleast_1d(graphs.bulk.antiderivative(bulk))),
        float(ops.weights[ops.n_bulk :] @ np.atleast_1d(graphs.surface.antiderivative(surface))),
    )


def compute_phi(ops: DiscreteOperators, graphs: GraphPair, u: ArrayLike) -> float:
    bulk, surface = compute_phi_parts(ops, graphs, u)
    return bulk + surface


def nodal_residual(
    ops: DiscreteOperators,
    xi: FloatArray,
    u: FloatArray,
    u_prev: FloatArray,
    f: FloatArray,
    dt: float,
) -> FloatArray:
    """Residual of the nodal system tested against every nodal basis field."""
    return (u - u_prev) / dt - f + np.asarray(ops.stiffness @ xi) / ops.weights


def weighted_norm(ops: DiscreteOperators, r: FloatArray) -> float:
    return float(np.sqrt(np.sum(ops.weights * r * r)))


def stiffness_magnitude(ops: DiscreteOperators) -> sp.csr_matrix:
    """Entrywise |A|, which bounds the round-off of the stiffness product."""
    return abs(ops.stiffness).tocsr()


def residual_scale(
    ops: DiscreteOperators,
    xi: FloatArray,
    u: FloatArray,
    u_prev: FloatArray,
    f: FloatArray,
    dt: float,
    magnitude: sp.csr_matrix | None = None,
) -> float:
    """Size of the terms summed in the nodal residual, never below 1.

    ``newton_tol`` is relative to this scale: the stiffness term grows like 1/h^2 and
    the time difference like 1/dt, so an absolute tolerance falls below round-off on
    fine grids and short steps.
    """
    magnitude = stiffness_magnitude(ops) if magnitude is None else magnitude
    coupling = np.asarray(magnitude @ np.abs(xi)) / ops.weights
    return max(
        1.0,
        weighted_norm(ops, u) / dt,
        weighted_norm(ops, u_prev) / dt,
        weighted_norm(ops, f),
        weighted_norm(ops, coupling),
    )


class ImplicitEulerStepper:
    """One implicit Euler step at a time for fixed operators, graphs and parameters.

    Each step minimizes the convex energy ``|P(u - target)|_*^2 / (2 dt) + phi_lambda(u)``
    with ``target = u_prev + dt f``; its optimality condition is the nodal system. Newton
    directions come from the generalized derivative ``M/dt + A D`` of the residual, and
    the line search backtracks on that energy, falling back to the residual norm only once
    the energy is flat to round-off.

    Args:
        ops: Discrete operators.
        ctx: Dual solver, used by the line-search energy.
        graphs: Graphs the flux is built from.
        params: Step parameters.
        project_forcing: Remove a nonzero forcing mean instead of raising.
    """

    def __init__(
        self,
        ops: DiscreteOperators,
        ctx: DualSolverContext,
        graphs: GraphPair,
        params: StepParams,
        *,
        project_forcing: bool = False,
    ) -> None:
        self.ops = ops
        self.ctx = ctx
        self.graphs = graphs
        self.params = params
        self.project_forcing = project_forcing
        self._magnitude = stiffness_magnitude(ops)
        # dual norms from CG carry its relative error into the energy
        self._merit_noise = MERIT_NOISE + (ctx.tol if ctx.method == "cg" else 0.0)

    def flux(self, u: FloatArray) -> FloatArray:
        return apply_graph_pair(self.graphs, self.params.lam, u, self.ops.n_bulk)

    def admissible_forcing(self, f: ArrayLike, step_index: int | None = None) -> FloatArray:
        """Check (or remove) the mean of a forcing sample.

        Raises:
            ForcingNotMeanZero: If |m(f)| > 1e-12 and projection is off.
        """
        arr = self.ops.check(f, "forcing")
        m = self.ops.mean(arr)
        if abs(m) <= FORCING_MEAN_TOL:
            return arr
        where = f"step {step_index}: " if step_index is not None else ""
        if not self.project_forcing:
            raise ForcingNotMeanZero(
                f"{where}forcing has mean {m:.3e}; enable project_forcing to remove it",
                {"mean": m, "step_index": step_index},
            )
        logger.warning("%sdiscarding forcing mean %.3e", where, m)
        return arr - m

    def tolerance(
        self, xi: FloatArray, u: FloatArray, u_prev: FloatArray, f: FloatArray, dt: float
    ) -> float:
        """Residual norm accepted as converged at ``u``."""
        scale = residual_scale(self.ops, xi, u, u_prev, f, dt, self._magnitude)
        return self.params.newton_tol * scale

    def _merit(self, u: FloatArray, target: FloatArray, dt: float) -> float:
        d = self.ops.project(u - target)
        return self.ctx.dual_inner(d, d) / (2.0 * dt) + compute_phi_lambda(
            self.ops, self.graphs, self.params.lam, u
        )

    def newton_direction(self, slopes: FloatArray, rhs: FloatArray, dt: float) -> FloatArray:
        """Solve ``(M/dt + A D) du = rhs`` for diagonal ``D = diag(slopes) >= 0``.

        With ``dxi = D du`` the rows of nodes with a positive slope form the symmetric
        positive definite system ``(A_II + M_I D_I^-1 / dt) dxi_I = rhs_I``, factorized
        with symmetric ordering; the remaining nodes follow row by row from the diagonal
        mass.
        """
        ops = self.ops
        active = np.flatnonzero(slopes > 0.0)
        inactive = np.flatnonzero(slopes <= 0.0)
        du = np.empty(ops.dim)
        coupling = np.zeros(ops.dim)
        if active.size:
            d = slopes[active]
            block = ops.stiffness[active][:, active]
            system = (block + sp.diags(ops.weights[active] / (dt * d))).tocsc()
            lu = spla.splu(
                system,
                permc_spec="MMD_AT_PLUS_A",
                diag_pivot_thresh=0.0,
                options={"SymmetricMode": True},
            )
            dxi = lu.solve(rhs[active])
            du[active] = dxi / d
            coupling = np.asarray(ops.stiffness[:, active] @ dxi)
        du[inactive] = dt * (rhs[inactive] - coupling[inactive]) / ops.weights[inactive]
        return du

    def step(
        self,
        u_prev: ArrayLike,
        f: ArrayLike,
        dt: float | None = None,
        step_index: int | None = None,
    ) -> StepResult:
        """Advance one step.

        Args:
            u_prev: Previous field.
            f: Forcing sample for this step.
            dt: Step size (defaults to ``params.tau``).
            step_index: Index used in diagnostics and error messages.

        Returns:
            The new field with its flux, iteration count and final residual.

        Raises:
            ForcingNotMeanZero: If the forcing sample is not mean-zero.
            NewtonStalled: If the residual does not reach the tolerance within
                ``newton_max_iter`` iterations, or no step length decreases the energy.
        """
        ops, params = self.ops, self.params
        dt = params.tau if dt is None else dt
        u_prev = ops.check(u_prev, "u_prev")
        f = self.admissible_forcing(f, step_index)
        target = u_prev + dt * f
        target_mean = ops.mean(target)

        u = u_prev.copy()
        xi = self.flux(u)
        r = nodal_residual(ops, xi, u, u_prev, f, dt)
        norm = weighted_norm(ops, r)
        tol = self.tolerance(xi, u, u_prev, f, dt)
        best_u, best_norm = u, norm
        iterations = 0

        while norm > tol:
            if iterations >= params.newton_max_iter:
                raise NewtonStalled(
                    f"step {step_index}: Newton stopped after {iterations} iterations "
                    f"with residual {best_norm:.3e} > {tol:.1e}",
                    residual=best_norm,
                    best_iterate=best_u,
                    step_index=step_index,
                )
            iterations += 1
            slopes = flux_slopes(self.graphs, params.lam, u, ops.n_bulk)
            du = self.newton_direction(slopes, -ops.weights * r, dt)
            if not np.all(np.isfinite(du)):
                raise SolverDiverged(f"step {step_index}: Newton system produced non-finite values")
            # the exact direction keeps the mean; remove what the solve lost to round-off
            du += target_mean - ops.mean(u) - ops.mean(du)

            accepted = self._line_search(u, du, slopes, norm, u_prev, f, dt, target)
            if accepted is None:
                logger.warning(
                    "step %s: line search exhausted after %d reductions", step_index,
                    params.max_halvings,
                )
                raise NewtonStalled(
                    f"step {step_index}: line search found no decrease after "
                    f"{params.max_halvings} reductions at iteration {iterations} "
                    f"(residual {best_norm:.3e} > {tol:.1e})",
                    residual=best_norm,
                    best_iterate=best_u,
                    step_index=step_index,
                )
            u, xi, r, norm = accepted
            tol = self.tolerance(xi, u, u_prev, f, dt)
            logger.debug("step %s newton %d residual %.3e", step_index, iterations, norm)
            if norm < best_norm:
                best_u, best_norm = u, norm

        return StepResult(u=u, xi=xi, iterations=iterations, residual=norm)

    def _line_search(
        self,
        u: FloatArray,
        du: FloatArray,
        slopes: FloatArray,
        norm: float,
        u_prev: FloatArray,
        f: FloatArray,
        dt: float,
        target: FloatArray,
    ) -> tuple[FloatArray, FloatArray, FloatArray, float] | None:
        """Armijo backtracking on the step energy; None when every step length fails."""
        ops, params = self.ops, self.params
        merit = self._merit(u, target, dt)
        # directional derivative of the energy along the Newton direction
        d = ops.project(du)
        descent = -self.ctx.dual_inner(d, d) / dt - float(np.sum(ops.weights * slopes * du * du))
        noise = self._merit_noise * max(1.0, abs(merit))
        s = 1.0
        for _ in range(params.max_halvings + 1):
            trial = u + s * du
            xi = self.flux(trial)
            r = nodal_residual(ops, xi, trial, u_prev, f, dt)
            trial_norm = weighted_norm(ops, r)
            change = self._merit(trial, target, dt) - merit
            if change <= ARMIJO * s * descent:
                return trial, xi, r, trial_norm
            # energy flat to round-off: the residual decides
            if change <= noise and trial_norm <= (1.0 - ARMIJO * s) * norm:
                return trial, xi, r, trial_norm
            s *= params.backtrack
        return None


def time_grid(t_end: float, tau: float) -> FloatArray:
    """Uniform grid 0, tau, 2 tau, ... with the last step shortened to end at T."""
    n_steps = int(math.ceil(t_end / tau - 1e-9)) if t_end > 0 else 0
    times = np.minimum(np.arange(n_steps + 1) * tau, t_end)
    if n_steps:
        times[-1] = t_end
    return times


def run(
    data: ProblemData,
    params: StepParams,
    ops: DiscreteOperators,
    ctx: DualSolverContext,
    *,
    project_forcing: bool = False,
) -> Trajectory:
    """Integrate from the initial datum to T.

    Args:
        data: Graphs, initial datum, forcing and horizon.
        params: Step parameters.
        ops: Discrete operators.
        ctx: Dual solver for the increment norms.
        project_forcing: Remove nonzero forcing means instead of raising.

    Returns:
        The trajectory with per-step diagnostics.

    Raises:
        NewtonStalled: With the index of the failing step.
        ForcingNotMeanZero: With the index of the offending step.
    """
    stepper = ImplicitEulerStepper(ops, ctx, data.graphs, params, project_forcing=project_forcing)
    times = time_grid(data.t_end, params.tau)
    n_steps = times.size - 1
    u = ops.check(data.initial, "initial").copy()

    fields = np.empty((n_steps + 1, ops.dim))
    fluxes = np.empty((n_steps + 1, ops.dim))
    forcing = np.empty((n_steps, ops.dim))
    iterations = np.zeros(n_steps, dtype=int)
    residuals = np.zeros(n_steps)
    du_dualnorm = np.zeros(n_steps)
    phi = np.empty(n_steps + 1)
    masses = np.empty(n_steps + 1)

    fields[0] = u
    fluxes[0] = stepper.flux(u)
    phi[0] = compute_phi_lambda(ops, data.graphs, params.lam, u)
    masses[0] = ops.mean(u)
    logger.info(
        "Running %d steps on %s with lambda=%g, tau=%g", n_steps, ops.geometry.describe(),
        params.lam, params.tau,
    )

    for n in range(n_steps):
        dt = float(times[n + 1] - times[n])
        f_n = stepper.admissible_forcing(data.forcing(float(times[n + 1])), n)
        result = stepper.step(u, f_n, dt, step_index=n)
        forcing[n] = f_n
        du_dualnorm[n] = ctx.v0_dual_norm(ops.project(result.u - u)) / dt
        u = result.u
        fields[n + 1] = u
        fluxes[n + 1] = result.xi
        iterations[n] = result.iterations
        residuals[n] = result.residual
        phi[n + 1] = compute_phi_lambda(ops, data.graphs, params.lam, u)
        masses[n + 1] = ops.mean(u)
        logger.debug(
            "step %d t=%.6g newton=%d residual=%.3e phi=%.6g",
            n, times[n + 1], result.iterations, result.residual, phi[n + 1],
        )

    logger.info("Run finished: %d Newton iterations in total", int(iterations.sum()))
    return Trajectory(
        times=times,
        fields=fields,
        fluxes=fluxes,
        forcing=forcing,
        iterations=iterations,
        residuals=residuals,
        du_dualnorm=du_dualnorm,
        phi=phi,
        masses=masses,
        params=params,
        graphs=data.graphs,
        m0=data.m0,
    )


def shift_mean_mode(data: ProblemData, ops: DiscreteOperators) -> ProblemData:
    """Mean-zero problem for nonzero-mean initial data.

    The mean m0 = m(u0) is removed from the initial datum and moved into the graphs,
    which become r -> beta(r + m0). Fields of the returned problem reconstruct as
    u = v + m0 (``Trajectory.reconstructed``). A mean below 1e-10 returns ``data`` unchanged.
    """
    m0 = ops.mean(data.initial)
    if abs(m0) <= MEAN_ZERO_TOL:
        return data
    logger.info("Shifting graphs by the initial mean m0=%.6g", m0)
    return ProblemData(
        graphs=data.graphs.shifted(m0),
        initial=ops.project(data.initial),
        t_end=data.t_end,
        forcing=data.forcing,
        m0=data.m0 + m0,
    )
