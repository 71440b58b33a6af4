"""Uniform-in-lambda bounds, their discrete verification, and the estimate report.

Every inequality is checked on two tracks:

- a structural track, built from quantities measured on the trajectory, which the
  backward Euler scheme satisfies exactly (up to the Newton residual);
- an a-priori track against the constants M1..M5 computed from the data alone, in
  the embedding-corrected form that uses max(1, C_emb^2) |f|^2.

A FAIL on the structural track is a solver bug; the uncorrected a-priori constants
are reported for comparison.
"""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from .discretization import DiscreteOperators, FloatArray
from .dual import DualSolverContext
from .exceptions import (
    GraphNotValidated,
    MismatchedRuns,
    NegativeIntercept,
    NotAffineFarField,
    ValidationError,
)
from .graphs import GraphPair, MonotoneGraph
from .stepper import (
    ProblemData,
    StepParams,
    Trajectory,
    compute_phi,
    nodal_residual,
    residual_scale,
    run,
    stiffness_magnitude,
    time_grid,
    weighted_norm,
)

logger = logging.getLogger(__name__)

PASS = "PASS"
FAIL = "FAIL"
NOT_APPLICABLE = "NOT-APPLICABLE"

IDENTITY_TOL = 1e-10
TRACE_TOL = 1e-10


@dataclass(frozen=True)
class BoundConstants:
    """Explicit constants of the uniform estimates.

    The ``*_emb`` variants replace |f|^2 by max(1, C_emb^2) |f|^2.
    """

    m1: float
    m2: float
    m3: float
    m4: float
    m5: float
    m1_emb: float
    m2_emb: float
    m3_emb: float
    m5_emb: float
    lambda_bar: float
    c_star: float
    c0: float
    c0_prime: float
    threshold: float
    c1: float
    c2: float
    c3: float
    c4: float
    c_p: float
    c_emb: float
    f_sq: float
    phi0: float
    t_end: float
    vol_omega: float
    vol_gamma: float

    def to_dict(self) -> dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class CheckRecord:
    """Outcome of one inequality or identity check.

    Attributes:
        name: Check identifier.
        measured: Left-hand side (worst case over steps).
        bound: Right-hand side it is compared with.
        status: ``PASS``, ``FAIL`` or ``NOT-APPLICABLE``.
        structural: Whether the check is an exact property of the scheme.
        detail: Short free-text note.
    """

    name: str
    measured: float | None
    bound: float | None
    status: str
    structural: bool
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status != FAIL

    @property
    def margin(self) -> float | None:
        if self.measured is None or self.bound is None:
            return None
        return self.bound - self.measured

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "measured": _finite_or_none(self.measured),
            "bound": _finite_or_none(self.bound),
            "margin": _finite_or_none(self.margin),
            "status": self.status,
            "structural": self.structural,
            "detail": self.detail,
        }


def _finite_or_none(value: float | None) -> float | None:
    if value is None or not math.isfinite(value):
        return None
    return float(value)


def _slack(bound: float, newton_tol: float) -> float:
    return 10.0 * newton_tol * max(1.0, abs(bound))


def _compare(
    name: str,
    measured: float,
    bound: float,
    newton_tol: float,
    *,
    structural: bool,
    detail: str = "",
) -> CheckRecord:
    status = PASS if measured <= bound + _slack(bound, newton_tol) else FAIL
    return CheckRecord(name, float(measured), float(bound), status, structural, detail)


def _c_star(graph: MonotoneGraph) -> float:
    return graph.sup_abs_on(graph.far_field.m0)


def _flux_mean_bound(graph: MonotoneGraph) -> float:
    # |beta(r) - c0 r| <= c* + c0 M0 on [-M0, M0] and |c0_plus|, |c0_minus| outside
    ff = graph.far_field
    return _c_star(graph) + ff.c0 * ff.m0 + max(abs(ff.c0_plus), abs(ff.c0_minus))


def forcing_samples(
    data: ProblemData, params: StepParams, ops: DiscreteOperators, project_forcing: bool = False
) -> tuple[FloatArray, FloatArray]:
    """Step sizes and forcing samples exactly as the stepper uses them."""
    times = time_grid(data.t_end, params.tau)
    samples = np.array([ops.check(data.forcing(float(t)), "forcing") for t in times[1:]])
    samples = samples.reshape(times.size - 1, ops.dim)
    if project_forcing and samples.size:
        samples = samples - (samples @ ops.weights)[:, None] / ops.volume
    return np.diff(times), samples


def compute_constants(
    data: ProblemData,
    params: StepParams,
    ops: DiscreteOperators,
    ctx: DualSolverContext,
    *,
    relax_intercept: bool = False,
    project_forcing: bool = False,
) -> BoundConstants:
    """Evaluate M1..M5, lambda_bar and c* for one problem.

    Args:
        data: Problem data; its graphs may be mean-shifted.
        params: Step parameters (the time grid enters the forcing quadrature).
        ops: Discrete operators.
        ctx: Dual solver providing c_P and C_emb.
        relax_intercept: Admit a negative far-field intercept.
        project_forcing: Remove forcing means as the stepper would.

    Returns:
        The constants.

    Raises:
        GraphNotValidated: If a graph fails the far-field validation.
    """
    graphs = data.graphs
    try:
        c0, _ = graphs.shared_far_field(relax_intercept)
    except (NotAffineFarField, NegativeIntercept) as e:
        raise GraphNotValidated(f"bound constants need validated graphs: {e.message}") from e

    dts, samples = forcing_samples(data, params, ops, project_forcing)
    f_sq = float(sum(dt * ops.inner_h(f, f) for dt, f in zip(dts, samples)))
    phi0 = compute_phi(ops, graphs, data.initial)
    t_end = float(np.sum(dts))

    bulk_cert = graphs.bulk.certificate
    surface_cert = graphs.surface.certificate
    c1, c2 = bulk_cert.c1, bulk_cert.c2
    c3, c4 = surface_cert.c1, surface_cert.c2

    c_p = ctx.poincare_constant
    c_emb = ctx.embedding_constant
    emb = max(1.0, c_emb * c_emb)

    def m2_of(m1: float) -> float:
        return (2.0 / c1) * (m1 + c2 * ops.vol_omega) + (2.0 / c3) * (m1 + c4 * ops.vol_gamma)

    m1 = phi0 + 0.5 * f_sq
    m1_emb = phi0 + 0.5 * emb * f_sq
    m3 = 2.0 * f_sq + 4.0 * m1
    m3_emb = 2.0 * emb * f_sq + 4.0 * m1_emb
    m4 = max(_flux_mean_bound(graphs.bulk), _flux_mean_bound(graphs.surface))
    ff_bulk, ff_surface = graphs.bulk.far_field, graphs.surface.far_field

    return BoundConstants(
        m1=m1,
        m2=m2_of(m1),
        m3=m3,
        m4=m4,
        m5=c_p * (m3 + m4 * m4 * t_end),
        m1_emb=m1_emb,
        m2_emb=m2_of(m1_emb),
        m3_emb=m3_emb,
        m5_emb=c_p * (m3_emb + m4 * m4 * t_end),
        lambda_bar=min(1.0, 1.0 / (2.0 * max(c1, c3))),
        c_star=max(_c_star(graphs.bulk), _c_star(graphs.surface)),
        c0=c0,
        c0_prime=max(
            abs(ff_bulk.c0_plus), abs(ff_bulk.c0_minus),
            abs(ff_surface.c0_plus), abs(ff_surface.c0_minus),
        ),
        threshold=max(ff_bulk.m0, ff_surface.m0),
        c1=c1,
        c2=c2,
        c3=c3,
        c4=c4,
        c_p=c_p,
        c_emb=c_emb,
        f_sq=f_sq,
        phi0=phi0,
        t_end=t_end,
        vol_omega=ops.vol_omega,
        vol_gamma=ops.vol_gamma,
    )


def _energy_sums(
    traj: Trajectory, ctx: DualSolverContext
) -> tuple[FloatArray, FloatArray]:
    """Cumulative 1/2 sum dt |du/dt|^2_* and 1/2 sum dt |f|^2_* after each step."""
    dts = traj.steps
    kinetic = 0.5 * dts * traj.du_dualnorm**2
    forcing = np.array(
        [0.5 * dt * ctx.v0_dual_norm(ctx.ops.project(f)) ** 2 for dt, f in zip(dts, traj.forcing)]
    )
    zero = np.zeros(1)
    return np.concatenate([zero, np.cumsum(kinetic)]), np.concatenate([zero, np.cumsum(forcing)])


def check_energy_bound(
    traj: Trajectory,
    constants: BoundConstants,
    ctx: DualSolverContext,
) -> list[CheckRecord]:
    """Energy estimate: 1/2 sum dt |du/dt|^2_* + phi_lambda(u^n) stays below M1 for every n.

    Returns the measured-chain record (bound phi(u0) + 1/2 sum dt |f|^2_*), the
    embedding-corrected M1 record and the uncorrected M1 record.
    """
    tol = traj.params.newton_tol
    kinetic, forcing = _energy_sums(traj, ctx)
    lhs = kinetic + traj.phi
    chain_excess = lhs - (constants.phi0 + forcing)
    worst = int(np.argmax(chain_excess))
    sup_lhs = float(np.max(lhs))
    return [
        _compare(
            "energy_chain",
            float(lhs[worst]),
            float(constants.phi0 + forcing[worst]),
            tol,
            structural=True,
            detail=f"worst step {worst}",
        ),
        _compare("energy_m1_emb", sup_lhs, constants.m1_emb, tol, structural=False),
        _compare("energy_m1", sup_lhs, constants.m1, tol, structural=False),
    ]


def check_h_bound(
    traj: Trajectory,
    constants: BoundConstants,
    ops: DiscreteOperators,
) -> list[CheckRecord]:
    """Bound on sup_n |u^n|_H^2, applicable only for lambda <= lambda_bar."""
    tol = traj.params.newton_tol
    lam = traj.params.lam
    if lam > constants.lambda_bar:
        note = f"lambda={lam:g} exceeds lambda_bar={constants.lambda_bar:g}"
        return [
            CheckRecord("h_bound_chain", None, None, NOT_APPLICABLE, True, note),
            CheckRecord("h_bound_m2_emb", None, constants.m2_emb, NOT_APPLICABLE, False, note),
        ]
    graphs = traj.graphs
    nb = ops.n_bulk
    sq = np.array([ops.inner_h(u, u) for u in traj.fields])
    bulk_phi = np.array(
        [ops.weights[:nb] @ np.atleast_1d(graphs.bulk.envelope(lam, u[:nb])) for u in traj.fields]
    )
    surface_phi = np.array(
        [
            ops.weights[nb:] @ np.atleast_1d(graphs.surface.envelope(lam, u[nb:]))
            for u in traj.fields
        ]
    )
    chain = (2.0 / constants.c1) * (bulk_phi + constants.c2 * ops.vol_omega) + (
        2.0 / constants.c3
    ) * (surface_phi + constants.c4 * ops.vol_gamma)
    worst = int(np.argmax(sq - chain))
    return [
        _compare(
            "h_bound_chain",
            float(sq[worst]),
            float(chain[worst]),
            tol,
            structural=True,
            detail=f"worst step {worst}",
        ),
        _compare("h_bound_m2_emb", float(np.max(sq)), constants.m2_emb, tol, structural=False),
    ]


def check_flux_gradient_bound(
    traj: Trajectory,
    constants: BoundConstants,
    ctx: DualSolverContext,
) -> tuple[list[CheckRecord], float]:
    """Gradient bound on the flux and the bound on its mean.

    Returns:
        The records and the measured-chain bound M3' = 2 sum dt |f|^2_* + 4 E, where
        E is the measured kinetic sum.
    """
    ops = ctx.ops
    tol = traj.params.newton_tol
    dts = traj.steps
    kinetic, forcing = _energy_sums(traj, ctx)
    m3_measured = float(4.0 * forcing[-1] + 4.0 * kinetic[-1])
    gradient = float(sum(dt * ops.a_form(xi, xi) for dt, xi in zip(dts, traj.fluxes[1:])))
    records = [
        _compare("flux_gradient_chain", gradient, m3_measured, tol, structural=True),
        _compare("flux_gradient_m3_emb", gradient, constants.m3_emb, tol, structural=False),
        _compare("flux_gradient_m3", gradient, constants.m3, tol, structural=False),
    ]
    means = np.abs([ops.mean(xi) for xi in traj.fluxes])
    if abs(ops.mean(traj.fields[0])) > IDENTITY_TOL:
        records.append(
            CheckRecord(
                "flux_mean_m4", float(np.max(means)), constants.m4, NOT_APPLICABLE, True,
                "fields are not mean-zero; run in shifted mode",
            )
        )
    else:
        records.append(
            _compare("flux_mean_m4", float(np.max(means)), constants.m4, tol, structural=True)
        )
    return records, m3_measured


def check_flux_v_bound(
    traj: Trajectory,
    constants: BoundConstants,
    ctx: DualSolverContext,
    m3_measured: float,
) -> list[CheckRecord]:
    """V-norm bound sum dt (|xi|_H^2 + a(xi, xi)) <= c_P (M3' + sup m(xi)^2 T).

    Also verifies per step that a(xi, xi) equals |F P xi|_*^2, the V0 norm of the
    projected flux.
    """
    ops = ctx.ops
    tol = traj.params.newton_tol
    dts = traj.steps
    lhs = 0.0
    worst_identity = 0.0
    for dt, xi in zip(dts, traj.fluxes[1:]):
        a = ops.a_form(xi, xi)
        lhs += dt * (ops.inner_h(xi, xi) + a)
        p = ops.project(xi)
        via_dual = ctx.v0_dual_norm(ctx.f_apply(p)) ** 2
        worst_identity = max(worst_identity, abs(a - via_dual) / max(1.0, a))
    sup_mean_sq = float(max((ops.mean(xi) ** 2 for xi in traj.fluxes), default=0.0))
    chain = constants.c_p * (m3_measured + sup_mean_sq * constants.t_end)
    return [
        _compare("flux_v_chain", lhs, chain, tol, structural=True),
        _compare("flux_v_m5_emb", lhs, constants.m5_emb, tol, structural=False),
        CheckRecord(
            "decomposition_identity",
            worst_identity,
            IDENTITY_TOL,
            PASS if worst_identity <= IDENTITY_TOL else FAIL,
            True,
            "a(xi, xi) against |F P xi|_*^2, relative",
        ),
    ]


def check_mass(traj: Trajectory, ops: DiscreteOperators) -> tuple[CheckRecord, float]:
    """Total mass drift against 10 newton_tol / (|Omega| + |Gamma|)."""
    drift = float(np.max(np.abs(traj.masses - traj.masses[0]))) if traj.masses.size else 0.0
    bound = 10.0 * traj.params.newton_tol / ops.volume
    status = PASS if drift <= bound else FAIL
    return CheckRecord("mass_conservation", drift, bound, status, True), drift


def check_dissipation(traj: Trajectory, ops: DiscreteOperators) -> CheckRecord:
    """Discrete chain rule phi(u^{n+1}) - phi(u^n) <= (xi^{n+1}, u^{n+1} - u^n)_H."""
    worst = 0.0
    for n in range(traj.n_steps):
        delta = traj.fields[n + 1] - traj.fields[n]
        excess = traj.phi[n + 1] - traj.phi[n] - ops.inner_h(traj.fluxes[n + 1], delta)
        worst = max(worst, float(excess))
    return _compare("dissipation", worst, 0.0, traj.params.newton_tol, structural=True)


def weak_residual(traj: Trajectory, ops: DiscreteOperators) -> FloatArray:
    """Weighted residual of every step's weak form, recomputed from the stored fields."""
    out = np.zeros(traj.n_steps)
    for n, dt in enumerate(traj.steps):
        r = nodal_residual(
            ops, traj.fluxes[n + 1], traj.fields[n + 1], traj.fields[n], traj.forcing[n], float(dt)
        )
        out[n] = weighted_norm(ops, r)
    return out


def weak_residual_tolerances(traj: Trajectory, ops: DiscreteOperators) -> FloatArray:
    """Converged-residual level of every step, as the stepper measures it."""
    magnitude = stiffness_magnitude(ops)
    return np.array(
        [
            traj.params.newton_tol
            * residual_scale(
                ops,
                traj.fluxes[n + 1],
                traj.fields[n + 1],
                traj.fields[n],
                traj.forcing[n],
                float(dt),
                magnitude,
            )
            for n, dt in enumerate(traj.steps)
        ]
    )


def check_weak_residual(traj: Trajectory, ops: DiscreteOperators) -> CheckRecord:
    residuals = weak_residual(traj, ops)
    tolerances = weak_residual_tolerances(traj, ops)
    if not residuals.size:
        return CheckRecord("weak_residual", 0.0, traj.params.newton_tol, PASS, True)
    worst = int(np.argmax(residuals / tolerances))
    status = PASS if np.all(residuals <= tolerances) else FAIL
    return CheckRecord(
        "weak_residual",
        float(residuals[worst]),
        float(tolerances[worst]),
        status,
        True,
        f"worst step {worst}, tolerance relative to the residual scale",
    )


def graph_gap(graph: MonotoneGraph, lam: float, u: FloatArray, xi: FloatArray) -> float:
    """Largest distance of xi from beta(u - lam xi).

    ``u - lam xi`` is the resolvent point the flux implies, so a zero gap means
    ``xi in beta(J u)`` without calling the resolvent itself.
    """
    if not u.size:
        return 0.0
    j = u - lam * xi
    delta = TRACE_TOL * max(1.0, float(np.max(np.abs(j))))
    lo, _ = graph.bounds(j - delta)
    _, hi = graph.bounds(j + delta)
    return float(np.max(np.maximum(lo - xi, xi - hi), initial=0.0))


def check_trace(traj: Trajectory, ops: DiscreteOperators) -> CheckRecord:
    """Boundary fluxes lie in beta_Gamma at the surface resolvent, bulk fluxes in beta.

    The flux has one value per boundary node, so the bulk trace and the surface flux
    coincide; what is verified is that this shared value is the surface graph's.
    """
    lam = traj.params.lam
    nb = ops.n_bulk
    worst = 0.0
    for u, xi in zip(traj.fields, traj.fluxes):
        worst = max(
            worst,
            graph_gap(traj.graphs.bulk, lam, u[:nb], xi[:nb]),
            graph_gap(traj.graphs.surface, lam, u[nb:], xi[nb:]),
        )
    bound = TRACE_TOL * max(1.0, float(np.max(np.abs(traj.fluxes), initial=0.0)))
    status = PASS if worst <= bound else FAIL
    return CheckRecord(
        "trace_condition", worst, bound, status, True, "xi in beta(u - lam xi) per node"
    )


def _require_matching(traj1: Trajectory, traj2: Trajectory) -> None:
    problems = []
    if traj1.fields.shape != traj2.fields.shape:
        problems.append(f"shapes {traj1.fields.shape} and {traj2.fields.shape}")
    elif not np.array_equal(traj1.times, traj2.times):
        problems.append("time grids differ")
    elif not np.array_equal(traj1.forcing, traj2.forcing):
        problems.append("forcing samples differ")
    if traj1.params.lam != traj2.params.lam:
        problems.append(f"lambda {traj1.params.lam} vs {traj2.params.lam}")
    if problems:
        raise MismatchedRuns("trajectories cannot be compared: " + "; ".join(problems))


def dual_distance(traj1: Trajectory, traj2: Trajectory, ctx: DualSolverContext) -> FloatArray:
    """|P(u1^n - u2^n)|_* for every n."""
    _require_matching(traj1, traj2)
    ops = ctx.ops
    return np.array(
        [ctx.v0_dual_norm(ops.project(a - b)) for a, b in zip(traj1.fields, traj2.fields)]
    )


def check_contraction(
    traj1: Trajectory, traj2: Trajectory, ctx: DualSolverContext
) -> tuple[CheckRecord, FloatArray]:
    """Dual distance of two runs with common forcing must not grow.

    Raises:
        MismatchedRuns: If grids, forcing or lambda differ.
    """
    distances = dual_distance(traj1, traj2, ctx)
    increases = np.diff(distances)
    worst = float(np.max(increases, initial=0.0))
    record = _compare(
        "contraction", worst, 0.0, traj1.params.newton_tol, structural=True,
        detail=f"d0={distances[0]:.6g}, dN={distances[-1]:.6g}",
    )
    return record, distances


@dataclass
class LambdaCauchyTable:
    """Consecutive distances d_k = sup_n |u_{lambda_k} - u_{lambda_{k+1}}|_*."""

    lambdas: list[float]
    distances: list[float]

    @property
    def ratios(self) -> list[float]:
        return [b / a if a > 0 else math.nan for a, b in zip(self.distances, self.distances[1:])]

    @property
    def decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.distances, self.distances[1:]))

    def to_dict(self) -> dict[str, Any]:
        return {
            "lambdas": self.lambdas,
            "distances": self.distances,
            "ratios": [_finite_or_none(r) for r in self.ratios],
            "decreasing": self.decreasing,
        }

    def format_summary(self) -> str:
        lines = [f"{'lambda':>12} {'next':>12} {'distance':>14} {'ratio':>8}"]
        ratios = [math.nan, *self.ratios]
        for k, d in enumerate(self.distances):
            lines.append(
                f"{self.lambdas[k]:>12.6g} {self.lambdas[k + 1]:>12.6g} {d:>14.6e} "
                f"{ratios[k]:>8.4f}"
            )
        lines.append(f"strictly decreasing: {'yes' if self.decreasing else 'no'}")
        return "\n".join(lines)


def lambda_cauchy_study(
    data: ProblemData,
    params: StepParams,
    ops: DiscreteOperators,
    ctx: DualSolverContext,
    lambdas: Sequence[float],
    *,
    workers: int = 1,
    project_forcing: bool = False,
) -> tuple[LambdaCauchyTable, list[Trajectory]]:
    """Run one trajectory per lambda and tabulate consecutive dual distances.

    Raises:
        ValidationError: If fewer than three lambdas are given or they do not
            strictly decrease.
    """
    values = [float(v) for v in lambdas]
    problems = []
    if len(values) < 3:
        problems.append(f"need at least 3 lambda values, got {len(values)}")
    if any(v <= 0 for v in values):
        problems.append("lambda values must be positive")
    if any(b >= a for a, b in zip(values, values[1:])):
        problems.append("lambda values must strictly decrease")
    if problems:
        raise ValidationError(problems[0], problems)

    def one(lam: float) -> Trajectory:
        logger.info("lambda study: running lambda=%g", lam)
        swept = StepParams(
            tau=params.tau,
            lam=lam,
            newton_tol=params.newton_tol,
            newton_max_iter=params.newton_max_iter,
            backtrack=params.backtrack,
            max_halvings=params.max_halvings,
        )
        return run(data, swept, ops, ctx, project_forcing=project_forcing)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        trajectories = list(pool.map(one, values))

    distances = []
    for a, b in zip(trajectories, trajectories[1:]):
        d = [ctx.v0_dual_norm(ops.project(x - y)) for x, y in zip(a.fields, b.fields)]
        distances.append(float(max(d)))
    return LambdaCauchyTable(lambdas=values, distances=distances), trajectories


@dataclass
class EstimateReport:
    """Constants, check records and study tables of one scenario."""

    constants: BoundConstants
    checks: list[CheckRecord]
    m3_measured: float
    mass_drift_max: float
    lambda_table: LambdaCauchyTable | None = None
    contraction: list[float] | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def structural_ok(self) -> bool:
        return all(c.status != FAIL for c in self.checks if c.structural)

    def check(self, name: str) -> CheckRecord:
        for record in self.checks:
            if record.name == name:
                return record
        raise KeyError(name)

    def to_dict(self) -> dict[str, Any]:
        c = self.constants
        result: dict[str, Any] = {
            "m1": c.m1,
            "m2": c.m2,
            "m3": c.m3,
            "m3_measured": self.m3_measured,
            "m4": c.m4,
            "m5": c.m5,
            "lambda_bar": c.lambda_bar,
            "c_p": c.c_p,
            "c_emb": c.c_emb,
            "mass_drift_max": self.mass_drift_max,
            "checks": [record.to_dict() for record in self.checks],
            "constants": c.to_dict(),
            "structural_ok": self.structural_ok,
        }
        if self.lambda_table is not None:
            result["lambda_table"] = self.lambda_table.to_dict()
        if self.contraction is not None:
            result["contraction"] = [float(d) for d in self.contraction]
        if self.meta:
            result["meta"] = self.meta
        return result

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False)

    def format_summary(self) -> str:
        c = self.constants
        lines = [
            f"M1 = {c.m1:.6g}  (embedding-corrected {c.m1_emb:.6g})",
            f"M2 = {c.m2:.6g}  M3 = {c.m3:.6g}  M3' = {self.m3_measured:.6g}",
            f"M4 = {c.m4:.6g}  M5 = {c.m5:.6g}",
            f"lambda_bar = {c.lambda_bar:.6g}  c_P = {c.c_p:.6g}  C_emb = {c.c_emb:.6g}",
            f"mass drift = {self.mass_drift_max:.3e}",
            "",
            f"{'check':<24} {'measured':>14} {'bound':>14} {'status':>15}",
        ]
        for record in self.checks:
            measured = "-" if record.measured is None else f"{record.measured:.6e}"
            bound = "-" if record.bound is None else f"{record.bound:.6e}"
            marker = "" if record.structural else " *"
            lines.append(
                f"{record.name:<24} {measured:>14} {bound:>14} {record.status:>15}{marker}"
            )
        lines.append("(* a-priori constant, reported only)")
        if self.lambda_table is not None:
            lines.extend(["", self.lambda_table.format_summary()])
        lines.append("")
        lines.append(f"Structural checks: {'all PASS' if self.structural_ok else 'FAILED'}")
        return "\n".join(lines)


def build_report(
    traj: Trajectory,
    constants: BoundConstants,
    ctx: DualSolverContext,
) -> EstimateReport:
    """Run every single-trajectory check."""
    ops = ctx.ops
    checks: list[CheckRecord] = []
    checks.extend(check_energy_bound(traj, constants, ctx))
    checks.extend(check_h_bound(traj, constants, ops))
    gradient_records, m3_measured = check_flux_gradient_bound(traj, constants, ctx)
    checks.extend(gradient_records)
    checks.extend(check_flux_v_bound(traj, constants, ctx, m3_measured))
    mass_record, drift = check_mass(traj, ops)
    checks.append(mass_record)
    checks.append(check_dissipation(traj, ops))
    checks.append(check_weak_residual(traj, ops))
    checks.append(check_trace(traj, ops))
    failed = [c.name for c in checks if c.structural and c.status == FAIL]
    if failed:
        logger.warning("Structural checks failed: %s", ", ".join(failed))
    return EstimateReport(
        constants=constants,
        checks=checks,
        m3_measured=m3_measured,
        mass_drift_max=drift,
    )


def graphs_summary(graphs: GraphPair) -> dict[str, Any]:
    return {
        "bulk": graphs.bulk.name,
        "surface": graphs.surface.name,
        "distinct": graphs.distinct,
        "shift": graphs.bulk.shift,
    }
