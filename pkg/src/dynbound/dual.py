"""Duality mapping on mean-zero fields, its inverse, dual norms and discrete constants."""

from __future__ import annotations

import logging
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from numpy.typing import ArrayLike

from .discretization import DiscreteOperators, FloatArray
from .exceptions import IterationDiverged, NotMeanZero, SolverDiverged, ValidationError

logger = logging.getLogger(__name__)

MEAN_ZERO_TOL = 1e-10
EIGEN_TOL = 1e-10
EIGEN_MAX_ITER = 5000
DUAL_METHODS = ("direct", "cg")


class DualSolverContext:
    """Reusable solver for A w = M g under the constraint m(w) = 0.

    The ``direct`` method factorizes the bordered matrix ``[[A, w], [w^T, 0]]`` once;
    the multiplier vanishes for mean-zero data. The ``cg`` method runs conjugate
    gradients on the consistent singular system and projects the result.

    Args:
        ops: Discrete operators.
        tol: Relative residual tolerance of the iterative method.
        method: ``"direct"`` or ``"cg"``.

    Example:
        >>> ctx = DualSolverContext(build_operators(Strip(1.0, 8, 4)))
        >>> ctx.v0_dual_norm(ctx.f_apply(z))  # equals ctx.v0_norm(z)
    """

    def __init__(
        self, ops: DiscreteOperators, tol: float = 1e-12, method: str = "direct"
    ) -> None:
        if method not in DUAL_METHODS:
            raise ValidationError(
                f"unknown dual solver method '{method}'. Valid methods: {', '.join(DUAL_METHODS)}"
            )
        if not tol > 0:
            raise ValidationError(f"dual solver tolerance must be positive, got {tol}")
        self.ops = ops
        self.tol = tol
        self.method = method
        self._lu: spla.SuperLU | None = None
        if method == "direct":
            border = sp.csr_matrix(ops.weights.reshape(-1, 1))
            bordered = sp.bmat([[ops.stiffness, border], [border.T, None]], format="csc")
            self._lu = spla.splu(bordered)

    def _require_mean_zero(self, z: ArrayLike, name: str) -> FloatArray:
        arr = self.ops.check(z, name)
        m = self.ops.mean(arr)
        if abs(m) > MEAN_ZERO_TOL:
            raise NotMeanZero(f"{name} must have zero mean, got m = {m:.3e}", {"mean": m})
        return arr

    def f_apply(self, z: ArrayLike) -> FloatArray:
        """H-representative of F z, i.e. M^-1 A z, so (F z, y)_H = a(z, y).

        Raises:
            NotMeanZero: If |m(z)| > 1e-10.
        """
        arr = self._require_mean_zero(z, "z")
        return np.asarray(self.ops.stiffness @ arr) / self.ops.weights

    def f_inverse(self, g: ArrayLike) -> FloatArray:
        """Mean-zero solution w of a(w, z) = (g, z)_H for every nodal test field z.

        Raises:
            NotMeanZero: If |m(g)| > 1e-10.
            SolverDiverged: If the linear solve fails or returns non-finite values.
        """
        arr = self._require_mean_zero(g, "g")
        rhs = self.ops.weights * arr
        if not np.any(rhs):
            return np.zeros_like(arr)
        if self._lu is not None:
            solution = self._lu.solve(np.append(rhs, 0.0))[:-1]
        else:
            solution, info = spla.cg(
                self.ops.stiffness, rhs, rtol=self.tol, atol=0.0, maxiter=10 * self.ops.dim
            )
            if info != 0:
                raise SolverDiverged(
                    f"conjugate gradients stopped with info={info}", {"info": info}
                )
        if not np.all(np.isfinite(solution)):
            raise SolverDiverged("duality solve produced non-finite values")
        return self.ops.project(solution)

    def dual_inner(self, g1: ArrayLike, g2: ArrayLike) -> float:
        """V0* inner product (g1, F^-1 g2)_H."""
        a = self._require_mean_zero(g1, "g1")
        return self.ops.inner_h(a, self.f_inverse(g2))

    def v0_dual_norm(self, g: ArrayLike) -> float:
        """sqrt(g^T M F^-1 g)."""
        arr = self._require_mean_zero(g, "g")
        return float(np.sqrt(max(self.ops.inner_h(arr, self.f_inverse(arr)), 0.0)))

    def v0_norm(self, z: ArrayLike) -> float:
        """sqrt(a(z, z)) on mean-zero fields."""
        arr = self._require_mean_zero(z, "z")
        return float(np.sqrt(max(self.ops.a_form(arr, arr), 0.0)))

    @cached_property
    def mu_min(self) -> float:
        """Smallest positive eigenvalue of A v = mu M v, by inverse power iteration.

        Raises:
            IterationDiverged: If the eigen-residual does not reach 1e-10 relative.
        """
        ops = self.ops
        rng = np.random.default_rng(0)
        v = ops.project(rng.uniform(-1.0, 1.0, ops.dim))
        v /= ops.norm_h(v)
        for iteration in range(1, EIGEN_MAX_ITER + 1):
            v = self.f_inverse(v)
            v /= ops.norm_h(v)
            mu = ops.a_form(v, v)
            residual = ops.norm_h(self.f_apply(v) - mu * v)
            if residual <= EIGEN_TOL * mu:
                logger.debug("Power iteration converged: %d steps, mu=%.12g", iteration, mu)
                return mu
        raise IterationDiverged(
            f"inverse power iteration did not converge in {EIGEN_MAX_ITER} steps "
            f"(residual {residual:.3e}, mu {mu:.6g})"
        )

    @cached_property
    def poincare_constant(self) -> float:
        """Smallest c_P with |z|_V^2 <= c_P (a(z, z) + m(z)^2) on the discrete complex."""
        return max(1.0 + 1.0 / self.mu_min, self.ops.volume)

    @cached_property
    def embedding_constant(self) -> float:
        """C_emb with |g|_V0* <= C_emb |g|_H on mean-zero fields."""
        return float(np.sqrt(1.0 / self.mu_min))

    def describe(self) -> dict[str, float]:
        return {
            "mu_min": self.mu_min,
            "c_p": self.poincare_constant,
            "c_emb": self.embedding_constant,
        }
