"""Maximal monotone graphs with exact resolvents, Yosida maps and envelopes.

A graph is stored as a finite piecewise-affine map: ``K`` strictly increasing
breakpoints split the line into ``K + 1`` affine pieces ``s_k r + c_k`` with
``s_k >= 0``. At a breakpoint the graph takes the closed interval between the left
and right limits, so a jump is a vertical segment and the graph is maximal.

Example:
    >>> graph = make_preset("heleshaw_clipped", {"c0_prime": 1.0})
    >>> graph.eval(1.0)
    (0.0, 2.0)
    >>> graph.resolvent(0.5, 2.0)
    1.0
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass
from functools import cached_property
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .exceptions import InvalidParams, NegativeIntercept, NotAffineFarField

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

# Rounding allowance when checking left limit <= right limit at a breakpoint.
MONOTONE_SLACK = 1e-12
BISECTION_TOL = 1e-12
BISECTION_MAX_ITER = 200
DEFAULT_PIECES = 256

PRESETS = (
    "linear",
    "heleshaw_clipped",
    "fast_diffusion_clipped",
    "deadzone_jump",
    "porous_clipped",
)


@dataclass(frozen=True)
class FarField:
    """Affine behavior of a graph away from the origin.

    Attributes:
        c0: Far-field slope.
        c0_plus: Intercept for r >= M0.
        c0_minus: Intercept for r <= -M0.
        m0: Threshold M0 beyond which the graph is single-valued and affine.
    """

    c0: float
    c0_plus: float
    c0_minus: float
    m0: float


@dataclass(frozen=True)
class GrowthCertificate:
    """Constants with antiderivative(r) >= c1 r^2 - c2 for every real r."""

    c1: float
    c2: float


def _check_lambda(lam: float) -> None:
    if not lam > 0:
        raise InvalidParams(f"lambda must be positive, got {lam}")


def _out(values: FloatArray, scalar: bool) -> float | FloatArray:
    if scalar:
        return float(values)
    return values


class MonotoneGraph:
    """Piecewise-affine maximal monotone graph beta with antiderivative beta_hat.

    Args:
        breakpoints: Strictly increasing abscissae where the slope changes or jumps.
        slopes: Nonnegative slopes of the ``len(breakpoints) + 1`` pieces.
        intercepts: Intercepts of the pieces.
        far_field: Declared far-field parameters (checked by ``validate_a5``).
        name: Label used in reports and tables.
        certificate: Known growth certificate; computed exactly when omitted.
        anchor: Point where 0 belongs to the graph and the antiderivative vanishes.
        base: Untranslated graph this one was shifted from, if any.
        shift: Translation applied to ``base`` (graph(r) = base(r + shift)).

    Raises:
        InvalidParams: If the pieces do not form a monotone graph through 0 at anchor.
    """

    def __init__(
        self,
        breakpoints: ArrayLike,
        slopes: ArrayLike,
        intercepts: ArrayLike,
        far_field: FarField,
        *,
        name: str = "custom",
        certificate: GrowthCertificate | None = None,
        anchor: float = 0.0,
        base: MonotoneGraph | None = None,
        shift: float = 0.0,
    ) -> None:
        b = np.array(breakpoints, dtype=float).ravel()
        s = np.array(slopes, dtype=float).ravel()
        c = np.array(intercepts, dtype=float).ravel()

        if s.shape != c.shape or s.size != b.size + 1:
            raise InvalidParams(
                f"need len(breakpoints) + 1 pieces, got {b.size} breakpoints, "
                f"{s.size} slopes and {c.size} intercepts"
            )
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(s)) and np.all(np.isfinite(c))):
            raise InvalidParams("graph data must be finite")
        if b.size > 1 and np.any(np.diff(b) <= 0):
            raise InvalidParams("breakpoints must be strictly increasing")
        if np.any(s < 0):
            raise InvalidParams("piece slopes must be nonnegative")

        lo = s[:-1] * b + c[:-1]
        hi = s[1:] * b + c[1:]
        scale = 1.0 + float(np.max(np.abs(np.concatenate([lo, hi])), initial=0.0))
        if np.any(lo > hi + MONOTONE_SLACK * scale):
            k = int(np.argmax(lo - hi))
            raise InvalidParams(
                f"graph is not monotone at breakpoint {b[k]}: left limit {lo[k]} "
                f"exceeds right limit {hi[k]}"
            )

        for arr in (b, s, c, lo, hi):
            arr.flags.writeable = False
        self._b = b
        self._s = s
        self._c = c
        self._lo = lo
        self._hi = hi
        self.far_field = far_field
        self.name = name
        self.anchor = float(anchor)
        self.shift = float(shift)
        self._base = base
        self._explicit_certificate = certificate

        lo_a, hi_a = self.eval(self.anchor)
        if not (lo_a - MONOTONE_SLACK * scale <= 0.0 <= hi_a + MONOTONE_SLACK * scale):
            raise InvalidParams(
                f"0 must belong to the graph at r = {self.anchor}, got [{lo_a}, {hi_a}]"
            )
        self._d = self._antiderivative_offsets()
        self._d.flags.writeable = False

    def __repr__(self) -> str:
        return (
            f"MonotoneGraph(name={self.name!r}, breakpoints={self._b.size}, "
            f"c0={self.far_field.c0}, shift={self.shift})"
        )

    @property
    def breakpoints(self) -> FloatArray:
        return self._b

    @property
    def slopes(self) -> FloatArray:
        return self._s

    @property
    def intercepts(self) -> FloatArray:
        return self._c

    @property
    def antiderivative_offsets(self) -> FloatArray:
        """Per-piece constants d_k with beta_hat = s r^2 / 2 + c r + d on piece k."""
        return self._d

    @property
    def jumps(self) -> tuple[FloatArray, FloatArray]:
        """Left and right limits at every breakpoint."""
        return self._lo, self._hi

    @property
    def base(self) -> MonotoneGraph:
        """Untranslated graph (``self`` unless created by ``shifted``)."""
        return self._base if self._base is not None else self

    @cached_property
    def certificate(self) -> GrowthCertificate:
        if self._explicit_certificate is not None:
            return self._explicit_certificate
        return certify_growth(self)

    def _antiderivative_offsets(self) -> FloatArray:
        b, s, c = self._b, self._s, self._c
        d = np.zeros(s.size)
        k0 = int(np.searchsorted(b, self.anchor, side="right"))
        a = self.anchor
        d[k0] = -(0.5 * s[k0] * a * a + c[k0] * a)
        # continuity of beta_hat across each breakpoint
        for k in range(k0, b.size):
            d[k + 1] = d[k] + 0.5 * (s[k] - s[k + 1]) * b[k] ** 2 + (c[k] - c[k + 1]) * b[k]
        for k in range(k0 - 1, -1, -1):
            d[k] = d[k + 1] - 0.5 * (s[k] - s[k + 1]) * b[k] ** 2 - (c[k] - c[k + 1]) * b[k]
        return d

    def eval(self, r: float) -> tuple[float, float]:
        """Evaluate the graph at a point.

        Args:
            r: Abscissa.

        Returns:
            The closed interval beta(r) as ``(lo, hi)``; ``lo == hi`` off the jumps.
        """
        lo, hi = self.bounds(np.asarray(r, dtype=float))
        return float(lo), float(hi)

    def bounds(self, r: ArrayLike) -> tuple[FloatArray, FloatArray]:
        """Vectorized ``eval``: lower and upper ends of beta(r)."""
        rr = np.asarray(r, dtype=float)
        k = np.searchsorted(self._b, rr, side="left")
        val = self._s[k] * rr + self._c[k]
        if self._b.size == 0:
            return val, val.copy()
        kk = np.minimum(k, self._b.size - 1)
        at_break = (k < self._b.size) & (self._b[kk] == rr)
        lo = np.where(at_break, self._lo[kk], val)
        hi = np.where(at_break, self._hi[kk], val)
        return lo, hi

    def antiderivative(self, r: ArrayLike) -> float | FloatArray:
        """Convex antiderivative beta_hat, zero at the anchor."""
        rr = np.asarray(r, dtype=float)
        k = np.searchsorted(self._b, rr, side="right")
        values = 0.5 * self._s[k] * rr * rr + self._c[k] * rr + self._d[k]
        return _out(values, rr.ndim == 0)

    def _thresholds(self, lam: float) -> tuple[FloatArray, FloatArray]:
        return self._b + lam * self._lo, self._b + lam * self._hi

    def resolvent(self, lam: float, r: ArrayLike) -> float | FloatArray:
        """Resolvent J = (I + lam beta)^-1 in closed form.

        On an affine piece J solves s + lam (slope s + c) = r directly; when r falls
        in b + lam [lo, hi] for a breakpoint b, J is b itself.

        Args:
            lam: Regularization parameter, positive.
            r: Point(s) to resolve.

        Returns:
            J(r), scalar for scalar input.
        """
        _check_lambda(lam)
        rr = np.asarray(r, dtype=float)
        return _out(self._resolvent(lam, rr), rr.ndim == 0)

    def _resolvent(self, lam: float, rr: FloatArray) -> FloatArray:
        if self._b.size == 0:
            return (rr - lam * self._c[0]) / (1.0 + lam * self._s[0])
        t_lo, t_hi = self._thresholds(lam)
        k = np.searchsorted(t_lo, rr, side="right") - 1
        kk = np.clip(k, 0, self._b.size - 1)
        in_jump = (k >= 0) & (rr <= t_hi[kk])
        piece = k + 1
        on_piece = (rr - lam * self._c[piece]) / (1.0 + lam * self._s[piece])
        return np.where(in_jump, self._b[kk], on_piece)

    def yosida(self, lam: float, r: ArrayLike) -> float | FloatArray:
        """Yosida approximation beta_lam(r) = (r - J(r)) / lam."""
        _check_lambda(lam)
        rr = np.asarray(r, dtype=float)
        return _out((rr - self._resolvent(lam, rr)) / lam, rr.ndim == 0)

    def yosida_slope(self, lam: float, r: ArrayLike) -> FloatArray:
        """Right-hand slope of the Yosida map, in [0, 1/lam].

        Inside a vertical segment region the map is (r - b)/lam; on a piece it is
        s/(1 + lam s). At a region boundary the slope of the region to the right is
        returned.
        """
        _check_lambda(lam)
        rr = np.asarray(r, dtype=float)
        piece_slope = np.zeros(rr.shape)
        if self._b.size == 0:
            return piece_slope + self._s[0] / (1.0 + lam * self._s[0])
        t_lo, t_hi = self._thresholds(lam)
        k = np.searchsorted(t_lo, rr, side="right") - 1
        kk = np.clip(k, 0, self._b.size - 1)
        strictly_inside = (k >= 0) & (rr < t_hi[kk])
        s = self._s[k + 1]
        piece_slope = s / (1.0 + lam * s)
        return np.where(strictly_inside, 1.0 / lam, piece_slope)

    def envelope(self, lam: float, r: ArrayLike) -> float | FloatArray:
        """Moreau-Yosida envelope |r - J|^2 / (2 lam) + beta_hat(J)."""
        _check_lambda(lam)
        rr = np.asarray(r, dtype=float)
        j = self._resolvent(lam, rr)
        k = np.searchsorted(self._b, j, side="right")
        hat = 0.5 * self._s[k] * j * j + self._c[k] * j + self._d[k]
        return _out((rr - j) ** 2 / (2.0 * lam) + hat, rr.ndim == 0)

    def resolvent_bisect(self, lam: float, r: float, tol: float = BISECTION_TOL) -> float:
        """Resolvent by bisection on the monotone map s -> s + lam beta(s).

        Slow reference path used to cross-check ``resolvent``.
        """
        _check_lambda(lam)
        lo_r, hi_r = self.eval(r)
        width = lam * max(abs(lo_r), abs(hi_r))
        left, right = r - width, r + width
        for _ in range(BISECTION_MAX_ITER):
            if right - left <= tol:
                break
            mid = 0.5 * (left + right)
            lo_m, hi_m = self.eval(mid)
            if r < mid + lam * lo_m:
                right = mid
            elif r > mid + lam * hi_m:
                left = mid
            else:
                return mid
        return 0.5 * (left + right)

    def shifted(self, m0: float) -> MonotoneGraph:
        """Translated graph r -> beta(r + m0) with antiderivative beta_hat(r + m0).

        Breakpoints move to b - m0; far-field validation keeps using the base graph.
        """
        if m0 == 0.0:
            return self
        base = self.base
        total = self.shift + m0
        ff = base.far_field
        moved = FarField(
            c0=ff.c0,
            c0_plus=ff.c0_plus + ff.c0 * total,
            c0_minus=ff.c0_minus + ff.c0 * total,
            m0=ff.m0 + abs(total),
        )
        return MonotoneGraph(
            base.breakpoints - total,
            base.slopes,
            base.intercepts + base.slopes * total,
            moved,
            name=f"{base.name}@{total:+g}",
            anchor=-total,
            base=base,
            shift=total,
        )

    def sup_abs_on(self, radius: float) -> float:
        """sup |beta| over [-radius, radius], using both ends of any jump there."""
        lo_m, hi_m = self.eval(-radius)
        lo_p, hi_p = self.eval(radius)
        return max(abs(lo_m), abs(hi_m), abs(lo_p), abs(hi_p))


def certify_growth(graph: MonotoneGraph) -> GrowthCertificate:
    """Exact growth certificate with c1 = (smallest far slope) / 4.

    On every piece c1 r^2 - beta_hat(r) is a quadratic; its supremum over the piece
    is attained at an end point or at the clipped vertex, which gives c2 exactly.

    Raises:
        InvalidParams: If a far piece is flat, so no quadratic lower bound exists.
    """
    s, c, d, b = graph.slopes, graph.intercepts, graph.antiderivative_offsets, graph.breakpoints
    c1 = min(float(s[0]), float(s[-1])) / 4.0
    if c1 <= 0.0:
        raise InvalidParams(f"graph {graph.name!r} has a flat far piece; no growth certificate")
    edges = np.concatenate([[-np.inf], b, [np.inf]])
    worst = 0.0
    for k in range(s.size):
        left, right = float(edges[k]), float(edges[k + 1])
        quad = c1 - 0.5 * float(s[k])
        candidates = [e for e in (left, right) if math.isfinite(e)]
        if quad < 0.0:
            vertex = float(c[k]) / (2.0 * quad)
            candidates.append(min(max(vertex, left), right))
        elif not (math.isfinite(left) and math.isfinite(right)):
            raise InvalidParams(f"piece {k} of {graph.name!r} grows too slowly for c1 = {c1}")
        for r in candidates:
            worst = max(worst, quad * r * r - float(c[k]) * r - float(d[k]))
    return GrowthCertificate(c1=c1, c2=worst)


def validate_a5(graph: MonotoneGraph, relax_intercept: bool = False) -> tuple[float, float, float]:
    """Certify that the graph is affine with slope c0 beyond +-M0.

    Validation runs on the untranslated base graph.

    Args:
        graph: Graph to check.
        relax_intercept: Admit a negative intercept c0'.

    Returns:
        The certified triple ``(c0, c0_prime, M0)``.

    Raises:
        NotAffineFarField: If the outer pieces disagree with the declared far field.
        NegativeIntercept: If c0' < 0 and ``relax_intercept`` is not set.
    """
    g = graph.base
    ff = g.far_field
    if not (ff.c0 > 0 and ff.m0 > 0):
        raise NotAffineFarField(f"{g.name}: need c0 > 0 and M0 > 0, got c0={ff.c0}, M0={ff.m0}")
    b = g.breakpoints
    if b.size and (b[0] < -ff.m0 or b[-1] > ff.m0):
        raise NotAffineFarField(
            f"{g.name}: breakpoints span [{b[0]}, {b[-1]}], outside [-M0, M0] with M0={ff.m0}"
        )

    def close(x: float, y: float) -> bool:
        return math.isclose(x, y, rel_tol=1e-12, abs_tol=1e-12)

    s, c = g.slopes, g.intercepts
    if not (close(float(s[0]), ff.c0) and close(float(s[-1]), ff.c0)):
        raise NotAffineFarField(
            f"{g.name}: outer slopes {s[0]}, {s[-1]} differ from c0={ff.c0}"
        )
    if not (close(float(c[-1]), ff.c0_plus) and close(float(c[0]), ff.c0_minus)):
        raise NotAffineFarField(
            f"{g.name}: outer intercepts {c[0]}, {c[-1]} differ from declared "
            f"{ff.c0_minus}, {ff.c0_plus}"
        )
    if not close(ff.c0_minus, -ff.c0_plus):
        raise NotAffineFarField(
            f"{g.name}: far field must read c0 r + c0' and c0 r - c0', got intercepts "
            f"{ff.c0_plus} and {ff.c0_minus}"
        )
    if ff.c0_plus < 0 and not relax_intercept:
        raise NegativeIntercept(
            f"{g.name}: far-field intercept c0'={ff.c0_plus} is negative "
            "(set relax_intercept to admit it)"
        )
    return ff.c0, ff.c0_plus, ff.m0


@dataclass(frozen=True)
class GraphPair:
    """Bulk and surface graphs; the same object twice when they coincide."""

    bulk: MonotoneGraph
    surface: MonotoneGraph

    @classmethod
    def single(cls, graph: MonotoneGraph) -> GraphPair:
        return cls(bulk=graph, surface=graph)

    @property
    def distinct(self) -> bool:
        return self.bulk is not self.surface

    def shared_far_field(self, relax_intercept: bool = False) -> tuple[float, float]:
        """Validate both graphs and return the shared ``(c0, M0)``.

        The shared threshold is the larger of the two, beyond which both are affine.

        Raises:
            NotAffineFarField: If the far-field slopes differ.
        """
        c0_b, _, m0_b = validate_a5(self.bulk, relax_intercept)
        c0_s, _, m0_s = validate_a5(self.surface, relax_intercept)
        if not math.isclose(c0_b, c0_s, rel_tol=1e-12):
            raise NotAffineFarField(
                f"bulk and surface graphs must share the far-field slope c0, got "
                f"{c0_b} and {c0_s}"
            )
        return c0_b, max(m0_b, m0_s)

    def shifted(self, m0: float) -> GraphPair:
        if not self.distinct:
            return GraphPair.single(self.bulk.shifted(m0))
        return GraphPair(self.bulk.shifted(m0), self.surface.shifted(m0))


def linear(c0: float = 1.0) -> MonotoneGraph:
    """beta(r) = c0 r."""
    if not c0 > 0:
        raise InvalidParams(f"linear: c0 must be positive, got {c0}")
    return MonotoneGraph(
        [],
        [c0],
        [0.0],
        FarField(c0=c0, c0_plus=0.0, c0_minus=0.0, m0=1.0),
        name="linear",
        certificate=GrowthCertificate(c1=c0 / 2.0, c2=0.0),
    )


def heleshaw_clipped(c0_prime: float = 1.0) -> MonotoneGraph:
    """Clipped Hele-Shaw graph: zero on (0, 1), jumps at 0 and 1, slope 1 outside."""
    if not c0_prime >= 0:
        raise InvalidParams(f"heleshaw_clipped: c0_prime must be >= 0, got {c0_prime}")
    return MonotoneGraph(
        [0.0, 1.0],
        [1.0, 0.0, 1.0],
        [-c0_prime, 0.0, c0_prime],
        FarField(c0=1.0, c0_plus=c0_prime, c0_minus=-c0_prime, m0=1.0),
        name="heleshaw_clipped",
        certificate=GrowthCertificate(c1=0.25, c2=0.5),
    )


def deadzone_jump(
    a: float = 0.0, b: float = 1.0, c0: float = 1.0, c0_prime: float = 1.0
) -> MonotoneGraph:
    """Dead zone [a, b] with vertical segments at both ends and slope c0 outside."""
    if not (a <= 0.0 <= b and a < b):
        raise InvalidParams(f"deadzone_jump: need a <= 0 <= b and a < b, got a={a}, b={b}")
    if not (c0 > 0 and c0_prime >= 0):
        raise InvalidParams(f"deadzone_jump: need c0 > 0 and c0_prime >= 0, got {c0}, {c0_prime}")
    return MonotoneGraph(
        [a, b],
        [c0, 0.0, c0],
        [-c0_prime, 0.0, c0_prime],
        FarField(c0=c0, c0_plus=c0_prime, c0_minus=-c0_prime, m0=max(abs(a), abs(b))),
        name="deadzone_jump",
    )


def _power_law_clipped(
    exponent: float, threshold: float, pieces: int, name: str
) -> MonotoneGraph:
    pieces = int(pieces)
    if pieces < 2 or pieces % 2:
        raise InvalidParams(f"{name}: pieces must be an even integer >= 2, got {pieces}")
    if not threshold > 0:
        raise InvalidParams(f"{name}: threshold M0 must be positive, got {threshold}")
    half = np.linspace(0.0, threshold, pieces // 2 + 1)
    nodes = np.concatenate([-half[:0:-1], half])
    values = np.sign(nodes) * np.abs(nodes) ** exponent
    mid_slopes = np.diff(values) / np.diff(nodes)
    mid_intercepts = values[:-1] - mid_slopes * nodes[:-1]
    # tangent line at +-M0
    c0 = exponent * threshold ** (exponent - 1.0)
    c_plus = float(values[-1] - c0 * threshold)
    c_minus = float(values[0] + c0 * threshold)
    return MonotoneGraph(
        nodes,
        np.concatenate([[c0], mid_slopes, [c0]]),
        np.concatenate([[c_minus], mid_intercepts, [c_plus]]),
        FarField(c0=c0, c0_plus=c_plus, c0_minus=c_minus, m0=threshold),
        name=name,
    )


def fast_diffusion_clipped(
    exponent: float = 0.5, threshold: float = 1.0, pieces: int = DEFAULT_PIECES
) -> MonotoneGraph:
    """|r|^(m-1) r with 0 < m < 1, sampled on [-M0, M0], tangent lines outside."""
    if not 0 < exponent < 1:
        raise InvalidParams(f"fast_diffusion_clipped: exponent must be in (0, 1), got {exponent}")
    return _power_law_clipped(exponent, threshold, pieces, "fast_diffusion_clipped")


def porous_clipped(
    exponent: float = 2.0, threshold: float = 1.0, pieces: int = DEFAULT_PIECES
) -> MonotoneGraph:
    """|r|^(m-1) r with m > 1; the tangent far field has a negative intercept."""
    if not exponent > 1:
        raise InvalidParams(f"porous_clipped: exponent must exceed 1, got {exponent}")
    return _power_law_clipped(exponent, threshold, pieces, "porous_clipped")


_BUILDERS: dict[str, Callable[..., MonotoneGraph]] = {
    "linear": linear,
    "heleshaw_clipped": heleshaw_clipped,
    "fast_diffusion_clipped": fast_diffusion_clipped,
    "deadzone_jump": deadzone_jump,
    "porous_clipped": porous_clipped,
}


def make_preset(
    name: str,
    params: Mapping[str, Any] | None = None,
    *,
    relax_intercept: bool = False,
) -> MonotoneGraph:
    """Build a named graph.

    Args:
        name: One of ``PRESETS``.
        params: Keyword parameters of the preset builder.
        relax_intercept: Required for ``porous_clipped``.

    Returns:
        The graph.

    Raises:
        InvalidParams: For an unknown name, bad parameters, or ``porous_clipped``
            without the relaxation flag.
    """
    if name not in _BUILDERS:
        raise InvalidParams(f"unknown graph preset '{name}'. Valid presets: {', '.join(PRESETS)}")
    if name == "porous_clipped" and not relax_intercept:
        raise InvalidParams(
            "porous_clipped has a negative far-field intercept; it requires relax_intercept"
        )
    try:
        return _BUILDERS[name](**dict(params or {}))
    except TypeError as e:
        raise InvalidParams(f"bad parameters for preset '{name}': {e}") from e


def from_records(
    records: Sequence[tuple[float, float, float, float]],
    c0: float,
    threshold: float,
    name: str = "custom",
) -> MonotoneGraph:
    """Build a graph from ``(breakpoint, left limit, right limit, right slope)`` records.

    The piece left of the first breakpoint has slope ``c0``; every later piece is
    anchored at the right limit of the breakpoint that starts it, and must reach the
    next record's left limit.

    Raises:
        InvalidParams: If consecutive records are inconsistent.
    """
    if not records:
        return MonotoneGraph([], [c0], [0.0], FarField(c0, 0.0, 0.0, threshold), name=name)
    ordered = list(records)
    b = np.array([rec[0] for rec in ordered], dtype=float)
    lo = np.array([rec[1] for rec in ordered], dtype=float)
    hi = np.array([rec[2] for rec in ordered], dtype=float)
    right = np.array([rec[3] for rec in ordered], dtype=float)
    slopes = np.concatenate([[c0], right])
    intercepts = np.concatenate([[lo[0] - c0 * b[0]], hi - right * b])
    for k in range(1, b.size):
        reached = slopes[k] * b[k] + intercepts[k]
        if not math.isclose(reached, lo[k], rel_tol=1e-9, abs_tol=1e-9):
            raise InvalidParams(
                f"record {k}: piece from breakpoint {b[k - 1]} reaches {reached} at "
                f"{b[k]}, but the left limit there is {lo[k]}"
            )
    return MonotoneGraph(
        b,
        slopes,
        intercepts,
        FarField(c0=c0, c0_plus=float(intercepts[-1]), c0_minus=float(intercepts[0]), m0=threshold),
        name=name,
    )


def graph_table(graph: MonotoneGraph, lam: float, r: ArrayLike) -> FloatArray:
    """Columns r, beta_lo, beta_hi, J, yosida, envelope for plotting."""
    rr = np.asarray(r, dtype=float).ravel()
    lo, hi = graph.bounds(rr)
    return np.column_stack(
        [
            rr,
            lo,
            hi,
            np.asarray(graph.resolvent(lam, rr)),
            np.asarray(graph.yosida(lam, rr)),
            np.asarray(graph.envelope(lam, rr)),
        ]
    )
