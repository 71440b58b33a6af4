"""Discrete bulk-surface complex: lumped masses, stiffness, mean and projection.

A bulk-surface field is one flat vector: the bulk values at the interior nodes come
first, then the surface values at the boundary nodes. Bulk and surface entries are
independent unknowns; the stiffness couples them only through the edges that join
the outermost interior rows to the boundary rows.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np
import scipy.sparse as sp
from numpy.typing import ArrayLike, NDArray

from .exceptions import GridTooSmall, ShapeMismatch

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]


@dataclass(frozen=True)
class Strip:
    """Periodic strip (0, Lx) x (0, 1); the boundary is the two rows y = 0 and y = 1.

    Attributes:
        lx: Period in x.
        nx: Nodes per row (periodic).
        ny: Interior rows strictly inside (0, 1).
    """

    lx: float = 1.0
    nx: int = 32
    ny: int = 16

    @property
    def hx(self) -> float:
        return self.lx / self.nx

    @property
    def hy(self) -> float:
        return 1.0 / (self.ny + 1)

    def describe(self) -> str:
        return f"strip lx={self.lx:g} nx={self.nx} ny={self.ny}"


@dataclass(frozen=True)
class Interval:
    """Unit interval with its two end points as the boundary."""

    n: int = 64

    @property
    def h(self) -> float:
        return 1.0 / (self.n + 1)

    def describe(self) -> str:
        return f"interval n={self.n}"


Geometry = Union[Strip, Interval]


@dataclass(frozen=True, eq=False)
class DiscreteOperators:
    """Immutable discrete operators of one geometry.

    Attributes:
        geometry: Geometry the operators were built for.
        n_bulk: Number of bulk unknowns (they come first in every field).
        weights: Lumped mass weights, positive.
        stiffness: Symmetric positive-semidefinite matrix of the form a(., .).
        surface_laplacian: Part of ``stiffness`` coming from the boundary
            Laplace-Beltrami operator alone (zero for the interval).
        x: Node abscissae.
        y: Node ordinate (strip) or zero (interval).
        vol_omega: Bulk measure, the sum of the bulk weights.
        vol_gamma: Surface measure, the sum of the surface weights.
    """

    geometry: Geometry
    n_bulk: int
    weights: FloatArray
    stiffness: sp.csr_matrix
    surface_laplacian: sp.csr_matrix
    x: FloatArray
    y: FloatArray
    vol_omega: float
    vol_gamma: float

    @property
    def dim(self) -> int:
        return int(self.weights.size)

    @property
    def n_surface(self) -> int:
        return self.dim - self.n_bulk

    @property
    def volume(self) -> float:
        """|Omega| + |Gamma|."""
        return self.vol_omega + self.vol_gamma

    @cached_property
    def bulk_mask(self) -> NDArray[np.bool_]:
        mask = np.zeros(self.dim, dtype=bool)
        mask[: self.n_bulk] = True
        mask.flags.writeable = False
        return mask

    @cached_property
    def mass(self) -> sp.csr_matrix:
        """Diagonal lumped mass matrix."""
        return sp.diags(self.weights, format="csr")

    def check(self, z: ArrayLike, name: str = "field") -> FloatArray:
        """Return ``z`` as a float vector, checking its length.

        Raises:
            ShapeMismatch: If the length differs from the number of unknowns.
        """
        arr = np.asarray(z, dtype=float)
        if arr.shape != (self.dim,):
            raise ShapeMismatch(
                f"{name} has shape {arr.shape}, expected ({self.dim},) "
                f"for {self.geometry.describe()}"
            )
        return arr

    def join(self, bulk: ArrayLike, surface: ArrayLike) -> FloatArray:
        """Assemble a field from its bulk and surface parts."""
        b = np.asarray(bulk, dtype=float).ravel()
        s = np.asarray(surface, dtype=float).ravel()
        if b.size != self.n_bulk or s.size != self.n_surface:
            raise ShapeMismatch(
                f"parts of sizes ({b.size}, {s.size}) do not match "
                f"({self.n_bulk}, {self.n_surface})"
            )
        return np.concatenate([b, s])

    def split(self, z: ArrayLike) -> tuple[FloatArray, FloatArray]:
        arr = self.check(z)
        return arr[: self.n_bulk], arr[self.n_bulk :]

    def constant(self, value: float) -> FloatArray:
        return np.full(self.dim, float(value))

    def mean(self, z: ArrayLike) -> float:
        """Combined mean m(z) = (sum of w z over bulk and surface) / (|Omega| + |Gamma|)."""
        arr = self.check(z)
        return float(self.weights @ arr) / self.volume

    def project(self, z: ArrayLike) -> FloatArray:
        """P z = z - m(z) 1."""
        arr = self.check(z)
        return arr - self.mean(arr)

    def a_form(self, u: ArrayLike, z: ArrayLike) -> float:
        """Bilinear form u^T A z."""
        uu = self.check(u, "u")
        zz = self.check(z, "z")
        return float(uu @ (self.stiffness @ zz))

    def inner_h(self, u: ArrayLike, z: ArrayLike) -> float:
        """Weighted inner product of bold-H."""
        uu = self.check(u, "u")
        zz = self.check(z, "z")
        return float(np.sum(self.weights * uu * zz))

    def norm_h(self, z: ArrayLike) -> float:
        return float(np.sqrt(self.inner_h(z, z)))

    def bulk_integral(self, values: ArrayLike) -> float:
        arr = self.check(values)
        return float(self.weights[: self.n_bulk] @ arr[: self.n_bulk])

    def surface_integral(self, values: ArrayLike) -> float:
        arr = self.check(values)
        return float(self.weights[self.n_bulk :] @ arr[self.n_bulk :])


class _EdgeList:
    """Collects weighted edges p--q and assembles their graph Laplacian."""

    def __init__(self) -> None:
        self.p: list[NDArray[np.intp]] = []
        self.q: list[NDArray[np.intp]] = []
        self.c: list[FloatArray] = []

    def add(self, p: ArrayLike, q: ArrayLike, c: ArrayLike) -> None:
        pp = np.asarray(p, dtype=np.intp).ravel()
        qq = np.asarray(q, dtype=np.intp).ravel()
        self.p.append(pp)
        self.q.append(qq)
        self.c.append(np.broadcast_to(np.asarray(c, dtype=float), pp.shape).ravel())

    def assemble(self, dim: int) -> sp.csr_matrix:
        if not self.p:
            return sp.csr_matrix((dim, dim))
        p = np.concatenate(self.p)
        q = np.concatenate(self.q)
        c = np.concatenate(self.c)
        rows = np.concatenate([p, q, p, q])
        cols = np.concatenate([p, q, q, p])
        vals = np.concatenate([c, c, -c, -c])
        return sp.coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsr()


def _freeze(*arrays: FloatArray) -> None:
    for arr in arrays:
        arr.flags.writeable = False


def _build_strip(geometry: Strip) -> DiscreteOperators:
    nx, ny, hx, hy = geometry.nx, geometry.ny, geometry.hx, geometry.hy
    nb = nx * ny
    dim = nb + 2 * nx
    cols = np.arange(nx)

    # outermost interior rows also carry the half cell next to the boundary
    row_height = np.full(ny, hy)
    row_height[0] += 0.5 * hy
    row_height[-1] += 0.5 * hy

    def bulk(j: int) -> NDArray[np.intp]:
        return j * nx + cols

    bottom = nb + cols
    top = nb + nx + cols
    right = np.roll(cols, -1)

    bulk_edges = _EdgeList()
    for j in range(ny):
        bulk_edges.add(bulk(j), j * nx + right, row_height[j] / hx)
    for j in range(ny - 1):
        bulk_edges.add(bulk(j), bulk(j + 1), hx / hy)
    bulk_edges.add(bottom, bulk(0), hx / hy)
    bulk_edges.add(bulk(ny - 1), top, hx / hy)

    surface_edges = _EdgeList()
    surface_edges.add(bottom, nb + right, 1.0 / hx)
    surface_edges.add(top, nb + nx + right, 1.0 / hx)

    laplace_beltrami = surface_edges.assemble(dim)
    stiffness = (bulk_edges.assemble(dim) + laplace_beltrami).tocsr()

    weights = np.concatenate([np.repeat(row_height * hx, nx), np.full(2 * nx, hx)])
    x = np.concatenate([np.tile(cols * hx, ny), cols * hx, cols * hx])
    y = np.concatenate([np.repeat((np.arange(ny) + 1) * hy, nx), np.zeros(nx), np.ones(nx)])
    _freeze(weights, x, y)
    return DiscreteOperators(
        geometry=geometry,
        n_bulk=nb,
        weights=weights,
        stiffness=stiffness,
        surface_laplacian=laplace_beltrami,
        x=x,
        y=y,
        vol_omega=float(np.sum(weights[:nb])),
        vol_gamma=float(np.sum(weights[nb:])),
    )


def _build_interval(geometry: Interval) -> DiscreteOperators:
    n, h = geometry.n, geometry.h
    dim = n + 2
    left, right = n, n + 1

    edges = _EdgeList()
    edges.add(np.arange(n - 1), np.arange(1, n), 1.0 / h)
    edges.add([left, n - 1], [0, right], 1.0 / h)

    bulk_weights = np.full(n, h)
    bulk_weights[0] += 0.5 * h
    bulk_weights[-1] += 0.5 * h
    weights = np.concatenate([bulk_weights, [1.0, 1.0]])
    x = np.concatenate([(np.arange(n) + 1) * h, [0.0, 1.0]])
    y = np.zeros(dim)
    _freeze(weights, x, y)
    return DiscreteOperators(
        geometry=geometry,
        n_bulk=n,
        weights=weights,
        stiffness=edges.assemble(dim),
        surface_laplacian=sp.csr_matrix((dim, dim)),
        x=x,
        y=y,
        vol_omega=float(np.sum(bulk_weights)),
        vol_gamma=2.0,
    )


def build_operators(geometry: Geometry) -> DiscreteOperators:
    """Assemble the discrete operators of a geometry.

    Args:
        geometry: ``Strip`` or ``Interval``.

    Returns:
        The immutable operators.

    Raises:
        GridTooSmall: If the grid has too few nodes (nx < 4, ny < 2 or n < 2) or a
            nonpositive period.
    """
    if isinstance(geometry, Strip):
        if geometry.nx < 4 or geometry.ny < 2:
            raise GridTooSmall(
                f"strip needs nx >= 4 and ny >= 2, got nx={geometry.nx}, ny={geometry.ny}"
            )
        if not geometry.lx > 0:
            raise GridTooSmall(f"strip period must be positive, got lx={geometry.lx}")
        ops = _build_strip(geometry)
    elif isinstance(geometry, Interval):
        if geometry.n < 2:
            raise GridTooSmall(f"interval needs n >= 2 interior nodes, got n={geometry.n}")
        ops = _build_interval(geometry)
    else:
        raise GridTooSmall(f"unsupported geometry {geometry!r}")
    logger.debug(
        "Built operators for %s: %d unknowns, %d stiffness entries",
        geometry.describe(),
        ops.dim,
        ops.stiffness.nnz,
    )
    return ops
