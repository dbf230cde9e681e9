"""Uniform grids, sampled functions, ball quadrature and ball families.

All functions of the toolkit live on a ``GridDomain``: the box [-R, R]^dim with
``N`` nodes per axis at x_i = -R + i*h, h = 2R/N. Integrals are midpoint
(cell-collocation) sums h^dim * sum(values). A ``BallFamily`` replaces the
supremum over all balls by a maximum over a deterministic set of
(center, radius) pairs.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from core.errors import DegenerateBallError, GridError
from utils.environment import get_max_points

logger = logging.getLogger(__name__)

# Closed balls; nodes at distance r*(1 +- roundoff) must not flip membership
MEMBERSHIP_TOLERANCE = 1e-9

CELL_QUADRATURE_POINTS = 16


class Boundary(str, Enum):
    PERIODIC = "periodic"
    TRUNCATED_DIRICHLET = "truncated_dirichlet"


@dataclass(frozen=True)
class GridDomain:
    dim: int
    half_width: float
    points_per_axis: int
    boundary: Boundary = Boundary.PERIODIC

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise GridError(f"dim must be 1, 2 or 3, got {self.dim}")
        if not self.half_width > 0:
            raise GridError(f"half_width must be positive, got {self.half_width}")
        if self.points_per_axis <= 0 or self.points_per_axis % 2:
            raise GridError(f"points_per_axis must be a positive even integer, got {self.points_per_axis}")
        object.__setattr__(self, 'boundary', Boundary(self.boundary))
        budget = get_max_points()
        if self.size > budget:
            raise GridError(f"{self.points_per_axis}^{self.dim} = {self.size} points exceeds the memory budget of {budget}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points_per_axis

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.points_per_axis,) * self.dim

    @property
    def size(self) -> int:
        return self.points_per_axis ** self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    @property
    def is_periodic(self) -> bool:
        return self.boundary is Boundary.PERIODIC

    @property
    def origin_index(self) -> Tuple[int, ...]:
        return (self.points_per_axis // 2,) * self.dim

    def axis(self) -> np.ndarray:
        return -self.half_width + self.spacing * np.arange(self.points_per_axis)

    def coordinates(self) -> np.ndarray:
        """Node coordinates with the axis index first: shape (dim, N, ..., N)."""
        return np.stack(np.meshgrid(*([self.axis()] * self.dim), indexing='ij'))

    def radius(self) -> np.ndarray:
        """|x| at every node."""
        return np.sqrt(np.sum(self.coordinates() ** 2, axis=0))

    def point_at(self, index: Sequence[int]) -> Tuple[float, ...]:
        axis = self.axis()
        return tuple(float(axis[i]) for i in index)

    def snap(self, point: Sequence[float]) -> Tuple[int, ...]:
        """Index of the grid node nearest to ``point``."""
        if len(point) != self.dim:
            raise GridError(f"point {tuple(point)} does not have dimension {self.dim}")
        n = self.points_per_axis
        index = []
        for x in point:
            i = int(round((x + self.half_width) / self.spacing))
            if self.is_periodic:
                i %= n
            elif not 0 <= i < n:
                raise GridError(f"point {tuple(point)} lies outside [-{self.half_width}, {self.half_width}]^{self.dim}")
            index.append(i)
        return tuple(index)

    def offset_distance(self, center_index: Sequence[int]) -> np.ndarray:
        """Distance from the node ``center_index`` to every node, via integer offsets.

        Periodic domains use the minimal image; truncated domains the plain
        Euclidean distance inside the box.
        """
        n = self.points_per_axis
        squared = np.zeros(self.shape)
        for a, c in enumerate(center_index):
            offsets = np.arange(n) - c
            if self.is_periodic:
                offsets = (offsets + n // 2) % n - n // 2
            shape = [1] * self.dim
            shape[a] = n
            squared = squared + (offsets.reshape(shape) * 1.0) ** 2
        return self.spacing * np.sqrt(squared)

    def wrapped_difference(self, x: np.ndarray, y: Sequence[float]) -> np.ndarray:
        """Per-axis displacement x - y (minimal image when periodic); x has the axis index first."""
        diff = np.stack([x[a] - y[a] for a in range(self.dim)])
        if self.is_periodic:
            period = 2.0 * self.half_width
            diff = (diff + self.half_width) % period - self.half_width
        return diff

    def inner_mask(self, fraction: float = 0.5) -> np.ndarray:
        """Nodes of the inner box max_a |x_a| <= fraction * R."""
        coords = self.coordinates()
        limit = fraction * self.half_width * (1 + 1e-12)
        return np.all(np.abs(coords) <= limit, axis=0)

    def refined(self, factor: int = 2) -> 'GridDomain':
        return GridDomain(self.dim, self.half_width, self.points_per_axis * factor, self.boundary)

    def to_header(self) -> Dict:
        return {
            'dim': self.dim,
            'half_width': self.half_width,
            'points_per_axis': self.points_per_axis,
            'boundary': self.boundary.value,
        }


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples of a real or complex function on every node of ``domain``."""

    domain: GridDomain
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, copy=True)
        if values.dtype.kind not in 'fc':
            values = values.astype(float)
        if values.size != self.domain.size:
            raise GridError(f"expected {self.domain.size} samples, got {values.size}")
        values = values.reshape(self.domain.shape)
        bad = ~np.isfinite(values)
        if bad.any():
            index = tuple(int(i) for i in np.argwhere(bad)[0])
            raise GridError(f"non-finite sample at {self.domain.point_at(index)}")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @classmethod
    def zeros(cls, domain: GridDomain) -> 'GridFunction':
        return cls(domain, np.zeros(domain.shape))

    @classmethod
    def constant(cls, domain: GridDomain, value: float) -> 'GridFunction':
        return cls(domain, np.full(domain.shape, value))

    @property
    def is_complex(self) -> bool:
        return self.values.dtype.kind == 'c'

    def with_values(self, values: np.ndarray) -> 'GridFunction':
        return GridFunction(self.domain, values)

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def abs_pow(self, p: float) -> np.ndarray:
        return abs_pow(self.values, p)

    def _check_domain(self, other: 'GridFunction'):
        if other.domain != self.domain:
            raise GridError("grid functions live on different domains")

    def __add__(self, other: 'GridFunction') -> 'GridFunction':
        self._check_domain(other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: 'GridFunction') -> 'GridFunction':
        self._check_domain(other)
        return self.with_values(self.values - other.values)

    def __mul__(self, scalar) -> 'GridFunction':
        return self.with_values(scalar * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> 'GridFunction':
        return self.with_values(-self.values)


@dataclass(frozen=True)
class Ball:
    center: Tuple[float, ...]
    radius: float

    @classmethod
    def on(cls, domain: GridDomain, center: Sequence[float], radius: float) -> 'Ball':
        """Ball with its center snapped to the nearest node of ``domain``."""
        h = domain.spacing
        if radius < h * (1 - 1e-12):
            raise GridError(f"radius {radius} is smaller than the grid spacing {h}")
        if radius > domain.half_width * (1 + 1e-12):
            raise GridError(f"radius {radius} exceeds the half width {domain.half_width}")
        return cls(domain.point_at(domain.snap(center)), float(radius))

    def to_record(self) -> Dict:
        return {'center': list(self.center), 'radius': self.radius}


def abs_pow(values: np.ndarray, p: float) -> np.ndarray:
    """|values|^p through exp/log, with |0|^p = 0."""
    magnitude = np.abs(values)
    out = np.zeros(magnitude.shape)
    positive = magnitude > 0
    out[positive] = np.exp(p * np.log(magnitude[positive]))
    return out


def cell_average(domain: GridDomain, expr: Callable[[np.ndarray], np.ndarray],
                 index: Sequence[int]) -> complex:
    """Average of ``expr`` over the cell centred at node ``index`` (16-point Gauss per axis)."""
    nodes, weights = np.polynomial.legendre.leggauss(CELL_QUADRATURE_POINTS)
    h = domain.spacing
    center = np.array(domain.point_at(index))
    grids = np.meshgrid(*([nodes] * domain.dim), indexing='ij')
    w = np.ones_like(grids[0])
    for g_weights in np.meshgrid(*([weights] * domain.dim), indexing='ij'):
        w = w * g_weights
    points = np.stack([center[a] + 0.5 * h * grids[a] for a in range(domain.dim)])
    with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
        samples = np.asarray(expr(points))
    return np.sum(w * samples) / 2.0 ** domain.dim


def sample(domain: GridDomain, expr: Callable[[np.ndarray], np.ndarray],
           regularize: bool = False) -> GridFunction:
    """Evaluate ``expr`` at every node.

    ``expr`` receives the coordinate array with the axis index first (``x[0]``
    is the first coordinate). With ``regularize`` set, nodes where ``expr`` is
    singular are replaced by the cell average of ``expr``.
    """
    coords = domain.coordinates()
    with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
        values = np.broadcast_to(np.asarray(expr(coords)), domain.shape).copy()
    bad = ~np.isfinite(values)
    if bad.any():
        if not regularize:
            index = tuple(int(i) for i in np.argwhere(bad)[0])
            raise GridError(f"expression is not finite at {domain.point_at(index)}")
        for idx in np.argwhere(bad):
            index = tuple(int(i) for i in idx)
            averaged = cell_average(domain, expr, index)
            if not np.isfinite(averaged):
                raise GridError(f"cell average is not finite at {domain.point_at(index)}")
            values[index] = averaged
        logger.debug(f"Regularized {int(bad.sum())} singular nodes by cell averaging")
    return GridFunction(domain, values)


def ball_mask(domain: GridDomain, ball: Ball) -> np.ndarray:
    distance = domain.offset_distance(domain.snap(ball.center))
    return distance <= ball.radius + MEMBERSHIP_TOLERANCE * domain.spacing


def _ball_values(f: GridFunction, ball: Ball) -> np.ndarray:
    inside = f.values[ball_mask(f.domain, ball)]
    if inside.size == 0:
        raise DegenerateBallError(f"degenerate ball: {ball} contains no grid node")
    return inside


def ball_lp_integral(f: GridFunction, ball: Ball, p: float) -> float:
    """h^dim * sum over nodes in the ball of |f|^p."""
    return float(f.domain.cell_volume * np.sum(abs_pow(_ball_values(f, ball), p)))


def ball_mean(f: GridFunction, ball: Ball):
    inside = _ball_values(f, ball)
    mean = np.mean(inside)
    return complex(mean) if f.is_complex else float(mean)


def _halved_stride(stride: int) -> int:
    for divisor in range(stride // 2, 0, -1):
        if stride % divisor == 0:
            return divisor
    return 1


@dataclass(frozen=True)
class BallFamily:
    """Centers on the sublattice through the origin node with index stride
    ``stride``; radii R * ratio**j for j = 0..levels."""

    domain: GridDomain
    stride: int
    ratio: float = 2.0 ** -0.5
    levels: int = 0

    def __post_init__(self):
        if self.stride < 1:
            raise GridError(f"stride must be positive, got {self.stride}")
        if not 0 < self.ratio < 1:
            raise GridError(f"radius ratio must lie in (0, 1), got {self.ratio}")
        if self.radii[-1] < self.domain.spacing * (1 - 1e-12):
            raise GridError(f"smallest radius {self.radii[-1]} is below the grid spacing")

    @classmethod
    def default(cls, domain: GridDomain, stride: Optional[int] = None,
                ratio: float = 2.0 ** -0.5) -> 'BallFamily':
        if stride is None:
            stride = max(1, domain.points_per_axis // 16)
        return cls(domain, stride, ratio, _levels_down_to(domain, ratio, 2.0 * domain.spacing))

    @property
    def radii(self) -> Tuple[float, ...]:
        return tuple(self.domain.half_width * self.ratio ** j for j in range(self.levels + 1))

    def center_indices(self) -> np.ndarray:
        """Center node indices, shape (n_centers, dim)."""
        n = self.domain.points_per_axis
        axis = np.array([i for i in range(n) if (i - n // 2) % self.stride == 0])
        mesh = np.meshgrid(*([axis] * self.domain.dim), indexing='ij')
        return np.stack([m.ravel() for m in mesh], axis=1)

    def centers(self) -> np.ndarray:
        return self.domain.axis()[self.center_indices()]

    @property
    def n_centers(self) -> int:
        return len(self.center_indices())

    def balls(self) -> Iterator[Ball]:
        centers = self.centers()
        for radius in self.radii:
            for center in centers:
                yield Ball(tuple(float(c) for c in center), radius)

    def refined(self, levels: int = 1) -> 'BallFamily':
        """Smaller stride and more radii; every existing (center, radius) pair is kept."""
        stride = self.stride
        for _ in range(levels):
            stride = _halved_stride(stride)
        deepest = _levels_down_to(self.domain, self.ratio, self.domain.spacing)
        return BallFamily(self.domain, stride, self.ratio, max(self.levels, min(self.levels + 2 * levels, deepest)))

    def on_domain(self, domain: GridDomain) -> 'BallFamily':
        """Same index stride and ratio on another domain, radii down to 2h there."""
        return BallFamily(domain, self.stride, self.ratio, _levels_down_to(domain, self.ratio, 2.0 * domain.spacing))


def _levels_down_to(domain: GridDomain, ratio: float, floor: float) -> int:
    levels = int(math.floor(math.log(domain.half_width / floor) / math.log(1.0 / ratio) + 1e-9))
    return max(levels, 0)


@lru_cache(maxsize=128)
def _membership(domain: GridDomain, stride: int, radius: float) -> sparse.csr_matrix:
    n = domain.points_per_axis
    h = domain.spacing
    reach = min(int(math.floor(radius / h + MEMBERSHIP_TOLERANCE)), n)
    if domain.is_periodic:
        span = np.arange(-(n // 2), n - n // 2)
    else:
        span = np.arange(-(n - 1), n)
    span = span[np.abs(span) <= reach]
    grids = np.meshgrid(*([span] * domain.dim), indexing='ij')
    offsets = np.stack([g.ravel() for g in grids], axis=1)
    keep = h * np.sqrt(np.sum(offsets.astype(float) ** 2, axis=1)) <= radius + MEMBERSHIP_TOLERANCE * h
    offsets = offsets[keep]

    family = BallFamily(domain, stride, levels=0)
    centers = family.center_indices()
    targets = centers[:, None, :] + offsets[None, :, :]
    if domain.is_periodic:
        targets %= n
        valid = np.ones(targets.shape[:2], dtype=bool)
    else:
        valid = np.all((targets >= 0) & (targets < n), axis=2)
    flat = np.zeros(targets.shape[:2], dtype=np.int64)
    for a in range(domain.dim):
        flat = flat * n + targets[:, :, a]
    rows = np.broadcast_to(np.arange(len(centers))[:, None], flat.shape)[valid]
    cols = flat[valid]
    return sparse.csr_matrix((np.ones(len(cols)), (rows, cols)), shape=(len(centers), domain.size))


def membership(family: BallFamily, radius: float) -> sparse.csr_matrix:
    """Sparse (n_centers, n_points) 0/1 matrix of node membership in each ball of radius ``radius``."""
    return _membership(family.domain, family.stride, float(radius))


def family_lp_integrals(values: np.ndarray, family: BallFamily, radius: float) -> np.ndarray:
    """h^dim * sum_{x in B} values for every center of the family at ``radius``.

    ``values`` is the (already powered) integrand on the grid.
    """
    return family.domain.cell_volume * (membership(family, radius) @ np.ravel(values))


def family_means(f: GridFunction, family: BallFamily, radius: float) -> np.ndarray:
    m = membership(family, radius)
    counts = np.diff(m.indptr)
    if np.any(counts == 0):
        raise DegenerateBallError(f"degenerate ball: a ball of radius {radius} contains no grid node")
    return (m @ np.ravel(f.values)) / counts


def family_oscillation_integrals(f: GridFunction, family: BallFamily, radius: float, p: float) -> np.ndarray:
    """h^dim * sum_{x in B} |f(x) - f_B|^p for every center at ``radius``."""
    m = membership(family, radius)
    means = family_means(f, family, radius)
    rows = np.repeat(np.arange(m.shape[0]), np.diff(m.indptr))
    deviations = abs_pow(np.ravel(f.values)[m.indices] - means[rows], p)
    return family.domain.cell_volume * np.bincount(rows, weights=deviations, minlength=m.shape[0])
