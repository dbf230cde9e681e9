"""Poisson extensions u(x, t) = e^{-t sqrt(L)} f on log-spaced heights.

Covers the PDE residual of -u_tt + L u = 0, the Carleson functional
r^{-lambda} int_0^r int_B t |grad u|^2, the square function, and recovery of
the boundary trace from a sampled field.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import BarycentricInterpolator

from core.errors import NumericalError, TraceBoundError
from core.grid import Ball, BallFamily, GridDomain, GridFunction, membership
from core.norms import NormParams, NormValue, morrey_norm
from core.spectral import (
    OperatorEngine,
    apply_generator,
    apply_multiplier,
    central_gradient,
    multiplier_stack,
    poisson_apply,
    spatial_gradient,
)

logger = logging.getLogger(__name__)

MIN_HEIGHTS_PER_BALL = 4


@dataclass(frozen=True)
class HeightGrid:
    heights: Tuple[float, ...]

    def __post_init__(self):
        t = np.asarray(self.heights, dtype=float)
        if len(t) < 2:
            raise NumericalError("a height grid needs at least two heights")
        if t[0] <= 0 or np.any(np.diff(t) <= 0):
            raise NumericalError("heights must be positive and strictly increasing")
        ratios = t[1:] / t[:-1]
        if not np.allclose(ratios, ratios[0], rtol=1e-9):
            raise NumericalError("heights must be log-spaced")
        object.__setattr__(self, 'heights', tuple(float(x) for x in t))

    @classmethod
    def geometric(cls, t_min: float, t_max: float, count: int) -> 'HeightGrid':
        return cls(tuple(np.geomspace(t_min, t_max, count)))

    @property
    def count(self) -> int:
        return len(self.heights)

    @property
    def log_step(self) -> float:
        return math.log(self.heights[1] / self.heights[0])

    def as_array(self) -> np.ndarray:
        return np.asarray(self.heights)

    def check_domain(self, domain: GridDomain):
        if self.heights[0] < 2.0 * domain.spacing * (1 - 1e-12):
            raise NumericalError(f"lowest height {self.heights[0]:.4g} is below 2h = {2.0 * domain.spacing:.4g}")
        if self.heights[-1] > 0.5 * domain.half_width * (1 + 1e-12):
            raise NumericalError(f"highest height {self.heights[-1]:.4g} exceeds R/2 = {0.5 * domain.half_width:.4g}")


class Provenance(str, Enum):
    EXTENDED = "extended"
    EXTERNAL = "external"


@dataclass(frozen=True, eq=False)
class SolutionField:
    domain: GridDomain
    heights: HeightGrid
    slices: np.ndarray
    provenance: Provenance = Provenance.EXTERNAL
    boundary: Optional[GridFunction] = None

    def __post_init__(self):
        slices = np.array(self.slices, copy=True)
        if slices.dtype.kind not in 'fc':
            slices = slices.astype(float)
        expected = (self.heights.count,) + self.domain.shape
        if slices.shape != expected:
            raise NumericalError(f"slices have shape {slices.shape}, expected {expected}")
        if not np.all(np.isfinite(slices)):
            raise NumericalError("solution field has non-finite slices")
        slices.setflags(write=False)
        object.__setattr__(self, 'slices', slices)
        object.__setattr__(self, 'provenance', Provenance(self.provenance))
        if self.provenance is Provenance.EXTENDED and self.boundary is None:
            raise NumericalError("an extended field records its boundary function")

    @classmethod
    def constant_in_height(cls, f: GridFunction, heights: HeightGrid) -> 'SolutionField':
        """u(., t) = f for every t; not a Poisson extension unless f is a fixed point."""
        return cls(f.domain, heights, np.broadcast_to(f.values, (heights.count,) + f.domain.shape))

    def slice(self, j: int) -> GridFunction:
        return GridFunction(self.domain, self.slices[j])

    def slice_at(self, t: float) -> GridFunction:
        """u(., t), log-linear interpolation between neighbouring heights."""
        heights = self.heights.as_array()
        if not heights[0] * (1 - 1e-9) <= t <= heights[-1] * (1 + 1e-9):
            raise NumericalError(f"height {t:.4g} lies outside [{heights[0]:.4g}, {heights[-1]:.4g}]")
        exact = np.flatnonzero(np.isclose(heights, t, rtol=1e-9, atol=0.0))
        if exact.size:
            return self.slice(int(exact[0]))
        j = int(np.searchsorted(heights, t)) - 1
        weight = math.log(t / heights[j]) / math.log(heights[j + 1] / heights[j])
        return GridFunction(self.domain, (1.0 - weight) * self.slices[j] + weight * self.slices[j + 1])

    def scaled(self, a: float) -> 'SolutionField':
        boundary = None if self.boundary is None else a * self.boundary
        return SolutionField(self.domain, self.heights, a * self.slices, self.provenance, boundary)

    def sup(self) -> float:
        return float(np.max(np.abs(self.slices)))


def _poisson_kernel(t: float, mu: np.ndarray) -> np.ndarray:
    return np.exp(-t * np.sqrt(np.maximum(mu, 0.0)))


def poisson_extension(engine: OperatorEngine, f: GridFunction, heights: HeightGrid) -> SolutionField:
    heights.check_domain(engine.domain)
    slices = multiplier_stack(engine, f, _poisson_kernel, heights.heights)
    return SolutionField(engine.domain, heights, slices, Provenance.EXTENDED, f)


def _log_derivatives(field: SolutionField) -> Tuple[np.ndarray, np.ndarray]:
    u = field.slices
    step = field.heights.log_step
    first = (u[2:] - u[:-2]) / (2.0 * step)
    second = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / step ** 2
    return first, second


def pde_residual(field: SolutionField, engine: OperatorEngine) -> float:
    """max over interior heights of sup|-u_tt + L u|, relative to max sup|L u|.

    u_tt comes from second-order central differences in tau = log t:
    t^2 u_tt = u_tautau - u_tau.
    """
    if field.heights.count < 5:
        raise NumericalError(f"PDE residual needs at least 3 interior heights, got {field.heights.count - 2}")
    if field.domain != engine.domain:
        raise NumericalError("field and engine live on different domains")
    t = field.heights.as_array()[1:-1]
    first, second = _log_derivatives(field)
    shape = (-1,) + (1,) * field.domain.dim
    u_tt = (second - first) / t.reshape(shape) ** 2
    Lu = np.stack([apply_generator(engine, field.slice(j)).values for j in range(1, field.heights.count - 1)])
    residual = float(np.max(np.abs(-u_tt + Lu)))
    scale = float(np.max(np.abs(Lu)))
    if scale == 0.0:
        return residual
    return residual / scale


@dataclass
class CarlesonValue:
    value: float
    argmax_ball: Optional[Ball]
    table: List[Dict] = field(default_factory=list)
    skipped_balls: int = 0
    collar_bound: float = 0.0

    def to_record(self) -> Dict:
        return {
            'value': self.value,
            'argmax_center': list(self.argmax_ball.center) if self.argmax_ball else None,
            'argmax_radius': self.argmax_ball.radius if self.argmax_ball else None,
            'skipped_balls': self.skipped_balls,
            'collar_bound': self.collar_bound,
        }


def _height_integrals(density: np.ndarray, heights: np.ndarray, family: BallFamily, lam: float):
    """Per ball: r^{-lambda} int_{t_1}^{r} t^2 (int_B density dx) dtau, trapezoid in tau = log t.

    Yields (radius, scaled integrals per center) for every radius with at
    least four heights below it, and the number of balls skipped.
    """
    domain = family.domain
    tau = np.log(heights)
    weighted = density.reshape(len(heights), -1) * (heights ** 2)[:, None]
    skipped = 0
    out = []
    for radius in family.radii:
        below = int(np.searchsorted(heights, radius * (1 + 1e-12), side='right'))
        if below < MIN_HEIGHTS_PER_BALL:
            skipped += family.n_centers
            continue
        ball_sums = domain.cell_volume * (membership(family, radius) @ weighted[:below].T)
        integrals = trapezoid(ball_sums, tau[:below], axis=1)
        if below < len(heights) and heights[below - 1] < radius:
            # cut at log r by linear interpolation of the integrand
            cut = math.log(radius)
            upper = domain.cell_volume * (membership(family, radius) @ weighted[below])
            w = (cut - tau[below - 1]) / (tau[below] - tau[below - 1])
            at_cut = (1.0 - w) * ball_sums[:, -1] + w * upper
            integrals = integrals + 0.5 * (cut - tau[below - 1]) * (ball_sums[:, -1] + at_cut)
        out.append((radius, radius ** (-lam) * integrals))
    return out, skipped


def _sup_over_heights(results, family: BallFamily):
    centers = family.centers()
    best, best_ball, profile = -1.0, None, {}
    table = []
    for radius, scaled in results:
        k = int(np.argmax(scaled))
        profile[radius] = float(scaled[k])
        for center, value in zip(centers, scaled):
            table.append({'center': [float(c) for c in center], 'radius': radius, 'value': float(value)})
        if scaled[k] > best:
            best = float(scaled[k])
            best_ball = Ball(tuple(float(c) for c in centers[k]), radius)
    return best, best_ball, profile, table


def carleson_functional(field: SolutionField, params: NormParams, family: BallFamily,
                        engine: Optional[OperatorEngine] = None) -> CarlesonValue:
    """max over balls of r^{-lambda} int_{t_min}^{r} int_B t |grad_{x,t} u|^2 dx dt (squared units).

    The collar (0, t_min) is left out; ``collar_bound`` bounds what it could add.
    """
    if family.domain != field.domain:
        raise NumericalError("ball family and field live on different domains")
    params.check_dimension(field.domain.dim)
    heights = field.heights.as_array()
    u = field.slices
    shape = (-1,) + (1,) * field.domain.dim
    u_t = np.gradient(u, np.log(heights), axis=0, edge_order=2) / heights.reshape(shape)
    density = np.abs(u_t) ** 2
    for j in range(len(heights)):
        grad = spatial_gradient(engine, u[j]) if engine is not None else central_gradient(field.domain, u[j])
        density[j] += np.sum(np.abs(grad) ** 2, axis=0)

    results, skipped = _height_integrals(density, heights, family, params.lam)
    if not results:
        raise NumericalError("every ball was skipped: too few heights below the family radii")
    best, best_ball, _, table = _sup_over_heights(results, family)

    sup_first = float(density[0].max())
    collar = 0.0
    for radius, _ in results:
        volume = field.domain.cell_volume * float(np.diff(membership(family, radius).indptr).max())
        collar = max(collar, radius ** (-params.lam) * heights[0] ** 2 * sup_first * volume)
    if skipped:
        logger.warning(f"Carleson functional skipped {skipped} balls with fewer than {MIN_HEIGHTS_PER_BALL} heights")
    return CarlesonValue(best, best_ball, table, skipped, collar)


def square_function_norm(engine: OperatorEngine, f: GridFunction, params: NormParams, family: BallFamily,
                         heights: HeightGrid) -> NormValue:
    """max over balls of r^{-lambda} int_{t_min}^{r} int_B |t d/dt e^{-t sqrt(L)} f|^2 dx dt/t (squared units)."""
    params.check_dimension(f.domain.dim)
    heights.check_domain(engine.domain)
    t = heights.as_array()
    root = lambda mu: np.sqrt(np.maximum(mu, 0.0))
    u_t = multiplier_stack(engine, f, lambda s, mu: -root(mu) * np.exp(-s * root(mu)), heights.heights)
    results, skipped = _height_integrals(np.abs(u_t) ** 2, t, family, params.lam)
    if not results:
        raise NumericalError("every ball was skipped: too few heights below the family radii")
    best, best_ball, profile, _ = _sup_over_heights(results, family)
    return NormValue(best, best_ball, profile)


def check_extension_consistency(field: SolutionField, engine: OperatorEngine) -> float:
    """max_k sup|P_{t_k - t_0} u(., t_0) - u(., t_k)|, relative to max(1, sup|u|)."""
    base = field.slice(0)
    t0 = field.heights.heights[0]
    worst = 0.0
    for k in range(1, field.heights.count):
        moved = poisson_apply(engine, field.heights.heights[k] - t0, base)
        worst = max(worst, float(np.max(np.abs(moved.values - field.slices[k]))))
    return worst / max(1.0, field.sup())


@dataclass
class TraceRecovery:
    """Slices f_k = u(., 1/k) over the k schedule; ``f`` is the last of them.

    ``limit`` extrapolates the slices in s = 1/k to s = 0. ``boundary`` is the
    undone step e^{sqrt(L)/K} f_K when its amplification stayed under the cap.
    """

    ks: List[int]
    slices: List[GridFunction]
    limit: GridFunction
    fk_norms: List[float]
    cauchy_increments: List[float]
    reconstruction_errors: List[float]
    semigroup_defects: List[float]
    flagged: bool
    boundary: Optional[GridFunction] = None

    @property
    def f(self) -> GridFunction:
        return self.slices[-1]

    @property
    def reconstruction_error(self) -> float:
        return self.reconstruction_errors[-1]

    @property
    def boundary_step_undone(self) -> bool:
        return self.boundary is not None

    @property
    def norm_spread(self) -> float:
        positive = [v for v in self.fk_norms if v > 0]
        if not positive:
            return 0.0
        return max(positive) / min(positive) - 1.0

    def trace_errors(self, g: GridFunction, collar: float = 0.5) -> List[float]:
        """sup over the inner box of |f_k - g| for every k."""
        inner = g.domain.inner_mask(collar)
        return [float(np.max(np.abs(fk.values - g.values)[inner])) for fk in self.slices]

    def to_record(self) -> Dict:
        return {
            'ks': self.ks,
            'fk_norms': self.fk_norms,
            'cauchy_increments': self.cauchy_increments,
            'reconstruction_errors': self.reconstruction_errors,
            'semigroup_defects': self.semigroup_defects,
            'flagged': self.flagged,
            'norm_spread': self.norm_spread,
            'boundary_step_undone': self.boundary_step_undone,
        }


def _extrapolate_to_zero(ks: Sequence[int], slices: Sequence[GridFunction]) -> GridFunction:
    if len(slices) == 1:
        return slices[0]
    s = 1.0 / np.asarray(ks, dtype=float)
    values = BarycentricInterpolator(s, np.stack([fk.values for fk in slices]), axis=0)(0.0)
    return GridFunction(slices[0].domain, np.asarray(values))


def _semigroup_defect(field: SolutionField, engine: OperatorEngine, t0: float, inner: np.ndarray) -> float:
    """sup over heights t > t0 of |u(., t) - P_{t - t0} u(., t0)| on the inner box, from the first node >= t0."""
    heights = field.heights.as_array()
    base = int(np.flatnonzero(heights >= t0 * (1 - 1e-9))[0])
    later = heights[base + 1:]
    if later.size == 0:
        return 0.0
    moved = multiplier_stack(engine, field.slice(base), _poisson_kernel, later - heights[base])
    return float(np.max(np.abs(moved - field.slices[base + 1:])[:, inner]))


def trace_recover(field: SolutionField, engine: OperatorEngine, params: NormParams, k_schedule: Sequence[int],
                  family: BallFamily, collar: float = 0.5, tol: float = 1e-6,
                  amplification_cap: float = 1e6) -> TraceRecovery:
    """Boundary function of ``field`` from the slices f_k = u(., 1/k).

    For each k, the reconstruction error is max_j sup |u(., t_j) - P_{t_j} f_k| and
    the semigroup defect compares u(., t) with P_{t - t_k} u(., t_k), t_k the first
    height node at or above 1/k. A Poisson extension has zero defect at every k,
    so the field is flagged only when the defect stays above ``tol * sup|u|`` over
    the whole schedule. Comparisons use the inner box max_a |x_a| <= collar * R.
    """
    ks = [int(k) for k in k_schedule]
    if not ks or any(b <= a for a, b in zip(ks, ks[1:])) or ks[0] <= 0:
        raise NumericalError("k_schedule must hold increasing positive integers")
    if field.domain != engine.domain:
        raise NumericalError("field and engine live on different domains")
    inner = field.domain.inner_mask(collar)

    norm_params = NormParams(2.0, params.lam, params.m)
    slices = [field.slice_at(1.0 / k) for k in ks]
    norms = [morrey_norm(fk, norm_params, family).value for fk in slices]
    increments = [float(np.max(np.abs(b.values - a.values)[inner])) for a, b in zip(slices, slices[1:])]
    growing = len(norms) > 1 and all(b >= a for a, b in zip(norms, norms[1:]))
    if growing and norms[0] > 0 and norms[-1] > 2.0 * norms[0]:
        raise TraceBoundError(f"no uniform trace bound: Morrey norms of f_k grow from {norms[0]:.4g} to {norms[-1]:.4g}")

    heights = field.heights.heights
    errors = []
    for fk in slices:
        rebuilt = multiplier_stack(engine, fk, _poisson_kernel, heights)
        errors.append(float(np.max(np.abs(rebuilt - field.slices)[:, inner])))
    defects = [_semigroup_defect(field, engine, 1.0 / k, inner) for k in ks]
    flagged = min(defects) > tol * max(field.sup(), np.finfo(float).tiny)

    K = ks[-1]
    mu_max = float(np.max(engine.eigenvalues))
    boundary = None
    if math.sqrt(max(mu_max, 0.0)) / K <= math.log(amplification_cap):
        boundary = apply_multiplier(engine, slices[-1], lambda mu: np.exp(np.sqrt(np.maximum(mu, 0.0)) / K))
    else:
        logger.info(f"Amplification e^(sqrt(mu_max)/{K}) exceeds {amplification_cap:g}; last step not undone")

    logger.info(f"Trace recovery over k = {ks}: reconstruction errors {[f'{e:.3e}' for e in errors]}, "
                f"smallest defect {min(defects):.3e}, flagged={flagged}")
    return TraceRecovery(ks, slices, _extrapolate_to_zero(ks, slices), norms, increments,
                         errors, defects, flagged, boundary)
