"""Long-time limits of the semigroup and the decay checks that back the norm equivalence.

Time arguments are always in the units of the engine's own generator: t for
e^{-tL}, t for e^{-t sqrt(L)} on a sqrt(L)-calculus engine.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.errors import DegenerateNormalizerError, InsufficientDynamicRangeError, NumericalError
from core.grid import BallFamily, GridFunction, abs_pow
from core.norms import NormParams, campanato_operator, is_degenerate
from core.spectral import OperatorEngine, multiplier_stack, semigroup_stack, spectral_gap

logger = logging.getLogger(__name__)

ROUNDOFF_FLOOR = 1e3 * np.finfo(float).eps
MIN_FIT_POINTS = 4


def _sups(stack: np.ndarray) -> np.ndarray:
    return np.max(np.abs(stack.reshape(stack.shape[0], -1)), axis=1)


@dataclass
class LimitDiagnostics:
    t_schedule: List[float]
    sup_deviations: List[float]
    converged: bool
    limit: GridFunction
    offending_pair: Optional[Tuple[float, float]] = None

    @property
    def limit_sup(self) -> float:
        return self.limit.sup()

    def to_record(self) -> Dict:
        return {
            't_schedule': self.t_schedule,
            'sup_deviations': self.sup_deviations,
            'converged': self.converged,
            'limit_sup': self.limit_sup,
            'offending_pair': list(self.offending_pair) if self.offending_pair else None,
        }


def default_limit_schedule(engine: OperatorEngine, tol: float = 1e-8, ratio: float = 2.0) -> List[float]:
    """Geometric times from 1/gap until the last increment starts past max((R/2)^m, (ln(1/tol) + 5)/gap)."""
    gap = spectral_gap(engine)
    m = engine.spec.order_m
    end = max((engine.domain.half_width / 2.0) ** m, (math.log(1.0 / tol) + 5.0) / gap)
    times = [1.0 / gap]
    while len(times) < 2 or times[-2] < end:
        times.append(times[-1] * ratio)
    return times


def sigma_limit(engine: OperatorEngine, f: GridFunction, t_schedule: Optional[Sequence[float]] = None,
                tol: float = 1e-8) -> LimitDiagnostics:
    """sigma_L(f) as the semigroup at the last scheduled time, with a Cauchy-type convergence flag."""
    if t_schedule is None:
        t_schedule = default_limit_schedule(engine, tol)
    times = [float(t) for t in t_schedule]
    if len(times) < 2 or any(b <= a for a, b in zip(times, times[1:])):
        raise NumericalError("limit schedule must hold at least two increasing times")
    floor = (engine.domain.half_width / 2.0) ** engine.spec.order_m
    if times[-1] < floor * (1 - 1e-12):
        raise NumericalError(f"final time {times[-1]:.4g} is below (R/2)^m = {floor:.4g}")

    stack = semigroup_stack(engine, f, times)
    deviations = [float(d) for d in _sups(stack[1:] - stack[:-1])]
    allowance = ROUNDOFF_FLOOR * max(1.0, f.sup())
    offending = None
    for j in range(1, len(deviations)):
        if deviations[j] > deviations[j - 1] + allowance:
            offending = (times[j], times[j + 1])
            break
    converged = offending is None and deviations[-1] <= tol
    if offending:
        logger.warning(f"Semigroup deviations grow between t={offending[0]:.4g} and t={offending[1]:.4g}")
    return LimitDiagnostics(times, deviations, converged, f.with_values(stack[-1]), offending)


@dataclass(frozen=True)
class MembershipResult:
    member: bool
    max_deviation: float


def kernel_membership(engine: OperatorEngine, f: GridFunction, t_list: Sequence[float],
                      tol: float = 1e-8) -> MembershipResult:
    """Is f fixed by the semigroup at every t in ``t_list`` (up to tol * (1 + sup|f|))?"""
    times = [float(t) for t in t_list]
    if min(times) <= 0 or max(times) / min(times) < 100.0 * (1 - 1e-12):
        raise NumericalError("membership times must be positive and span two decades")
    stack = semigroup_stack(engine, f, times)
    deviation = float(np.max(_sups(stack - f.values[None])))
    return MembershipResult(deviation <= tol * (1.0 + f.sup()), deviation)


@dataclass
class PowerLawFit:
    slope: float
    intercept: float
    r_squared: float
    points: int
    power_law: bool
    expected_slope: Optional[float] = None
    times: List[float] = field(default_factory=list)
    values: List[float] = field(default_factory=list)

    @property
    def relative_slope_error(self) -> float:
        if not self.expected_slope:
            return float('nan')
        return abs(self.slope - self.expected_slope) / abs(self.expected_slope)

    def to_record(self) -> Dict:
        return {
            'slope': self.slope,
            'intercept': self.intercept,
            'r_squared': self.r_squared,
            'points': self.points,
            'power_law': self.power_law,
            'expected_slope': self.expected_slope,
        }


def resolved_times(engine: OperatorEngine, count: int = 24, K: float = 1.0) -> np.ndarray:
    """Geometric grid on [(4h)^m, (R/4)^m / K]; K keeps K*t inside the resolved range."""
    m = engine.spec.order_m
    lower = (4.0 * engine.domain.spacing) ** m
    upper = (engine.domain.half_width / 4.0) ** m / K
    if upper <= lower:
        raise InsufficientDynamicRangeError(f"resolved time range [{lower:.4g}, {upper:.4g}] is empty")
    return np.geomspace(lower, upper, count)


def _check_window(engine: OperatorEngine, times: np.ndarray, K: float = 1.0):
    m = engine.spec.order_m
    lower = (4.0 * engine.domain.spacing) ** m
    upper = (engine.domain.half_width / 4.0) ** m
    if times.min() < lower * (1 - 1e-9) or K * times.max() > upper * (1 + 1e-9):
        raise NumericalError(f"fit times leave the resolved range [{lower:.4g}, {upper:.4g}]")
    if times.max() / times.min() < 1e3:
        logger.warning(f"Fit window spans only {math.log10(times.max() / times.min()):.2f} decades")


def fit_power_law(times: Sequence[float], values: Sequence[float], floor: float,
                  expected_slope: Optional[float] = None) -> PowerLawFit:
    """Least-squares log-log line through the points above ``floor``.

    ``power_law`` is set when the log-log line fits at least as well as a
    semi-log (exponential) line through the same points.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    usable = v > floor
    if usable.sum() < MIN_FIT_POINTS:
        raise InsufficientDynamicRangeError(
            f"insufficient dynamic range: {int(usable.sum())} of {len(v)} points exceed the roundoff floor {floor:.3e}")
    t, v = t[usable], v[usable]
    log_t, log_v = np.log(t), np.log(v)

    (slope, intercept), residual, *_ = np.polyfit(log_t, log_v, 1, full=True)
    semilog, semilog_residual, *_ = np.polyfit(t, log_v, 1, full=True)
    loglog_ss = float(residual[0]) if len(residual) else 0.0
    semilog_ss = float(semilog_residual[0]) if len(semilog_residual) else 0.0
    total = float(np.sum((log_v - log_v.mean()) ** 2))
    r_squared = 1.0 - loglog_ss / total if total > 0 else 1.0
    return PowerLawFit(float(slope), float(intercept), r_squared, int(usable.sum()),
                       loglog_ss <= semilog_ss, expected_slope, t.tolist(), v.tolist())


def check_semigroup_gap_decay(engine: OperatorEngine, f: GridFunction, params: NormParams,
                              K: float = 2.0, t_grid: Optional[Sequence[float]] = None) -> PowerLawFit:
    """Slope of log sup|S_t f - S_{Kt} f| against log t."""
    if not K > 1:
        raise NumericalError(f"K must exceed 1, got {K}")
    times = np.asarray(t_grid, dtype=float) if t_grid is not None else resolved_times(engine, K=K)
    _check_window(engine, times, K)
    stack = semigroup_stack(engine, f, np.concatenate([times, K * times]))
    deviations = _sups(stack[:len(times)] - stack[len(times):])
    fit = fit_power_law(times, deviations, ROUNDOFF_FLOOR * max(1.0, f.sup()),
                        params.expected_slope(f.domain.dim))
    logger.info(f"Gap decay K={K:g}: slope {fit.slope:.4f} (expected {fit.expected_slope:.4f}) over {fit.points} points")
    return fit


def gap_decay_spread(engine: OperatorEngine, f: GridFunction, params: NormParams,
                     ks: Sequence[float] = (2.0, 4.0, 16.0)) -> Tuple[Dict[float, PowerLawFit], float]:
    """Fits for several K and their spread (max slope - min slope) / |expected slope|."""
    fits = {float(K): check_semigroup_gap_decay(engine, f, params, K) for K in ks}
    slopes = [fit.slope for fit in fits.values()]
    expected = abs(params.expected_slope(f.domain.dim))
    return fits, (max(slopes) - min(slopes)) / expected


def check_linfty_bound(engine: OperatorEngine, f: GridFunction, params: NormParams,
                       t_grid: Optional[Sequence[float]] = None) -> PowerLawFit:
    """Slope of log sup|S_t f| against log t over the resolved range."""
    times = np.asarray(t_grid, dtype=float) if t_grid is not None else resolved_times(engine)
    _check_window(engine, times)
    sups = _sups(semigroup_stack(engine, f, times))
    fit = fit_power_law(times, sups, ROUNDOFF_FLOOR * max(1.0, f.sup()), params.expected_slope(f.domain.dim))
    if not fit.power_law:
        logger.info("Sup-norm decay is closer to exponential than to a power law")
    return fit


def check_weighted_difference(engine: OperatorEngine, f: GridFunction, params: NormParams, t: float,
                              delta: float, family: BallFamily) -> float:
    """int |S_t f - f|^p / (t^{1/m} + |x|)^{n+delta} divided by t^{-(n-lambda+delta)/m} ||f||^p."""
    if not delta > 0:
        raise NumericalError(f"delta must be positive, got {delta}")
    domain = f.domain
    n, m = domain.dim, params.m
    normalizer = campanato_operator(f, engine, params, family).value
    if is_degenerate(normalizer, f):
        raise DegenerateNormalizerError(f"degenerate normalizer: semigroup Campanato value {normalizer:.3e} (f is a fixed point)")
    difference = semigroup_stack(engine, f, [t])[0] - f.values
    weight = (t ** (1.0 / m) + domain.radius()) ** (-(n + delta))
    lhs = domain.cell_volume * float(np.sum(abs_pow(difference, params.p) * weight))
    return lhs / (t ** (-(n - params.lam + delta) / m) * normalizer ** params.p)


def check_heat_decay_bound(engine: OperatorEngine, f: GridFunction, t_grid: Sequence[float]) -> float:
    """max over t of sup|e^{-tL} f| - (e^{-t min V} sup|f| + 1e-8); nonpositive when the bound holds."""
    times = [float(t) for t in t_grid]
    sups = _sups(multiplier_stack(engine, f, lambda t, mu: np.exp(-t * mu), times))
    floor = engine.potential_floor
    bounds = np.array([math.exp(-t * floor) * f.sup() + 1e-8 for t in times])
    return float(np.max(sups - bounds))
