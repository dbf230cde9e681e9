"""Morrey norm, classical and semigroup Campanato seminorms, growth-weighted norm.

Every functional takes the maximum of r^{-lambda} * integral over the balls of a
``BallFamily`` and returns a ``NormValue`` with the per-radius profile, so the
effect of capping radii at R stays visible.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from core.errors import EngineError, NumericalError
from core.grid import Ball, BallFamily, GridFunction, abs_pow, family_lp_integrals, family_oscillation_integrals
from core.spectral import OperatorEngine, semigroup

logger = logging.getLogger(__name__)

LAMBDA_MARGIN = 1e-12


@dataclass(frozen=True)
class NormParams:
    p: float
    lam: float
    m: float = 2.0

    def __post_init__(self):
        if not self.p >= 1:
            raise NumericalError(f"p must be >= 1, got {self.p}")
        if not self.m > 0:
            raise NumericalError(f"m must be positive, got {self.m}")
        if not self.lam > 0:
            raise NumericalError(f"lambda must be positive, got {self.lam}")

    def check_dimension(self, dim: int):
        if self.lam >= dim * (1 - LAMBDA_MARGIN):
            raise NumericalError(f"lambda = {self.lam} must lie strictly inside (0, {dim})")

    def expected_slope(self, dim: int) -> float:
        """(lambda - n) / (p m), the decay rate of the semigroup on Morrey data."""
        return (self.lam - dim) / (self.p * self.m)


@dataclass
class NormValue:
    value: float
    argmax_ball: Optional[Ball]
    per_radius_profile: Dict[float, float]

    def to_record(self, norm: str, params: NormParams) -> Dict:
        return {
            'norm': norm,
            'value': self.value,
            'p': params.p,
            'lambda': params.lam,
            'argmax_center': list(self.argmax_ball.center) if self.argmax_ball else None,
            'argmax_radius': self.argmax_ball.radius if self.argmax_ball else None,
            'profile': [[r, v] for r, v in sorted(self.per_radius_profile.items())],
        }


def _sup_over_family(family: BallFamily, params: NormParams,
                     integrals_at: Callable[[float], np.ndarray]) -> NormValue:
    params.check_dimension(family.domain.dim)
    centers = family.centers()
    best, best_ball = -1.0, None
    profile = {}
    for radius in family.radii:
        scaled = radius ** (-params.lam) * integrals_at(radius)
        k = int(np.argmax(scaled))
        # profile entries already carry the 1/p power so value = max(profile)
        profile[radius] = float(scaled[k]) ** (1.0 / params.p)
        if scaled[k] > best:
            best = float(scaled[k])
            best_ball = Ball(tuple(float(c) for c in centers[k]), radius)
    return NormValue(max(best, 0.0) ** (1.0 / params.p), best_ball, profile)


def morrey_norm(f: GridFunction, params: NormParams, family: BallFamily) -> NormValue:
    """(max over balls of r^{-lambda} int_B |f|^p)^{1/p}."""
    _check_family(f, family)
    powered = f.abs_pow(params.p)
    return _sup_over_family(family, params, lambda r: family_lp_integrals(powered, family, r))


def campanato_classical(f: GridFunction, params: NormParams, family: BallFamily) -> NormValue:
    """Oscillation around the ball mean f_B."""
    _check_family(f, family)
    return _sup_over_family(family, params, lambda r: family_oscillation_integrals(f, family, r, params.p))


def campanato_operator(f: GridFunction, engine: OperatorEngine, params: NormParams,
                       family: BallFamily) -> NormValue:
    """Oscillation around the semigroup average e^{-r^m L} f (or e^{-r sqrt(L)} f)."""
    _check_family(f, family)
    if f.domain != engine.domain:
        raise EngineError("function and engine live on different domains")
    if params.m != engine.spec.order_m:
        raise NumericalError(f"norm order m = {params.m} does not match the engine order {engine.spec.order_m}")

    def integrals(radius: float) -> np.ndarray:
        smoothed = semigroup(engine, radius ** params.m, f)
        return family_lp_integrals(abs_pow(f.values - smoothed.values, params.p), family, radius)

    return _sup_over_family(family, params, integrals)


def mtype_norm(f: GridFunction, p: float, beta: float) -> float:
    """(int |f|^p / (1 + |x|)^{n + beta} dx)^{1/p} over the grid."""
    if not beta > 0:
        raise NumericalError(f"beta must be positive, got {beta}")
    if not p >= 1:
        raise NumericalError(f"p must be >= 1, got {p}")
    domain = f.domain
    weight = (1.0 + domain.radius()) ** (-(domain.dim + beta))
    return float(domain.cell_volume * np.sum(f.abs_pow(p) * weight)) ** (1.0 / p)


def is_degenerate(value: float, f: GridFunction) -> bool:
    """Normalizers this small mean f is (numerically) a fixed point."""
    return value <= 1e-12 * (1.0 + f.sup())


def _check_family(f: GridFunction, family: BallFamily):
    if family.domain != f.domain:
        raise NumericalError("ball family and function live on different domains")


def norm_table(f: GridFunction, engine: OperatorEngine, params: NormParams,
               family: BallFamily, betas: Tuple[float, ...] = ()) -> Dict[str, float]:
    """Every functional of f at once, keyed by name (used by the norm subcommand)."""
    row = {
        'morrey': morrey_norm(f, params, family).value,
        'campanato_classical': campanato_classical(f, params, family).value,
        'campanato_operator': campanato_operator(f, engine, params, family).value,
    }
    for beta in betas:
        row[f'mtype_beta_{beta:g}'] = mtype_norm(f, params.p, beta)
    return row


def profile_rows(value: NormValue) -> List[Tuple[float, float]]:
    return sorted(value.per_radius_profile.items())
