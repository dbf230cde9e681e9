"""Builtin potentials V >= 0 and reverse-Hölder (B_q) certification over ball families."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional

import numpy as np

from core.errors import PotentialError
from core.grid import Ball, BallFamily, GridDomain, GridFunction, abs_pow, membership, sample

logger = logging.getLogger(__name__)

STABILITY_WINDOW = 2
STABILITY_SPREAD = 0.10


class PotentialKind(str, Enum):
    CONSTANT = "constant"
    POWER_LAW = "power_law"
    BUMP = "bump"
    INDICATOR = "indicator"
    CUSTOM = "custom"


@dataclass(frozen=True)
class PotentialSpec:
    """V by kind.

    constant: ``value``; power_law: ``value * |x|^exponent``; bump:
    ``value * exp(-|x|^2 / width^2)``; indicator: ``value * 1{x_1 >= 0}``
    (a half-space); custom: ``expr`` evaluated on the coordinate array.
    """

    kind: PotentialKind = PotentialKind.CONSTANT
    value: float = 1.0
    exponent: float = 2.0
    width: float = 1.0
    expr: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        object.__setattr__(self, 'kind', PotentialKind(self.kind))
        if not self.value > 0:
            raise PotentialError(f"potential scale must be positive, got {self.value}")
        if self.kind is PotentialKind.CUSTOM and self.expr is None:
            raise PotentialError("a custom potential needs an expression")
        if self.kind is PotentialKind.BUMP and not self.width > 0:
            raise PotentialError(f"bump width must be positive, got {self.width}")

    def expression(self) -> Callable[[np.ndarray], np.ndarray]:
        kind, c = self.kind, self.value
        if kind is PotentialKind.CONSTANT:
            return lambda x: np.full(x.shape[1:], c)
        if kind is PotentialKind.POWER_LAW:
            a = self.exponent
            return lambda x: c * np.sqrt(np.sum(x ** 2, axis=0)) ** a
        if kind is PotentialKind.BUMP:
            w = self.width
            return lambda x: c * np.exp(-np.sum(x ** 2, axis=0) / w ** 2)
        if kind is PotentialKind.INDICATOR:
            return lambda x: c * (x[0] >= 0).astype(float)
        return self.expr

    def to_record(self) -> Dict:
        record = {'kind': self.kind.value, 'value': self.value}
        if self.kind is PotentialKind.POWER_LAW:
            record['exponent'] = self.exponent
        if self.kind is PotentialKind.BUMP:
            record['width'] = self.width
        return record


def sample_potential(spec: PotentialSpec, domain: GridDomain) -> GridFunction:
    """Samples of V, singular power laws regularised by cell averages."""
    V = sample(domain, spec.expression(), regularize=True)
    if V.is_complex:
        raise PotentialError("potential must be real valued")
    if V.values.min() < 0:
        raise PotentialError(f"potential is negative at {domain.point_at(np.unravel_index(np.argmin(V.values), domain.shape))}")
    if not np.any(V.values > 0):
        raise PotentialError("potential vanishes identically on the grid")
    return V


@dataclass
class ReverseHolderResult:
    constant: float
    argmax_ball: Ball
    skipped_balls: int
    evaluated_balls: int


def reverse_holder_constant(V: GridFunction, q: float, family: BallFamily) -> ReverseHolderResult:
    """max over balls of (avg_B V^q)^{1/q} / avg_B V, skipping balls where avg_B V = 0."""
    if not q > 1:
        raise PotentialError(f"q must exceed 1, got {q}")
    if family.domain != V.domain:
        raise PotentialError("ball family and potential live on different domains")
    values = np.ravel(V.values)
    powered = abs_pow(values, q)
    centers = family.centers()
    best, best_ball = -np.inf, None
    skipped = evaluated = 0
    for radius in family.radii:
        m = membership(family, radius)
        counts = np.diff(m.indptr)
        mean_v = (m @ values) / counts
        mean_vq = (m @ powered) / counts
        live = mean_v > 0
        skipped += int((~live).sum())
        evaluated += int(live.sum())
        if not live.any():
            continue
        ratios = np.full(len(mean_v), -np.inf)
        ratios[live] = mean_vq[live] ** (1.0 / q) / mean_v[live]
        k = int(np.argmax(ratios))
        if ratios[k] > best:
            best = float(ratios[k])
            best_ball = Ball(tuple(float(c) for c in centers[k]), radius)
    if best_ball is None:
        raise PotentialError("potential vanishes on every ball of the family")
    if skipped:
        logger.warning(f"Skipped {skipped} balls where the potential vanishes")
    return ReverseHolderResult(best, best_ball, skipped, evaluated)


@dataclass
class BqCertificate:
    q: float
    constant: float
    levels: List[float] = field(default_factory=list)
    skipped_balls: int = 0
    hypothesis_met: Dict[str, bool] = field(default_factory=dict)
    certified: bool = False

    @property
    def verdict(self) -> str:
        if self.certified:
            return "certified"
        return "inconclusive" if len(self.levels) < STABILITY_WINDOW else "diverging"

    def to_record(self) -> Dict:
        return {
            'q': self.q,
            'constant': self.constant,
            'levels': self.levels,
            'skipped_balls': self.skipped_balls,
            'hypothesis_met': self.hypothesis_met,
            'verdict': self.verdict,
        }


def is_stable(levels: List[float]) -> bool:
    """The last STABILITY_WINDOW constants agree within STABILITY_SPREAD of the smallest."""
    if len(levels) < STABILITY_WINDOW:
        return False
    window = levels[-STABILITY_WINDOW:]
    return (max(window) - min(window)) / min(window) <= STABILITY_SPREAD


def certify_bq(spec: PotentialSpec, q: float, family: BallFamily, budget: int = 5) -> BqCertificate:
    """Reverse-Hölder constants over ``budget`` refinement levels.

    Level l samples V on the grid refined 2^l times and uses the same index
    stride (so the physical center spacing halves) with radii down to 2h.
    Certified when the last two levels agree within 10%; a single level is
    inconclusive.
    """
    if budget < 1:
        raise PotentialError(f"certification needs a budget of at least one level, got {budget}")
    n = family.domain.dim
    certificate = BqCertificate(q, float('nan'), hypothesis_met={'q_ge_half_n': q >= n / 2.0, 'q_ge_n': q >= n})
    for level in range(budget):
        if level == 0:
            level_family = family
        else:
            level_family = family.on_domain(family.domain.refined(2 ** level))
        V = sample_potential(spec, level_family.domain)
        result = reverse_holder_constant(V, q, level_family)
        certificate.levels.append(result.constant)
        certificate.skipped_balls += result.skipped_balls
        certificate.constant = result.constant
        logger.info(f"B_{q:g} level {level}: N = {level_family.domain.points_per_axis}, constant {result.constant:.6g}")
        if is_stable(certificate.levels):
            certificate.certified = True
            break
    if certificate.verdict == "inconclusive":
        logger.warning(f"B_{q:g} verdict needs at least {STABILITY_WINDOW} levels, budget was {budget}")
    elif not certificate.certified:
        logger.warning(f"B_{q:g} constant still moving after {budget} levels: {certificate.levels}")
    return certificate
