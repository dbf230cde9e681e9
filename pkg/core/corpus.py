"""Deterministic test functions for the experiment suites.

A corpus spec is a list of entries ``name`` or ``name:K``:

    constants          1 and -2.5
    modes:K            cos(pi k x_a / R), k = 1..K
    trig:K             random band-limited trigonometric polynomials
    bumps:K            translated Gaussian bumps
    indicators:K       indicators of random cubes
    morrey_singular    |x - c|^{-(n - lambda)/p} at three placements
    random_smooth:K    Gaussian-filtered white noise
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np
from scipy import ndimage

from core.errors import ConfigurationError
from core.grid import GridDomain, GridFunction, sample

logger = logging.getLogger(__name__)

TRIG_BAND = 8
SINGULAR_PLACEMENTS = (0.0, 0.25, -0.375)


@dataclass(frozen=True)
class CorpusItem:
    name: str
    f: GridFunction


@dataclass(frozen=True)
class CorpusContext:
    domain: GridDomain
    rng: np.random.Generator
    lam: float
    p: float


def _constants(ctx: CorpusContext, count: int) -> List[Tuple[str, GridFunction]]:
    return [('constant_1', GridFunction.constant(ctx.domain, 1.0)),
            ('constant_-2.5', GridFunction.constant(ctx.domain, -2.5))]


def _modes(ctx: CorpusContext, count: int):
    R = ctx.domain.half_width
    out = []
    for k in range(1, count + 1):
        axis = (k - 1) % ctx.domain.dim
        out.append((f'mode_{k}', sample(ctx.domain, lambda x, k=k, a=axis: np.cos(np.pi * k * x[a] / R))))
    return out


def _trig(ctx: CorpusContext, count: int):
    R = ctx.domain.half_width
    dim = ctx.domain.dim
    out = []
    for i in range(count):
        frequencies = ctx.rng.integers(-TRIG_BAND, TRIG_BAND + 1, size=(TRIG_BAND, dim))
        amplitudes = ctx.rng.normal(size=(TRIG_BAND, 2)) / (1.0 + np.abs(frequencies).sum(axis=1))[:, None]

        def expr(x, frequencies=frequencies, amplitudes=amplitudes):
            total = np.zeros(x.shape[1:])
            for k, (a, b) in zip(frequencies, amplitudes):
                phase = sum(np.pi * k[j] * x[j] / R for j in range(dim))
                total = total + a * np.cos(phase) + b * np.sin(phase)
            return total

        out.append((f'trig_{i}', sample(ctx.domain, expr)))
    return out


def _bumps(ctx: CorpusContext, count: int):
    R = ctx.domain.half_width
    out = []
    for i in range(count):
        center = ctx.rng.uniform(-R / 2, R / 2, size=ctx.domain.dim)
        width = ctx.rng.uniform(R / 32, R / 8)
        expr = lambda x, c=center, w=width: np.exp(-sum((x[j] - c[j]) ** 2 for j in range(len(c))) / (2 * w * w))
        out.append((f'bump_{i}', sample(ctx.domain, expr)))
    return out


def _indicators(ctx: CorpusContext, count: int):
    R = ctx.domain.half_width
    out = []
    for i in range(count):
        center = ctx.rng.uniform(-R / 2, R / 2, size=ctx.domain.dim)
        half = ctx.rng.uniform(R / 16, R / 4)
        expr = lambda x, c=center, a=half: np.all(np.stack([np.abs(x[j] - c[j]) <= a for j in range(len(c))]), axis=0).astype(float)
        out.append((f'indicator_{i}', sample(ctx.domain, expr)))
    return out


def morrey_singular(domain: GridDomain, lam: float, p: float, placement: float = 0.0) -> GridFunction:
    """|x - c|^{-(n - lambda)/p} with c the node nearest placement * R on the diagonal."""
    gamma = (domain.dim - lam) / p
    center = np.array(domain.point_at(domain.snap([placement * domain.half_width] * domain.dim)))
    expr = lambda x: np.sqrt(sum((x[j] - center[j]) ** 2 for j in range(domain.dim))) ** (-gamma)
    return sample(domain, expr, regularize=True)


def _morrey_singular(ctx: CorpusContext, count: int):
    return [(f'morrey_singular_{placement:g}', morrey_singular(ctx.domain, ctx.lam, ctx.p, placement))
            for placement in SINGULAR_PLACEMENTS]


def _random_smooth(ctx: CorpusContext, count: int):
    mode = 'wrap' if ctx.domain.is_periodic else 'constant'
    sigma = max(1.0, ctx.domain.points_per_axis / 32)
    out = []
    for i in range(count):
        noise = ctx.rng.normal(size=ctx.domain.shape)
        smooth = ndimage.gaussian_filter(noise, sigma=sigma, mode=mode)
        out.append((f'random_smooth_{i}', GridFunction(ctx.domain, smooth / np.max(np.abs(smooth)))))
    return out


GENERATORS: Dict[str, Callable[[CorpusContext, int], List[Tuple[str, GridFunction]]]] = {
    'constants': _constants,
    'modes': _modes,
    'trig': _trig,
    'bumps': _bumps,
    'indicators': _indicators,
    'morrey_singular': _morrey_singular,
    'random_smooth': _random_smooth,
}


def parse_entry(entry: str) -> Tuple[str, int]:
    name, _, count = entry.strip().partition(':')
    if name not in GENERATORS:
        raise ConfigurationError(f"unknown corpus generator '{name}'")
    if not count:
        return name, 1
    try:
        k = int(count)
    except ValueError:
        raise ConfigurationError(f"corpus entry '{entry}' has a non-integer count")
    if k < 1:
        raise ConfigurationError(f"corpus entry '{entry}' needs a positive count")
    return name, k


def generate_corpus(spec: Sequence[str], domain: GridDomain, seed: int = 0,
                    lam: float = 0.5, p: float = 2.0) -> List[CorpusItem]:
    """Named test functions; identical (spec, domain, seed) give identical samples."""
    if not spec:
        raise ConfigurationError("corpus spec is empty")
    entries = [parse_entry(entry) for entry in spec]
    corpus = []
    for index, (name, count) in enumerate(entries):
        ctx = CorpusContext(domain, np.random.default_rng([seed, index]), lam, p)
        corpus.extend(CorpusItem(label, f) for label, f in GENERATORS[name](ctx, count))
    logger.info(f"Generated corpus of {len(corpus)} functions from {list(spec)} (seed {seed})")
    return corpus
