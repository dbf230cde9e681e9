"""Experiment configuration: TOML files with dotted sections, validated into frozen dataclasses.

    experiment.kind = "equivalence"
    experiment.seed = 7
    domain.dim = 1
    domain.half_width = 8.0
    domain.points_per_axis = 256
    domain.boundary = "periodic"
    operator.kind = "schrodinger"
    potential.kind = "constant"
    norm.p = [2.0]
    norm.lam = [0.5]
    corpus.generators = ["constants", "modes:3", "morrey_singular"]

Suite-specific knobs live under ``suite.*`` and pass-criteria under ``tolerances.*``.
"""

import hashlib
import json
import logging
import tomllib
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from core.errors import CampanatoError, ConfigurationError
from core.grid import BallFamily, GridDomain, GridFunction
from core.norms import NormParams
from core.potentials import PotentialSpec, sample_potential
from core.spectral import Calculus, OperatorEngine, OperatorKind, OperatorSpec, Route, build_engine

logger = logging.getLogger(__name__)


class ExperimentKind(str, Enum):
    EQUIVALENCE = "equivalence"
    KERNEL_TRIVIALITY = "kernel_triviality"
    DIRICHLET_FORWARD = "dirichlet_forward"
    TRACE_INVERSE = "trace_inverse"
    KERNEL_BOUNDS = "kernel_bounds"
    LEMMA_CHECKS = "lemma_checks"
    RH_CERTIFY = "rh_certify"


@dataclass(frozen=True)
class OperatorConfig:
    kind: OperatorKind = OperatorKind.LAPLACIAN
    order_m: float = 2.0
    route: Route = Route.AUTO
    epsilon_list: Tuple[float, ...] = (1.0,)
    theta_policy: Tuple[float, ...] = (1.0,)


@dataclass(frozen=True)
class FamilyConfig:
    stride: Optional[int] = None
    ratio: float = 2.0 ** -0.5
    refine: int = 0


@dataclass(frozen=True)
class HeightConfig:
    t_min: Optional[float] = None
    t_max: Optional[float] = None
    count: int = 200


@dataclass(frozen=True)
class ExperimentConfig:
    kind: ExperimentKind
    domain: GridDomain
    seed: int = 0
    operator: OperatorConfig = OperatorConfig()
    potential: Optional[PotentialSpec] = None
    q: float = 2.0
    norms: Tuple[NormParams, ...] = (NormParams(2.0, 0.5),)
    family: FamilyConfig = FamilyConfig()
    heights: HeightConfig = HeightConfig()
    corpus: Tuple[str, ...] = ()
    options: Dict[str, Any] = field(default_factory=dict)
    tolerances: Dict[str, float] = field(default_factory=dict)
    out_dir: Path = Path("out")
    source: Dict[str, Any] = field(default_factory=dict)

    def digest(self) -> str:
        return hashlib.md5(json.dumps(self.source, sort_keys=True, default=str).encode()).hexdigest()

    def option(self, key: str, default: Any = None) -> Any:
        return self.options.get(key, default)

    def tolerance(self, key: str, default: float) -> float:
        return float(self.tolerances.get(key, default))

    def with_domain(self, domain: GridDomain) -> 'ExperimentConfig':
        from dataclasses import replace
        return replace(self, domain=domain)

    def build_potential(self, domain: Optional[GridDomain] = None) -> GridFunction:
        if self.potential is None:
            raise ConfigurationError("configuration has no potential section")
        return sample_potential(self.potential, domain or self.domain)

    def operator_spec(self, domain: Optional[GridDomain] = None, calculus: Calculus = Calculus.HEAT) -> OperatorSpec:
        op = self.operator
        order_m = 1.0 if calculus is Calculus.POISSON else op.order_m
        kwargs = dict(order_m=order_m, calculus=calculus, route=op.route,
                      epsilon_list=op.epsilon_list, theta_policy=op.theta_policy)
        if op.kind is OperatorKind.SCHRODINGER:
            return OperatorSpec.schrodinger(self.build_potential(domain), **kwargs)
        return OperatorSpec.laplacian(**kwargs)

    def build_engine(self, domain: Optional[GridDomain] = None, calculus: Calculus = Calculus.HEAT) -> OperatorEngine:
        domain = domain or self.domain
        return build_engine(self.operator_spec(domain, calculus), domain)

    def build_family(self, domain: Optional[GridDomain] = None) -> BallFamily:
        domain = domain or self.domain
        stride = self.family.stride
        if stride is not None and domain != self.domain:
            # keep the physical stride when the grid is refined
            stride *= domain.points_per_axis // self.domain.points_per_axis
        family = BallFamily.default(domain, stride, self.family.ratio)
        return family.refined(self.family.refine) if self.family.refine else family

    def build_heights(self, domain: Optional[GridDomain] = None):
        from core.dirichlet import HeightGrid
        domain = domain or self.domain
        t_min = self.heights.t_min if self.heights.t_min is not None else 2.0 * domain.spacing
        t_max = self.heights.t_max if self.heights.t_max is not None else 0.5 * domain.half_width
        return HeightGrid.geometric(t_min, t_max, self.heights.count)


def _section(raw: Dict, name: str) -> Dict:
    section = raw.get(name, {})
    if not isinstance(section, dict):
        raise ConfigurationError(f"'{name}' must be a section of dotted keys")
    return section


def _floats(value, key: str) -> Tuple[float, ...]:
    values = value if isinstance(value, list) else [value]
    try:
        return tuple(float(v) for v in values)
    except (TypeError, ValueError):
        raise ConfigurationError(f"'{key}' must hold numbers, got {value!r}")


def _norms(section: Dict) -> Tuple[NormParams, ...]:
    ps = _floats(section.get('p', 2.0), 'norm.p')
    lams = _floats(section.get('lam', 0.5), 'norm.lam')
    if len(ps) == 1:
        ps = ps * len(lams)
    if len(lams) == 1:
        lams = lams * len(ps)
    if len(ps) != len(lams):
        raise ConfigurationError("norm.p and norm.lam must have matching lengths")
    m = float(section.get('m', 2.0))
    return tuple(NormParams(p, lam, m) for p, lam in zip(ps, lams))


def config_from_dict(raw: Dict, source_path: Optional[Path] = None) -> ExperimentConfig:
    """Validate a parsed TOML document; every inconsistency is a ConfigurationError."""
    try:
        experiment = _section(raw, 'experiment')
        if 'kind' not in experiment:
            raise ConfigurationError("experiment.kind is required")
        try:
            kind = ExperimentKind(experiment['kind'])
        except ValueError:
            raise ConfigurationError(f"unknown experiment kind '{experiment['kind']}'")

        d = _section(raw, 'domain')
        domain = GridDomain(int(d.get('dim', 1)), float(d.get('half_width', 8.0)),
                            int(d.get('points_per_axis', 256)), d.get('boundary', 'periodic'))

        o = _section(raw, 'operator')
        operator = OperatorConfig(OperatorKind(o.get('kind', 'laplacian')), float(o.get('order_m', 2.0)),
                                  Route(o.get('route', 'auto')),
                                  _floats(o.get('epsilon_list', [1.0]), 'operator.epsilon_list'),
                                  _floats(o.get('theta_policy', [1.0]), 'operator.theta_policy'))

        p = _section(raw, 'potential')
        potential = None
        if p:
            potential = PotentialSpec(p.get('kind', 'constant'), float(p.get('value', 1.0)),
                                      float(p.get('exponent', 2.0)), float(p.get('width', 1.0)))
        if operator.kind is OperatorKind.SCHRODINGER and potential is None:
            raise ConfigurationError("a Schrodinger operator needs a potential section")

        norms = _norms(_section(raw, 'norm'))
        for params in norms:
            params.check_dimension(domain.dim)

        f = _section(raw, 'family')
        family = FamilyConfig(f.get('stride'), float(f.get('ratio', 2.0 ** -0.5)), int(f.get('refine', 0)))

        h = _section(raw, 'heights')
        heights = HeightConfig(h.get('t_min'), h.get('t_max'), int(h.get('count', 200)))

        corpus_section = _section(raw, 'corpus')
        corpus = tuple(corpus_section.get('generators', ()))
        seed = int(corpus_section.get('seed', experiment.get('seed', 0)))

        out_dir = Path(_section(raw, 'output').get('dir', 'out'))
        config = ExperimentConfig(kind, domain, seed, operator, potential, float(p.get('q', 2.0)), norms,
                                  family, heights, corpus, dict(_section(raw, 'suite')),
                                  dict(_section(raw, 'tolerances')), out_dir, raw)
        # build once so inconsistencies surface before any stage runs
        config.build_family()
        if potential is not None:
            config.build_potential()
        return config
    except ConfigurationError:
        raise
    except (CampanatoError, KeyError, TypeError, ValueError) as e:
        where = f" in {source_path}" if source_path else ""
        raise ConfigurationError(f"invalid configuration{where}: {e}") from e


def load_config(path: Path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"configuration file {path} does not exist")
    try:
        with open(path, 'rb') as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as e:
        raise ConfigurationError(f"{path} is not valid TOML: {e}") from e
    logger.info(f"Loaded {path}")
    return config_from_dict(raw, path)
