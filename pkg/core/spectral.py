"""Discretised operators L in {-Delta, -Delta + V} and their functional calculus.

Semigroups act spectrally: the coefficients of f are multiplied by e^{-t mu}
(heat) or e^{-t sqrt(mu)} (Poisson). Periodic Laplacians use Fourier
multipliers |xi|^2; everything else a dense symmetric eigendecomposition of the
second-order central-difference operator.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.fft
import scipy.linalg
from scipy import sparse

from core.errors import EngineError, NumericalError, QuadratureError
from core.grid import GridDomain, GridFunction
from utils.environment import get_max_eigen_points

logger = logging.getLogger(__name__)


class OperatorKind(str, Enum):
    LAPLACIAN = "laplacian"
    SCHRODINGER = "schrodinger"


class Calculus(str, Enum):
    HEAT = "heat"
    POISSON = "poisson"


class KernelKind(str, Enum):
    HEAT = "heat"
    POISSON = "poisson"


class Route(str, Enum):
    AUTO = "auto"
    FOURIER = "fourier"
    EIGEN = "eigen"


@dataclass(frozen=True, eq=False)
class OperatorSpec:
    kind: OperatorKind = OperatorKind.LAPLACIAN
    potential: Optional[GridFunction] = None
    order_m: float = 2.0
    calculus: Calculus = Calculus.HEAT
    epsilon_list: Tuple[float, ...] = (1.0,)
    theta_policy: Tuple[float, ...] = (1.0,)
    route: Route = Route.AUTO

    def __post_init__(self):
        for name, enum in (('kind', OperatorKind), ('calculus', Calculus), ('route', Route)):
            object.__setattr__(self, name, enum(getattr(self, name)))
        if not self.order_m > 0:
            raise EngineError(f"order m must be positive, got {self.order_m}")
        if self.calculus is Calculus.POISSON and self.order_m != 1:
            raise EngineError(f"the sqrt(L) calculus has order m = 1, got {self.order_m}")
        if any(e <= 0 for e in self.epsilon_list) or any(b <= 0 for b in self.theta_policy):
            raise EngineError("epsilon_list and theta_policy must hold positive values")
        if self.kind is OperatorKind.LAPLACIAN:
            if self.potential is not None:
                raise EngineError("a Laplacian carries no potential")
            return
        V = self.potential
        if V is None:
            raise EngineError("a Schrodinger operator needs a potential")
        if V.is_complex:
            raise EngineError("the potential must be real valued")
        if V.values.min() < 0:
            raise EngineError(f"potential is negative somewhere (min {V.values.min():.3e})")
        if not np.any(V.values > 0):
            raise EngineError("potential vanishes identically")

    @classmethod
    def laplacian(cls, **kwargs) -> 'OperatorSpec':
        return cls(kind=OperatorKind.LAPLACIAN, **kwargs)

    @classmethod
    def schrodinger(cls, potential: GridFunction, **kwargs) -> 'OperatorSpec':
        return cls(kind=OperatorKind.SCHRODINGER, potential=potential, **kwargs)

    def as_poisson(self) -> 'OperatorSpec':
        return replace(self, calculus=Calculus.POISSON, order_m=1.0)

    def as_heat(self, order_m: float = 2.0) -> 'OperatorSpec':
        return replace(self, calculus=Calculus.HEAT, order_m=order_m)

    def digest_payload(self) -> Dict:
        """Everything that determines the spectrum (the calculus does not)."""
        payload = {'kind': self.kind.value, 'route': self.route.value}
        if self.potential is not None:
            values = np.ascontiguousarray(self.potential.values, dtype='<f8')
            payload['potential_md5'] = hashlib.md5(values.tobytes()).hexdigest()
        return payload


@dataclass(frozen=True, eq=False)
class OperatorEngine:
    spec: OperatorSpec
    domain: GridDomain
    route: Route
    # Fourier: |xi|^2 on the frequency grid. Eigen: ascending eigenvalues.
    eigenvalues: np.ndarray
    # Eigen route only: Euclidean-orthonormal eigenvectors as columns.
    eigenvectors: Optional[np.ndarray] = None
    matrix: Optional[np.ndarray] = None

    @property
    def is_fourier(self) -> bool:
        return self.route is Route.FOURIER

    @property
    def potential_floor(self) -> float:
        if self.spec.potential is None:
            return 0.0
        return float(self.spec.potential.values.min())

    def with_calculus(self, spec: OperatorSpec) -> 'OperatorEngine':
        """Same spectrum viewed through another calculus (heat or sqrt(L))."""
        if spec.digest_payload() != self.spec.digest_payload():
            raise EngineError("calculus switch must keep the operator")
        return replace(self, spec=spec)

    def orthonormal_modes(self) -> np.ndarray:
        """Eigenvectors normalised in the grid inner product h^dim sum phi_i phi_j."""
        if self.eigenvectors is None:
            raise EngineError("Fourier engines do not store eigenvectors")
        return self.eigenvectors / math.sqrt(self.domain.cell_volume)


def fourier_frequencies(domain: GridDomain) -> List[np.ndarray]:
    """Angular frequencies xi = pi k / R per axis, broadcastable over the grid."""
    freqs = []
    for a in range(domain.dim):
        xi = 2.0 * np.pi * scipy.fft.fftfreq(domain.points_per_axis, d=domain.spacing)
        shape = [1] * domain.dim
        shape[a] = domain.points_per_axis
        freqs.append(xi.reshape(shape))
    return freqs


def difference_matrix(domain: GridDomain) -> sparse.csr_matrix:
    """Second-order central-difference -Delta_h with the domain's boundary semantics."""
    n = domain.points_per_axis
    h2 = domain.spacing ** 2
    one_d = sparse.diags([-np.ones(n - 1), 2.0 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1], format='lil')
    if domain.is_periodic:
        one_d[0, n - 1] = -1.0
        one_d[n - 1, 0] = -1.0
    one_d = one_d.tocsr() / h2
    total = sparse.csr_matrix((domain.size, domain.size))
    for a in range(domain.dim):
        term = sparse.kron(sparse.identity(n ** a), sparse.kron(one_d, sparse.identity(n ** (domain.dim - a - 1))))
        total = total + term
    return total.tocsr()


def _resolve_route(spec: OperatorSpec, domain: GridDomain) -> Route:
    fourier_ok = spec.kind is OperatorKind.LAPLACIAN and domain.is_periodic
    if spec.route is Route.AUTO:
        return Route.FOURIER if fourier_ok else Route.EIGEN
    if spec.route is Route.FOURIER and not fourier_ok:
        raise EngineError("the Fourier route needs a Laplacian on a periodic domain")
    return spec.route


def build_engine(spec: OperatorSpec, domain: GridDomain) -> OperatorEngine:
    if spec.potential is not None and spec.potential.domain != domain:
        raise EngineError("potential is sampled on a different domain")
    route = _resolve_route(spec, domain)

    if route is Route.FOURIER:
        symbol = sum(xi ** 2 for xi in fourier_frequencies(domain))
        logger.info(f"Built Fourier engine on {domain.shape} ({domain.boundary.value})")
        return OperatorEngine(spec, domain, route, np.broadcast_to(symbol, domain.shape).copy())

    budget = get_max_eigen_points()
    if domain.size > budget:
        raise EngineError(f"dense eigendecomposition of {domain.size} points exceeds the budget of {budget}")

    matrix = difference_matrix(domain).toarray()
    if spec.potential is not None:
        matrix[np.diag_indices_from(matrix)] += np.ravel(spec.potential.values)

    from utils.engine_cache import get_engine_cache
    cache = get_engine_cache()
    payload = {'spec': spec.digest_payload(), 'domain': domain.to_header()}
    cached = cache.get(payload) if cache else None
    if cached is not None:
        eigenvalues, eigenvectors = cached
    else:
        try:
            eigenvalues, eigenvectors = scipy.linalg.eigh(matrix)
        except (scipy.linalg.LinAlgError, ValueError) as e:
            raise EngineError(f"eigensolver failed: {e}") from e
        if cache:
            cache.save(payload, eigenvalues, eigenvectors)

    scale = max(1.0, float(np.max(np.abs(eigenvalues))))
    floor = 0.0 if spec.potential is None else float(spec.potential.values.min())
    if not domain.is_periodic or spec.potential is None:
        if eigenvalues.min() < floor - 1e-9 * scale:
            raise EngineError(f"smallest eigenvalue {eigenvalues.min():.3e} is below the potential floor {floor:.3e}")
    if spec.kind is OperatorKind.LAPLACIAN:
        eigenvalues = np.maximum(eigenvalues, 0.0)
    logger.info(f"Built eigen engine on {domain.shape} ({domain.boundary.value}, {spec.kind.value}), "
                f"spectrum [{eigenvalues.min():.4g}, {eigenvalues.max():.4g}]")
    return OperatorEngine(spec, domain, route, eigenvalues, eigenvectors, matrix)


def _check(engine: OperatorEngine, f: GridFunction, t: float = 0.0):
    if f.domain != engine.domain:
        raise EngineError("function and engine live on different domains")
    if t < 0:
        raise NumericalError(f"semigroup time must be nonnegative, got {t}")


def _to_spectrum(engine: OperatorEngine, values: np.ndarray) -> np.ndarray:
    if engine.is_fourier:
        return scipy.fft.fftn(values)
    return engine.eigenvectors.T @ np.ravel(values)


def _from_spectrum(engine: OperatorEngine, coefficients: np.ndarray, real: bool) -> np.ndarray:
    if engine.is_fourier:
        values = scipy.fft.ifftn(coefficients, s=engine.domain.shape)
    else:
        values = (engine.eigenvectors @ coefficients).reshape(engine.domain.shape)
    return values.real if real else values


def apply_multiplier(engine: OperatorEngine, f: GridFunction,
                     multiplier: Callable[[np.ndarray], np.ndarray]) -> GridFunction:
    """m(L) f for a function m of the spectrum."""
    _check(engine, f)
    coefficients = _to_spectrum(engine, f.values)
    return f.with_values(_from_spectrum(engine, multiplier(engine.eigenvalues) * coefficients, not f.is_complex))


def multiplier_stack(engine: OperatorEngine, f: GridFunction,
                     multiplier: Callable[[float, np.ndarray], np.ndarray],
                     times: Sequence[float]) -> np.ndarray:
    """m_t(L) f for every t in ``times``, sharing one spectral transform; shape (len(times), *grid)."""
    _check(engine, f)
    coefficients = _to_spectrum(engine, f.values)
    return np.stack([
        _from_spectrum(engine, multiplier(t, engine.eigenvalues) * coefficients, not f.is_complex)
        for t in times
    ])


def _sqrt_spectrum(mu: np.ndarray) -> np.ndarray:
    return np.sqrt(np.maximum(mu, 0.0))


def heat_apply(engine: OperatorEngine, t: float, f: GridFunction) -> GridFunction:
    """e^{-tL} f."""
    _check(engine, f, t)
    if t == 0:
        return f
    return apply_multiplier(engine, f, lambda mu: np.exp(-t * mu))


def poisson_apply(engine: OperatorEngine, t: float, f: GridFunction) -> GridFunction:
    """e^{-t sqrt(L)} f."""
    _check(engine, f, t)
    if t == 0:
        return f
    return apply_multiplier(engine, f, lambda mu: np.exp(-t * _sqrt_spectrum(mu)))


def semigroup(engine: OperatorEngine, t: float, f: GridFunction) -> GridFunction:
    """The engine's own semigroup: heat for the L calculus, Poisson for sqrt(L)."""
    if engine.spec.calculus is Calculus.POISSON:
        return poisson_apply(engine, t, f)
    return heat_apply(engine, t, f)


def generator_spectrum(engine: OperatorEngine) -> np.ndarray:
    """Spectrum of the semigroup generator: mu (heat) or sqrt(mu) (Poisson)."""
    mu = np.ravel(engine.eigenvalues)
    if engine.spec.calculus is Calculus.POISSON:
        return _sqrt_spectrum(mu)
    return mu


def semigroup_stack(engine: OperatorEngine, f: GridFunction, times: Sequence[float]) -> np.ndarray:
    if engine.spec.calculus is Calculus.POISSON:
        return multiplier_stack(engine, f, lambda t, mu: np.exp(-t * _sqrt_spectrum(mu)), times)
    return multiplier_stack(engine, f, lambda t, mu: np.exp(-t * mu), times)


def spectral_gap(engine: OperatorEngine) -> float:
    """Smallest strictly positive eigenvalue of the semigroup generator."""
    spectrum = generator_spectrum(engine)
    positive = spectrum[spectrum > 1e-12 * max(1.0, float(spectrum.max()))]
    if positive.size == 0:
        raise NumericalError("generator has no positive spectrum")
    return float(positive.min())


def apply_generator(engine: OperatorEngine, f: GridFunction) -> GridFunction:
    """The discrete L itself (not its square root)."""
    _check(engine, f)
    if engine.is_fourier:
        return apply_multiplier(engine, f, lambda mu: mu)
    values = (engine.matrix @ np.ravel(f.values)).reshape(engine.domain.shape)
    return f.with_values(values)


def poisson_time_derivative(engine: OperatorEngine, t: float, f: GridFunction) -> GridFunction:
    """d/dt e^{-t sqrt(L)} f, exactly: coefficients times -sqrt(mu) e^{-t sqrt(mu)}."""
    _check(engine, f, t)
    return apply_multiplier(engine, f, lambda mu: -_sqrt_spectrum(mu) * np.exp(-t * _sqrt_spectrum(mu)))


def spatial_gradient(engine: OperatorEngine, values: np.ndarray) -> np.ndarray:
    """grad_x of grid samples, shape (dim, *grid): spectral on Fourier engines,
    central differences otherwise."""
    domain = engine.domain
    real = np.isrealobj(values)
    if engine.is_fourier:
        coefficients = scipy.fft.fftn(values)
        n = domain.points_per_axis
        out = []
        for a, xi in enumerate(fourier_frequencies(domain)):
            xi = xi.copy()
            # Nyquist derivative is ambiguous on an even grid
            xi.flat[n // 2] = 0.0
            derivative = scipy.fft.ifftn(1j * xi * coefficients)
            out.append(derivative.real if real else derivative)
        return np.stack(out)
    return central_gradient(domain, values)


def central_gradient(domain: GridDomain, values: np.ndarray) -> np.ndarray:
    """Second-order central differences; zero outside the box on truncated domains."""
    h = domain.spacing
    out = []
    for a in range(domain.dim):
        if domain.is_periodic:
            forward = np.roll(values, -1, axis=a)
            backward = np.roll(values, 1, axis=a)
        else:
            padded = np.pad(values, [(1, 1) if b == a else (0, 0) for b in range(domain.dim)])
            forward = np.take(padded, range(2, domain.points_per_axis + 2), axis=a)
            backward = np.take(padded, range(0, domain.points_per_axis), axis=a)
        out.append((forward - backward) / (2.0 * h))
    return np.stack(out)


# --- subordination oracle -------------------------------------------------

SUBORDINATION_LOWER_LOG = -50.0


def _subordination_multiplier(t: float, mu: np.ndarray, nodes: int, upper: float) -> np.ndarray:
    # e^{-t sqrt(mu)} = pi^{-1/2} int_0^inf e^{-u} u^{-1/2} e^{-(t^2 / 4u) mu} du, u = e^tau, trapezoid in tau
    tau = np.linspace(SUBORDINATION_LOWER_LOG, upper, nodes)
    step = tau[1] - tau[0]
    u = np.exp(tau)
    weights = step * np.exp(-u) * np.sqrt(u) / math.sqrt(math.pi)
    weights[0] *= 0.5
    weights[-1] *= 0.5
    heat_times = t * t / (4.0 * u)
    total = np.zeros(mu.shape)
    for w, s in zip(weights, heat_times):
        total += w * np.exp(-s * mu)
    return total


def poisson_via_subordination(engine: OperatorEngine, t: float, f: GridFunction, nodes: int = 200,
                              check_convergence: bool = True, tol: float = 1e-6) -> GridFunction:
    """Oracle for ``poisson_apply`` built only from heat multipliers e^{-sL}.

    Not a production path: it exists to cross-check the sqrt(L) calculus.
    """
    _check(engine, f, t)
    if nodes < 50:
        raise QuadratureError(f"subordination needs at least 50 nodes, got {nodes}")
    if t == 0:
        return f
    mu = np.maximum(engine.eigenvalues, 0.0)
    a_max = 0.25 * t * t * float(mu.max())
    upper = 0.5 * math.log(max(a_max, 1.0)) + 4.0

    result = apply_multiplier(engine, f, lambda m: _subordination_multiplier(t, np.maximum(m, 0.0), nodes, upper))
    if check_convergence:
        doubled = apply_multiplier(engine, f, lambda m: _subordination_multiplier(t, np.maximum(m, 0.0), 2 * nodes, upper))
        gap = float(np.max(np.abs(result.values - doubled.values)))
        if gap > tol * max(1.0, f.sup()):
            raise QuadratureError(f"subordination quadrature did not converge: {nodes} vs {2 * nodes} nodes differ by {gap:.3e}")
    return result


# --- kernels and bounds -----------------------------------------------------

def delta_at(domain: GridDomain, y_index: Sequence[int], amplitude: float = 1.0) -> GridFunction:
    values = np.zeros(domain.shape)
    values[tuple(y_index)] = amplitude / domain.cell_volume
    return GridFunction(domain, values)


def kernel_column(engine: OperatorEngine, t: float, y_index: Sequence[int],
                  kind: KernelKind = KernelKind.HEAT, amplitude: float = 1.0) -> GridFunction:
    """p_t(., y) (heat) or P_t(., y) (Poisson) as a grid function."""
    delta = delta_at(engine.domain, y_index, amplitude)
    if KernelKind(kind) is KernelKind.POISSON:
        return poisson_apply(engine, t, delta)
    return heat_apply(engine, t, delta)


def distance_to(domain: GridDomain, y_index: Sequence[int]) -> np.ndarray:
    return domain.offset_distance(y_index)


def gaussian_reference(domain: GridDomain, t: float, y_index: Sequence[int]) -> np.ndarray:
    """(4 pi t)^{-n/2} exp(-|x - y|^2 / 4t), |x - y| the minimal-image distance."""
    d = distance_to(domain, y_index)
    return (4.0 * np.pi * t) ** (-domain.dim / 2.0) * np.exp(-d ** 2 / (4.0 * t))


POISSON_IMAGES = 8


def poisson_shape(domain: GridDomain, t: float, y_index: Sequence[int]) -> np.ndarray:
    """t / (t^2 + |x - y|^2)^{(n+1)/2}, summed over periodic images on periodic domains."""
    n = domain.dim
    if not domain.is_periodic:
        d = distance_to(domain, y_index)
        return t / (t * t + d ** 2) ** ((n + 1) / 2.0)
    R = domain.half_width
    diff = domain.wrapped_difference(domain.coordinates(), domain.point_at(y_index))
    if n == 1:
        # closed form of the image sum
        a = np.pi * t / R
        b = np.pi * diff[0] / R
        return (np.pi / (2.0 * R)) * np.sinh(a) / (np.cosh(a) - np.cos(b))
    total = np.zeros(domain.shape)
    span = range(-POISSON_IMAGES, POISSON_IMAGES + 1)
    for image in np.array(np.meshgrid(*([list(span)] * n), indexing='ij')).reshape(n, -1).T:
        shifted = sum((diff[a] + 2.0 * R * image[a]) ** 2 for a in range(n))
        total += t / (t * t + shifted) ** ((n + 1) / 2.0)
    return total


@dataclass(frozen=True)
class PoissonFit:
    constant: float
    max_relative_error: float
    t: float


def fit_poisson_constant(engine: OperatorEngine, t: float, y_index: Sequence[int],
                         radius_fraction: float = 0.25) -> PoissonFit:
    """Least-squares c_n in P_t(x, y) ~ c_n t / (t^2 + |x - y|^2)^{(n+1)/2} near y."""
    column = kernel_column(engine, t, y_index, KernelKind.POISSON).values
    shape = poisson_shape(engine.domain, t, y_index)
    near = distance_to(engine.domain, y_index) <= radius_fraction * engine.domain.half_width
    c = float(np.sum(column[near] * shape[near]) / np.sum(shape[near] ** 2))
    error = float(np.max(np.abs(column[near] - c * shape[near]) / (c * shape[near])))
    logger.info(f"Fitted Poisson constant c_n = {c:.8g} at t = {t:.4g} (max rel. error {error:.2e})")
    return PoissonFit(c, error, t)


@dataclass(frozen=True)
class KernelBoundParams:
    C: float
    m: float = 2.0
    epsilon: float = 1.0


@dataclass
class KernelBoundReport:
    max_ratio: float
    argmax_t: float
    argmax_x: Tuple[float, ...]
    argmax_y: Tuple[float, ...]
    diagonal_ratios: List[float] = field(default_factory=list)
    passed: bool = False

    def to_record(self) -> Dict:
        return {
            'max_ratio': self.max_ratio,
            'argmax_t': self.argmax_t,
            'argmax_x': list(self.argmax_x),
            'argmax_y': list(self.argmax_y),
            'diagonal_ratios': list(self.diagonal_ratios),
            'passed': self.passed,
        }


def _bound(domain: GridDomain, t: float, d: np.ndarray, params: KernelBoundParams, shape: str) -> np.ndarray:
    n = domain.dim
    if shape == 'poisson':
        return params.C * t / (t * t + d ** 2) ** ((n + 1) / 2.0)
    scale = t ** (1.0 / params.m)
    return params.C * t ** (-n / params.m) * (1.0 + d / scale) ** (-(n + params.epsilon))


def _kernel_values(engine: OperatorEngine, t: float, y_index: Sequence[int], kind: KernelKind,
                   derivative: Optional[str], amplitude: float) -> np.ndarray:
    if derivative is None:
        return kernel_column(engine, t, y_index, kind, amplitude).values
    if derivative == 'time':
        step = t / 100.0
        later = kernel_column(engine, t + step, y_index, kind, amplitude).values
        earlier = kernel_column(engine, t - step, y_index, kind, amplitude).values
        return t * (later - earlier) / (2.0 * step)
    if derivative == 'space':
        column = kernel_column(engine, t, y_index, kind, amplitude).values
        return t * np.sqrt(np.sum(spatial_gradient(engine, column) ** 2, axis=0))
    raise NumericalError(f"unknown kernel derivative '{derivative}'")


def check_kernel_bound(engine: OperatorEngine, t_list: Sequence[float], params: KernelBoundParams,
                       y_indices: Optional[Sequence[Sequence[int]]] = None,
                       kind: KernelKind = KernelKind.HEAT, shape: str = 'algebraic',
                       derivative: Optional[str] = None, amplitude: float = 1.0) -> KernelBoundReport:
    """max over t, y, x of |kernel| / bound; passes iff that maximum is <= 1.

    ``shape='algebraic'`` is C t^{-n/m} (1 + |x-y| / t^{1/m})^{-(n+eps)};
    ``shape='poisson'`` is C t / (t^2 + |x-y|^2)^{(n+1)/2}. ``derivative``
    ('time' or 'space') bounds t d/dt or t grad_x of the kernel instead.
    """
    domain = engine.domain
    h = domain.spacing
    lower, upper = 4.0 * h * h, (domain.half_width / 4.0) ** params.m
    for t in t_list:
        if not lower * (1 - 1e-12) <= t <= upper * (1 + 1e-12):
            raise NumericalError(f"t = {t} lies outside the resolved range [{lower:.4g}, {upper:.4g}]")
    if y_indices is None:
        y_indices = [domain.origin_index]

    report = KernelBoundReport(0.0, float(t_list[0]), domain.point_at(y_indices[0]), domain.point_at(y_indices[0]))
    for t in t_list:
        for y in y_indices:
            values = np.abs(_kernel_values(engine, t, y, KernelKind(kind), derivative, amplitude))
            d = distance_to(domain, y)
            ratio = values / _bound(domain, t, d, params, shape)
            report.diagonal_ratios.append(float(ratio[tuple(y)]))
            k = int(np.argmax(ratio))
            if ratio.flat[k] > report.max_ratio:
                index = np.unravel_index(k, domain.shape)
                report.max_ratio = float(ratio.flat[k])
                report.argmax_t = float(t)
                report.argmax_x = domain.point_at(index)
                report.argmax_y = domain.point_at(y)
    report.passed = report.max_ratio <= 1.0
    logger.info(f"Kernel bound ({shape}, {KernelKind(kind).value}, derivative={derivative}): "
                f"max ratio {report.max_ratio:.4g} at t={report.argmax_t:.4g}")
    return report


def free_engine(engine: OperatorEngine) -> OperatorEngine:
    """The V = 0 engine with the same discretisation."""
    if engine.spec.kind is OperatorKind.LAPLACIAN:
        return engine
    spec = OperatorSpec.laplacian(order_m=engine.spec.order_m, calculus=engine.spec.calculus,
                                  route=Route.EIGEN)
    return build_engine(spec, engine.domain)


def check_domination(engine: OperatorEngine, t_list: Sequence[float],
                     y_indices: Optional[Sequence[Sequence[int]]] = None) -> float:
    """max over t, x, y of p_t^V(x, y) - p_t^0(x, y); nonpositive up to roundoff when V >= 0."""
    reference = free_engine(engine)
    if y_indices is None:
        y_indices = [engine.domain.origin_index]
    excess = -np.inf
    for t in t_list:
        for y in y_indices:
            column = kernel_column(engine, t, y).values
            free = kernel_column(reference, t, y).values
            excess = max(excess, float(np.max(column - free)))
    return excess
