import logging
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Optional, TypeVar

import pyarrow as pa

from core.errors import CampanatoError, ConfigurationError, StageError
from . import debug
from .environment import get_workers

logger = logging.getLogger(__name__)

T = TypeVar('T')
R = TypeVar('R')


@dataclass
class SuiteResult:
    """What every ``process_<suite>`` returns: the CSV table, the report summary, the verdict."""

    name: str
    table: pa.Table
    summary: Dict[str, Any] = field(default_factory=dict)
    checks: Dict[str, bool] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def report(self, config) -> Dict[str, Any]:
        return {
            'suite': self.name,
            'config_digest': config.digest(),
            'seed': config.seed,
            'config': config.source,
            'summary': self.summary,
            'checks': self.checks,
            'passed': self.passed,
            'regime': regime(config),
        }


def regime(config) -> str:
    # decay and triviality results assume n >= 3; lower dimensions are measured, not claimed
    return "structural analog" if config.domain.dim < 3 else "n >= 3"


@contextmanager
def stage(name: str, metrics: Optional[Dict] = None):
    """Time a named stage, log it, and wrap numerical errors with the stage name."""
    start = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except CampanatoError as e:
        duration_ms = int((time.perf_counter() - start) * 1000)
        debug.log_stage(name, duration_ms, 'failed', str(e), metrics)
        logger.error(f"Stage '{name}' failed after {duration_ms} ms: {e}")
        raise StageError(name, e) from e
    duration_ms = int((time.perf_counter() - start) * 1000)
    debug.log_stage(name, duration_ms, 'completed', None, metrics)
    logger.info(f"Stage '{name}' completed in {duration_ms} ms")


def map_rows(fn: Callable[[T], R], items: Iterable[T], workers: Optional[int] = None) -> List[R]:
    """fn over items on a thread pool (CAMPANATO_WORKERS), results in input order."""
    items = list(items)
    workers = workers or get_workers()
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def require_certified(config, minimum_q_factor: float = 1.0):
    """Refuse Schrodinger runs whose potential is not certified in B_q with q >= factor * n."""
    from core.potentials import certify_bq
    from core.spectral import OperatorKind

    if config.operator.kind is not OperatorKind.SCHRODINGER:
        return None
    n = config.domain.dim
    if config.q < minimum_q_factor * n:
        raise ConfigurationError(f"q = {config.q} does not meet q >= {minimum_q_factor:g} n = {minimum_q_factor * n:g}")
    certificate = certify_bq(config.potential, config.q, config.build_family(),
                             int(config.option('rh_budget', 5)))
    if not certificate.certified:
        raise ConfigurationError(f"potential {config.potential.kind.value} is not certified in B_{config.q:g}: {certificate.levels}")
    return certificate
