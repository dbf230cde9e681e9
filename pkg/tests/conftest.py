import pytest

from core.grid import BallFamily, GridDomain, GridFunction
from core.spectral import OperatorSpec, build_engine


RUNTIME_VARS = (
    'ENABLE_ENGINE_CACHE', 'CAMPANATO_DEBUG_LOG', 'CAMPANATO_CACHE_DIR', 'CAMPANATO_MAX_POINTS',
    'CAMPANATO_MAX_EIGEN_POINTS', 'CAMPANATO_WORKERS', 'EXPERIMENT_NAME',
)


@pytest.fixture(autouse=True)
def isolated_run(tmp_path, monkeypatch):
    """Every test runs from its own directory so .state/ and data/ never leak."""
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv('DATA_DIR', str(tmp_path / 'data'))
    monkeypatch.setenv('RUN_ID', 'pytest')
    for var in RUNTIME_VARS:
        monkeypatch.delenv(var, raising=False)


@pytest.fixture
def line():
    return GridDomain(1, 8.0, 128)


@pytest.fixture
def truncated_line():
    return GridDomain(1, 8.0, 64, 'truncated_dirichlet')


@pytest.fixture
def line_engine(line):
    return build_engine(OperatorSpec.laplacian(), line)


@pytest.fixture
def line_family(line):
    return BallFamily.default(line)


@pytest.fixture
def unit_potential(line):
    return GridFunction.constant(line, 1.0)


@pytest.fixture
def schrodinger_engine(line, unit_potential):
    return build_engine(OperatorSpec.schrodinger(unit_potential), line)




@pytest.fixture
def fine_line():
    return GridDomain(1, 8.0, 512)


@pytest.fixture
def fine_engine(fine_line):
    return build_engine(OperatorSpec.laplacian(), fine_line)
