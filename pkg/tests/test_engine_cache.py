import numpy as np

from core.spectral import OperatorSpec, build_engine
from utils.engine_cache import get_engine_cache


def test_cache_is_off_by_default():
    assert get_engine_cache() is None


def test_eigenpairs_are_reused(tmp_path, monkeypatch, line, unit_potential):
    monkeypatch.setenv('ENABLE_ENGINE_CACHE', 'true')
    monkeypatch.setenv('CAMPANATO_CACHE_DIR', str(tmp_path / "cache"))
    first = build_engine(OperatorSpec.schrodinger(unit_potential), line)
    assert len(list((tmp_path / "cache").glob("*.meta.json"))) == 1
    second = build_engine(OperatorSpec.schrodinger(unit_potential), line)
    assert np.array_equal(first.eigenvalues, second.eigenvalues)
    assert np.array_equal(first.eigenvectors, second.eigenvectors)


def test_corrupt_entries_are_rebuilt(tmp_path, monkeypatch, line, unit_potential):
    monkeypatch.setenv('ENABLE_ENGINE_CACHE', 'true')
    monkeypatch.setenv('CAMPANATO_CACHE_DIR', str(tmp_path / "cache"))
    first = build_engine(OperatorSpec.schrodinger(unit_potential), line)
    (vectors,) = (tmp_path / "cache").glob("*.eigenvectors.bin")
    vectors.write_bytes(vectors.read_bytes()[:64])
    rebuilt = build_engine(OperatorSpec.schrodinger(unit_potential), line)
    assert np.allclose(rebuilt.eigenvalues, first.eigenvalues)
