import json
import hashlib
import logging
from datetime import datetime
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from . import debug
from .environment import get_cache_dir, get_run_id, is_engine_cache_enabled
from .io import read_array, write_array

logger = logging.getLogger(__name__)

_cache = None


class EngineCache:
    """Eigenpairs on disk, keyed by the md5 of the canonical JSON of (spec, domain)."""

    def __init__(self, cache_dir: Path):
        self.cache_dir = cache_dir
        self.cache_dir.mkdir(exist_ok=True, parents=True)
        self.run_id = get_run_id()

    def _cache_key(self, payload: Dict) -> str:
        return hashlib.md5(json.dumps(payload, sort_keys=True).encode()).hexdigest()

    def _paths(self, key: str) -> Tuple[Path, Path, Path]:
        return (self.cache_dir / f"{key}.meta.json",
                self.cache_dir / f"{key}.eigenvalues.bin",
                self.cache_dir / f"{key}.eigenvectors.bin")

    def get(self, payload: Dict) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        key = self._cache_key(payload)
        metadata_file, values_file, vectors_file = self._paths(key)
        if not (metadata_file.exists() and values_file.exists() and vectors_file.exists()):
            return None

        with open(metadata_file, 'r') as f:
            metadata = json.load(f)
        size = metadata["size"]
        try:
            eigenvalues = read_array(values_file, (size,))
            eigenvectors = read_array(vectors_file, (size, size))
        except ValueError as e:
            logger.warning(f"Discarding corrupt engine cache entry {key}: {e}")
            return None

        debug.log_stage(f"engine_cache_hit:{key}", 0, 'cached')
        logger.info(f"Loaded cached eigenpairs {key} ({size} points)")
        return eigenvalues, eigenvectors

    def save(self, payload: Dict, eigenvalues: np.ndarray, eigenvectors: np.ndarray):
        key = self._cache_key(payload)
        metadata_file, values_file, vectors_file = self._paths(key)

        write_array(values_file, eigenvalues)
        write_array(vectors_file, eigenvectors)

        metadata = {
            "size": int(len(eigenvalues)),
            "payload": payload,
            "run_id": self.run_id,
            "cached_at": datetime.now().isoformat()
        }
        with open(metadata_file, 'w') as f:
            json.dump(metadata, f, indent=2)
        logger.info(f"Cached eigenpairs {key} in {self.cache_dir}")


def get_engine_cache() -> Optional[EngineCache]:
    """Cache singleton, or None when ENABLE_ENGINE_CACHE is off."""
    global _cache
    if not is_engine_cache_enabled():
        return None
    cache_dir = get_cache_dir()
    if _cache is None or _cache.cache_dir != cache_dir:
        _cache = EngineCache(cache_dir)
    return _cache
