import os
from pathlib import Path
from typing import List, Optional, Dict

CORE_ENV_VARS = [
    "RUN_ID",
]

DEFAULT_MAX_POINTS = 2 ** 22
DEFAULT_MAX_EIGEN_POINTS = 4096


def validate_environment(required: Optional[List[str]] = None) -> Dict[str, str]:
    if required is None:
        required = CORE_ENV_VARS.copy()

    # Engine caching needs somewhere writable to put the eigenpairs
    if is_engine_cache_enabled():
        required.append("CAMPANATO_CACHE_DIR")

    missing = [var for var in required if var not in os.environ]
    if missing:
        raise ValueError(f"Missing required environment variables: {missing}")

    return {var: os.environ[var] for var in required}


def get_experiment_name() -> str:
    return os.environ.get('EXPERIMENT_NAME', 'campanato')


def get_run_id() -> str:
    return os.environ.get('RUN_ID', 'local-run')


def get_data_dir() -> str:
    return os.environ.get('DATA_DIR', 'data')


def get_cache_dir() -> Path:
    return Path(os.environ.get('CAMPANATO_CACHE_DIR', f'{get_data_dir()}/engine_cache'))


def is_engine_cache_enabled() -> bool:
    return os.environ.get('ENABLE_ENGINE_CACHE', '').lower() == 'true'


def is_debug_log_enabled() -> bool:
    return os.environ.get('CAMPANATO_DEBUG_LOG', '').lower() == 'true'


def get_max_points() -> int:
    return int(os.environ.get('CAMPANATO_MAX_POINTS', str(DEFAULT_MAX_POINTS)))


def get_max_eigen_points() -> int:
    return int(os.environ.get('CAMPANATO_MAX_EIGEN_POINTS', str(DEFAULT_MAX_EIGEN_POINTS)))


def get_workers() -> int:
    return max(1, int(os.environ.get('CAMPANATO_WORKERS', '1')))
