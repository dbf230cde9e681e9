from .io import (
    load_state, save_state, save_grid, load_grid, save_field, load_field, write_report, write_csv,
)
from .environment import validate_environment, get_experiment_name, get_run_id, get_data_dir, get_workers
from . import debug

# utils.config imports the numerical core; import it explicitly to keep core -> utils acyclic

__all__ = [
    'load_state', 'save_state', 'save_grid', 'load_grid', 'save_field', 'load_field',
    'write_report', 'write_csv',
    'validate_environment', 'get_experiment_name', 'get_run_id', 'get_data_dir', 'get_workers',
    'debug',
]
