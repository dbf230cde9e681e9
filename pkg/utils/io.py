import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pyarrow as pa
import pyarrow.csv as pcsv

from . import debug
from .environment import get_experiment_name, get_run_id

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "{:.17g}"


# Flat little-endian float64 binaries; complex arrays are stored as interleaved (re, im) pairs

def write_array(path: Path, values: np.ndarray):
    values = np.asarray(values)
    if values.dtype.kind == 'c':
        raw = np.stack([values.real, values.imag], axis=-1)
    else:
        raw = values.astype(float)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    np.ascontiguousarray(raw, dtype='<f8').tofile(path)


def read_array(path: Path, shape: Sequence[int], is_complex: bool = False) -> np.ndarray:
    raw = np.fromfile(path, dtype='<f8')
    expected = int(np.prod(shape)) * (2 if is_complex else 1)
    if raw.size != expected:
        raise ValueError(f"{path} holds {raw.size} values, expected {expected}")
    if is_complex:
        pairs = raw.reshape(-1, 2)
        return (pairs[:, 0] + 1j * pairs[:, 1]).reshape(shape)
    return raw.reshape(shape)


def save_grid(f, path: Path) -> Path:
    """Write ``<path>.bin`` and the ``<path>.meta.json`` header for a GridFunction."""
    path = Path(path)
    write_array(path.with_suffix('.bin'), f.values)
    header = dict(f.domain.to_header(), complex=bool(f.is_complex))
    with open(path.with_suffix('.meta.json'), 'w') as fh:
        json.dump(header, fh, indent=2)
    return path.with_suffix('.bin')


def _domain_from_header(header: Dict):
    from core.grid import GridDomain
    return GridDomain(header['dim'], header['half_width'], header['points_per_axis'], header['boundary'])


def load_grid(path: Path):
    from core.grid import GridFunction
    path = Path(path)
    with open(path.with_suffix('.meta.json'), 'r') as fh:
        header = json.load(fh)
    domain = _domain_from_header(header)
    values = read_array(path.with_suffix('.bin'), domain.shape, header.get('complex', False))
    return GridFunction(domain, values)


def save_field(field, directory: Path) -> Path:
    """One grid binary per slice plus ``field.meta.json`` listing heights and provenance."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for j in range(field.heights.count):
        save_grid(field.slice(j), directory / f"slice_{j:04d}")
    if field.boundary is not None:
        save_grid(field.boundary, directory / "boundary")
    header = {
        'domain': field.domain.to_header(),
        'heights': list(field.heights.heights),
        'provenance': field.provenance.value,
        'complex': bool(np.iscomplexobj(field.slices)),
    }
    with open(directory / "field.meta.json", 'w') as fh:
        json.dump(header, fh, indent=2)
    return directory


def load_field(directory: Path):
    from core.dirichlet import HeightGrid, SolutionField
    directory = Path(directory)
    with open(directory / "field.meta.json", 'r') as fh:
        header = json.load(fh)
    domain = _domain_from_header(header['domain'])
    heights = HeightGrid(tuple(header['heights']))
    slices = np.stack([load_grid(directory / f"slice_{j:04d}").values for j in range(heights.count)])
    boundary = load_grid(directory / "boundary") if (directory / "boundary.bin").exists() else None
    return SolutionField(domain, heights, slices, header['provenance'], boundary)


def _to_jsonable(value: Any):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, 'value') and hasattr(value, 'name'):
        return value.value
    raise TypeError(f"cannot serialise {type(value).__name__}")


def write_report(report: Dict, out_dir: Path, name: str) -> Path:
    """Write ``<name>.report.json`` with run metadata around the suite's own fields."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    document = {
        'experiment': get_experiment_name(),
        'run_id': get_run_id(),
        'created_at': datetime.now().isoformat(),
    }
    document.update(report)
    path = out_dir / f"{name}.report.json"
    with open(path, 'w') as fh:
        json.dump(document, fh, indent=2, default=_to_jsonable)
    logger.info(f"Report written to {path}")
    return path


def format_floats(table: pa.Table) -> pa.Table:
    """Render every floating-point column with 17 significant digits."""
    columns = []
    for column in table.columns:
        if pa.types.is_floating(column.type):
            column = pa.array([None if v is None else FLOAT_FORMAT.format(v) for v in column.to_pylist()], pa.string())
        columns.append(column)
    return pa.table(columns, names=table.column_names)


def write_csv(table: pa.Table, out_dir: Path, name: str) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{name}.csv"
    pcsv.write_csv(format_floats(table), path, write_options=pcsv.WriteOptions(quoting_style="needed"))

    debug.log_report_output(
        name=name,
        row_count=table.num_rows,
        column_count=table.num_columns,
        path=str(path),
        schema=[{"name": f.name, "type": str(f.type)} for f in table.schema],
    )
    print(f"Wrote {name}: {table.num_rows} rows, {table.num_columns} cols ({', '.join(table.column_names)})")
    return path


def load_state(suite: str) -> dict:
    """Last-run record for a suite from ``.state/<suite>.json``."""
    state_file = Path(".state") / f"{suite}.json"
    if state_file.exists():
        with open(state_file, 'r') as f:
            return json.load(f)
    return {}


def save_state(suite: str, state_data: dict) -> str:
    old_state = load_state(suite)

    state_data = state_data.copy()
    state_data['_metadata'] = {
        'updated_at': datetime.now().isoformat(),
        'run_id': get_run_id(),
        'experiment': get_experiment_name()
    }

    state_dir = Path(".state")
    state_dir.mkdir(parents=True, exist_ok=True)
    state_file = state_dir / f"{suite}.json"
    with open(state_file, 'w') as f:
        json.dump(state_data, f, indent=2, default=_to_jsonable)

    debug.log_state_change(suite, old_state, state_data)
    return str(state_file)
