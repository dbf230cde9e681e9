import json

import numpy as np
import pyarrow as pa
import pytest

from core.dirichlet import HeightGrid, poisson_extension
from core.grid import GridFunction
from utils import load_field, load_grid, load_state, save_field, save_grid, save_state, write_csv, write_report
from utils.io import read_array, write_array
from helpers import mode


def test_grid_binary_keeps_domain_and_values(tmp_path, line):
    f = GridFunction(line, mode(line).values + 1j * mode(line, 2).values)
    path = save_grid(f, tmp_path / "f")
    assert path.read_bytes()[:8] == np.float64(f.values[0].real).astype('<f8').tobytes()
    loaded = load_grid(tmp_path / "f")
    assert loaded.domain == line
    assert np.array_equal(loaded.values, f.values)
    with open(tmp_path / "f.meta.json") as fh:
        assert json.load(fh)['complex'] is True


def test_truncated_binary_is_rejected(tmp_path):
    write_array(tmp_path / "x.bin", np.arange(10.0))
    with pytest.raises(ValueError, match="expected 12"):
        read_array(tmp_path / "x.bin", (12,))


def test_field_dump_keeps_heights_and_provenance(tmp_path, line, line_engine):
    heights = HeightGrid.geometric(0.25, 4.0, 6)
    field = poisson_extension(line_engine, mode(line), heights)
    loaded = load_field(save_field(field, tmp_path / "field"))
    assert loaded.heights == heights
    assert loaded.provenance is field.provenance
    assert np.array_equal(loaded.slices, field.slices)
    assert np.array_equal(loaded.boundary.values, field.boundary.values)


def test_csv_floats_use_seventeen_digits(tmp_path):
    table = pa.table({"name": ["a", "b"], "value": [0.1, None], "count": [1, 2]})
    path = write_csv(table, tmp_path, "demo")
    text = path.read_text()
    assert "0.10000000000000001" in text
    assert text.splitlines()[0].replace('"', '') == "name,value,count"


def test_report_carries_run_metadata(tmp_path):
    path = write_report({'suite': 'demo', 'summary': {'value': np.float64(2.5)}}, tmp_path, "demo")
    with open(path) as fh:
        document = json.load(fh)
    assert document['run_id'] == 'pytest'
    assert document['summary']['value'] == 2.5


def test_state_round_trip():
    assert load_state("demo") == {}
    save_state("demo", {'passed': True, 'checks': {'a': True}})
    state = load_state("demo")
    assert state['passed'] is True
    assert state['_metadata']['run_id'] == 'pytest'
