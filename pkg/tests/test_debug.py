import duckdb

from main import EXIT_OK, main
from helpers import CONFIG_DIR


def test_debug_log_is_off_by_default(tmp_path):
    assert main(['rh-check', '--config', str(CONFIG_DIR / "rh_certify.toml"), '--out', str(tmp_path / "out")]) == EXIT_OK
    assert not (tmp_path / "data" / "runs.db").exists()


def test_run_and_stages_are_logged(tmp_path, monkeypatch):
    monkeypatch.setenv('CAMPANATO_DEBUG_LOG', 'true')
    assert main(['rh-check', '--config', str(CONFIG_DIR / "rh_certify.toml"), '--out', str(tmp_path / "out")]) == EXIT_OK

    with duckdb.connect(str(tmp_path / "data" / "runs.db")) as conn:
        status, total = conn.execute("SELECT status, total_stages FROM runs WHERE run_id = 'pytest'").fetchone()
    assert status == 'completed'
    assert total >= 2

    with duckdb.connect(str(tmp_path / "data" / "campanato" / "debug" / "logs.db")) as conn:
        stages = [row[0] for row in conn.execute("SELECT stage FROM stages ORDER BY id").fetchall()]
        outputs = conn.execute("SELECT name, row_count FROM report_outputs").fetchall()
        changed = conn.execute("SELECT suite FROM state_changes").fetchall()
    assert stages[:2] == ['rh_certify:levels', 'rh_certify:invariances']
    assert ('rh_certify', 3) in outputs
    assert changed == [('rh_certify',)]
