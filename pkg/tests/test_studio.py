from pathlib import Path

import pytest

from app.studio import CertifierStudio
from tests.conftest import WORKED_GRAPH, WORKED_MODEL


@pytest.fixture
def studio():
    s = CertifierStudio()
    yield s
    s.db.close()


def _noop(*args, **kwargs):
    pass


def test_certify_needs_files(studio):
    msg, table, _ = studio.run_certify(1, 1, "poly-topk", "both", False, progress=_noop)
    assert msg.startswith("❌")
    assert table == []


def test_certify_records_run(studio, isolated_config):
    msg, _ = studio.load_files(str(WORKED_GRAPH), str(WORKED_MODEL))
    assert msg.startswith("✅")
    msg, table, stats = studio.run_certify(1, 1, "poly-topk", "both", True, progress=_noop)
    assert "Сертифицировано: 2/2" in msg
    assert [row[2] for row in table] == ["✅", "✅"]
    runs = studio.get_runs_for_display()
    assert len(runs) == 1
    run_id = runs[0][1]
    assert "| 0 |" in studio.view_run(run_id)
    assert "worked_example_graph" in studio.search_runs("worked")
    assert (Path(isolated_config.storage.results_dir) / f"run_{run_id}.csv").exists()
    assert studio.delete_runs([run_id]).startswith("✅")
    assert studio.get_runs_for_display() == []


def test_sweep_and_collective(studio):
    studio.load_files(str(WORKED_GRAPH), str(WORKED_MODEL))
    msg, table = studio.run_sweep(1, 1, 3, "poly-topk", "both")
    assert msg.startswith("✅") and len(table) == 3
    msg, table = studio.run_collective(1, 4, "poly-topk", "both")
    assert msg.startswith("✅")
    assert [row[1] for row in table] == [1, 1]


def test_settings(studio):
    assert studio.update_settings("bogus", "both", 1, "backsub", True, 0.0, 100, 10).startswith("❌")
    msg = studio.update_settings("interval-max", "delete-only", 2, "forward", False, 0.5, 100, 10)
    assert msg.startswith("✅")
    assert studio.config.certifier.method == "interval-max"
    assert studio.config.collective.search_cap == 10
