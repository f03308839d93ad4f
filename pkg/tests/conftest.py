import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from app.config import get_config, reset_config  # noqa: E402
from app.graph_model import GcnModel, Graph, Layer  # noqa: E402
from app.io import load_graph, load_model  # noqa: E402
from app.perturbation import PerturbationBudget  # noqa: E402

EXAMPLES = ROOT / "data" / "examples"
WORKED_GRAPH = EXAMPLES / "worked_example_graph.json"
WORKED_MODEL = EXAMPLES / "worked_example_model.json"


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    """Каждый тест получает свой конфиг, историю и каталог результатов"""
    monkeypatch.delenv("GCN_CERT_ORACLE_CAP", raising=False)
    reset_config()
    cfg = get_config()
    cfg.config_file = str(tmp_path / "config.json")
    cfg.storage.db_path = str(tmp_path / "runs.db")
    cfg.storage.results_dir = str(tmp_path / "results")
    yield cfg
    reset_config()


@pytest.fixture
def worked_graph() -> Graph:
    return load_graph(WORKED_GRAPH)


@pytest.fixture
def worked_model() -> GcnModel:
    return load_model(WORKED_MODEL)


@pytest.fixture
def unit_budget() -> PerturbationBudget:
    return PerturbationBudget(1, 1)


@pytest.fixture
def flip_sensitive():
    """Один узел, один признак: флип меняет метку (отступ 0.1 → −0.4)"""
    graph = Graph(np.zeros((1, 1)), np.array([[1.0]]))
    model = GcnModel((Layer(np.array([[0.5, 0.0]]), np.array([-0.4, 0.0])),))
    return graph, model
