import io
import json

import numpy as np
import pytest

from app.errors import DataError, DimensionError
from app.graph_model import predict
from app.io import (
    CERTIFY_FIELDS, format_real, graph_from_dict, load_graph, load_labels, load_model, model_from_dict,
    save_graph, save_model, write_csv,
)
from app.synthetic import random_graph, random_model
from tests.conftest import WORKED_GRAPH, WORKED_MODEL


def _graph_doc(**overrides):
    doc = {"num_nodes": 2, "num_features": 2, "edges": [[0, 1]], "features": [[1, 0], [0, 1]]}
    doc.update(overrides)
    return doc


def test_load_worked_example():
    graph = load_graph(WORKED_GRAPH)
    model = load_model(WORKED_MODEL)
    assert graph.num_nodes == 2 and graph.num_features == 4
    assert graph.adjacency.tolist() == [[0.0, 1.0], [1.0, 0.0]]
    assert model.num_layers == 2
    assert predict(model, graph).scores[0].tolist() == pytest.approx([1.5, 2.5])


def test_empty_edges_give_isolated_nodes():
    graph = graph_from_dict(_graph_doc(edges=[]))
    assert not graph.adjacency.any()


def test_edges_are_symmetrized_and_deduplicated():
    graph = graph_from_dict(_graph_doc(edges=[[0, 1], [1, 0], [0, 1]]))
    assert graph.adjacency.tolist() == [[0.0, 1.0], [1.0, 0.0]]


@pytest.mark.parametrize("overrides, field", [
    ({"features": [[1, 2], [0, 1]]}, "features[0][1]"),
    ({"features": [[1, 0]]}, "features"),
    ({"features": [[1, 0], [0]]}, "features[1]"),
    ({"edges": [[0, 2]]}, "edges[0]"),
    ({"edges": [[1, 1]]}, "edges[0]"),
    ({"edges": [[0, 1, 1]]}, "edges[0]"),
    ({"num_nodes": "2"}, "num_nodes"),
    ({"colour": "red"}, "colour"),
])
def test_graph_errors_name_the_field(overrides, field):
    with pytest.raises(DataError) as err:
        graph_from_dict(_graph_doc(**overrides))
    assert err.value.field == field


def test_missing_key():
    doc = _graph_doc()
    del doc["edges"]
    with pytest.raises(DataError) as err:
        graph_from_dict(doc)
    assert err.value.field == "edges"


def test_json_error_reports_line(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "num_nodes": 2,\n  "edges": [\n}\n', encoding="utf-8")
    with pytest.raises(DataError) as err:
        load_graph(path)
    assert err.value.line == 4


def test_missing_file(tmp_path):
    with pytest.raises(DataError):
        load_model(tmp_path / "nope.json")


def test_model_errors():
    with pytest.raises(DimensionError):
        model_from_dict({"layers": [
            {"weight": [[1.0, 0.0]], "bias": [0.0, 0.0]},
            {"weight": [[1.0]], "bias": [0.0]},
        ]})
    with pytest.raises(DataError) as err:
        model_from_dict({"layers": [{"weight": [[1.0]], "bias": [0.0, 1.0]}]})
    assert err.value.field == "layers[0].bias"
    with pytest.raises(DataError) as err:
        model_from_dict({"layers": [{"weight": [[1.0]], "bias": [0.0], "act": "relu"}]})
    assert err.value.field == "layers[0].act"
    with pytest.raises(DataError):
        model_from_dict({"layers": [{"weight": [[float("nan")]], "bias": [0.0]}]})


def test_single_layer_model():
    model = model_from_dict({"layers": [{"weight": [[1.0, -1.0]], "bias": [0.0, 0.5]}]})
    assert model.num_layers == 1 and model.num_classes == 2


def test_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    graph = random_graph(rng, 5, 3)
    model = random_model(rng, (3, 4, 2))
    save_graph(graph, tmp_path / "g.json")
    save_model(model, tmp_path / "m.json")
    again_graph = load_graph(tmp_path / "g.json")
    again_model = load_model(tmp_path / "m.json")
    assert np.array_equal(again_graph.adjacency, graph.adjacency)
    assert np.array_equal(again_graph.features, graph.features)
    for a, b in zip(again_model.layers, model.layers):
        assert np.array_equal(a.weight, b.weight)
        assert np.array_equal(a.bias, b.bias)


def test_load_labels(tmp_path):
    path = tmp_path / "labels.json"
    path.write_text(json.dumps([0, -1, 1]), encoding="utf-8")
    assert load_labels(path, 3).tolist() == [0, -1, 1]
    with pytest.raises(DataError):
        load_labels(path, 4)


def test_csv_cells():
    out = io.StringIO()
    write_csv(out, CERTIFY_FIELDS, [
        {"node": 0, "margin": 0.1, "certified": True, "counterexample_flips": ""},
        {"node": 1, "margin": np.float64(-0.25), "certified": np.bool_(False), "counterexample_flips": "1:0;1:2"},
    ])
    assert out.getvalue() == (
        "node,margin,certified,counterexample_flips\n"
        "0,0.1,true,\n"
        "1,-0.25,false,1:0;1:2\n"
    )


def test_format_real():
    assert format_real(float("inf")) == "inf"
    assert float(format_real(0.1 + 0.2)) == 0.1 + 0.2
