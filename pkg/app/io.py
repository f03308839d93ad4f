"""
Файлы графа и модели (JSON) и CSV с результатами.

Граф:   {"num_nodes", "num_features", "edges": [[i, j], ...], "features": [[0, 1, ...], ...]}
Модель: {"layers": [{"weight": [[...]], "bias": [...]}, ...]}
Числа пишутся кратчайшим представлением, которое читается обратно без потерь.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from pathlib import Path
from typing import IO, Iterable, List, Optional, Sequence, Union

import numpy as np

from app.errors import DataError
from app.graph_model import GcnModel, Graph, Layer

log = logging.getLogger("gcn_certifier")

PathLike = Union[str, Path]

GRAPH_KEYS = ("num_nodes", "num_features", "edges", "features")
MODEL_KEYS = ("layers",)
LAYER_KEYS = ("weight", "bias")

CERTIFY_FIELDS = ("node", "margin", "certified", "counterexample_flips")
SWEEP_FIELDS = ("p_l", "p_g", "lower", "upper", "runtime_ms")
COLLECTIVE_FIELDS = ("node", "max_robust_limit", "never_certified")
ORACLE_FIELDS = ("node", "robust", "min_margin")


def _read_json(path: PathLike) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise DataError(f"cannot read {path}: {e.strerror}")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: {e.msg}", line=e.lineno)
    if not isinstance(doc, dict):
        raise DataError(f"{path}: top level must be an object")
    return doc


def _check_keys(doc: dict, expected: Sequence[str], where: str = ""):
    unknown = sorted(set(doc) - set(expected))
    if unknown:
        raise DataError(f"unknown key {unknown[0]!r}", field=f"{where}{unknown[0]}")
    missing = [k for k in expected if k not in doc]
    if missing:
        raise DataError(f"missing key {missing[0]!r}", field=f"{where}{missing[0]}")


def _int(value, field: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise DataError(f"expected an integer, got {value!r}", field=field)
    return value


def _real_array(value, ndim: int, field: str) -> np.ndarray:
    try:
        arr = np.array(value, dtype=np.float64)
    except (TypeError, ValueError):
        raise DataError("expected a rectangular array of numbers", field=field)
    if arr.ndim != ndim:
        raise DataError(f"expected a {ndim}-D array, got {arr.ndim}-D", field=field)
    if not np.isfinite(arr).all():
        raise DataError("non-finite number", field=field)
    return arr


def graph_from_dict(doc: dict) -> Graph:
    _check_keys(doc, GRAPH_KEYS)
    n = _int(doc["num_nodes"], "num_nodes")
    m0 = _int(doc["num_features"], "num_features")
    if n < 1:
        raise DataError("graph must have at least one node", field="num_nodes")

    rows = doc["features"]
    if not isinstance(rows, list) or len(rows) != n:
        raise DataError(f"expected {n} feature rows", field="features")
    features = np.zeros((n, m0))
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != m0:
            raise DataError(f"expected {m0} features", field=f"features[{i}]")
        for j, v in enumerate(row):
            if isinstance(v, bool) or v not in (0, 1):
                raise DataError(f"feature value {v!r} is not 0 or 1", field=f"features[{i}][{j}]")
            features[i, j] = v

    if not isinstance(doc["edges"], list):
        raise DataError("expected a list of [i, j] pairs", field="edges")
    adjacency = np.zeros((n, n))
    for e, edge in enumerate(doc["edges"]):
        if not isinstance(edge, list) or len(edge) != 2:
            raise DataError("edge must be a pair [i, j]", field=f"edges[{e}]")
        i, j = (_int(v, f"edges[{e}]") for v in edge)
        if not (0 <= i < n and 0 <= j < n):
            raise DataError(f"edge ({i}, {j}) references a node outside 0..{n - 1}", field=f"edges[{e}]")
        if i == j:
            raise DataError(f"self-loop on node {i}; self-loops are added by normalization", field=f"edges[{e}]")
        adjacency[i, j] = adjacency[j, i] = 1.0
    return Graph(adjacency, features)


def graph_to_dict(graph: Graph) -> dict:
    i, j = np.nonzero(np.triu(graph.adjacency, k=1))
    return {
        "num_nodes": graph.num_nodes,
        "num_features": graph.num_features,
        "edges": [[int(a), int(b)] for a, b in zip(i, j)],
        "features": graph.features.astype(int).tolist(),
    }


def model_from_dict(doc: dict) -> GcnModel:
    _check_keys(doc, MODEL_KEYS)
    if not isinstance(doc["layers"], list):
        raise DataError("expected a list of layers", field="layers")
    layers: List[Layer] = []
    for idx, layer in enumerate(doc["layers"]):
        where = f"layers[{idx}]."
        if not isinstance(layer, dict):
            raise DataError("layer must be an object", field=f"layers[{idx}]")
        _check_keys(layer, LAYER_KEYS, where)
        weight = _real_array(layer["weight"], 2, where + "weight")
        bias = _real_array(layer["bias"], 1, where + "bias")
        if bias.shape[0] != weight.shape[1]:
            raise DataError(f"bias has {bias.shape[0]} entries, weight has {weight.shape[1]} columns",
                            field=where + "bias")
        layers.append(Layer(weight, bias))
    return GcnModel(tuple(layers))


def model_to_dict(model: GcnModel) -> dict:
    return {"layers": [{"weight": l.weight.tolist(), "bias": l.bias.tolist()} for l in model.layers]}


def load_graph(path: PathLike) -> Graph:
    graph = graph_from_dict(_read_json(path))
    log.debug("loaded graph %s: %d nodes, %d features", path, graph.num_nodes, graph.num_features)
    return graph


def load_model(path: PathLike) -> GcnModel:
    model = model_from_dict(_read_json(path))
    log.debug("loaded model %s: %d layers, %d parameters", path, model.num_layers, model.num_parameters)
    return model


def _write_json(doc: dict, path: PathLike):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def save_graph(graph: Graph, path: PathLike):
    _write_json(graph_to_dict(graph), path)


def save_model(model: GcnModel, path: PathLike):
    _write_json(model_to_dict(model), path)


def load_labels(path: PathLike, num_nodes: int) -> np.ndarray:
    """Список меток узлов; −1: узел без метки"""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise DataError(f"cannot read {path}: {e.strerror}")
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: {e.msg}", line=e.lineno)
    if not isinstance(doc, list) or len(doc) != num_nodes:
        raise DataError(f"expected a list of {num_nodes} labels", field="labels")
    return np.array([_int(v, f"labels[{i}]") for i, v in enumerate(doc)], dtype=int)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def format_real(value: float) -> str:
    """repr: кратчайшая запись, однозначно читаемая обратно"""
    value = float(value)
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(value)


def format_bool(value: bool) -> str:
    return "true" if value else "false"


def write_csv(stream: IO[str], fields: Sequence[str], rows: Iterable[dict]):
    writer = csv.DictWriter(stream, fieldnames=list(fields), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _cell(v) for k, v in row.items()})


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return format_bool(bool(value))
    if isinstance(value, (float, np.floating)):
        return format_real(value)
    if value is None:
        return ""
    return str(value)


def open_output(path: Optional[PathLike]):
    """Файл для записи результатов или None для stdout"""
    if path is None or str(path) == "-":
        return None
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", encoding="utf-8", newline="")
