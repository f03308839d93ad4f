"""
Атрибутированный граф, GCN-классификатор и конкретный прямой проход.

Слой l: H_{l+1} = ReLU(GC(H_l) W_l + b_l), где GC(H) = Ã H;
последний слой без ReLU (оценки классов могут быть отрицательными).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from app.errors import DataError, DimensionError


@dataclass(frozen=True, eq=False)
class Graph:
    """Неориентированный граф с бинарными признаками узлов"""
    adjacency: np.ndarray  # (n, n), {0, 1}, симметричная
    features: np.ndarray  # (n, m0), {0, 1}

    def __post_init__(self):
        adjacency = np.array(self.adjacency, dtype=np.float64)
        features = np.array(self.features, dtype=np.float64)
        if features.ndim != 2:
            raise DataError("features must be a 2-D matrix", field="features")
        n = features.shape[0]
        if n < 1:
            raise DataError("graph must have at least one node", field="num_nodes")
        if adjacency.shape != (n, n):
            raise DimensionError(
                f"adjacency shape {adjacency.shape} does not match {n} nodes", field="adjacency")
        if not np.isin(adjacency, (0.0, 1.0)).all():
            raise DataError("adjacency entries must be 0 or 1", field="adjacency")
        if not np.array_equal(adjacency, adjacency.T):
            raise DataError("adjacency must be symmetric", field="adjacency")
        if not np.isin(features, (0.0, 1.0)).all():
            i, j = np.argwhere(~np.isin(features, (0.0, 1.0)))[0]
            raise DataError("feature entries must be 0 or 1", field=f"features[{i}][{j}]")
        adjacency.setflags(write=False)
        features.setflags(write=False)
        object.__setattr__(self, "adjacency", adjacency)
        object.__setattr__(self, "features", features)

    @property
    def num_nodes(self) -> int:
        return self.features.shape[0]

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    def with_features(self, features: np.ndarray) -> "Graph":
        return Graph(self.adjacency, features)

    def permuted(self, order: Sequence[int]) -> "Graph":
        """Перенумерация узлов: новый узел i: старый узел order[i]"""
        order = np.asarray(order)
        return Graph(self.adjacency[np.ix_(order, order)], self.features[order])

    @classmethod
    def from_edges(cls, num_nodes: int, edges, features) -> "Graph":
        adjacency = np.zeros((num_nodes, num_nodes))
        for i, j in edges:
            adjacency[i, j] = adjacency[j, i] = 1.0
        return cls(adjacency, np.asarray(features, dtype=np.float64))


@dataclass(frozen=True, eq=False)
class Layer:
    weight: np.ndarray  # (m_l, m_{l+1})
    bias: np.ndarray  # (m_{l+1},)

    def __post_init__(self):
        weight = np.array(self.weight, dtype=np.float64)
        bias = np.array(self.bias, dtype=np.float64)
        if weight.ndim != 2 or bias.ndim != 1 or bias.shape[0] != weight.shape[1]:
            raise DimensionError(f"layer weight {weight.shape} and bias {bias.shape} do not chain")
        weight.setflags(write=False)
        bias.setflags(write=False)
        object.__setattr__(self, "weight", weight)
        object.__setattr__(self, "bias", bias)


@dataclass(frozen=True, eq=False)
class GcnModel:
    """Упорядоченные слои (W_l, b_l)"""
    layers: Tuple[Layer, ...]

    def __post_init__(self):
        layers = tuple(l if isinstance(l, Layer) else Layer(*l) for l in self.layers)
        if not layers:
            raise DataError("model must have at least one layer", field="layers")
        for idx in range(1, len(layers)):
            if layers[idx - 1].weight.shape[1] != layers[idx].weight.shape[0]:
                raise DimensionError(
                    f"layer {idx - 1} outputs {layers[idx - 1].weight.shape[1]} columns "
                    f"but layer {idx} expects {layers[idx].weight.shape[0]} rows",
                    field=f"layers[{idx}].weight")
        object.__setattr__(self, "layers", layers)

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].weight.shape[0]

    @property
    def num_classes(self) -> int:
        return self.layers[-1].weight.shape[1]

    @property
    def num_parameters(self) -> int:
        return sum(l.weight.size + l.bias.size for l in self.layers)

    def parameters(self) -> np.ndarray:
        """Все параметры одним вектором (W_0, b_0, W_1, ...)"""
        return np.concatenate([np.concatenate([l.weight.ravel(), l.bias]) for l in self.layers])

    def with_parameters(self, flat: np.ndarray) -> "GcnModel":
        flat = np.asarray(flat, dtype=np.float64)
        if flat.size != self.num_parameters:
            raise DimensionError(f"expected {self.num_parameters} parameters, got {flat.size}")
        layers: List[Layer] = []
        pos = 0
        for l in self.layers:
            w = flat[pos:pos + l.weight.size].reshape(l.weight.shape)
            pos += l.weight.size
            b = flat[pos:pos + l.bias.size]
            pos += l.bias.size
            layers.append(Layer(w, b))
        return GcnModel(tuple(layers))

    def check_input(self, num_features: int):
        if num_features != self.input_dim:
            raise DimensionError(
                f"model expects {self.input_dim} input features, graph has {num_features}",
                field="layers[0].weight")


@dataclass(frozen=True, eq=False)
class Prediction:
    scores: np.ndarray  # (n, |C|)
    labels: np.ndarray  # (n,)


def normalize_adjacency(graph: Graph) -> np.ndarray:
    """Ã = D^{-1/2} (A + I) D^{-1/2}"""
    a_hat = graph.adjacency + np.eye(graph.num_nodes)
    deg = a_hat.sum(axis=1)
    # Ã_ij = (A + I)_ij / sqrt(d_i d_j)
    return a_hat / np.sqrt(np.outer(deg, deg))


def argmax_labels(scores: np.ndarray) -> np.ndarray:
    """Построчный argmax; при равенстве: наименьший индекс"""
    return np.argmax(scores, axis=-1)


def forward(model: GcnModel, norm_adj: np.ndarray, features: np.ndarray, relu: bool = True) -> np.ndarray:
    """
    Прямой проход. features может иметь ведущие batch-оси: (..., n, m0).
    relu=False отключает все активации (линейная композиция слоев).
    """
    h = np.asarray(features, dtype=np.float64)
    model.check_input(h.shape[-1])
    if h.shape[-2] != norm_adj.shape[0]:
        raise DimensionError(f"features have {h.shape[-2]} rows, adjacency has {norm_adj.shape[0]}")
    last = model.num_layers - 1
    for idx, layer in enumerate(model.layers):
        h = (norm_adj @ h) @ layer.weight + layer.bias
        if relu and idx < last:
            h = np.maximum(h, 0.0)
    return h


def predict(model: GcnModel, graph: Graph) -> Prediction:
    scores = forward(model, normalize_adjacency(graph), graph.features)
    return Prediction(scores=scores, labels=argmax_labels(scores))


def neighborhood(norm_adj: np.ndarray, node: int, hops: int) -> np.ndarray:
    """Узлы на расстоянии ≤ hops (включая сам узел), по возрастанию"""
    reach = np.zeros(norm_adj.shape[0], dtype=bool)
    reach[node] = True
    for _ in range(hops):
        reach = reach | (norm_adj[reach] > 0).any(axis=0)
    return np.flatnonzero(reach)
