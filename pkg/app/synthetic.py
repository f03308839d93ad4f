"""
Случайные графы и модели малого размера для тестов, демо и обучения.
Вся случайность идет через явно засеянный numpy Generator.
"""
from __future__ import annotations

from typing import Sequence, Tuple

import numpy as np

from app.graph_model import GcnModel, Graph, Layer
from app.perturbation import PerturbationBudget


def random_graph(rng: np.random.Generator, num_nodes: int, num_features: int,
                 edge_prob: float = 0.4, feature_prob: float = 0.5) -> Graph:
    upper = np.triu(rng.random((num_nodes, num_nodes)) < edge_prob, k=1)
    adjacency = (upper | upper.T).astype(np.float64)
    features = (rng.random((num_nodes, num_features)) < feature_prob).astype(np.float64)
    return Graph(adjacency, features)


def random_model(rng: np.random.Generator, dims: Sequence[int], scale: float = 1.0) -> GcnModel:
    """dims = (m0, m1, ..., |C|)"""
    return GcnModel(tuple(
        Layer(rng.normal(0.0, scale, size=(a, b)), rng.normal(0.0, 0.1 * scale, size=b))
        for a, b in zip(dims[:-1], dims[1:])
    ))


def random_instance(seed: int, max_nodes: int = 6, max_features: int = 5, max_width: int = 4,
                    num_classes: int = 2, max_local: int = 2,
                    max_global: int = 3) -> Tuple[Graph, GcnModel, PerturbationBudget]:
    """Граф, двухслойная GCN и бюджет, полностью определяемые seed"""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, max_nodes + 1))
    m0 = int(rng.integers(2, max_features + 1))
    width = int(rng.integers(2, max_width + 1))
    graph = random_graph(rng, n, m0)
    model = random_model(rng, (m0, width, num_classes))
    budget = PerturbationBudget(int(rng.integers(1, max_local + 1)), int(rng.integers(1, max_global + 1)))
    return graph, model, budget


def planted_labels(rng: np.random.Generator, graph: Graph, num_classes: int = 2) -> np.ndarray:
    """Метки от скрытого линейного правила по сглаженным признакам соседей"""
    hidden = rng.normal(size=(graph.num_features, num_classes))
    smoothed = (graph.adjacency + np.eye(graph.num_nodes)) @ graph.features
    return np.argmax(smoothed @ hidden, axis=1)
