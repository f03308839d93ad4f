import math

import numpy as np
import pytest

from app.errors import DataError, DimensionError
from app.graph_model import (
    GcnModel, Graph, Layer, argmax_labels, forward, neighborhood, normalize_adjacency, predict,
)
from app.synthetic import random_graph, random_model


def test_normalize_two_nodes():
    graph = Graph.from_edges(2, [(0, 1)], np.zeros((2, 1)))
    assert normalize_adjacency(graph) == pytest.approx(np.full((2, 2), 0.5))


def test_normalize_isolated_node():
    graph = Graph(np.zeros((1, 1)), np.zeros((1, 3)))
    assert normalize_adjacency(graph) == pytest.approx(np.array([[1.0]]))


def test_normalize_path():
    graph = Graph.from_edges(3, [(0, 1), (1, 2)], np.zeros((3, 1)))
    norm = normalize_adjacency(graph)
    assert norm[0, 1] == pytest.approx(1 / math.sqrt(6))
    assert norm[1, 1] == pytest.approx(1 / 3)
    assert norm[0, 2] == 0.0
    assert np.array_equal(norm, norm.T)


def test_forward_worked_example(worked_model, worked_graph):
    pred = predict(worked_model, worked_graph)
    assert pred.scores[0].tolist() == pytest.approx([1.5, 2.5])
    assert pred.labels.tolist() == [1, 1]


def test_forward_last_layer_is_linear():
    graph = Graph(np.zeros((1, 1)), np.array([[1.0]]))
    model = GcnModel((Layer([[-1.0, 1.0]], [0.0, 0.0]),))
    scores = forward(model, normalize_adjacency(graph), graph.features)
    assert scores.tolist() == [[-1.0, 1.0]]


def test_forward_batch_matches_single():
    rng = np.random.default_rng(3)
    graph = random_graph(rng, 4, 3)
    model = random_model(rng, (3, 4, 2))
    norm = normalize_adjacency(graph)
    other = 1.0 - graph.features
    batch = forward(model, norm, np.stack([graph.features, other]))
    assert batch[0] == pytest.approx(forward(model, norm, graph.features))
    assert batch[1] == pytest.approx(forward(model, norm, other))


def test_ties_pick_lowest_label():
    assert argmax_labels(np.array([[1.0, 1.0], [0.0, 2.0]])).tolist() == [0, 1]


def test_graph_rejects_bad_input():
    with pytest.raises(DataError) as err:
        Graph(np.zeros((2, 2)), np.array([[0, 2], [1, 0]]))
    assert err.value.field == "features[0][1]"
    with pytest.raises(DataError):
        Graph(np.array([[0, 1], [0, 0]]), np.zeros((2, 1)))
    with pytest.raises(DimensionError):
        Graph(np.zeros((3, 3)), np.zeros((2, 1)))


def test_graph_is_read_only():
    graph = Graph.from_edges(2, [(0, 1)], [[1, 0], [0, 1]])
    with pytest.raises(ValueError):
        graph.features[0, 0] = 0.0


def test_model_rejects_broken_chain():
    with pytest.raises(DimensionError):
        GcnModel((Layer(np.zeros((2, 3)), np.zeros(3)), Layer(np.zeros((2, 2)), np.zeros(2))))
    with pytest.raises(DataError):
        GcnModel(())


def test_model_checks_input_width(worked_model):
    graph = Graph(np.zeros((1, 1)), np.zeros((1, 3)))
    with pytest.raises(DimensionError):
        predict(worked_model, graph)


def test_parameters_roundtrip(worked_model):
    flat = worked_model.parameters()
    assert flat.size == worked_model.num_parameters == 16
    again = worked_model.with_parameters(flat * 2)
    assert again.layers[1].weight == pytest.approx(2 * worked_model.layers[1].weight)
    with pytest.raises(DimensionError):
        worked_model.with_parameters(flat[:-1])


def test_permuted_graph_permutes_scores():
    rng = np.random.default_rng(11)
    graph = random_graph(rng, 5, 3)
    model = random_model(rng, (3, 3, 2))
    order = [4, 2, 0, 1, 3]
    base = predict(model, graph).scores
    moved = predict(model, graph.permuted(order)).scores
    assert moved == pytest.approx(base[order])


def test_neighborhood_hops():
    graph = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)], np.zeros((4, 1)))
    norm = normalize_adjacency(graph)
    assert neighborhood(norm, 0, 0).tolist() == [0]
    assert neighborhood(norm, 0, 1).tolist() == [0, 1]
    assert neighborhood(norm, 0, 2).tolist() == [0, 1, 2]
    assert neighborhood(norm, 1, 5).tolist() == [0, 1, 2, 3]
