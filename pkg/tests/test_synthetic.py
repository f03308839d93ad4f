import numpy as np

from app.synthetic import planted_labels, random_graph, random_instance, random_model


def test_instance_is_seeded():
    g1, m1, b1 = random_instance(4)
    g2, m2, b2 = random_instance(4)
    assert np.array_equal(g1.features, g2.features)
    assert np.array_equal(g1.adjacency, g2.adjacency)
    assert np.array_equal(m1.parameters(), m2.parameters())
    assert b1 == b2


def test_instance_ranges():
    for seed in range(50):
        graph, model, budget = random_instance(seed)
        assert 2 <= graph.num_nodes <= 6
        assert 2 <= graph.num_features <= 5
        assert model.num_layers == 2 and 2 <= model.layers[0].weight.shape[1] <= 4
        assert 1 <= budget.local_limit <= 2 and 1 <= budget.global_limit <= 3


def test_graph_has_no_self_loops():
    graph = random_graph(np.random.default_rng(0), 8, 3, edge_prob=1.0)
    assert not np.diag(graph.adjacency).any()
    assert graph.adjacency.sum() == 8 * 7


def test_planted_labels_shape():
    rng = np.random.default_rng(0)
    graph = random_graph(rng, 10, 4)
    labels = planted_labels(rng, graph, num_classes=3)
    assert labels.shape == (10,)
    assert ((labels >= 0) & (labels < 3)).all()
    assert random_model(rng, (4, 3, 3)).num_classes == 3
