import numpy as np
import pytest

from app.certification import certify_sound
from app.collective import NodeLimit, max_robust_limit, robust_limits
from app.errors import DataError
from app.graph_model import GcnModel, Graph, Layer
from app.perturbation import PerturbationBudget, exact_max_robust_limits
from app.synthetic import random_instance


def test_worked_example_limits(worked_model, worked_graph):
    limits = robust_limits(worked_model, worked_graph, 1, search_cap=4)
    assert limits.limits.tolist() == [1, 1]
    assert not limits.never_certified.any()
    assert not limits.capped.any()
    assert len(limits) == 2


def test_single_node_search(worked_model, worked_graph):
    assert max_robust_limit(worked_model, worked_graph, 1, node=0, cap=4) == NodeLimit(1, False, False)
    assert max_robust_limit(worked_model, worked_graph, 1, node=0, cap=0) == NodeLimit(0, False, True)


def test_single_node_search_keeps_never_certified_flag():
    graph = Graph(np.zeros((1, 1)), np.array([[1.0]]))
    model = GcnModel((Layer(np.zeros((1, 2)), np.zeros(2)),))
    limit = max_robust_limit(model, graph, 1, node=0, cap=3)
    assert limit.limit == 0
    assert limit.never_certified
    assert not limit.capped


def test_single_node_search_rejects_unknown_node(worked_model, worked_graph):
    with pytest.raises(DataError):
        max_robust_limit(worked_model, worked_graph, 1, node=5, cap=2)


def test_search_cap_reached(worked_model, worked_graph):
    limits = robust_limits(worked_model, worked_graph, 1, search_cap=1)
    assert limits.limits.tolist() == [1, 1]
    assert limits.capped.all()


def test_tied_node_is_never_certified():
    graph = Graph(np.zeros((1, 1)), np.array([[1.0]]))
    model = GcnModel((Layer(np.zeros((1, 2)), np.zeros(2)),))
    limits = robust_limits(model, graph, 1, search_cap=3)
    assert limits.limits.tolist() == [0]
    assert limits.never_certified.tolist() == [True]


def test_negative_cap_rejected(worked_model, worked_graph):
    with pytest.raises(DataError):
        robust_limits(worked_model, worked_graph, 1, search_cap=-1)
    with pytest.raises(DataError):
        max_robust_limit(worked_model, worked_graph, 1, node=0, cap=-1)


@pytest.mark.parametrize("seed", range(25))
def test_limits_between_interval_and_oracle(seed):
    graph, model, budget = random_instance(seed, max_global=1)
    cap = 3
    poly = robust_limits(model, graph, budget.local_limit, cap)
    interval = robust_limits(model, graph, budget.local_limit, cap, method="interval-topk")
    oracle = exact_max_robust_limits(model, graph, budget.local_limit, cap)
    # у оракула −1 означает «неустойчив уже без флипов»
    oracle = np.maximum(oracle, 0)
    assert (poly.limits <= oracle).all()
    assert (poly.limits >= interval.limits).all()


@pytest.mark.parametrize("seed", range(5))
def test_vector_matches_single_node_search(seed):
    graph, model, budget = random_instance(seed)
    limits = robust_limits(model, graph, budget.local_limit, 3)
    for node in range(graph.num_nodes):
        assert max_robust_limit(model, graph, budget.local_limit, node, 3) == limits[node]


@pytest.mark.parametrize("seed", range(20))
def test_limits_agree_with_monotone_judgments(seed):
    graph, model, budget = random_instance(seed)
    cap = 3
    limits = robust_limits(model, graph, budget.local_limit, cap)
    for p in range(cap + 1):
        judgments = certify_sound(model, graph, PerturbationBudget(budget.local_limit, p))
        for j in judgments:
            expected = not limits.never_certified[j.node] and p <= limits.limits[j.node]
            assert j.certified == expected
