from collections import Counter
from itertools import combinations

import numpy as np
import pytest

from app.errors import DataError, OracleInfeasibleError
from app.graph_model import GcnModel, Graph, Layer
from app.perturbation import (
    FlipSet, PerturbationBudget, allowed_mask, apply_flips, count_flip_sets, enumerate_perturbations,
    exact_max_robust_limits, exact_min_margins, exact_node_robustness, exact_robustness, sign_matrix,
)
from app.synthetic import random_instance


def test_budget_validation():
    assert PerturbationBudget(3, 1).effective_local == 1
    assert PerturbationBudget(2, 1, "add-only").with_global(3) == PerturbationBudget(2, 3, "add-only")
    with pytest.raises(DataError):
        PerturbationBudget(1, 1).with_global(-1)
    with pytest.raises(DataError):
        PerturbationBudget(-1, 1)
    with pytest.raises(DataError):
        PerturbationBudget(1, 1, "swap")


def test_sign_matrix():
    assert sign_matrix(np.array([[0, 1], [1, 0]])).tolist() == [[1.0, -1.0], [-1.0, 1.0]]


def test_apply_flips_is_involution():
    x = np.array([[1.0, 0.0], [0.0, 0.0]])
    flips = FlipSet(((0, 0), (1, 1)))
    once = apply_flips(x, flips)
    assert once.tolist() == [[0.0, 0.0], [0.0, 1.0]]
    assert apply_flips(once, flips).tolist() == x.tolist()
    with pytest.raises(DataError):
        apply_flips(x, FlipSet(((2, 0),)))


def test_flip_set_tokens():
    flips = FlipSet(((1, 2), (0, 3)))
    assert flips.flips == ((0, 3), (1, 2))
    assert flips.to_tokens() == "0:3;1:2"
    assert FlipSet.from_tokens("1:2;0:3") == flips
    assert FlipSet.from_tokens("") == FlipSet()
    with pytest.raises(DataError):
        FlipSet.from_tokens("0-1")


def test_enumeration_counts():
    x = np.zeros((1, 2))
    sets = list(enumerate_perturbations(x, PerturbationBudget(1, 1)))
    assert sets == [FlipSet(), FlipSet(((0, 0),)), FlipSet(((0, 1),))]
    assert len(list(enumerate_perturbations(x, PerturbationBudget(2, 2)))) == 4
    assert list(enumerate_perturbations(x, PerturbationBudget(2, 0))) == [FlipSet()]


def test_enumeration_respects_local_limit():
    x = np.zeros((2, 2))
    budget = PerturbationBudget(1, 2)
    sets = list(enumerate_perturbations(x, budget))
    # 1 + 4 + (пары из разных узлов: 2 * 2)
    assert len(sets) == 9
    assert all(s.respects(budget) for s in sets)
    assert len(set(sets)) == len(sets)


@pytest.mark.parametrize("mode, expected", [("both", 4), ("add-only", 2), ("delete-only", 2)])
def test_enumeration_modes(mode, expected):
    x = np.array([[1.0, 0.0], [0.0, 1.0]])
    sets = list(enumerate_perturbations(x, PerturbationBudget(1, 1, mode)))
    assert len(sets) == expected + 1
    for s in sets:
        for k, j in s:
            if mode == "add-only":
                assert x[k, j] == 0
            if mode == "delete-only":
                assert x[k, j] == 1


@pytest.mark.parametrize("seed", range(10))
def test_count_matches_enumeration(seed):
    graph, _, budget = random_instance(seed)
    sets = list(enumerate_perturbations(graph.features, budget))
    assert count_flip_sets(graph.features, budget) == len(sets)


def test_oracle_cap():
    x = np.zeros((4, 5))
    with pytest.raises(OracleInfeasibleError) as err:
        enumerate_perturbations(x, PerturbationBudget(5, 20), cap=1000)
    assert err.value.exit_code == 3


def test_oracle_cap_from_config(isolated_config):
    isolated_config.oracle.cap = 2
    with pytest.raises(OracleInfeasibleError):
        enumerate_perturbations(np.zeros((1, 2)), PerturbationBudget(1, 1))


def test_oracle_worked_example(worked_model, worked_graph, unit_budget):
    assert exact_node_robustness(worked_model, worked_graph, unit_budget, node=0)
    margins = exact_min_margins(worked_model, worked_graph, unit_budget)
    assert margins[0] == pytest.approx(0.5)
    broken = exact_robustness(worked_model, worked_graph, PerturbationBudget(1, 2))
    assert not broken.any()


def test_oracle_limits_worked_example(worked_model, worked_graph):
    limits = exact_max_robust_limits(worked_model, worked_graph, 1, search_cap=4)
    assert limits.tolist() == [1, 1]


def test_oracle_tied_scores_keep_lowest_label():
    graph = Graph(np.zeros((1, 1)), np.array([[1.0]]))
    model = GcnModel((Layer(np.zeros((1, 2)), np.zeros(2)),))
    assert exact_robustness(model, graph, PerturbationBudget(1, 1)).all()
    assert exact_min_margins(model, graph, PerturbationBudget(1, 1))[0] == 0.0


def _reference_sets(features, budget):
    candidates = [tuple(p) for p in np.argwhere(allowed_mask(features, budget.mode)).tolist()]
    out = []
    for size in range(min(budget.global_limit, len(candidates)) + 1):
        for combo in combinations(candidates, size):
            if all(c <= budget.local_limit for c in Counter(k for k, _ in combo).values()):
                out.append(FlipSet(combo))
    return out


@pytest.mark.parametrize("seed", range(30))
def test_enumeration_order_matches_filtered_combinations(seed):
    graph, _, budget = random_instance(seed)
    mode = ("both", "add-only", "delete-only")[seed % 3]
    budget = PerturbationBudget(budget.local_limit, budget.global_limit, mode)
    assert list(enumerate_perturbations(graph.features, budget)) == _reference_sets(graph.features, budget)


def test_enumeration_skips_sizes_the_local_limit_forbids():
    x = np.zeros((1, 200))
    sets = list(enumerate_perturbations(x, PerturbationBudget(1, 5), cap=1000))
    assert len(sets) == 201
    assert max(len(s) for s in sets) == 1


def test_enumeration_prunes_saturated_nodes():
    x = np.zeros((2, 60))
    budget = PerturbationBudget(1, 5)
    sets = list(enumerate_perturbations(x, budget, cap=10_000))
    assert len(sets) == count_flip_sets(x, budget) == 1 + 120 + 60 * 60
    assert [len(s) for s in sets] == sorted(len(s) for s in sets)


@pytest.mark.parametrize("seed", range(40))
def test_exact_robustness_monotone_in_budgets(seed):
    graph, model, _ = random_instance(seed)
    robust = {
        (p_l, p_g): exact_robustness(model, graph, PerturbationBudget(p_l, p_g))
        for p_l in range(3) for p_g in range(4)
    }
    for (p_l, p_g), flags in robust.items():
        if p_g + 1 <= 3:
            assert not (robust[(p_l, p_g + 1)] & ~flags).any()
        if p_l + 1 <= 2:
            assert not (robust[(p_l + 1, p_g)] & ~flags).any()
        assert exact_node_robustness(model, graph, PerturbationBudget(p_l, p_g), 0) == flags[0]
