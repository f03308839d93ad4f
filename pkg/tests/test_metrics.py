import logging

import numpy as np
import pytest

from app.certification import NodeJudgment, certify_sound
from app.errors import DataError
from app.metrics import (
    RobustnessSweep, build_sweep, graph_robustness_ratio, monotonicity_violations, ratio, total_uncertainty_region,
    uncertainty_region,
)
from app.perturbation import exact_robustness
from app.synthetic import random_instance
from certifier import Certifier


def _judgment(node, certified):
    return NodeJudgment(node, 0, 1.0 if certified else -1.0, certified, {1: 1.0 if certified else -1.0})


def test_ratio_examples():
    assert ratio([True, False, True, True]) == 0.75
    assert graph_robustness_ratio([_judgment(0, True), _judgment(1, False)]) == 0.5
    with pytest.raises(DataError):
        ratio([])


def test_uncertainty_region_examples():
    zero = RobustnessSweep(1, (1, 2, 3), [0.5, 0.4, 0.2], [0.5, 0.4, 0.2])
    assert uncertainty_region(zero) == 0.0
    full = RobustnessSweep(1, tuple(range(1, 51)), np.zeros(50), np.ones(50))
    assert uncertainty_region(full) == 50.0
    assert total_uncertainty_region([zero, full]) == 50.0


def test_sweep_rejects_inverted_bounds():
    with pytest.raises(DataError):
        RobustnessSweep(1, (1, 2), [0.5, 0.9], [0.6, 0.8])
    with pytest.raises(DataError):
        RobustnessSweep(1, (1, 2), [0.5], [0.6])


def test_sweep_rows():
    sweep = RobustnessSweep(2, (0, 1), [1.0, 0.5], [1.0, 1.0], [3.0, 4.0])
    assert sweep.rows() == [
        {"p_l": 2, "p_g": 0, "lower": 1.0, "upper": 1.0, "runtime_ms": 3.0},
        {"p_l": 2, "p_g": 1, "lower": 0.5, "upper": 1.0, "runtime_ms": 4.0},
    ]


def test_monotonicity_warning(caplog):
    values = iter([(0.2, 0.5), (0.4, 0.5)])
    with caplog.at_level(logging.WARNING, logger="gcn_certifier"):
        sweep = build_sweep(lambda budget: next(values), 1, [1, 2])
    assert monotonicity_violations(sweep) == [
        "lower bound grows from p_g=1 to p_g=2: 0.2 -> 0.4"]
    assert "lower bound grows" in caplog.text
    assert (sweep.runtime_ms >= 0).all()


def test_build_sweep_passes_budgets():
    seen = []

    def evaluate(budget):
        seen.append((budget.local_limit, budget.global_limit, budget.mode))
        return 0.0, 1.0

    build_sweep(evaluate, 2, [0, 3], mode="add-only")
    assert seen == [(2, 0, "add-only"), (2, 3, "add-only")]


@pytest.mark.parametrize("seed", range(200))
def test_poly_region_not_wider_than_interval(seed):
    graph, model, budget = random_instance(seed)
    certifier = Certifier(graph, model)
    poly = certifier.sweep([budget.local_limit], range(1, 6), method="poly-topk")[0]
    interval = certifier.sweep([budget.local_limit], range(1, 6), method="interval-topk")[0]
    assert interval.upper.tolist() == [1.0] * 5
    assert (poly.lower >= interval.lower).all()
    assert (poly.upper <= interval.upper).all()
    assert uncertainty_region(poly) <= uncertainty_region(interval)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(200))
def test_oracle_region_is_zero(seed):
    graph, model, budget = random_instance(seed)

    def evaluate(b):
        value = float(exact_robustness(model, graph, b).mean())
        return value, value

    assert uncertainty_region(build_sweep(evaluate, budget.local_limit, range(1, 6))) == 0.0


def test_sweep_brackets_exact_ratio():
    graph, model, budget = random_instance(42)
    judgments = certify_sound(model, graph, budget)
    exact = float(exact_robustness(model, graph, budget).mean())
    assert graph_robustness_ratio(judgments) <= exact
