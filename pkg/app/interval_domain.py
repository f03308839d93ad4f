"""
Интервальная абстрактная интерпретация GCN.

Абстракция строится сразу после первого слоя (GC + Linear, до ReLU): абстрагировать
бинарный вход напрямую бессмысленно: любой признак может стать и 0, и 1.
Дальше границы идут через интервальную арифметику.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from app.errors import DataError, DimensionError
from app.graph_model import GcnModel, Graph, argmax_labels, forward, normalize_adjacency
from app.perturbation import PerturbationBudget, allowed_mask, sign_matrix

log = logging.getLogger("gcn_certifier")

VARIANTS = ("topk", "max")

_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class IntervalElement:
    lower: np.ndarray  # (n, m_l)
    upper: np.ndarray  # (n, m_l)

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=np.float64)
        upper = np.asarray(self.upper, dtype=np.float64)
        if lower.shape != upper.shape:
            raise DimensionError(f"interval bounds have shapes {lower.shape} and {upper.shape}")
        if (lower > upper + _TOL).any():
            raise DataError("interval lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    def contains(self, values: np.ndarray, tol: float = _TOL) -> bool:
        return bool(((values >= self.lower - tol) & (values <= self.upper + tol)).all())


def _top_sum(values: np.ndarray, k: int, axis: int) -> np.ndarray:
    """Сумма k наибольших вдоль оси; k больше длины: берем все"""
    k = min(k, values.shape[axis])
    if k <= 0:
        return np.zeros(np.delete(values.shape, axis))
    return np.take(-np.sort(-values, axis=axis), np.arange(k), axis=axis).sum(axis=axis)


def _per_node_top(values: np.ndarray, k: int) -> np.ndarray:
    """k наибольших кандидатов каждого узла: (n, m0, m1) -> (n, k, m1)"""
    k = min(k, values.shape[1])
    return -np.sort(-values, axis=1)[:, :k, :]


def interval_input_abstraction(model: GcnModel, graph: Graph, budget: PerturbationBudget,
                               variant: str = "topk",
                               norm_adj: Optional[np.ndarray] = None) -> IntervalElement:
    """Границы H_1 = GC(X) W_0 + b_0 для всех X' ∈ P(X)"""
    if variant not in VARIANTS:
        raise DataError(f"unknown interval variant {variant!r}", field="method")
    model.check_input(graph.num_features)
    if norm_adj is None:
        norm_adj = normalize_adjacency(graph)
    weight, bias = model.layers[0].weight, model.layers[0].bias
    exact = (norm_adj @ graph.features) @ weight + bias

    if budget.effective_local == 0:
        return IntervalElement(exact, exact.copy())

    # effect[k, f, j]: изменение (X W)_{k, j} при флипе признака f узла k
    signs = np.where(allowed_mask(graph.features, budget.mode), sign_matrix(graph.features), 0.0)
    effect = signs[:, :, None] * weight[None, :, :]
    gains = np.maximum(effect, 0.0)
    losses = np.maximum(-effect, 0.0)

    if variant == "topk":
        up = _per_node_top(gains, budget.local_limit)
        down = _per_node_top(losses, budget.local_limit)
        n, kl, m1 = up.shape
        # кандидаты для узла i: Ã[i, k] * top[k, t, j], затем глобальный MaxK
        cand_up = (norm_adj[:, :, None, None] * up[None]).reshape(n, n * kl, m1)
        cand_down = (norm_adj[:, :, None, None] * down[None]).reshape(n, n * kl, m1)
        delta_up = _top_sum(cand_up, budget.global_limit, axis=1)
        delta_down = _top_sum(cand_down, budget.global_limit, axis=1)
    else:
        best_up = gains.max(axis=1)  # (n, m1)
        best_down = losses.max(axis=1)
        delta_up = budget.global_limit * (norm_adj[:, :, None] * best_up[None]).max(axis=1)
        delta_down = budget.global_limit * (norm_adj[:, :, None] * best_down[None]).max(axis=1)

    return IntervalElement(exact - delta_down, exact + delta_up)


def linear_interval(elem: IntervalElement, weight: np.ndarray, bias: np.ndarray) -> IntervalElement:
    weight = np.asarray(weight, dtype=np.float64)
    if elem.lower.shape[-1] != weight.shape[0]:
        raise DimensionError(f"interval width {elem.lower.shape[-1]} does not match weight {weight.shape}")
    w_pos, w_neg = np.maximum(weight, 0.0), np.minimum(weight, 0.0)
    lower = elem.lower @ w_pos + elem.upper @ w_neg + bias
    upper = elem.upper @ w_pos + elem.lower @ w_neg + bias
    return IntervalElement(lower, upper)


def gc_interval(elem: IntervalElement, norm_adj: np.ndarray) -> IntervalElement:
    if (norm_adj < 0).any():
        raise DataError("normalized adjacency must be non-negative for interval graph convolution")
    return IntervalElement(norm_adj @ elem.lower, norm_adj @ elem.upper)


def relu_interval(elem: IntervalElement) -> IntervalElement:
    return IntervalElement(np.maximum(elem.lower, 0.0), np.maximum(elem.upper, 0.0))


def interval_bounds_per_layer(model: GcnModel, graph: Graph, budget: PerturbationBudget,
                              variant: str = "topk",
                              norm_adj: Optional[np.ndarray] = None) -> List[IntervalElement]:
    """Границы до активации для каждого слоя; последний элемент: выходные оценки"""
    if norm_adj is None:
        norm_adj = normalize_adjacency(graph)
    bounds = [interval_input_abstraction(model, graph, budget, variant, norm_adj)]
    for layer in model.layers[1:]:
        elem = relu_interval(bounds[-1])
        elem = gc_interval(elem, norm_adj)
        bounds.append(linear_interval(elem, layer.weight, layer.bias))
    return bounds


def interval_label_margins(output: IntervalElement, labels: np.ndarray) -> np.ndarray:
    """δ_{i,c,c'} ≥ L[i, c] − U[i, c']; на месте c: nan"""
    rows = np.arange(output.lower.shape[0])
    margins = output.lower[rows, labels][:, None] - output.upper
    margins[rows, labels] = np.nan
    return margins


def interval_certify(model: GcnModel, graph: Graph, budget: PerturbationBudget,
                     variant: str = "topk", labels: Optional[np.ndarray] = None) -> np.ndarray:
    """r_i = min_{c' ≠ c} (L_{i,c} − U_{i,c'}); r_i > 0: узел сертифицирован"""
    norm_adj = normalize_adjacency(graph)
    if labels is None:
        labels = argmax_labels(forward(model, norm_adj, graph.features))
    bounds = interval_bounds_per_layer(model, graph, budget, variant, norm_adj)
    margins = interval_label_margins(bounds[-1], labels)
    if margins.shape[1] < 2:
        return np.full(graph.num_nodes, np.inf)
    r = np.nanmin(margins, axis=1)
    log.debug("interval-%s margins: %s", variant, np.round(r, 6).tolist())
    return r
