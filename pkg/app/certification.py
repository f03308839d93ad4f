"""
Сертификация узлов по полиэдральным границам выходного слоя.

Для каждой пары меток (c, c') строится граница разности оценок, ее нижняя
линейная форма точно минимизируется по пространству возмущений жадным выбором
флипов. Узел сертифицирован, если все минимумы строго положительны. Выбранные
флипы: кандидаты в контрпримеры, они проверяются конкретным прямым проходом.
"""
from __future__ import annotations

import logging
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.config import METHODS
from app.errors import DataError, DimensionError
from app.graph_model import GcnModel, Graph, argmax_labels, forward, neighborhood, normalize_adjacency, predict
from app.interval_domain import interval_bounds_per_layer, interval_label_margins
from app.perturbation import FlipSet, PerturbationBudget, allowed_mask, apply_flips, sign_matrix
from app.polyhedra_domain import (
    PolyNodeElement, backsubstitute_dense, forward_poly, linear_poly, relaxations_for,
    restrict_to_neighborhood,
)

log = logging.getLogger("gcn_certifier")

EXECUTIONS = ("backsub", "forward")


@dataclass(frozen=True, eq=False)
class NodeJudgment:
    node: int
    label: int
    margin: float  # min по per_label_margins
    certified: bool  # margin > 0, строго
    per_label_margins: Dict[int, float]
    candidates: Dict[int, FlipSet] = field(default_factory=dict)  # X^min для каждой c'


@dataclass(frozen=True)
class Counterexample:
    node: int
    flips: FlipSet
    flipped_label: int
    verified: bool


def parse_method(method: str) -> Tuple[str, str]:
    """'poly-topk' -> ('poly', 'topk')"""
    if method not in METHODS:
        raise DataError(f"unknown method {method!r}, expected one of {', '.join(METHODS)}", field="method")
    domain, variant = method.split("-", 1)
    return domain, variant


def label_difference_transform(elem: PolyNodeElement, original_label: int, other_label: int) -> PolyNodeElement:
    """Граница δ = o_c − o_c' через Lin с матрицей Δ^{c,c'}"""
    if original_label == other_label:
        raise DataError(f"label difference needs two distinct labels, got {original_label} twice")
    delta = np.zeros((elem.width, 1))
    delta[original_label, 0] = 1.0
    delta[other_label, 0] = -1.0
    return linear_poly(elem, delta, np.zeros(1))


def minimize_delta(elem: PolyNodeElement, features: np.ndarray,
                   budget: PerturbationBudget) -> Tuple[float, FlipSet]:
    """
    Точный минимум нижней формы по P(X). θ = q·P: изменение формы при флипе;
    у каждого узла берутся p_l самых отрицательных θ, из них глобально p_g.
    Равные θ упорядочены по (узел, признак).
    """
    if elem.width != 1:
        raise DimensionError(f"minimize_delta expects a single-row element, got {elem.width} rows")
    q = elem.lower_coef[0]
    base = float(q @ elem.read(features) + elem.lower_const[0])
    if not elem.vars or budget.effective_local == 0:
        return base, FlipSet()

    idx = np.asarray(elem.vars)
    theta = q * sign_matrix(features)[idx[:, 0], idx[:, 1]]
    allowed = allowed_mask(features, budget.mode)[idx[:, 0], idx[:, 1]]

    by_node: Dict[int, list] = defaultdict(list)
    for pos, (k, j) in enumerate(elem.vars):
        if allowed[pos] and theta[pos] < 0:
            by_node[k].append((float(theta[pos]), k, j))
    pool = []
    for items in by_node.values():
        items.sort()
        pool.extend(items[:budget.local_limit])
    pool.sort()
    chosen = pool[:budget.global_limit]
    return base + sum(t for t, _, _ in chosen), FlipSet(tuple((k, j) for _, k, j in chosen))


def minimize_delta_batch(coef: np.ndarray, const: np.ndarray, features: np.ndarray,
                         budget: PerturbationBudget) -> np.ndarray:
    """То же значение, что minimize_delta, для стопки плотных форм coef (..., n, m0)"""
    features = np.asarray(features, dtype=np.float64)
    base = np.einsum('...nm,nm->...', coef, features) + const
    if budget.effective_local == 0:
        return base
    theta = np.where(allowed_mask(features, budget.mode), coef * sign_matrix(features), 0.0)
    neg = np.sort(np.minimum(theta, 0.0), axis=-1)[..., :budget.local_limit]
    pool = np.sort(neg.reshape(*neg.shape[:-2], -1), axis=-1)[..., :budget.global_limit]
    return base + pool.sum(axis=-1)


# ---------------------------------------------------------------------------
# Сертификация графа
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class _Prepared:
    """Общие для всех узлов данные; только чтение, безопасно для потоков"""
    model: GcnModel
    graph: Graph
    budget: PerturbationBudget
    labels: np.ndarray
    norm_adj: np.ndarray
    relaxations: list
    interval_margins: Optional[np.ndarray]
    forward_out: Optional[tuple]


def _prepare(model: GcnModel, graph: Graph, budget: PerturbationBudget, variant: str,
             labels: Optional[np.ndarray], combine_interval: bool, lower_slope: float,
             execution: str) -> _Prepared:
    if execution not in EXECUTIONS:
        raise DataError(f"unknown execution {execution!r}", field="execution")
    model.check_input(graph.num_features)
    norm_adj = normalize_adjacency(graph)
    if labels is None:
        labels = argmax_labels(forward(model, norm_adj, graph.features))
    labels = np.asarray(labels, dtype=int)
    bounds = interval_bounds_per_layer(model, graph, budget, variant, norm_adj)
    interval_margins = interval_label_margins(bounds[-1], labels) if combine_interval else None
    forward_out = None
    if execution == "forward":
        forward_out = forward_poly(model, graph, bounds, lower_slope, norm_adj)[-1].per_node
    return _Prepared(model, graph, budget, labels, norm_adj, relaxations_for(bounds, lower_slope),
                     interval_margins, forward_out)


def _output_element(prep: _Prepared, node: int) -> PolyNodeElement:
    if prep.forward_out is not None:
        return prep.forward_out[node]
    dense = backsubstitute_dense(prep.model, prep.norm_adj, prep.relaxations, [node])
    return restrict_to_neighborhood(dense, 0, neighborhood(prep.norm_adj, node, prep.model.num_layers))


def _judge(prep: _Prepared, node: int) -> NodeJudgment:
    elem = _output_element(prep, node)
    label = int(prep.labels[node])
    per_label: Dict[int, float] = {}
    candidates: Dict[int, FlipSet] = {}
    for other in range(prep.model.num_classes):
        if other == label:
            continue
        value, flips = minimize_delta(label_difference_transform(elem, label, other),
                                      prep.graph.features, prep.budget)
        if prep.interval_margins is not None:
            value = max(value, float(prep.interval_margins[node, other]))
        per_label[other] = value
        candidates[other] = flips
    margin = min(per_label.values()) if per_label else float("inf")
    return NodeJudgment(node, label, margin, margin > 0, per_label, candidates)


def _interval_judgments(model: GcnModel, graph: Graph, budget: PerturbationBudget, variant: str,
                        labels: Optional[np.ndarray], nodes: Sequence[int]) -> List[NodeJudgment]:
    norm_adj = normalize_adjacency(graph)
    if labels is None:
        labels = argmax_labels(forward(model, norm_adj, graph.features))
    bounds = interval_bounds_per_layer(model, graph, budget, variant, norm_adj)
    margins = interval_label_margins(bounds[-1], labels)
    out = []
    for node in nodes:
        label = int(labels[node])
        per_label = {c: float(margins[node, c]) for c in range(model.num_classes) if c != label}
        margin = min(per_label.values()) if per_label else float("inf")
        out.append(NodeJudgment(int(node), label, margin, margin > 0, per_label))
    return out


def monotone_budgets(budget: PerturbationBudget) -> List[PerturbationBudget]:
    """Бюджеты p_g = 0..budget.global_limit для накопленного минимума отступов"""
    return [budget.with_global(g) for g in range(budget.global_limit + 1)]


def _lowest(judgments: Sequence[NodeJudgment]) -> NodeJudgment:
    """Покомпонентный минимум суждений одного узла; кандидаты флипов от последнего бюджета"""
    last = judgments[-1]
    per_label = dict(judgments[0].per_label_margins)
    for judgment in judgments[1:]:
        for other, value in judgment.per_label_margins.items():
            per_label[other] = min(per_label[other], value)
    margin = min(per_label.values()) if per_label else float("inf")
    return NodeJudgment(last.node, last.label, margin, margin > 0, per_label, dict(last.candidates))


def _poly_judgments(prep: _Prepared, nodes: Sequence[int], threads: int) -> List[NodeJudgment]:
    if threads > 1 and len(nodes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(partial(_judge, prep), nodes))
    return [_judge(prep, i) for i in nodes]


def certify_nodes(model: GcnModel, graph: Graph, budget: PerturbationBudget, nodes: Sequence[int],
                  method: str = "poly-topk", labels: Optional[np.ndarray] = None, *,
                  combine_interval: bool = True, lower_slope: float = 0.0,
                  execution: str = "backsub", threads: int = 1, monotone: bool = True) -> List[NodeJudgment]:
    """
    Суждения для выбранных узлов в порядке nodes.

    monotone=True: полиэдральный отступ берется как минимум по p_g' = 0..p_g.
    Каждое значение корректно, поэтому и минимум корректен, а рост p_g больше
    не может поднять отступ через смену случая релаксации ReLU.
    Интервальные отступы монотонны сами по себе.
    """
    domain, variant = parse_method(method)
    nodes = [int(i) for i in nodes]
    for i in nodes:
        if not 0 <= i < graph.num_nodes:
            raise DataError(f"node {i} is outside the graph of {graph.num_nodes} nodes", field="node")
    if domain == "interval":
        return _interval_judgments(model, graph, budget, variant, labels, nodes)

    budgets = monotone_budgets(budget) if monotone else [budget]
    runs = [
        _poly_judgments(_prepare(model, graph, b, variant, labels, combine_interval, lower_slope, execution),
                        nodes, threads)
        for b in budgets
    ]
    if len(runs) == 1:
        return runs[0]
    return [_lowest(per_budget) for per_budget in zip(*runs)]


def certify_sound(model: GcnModel, graph: Graph, budget: PerturbationBudget, variant: str = "topk",
                  labels: Optional[np.ndarray] = None, **options) -> List[NodeJudgment]:
    """Полиэдральный сертификатор для всех узлов графа"""
    return certify_nodes(model, graph, budget, range(graph.num_nodes), f"poly-{variant}", labels, **options)


def certify_node(model: GcnModel, graph: Graph, budget: PerturbationBudget, node: int,
                 method: str = "poly-topk", labels: Optional[np.ndarray] = None, **options) -> NodeJudgment:
    return certify_nodes(model, graph, budget, [node], method, labels, **options)[0]


def certified_margin_matrix(model: GcnModel, graph: Graph, budget: PerturbationBudget,
                            labels: Optional[np.ndarray] = None, variant: str = "topk", *,
                            combine_interval: bool = True, lower_slope: float = 0.0,
                            monotone: bool = True) -> np.ndarray:
    """
    δ*_{i,c,c'} для всех узлов сразу, (n, |C|), nan на месте собственной метки.
    Совпадает с per_label_margins из certify_sound при тех же опциях.
    """
    norm_adj = normalize_adjacency(graph)
    if labels is None:
        labels = argmax_labels(forward(model, norm_adj, graph.features))
    labels = np.asarray(labels, dtype=int)
    rows = np.arange(graph.num_nodes)
    margins = None
    for step in (monotone_budgets(budget) if monotone else [budget]):
        bounds = interval_bounds_per_layer(model, graph, step, variant, norm_adj)
        dense = backsubstitute_dense(model, norm_adj, relaxations_for(bounds, lower_slope),
                                     range(graph.num_nodes))
        coef = dense.lower_coef[rows, labels][:, None] - dense.upper_coef
        const = dense.lower_const[rows, labels][:, None] - dense.upper_const
        current = minimize_delta_batch(coef, const, graph.features, step)
        if combine_interval:
            current = np.maximum(current, interval_label_margins(bounds[-1], labels))
        margins = current if margins is None else np.minimum(margins, current)
    margins[rows, labels] = np.nan
    return margins


# ---------------------------------------------------------------------------
# Контрпримеры
# ---------------------------------------------------------------------------

def generate_counterexample(model: GcnModel, graph: Graph, budget: PerturbationBudget, node: int,
                            judgments: Sequence[NodeJudgment]) -> Optional[Counterexample]:
    """
    Перебирает метки c' с δ* ≤ 0 по возрастанию δ*, применяет флипы минимизатора
    и возвращает первый набор, который действительно меняет предсказание узла.
    """
    judgment = next((j for j in judgments if j.node == node), None)
    if judgment is None:
        raise DataError(f"no judgment for node {node}", field="node")
    if judgment.certified:
        return None

    tried = set()
    for value, other in sorted((v, c) for c, v in judgment.per_label_margins.items() if v <= 0):
        flips = judgment.candidates.get(other)
        if flips is None or flips in tried or not flips.respects(budget):
            continue
        tried.add(flips)
        new_label = int(predict(model, graph.with_features(apply_flips(graph.features, flips))).labels[node])
        if new_label != judgment.label:
            log.debug("node %d: counterexample %s flips label %d -> %d",
                      node, flips.to_tokens(), judgment.label, new_label)
            return Counterexample(node, flips, new_label, True)
    return None


def find_counterexamples(model: GcnModel, graph: Graph, budget: PerturbationBudget,
                         judgments: Sequence[NodeJudgment], threads: int = 1) -> Dict[int, Counterexample]:
    """Проверенные контрпримеры для всех несертифицированных узлов"""
    open_nodes = [j.node for j in judgments if not j.certified]
    search = partial(generate_counterexample, model, graph, budget, judgments=judgments)
    if threads > 1 and len(open_nodes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            found = list(pool.map(search, open_nodes))
    else:
        found = [search(i) for i in open_nodes]
    return {i: cx for i, cx in zip(open_nodes, found) if cx is not None}


def certify_complete(model: GcnModel, graph: Graph, budget: PerturbationBudget, variant: str = "topk",
                     judgments: Optional[Sequence[NodeJudgment]] = None, threads: int = 1,
                     **options) -> np.ndarray:
    """r'_i = 0, если найден проверенный контрпример, иначе 1"""
    if judgments is None:
        judgments = certify_sound(model, graph, budget, variant, threads=threads, **options)
    found = find_counterexamples(model, graph, budget, judgments, threads)
    r = np.ones(graph.num_nodes)
    r[list(found)] = 0.0
    return r
