"""
Полиэдральный абстрактный домен: для каждого узла одна нижняя и одна верхняя
линейная граница латентных признаков через переменные входных признаков.

    Q_≤ · x(V_i) + d_≤  ≤  h_i  ≤  Q_≥ · x(V_i) + d_≥

Числовые границы для релаксации ReLU берутся из интервального домена.
Основной путь исполнения: обратная подстановка (back_substitute), прямое
распространение (forward_poly) оставлено как эталон для проверки.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.errors import DataError, DimensionError
from app.graph_model import GcnModel, Graph, neighborhood, normalize_adjacency
from app.interval_domain import IntervalElement, interval_bounds_per_layer
from app.perturbation import PerturbationBudget

log = logging.getLogger("gcn_certifier")

Pair = Tuple[int, int]


@dataclass(frozen=True, eq=False)
class PolyNodeElement:
    vars: Tuple[Pair, ...]  # отсортированы по (узел, признак), без повторов
    lower_coef: np.ndarray  # (m_l, |V|)
    lower_const: np.ndarray  # (m_l,)
    upper_coef: np.ndarray
    upper_const: np.ndarray

    def __post_init__(self):
        vars_ = tuple((int(k), int(j)) for k, j in self.vars)
        if list(vars_) != sorted(set(vars_)):
            raise DataError("poly element variables must be sorted and unique")
        arrays = [np.asarray(a, dtype=np.float64) for a in
                  (self.lower_coef, self.lower_const, self.upper_coef, self.upper_const)]
        lq, ld, uq, ud = arrays
        if lq.shape != uq.shape or lq.shape != (ld.shape[0], len(vars_)) or ld.shape != ud.shape:
            raise DimensionError(f"inconsistent poly element shapes {lq.shape}, {ld.shape}, {uq.shape}")
        object.__setattr__(self, "vars", vars_)
        for name, arr in zip(("lower_coef", "lower_const", "upper_coef", "upper_const"), arrays):
            object.__setattr__(self, name, arr)

    @property
    def width(self) -> int:
        return self.lower_const.shape[0]

    def read(self, features: np.ndarray) -> np.ndarray:
        """x(V_i): значения перечисленных переменных"""
        if not self.vars:
            return np.zeros(0)
        idx = np.asarray(self.vars)
        return np.asarray(features, dtype=np.float64)[idx[:, 0], idx[:, 1]]

    def evaluate(self, features: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        x = self.read(features)
        return self.lower_coef @ x + self.lower_const, self.upper_coef @ x + self.upper_const

    def is_exact(self, tol: float = 1e-12) -> bool:
        return (np.allclose(self.lower_coef, self.upper_coef, rtol=0, atol=tol)
                and np.allclose(self.lower_const, self.upper_const, rtol=0, atol=tol))


@dataclass(frozen=True, eq=False)
class PolyElement:
    per_node: Tuple[PolyNodeElement, ...]


@dataclass(frozen=True, eq=False)
class ReluRelaxation:
    """h ≥ alpha·z (нижняя), h ≤ slope·z + shift (верхняя), поэлементно (n, m)"""
    alpha: np.ndarray
    slope: np.ndarray
    shift: np.ndarray


def relu_relaxation(lo: np.ndarray, up: np.ndarray, lower_slope: float = 0.0) -> ReluRelaxation:
    """
    Четыре случая: (i) lo ≥ 0: тождество; (ii) up ≤ 0: ноль;
    (iii) смешанный, |up| ≥ |lo|: нижняя h ≥ z; (iv) смешанный, |up| < |lo|: нижняя h ≥ λz.
    В смешанных случаях верхняя граница: секущая s·z + t.
    """
    if not 0.0 <= lower_slope <= 1.0:
        raise DataError(f"relu lower slope must lie in [0, 1], got {lower_slope}")
    lo = np.asarray(lo, dtype=np.float64)
    up = np.asarray(up, dtype=np.float64)
    active = lo >= 0
    dead = ~active & (up <= 0)
    mixed = ~active & ~dead
    span = np.where(mixed, up - lo, 1.0)
    s = np.where(mixed, up / span, 0.0)
    t = np.where(mixed, -up * lo / span, 0.0)
    keep_lower = mixed & (np.abs(up) >= np.abs(lo))
    alpha = np.where(active | keep_lower, 1.0, np.where(mixed, lower_slope, 0.0))
    slope = np.where(active, 1.0, s)
    return ReluRelaxation(alpha=alpha, slope=slope, shift=t)


def relaxations_for(bounds: Sequence[IntervalElement], lower_slope: float = 0.0) -> List[ReluRelaxation]:
    """Релаксации для всех слоев с ReLU (все, кроме выходного)"""
    return [relu_relaxation(b.lower, b.upper, lower_slope) for b in bounds[:-1]]


def relu_area(lo: float, up: float, lam: float) -> float:
    """Площадь трапеции, ограниченной секущей и нижней границей λz"""
    return 0.5 * (-lam * lo + up - lam * up) * (up - lo)


# ---------------------------------------------------------------------------
# Абстрактные операции
# ---------------------------------------------------------------------------

def poly_input_abstraction(graph: Graph) -> PolyElement:
    m0 = graph.num_features
    eye = np.eye(m0)
    zeros = np.zeros(m0)
    return PolyElement(tuple(
        PolyNodeElement(tuple((i, j) for j in range(m0)), eye, zeros, eye, zeros)
        for i in range(graph.num_nodes)
    ))


def linear_poly(elem: PolyNodeElement, weight: np.ndarray, bias: np.ndarray) -> PolyNodeElement:
    weight = np.asarray(weight, dtype=np.float64)
    if weight.shape[0] != elem.width:
        raise DimensionError(f"poly element width {elem.width} does not match weight {weight.shape}")
    wt = weight.T
    w_pos, w_neg = np.maximum(wt, 0.0), np.minimum(wt, 0.0)
    return PolyNodeElement(
        elem.vars,
        w_pos @ elem.lower_coef + w_neg @ elem.upper_coef,
        w_pos @ elem.lower_const + w_neg @ elem.upper_const + bias,
        w_pos @ elem.upper_coef + w_neg @ elem.lower_coef,
        w_pos @ elem.upper_const + w_neg @ elem.lower_const + bias,
    )


def gc_poly(elems: Sequence[PolyNodeElement], norm_adj_row: np.ndarray, node: int) -> PolyNodeElement:
    """Свертка для узла: сумма соседей с весами Ã[i, k]; общие переменные складываются"""
    norm_adj_row = np.asarray(norm_adj_row, dtype=np.float64)
    if (norm_adj_row < 0).any():
        raise DataError(f"negative adjacency weight in row of node {node}")
    if norm_adj_row[node] <= 0:
        raise DataError(f"node {node} has no self-loop weight in the normalized adjacency")
    neighbors = np.flatnonzero(norm_adj_row > 0)
    union = sorted({v for k in neighbors for v in elems[k].vars})
    position = {v: p for p, v in enumerate(union)}
    width = elems[node].width
    lq = np.zeros((width, len(union)))
    uq = np.zeros((width, len(union)))
    ld = np.zeros(width)
    ud = np.zeros(width)
    for k in neighbors:
        e, a = elems[k], norm_adj_row[k]
        cols = np.asarray([position[v] for v in e.vars], dtype=int)
        np.add.at(lq, (slice(None), cols), a * e.lower_coef)
        np.add.at(uq, (slice(None), cols), a * e.upper_coef)
        ld += a * e.lower_const
        ud += a * e.upper_const
    return PolyNodeElement(tuple(union), lq, ld, uq, ud)


def relu_poly(elem: PolyNodeElement, interval_lower: np.ndarray, interval_upper: np.ndarray,
              lower_slope: float = 0.0) -> PolyNodeElement:
    relax = relu_relaxation(interval_lower, interval_upper, lower_slope)
    return _apply_relaxation(elem, relax.alpha, relax.slope, relax.shift)


def _apply_relaxation(elem: PolyNodeElement, alpha, slope, shift) -> PolyNodeElement:
    # alpha, slope ≥ 0, поэтому нижняя форма масштабируется нижней, верхняя: верхней
    return PolyNodeElement(
        elem.vars,
        alpha[:, None] * elem.lower_coef,
        alpha * elem.lower_const,
        slope[:, None] * elem.upper_coef,
        slope * elem.upper_const + shift,
    )


def forward_poly(model: GcnModel, graph: Graph, bounds: Sequence[IntervalElement],
                 lower_slope: float = 0.0, norm_adj: Optional[np.ndarray] = None) -> List[PolyElement]:
    """Прямое распространение; возвращает элементы до активации для каждого слоя"""
    if norm_adj is None:
        norm_adj = normalize_adjacency(graph)
    relax = relaxations_for(bounds, lower_slope)
    elems = poly_input_abstraction(graph).per_node
    out: List[PolyElement] = []
    for idx, layer in enumerate(model.layers):
        elems = tuple(gc_poly(elems, norm_adj[i], i) for i in range(graph.num_nodes))
        elems = tuple(linear_poly(e, layer.weight, layer.bias) for e in elems)
        out.append(PolyElement(elems))
        if idx < model.num_layers - 1:
            r = relax[idx]
            elems = tuple(_apply_relaxation(e, r.alpha[i], r.slope[i], r.shift[i])
                          for i, e in enumerate(elems))
    return out


# ---------------------------------------------------------------------------
# Обратная подстановка
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DenseBounds:
    """Границы выходов по всем входным переменным графа: coef (T, C, n, m0), const (T, C)"""
    lower_coef: np.ndarray
    lower_const: np.ndarray
    upper_coef: np.ndarray
    upper_const: np.ndarray


def backsubstitute_dense(model: GcnModel, norm_adj: np.ndarray, relaxations: Sequence[ReluRelaxation],
                         targets: Sequence[int]) -> DenseBounds:
    """
    Выходные оценки узлов targets, переписанные от последнего слоя к входу.
    Знак коэффициента решает, какая сторона релаксации ReLU подставляется.
    """
    targets = np.asarray(targets, dtype=int)
    n, classes = norm_adj.shape[0], model.num_classes
    lam_lo = np.zeros((len(targets), classes, n, classes))
    lam_lo[np.arange(len(targets))[:, None], np.arange(classes)[None, :],
           targets[:, None], np.arange(classes)[None, :]] = 1.0
    lam_up = lam_lo.copy()
    const_lo = np.zeros((len(targets), classes))
    const_up = np.zeros((len(targets), classes))

    for idx in range(model.num_layers - 1, -1, -1):
        layer = model.layers[idx]
        # z_l = Ã h_l W_l + b_l
        const_lo += np.einsum('tckj,j->tc', lam_lo, layer.bias)
        const_up += np.einsum('tckj,j->tc', lam_up, layer.bias)
        lam_lo = norm_adj.T @ (lam_lo @ layer.weight.T)
        lam_up = norm_adj.T @ (lam_up @ layer.weight.T)
        if idx == 0:
            break
        # h_l = ReLU(z_{l-1})
        r = relaxations[idx - 1]
        lo_pos, lo_neg = np.maximum(lam_lo, 0.0), np.minimum(lam_lo, 0.0)
        up_pos, up_neg = np.maximum(lam_up, 0.0), np.minimum(lam_up, 0.0)
        const_lo += np.einsum('tcmf,mf->tc', lo_neg, r.shift)
        const_up += np.einsum('tcmf,mf->tc', up_pos, r.shift)
        lam_lo = lo_pos * r.alpha + lo_neg * r.slope
        lam_up = up_pos * r.slope + up_neg * r.alpha

    return DenseBounds(lam_lo, const_lo, lam_up, const_up)


def back_substitute(model: GcnModel, graph: Graph, budget: PerturbationBudget, node: int,
                    bounds: Optional[Sequence[IntervalElement]] = None, variant: str = "topk",
                    norm_adj: Optional[np.ndarray] = None, lower_slope: float = 0.0) -> PolyNodeElement:
    """Выходной элемент узла через входные переменные его z-окрестности"""
    if norm_adj is None:
        norm_adj = normalize_adjacency(graph)
    if bounds is None:
        bounds = interval_bounds_per_layer(model, graph, budget, variant, norm_adj)
    dense = backsubstitute_dense(model, norm_adj, relaxations_for(bounds, lower_slope), [node])
    return restrict_to_neighborhood(dense, 0, neighborhood(norm_adj, node, model.num_layers))


def restrict_to_neighborhood(dense: DenseBounds, target: int, nodes: np.ndarray) -> PolyNodeElement:
    m0 = dense.lower_coef.shape[-1]
    vars_ = tuple((int(k), j) for k in nodes for j in range(m0))
    classes = dense.lower_coef.shape[1]
    lq = dense.lower_coef[target][:, nodes, :].reshape(classes, -1)
    uq = dense.upper_coef[target][:, nodes, :].reshape(classes, -1)
    return PolyNodeElement(vars_, lq, dense.lower_const[target], uq, dense.upper_const[target])
