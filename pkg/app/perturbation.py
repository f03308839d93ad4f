"""
Пространство возмущений P^{p_l,p_g}(X) бинарных признаков и переборный оракул.

Оракул перебирает все допустимые наборы флипов: годится только для малых графов,
поэтому размер перебора ограничен лимитом и превышение: явная ошибка.
"""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from itertools import islice
from math import comb
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from app.config import MODES, get_config
from app.errors import DataError, OracleInfeasibleError
from app.graph_model import GcnModel, Graph, argmax_labels, forward, normalize_adjacency

log = logging.getLogger("gcn_certifier")

Pair = Tuple[int, int]

_BATCH = 2048


@dataclass(frozen=True)
class PerturbationBudget:
    """Локальный (на узел) и глобальный лимиты флипов"""
    local_limit: int
    global_limit: int
    mode: str = "both"  # both / add-only / delete-only

    def __post_init__(self):
        if self.local_limit < 0 or self.global_limit < 0:
            raise DataError("perturbation limits must be non-negative",
                            field="local" if self.local_limit < 0 else "global")
        if self.mode not in MODES:
            raise DataError(f"unknown flip mode {self.mode!r}", field="mode")

    @property
    def effective_local(self) -> int:
        return min(self.local_limit, self.global_limit)

    def with_global(self, global_limit: int) -> "PerturbationBudget":
        return PerturbationBudget(self.local_limit, global_limit, self.mode)


@dataclass(frozen=True)
class FlipSet:
    """Набор флипов (узел, признак), хранится отсортированным"""
    flips: Tuple[Pair, ...] = ()

    def __post_init__(self):
        canon = tuple(sorted({(int(k), int(j)) for k, j in self.flips}))
        object.__setattr__(self, "flips", canon)

    def __len__(self) -> int:
        return len(self.flips)

    def __iter__(self):
        return iter(self.flips)

    def per_node(self) -> Counter:
        return Counter(k for k, _ in self.flips)

    def respects(self, budget: PerturbationBudget) -> bool:
        if len(self.flips) > budget.global_limit:
            return False
        return all(c <= budget.local_limit for c in self.per_node().values())

    def to_tokens(self) -> str:
        return ";".join(f"{k}:{j}" for k, j in self.flips)

    @classmethod
    def from_tokens(cls, text: str) -> "FlipSet":
        text = (text or "").strip()
        if not text:
            return cls()
        pairs = []
        for token in text.split(";"):
            try:
                k, j = token.split(":")
                pairs.append((int(k), int(j)))
            except ValueError:
                raise DataError(f"bad flip token {token!r}, expected node:feature")
        return cls(tuple(pairs))


def sign_matrix(features: np.ndarray) -> np.ndarray:
    """P[k, j] = +1 если X[k, j] = 0, иначе −1"""
    return 1.0 - 2.0 * np.asarray(features, dtype=np.float64)


def allowed_mask(features: np.ndarray, mode: str) -> np.ndarray:
    """Какие элементы разрешено флипать в данном режиме"""
    features = np.asarray(features)
    if mode == "add-only":
        return features == 0
    if mode == "delete-only":
        return features == 1
    return np.ones(features.shape, dtype=bool)


def apply_flips(features: np.ndarray, flips: FlipSet) -> np.ndarray:
    out = np.array(features, dtype=np.float64)
    n, m = out.shape
    for k, j in flips:
        if not (0 <= k < n and 0 <= j < m):
            raise DataError(f"flip ({k}, {j}) is outside the {n}x{m} feature matrix", field="flips")
        out[k, j] = 1.0 - out[k, j]
    return out


def count_flip_sets(features: np.ndarray, budget: PerturbationBudget) -> int:
    """Точное число допустимых наборов флипов (включая пустой)"""
    per_node = allowed_mask(features, budget.mode).sum(axis=1)
    # производящий многочлен по узлам, степени обрезаются на p_g
    poly = [1] + [0] * budget.global_limit
    for avail in per_node:
        node_poly = [comb(int(avail), j) for j in range(min(int(avail), budget.local_limit) + 1)]
        nxt = [0] * (budget.global_limit + 1)
        for a, ca in enumerate(poly):
            if not ca:
                continue
            for b, cb in enumerate(node_poly):
                if a + b > budget.global_limit:
                    break
                nxt[a + b] += ca * cb
        poly = nxt
    return sum(poly)


def enumerate_perturbations(features: np.ndarray, budget: PerturbationBudget,
                            cap: Optional[int] = None) -> Iterator[FlipSet]:
    """
    Все допустимые FlipSet ровно по одному разу: сначала по мощности,
    внутри: лексикографически по отсортированным парам.
    """
    cap = get_config().oracle.cap if cap is None else cap
    total = count_flip_sets(features, budget)
    if total > cap:
        raise OracleInfeasibleError(
            f"oracle infeasible: {total} perturbations exceed the cap of {cap}")
    candidates = [tuple(p) for p in np.argwhere(allowed_mask(features, budget.mode)).tolist()]
    return _enumerate(candidates, budget)


def _enumerate(candidates: Sequence[Pair], budget: PerturbationBudget) -> Iterator[FlipSet]:
    """
    Кандидаты отсортированы, поэтому сгруппированы по узлу. Обход в глубину
    по возрастанию индексов: узел, набравший p_l флипов, пропускается целиком,
    а ветка обрывается, когда оставшихся кандидатов не хватает до нужной мощности.
    Каждый шаг ведет к допустимому набору, поэтому работа пропорциональна их числу.
    """
    p_l = budget.local_limit
    total = len(candidates)
    nodes = [k for k, _ in candidates]
    group_end = [0] * total
    start = 0
    for i in range(1, total + 1):
        if i == total or nodes[i] != nodes[start]:
            group_end[start:i] = [i] * (i - start)
            start = i
    # tail[i]: сколько флипов можно взять из кандидатов i.. с нуля
    tail = [0] * (total + 1)
    for i in range(total - 1, -1, -1):
        tail[i] = min(p_l, group_end[i] - i) + tail[group_end[i]]

    def extend(begin: int, need: int, last_node: int, used: int, picked: List[int]) -> Iterator[FlipSet]:
        i = begin
        while i < total and tail[i] >= need:
            count = used + 1 if nodes[i] == last_node else 1
            if count > p_l:
                i = group_end[i]
                continue
            if min(p_l - count, group_end[i] - i - 1) + tail[group_end[i]] < need - 1:
                # дальше в этом узле остаток только меньше
                i = group_end[i]
                continue
            picked.append(i)
            if need == 1:
                yield FlipSet(tuple(candidates[x] for x in picked))
            else:
                yield from extend(i + 1, need - 1, nodes[i], count, picked)
            picked.pop()
            i += 1

    yield FlipSet()
    for size in range(1, min(budget.global_limit, tail[0]) + 1):
        yield from extend(0, size, -1, 0, [])


def _batched_scores(model: GcnModel, graph: Graph, budget: PerturbationBudget,
                    cap: Optional[int]) -> Iterator[np.ndarray]:
    norm_adj = normalize_adjacency(graph)
    stream = enumerate_perturbations(graph.features, budget, cap)
    while True:
        chunk = list(islice(stream, _BATCH))
        if not chunk:
            return
        batch = np.repeat(graph.features[None], len(chunk), axis=0)
        for b, flips in enumerate(chunk):
            for k, j in flips:
                batch[b, k, j] = 1.0 - batch[b, k, j]
        yield forward(model, norm_adj, batch)


def exact_robustness(model: GcnModel, graph: Graph, budget: PerturbationBudget,
                     cap: Optional[int] = None) -> np.ndarray:
    """Для каждого узла: метка неизменна при всех X' ∈ P(X)"""
    base = argmax_labels(forward(model, normalize_adjacency(graph), graph.features))
    robust = np.ones(graph.num_nodes, dtype=bool)
    for scores in _batched_scores(model, graph, budget, cap):
        robust &= (argmax_labels(scores) == base[None, :]).all(axis=0)
    return robust


def exact_node_robustness(model: GcnModel, graph: Graph, budget: PerturbationBudget,
                          node: int, cap: Optional[int] = None) -> bool:
    return bool(exact_robustness(model, graph, budget, cap)[node])


def exact_min_margins(model: GcnModel, graph: Graph, budget: PerturbationBudget,
                      cap: Optional[int] = None, labels: Optional[np.ndarray] = None) -> np.ndarray:
    """
    min по X' ∈ P(X) и c' ≠ c разности оценок s_c − s_c' для каждого узла.
    Любая корректная нижняя оценка сертификатора не превышает это значение.
    """
    if labels is None:
        labels = argmax_labels(forward(model, normalize_adjacency(graph), graph.features))
    rows = np.arange(graph.num_nodes)
    best = np.full(graph.num_nodes, np.inf)
    for scores in _batched_scores(model, graph, budget, cap):
        own = scores[:, rows, labels]
        rivals = scores.copy()
        rivals[:, rows, labels] = -np.inf
        best = np.minimum(best, (own - rivals.max(axis=-1)).min(axis=0))
    return best


def exact_max_robust_limits(model: GcnModel, graph: Graph, local_limit: int, search_cap: int,
                            mode: str = "both", cap: Optional[int] = None) -> np.ndarray:
    """Наибольший p_g ≤ search_cap, при котором узел точно устойчив"""
    limits = np.full(graph.num_nodes, search_cap, dtype=int)
    alive = np.ones(graph.num_nodes, dtype=bool)
    for p in range(search_cap + 1):
        robust = exact_robustness(model, graph, PerturbationBudget(local_limit, p, mode), cap)
        broken = alive & ~robust
        limits[broken] = p - 1
        alive &= robust
        if not alive.any():
            break
    log.debug("oracle max robust limits: %s", limits.tolist())
    return limits
