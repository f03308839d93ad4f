"""
Максимальный устойчивый лимит p̂ каждого узла: вход для коллективной сертификации.

Линейный поиск: p_g увеличивается, пока узел сертифицирован. Поиск останавливается
на первом отказе, поэтому его результат совпадает с результатом по накопленному
минимуму отступов, и каждый шаг сертифицирует только текущий бюджет (monotone=False).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from app.certification import certify_nodes
from app.errors import DataError
from app.graph_model import GcnModel, Graph, predict
from app.perturbation import PerturbationBudget

log = logging.getLogger("gcn_certifier")


class NodeLimit(NamedTuple):
    limit: int  # p̂ ≥ 0
    never_certified: bool  # не сертифицирован даже при p_g = 0
    capped: bool  # сертифицирован при p_g = cap


@dataclass(frozen=True, eq=False)
class RobustLimitVector:
    limits: np.ndarray  # (n,), p̂^i ≥ 0
    search_cap: int
    never_certified: np.ndarray  # не сертифицирован даже при p_g = 0
    capped: np.ndarray  # сертифицирован при p_g = search_cap, реальный лимит ≥ cap

    def __len__(self) -> int:
        return len(self.limits)

    def __getitem__(self, node: int) -> NodeLimit:
        return NodeLimit(int(self.limits[node]), bool(self.never_certified[node]), bool(self.capped[node]))


def robust_limits(model: GcnModel, graph: Graph, local_limit: int, search_cap: int,
                  method: str = "poly-topk", mode: str = "both",
                  labels: Optional[np.ndarray] = None, nodes=None, **options) -> RobustLimitVector:
    """
    p̂ для всех узлов (или только для nodes); на каждом шаге сертифицируются
    только еще живые узлы. Для узлов вне nodes лимит 0 без флагов.
    """
    if search_cap < 0:
        raise DataError("search cap must be non-negative", field="cap")
    if labels is None:
        labels = predict(model, graph).labels
    options = {**options, "monotone": False}

    n = graph.num_nodes
    limits = np.zeros(n, dtype=int)
    alive = np.zeros(n, dtype=bool)
    alive[np.arange(n) if nodes is None else np.asarray(nodes, dtype=int)] = True
    searched = alive.copy()
    limits[searched] = search_cap
    budget = PerturbationBudget(local_limit, 0, mode)
    for p in range(search_cap + 1):
        judgments = certify_nodes(model, graph, budget.with_global(p), np.flatnonzero(alive),
                                  method, labels, **options)
        failed = [j.node for j in judgments if not j.certified]
        limits[failed] = p - 1
        alive[failed] = False
        if not alive.any():
            break

    never = limits < 0
    limits[never] = 0
    capped = alive.copy()
    log.info("collective: %d/%d nodes reach the search cap %d, %d never certified",
             int(capped.sum()), int(searched.sum()), search_cap, int(never.sum()))
    return RobustLimitVector(limits, search_cap, never, capped)


def max_robust_limit(model: GcnModel, graph: Graph, local_limit: int, node: int, cap: int,
                     method: str = "poly-topk", mode: str = "both", **options) -> NodeLimit:
    """Наибольший p_g ≤ cap, при котором узел сертифицирован; 0 и never_certified, если не сертифицирован никогда"""
    if not 0 <= node < graph.num_nodes:
        raise DataError(f"node {node} is outside the graph of {graph.num_nodes} nodes", field="node")
    return robust_limits(model, graph, local_limit, cap, method, mode, nodes=[node], **options)[node]
