"""
Робастное обучение: функции потерь на сертифицированных границах δ* и
градиентный спуск с центральными конечными разностями (модели игрушечного масштаба).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from app.certification import certified_margin_matrix
from app.config import TrainingConfig
from app.errors import DataError
from app.graph_model import GcnModel, Graph, argmax_labels, forward, normalize_adjacency
from app.perturbation import PerturbationBudget

log = logging.getLogger("gcn_certifier")

LOSSES = ("bce", "hinge")


@dataclass(frozen=True)
class RobustLossConfig:
    kind: str = "hinge"
    hinge_threshold_labeled: float = math.log(90 / 10)
    hinge_threshold_unlabeled: float = math.log(60 / 40)
    use_predicted_labels_for_unlabeled: bool = False

    def __post_init__(self):
        if self.kind not in LOSSES:
            raise DataError(f"unknown loss {self.kind!r}, expected bce or hinge", field="loss")
        if not (math.isfinite(self.hinge_threshold_labeled) and math.isfinite(self.hinge_threshold_unlabeled)):
            raise DataError("hinge thresholds must be finite", field="hinge_threshold")

    @classmethod
    def from_training_config(cls, cfg: TrainingConfig) -> "RobustLossConfig":
        return cls(cfg.loss, cfg.hinge_threshold_labeled, cfg.hinge_threshold_unlabeled,
                   cfg.use_predicted_labels_for_unlabeled)


def bce_loss(delta_margins) -> float:
    """−Σ log σ(δ*) = Σ log(1 + e^{−δ*})"""
    return float(np.logaddexp(0.0, -np.asarray(delta_margins, dtype=np.float64)).sum())


def hinge_loss(delta_margins, threshold: float) -> float:
    return float(np.maximum(threshold - np.asarray(delta_margins, dtype=np.float64), 0.0).sum())


@dataclass
class TrainingReport:
    losses: List[float] = field(default_factory=list)
    certified_ratio: List[float] = field(default_factory=list)
    accuracy: List[float] = field(default_factory=list)

    @property
    def steps(self) -> int:
        return max(len(self.losses) - 1, 0)


@dataclass(frozen=True, eq=False)
class _Objective:
    graph: Graph
    budget: PerturbationBudget
    labels: np.ndarray
    labeled: np.ndarray
    loss: RobustLossConfig
    variant: str
    lower_slope: float

    def targets(self, model: GcnModel) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Метки, пороги и маска участвующих узлов"""
        labels = self.labels.copy()
        thresholds = np.where(self.labeled, self.loss.hinge_threshold_labeled, self.loss.hinge_threshold_unlabeled)
        active = self.labeled.copy()
        if self.loss.use_predicted_labels_for_unlabeled:
            predicted = argmax_labels(forward(model, normalize_adjacency(self.graph), self.graph.features))
            labels[~self.labeled] = predicted[~self.labeled]
            active[:] = True
        return labels, thresholds, active

    def value(self, model: GcnModel, batch: np.ndarray) -> float:
        labels, thresholds, active = self.targets(model)
        nodes = batch[active[batch]]
        if nodes.size == 0:
            return 0.0
        # потеря считается на самом бюджете, без накопленного минимума по меньшим p_g
        margins = certified_margin_matrix(model, self.graph, self.budget, labels, self.variant,
                                          lower_slope=self.lower_slope, monotone=False)
        per_node = []
        for i in nodes:
            row = margins[i][~np.isnan(margins[i])]
            if self.loss.kind == "bce":
                per_node.append(bce_loss(row))
            else:
                per_node.append(hinge_loss(row, thresholds[i]))
        return float(np.mean(per_node))


def certified_ratio(model: GcnModel, graph: Graph, budget: PerturbationBudget, variant: str = "topk",
                    lower_slope: float = 0.0) -> float:
    margins = certified_margin_matrix(model, graph, budget, None, variant, lower_slope=lower_slope)
    if margins.shape[1] < 2:
        return 1.0
    return float((np.nanmin(margins, axis=1) > 0).mean())


def accuracy(model: GcnModel, graph: Graph, labels: np.ndarray, mask: np.ndarray) -> float:
    predicted = argmax_labels(forward(model, normalize_adjacency(graph), graph.features))
    return float((predicted[mask] == labels[mask]).mean()) if mask.any() else 0.0


def train_robust(model: GcnModel, graph: Graph, labels, budget: PerturbationBudget,
                 config: Optional[RobustLossConfig] = None, steps: int = 200, learning_rate: float = 0.05,
                 seed: int = 0, *, labeled_mask=None, variant: str = "max", fd_step: float = 1e-4,
                 max_parameters: int = 2000, batch_size: Optional[int] = None,
                 eval_variant: str = "topk", lower_slope: float = 0.0) -> Tuple[GcnModel, TrainingReport]:
    """
    Градиентный спуск по робастной потере. Градиент: центральные разности
    (loss(θ + h) − loss(θ − h)) / 2h по каждому параметру. lower_slope > 0 дает ReLU в
    случае |up| < |lo| ненулевой наклон нижней границы, иначе градиент через него пропадает.
    """
    config = config or RobustLossConfig()
    labels = np.asarray(labels, dtype=int)
    n = graph.num_nodes
    if labels.shape != (n,):
        raise DataError(f"expected {n} labels, got {labels.shape}", field="labels")
    labeled = np.ones(n, dtype=bool) if labeled_mask is None else np.asarray(labeled_mask, dtype=bool)
    if ((labels[labeled] < 0) | (labels[labeled] >= model.num_classes)).any():
        raise DataError("labels must lie in [0, num_classes)", field="labels")
    if model.num_parameters > max_parameters:
        raise DataError(
            f"model has {model.num_parameters} parameters, numerical gradients are limited to "
            f"{max_parameters}; shrink hidden widths or the number of layers", field="layers")
    if not 0.0 <= lower_slope <= 1.0:
        raise DataError(f"ReLU lower slope must lie in [0, 1], got {lower_slope}", field="relu_lower_slope")
    if steps < 0 or fd_step <= 0:
        raise DataError("steps must be non-negative and the finite-difference step positive")

    objective = _Objective(graph, budget, np.where(labeled, labels, 0), labeled, config, variant, lower_slope)
    rng = np.random.default_rng(seed)
    theta = model.parameters()
    report = TrainingReport()

    def record(current: GcnModel, batch: np.ndarray):
        report.losses.append(objective.value(current, batch))
        report.certified_ratio.append(certified_ratio(current, graph, budget, eval_variant, lower_slope))
        report.accuracy.append(accuracy(current, graph, labels, labeled))

    everyone = np.arange(n)
    record(model, everyone)
    log.info("robust training: %d parameters, %d steps, loss %.4f, certified %.2f",
             theta.size, steps, report.losses[0], report.certified_ratio[0])
    if steps == 0:
        return model, report

    for step in range(steps):
        batch = everyone if batch_size is None or batch_size >= n else np.sort(
            rng.choice(n, size=batch_size, replace=False))
        grad = np.zeros_like(theta)
        for p in range(theta.size):
            bump = np.zeros_like(theta)
            bump[p] = fd_step
            grad[p] = (objective.value(model.with_parameters(theta + bump), batch)
                       - objective.value(model.with_parameters(theta - bump), batch)) / (2 * fd_step)
        theta = theta - learning_rate * grad
        model = model.with_parameters(theta)
        record(model, everyone)
        if (step + 1) % 20 == 0 or step == steps - 1:
            log.info("step %d/%d: loss %.4f, certified %.2f, accuracy %.2f", step + 1, steps,
                     report.losses[-1], report.certified_ratio[-1], report.accuracy[-1])
    return model, report
