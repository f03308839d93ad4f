"""
Сертификатор устойчивости GCN: связывает граф, модель и конфиг
и выполняет все сценарии (сертификация, контрпримеры, развертки, лимиты, обучение, оракул)
"""
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.certification import Counterexample, NodeJudgment, certify_nodes, find_counterexamples, parse_method
from app.collective import RobustLimitVector, robust_limits
from app.config import AppConfig, get_config
from app.graph_model import GcnModel, Graph, predict
from app.io import load_graph, load_model
from app.metrics import RobustnessSweep, build_sweep, graph_robustness_ratio
from app.perturbation import PerturbationBudget, exact_min_margins, exact_robustness
from app.robust_training import RobustLossConfig, TrainingReport, train_robust

log = logging.getLogger("gcn_certifier")


@dataclass
class CertifyResult:
    judgments: List[NodeJudgment]
    counterexamples: Dict[int, Counterexample] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def lower_ratio(self) -> float:
        return graph_robustness_ratio(self.judgments)

    @property
    def upper_ratio(self) -> float:
        return 1.0 - len(self.counterexamples) / len(self.judgments)

    def rows(self) -> List[dict]:
        return [
            {
                "node": j.node,
                "margin": j.margin,
                "certified": j.certified,
                "counterexample_flips": (self.counterexamples[j.node].flips.to_tokens()
                                         if j.node in self.counterexamples else ""),
            }
            for j in self.judgments
        ]


class Certifier:
    def __init__(self, graph: Graph, model: GcnModel, config: Optional[AppConfig] = None):
        if config is None:
            config = get_config()

        self.config = config
        self.graph = graph
        self.model = model
        model.check_input(graph.num_features)
        self.graph_name = "graph"
        self.model_name = "model"

    @classmethod
    def from_files(cls, graph_path, model_path, config: Optional[AppConfig] = None) -> "Certifier":
        certifier = cls(load_graph(graph_path), load_model(model_path), config)
        certifier.graph_name = Path(graph_path).name
        certifier.model_name = Path(model_path).name
        return certifier

    def _options(self) -> dict:
        cfg = self.config.certifier
        return {
            "combine_interval": cfg.combine_interval,
            "lower_slope": cfg.relu_lower_slope,
            "execution": cfg.execution,
            "threads": max(int(cfg.threads), 1),
        }

    def budget(self, local_limit: int, global_limit: int, mode: Optional[str] = None) -> PerturbationBudget:
        return PerturbationBudget(local_limit, global_limit, mode or self.config.certifier.mode)

    def certify(self, budget: PerturbationBudget, method: Optional[str] = None,
                counterexamples: bool = False, progress_callback=None) -> CertifyResult:
        """
        Сертификация всех узлов

        Returns:
            CertifyResult: суждения по узлам (по возрастанию номера) и, по запросу, контрпримеры
        """
        method = method or self.config.certifier.method
        options = self._options()
        start = time.perf_counter()

        if progress_callback:
            progress_callback(0.1, "Сертификация...")

        judgments = certify_nodes(self.model, self.graph, budget, range(self.graph.num_nodes), method,
                                  **options)
        found = {}
        if counterexamples:
            if progress_callback:
                progress_callback(0.6, "Поиск контрпримеров...")
            found = find_counterexamples(self.model, self.graph, budget, judgments, options["threads"])

        if progress_callback:
            progress_callback(1.0, "Готово!")

        result = CertifyResult(judgments, found, {
            "method": method,
            "local_limit": budget.local_limit,
            "global_limit": budget.global_limit,
            "mode": budget.mode,
            "runtime_ms": (time.perf_counter() - start) * 1000.0,
        })
        log.info("%s p_l=%d p_g=%d: certified %d/%d", method, budget.local_limit, budget.global_limit,
                 sum(j.certified for j in judgments), len(judgments))
        return result

    def bounds(self, budget: PerturbationBudget, method: Optional[str] = None) -> Tuple[float, float]:
        """(нижняя, верхняя) доли устойчивых узлов; интервальный метод не дает контрпримеров"""
        method = method or self.config.certifier.method
        domain, _ = parse_method(method)
        result = self.certify(budget, method, counterexamples=(domain == "poly"))
        return result.lower_ratio, result.upper_ratio

    def sweep(self, local_limits: Sequence[int], global_limits: Sequence[int],
              method: Optional[str] = None, mode: Optional[str] = None) -> List[RobustnessSweep]:
        mode = mode or self.config.certifier.mode
        return [build_sweep(lambda b: self.bounds(b, method), p_l, global_limits, mode) for p_l in local_limits]

    def collective(self, local_limit: int, search_cap: Optional[int] = None, method: Optional[str] = None,
                   mode: Optional[str] = None) -> RobustLimitVector:
        cap = self.config.collective.search_cap if search_cap is None else search_cap
        options = self._options()
        return robust_limits(self.model, self.graph, local_limit, cap, method or self.config.certifier.method,
                             mode or self.config.certifier.mode, **options)

    def oracle(self, budget: PerturbationBudget, cap: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
        """Точная устойчивость и минимальные отступы перебором"""
        cap = self.config.oracle.cap if cap is None else cap
        return (exact_robustness(self.model, self.graph, budget, cap),
                exact_min_margins(self.model, self.graph, budget, cap))

    def train(self, budget: PerturbationBudget, labels: Optional[np.ndarray] = None, seed: int = 0,
              steps: Optional[int] = None, learning_rate: Optional[float] = None) -> Tuple[GcnModel, TrainingReport]:
        """Робастное обучение; без меток: самообучение на текущих предсказаниях"""
        cfg = self.config.training
        if labels is None:
            labels = predict(self.model, self.graph).labels
        labels = np.asarray(labels, dtype=int)
        model, report = train_robust(
            self.model, self.graph, np.where(labels >= 0, labels, 0), budget,
            RobustLossConfig.from_training_config(cfg),
            steps=cfg.steps if steps is None else steps,
            learning_rate=cfg.learning_rate if learning_rate is None else learning_rate,
            seed=seed,
            labeled_mask=labels >= 0,
            variant=cfg.variant,
            fd_step=cfg.fd_step,
            max_parameters=cfg.max_parameters,
            batch_size=cfg.batch_size,
            lower_slope=cfg.relu_lower_slope,
        )
        self.model = model
        return model, report
