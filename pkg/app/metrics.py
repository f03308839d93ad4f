"""
Агрегаты уровня графа: доля сертифицированных узлов и область неопределенности
между нижней (корректной) и верхней (полной) оценками устойчивости.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from app.certification import NodeJudgment
from app.errors import DataError
from app.perturbation import PerturbationBudget

log = logging.getLogger("gcn_certifier")

_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class RobustnessSweep:
    local_budget: int
    global_budgets: Tuple[int, ...]
    lower: np.ndarray
    upper: np.ndarray
    runtime_ms: Optional[np.ndarray] = None

    def __post_init__(self):
        budgets = tuple(int(p) for p in self.global_budgets)
        lower = np.asarray(self.lower, dtype=np.float64)
        upper = np.asarray(self.upper, dtype=np.float64)
        runtime = (np.zeros(len(budgets)) if self.runtime_ms is None
                   else np.asarray(self.runtime_ms, dtype=np.float64))
        if not (lower.shape == upper.shape == runtime.shape == (len(budgets),)):
            raise DataError("sweep vectors must have one entry per global budget")
        if (lower > upper + _TOL).any():
            p = budgets[int(np.argmax(lower > upper + _TOL))]
            raise DataError(f"lower robustness bound exceeds the upper bound at p_g={p}")
        object.__setattr__(self, "global_budgets", budgets)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "runtime_ms", runtime)

    def rows(self) -> List[dict]:
        return [
            {"p_l": self.local_budget, "p_g": p, "lower": float(lo), "upper": float(up), "runtime_ms": float(ms)}
            for p, lo, up, ms in zip(self.global_budgets, self.lower, self.upper, self.runtime_ms)
        ]


def ratio(flags: Iterable[bool]) -> float:
    flags = np.asarray(list(flags), dtype=bool)
    if flags.size == 0:
        raise DataError("robustness ratio of an empty graph is undefined", field="num_nodes")
    return float(flags.mean())


def graph_robustness_ratio(judgments: Sequence[NodeJudgment]) -> float:
    return ratio(j.certified for j in judgments)


def uncertainty_region(sweep: RobustnessSweep) -> float:
    """Σ_p (upper − lower) по перечисленным глобальным бюджетам"""
    gap = sweep.upper - sweep.lower
    if (gap < -_TOL).any():
        raise DataError("lower robustness bound exceeds the upper bound")
    return float(np.maximum(gap, 0.0).sum())


def monotonicity_violations(sweep: RobustnessSweep) -> List[str]:
    """Нижняя и верхняя оценки не должны расти с p_g"""
    issues = []
    for name, values in (("lower", sweep.lower), ("upper", sweep.upper)):
        for a in range(1, len(values)):
            if values[a] > values[a - 1] + _TOL:
                issues.append(f"{name} bound grows from p_g={sweep.global_budgets[a - 1]} "
                              f"to p_g={sweep.global_budgets[a]}: {values[a - 1]} -> {values[a]}")
    return issues


def build_sweep(evaluate: Callable[[PerturbationBudget], Tuple[float, float]], local_budget: int,
                global_budgets: Sequence[int], mode: str = "both") -> RobustnessSweep:
    """evaluate(budget) -> (lower, upper); время каждого бюджета в миллисекундах"""
    lower, upper, runtime = [], [], []
    base = PerturbationBudget(local_budget, 0, mode)
    for p in global_budgets:
        start = time.perf_counter()
        lo, up = evaluate(base.with_global(int(p)))
        runtime.append((time.perf_counter() - start) * 1000.0)
        lower.append(lo)
        upper.append(up)
        log.debug("p_l=%d p_g=%d: lower=%.4f upper=%.4f (%.1f ms)", local_budget, p, lo, up, runtime[-1])
    sweep = RobustnessSweep(local_budget, tuple(global_budgets), np.array(lower), np.array(upper), np.array(runtime))
    for issue in monotonicity_violations(sweep):
        # верхняя оценка зависит от силы поиска контрпримеров
        log.warning("⚠️ %s", issue)
    return sweep


def total_uncertainty_region(sweeps: Sequence[RobustnessSweep]) -> float:
    """Сумма областей по нескольким локальным бюджетам"""
    return float(sum(uncertainty_region(s) for s in sweeps))
