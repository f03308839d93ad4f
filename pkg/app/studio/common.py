# app/studio/common.py
from __future__ import annotations
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

from app.config import AppConfig, get_config
from app.database import Database
from app.io import CERTIFY_FIELDS, open_output, write_csv

from certifier import Certifier

log = logging.getLogger("gcn_certifier")


@dataclass
class StudioContext:
    """Общий контекст и утилиты для модулей."""
    config: AppConfig = field(default_factory=get_config)
    db: Database = field(default_factory=Database)
    certifier: Optional[Certifier] = None

    # ---- helpers ----
    def load(self, graph_file, model_file) -> Certifier:
        """Файлы из gr.File (или пути) → сертификатор"""
        graph_path = getattr(graph_file, "name", graph_file)
        model_path = getattr(model_file, "name", model_file)
        self.certifier = Certifier.from_files(graph_path, model_path, self.config)
        return self.certifier

    def ensure_certifier(self) -> Certifier:
        if self.certifier is None:
            raise RuntimeError("Сначала загрузите граф и модель")
        return self.certifier

    def save_rows(self, run_id: int, fields, rows: List[dict]) -> Path:
        """CSV с результатами запуска в results_dir"""
        path = Path(self.config.storage.results_dir) / f"run_{run_id}.csv"
        with open_output(path) as f:
            write_csv(f, fields, rows)
        return path

    def record_certify(self, command: str, result) -> int:
        c = self.ensure_certifier()
        meta = result.metadata
        run_id = self.db.add_run(
            command=command,
            method=meta["method"],
            local_budget=meta["local_limit"],
            global_budget=meta["global_limit"],
            graph_name=c.graph_name,
            model_name=c.model_name,
            lower_ratio=result.lower_ratio,
            upper_ratio=result.upper_ratio if result.counterexamples or command == "counterexample" else None,
            runtime_ms=meta["runtime_ms"],
        )
        rows = result.rows()
        self.db.add_node_results(run_id, rows)
        self.save_rows(run_id, CERTIFY_FIELDS, rows)
        return run_id

    # ---- stats ----
    def stats_md(self) -> str:
        s = self.db.get_stats()
        loaded = "—"
        if self.certifier is not None:
            g = self.certifier.graph
            loaded = (f"{self.certifier.graph_name} ({g.num_nodes} узлов, {g.num_features} признаков) + "
                      f"{self.certifier.model_name} ({self.certifier.model.num_layers} слоя)")
        return (
            "📊 **Статистика:**\n"
            f"- Загружено: {loaded}\n"
            f"- Запусков: {s['total_runs']}\n"
            f"- Результатов по узлам: {s['total_node_results']}\n"
            f"- Сертифицировано: {s['certified_nodes']}\n"
            f"- Контрпримеров: {s['counterexamples']}"
        )

    # ---- runs (DESC) ----
    def runs_for_display(self, limit: int = 500) -> List[tuple[str, int]]:
        out: List[tuple[str, int]] = []
        for r in self.db.get_runs(limit):
            budget = ""
            if r["local_budget"] is not None:
                budget = f" p_l={r['local_budget']}"
            if r["global_budget"] is not None:
                budget += f" p_g={r['global_budget']}"
            ratio = f" • {r['lower_ratio']:.2f}" if r["lower_ratio"] is not None else ""
            label = f"#{r['id']} {r['command']} {r['method']}{budget} • {r['graph_name']}{ratio} • {str(r['created_at'])[:19]}"
            out.append((label, r["id"]))
        return out
