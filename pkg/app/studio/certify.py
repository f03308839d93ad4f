# app/studio/certify.py
from __future__ import annotations
import logging
import gradio as gr
from .common import StudioContext

log = logging.getLogger("gcn_certifier")


class CertifyModule:
    def __init__(self, ctx: StudioContext):
        self.ctx = ctx

    def load_files(self, graph_file, model_file):
        if graph_file is None or model_file is None:
            return "❌ Выберите файл графа и файл модели", self.ctx.stats_md()
        try:
            c = self.ctx.load(graph_file, model_file)
            g, m = c.graph, c.model
            msg = (
                "✅ **Загружено**\n\n"
                f"- Граф: {c.graph_name}, {g.num_nodes} узлов, {int(g.adjacency.sum() // 2)} ребер, "
                f"{g.num_features} признаков\n"
                f"- Модель: {c.model_name}, {m.num_layers} слоя, {m.num_classes} классов, "
                f"{m.num_parameters} параметров"
            )
            return msg, self.ctx.stats_md()
        except Exception as e:
            log.exception("load_files failed")
            return f"❌ Ошибка загрузки: {e}", self.ctx.stats_md()

    def certify(self, local_limit, global_limit, method, mode, counterexamples, progress=gr.Progress()):
        try:
            c = self.ctx.ensure_certifier()
            budget = c.budget(int(local_limit), int(global_limit), mode)

            def cb(v, d): progress(v, desc=d)
            result = c.certify(budget, method, counterexamples=bool(counterexamples), progress_callback=cb)
            command = "counterexample" if counterexamples else "certify"
            run_id = self.ctx.record_certify(command, result)

            table = [[r["node"], round(r["margin"], 6), "✅" if r["certified"] else "—", r["counterexample_flips"]]
                     for r in result.rows()]
            msg = (
                f"✅ **Запуск #{run_id}**: {method}, p_l={budget.local_limit}, p_g={budget.global_limit}, "
                f"режим {budget.mode}\n\n"
                f"- Сертифицировано: {sum(j.certified for j in result.judgments)}/{len(result.judgments)} "
                f"(нижняя оценка {result.lower_ratio:.3f})\n"
            )
            if counterexamples:
                msg += (f"- Контрпримеров: {len(result.counterexamples)} "
                        f"(верхняя оценка {result.upper_ratio:.3f})\n")
            msg += f"- Время: {result.metadata['runtime_ms']:.1f} мс"
            return msg, table, self.ctx.stats_md()
        except Exception as e:
            log.exception("certify failed")
            return f"❌ Ошибка сертификации: {e}", [], self.ctx.stats_md()
