# app/studio/history.py
from __future__ import annotations
from typing import List
from .common import StudioContext


class HistoryModule:
    def __init__(self, ctx: StudioContext):
        self.ctx = ctx

    def stats_md(self) -> str:
        return self.ctx.stats_md()

    def get_runs_for_display(self):
        return self.ctx.runs_for_display()

    def view_run(self, run_id: int) -> str:
        if not run_id:
            return ""
        run = self.ctx.db.get_run(run_id)
        if not run:
            return "❌ Запуск не найден"
        out = [
            f"### #{run['id']} {run['command']} • {run['method']}",
            f"- Граф: {run['graph_name']}, модель: {run['model_name']}",
            f"- p_l={run['local_budget']}, p_g={run['global_budget']}",
        ]
        if run["lower_ratio"] is not None:
            out.append(f"- Нижняя оценка: {run['lower_ratio']:.3f}")
        if run["upper_ratio"] is not None:
            out.append(f"- Верхняя оценка: {run['upper_ratio']:.3f}")
        if run["nodes"]:
            out += ["", "| узел | отступ | сертифицирован | контрпример |", "|---|---|---|---|"]
            for n in run["nodes"]:
                out.append(f"| {n['node']} | {n['margin']:.6g} | {'✅' if n['certified'] else '—'} | "
                           f"{n['counterexample'] or ''} |")
        return "\n".join(out)

    def search_runs(self, query: str) -> str:
        if not query or not query.strip():
            return "⚠️ Введите поисковый запрос"
        try:
            res = self.ctx.db.search_runs(query.strip())
            if not res:
                return "🔍 Ничего не найдено"
            out = [f"🔍 **Найдено**: {len(res)}", ""]
            for r in res:
                out.append(f"**#{r['id']} {r['command']}** {r['method']} • {r['graph_name']} • "
                           f"📅 {str(r['created_at'])[:19]}")
            return "\n\n".join(out)
        except Exception as e:
            return f"❌ Ошибка поиска: {e}"

    def delete_runs(self, run_ids: List[int]) -> str:
        if not run_ids:
            return "ℹ️ Нечего удалять."
        for rid in run_ids:
            self.ctx.db.delete_run(rid)
        return f"✅ Удалено запусков: {len(run_ids)}"
