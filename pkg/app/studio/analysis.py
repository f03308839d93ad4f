# app/studio/analysis.py
from __future__ import annotations
import logging
from app.io import COLLECTIVE_FIELDS, SWEEP_FIELDS
from app.metrics import total_uncertainty_region
from .common import StudioContext

log = logging.getLogger("gcn_certifier")


class AnalysisModule:
    """Развертки по бюджету и максимальные устойчивые лимиты"""

    def __init__(self, ctx: StudioContext):
        self.ctx = ctx

    def sweep(self, local_limit, global_lo, global_hi, method, mode):
        try:
            c = self.ctx.ensure_certifier()
            lo, hi = int(global_lo), int(global_hi)
            if lo < 0 or hi < lo:
                return "❌ Диапазон p_g должен удовлетворять 0 ≤ от ≤ до", []
            sweeps = c.sweep([int(local_limit)], range(lo, hi + 1), method, mode)
            rows = [r for s in sweeps for r in s.rows()]
            region = total_uncertainty_region(sweeps)
            runtime = sum(r["runtime_ms"] for r in rows)
            run_id = self.ctx.db.add_run("sweep", method, int(local_limit), None, c.graph_name, c.model_name,
                                         None, None, runtime)
            path = self.ctx.save_rows(run_id, SWEEP_FIELDS, rows)
            table = [[r["p_g"], round(r["lower"], 4), round(r["upper"], 4), round(r["runtime_ms"], 1)] for r in rows]
            msg = (
                f"✅ **Развертка #{run_id}**: {method}, p_l={int(local_limit)}, p_g ∈ [{lo}, {hi}]\n\n"
                f"- Область неопределенности: **{region:.3f}**\n"
                f"- Время: {runtime:.1f} мс\n"
                f"💾 {path}"
            )
            return msg, table
        except Exception as e:
            log.exception("sweep failed")
            return f"❌ Ошибка развертки: {e}", []

    def collective(self, local_limit, search_cap, method, mode):
        try:
            c = self.ctx.ensure_certifier()
            limits = c.collective(int(local_limit), int(search_cap), method, mode)
            rows = [{"node": i, "max_robust_limit": int(limits.limits[i]),
                     "never_certified": bool(limits.never_certified[i])} for i in range(len(limits))]
            run_id = self.ctx.db.add_run("collective", method, int(local_limit), int(search_cap), c.graph_name,
                                         c.model_name, None, None, None)
            self.ctx.save_rows(run_id, COLLECTIVE_FIELDS, rows)
            table = [[r["node"], f"≥ {r['max_robust_limit']}" if limits.capped[r["node"]] else r["max_robust_limit"],
                      "✗" if r["never_certified"] else ""] for r in rows]
            msg = (
                f"✅ **Лимиты #{run_id}**: {method}, p_l={int(local_limit)}, предел поиска {int(search_cap)}\n\n"
                f"- Никогда не сертифицированы: {int(limits.never_certified.sum())}\n"
                f"- Достигли предела: {int(limits.capped.sum())}"
            )
            return msg, table
        except Exception as e:
            log.exception("collective failed")
            return f"❌ Ошибка: {e}", []
