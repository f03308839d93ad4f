# app/studio/__init__.py
"""
Публичный фасад CertifierStudio.
Внутри использует композицию модулей: common, certify, analysis, history, settings.
"""
from __future__ import annotations
import logging
from .common import StudioContext
from .certify import CertifyModule
from .analysis import AnalysisModule
from .history import HistoryModule
from .settings import SettingsModule


log = logging.getLogger("gcn_certifier")


class CertifierStudio:
    def __init__(self, ctx: StudioContext | None = None):
        self.ctx = ctx or StudioContext()
        # подмодули
        self.certify = CertifyModule(self.ctx)
        self.analysis = AnalysisModule(self.ctx)
        self.history = HistoryModule(self.ctx)
        self.settings = SettingsModule(self.ctx)

    @property
    def config(self):
        return self.ctx.config

    @property
    def db(self):
        return self.ctx.db

    def stats_md(self) -> str:
        return self.ctx.stats_md()

    # certify
    def load_files(self, graph_file, model_file):
        return self.certify.load_files(graph_file, model_file)

    def run_certify(self, local_limit, global_limit, method, mode, counterexamples, progress=None):
        return self.certify.certify(local_limit, global_limit, method, mode, counterexamples,
                                    progress or (lambda *a, **k: None))

    # analysis
    def run_sweep(self, local_limit, global_lo, global_hi, method, mode):
        return self.analysis.sweep(local_limit, global_lo, global_hi, method, mode)

    def run_collective(self, local_limit, search_cap, method, mode):
        return self.analysis.collective(local_limit, search_cap, method, mode)

    # history
    def get_runs_for_display(self):
        return self.history.get_runs_for_display()

    def view_run(self, run_id: int) -> str:
        return self.history.view_run(run_id)

    def search_runs(self, query: str) -> str:
        return self.history.search_runs(query)

    def delete_runs(self, run_ids):
        return self.history.delete_runs(run_ids)

    # settings
    def update_settings(self, *args, **kwargs):
        return self.settings.update_settings(*args, **kwargs)
