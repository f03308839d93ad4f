# app/studio/settings.py
from __future__ import annotations
from .common import StudioContext
from app.config import METHODS, MODES, get_config, update_config


class SettingsModule:
    def __init__(self, ctx: StudioContext):
        self.ctx = ctx

    def update_settings(self, method, mode, threads, execution, combine_interval, relu_lower_slope,
                        oracle_cap, search_cap) -> str:
        if method not in METHODS or mode not in MODES:
            return "❌ Неизвестный метод или режим"
        if int(threads) < 1:
            return "❌ Потоков должно быть не меньше 1"
        if not 0.0 <= float(relu_lower_slope) <= 1.0:
            return "❌ Наклон нижней границы ReLU должен лежать в [0, 1]"

        update_config(**{
            "certifier.method": method,
            "certifier.mode": mode,
            "certifier.threads": int(threads),
            "certifier.execution": execution,
            "certifier.combine_interval": bool(combine_interval),
            "certifier.relu_lower_slope": float(relu_lower_slope),
            "oracle.cap": int(oracle_cap),
            "collective.search_cap": int(search_cap),
        })
        self.ctx.config = get_config()
        if self.ctx.certifier is not None:
            self.ctx.certifier.config = self.ctx.config

        return (
            "✅ **Настройки сохранены**\n\n"
            f"💾 {self.ctx.config.config_file}\n\n"
            f"- Метод: {method}\n"
            f"- Режим флипов: {mode}\n"
            f"- Потоков: {int(threads)}\n"
            f"- Исполнение: {execution}\n"
            f"- Учет интервальной оценки: {'✓' if combine_interval else '✗'}\n"
            f"- λ нижней границы ReLU: {float(relu_lower_slope)}\n"
            f"- Лимит оракула: {int(oracle_cap)}\n"
            f"- Предел поиска лимитов: {int(search_cap)}"
        )
