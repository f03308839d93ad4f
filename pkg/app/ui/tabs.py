from __future__ import annotations
import gradio as gr
from app.config import METHODS, MODES
from app.ui.js import RESTORE_TAB_JS, RUN_HOTKEY_JS, remember_tab_js
from app.studio import CertifierStudio

# CSS: вертикальный список запусков в «История»
CUSTOM_CSS = """
#runs_radio_list .wrap, #runs_checks_list .wrap {
  display: grid !important;
  grid-template-columns: 1fr !important;
  gap: 6px !important;
}
#runs_radio_list .wrap > label, #runs_checks_list .wrap > label {
  width: 100% !important;
  margin: 0 !important;
  padding: 8px 10px !important;
  border-radius: 8px !important;
  border: 1px solid rgba(255,255,255,0.08) !important;
}
#runs_radio_list, #runs_checks_list {
  max-height: 420px;
  overflow-y: auto;
}
"""


def _encode(label: str, rid: int) -> str:
    return f"{rid} ::: {label}"


def _decode(s: str) -> int:
    return int(s.split(" ::: ", 1)[0])


def _budget_controls(cfg):
    with gr.Row():
        local_limit = gr.Number(label="p_l (на узел)", value=1, precision=0, minimum=0)
        method = gr.Dropdown(label="Метод", choices=list(METHODS), value=cfg.certifier.method)
        mode = gr.Dropdown(label="Флипы", choices=list(MODES), value=cfg.certifier.mode)
    return local_limit, method, mode


def build_interface(studio: CertifierStudio) -> gr.Blocks:
    cfg = studio.config
    with gr.Blocks(title="GCN Certifier Studio", theme=gr.themes.Soft(), css=CUSTOM_CSS) as demo:
        _init = gr.State("")

        demo.load(fn=lambda: "", inputs=None, outputs=[_init], js=RESTORE_TAB_JS)
        demo.load(fn=lambda: "", inputs=None, outputs=[_init], js=RUN_HOTKEY_JS)

        gr.Markdown("# 🛡️ GCN Certifier Studio")

        with gr.Tabs():
            # ------------------------ СЕРТИФИКАЦИЯ ------------------------
            with gr.Tab("🛡️ Сертификация") as tab_cert:
                tab_cert.select(fn=lambda: "", inputs=None, outputs=[_init], js=remember_tab_js("🛡️ Сертификация"))

                with gr.Row():
                    with gr.Column(scale=2):
                        with gr.Row():
                            graph_file = gr.File(label="Граф (JSON)", file_count="single", file_types=[".json"])
                            model_file = gr.File(label="Модель (JSON)", file_count="single", file_types=[".json"])
                        btn_load = gr.Button("📂 Загрузить")
                    with gr.Column(scale=1):
                        stats_md = gr.Markdown(studio.stats_md())
                load_md = gr.Markdown()

                local_limit, method, mode = _budget_controls(cfg)
                with gr.Row():
                    global_limit = gr.Number(label="p_g (всего)", value=1, precision=0, minimum=0)
                    with_cx = gr.Checkbox(label="Искать контрпримеры", value=True)
                btn_cert = gr.Button("🛡️ Сертифицировать", variant="primary", elem_id="certify_run")

                cert_md = gr.Markdown()
                cert_table = gr.Dataframe(headers=["узел", "отступ", "сертифицирован", "контрпример"],
                                          interactive=False)

                btn_load.click(studio.load_files, [graph_file, model_file], [load_md, stats_md])

                def _certify_guard(pl, pg, m, md, cx, progress=gr.Progress(track_tqdm=True)):
                    return studio.run_certify(pl, pg, m, md, cx, progress=progress)

                btn_cert.click(_certify_guard, [local_limit, global_limit, method, mode, with_cx],
                               [cert_md, cert_table, stats_md])

            # ------------------------ РАЗВЕРТКА ------------------------
            with gr.Tab("📈 Развертка") as tab_sweep:
                tab_sweep.select(fn=lambda: "", inputs=None, outputs=[_init], js=remember_tab_js("📈 Развертка"))

                sw_local, sw_method, sw_mode = _budget_controls(cfg)
                with gr.Row():
                    sw_lo = gr.Number(label="p_g от", value=1, precision=0, minimum=0)
                    sw_hi = gr.Number(label="p_g до", value=5, precision=0, minimum=0)
                btn_sweep = gr.Button("📈 Построить", variant="primary", elem_id="sweep_run")
                sweep_md = gr.Markdown()
                sweep_table = gr.Dataframe(headers=["p_g", "нижняя", "верхняя", "мс"], interactive=False)

                btn_sweep.click(studio.run_sweep, [sw_local, sw_lo, sw_hi, sw_method, sw_mode], [sweep_md, sweep_table])

            # ------------------------ ЛИМИТЫ ------------------------
            with gr.Tab("🎯 Лимиты") as tab_coll:
                tab_coll.select(fn=lambda: "", inputs=None, outputs=[_init], js=remember_tab_js("🎯 Лимиты"))

                co_local, co_method, co_mode = _budget_controls(cfg)
                search_cap = gr.Number(label="Предел поиска", value=cfg.collective.search_cap, precision=0, minimum=0)
                btn_coll = gr.Button("🎯 Найти лимиты", variant="primary", elem_id="collective_run")
                coll_md = gr.Markdown()
                coll_table = gr.Dataframe(headers=["узел", "p̂", "никогда"], interactive=False)

                btn_coll.click(studio.run_collective, [co_local, search_cap, co_method, co_mode], [coll_md, coll_table])

            # ------------------------ ИСТОРИЯ ------------------------
            with gr.Tab("🗂️ История") as tab_hist:
                tab_hist.select(fn=lambda: "", inputs=None, outputs=[_init], js=remember_tab_js("🗂️ История"))

                def _choices():
                    return [_encode(label, rid) for label, rid in studio.get_runs_for_display()]

                with gr.Row():
                    runs_radio = gr.Radio(label="Просмотр", choices=_choices(), value=None, elem_id="runs_radio_list")
                    runs_checks = gr.CheckboxGroup(label="Удаление", choices=_choices(), value=[],
                                                   elem_id="runs_checks_list")
                with gr.Row():
                    btn_refresh = gr.Button("🔄 Обновить")
                    btn_delete = gr.Button("🗑️ Удалить выбранные", variant="stop")
                q = gr.Textbox(label="Поиск (команда, метод, файл)", lines=1)
                out_search = gr.Markdown()
                run_view = gr.Markdown()
                action_md = gr.Markdown()

                runs_radio.change(lambda sel: studio.view_run(_decode(sel)) if sel else "", [runs_radio], [run_view])
                q.submit(studio.search_runs, [q], [out_search])

                def _refresh():
                    ch = _choices()
                    return gr.update(choices=ch, value=None), gr.update(choices=ch, value=[]), ""

                gr.on(triggers=[tab_hist.select], fn=_refresh, inputs=None, outputs=[runs_radio, runs_checks, run_view])
                btn_refresh.click(_refresh, None, [runs_radio, runs_checks, run_view])

                def _delete(selected):
                    msg = studio.delete_runs([_decode(s) for s in selected or []])
                    return msg, *_refresh()

                btn_delete.click(_delete, [runs_checks], [action_md, runs_radio, runs_checks, run_view])

            # ------------------------ ⚙️ SETTINGS ------------------------
            with gr.Tab("⚙️ Settings") as tab_settings:
                tab_settings.select(fn=lambda: "", inputs=None, outputs=[_init], js=remember_tab_js("⚙️ Settings"))

                with gr.Row():
                    s_method = gr.Dropdown(label="Метод по умолчанию", choices=list(METHODS), value=cfg.certifier.method)
                    s_mode = gr.Dropdown(label="Флипы по умолчанию", choices=list(MODES), value=cfg.certifier.mode)
                    s_threads = gr.Number(label="Потоков", value=cfg.certifier.threads, precision=0, minimum=1)
                with gr.Row():
                    s_execution = gr.Dropdown(label="Исполнение", choices=["backsub", "forward"],
                                              value=cfg.certifier.execution)
                    s_combine = gr.Checkbox(label="Учитывать интервальную оценку",
                                            value=bool(cfg.certifier.combine_interval))
                    s_slope = gr.Slider(label="λ нижней границы ReLU", minimum=0.0, maximum=1.0, step=0.05,
                                        value=cfg.certifier.relu_lower_slope)
                with gr.Row():
                    s_oracle_cap = gr.Number(label="Лимит перебора оракула", value=cfg.oracle.cap, precision=0)
                    s_search_cap = gr.Number(label="Предел поиска лимитов", value=cfg.collective.search_cap,
                                             precision=0)

                save_btn = gr.Button("💾 Сохранить настройки", variant="primary")
                save_status = gr.Markdown()
                save_btn.click(
                    fn=studio.update_settings,
                    inputs=[s_method, s_mode, s_threads, s_execution, s_combine, s_slope, s_oracle_cap, s_search_cap],
                    outputs=[save_status],
                )

    return demo
