# app/main.py
"""
Локальный запуск GCN Certifier Studio.

    python -m app.main [--host 0.0.0.0] [--port 7861] [--no-browser]
"""
from __future__ import annotations

import argparse
import logging
import os
import signal
import sys
from typing import Optional, Sequence

import gradio as gr

from app.config import get_config
from app.studio import CertifierStudio
from app.ui.tabs import build_interface

log = logging.getLogger("gcn_certifier")


def _parse_args(argv: Optional[Sequence[str]]) -> argparse.Namespace:
    p = argparse.ArgumentParser(prog="app.main", description="GCN Certifier Studio")
    p.add_argument("--host", default="0.0.0.0")
    p.add_argument("--port", type=int, default=7861)
    p.add_argument("--no-browser", action="store_true", help="не открывать вкладку браузера")
    return p.parse_args(argv)


def _install_shutdown(studio: CertifierStudio):
    def _stop(signum, _frame):
        log.info("🛑 Сигнал %s, закрываю историю запусков", signal.Signals(signum).name)
        try:
            studio.db.close()
        finally:
            sys.exit(0)

    for sig in (signal.SIGINT, signal.SIGTERM):
        signal.signal(sig, _stop)


def main(argv: Optional[Sequence[str]] = None):
    args = _parse_args(argv)
    # Gradio ходит на localhost, прокси ему мешает
    os.environ.setdefault("NO_PROXY", "localhost,127.0.0.1")
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    cfg = get_config()
    cfg.ensure_dirs()
    studio = CertifierStudio()
    _install_shutdown(studio)

    c = cfg.certifier
    log.info("🚀 GCN Certifier Studio на http://%s:%d", args.host, args.port)
    log.info("🛡️ %s, флипы %s, потоков %d, исполнение %s", c.method, c.mode, c.threads, c.execution)
    log.info("🔢 Лимит оракула %d, история в %s", cfg.oracle.cap, cfg.storage.db_path)

    demo: gr.Blocks = build_interface(studio)
    demo.launch(server_name=args.host, server_port=args.port, share=False, inbrowser=not args.no_browser)


if __name__ == "__main__":
    main()
