"""
База данных истории запусков сертификации
"""
import sqlite3
from pathlib import Path
from typing import Dict, List, Optional

from app.config import get_config


class Database:
    def __init__(self, db_path: Optional[str] = None):
        if db_path is None:
            db_path = get_config().storage.db_path

        self.db_path = db_path
        self.conn = None
        self._init_db()

    def _init_db(self):
        """Инициализация базы данных"""
        if self.db_path != ":memory:":
            Path(self.db_path).parent.mkdir(parents=True, exist_ok=True)
        self.conn = sqlite3.connect(self.db_path, check_same_thread=False)
        self.conn.row_factory = sqlite3.Row
        self.conn.execute("PRAGMA foreign_keys = ON")

        self.conn.execute("""
            CREATE TABLE IF NOT EXISTS runs (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                command TEXT NOT NULL,
                method TEXT NOT NULL,
                local_budget INTEGER,
                global_budget INTEGER,
                graph_name TEXT,
                model_name TEXT,
                lower_ratio REAL,
                upper_ratio REAL,
                runtime_ms REAL,
                created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
            )
        """)

        self.conn.execute("""
            CREATE TABLE IF NOT EXISTS node_results (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                run_id INTEGER NOT NULL,
                node INTEGER NOT NULL,
                margin REAL,
                certified INTEGER NOT NULL,
                counterexample TEXT,
                FOREIGN KEY (run_id) REFERENCES runs(id) ON DELETE CASCADE
            )
        """)

        self.conn.execute("CREATE INDEX IF NOT EXISTS idx_runs_method ON runs(method)")
        self.conn.execute("CREATE INDEX IF NOT EXISTS idx_node_results_run_id ON node_results(run_id)")
        self.conn.commit()

    def add_run(self, command: str, method: str, local_budget: Optional[int], global_budget: Optional[int],
                graph_name: str, model_name: str, lower_ratio: Optional[float], upper_ratio: Optional[float],
                runtime_ms: Optional[float]) -> int:
        """Добавить запуск"""
        cursor = self.conn.execute("""
            INSERT INTO runs
            (command, method, local_budget, global_budget, graph_name, model_name, lower_ratio, upper_ratio, runtime_ms)
            VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)
        """, (command, method, local_budget, global_budget, graph_name, model_name,
              lower_ratio, upper_ratio, runtime_ms))
        self.conn.commit()
        return cursor.lastrowid

    def add_node_results(self, run_id: int, rows: List[Dict]):
        """Результаты по узлам: node, margin, certified, counterexample_flips"""
        self.conn.executemany("""
            INSERT INTO node_results (run_id, node, margin, certified, counterexample)
            VALUES (?, ?, ?, ?, ?)
        """, [(run_id, int(r["node"]), float(r["margin"]), int(bool(r["certified"])),
               r.get("counterexample_flips") or None) for r in rows])
        self.conn.commit()

    def get_runs(self, limit: int = 200) -> List[Dict]:
        cursor = self.conn.execute("SELECT * FROM runs ORDER BY id DESC LIMIT ?", (limit,))
        return [dict(row) for row in cursor.fetchall()]

    def get_run(self, run_id: int) -> Optional[Dict]:
        """Запуск вместе с результатами по узлам"""
        row = self.conn.execute("SELECT * FROM runs WHERE id = ?", (run_id,)).fetchone()
        if not row:
            return None
        run = dict(row)
        cursor = self.conn.execute("SELECT * FROM node_results WHERE run_id = ? ORDER BY node", (run_id,))
        run["nodes"] = [dict(r) for r in cursor.fetchall()]
        return run

    def search_runs(self, text: str, limit: int = 50) -> List[Dict]:
        """Поиск по команде, методу и именам файлов"""
        pattern = f"%{text}%"
        cursor = self.conn.execute("""
            SELECT * FROM runs
            WHERE command LIKE ? OR method LIKE ? OR graph_name LIKE ? OR model_name LIKE ?
            ORDER BY id DESC
            LIMIT ?
        """, (pattern, pattern, pattern, pattern, limit))
        return [dict(row) for row in cursor.fetchall()]

    def delete_run(self, run_id: int):
        """Удалить запуск (результаты по узлам удаляются каскадно)"""
        self.conn.execute("DELETE FROM runs WHERE id = ?", (run_id,))
        self.conn.commit()

    def get_stats(self) -> Dict:
        """Получить статистику"""
        stats = {}

        cursor = self.conn.execute("SELECT COUNT(*) as count FROM runs")
        stats['total_runs'] = cursor.fetchone()['count']

        cursor = self.conn.execute("SELECT COUNT(*) as count FROM node_results")
        stats['total_node_results'] = cursor.fetchone()['count']

        cursor = self.conn.execute("SELECT COUNT(*) as count FROM node_results WHERE certified = 1")
        stats['certified_nodes'] = cursor.fetchone()['count']

        cursor = self.conn.execute("SELECT COUNT(*) as count FROM node_results WHERE counterexample IS NOT NULL")
        stats['counterexamples'] = cursor.fetchone()['count']

        return stats

    def close(self):
        """Закрыть соединение с базой"""
        if self.conn:
            self.conn.close()
