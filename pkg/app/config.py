# config.py
"""
Конфигурация GCN Certifier Studio
"""
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

log = logging.getLogger("gcn_certifier")

ORACLE_CAP_ENV = "GCN_CERT_ORACLE_CAP"

METHODS = ("poly-topk", "poly-max", "interval-topk", "interval-max")
MODES = ("both", "add-only", "delete-only")


@dataclass
class CertifierConfig:
    """Настройки сертификации"""
    method: str = "poly-topk"  # poly-topk / poly-max / interval-topk / interval-max
    mode: str = "both"  # both / add-only / delete-only
    threads: int = 1
    execution: str = "backsub"  # backsub / forward

    # Итоговая оценка = max(полиэдральная, интервальная); обе корректны
    combine_interval: bool = True

    # Наклон нижней границы ReLU в случае |up| < |lo| (0: по теореме о мин. площади)
    relu_lower_slope: float = 0.0


@dataclass
class OracleConfig:
    """Переборный оракул (только для малых графов)"""
    cap: int = 10_000_000


@dataclass
class CollectiveConfig:
    """Поиск максимального устойчивого лимита"""
    search_cap: int = 100


@dataclass
class TrainingConfig:
    """Робастное обучение"""
    loss: str = "hinge"  # hinge / bce
    hinge_threshold_labeled: float = math.log(90 / 10)
    hinge_threshold_unlabeled: float = math.log(60 / 40)
    use_predicted_labels_for_unlabeled: bool = False
    steps: int = 200
    learning_rate: float = 0.05
    fd_step: float = 1e-4
    max_parameters: int = 2000
    variant: str = "max"  # интервальная оценка для ReLU при обучении: topk / max
    relu_lower_slope: float = 0.0  # λ нижней границы ReLU в обучающей потере
    batch_size: Optional[int] = None  # None: все узлы с метками


@dataclass
class StorageConfig:
    """История запусков"""
    db_path: str = "./data/runs.db"
    results_dir: str = "./data/results"


@dataclass
class AppConfig:
    """Общая конфигурация приложения"""
    certifier: CertifierConfig = field(default_factory=CertifierConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    collective: CollectiveConfig = field(default_factory=CollectiveConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    storage: StorageConfig = field(default_factory=StorageConfig)

    config_file: str = "./data/config.json"  # Путь к файлу конфига

    _sections = ("certifier", "oracle", "collective", "training", "storage")

    def ensure_dirs(self):
        """Создаем необходимые директории (только для студии и записи результатов)"""
        os.makedirs(self.storage.results_dir, exist_ok=True)
        os.makedirs(Path(self.storage.db_path).parent, exist_ok=True)

    def apply_env_overrides(self):
        """Переменные окружения имеют приоритет над файлом"""
        raw = os.environ.get(ORACLE_CAP_ENV)
        if raw:
            try:
                self.oracle.cap = int(raw)
            except ValueError:
                log.warning("⚠️ %s=%r не является целым числом, игнорирую", ORACLE_CAP_ENV, raw)

    def save_to_file(self):
        """Сохранить конфиг в JSON файл"""
        config_dict = {name: asdict(getattr(self, name)) for name in self._sections}

        os.makedirs(Path(self.config_file).parent, exist_ok=True)

        with open(self.config_file, 'w', encoding='utf-8') as f:
            json.dump(config_dict, f, indent=2, ensure_ascii=False)

    def load_from_file(self):
        """Загрузить конфиг из JSON файла"""
        if not os.path.exists(self.config_file):
            return False

        try:
            with open(self.config_file, 'r', encoding='utf-8') as f:
                config_dict = json.load(f)

            for name in self._sections:
                section = getattr(self, name)
                for k, v in config_dict.get(name, {}).items():
                    if hasattr(section, k):
                        setattr(section, k, v)

            return True
        except Exception as e:
            log.warning("⚠️ Ошибка загрузки конфига: %s", e)
            return False


# Глобальный конфиг (синглтон)
_config = None


def get_config() -> AppConfig:
    """Получить глобальный конфиг"""
    global _config
    if _config is None:
        _config = AppConfig()
        if _config.load_from_file():
            log.info("✅ Конфиг загружен из %s", _config.config_file)
        else:
            log.debug("ℹ️ Используется конфиг по умолчанию")
        _config.apply_env_overrides()
    return _config


def reset_config():
    """Сбросить синглтон (тесты, смена файла конфига)"""
    global _config
    _config = None


def update_config(**kwargs):
    """Обновить конфиг и сохранить в файл"""
    config = get_config()

    for key, value in kwargs.items():
        if '.' in key:
            # Вложенные атрибуты: certifier.method
            parts = key.split('.')
            obj = config
            for part in parts[:-1]:
                obj = getattr(obj, part)
            setattr(obj, parts[-1], value)
        else:
            setattr(config, key, value)

    config.save_to_file()
    return config


if __name__ == "__main__":
    cfg = get_config()
    print("Certifier:", cfg.certifier)
    print("Oracle:", cfg.oracle)
    print("Collective:", cfg.collective)
    print("Training:", cfg.training)
    print("Storage:", cfg.storage)
