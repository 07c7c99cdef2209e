import os
from functools import lru_cache
from pathlib import Path

from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()

output_dir = os.getenv("DQC1_OUTPUT_DIR", "results")


class Settings(BaseSettings):
    """
    Настройки запуска; из окружения читается только каталог вывода
    (DQC1_OUTPUT_DIR)
    """
    model_config = SettingsConfigDict(env_prefix="DQC1_", extra="ignore")

    output_dir: Path = Path(output_dir)


@lru_cache()
def get_settings() -> Settings:
    """
    Функция получает настройки из класса Settings
    """
    return Settings()
