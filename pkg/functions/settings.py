import os
from dataclasses import dataclass
from typing import Optional, Tuple

from dotenv import load_dotenv

from modules.custom_logger import LoggingManager
from modules.errors import ConfigError


@dataclass(frozen=True)
class Settings:
    log_level: str = 'warn'
    log_dir: Optional[str] = None
    eps_div: float = 1e-12
    eps_v: float = 1e-9
    eps_yaw: float = 1e-3
    dt: float = 0.01


def _float_env(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw.strip() == '':
        return default
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"{name} must be a number, got {raw!r}") from None
    if not value > 0:
        raise ConfigError(f"{name} must be positive, got {value}")
    return value


def get_settings() -> Tuple[Settings, LoggingManager]:
    """Load settings from the environment (and a .env file) and create the shared logger"""
    load_dotenv()

    settings = Settings(
        log_level=os.getenv('NTRAILER_LOG', 'warn').strip().lower() or 'warn',
        log_dir=os.getenv('NTRAILER_LOG_DIR') or None,
        eps_div=_float_env('NTRAILER_EPS_DIV', 1e-12),
        eps_v=_float_env('NTRAILER_EPS_V', 1e-9),
        eps_yaw=_float_env('NTRAILER_EPS_YAW', 1e-3),
        dt=_float_env('NTRAILER_DT', 0.01),
    )
    logger = LoggingManager(settings.log_level)

    return settings, logger
