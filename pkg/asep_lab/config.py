"""
Runtime configuration read from the environment (and an optional .env file)
"""
import os
from pathlib import Path
from typing import List, Optional

import structlog
from dotenv import load_dotenv

from asep_lab.errors import SettingsError

logger = structlog.get_logger(__name__)


def load_env_file(path: Optional[str] = None) -> bool:
    """Load a .env file without overriding variables that are already set"""
    path = path or os.getenv("ASEP_LAB_ENV_FILE")
    env_path = Path(path) if path else Path(__file__).resolve().parent.parent / ".env"
    if not env_path.exists():
        return False
    return load_dotenv(env_path, override=False)


load_env_file()


def _env_bool(name: str, default: str = "false") -> bool:
    return os.getenv(name, default).strip().lower() in ("1", "true", "yes", "on")


class Settings:
    """Simple settings class, values fixed at construction"""

    def __init__(self):
        self.output_dir = os.getenv("ASEP_LAB_OUTPUT_DIR", "results")
        self.workers = int(os.getenv("ASEP_LAB_WORKERS", str(os.cpu_count() or 1)))
        self.safety = float(os.getenv("ASEP_LAB_SAFETY", "5"))
        self.chunk_events = int(os.getenv("ASEP_LAB_CHUNK_EVENTS", "65536"))
        self.audit = _env_bool("ASEP_LAB_AUDIT")

        # Logging
        self.log_level = os.getenv("LOG_LEVEL", "INFO").upper()
        self.log_format = os.getenv("LOG_FORMAT", "console").lower()

        self._validate_settings()

    def _validate_settings(self):
        """Collect warnings and fail on values nothing downstream can work with"""
        warnings: List[str] = []
        errors: List[str] = []

        if self.workers < 1:
            errors.append("ASEP_LAB_WORKERS must be at least 1")
        if self.safety < 1:
            errors.append("ASEP_LAB_SAFETY must be at least 1")
        elif self.safety < 3:
            warnings.append("ASEP_LAB_SAFETY below 3 lets boundary suppression reach the origin at long times")
        if self.chunk_events < 1:
            errors.append("ASEP_LAB_CHUNK_EVENTS must be positive")
        if self.log_level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            warnings.append(f"LOG_LEVEL {self.log_level!r} is unknown, using INFO")
            self.log_level = "INFO"
        if self.log_format not in ("console", "json"):
            warnings.append(f"LOG_FORMAT {self.log_format!r} is unknown, using console")
            self.log_format = "console"

        for warning in warnings:
            logger.warning("settings_warning", detail=warning)
        if errors:
            raise SettingsError("; ".join(errors))


# Global settings instance
_settings = None


def get_settings() -> Settings:
    """Get settings singleton"""
    global _settings
    if _settings is None:
        _settings = Settings()
    return _settings


def reset_settings() -> None:
    """Drop the cached settings so the next get_settings() re-reads the environment"""
    global _settings
    _settings = None
