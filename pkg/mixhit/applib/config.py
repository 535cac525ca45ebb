from pathlib import Path
import os

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

_PACKAGE_DIR = Path(__file__).resolve().parent.parent


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        # Priority: environment variables > .env file
        env_prefix="MIXHIT_",
        env_file_encoding="utf-8",
        env_ignore_empty=True,
        case_sensitive=True,
    )

    # Worker pool size for experiments and set enumeration
    THREADS: int = Field(default_factory=lambda: os.cpu_count() or 1, ge=1)
    LOG_LEVEL: str = "INFO"
    # Largest state space for exact subset enumeration in t_H / tau_g
    ENUMERATION_CAP: int = 16
    HITTING_HORIZON_CAP: int = 100_000
    TRACE_STEP_CAP: int = 1_000_000
    HOLDING_CAP: int = 1_000_000
    # Longest contraction profile attached to a MixingResult
    PROFILE_CAP: int = 256
    APPDATA_FOLDER_PATH: Path = _PACKAGE_DIR / "appdata"


# Load .env before creating the Settings instance so pydantic-settings sees it
try:
    from dotenv import load_dotenv

    current_dir = Path(__file__).resolve().parent
    env_paths = [
        current_dir.parent.parent / ".env",  # repository root
        current_dir.parent / ".env",         # mixhit/.env
        Path(os.getcwd()) / ".env",          # current working directory
    ]

    for env_path in env_paths:
        if env_path.exists():
            load_dotenv(env_path, override=False)
            break
    else:
        load_dotenv(override=False)
except Exception:
    pass

config = Settings()
