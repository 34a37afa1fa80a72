"""Enums and application configuration."""

import json
import logging
import os
from enum import Enum
from pathlib import Path
from typing import Optional, Union

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError

from manifold_ar.errors import ConfigError

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parent.parent / "config.json"


class ManifoldKind(str, Enum):
    """Homogeneous spaces supported by the simulator and estimators."""

    ORTHOGONAL = "orthogonal"
    STIEFEL = "stiefel"
    GRASSMANN = "grassmann"


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


class EstimatorKind(str, Enum):
    """Estimation strategies."""

    BARYCENTRE = "barycentre"  # step-wise inversion + Karcher mean, O(n) only
    CG = "cg"  # conjugate gradient on the Pade cost, St/Gr

    @classmethod
    def for_manifold(cls, kind: ManifoldKind) -> "EstimatorKind":
        return cls.BARYCENTRE if kind == ManifoldKind.ORTHOGONAL else cls.CG


class PathSettings(BaseModel):
    log_dir: str = Field(default="logs", description="Directory for rotating log files")


class GlobalSettings(BaseModel):
    enable_colors: bool = True
    debug_mode: bool = False


class DefaultSettings(BaseModel):
    workers: int = Field(default=1, ge=1, description="Threads used for sweep trials")


class AppConfig(BaseModel):
    """Runtime settings read from config.json, overridable from the environment."""

    paths: PathSettings = Field(default_factory=PathSettings)
    globals: GlobalSettings = Field(default_factory=GlobalSettings)
    defaults: DefaultSettings = Field(default_factory=DefaultSettings)

    @property
    def log_level(self) -> int:
        name = os.getenv("MANIFOLD_AR_LOG_LEVEL")
        if name:
            return logging.getLevelName(name.upper())
        return logging.DEBUG if self.globals.debug_mode else logging.INFO


def load_app_config(path: Optional[Union[str, Path]] = None) -> AppConfig:
    """
    Load config.json and apply .env / environment overrides.

    A missing file yields the defaults; a malformed one raises ConfigError.
    """
    load_dotenv()
    config_path = Path(path) if path else DEFAULT_CONFIG_PATH
    data = {}
    if config_path.exists():
        try:
            with open(config_path) as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Failed to parse {config_path}: {e}") from e
    else:
        logger.debug("No config file at %s, using defaults", config_path)

    try:
        config = AppConfig(**data)
    except ValidationError as e:
        raise ConfigError(f"Invalid app config {config_path}: {e}") from e

    if os.getenv("MANIFOLD_AR_LOG_DIR"):
        config.paths.log_dir = os.environ["MANIFOLD_AR_LOG_DIR"]
    if os.getenv("MANIFOLD_AR_WORKERS"):
        try:
            config.defaults.workers = max(1, int(os.environ["MANIFOLD_AR_WORKERS"]))
        except ValueError as e:
            raise ConfigError("MANIFOLD_AR_WORKERS must be an integer") from e
    return config
