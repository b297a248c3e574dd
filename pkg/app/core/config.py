"""
============================================================================
CONFIGURATION MODULE
============================================================================
Module ini berisi semua konfigurasi: Settings dari environment variables
(prefix PROTOSCRIPT_) dan RunConfig untuk satu run CLI.

Urutan resolusi RunConfig (rendah -> tinggi):
    1. Defaults di schemas
    2. Environment (Settings)
    3. Command-line flags
    4. File --config (JSON)
    5. Nilai yang dipaksa subcommand (`fixed`, mis. finetune ->
       train.freeze_placements = true)

Cara penggunaan:
    from app.core.config import settings, resolve_run_config

    print(settings.PROJECT_NAME)
    config = resolve_run_config("run.json", {"seed": 3})
============================================================================
"""

import json
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from app.core.errors import ConfigError
from app.core.logging import get_logger
from app.schemas.analysis import AnalysisOptions
from app.schemas.corpus import CharsetPolicy
from app.schemas.filter import FilterParams
from app.schemas.model import TrainConfig
from app.schemas.synth import SynthSpec

logger = get_logger(__name__)


class Settings(BaseSettings):
    """
    Settings dari environment variables dan .env file.

    Attributes:
        PROJECT_NAME (str): Nama project
        ENVIRONMENT (str): development / production
        LOG_LEVEL (str): Level logging default
        DEFAULT_SEED (int): Seed jika tidak ada --seed
        PROTO_SIDE (int): Prototype side K
        LINE_HEIGHT (int): Line height H
        N_JOBS (int): joblib workers untuk alignment
        OUTPUT_DIR (str): Output directory default
        MODEL_SUFFIX (str): Suffix file model
    """

    model_config = SettingsConfigDict(env_prefix="PROTOSCRIPT_", env_file=".env", case_sensitive=True, extra="ignore")

    # ========================================================================
    # APPLICATION SETTINGS
    # ========================================================================
    PROJECT_NAME: str = "protoscript"
    ENVIRONMENT: str = "development"
    LOG_LEVEL: str = "INFO"

    # ========================================================================
    # RUN DEFAULTS
    # ========================================================================
    DEFAULT_SEED: int = 0
    PROTO_SIDE: int = 64
    LINE_HEIGHT: int = 64
    N_JOBS: int = 1
    OUTPUT_DIR: str = "out"
    MODEL_SUFFIX: str = ".pscm"


# ============================================================================
# SINGLETON INSTANCE
# ============================================================================
settings = Settings()


# ============================================================================
# RUN CONFIG
# ============================================================================

class PathsConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    corpus: Optional[str] = Field(None, description="Corpus manifest (JSON)")
    reference: Optional[str] = Field(None, description="Reference model file")
    out_dir: str = Field("out", description="Output directory")


class RunConfig(BaseModel):
    """
    Merged view semua parameter satu run. Ditulis sebagai run_config.json
    di setiap output directory.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    seed: int = 0
    train: TrainConfig = Field(default_factory=TrainConfig)
    filter: FilterParams = Field(default_factory=FilterParams)
    analysis: AnalysisOptions = Field(default_factory=AnalysisOptions)
    charset: CharsetPolicy = Field(default_factory=CharsetPolicy)
    synth: SynthSpec = Field(default_factory=SynthSpec)
    paths: PathsConfig = Field(default_factory=PathsConfig)

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, indent=2) + "\n"


def _deep_merge(base: Dict[str, Any], override: Mapping[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _nest(flat: Mapping[str, Any]) -> Dict[str, Any]:
    """{"train.max_rounds": 3} -> {"train": {"max_rounds": 3}}; None dilewati."""
    nested: Dict[str, Any] = {}
    for dotted, value in flat.items():
        if value is None:
            continue
        node = nested
        *parents, leaf = dotted.split(".")
        for part in parents:
            node = node.setdefault(part, {})
        node[leaf] = value
    return nested


def _lookup(nested: Mapping[str, Any], dotted: str) -> Any:
    node: Any = nested
    for part in dotted.split("."):
        if not isinstance(node, Mapping) or part not in node:
            return None
        node = node[part]
    return node


def environment_layer(env: Settings) -> Dict[str, Any]:
    return _nest(
        {
            "seed": env.DEFAULT_SEED,
            "train.proto_side": env.PROTO_SIDE,
            "train.line_height": env.LINE_HEIGHT,
            "train.n_jobs": env.N_JOBS,
            "synth.proto_side": env.PROTO_SIDE,
            "synth.line_height": env.LINE_HEIGHT,
            "paths.out_dir": env.OUTPUT_DIR,
        }
    )


def load_config_file(path: Optional[str]) -> Dict[str, Any]:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError([f"config file not found: {path}"])
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})"])
    if not isinstance(data, dict):
        raise ConfigError([f"{path}: top level must be a JSON object"])
    return data


def resolve_run_config(
    config_path: Optional[str] = None,
    flags: Optional[Mapping[str, Any]] = None,
    env: Optional[Settings] = None,
    fixed: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """
    Build RunConfig dari semua layers.

    Args:
        config_path (str, optional): JSON config file (prioritas tertinggi)
        flags (dict): Dotted keys dari command line, None = tidak di-set
        env (Settings): Default: singleton `settings`
        fixed (dict): Dotted keys yang dipaksa command, menang atas file

    Returns:
        RunConfig: Config tervalidasi. `train.seed` dan `synth.seed` ikut
        `seed` jika tidak di-set eksplisit.

    Raises:
        ConfigError: Dengan pesan per field

    Example:
        >>> resolve_run_config(None, {"seed": 5}).train.seed
        5
    """
    layered = environment_layer(env or settings)
    layered = _deep_merge(layered, _nest(flags or {}))
    layered = _deep_merge(layered, load_config_file(config_path))
    for dotted, value in (fixed or {}).items():
        current = _lookup(layered, dotted)
        if current is not None and current != value:
            logger.warning("%s=%r overridden by the command: %r", dotted, current, value)
    layered = _deep_merge(layered, _nest(fixed or {}))
    for section in ("train", "synth"):
        block = layered.setdefault(section, {})
        if isinstance(block, dict):
            block.setdefault("seed", layered.get("seed", 0))
    try:
        return RunConfig.model_validate(layered)
    except ValidationError as exc:
        raise ConfigError(
            f"{'.'.join(str(part) for part in err['loc'])}: {err['msg']}" for err in exc.errors()
        )
