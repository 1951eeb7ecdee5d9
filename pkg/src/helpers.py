import logging
import os
from functools import lru_cache
from pathlib import Path
from typing import Annotated, Any, Optional

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, PlainSerializer
from rich.console import Console
from rich.logging import RichHandler
from sympy import Rational
from sympy.core.sympify import SympifyError

load_dotenv()

DEFAULT_CONFIG_PATH = Path(__file__).parent.parent / 'config' / 'defaults.yaml'
CONFIG_PATH = Path(os.getenv('TWINNED_CONFIG', str(DEFAULT_CONFIG_PATH)))


def to_rational(value: Any) -> Rational:
    """Parse an exact rational from an int, a sympy number or a "p/q" string."""
    if isinstance(value, Rational):
        return value
    if isinstance(value, bool) or isinstance(value, float):
        raise ValueError(f"{value!r} is not exact; write rationals as 'p/q'")
    try:
        result = Rational(str(value).strip())
    except (TypeError, ValueError, SympifyError) as exc:
        raise ValueError(f"cannot read {value!r} as a rational") from exc
    if not isinstance(result, Rational):
        raise ValueError(f"cannot read {value!r} as a rational")
    return result


# Exact rational field: accepts "p/q", serializes back to "p/q"
ExactRational = Annotated[
    Any,
    BeforeValidator(to_rational),
    PlainSerializer(lambda r: str(r), return_type=str),
]


class RefinementSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    initial_granularity: int = Field(2, ge=1)
    max_granularity: int = Field(4096, ge=1)
    pl_overlap: ExactRational = Rational(1, 4)


class CheckSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    cap: int = Field(5, ge=0)
    samples: int = Field(20, ge=0)
    seed: int = 0
    max_members: int = Field(64, ge=1)


class LoggingSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    level: str = "INFO"


class Settings(BaseModel):
    """Validated contents of config/defaults.yaml."""

    model_config = ConfigDict(frozen=True)

    refinement: RefinementSettings = RefinementSettings()
    checks: CheckSettings = CheckSettings()
    logging: LoggingSettings = LoggingSettings()


@lru_cache(maxsize=None)
def load_settings(path: Optional[Path] = None) -> Settings:
    """Load and validate the YAML configuration (cached per path)."""
    config_path = Path(path) if path is not None else CONFIG_PATH
    with open(config_path, 'r') as f:
        raw = yaml.safe_load(f) or {}
    level = os.getenv('TWINNED_LOG_LEVEL')
    if level:
        raw.setdefault('logging', {})['level'] = level
    return Settings.model_validate(raw)


def setup_logging(level: Optional[str] = None) -> None:
    """Route package logs through rich at the configured level."""
    level = level or load_settings().logging.level
    logging.basicConfig(
        level=level.upper(),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), rich_tracebacks=True, show_path=False)],
        force=True,
    )
