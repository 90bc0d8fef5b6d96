"""Runtime settings.

Resolution order, lowest to highest priority: dataclass defaults, a YAML settings
file, ``QUASINIT_*`` environment variables, explicit keyword overrides (the CLI
flags).
"""

__all__ = ['ENV_PREFIX', 'load_settings', 'Settings']

import logging
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, NotRequired, TypedDict

import yaml

from ._typing import is_matching_typed_dict
from .errors import PlanError
from .qmc.sobol import DEFAULT_CACHE_BUDGET

logger = logging.getLogger(__name__)

ENV_PREFIX = 'QUASINIT_'


@dataclass(frozen=True)
class Settings:
    direction_file: Path | None = None
    data_dir: Path = Path('data')
    out_dir: Path = Path('out')
    jobs: int = 1
    master_seed: int = 0
    sobol_cache: bool = False
    cache_budget_bytes: int = DEFAULT_CACHE_BUDGET
    log_level: str = 'WARNING'

    def __post_init__(self):
        for name in ('direction_file', 'data_dir', 'out_dir'):
            if (value := getattr(self, name)) is not None and not isinstance(value, Path):
                object.__setattr__(self, name, Path(value))
        if self.jobs < 1:
            raise PlanError(f"expected jobs >= 1, got {self.jobs} instead")


class _SettingsFile(TypedDict):
    direction_file: NotRequired[str | None]
    data_dir: NotRequired[str]
    out_dir: NotRequired[str]
    jobs: NotRequired[int]
    master_seed: NotRequired[int]
    sobol_cache: NotRequired[bool]
    cache_budget_bytes: NotRequired[int]
    log_level: NotRequired[str]


def _coerce(name: str, raw: str) -> Any:
    match name:
        case 'jobs' | 'master_seed' | 'cache_budget_bytes':
            try:
                return int(raw)
            except ValueError:
                raise PlanError(f"{ENV_PREFIX}{name.upper()}: expected an integer, got {raw!r}") from None
        case 'sobol_cache':
            return raw.strip().lower() in ('1', 'true', 'yes', 'on')
    return raw or None


def _from_env(environ) -> dict[str, Any]:
    out = {}
    for f in fields(Settings):
        if (raw := environ.get(f"{ENV_PREFIX}{f.name.upper()}")) is not None:
            out[f.name] = _coerce(f.name, raw)
    return out


def load_settings(path: str | os.PathLike = None, *, environ=None, **overrides) -> Settings:
    """Resolve :class:`Settings` from a YAML file, the environment and ``overrides``.

    ``path`` falls back to ``$QUASINIT_CONFIG``. Overrides equal to None are
    ignored, so unset CLI flags leave lower layers alone.
    """
    environ = os.environ if environ is None else environ
    path = path or environ.get(f"{ENV_PREFIX}CONFIG")
    layers: dict[str, Any] = {}
    if path:
        with open(path, 'r', encoding='utf-8') as f:
            doc = yaml.safe_load(f) or {}
        ok, msg = is_matching_typed_dict(doc, _SettingsFile)
        if not ok:
            err = PlanError(msg)
            err.add_note(f"settings file {str(path)!r}")
            raise err
        layers.update(doc)
        logger.debug("settings from %s: %s", path, doc)
    layers.update(_from_env(environ))
    layers.update({k: v for k, v in overrides.items() if v is not None})
    return replace(Settings(), **layers)
