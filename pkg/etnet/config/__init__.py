"""
Configuration package: hyperparameter presets and run-config loading.

Precedence is defaults < preset < config file < explicit overrides.
"""

import json
import os
from typing import Any, Dict, Optional

import yaml
from pydantic import BaseModel, ValidationError

from ..models import RunConfig
from ..utils.errors import ConfigError

CONFIG_DIR = os.path.dirname(__file__)


def _load_yaml(name: str) -> Dict[str, Any]:
    with open(os.path.join(CONFIG_DIR, name), encoding="utf-8") as f:
        return yaml.safe_load(f) or {}


def presets() -> Dict[str, Dict[str, Any]]:
    return _load_yaml("presets.yaml").get("Presets", {})


def logging_settings() -> Dict[str, Any]:
    settings = _load_yaml("logging.yaml").get("Logging", {})
    env_level = os.getenv(settings.get("env_var", "ETNET_LOG_LEVEL"))
    if env_level:
        settings["level"] = env_level
    return settings


def preset(name: str) -> Dict[str, Any]:
    known = presets()
    if name not in known:
        raise ConfigError(f"Unknown preset {name!r}", {"preset": name, "known": sorted(known)})
    return dict(known[name])


def read_json(path: str) -> Dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"Config file not found: {path}", {"path": path}) from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file is not valid JSON: {e.msg}", {"path": path, "line": e.lineno}) from None
    if not isinstance(data, dict):
        raise ConfigError("Config file must contain a JSON object", {"path": path})
    return data


def validation_error(e: ValidationError, what: str) -> ConfigError:
    """Turn a pydantic error into a ConfigError naming the offending fields"""
    fields = [".".join(str(p) for p in err["loc"]) for err in e.errors()]
    return ConfigError(
        f"Invalid {what}: {', '.join(fields)}",
        {"fields": fields, "errors": [err["msg"] for err in e.errors()]},
    )


def parse(model: type, data: Dict[str, Any], what: str) -> Any:
    try:
        return model.model_validate(data)  # type: ignore[attr-defined]
    except ValidationError as e:
        raise validation_error(e, what) from None


def load_config(
    path: Optional[str] = None,
    preset_name: Optional[str] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> RunConfig:
    merged: Dict[str, Any] = {}
    if preset_name:
        merged.update(preset(preset_name))
    if path:
        merged.update(read_json(path))
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return parse(RunConfig, merged, "config")


def dump_config(config: BaseModel) -> Dict[str, Any]:
    return config.model_dump(by_alias=True)
