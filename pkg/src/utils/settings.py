"""Layered run configuration.

Precedence, lowest first: ``config.py`` defaults, the user settings file
(``config.SETTINGS_FILE_PATH``), a ``--config`` file, then command-line flags.
Settings files are flat JSON objects; keys are case-insensitive.
"""
import json
import logging
import os
from dataclasses import fields, replace
from typing import Any, Dict, Optional

import config
from models.training_entities import LossWeights, RunConfig, TrainConfig
from utils.errors import ConfigError

logger = logging.getLogger(__name__)

_TRAIN_DEFAULTS = TrainConfig()
_WEIGHT_DEFAULTS = LossWeights()
_RUN_DEFAULTS = RunConfig()

TRAIN_KEYS = {f.name for f in fields(TrainConfig)} - {"weights"}
WEIGHT_KEYS = {f.name for f in fields(LossWeights)}
RUN_KEYS = {f.name for f in fields(RunConfig)} - {"train"}
NULLABLE_KEYS = {"ticker", "grad_clip"}
POSITIVE_INT_LIST_KEYS = {"d_channels", "d_dense_units"}


def _coerce(key: str, value: Any, default: Any) -> Any:
    if value is None and key in NULLABLE_KEYS:
        return None
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"Setting '{key}' must be true or false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"Setting '{key}' must be an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"Setting '{key}' must be a number, got {value!r}")
        return float(value)
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"Setting '{key}' must be a list, got {value!r}")
        if key in POSITIVE_INT_LIST_KEYS:
            if any(isinstance(v, bool) or not isinstance(v, int) or v < 1 for v in value):
                raise ConfigError(f"Setting '{key}' must be a list of positive integers, got {value!r}")
        elif any(not isinstance(v, str) for v in value):
            raise ConfigError(f"Setting '{key}' must be a list of strings, got {value!r}")
        return list(value)
    if default is None or isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"Setting '{key}' must be a string, got {value!r}")
        return value
    return value


def read_settings_file(path: str, required: bool = False) -> Dict[str, Any]:
    if not os.path.exists(path):
        if required:
            raise ConfigError(f"Config file not found: {path}")
        logger.info("Settings file not found. Using default configurations.")
        return {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        if required:
            raise ConfigError(f"Config file {path} is not valid JSON: {e}") from e
        logger.error(f"Error decoding settings JSON from {path}: {e}. Using default configurations.")
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must hold a flat JSON object")
    logger.info(f"Settings loaded from {path}")
    return {str(k).lower(): v for k, v in data.items()}


def apply_settings(run: RunConfig, values: Dict[str, Any], source: str) -> RunConfig:
    """A copy of ``run`` with recognised keys from ``values`` applied; unknown keys are logged and ignored."""
    train_updates, weight_updates, run_updates = {}, {}, {}
    for key, value in values.items():
        key = key.lower()
        if key in TRAIN_KEYS:
            train_updates[key] = _coerce(key, value, getattr(_TRAIN_DEFAULTS, key))
        elif key in WEIGHT_KEYS:
            weight_updates[key] = _coerce(key, value, getattr(_WEIGHT_DEFAULTS, key))
        elif key in RUN_KEYS:
            run_updates[key] = _coerce(key, value, getattr(_RUN_DEFAULTS, key))
        else:
            logger.warning(f"Ignoring unknown setting '{key}' from {source}")
    weights = replace(run.train.weights, **weight_updates)
    train = replace(run.train, weights=weights, **train_updates)
    return replace(run, train=train, **run_updates)


def load_run_config(
    overrides: Optional[Dict[str, Any]] = None,
    config_file: Optional[str] = None,
    settings_file: Optional[str] = None,
) -> RunConfig:
    run = RunConfig()
    user_file = settings_file or config.SETTINGS_FILE_PATH
    run = apply_settings(run, read_settings_file(user_file), user_file)
    if config_file:
        run = apply_settings(run, read_settings_file(config_file, required=True), config_file)
    if overrides:
        run = apply_settings(run, {k: v for k, v in overrides.items() if v is not None}, "command line")
    run.validate()
    return run
