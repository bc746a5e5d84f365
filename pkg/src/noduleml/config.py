"""Run configuration: flat key = value files, environment overrides, defaults.

Precedence: command-line flags > NODULEML_* environment variables > config
file > built-in defaults. Environment variable names are the upper-cased key
with dots replaced by double underscores (cv.folds -> NODULEML_CV__FOLDS).
The fully resolved configuration is written next to every command's outputs
so a run can be reproduced from that file alone.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Any

from .errors import ConfigError
from .models import MODEL_KINDS
from .models.base import _DEFAULTS as MODEL_DEFAULTS

ENV_PREFIX = "NODULEML_"

SIGNAL_PRESETS = ("default", "strong", "none")

# key -> (type tag, default); type tags: str, int, float, bool, opt_str, opt_float
_KEYS: dict[str, tuple[str, Any]] = {
    "seed": ("int", 20220324),
    "workers": ("int", 1),
    "out": ("str", "runs/out"),
    "threshold": ("float", 0.5),
    "models": ("str", ",".join(MODEL_KINDS)),
    "data.path": ("opt_str", None),
    "data.mapping": ("opt_str", None),
    "synth.patients": ("int", 724),
    "synth.seed": ("opt_int", None),
    "synth.signal": ("str", "default"),
    "synth.base_rate": ("float", 0.6648),
    "cv.folds": ("int", 10),
    "cv.reps": ("int", 10),
    "cv.seed": ("opt_int", None),
    "cv.macro": ("bool", False),
    "bootstrap.replicates": ("int", 1000),
    "bootstrap.seed": ("opt_int", None),
    "bootstrap.identity": ("bool", False),
    "bootstrap.patient_level": ("bool", False),
    "importance.shuffles": ("int", 10),
    "importance.seed": ("opt_int", None),
    "expert.path": ("opt_str", None),
    "compare.model": ("str", "random_forest"),
}

_HP_TYPES = {int: "int", float: "float", bool: "bool"}


def _model_key_type(key: str) -> str:
    parts = key.split(".")
    if len(parts) != 3 or parts[0] != "model":
        raise ConfigError(f"unknown configuration key '{key}'")
    _, kind, hp = parts
    if kind not in MODEL_KINDS:
        raise ConfigError(f"unknown model kind '{kind}' in key '{key}'")
    if hp == "seed":
        return "int"
    defaults = MODEL_DEFAULTS[kind]
    if hp not in defaults:
        raise ConfigError(f"'{hp}' is not a hyperparameter of {kind}")
    default = defaults[hp]
    if default is None:
        return "opt_float"
    return _HP_TYPES.get(type(default), "float")


def _parse_typed(key: str, text: str, type_tag: str):
    text = text.strip()
    try:
        if type_tag == "int":
            return int(text)
        if type_tag == "opt_int":
            return None if text.lower() in ("", "none") else int(text)
        if type_tag == "float":
            return float(text)
        if type_tag == "opt_float":
            return None if text.lower() in ("", "none") else float(text)
        if type_tag == "bool":
            if text.lower() in ("true", "yes", "on", "1"):
                return True
            if text.lower() in ("false", "no", "off", "0"):
                return False
            raise ValueError(text)
        if type_tag == "opt_str":
            return None if text == "" else text
        return text
    except ValueError:
        raise ConfigError(f"cannot parse '{key} = {text}' as {type_tag}") from None


def _render(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class RunConfig:
    entries: dict[str, Any] = dc_field(default_factory=dict)

    def __post_init__(self):
        resolved = {k: default for k, (_, default) in _KEYS.items()}
        for key, value in self.entries.items():
            if key not in _KEYS:
                _model_key_type(key)  # validates model.* keys
            resolved[key] = value
        self.entries = resolved
        self.validate()

    def validate(self) -> None:
        for kind in self.model_kinds():
            if kind not in MODEL_KINDS:
                raise ConfigError(f"unknown model kind '{kind}' in 'models'")
        if self["cv.folds"] < 2:
            raise ConfigError("cv.folds must be at least 2")
        if self["cv.reps"] < 1:
            raise ConfigError("cv.reps must be at least 1")
        if self["bootstrap.replicates"] < 1:
            raise ConfigError("bootstrap.replicates must be at least 1")
        if self["importance.shuffles"] < 1:
            raise ConfigError("importance.shuffles must be at least 1")
        if self["workers"] < 1:
            raise ConfigError("workers must be at least 1")
        if self["synth.signal"] not in SIGNAL_PRESETS:
            raise ConfigError(
                f"synth.signal must be one of {SIGNAL_PRESETS}")
        if self["compare.model"] not in MODEL_KINDS:
            raise ConfigError(f"compare.model must be one of {MODEL_KINDS}")
        if not 0.0 < self["synth.base_rate"] < 1.0:
            raise ConfigError("synth.base_rate must be in (0, 1)")

    def __getitem__(self, key: str):
        if key in self.entries:
            return self.entries[key]
        if key.startswith("model."):
            _model_key_type(key)
            parts = key.split(".")
            if parts[2] == "seed":
                return self["seed"]
            return MODEL_DEFAULTS[parts[1]][parts[2]]
        raise ConfigError(f"unknown configuration key '{key}'")

    def seed_for(self, stage: str) -> int:
        value = self.entries.get(f"{stage}.seed")
        return self["seed"] if value is None else value

    def model_kinds(self) -> list[str]:
        return [k.strip() for k in self["models"].split(",") if k.strip()]

    def model_overrides(self, kind: str) -> dict[str, Any]:
        prefix = f"model.{kind}."
        return {key[len(prefix):]: value for key, value in self.entries.items()
                if key.startswith(prefix) and key.split(".")[2] != "seed"}

    def model_seed(self, kind: str) -> int:
        return self.entries.get(f"model.{kind}.seed", self["seed"])

    def render(self) -> str:
        lines = [f"{key} = {_render(self.entries[key])}"
                 for key in sorted(self.entries)]
        return "\n".join(lines) + "\n"


def _parse_lines(text: str, origin: str) -> dict[str, Any]:
    entries: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        type_tag = _KEYS[key][0] if key in _KEYS else _model_key_type(key)
        entries[key] = _parse_typed(key, value, type_tag)
    return entries


def read_config(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return _parse_lines(path.read_text(encoding="utf-8"), str(path))


def env_overrides(environ: dict[str, str] | None = None) -> dict[str, Any]:
    env = os.environ if environ is None else environ
    entries: dict[str, Any] = {}
    for name, text in env.items():
        if not name.startswith(ENV_PREFIX):
            continue
        key = name[len(ENV_PREFIX):].lower().replace("__", ".")
        type_tag = _KEYS[key][0] if key in _KEYS else _model_key_type(key)
        entries[key] = _parse_typed(key, text, type_tag)
    return entries


def build_config(
    config_path: str | Path | None = None,
    cli_entries: dict[str, Any] | None = None,
    environ: dict[str, str] | None = None,
) -> RunConfig:
    entries: dict[str, Any] = {}
    if config_path is not None:
        entries.update(read_config(config_path))
    entries.update(env_overrides(environ))
    if cli_entries:
        entries.update({k: v for k, v in cli_entries.items() if v is not None})
    return RunConfig(entries=entries)
