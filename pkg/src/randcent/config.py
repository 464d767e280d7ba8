"""TOML study and model configuration."""
from __future__ import annotations

import sys
from importlib import resources
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .experiments import STUDIES, StudyConfig
from .netmodel import ModelError, ModelSpec

_STUDY_KEYS = {"study", "model", "n", "reps", "seed", "phi", "bands", "params", "threads"}


class ConfigError(ValueError):
    pass


def parse_toml(text: str, source: str = "<config>") -> dict[str, Any]:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        # message carries line and column
        raise ConfigError(f"{source}: {exc}") from None


def load_toml(path) -> dict[str, Any]:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from None
    return parse_toml(text, str(path))


def _field(data: dict, key: str, kind, source: str, default=None):
    if key not in data:
        return default
    val = data[key]
    if kind is int and (isinstance(val, bool) or not isinstance(val, int)):
        raise ConfigError(f"{source}: field '{key}' must be an integer, got {val!r}")
    if kind is list and not isinstance(val, list):
        raise ConfigError(f"{source}: field '{key}' must be an array, got {val!r}")
    if kind is dict and not isinstance(val, dict):
        raise ConfigError(f"{source}: field '{key}' must be a table")
    return val


def model_from_mapping(data: dict, source: str = "<config>") -> ModelSpec:
    try:
        return ModelSpec.from_mapping(data)
    except ModelError as exc:
        raise ConfigError(f"{source}: [model] {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: [model] invalid value ({exc})") from None


def study_from_mapping(data: dict, source: str = "<config>") -> StudyConfig:
    unknown = set(data) - _STUDY_KEYS
    if unknown:
        raise ConfigError(f"{source}: unknown field(s) {', '.join(sorted(unknown))}")
    study = data.get("study")
    if study not in STUDIES:
        raise ConfigError(f"{source}: field 'study' must be one of {', '.join(STUDIES)}; got {study!r}")
    model = _field(data, "model", dict, source)
    if model is not None:
        model_from_mapping(model, source)
    n = _field(data, "n", list, source, [])
    if any(isinstance(v, bool) or not isinstance(v, int) or v < 2 for v in n):
        raise ConfigError(f"{source}: field 'n' must list integers >= 2, got {n!r}")
    reps = _field(data, "reps", int, source, 1)
    if reps < 1:
        raise ConfigError(f"{source}: field 'reps' must be >= 1, got {reps}")
    seed = _field(data, "seed", int, source, 0)
    if seed < 0:
        raise ConfigError(f"{source}: field 'seed' must be nonnegative, got {seed}")
    phi = data.get("phi")
    if phi is not None and not isinstance(phi, (int, float, str)):
        raise ConfigError(f"{source}: field 'phi' must be a number or a preset name")
    bands = _field(data, "bands", dict, source, {})
    for q, per_n in bands.items():
        if not isinstance(per_n, dict):
            raise ConfigError(f"{source}: field 'bands.{q}' must be a table of n = [lo, hi]")
        for key, band in per_n.items():
            if not (isinstance(band, list) and len(band) == 2 and band[0] <= band[1]):
                raise ConfigError(f"{source}: field 'bands.{q}.{key}' must be [lo, hi] with lo <= hi")
    return StudyConfig(
        study=study,
        model=model,
        n=list(n),
        reps=reps,
        seed=seed,
        phi=phi,
        bands=bands,
        params=_field(data, "params", dict, source, {}),
        threads=_field(data, "threads", int, source),
    )


def load_study_config(path) -> StudyConfig:
    return study_from_mapping(load_toml(path), str(path))


def default_config_text(study: str) -> str:
    if study not in STUDIES:
        raise ConfigError(f"unknown study {study!r}; valid ids: {', '.join(STUDIES)}")
    return resources.files("randcent").joinpath("configs").joinpath(f"{study}.toml").read_text()


def default_study_config(study: str) -> StudyConfig:
    return study_from_mapping(parse_toml(default_config_text(study), f"<default {study}>"), f"<default {study}>")
