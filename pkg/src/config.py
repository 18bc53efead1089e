"""Flat ``key = value`` run configuration.

Keys are the field names of the configuration models plus a few convenience keys
(``preset``, ``arm_power``, ``squeeze_db``, ``chi_over_gamma``, ``filters``) that are
resolved here before validation.
"""

import logging
import math
from collections.abc import Mapping
from functools import cache
from pathlib import Path
from typing import Any

import yaml
from pydantic import BaseModel, ValidationError

from .errors import ConfigError
from .fullmodel import squeeze_for_gain
from .models import (
    DetectorConfig,
    EosFit,
    FilterCavity,
    FrequencyGrid,
    PopulationModel,
    ReadoutConfig,
    RunConfig,
)
from .twomode import chi_from_fraction
from .utils.tools import PRESETS_PATH, join_nonempty

logger = logging.getLogger(__name__)

REQUIRED_KEYS = (
    "wavelength",
    "power",
    "arm_length",
    "se_length",
    "mass",
    "t_itm",
    "t_se",
)
LIST_KEYS = ("loss_grid", "gain_grid", "bandwidth_fractions")
CONVENIENCE_KEYS = ("preset", "arm_power", "squeeze_db", "chi_over_gamma", "filters")
RUN_KEYS = frozenset(RunConfig.model_fields) - {
    "detector",
    "readout",
    "population",
    "eos",
    "grid",
    "preset",
}
SECTIONS: dict[str, type[BaseModel]] = {
    "detector": DetectorConfig,
    "population": PopulationModel,
    "eos": EosFit,
    "grid": FrequencyGrid,
}


@cache
def load_presets(path: Path = PRESETS_PATH) -> dict[str, dict[str, Any]]:
    with open(path, encoding="utf-8") as f:
        document = yaml.safe_load(f) or {}
    presets = document.get("presets", {})
    if not isinstance(presets, dict):
        raise ConfigError(f"{path} has no 'presets' mapping", key="preset")
    return presets


def parse_lines(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {number}: expected 'key = value', got {raw!r}")
        if key in values:
            raise ConfigError(f"line {number}: duplicate key {key!r}", key=key)
        values[key] = value
    return values


def parse_config(
    text: str, overrides: Mapping[str, Any] | None = None
) -> RunConfig:
    values: dict[str, Any] = parse_lines(text)
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value

    preset = values.pop("preset", None)
    if preset is not None:
        values = {**_preset_values(str(preset)), **values}

    _check_keys(values)
    _resolve_power(values)
    _resolve_squeezing(values)
    filters = _parse_filters(values.pop("filters", ""))
    for key in LIST_KEYS:
        if key in values:
            values[key] = _parse_list(key, values[key])

    gain = {key: values.pop(key) for key in ("chi", "chi_over_gamma") if key in values}
    grouped = _group(values)
    detector = _build(DetectorConfig, grouped["detector"])
    detector, chi = _resolve_gain(detector, gain, explicit_q="q" in grouped["detector"])

    run_values = grouped["run"]
    try:
        config = RunConfig(
            detector=detector,
            readout=ReadoutConfig.from_detector(detector, filters),
            population=_build(PopulationModel, grouped["population"]),
            eos=_build(EosFit, grouped["eos"]),
            grid=_build(FrequencyGrid, grouped["grid"]),
            preset=None if preset is None else str(preset),
            chi=chi,
            **run_values,
        )
    except ValidationError as error:
        raise _config_error(error) from error
    logger.debug("resolved configuration: %s", config.model_dump(mode="json"))
    return config


def load_config(
    path: Path | None, overrides: Mapping[str, Any] | None = None
) -> RunConfig:
    text = "" if path is None else path.read_text(encoding="utf-8")
    return parse_config(text, overrides)


def squeeze_factor_from_db(db: float) -> float:
    return math.log(10 ** (db / 10)) / 2


def _preset_values(name: str) -> dict[str, Any]:
    presets = load_presets()
    if name not in presets:
        known = ", ".join(sorted(presets))
        raise ConfigError(f"unknown preset {name!r} (known: {known})", key="preset")
    return dict(presets[name])


def _check_keys(values: Mapping[str, Any]) -> None:
    known = set(RUN_KEYS) | set(CONVENIENCE_KEYS) | {"chi"}
    for model in SECTIONS.values():
        known |= set(model.model_fields)
    for key in values:
        if key not in known:
            raise ConfigError(f"unknown configuration key {key!r}", key=key)

    present = set(values)
    if "arm_power" in present:
        present.add("power")
    missing = [key for key in REQUIRED_KEYS if key not in present]
    if missing:
        raise ConfigError(
            f"missing required keys: {join_nonempty(missing)}", key=missing[0]
        )


def _resolve_power(values: dict[str, Any]) -> None:
    if "arm_power" not in values:
        return
    if "power" in values:
        raise ConfigError("give either power or arm_power, not both", key="arm_power")
    values["power"] = 2 * _as_float("arm_power", values.pop("arm_power"))


def _resolve_squeezing(values: dict[str, Any]) -> None:
    if "squeeze_db" not in values:
        return
    if "q_ext" in values:
        raise ConfigError("give either q_ext or squeeze_db, not both", key="squeeze_db")
    db = _as_float("squeeze_db", values.pop("squeeze_db"))
    if db < 0:
        raise ConfigError(
            f"squeeze_db must be non-negative, got {db}", key="squeeze_db"
        )
    values["q_ext"] = squeeze_factor_from_db(db)


def _resolve_gain(
    detector: DetectorConfig, gain: dict[str, Any], *, explicit_q: bool
) -> tuple[DetectorConfig, float]:
    if len(gain) > 1:
        raise ConfigError("give either chi or chi_over_gamma, not both", key="chi")
    if not gain:
        return detector, 0.0

    key, raw = next(iter(gain.items()))
    value = _as_float(key, raw)
    if value < 0:
        raise ConfigError(f"{key} must be non-negative, got {value}", key=key)
    if key == "chi_over_gamma":
        chi = chi_from_fraction(detector, value)
        q = squeeze_for_gain(detector, value)
    else:
        chi = value
        q = chi * detector.tau_se
    if explicit_q:
        if not math.isclose(detector.q, q, rel_tol=1e-9, abs_tol=1e-15):
            raise ConfigError(f"q = {detector.q} contradicts {key} = {value}", key="q")
        return detector, chi
    return detector.model_copy(update={"q": q}), chi


def _parse_filters(raw: Any) -> list[FilterCavity]:
    if isinstance(raw, list):
        return [FilterCavity.model_validate(item) for item in raw]
    filters = []
    for item in str(raw).split(";"):
        item = item.strip()
        if not item:
            continue
        parts = [part.strip() for part in item.split(":")]
        if len(parts) != 3:
            raise ConfigError(
                f"filter {item!r} must read placement:gamma_hz:detuning_hz",
                key="filters",
            )
        placement, gamma_hz, detuning_hz = parts
        try:
            filters.append(
                FilterCavity(
                    placement=placement,
                    gamma=2 * math.pi * _as_float("filters", gamma_hz),
                    detuning=2 * math.pi * _as_float("filters", detuning_hz),
                )
            )
        except ValidationError as error:
            raise ConfigError(
                f"invalid filter {item!r}: {error}", key="filters"
            ) from error
    return filters


def _parse_list(key: str, raw: Any) -> list[float]:
    if isinstance(raw, list | tuple):
        return [_as_float(key, item) for item in raw]
    return [_as_float(key, item) for item in str(raw).split(",") if item.strip()]


def _group(values: Mapping[str, Any]) -> dict[str, dict[str, Any]]:
    grouped: dict[str, dict[str, Any]] = {name: {} for name in (*SECTIONS, "run")}
    for key, value in values.items():
        for name, model in SECTIONS.items():
            if key in model.model_fields:
                grouped[name][key] = value
                break
        else:
            grouped["run"][key] = value
    return grouped


def _build(model: type[BaseModel], values: Mapping[str, Any]) -> Any:
    try:
        return model.model_validate(dict(values))
    except ValidationError as error:
        raise _config_error(error) from error


def _config_error(error: ValidationError) -> ConfigError:
    first = error.errors()[0]
    loc = [str(part) for part in first["loc"]]
    key = loc[-1] if loc else None
    where = key or "configuration"
    return ConfigError(f"{where}: {first['msg']}", key=key)


def _as_float(key: str, value: Any) -> float:
    try:
        return float(value)
    except (TypeError, ValueError) as error:
        raise ConfigError(
            f"{key}: expected a number, got {value!r}", key=key
        ) from error
