"""Flat, typed, sectioned config files with strict unknown-key rejection.

The on-disk format is INI-style: sections hold scalar key = value lines,
`[method.<label>]` sections define named run configurations. Every key
must appear in the schema for its section type, and every value must
parse at its declared type, otherwise loading fails; there are no
warnings. Overrides (`section.key=value`, or bare `key=value` when the
key is unambiguous) are applied after parsing under the same rules.
"""

import configparser
from dataclasses import asdict

from .optimizers import RunConfig


class ConfigError(ValueError):
    """Invalid config file, key, or override."""


def _parse_bool(s: str) -> bool:
    t = s.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_int(s: str) -> int:
    try:
        return int(s)
    except ValueError:
        f = float(s)
        if f != int(f):
            raise ValueError(f"not an integer: {s!r}")
        return int(f)


def _parse_list(s: str, conv):
    return [conv(part.strip()) for part in s.split(",") if part.strip()]


_CONVERTERS = {
    "str": lambda s: s.strip(),
    "int": _parse_int,
    "float": float,
    "bool": _parse_bool,
    "str_list": lambda s: _parse_list(s, str),
    "int_list": lambda s: _parse_list(s, _parse_int),
    "float_list": lambda s: _parse_list(s, float),
}

EXPERIMENT_SCHEMA = {
    "objective": "str_list",      # one or more benchmark names
    "dim": "int",
    "dims": "int_list",
    "trials": "int",
    "budget": "int",
    "success_threshold": "float",
    "master_seed": "int",
    "methods": "str_list",
    "checkpoints": "int_list",
    "logrosen_alpha": "float",
}

METHOD_SCHEMA = {
    "method": "str",
    "update": "str",
    "T": "int",
    "B": "int",
    "K": "int",
    "eta0": "float",
    "lr_schedule": "str",
    "t_schedule": "str",
    "t_min": "float",
    "schedule_kind": "str",
    "eps": "float",
    "lambda_min": "float",
    "antithetic": "bool",
    "early_stop": "bool",
    "count_success_checks": "bool",
    "box_init": "bool",
}

SPARSE_SCHEMA = {
    "n": "int",
    "m": "int",
    "k": "int",
    "noise_sigma": "float",
    "tau": "float",
    "problem_seed": "int",
    "lambda_lo": "float",
    "lambda_hi": "float",
    "lambda_count": "int",
    "trials": "int",
    "budget": "int",
    "methods": "str_list",
}

TUNE_SCHEMA = {
    "label": "str",
    "eta0_grid": "float_list",
    "T_grid": "int_list",
}

_SECTION_SCHEMAS = {
    "experiment": EXPERIMENT_SCHEMA,
    "method": METHOD_SCHEMA,
    "sparse": SPARSE_SCHEMA,
    "tune": TUNE_SCHEMA,
}

EXPERIMENT_DEFAULTS = {
    "dim": 10,
    "trials": 10,
    "budget": 200_000,
    "success_threshold": 0.05,
    "master_seed": 0,
}

SPARSE_DEFAULTS = {
    "n": 500,
    "m": 75,
    "k": 10,
    "noise_sigma": 0.01,
    "tau": 0.05,
    "problem_seed": 7,
    "lambda_lo": 1e-2,
    "lambda_hi": 1.0,
    "lambda_count": 30,
    "trials": 3,
    "budget": 8000,
}


def _schema_for(section: str) -> dict:
    base = section.split(".", 1)[0]
    schema = _SECTION_SCHEMAS.get(base)
    if schema is None:
        raise ConfigError(f"unknown config section [{section}]")
    if base == "method" and "." not in section:
        raise ConfigError("method sections must be named: [method.<label>]")
    return schema


def load_config(path: str) -> dict:
    """Parse a config file into {section: {key: typed value}}."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keys are case-sensitive
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")
    resolved = {}
    for section in parser.sections():
        schema = _schema_for(section)
        out = {}
        for key, raw in parser.items(section):
            if key not in schema:
                raise ConfigError(
                    f"unknown config key {key!r} in section [{section}]")
            try:
                out[key] = _CONVERTERS[schema[key]](raw)
            except ValueError as exc:
                raise ConfigError(
                    f"bad value for {section}.{key}: {exc}") from exc
        resolved[section] = out
    _fill_defaults(resolved)
    return resolved


def _fill_defaults(resolved: dict):
    if "experiment" in resolved:
        for k, v in EXPERIMENT_DEFAULTS.items():
            resolved["experiment"].setdefault(k, v)
    if "sparse" in resolved:
        for k, v in SPARSE_DEFAULTS.items():
            resolved["sparse"].setdefault(k, v)


def apply_overrides(resolved: dict, overrides) -> dict:
    """Apply key=value overrides; unknown keys are errors.

    Keys may be dotted (`experiment.trials`, `method.pgh_gd.eta0`) or bare
    when the key name is unambiguous across the sections present.
    """
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override must look like key=value: {item!r}")
        key, raw = item.split("=", 1)
        key = key.strip()
        if "." in key:
            section, name = key.rsplit(".", 1)
            if section not in resolved:
                raise ConfigError(f"unknown config section {section!r} "
                                  f"in override {item!r}")
        else:
            name = key
            hits = [s for s in resolved
                    if name in _schema_for(s)]
            if not hits:
                raise ConfigError(f"unknown config key {name!r}")
            if len(hits) > 1:
                raise ConfigError(
                    f"ambiguous override key {name!r}; qualify as one of: "
                    + ", ".join(f"{s}.{name}" for s in sorted(hits)))
            section = hits[0]
        schema = _schema_for(section)
        if name not in schema:
            raise ConfigError(f"unknown config key {name!r} "
                              f"in section [{section}]")
        try:
            resolved[section][name] = _CONVERTERS[schema[name]](raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {section}.{name}: {exc}") from exc
    return resolved


def method_configs(resolved: dict, labels=None) -> dict:
    """Build {label: RunConfig} from [method.*] sections."""
    out = {}
    for section, values in resolved.items():
        if not section.startswith("method."):
            continue
        label = section.split(".", 1)[1]
        if labels is not None and label not in labels:
            continue
        try:
            out[label] = RunConfig(**values)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid method config [{section}]: {exc}") from exc
    if labels is not None:
        missing = [l for l in labels if l not in out]
        if missing:
            raise ConfigError("missing method sections: "
                              + ", ".join(f"[method.{l}]" for l in missing))
    return out


def runconfig_to_dict(cfg: RunConfig) -> dict:
    return asdict(cfg)
