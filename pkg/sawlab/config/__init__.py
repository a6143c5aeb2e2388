import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Mapping, Optional, Union

import toml

from sawlab.config import config_db
from sawlab.errors import ConfigError

OUTPUT_FORMATS = ("json", "csv", "human")
ZC_TOKEN = "zc"
CACHE_ENV_VAR = "SAWLAB_CACHE"


@dataclass(frozen=True)
class RunConfig:
    precision_bits: int
    threads: int
    node_budget: int
    cache_dir: Optional[str]
    output_format: str
    prefix_depth: int
    superint_cap: int
    cache_max_bytes: int
    command: str = ""


_POSITIVE_INT_KEYS = (
    "precision_bits",
    "threads",
    "node_budget",
    "prefix_depth",
    "superint_cap",
    "cache_max_bytes",
)


def config_from_dict(config_dict: Mapping[str, Any], base: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """Build a validated RunConfig, overlaying ``config_dict`` on ``base`` (the bundled defaults)."""
    if base is None:
        base = config_db.defaults_db["sawlab"]
    merged = dict(base)
    for key, value in config_dict.items():
        if key not in base and key != "command":
            raise ConfigError("Unknown configuration key", key)
        merged[key] = value

    for key in _POSITIVE_INT_KEYS:
        value = merged[key]
        if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
            raise ConfigError(f"{key} must be a positive integer", value)

    if merged["output_format"] not in OUTPUT_FORMATS:
        raise ConfigError("Output format is unknown", merged["output_format"])

    cache_dir = merged.get("cache_dir") or None
    if cache_dir is not None:
        cache_dir = os.path.expanduser(str(cache_dir))

    return RunConfig(
        precision_bits=merged["precision_bits"],
        threads=merged["threads"],
        node_budget=merged["node_budget"],
        cache_dir=cache_dir,
        output_format=merged["output_format"],
        prefix_depth=merged["prefix_depth"],
        superint_cap=merged["superint_cap"],
        cache_max_bytes=merged["cache_max_bytes"],
        command=merged.get("command", ""),
    )


def load_config(config_path: Optional[str] = None, environ: Optional[Mapping[str, str]] = None) -> RunConfig:
    """Load the effective configuration.

    The user file, when given, must be a toml file with a ``[sawlab]`` table. The
    ``SAWLAB_CACHE`` environment variable overrides the cache directory from either source.
    """
    overrides: dict = {}
    if config_path is not None:
        if not os.path.exists(config_path):
            raise ConfigError("Config path does not exist", config_path)
        with open(config_path, "r") as config_file:
            overrides.update(toml.loads(config_file.read()).get("sawlab", {}))

    environ = os.environ if environ is None else environ
    if environ.get(CACHE_ENV_VAR):
        overrides["cache_dir"] = environ[CACHE_ENV_VAR]
    return config_from_dict(overrides)


def with_overrides(run_config: RunConfig, **changes: Any) -> RunConfig:
    """Apply command-line overrides, skipping the ones left unset (None)."""
    changes = {key: value for key, value in changes.items() if value is not None}
    if not changes:
        return run_config
    as_dict = {field: getattr(run_config, field) for field in run_config.__dataclass_fields__}
    as_dict.update(changes)
    return config_from_dict(as_dict, base=as_dict)


def parse_rational(text: Union[str, int, Fraction]) -> Fraction:
    """Parse an exact rational from "p/q", a terminating decimal string or an integer.

    Binary floats are refused: every exact count downstream depends on the value being exact.
    """
    if isinstance(text, bool) or isinstance(text, float):
        raise ConfigError("Expected an exact rational, got a float", text)
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ConfigError("Not a rational number", text)


def parse_lambda(text: Union[str, int, Fraction]) -> Fraction:
    value = parse_rational(text)
    if not 0 <= value <= 1:
        raise ConfigError("lambda must lie in [0, 1]", text)
    return value


def parse_z(text: Union[str, int, Fraction]) -> Union[Fraction, str]:
    """Parse a fugacity: an exact rational or the token ``zc``."""
    if isinstance(text, str) and text.strip().lower() == ZC_TOKEN:
        return ZC_TOKEN
    return parse_rational(text)
