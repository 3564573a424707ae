"""Scenario configuration: TOML or JSON files plus dotted ``key=value`` overrides."""

import copy
import json
import sys
from pathlib import Path

from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


def load_config(path):
    """Read a TOML (``.toml``) or JSON (anything else) configuration file."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    try:
        if path.suffix.lower() == ".toml":
            return tomllib.loads(raw.decode("utf-8"))
        return json.loads(raw.decode("utf-8"))
    except (ValueError, tomllib.TOMLDecodeError) as err:
        raise ConfigError(f"cannot parse config {path}: {err}") from err


def parse_value(text):
    """JSON literal if it parses (numbers, lists, true/false), else the raw string."""
    try:
        return json.loads(text)
    except ValueError:
        return text


def set_path(cfg, dotted, value):
    keys = dotted.split(".")
    node = cfg
    for k in keys[:-1]:
        nxt = node.get(k)
        if nxt is None:
            nxt = node[k] = {}
        elif not isinstance(nxt, dict):
            raise ConfigError(f"cannot set {dotted!r}: {k!r} is not a table")
        node = nxt
    node[keys[-1]] = value


def parse_override(item):
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    key, text = item.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError(f"override {item!r} has an empty key")
    return key, parse_value(text.strip())


def merge(base, update):
    """Recursive dictionary merge; ``update`` wins on conflicts."""
    out = copy.deepcopy(base)
    for k, v in update.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out
