from importlib import resources
from typing import Any, MutableMapping

import toml

from sawlab import config


def load_defaults_db() -> MutableMapping[str, Any]:
    return toml.loads(resources.read_text(config, "defaults.toml"))


def load_anchor_db() -> MutableMapping[str, Any]:
    return toml.loads(resources.read_text(config, "anchors.toml"))


defaults_db: MutableMapping[str, Any] = load_defaults_db()
anchor_db: MutableMapping[str, Any] = load_anchor_db()
