"""SpanGuard settings: JSON file in the app directory, SPANGUARD_* overrides on top."""

import copy
import json
import os
from typing import Any, Dict, List, Optional

from core.logger import APP_DATA_DIR, logger

CONFIG_FILE = os.path.join(APP_DATA_DIR, "config.json")

DEFAULT_CONFIG = {
    "runtime": {
        "cache_cap": 64,  # escape cache capacity (records)
        "heap_limit": 256 * 1024 * 1024,  # simulated heap budget in bytes
    },
    "vm": {
        "step_limit": 10_000_000,
        "keep_going": False,
        "call_depth_limit": 256,
    },
    "optimize": {
        "passes": "all",  # comma-separated pass names, "all" or "none"
    },
    "fuzz": {
        "seeds": 1000,
        "seed": 0,  # first seed of a campaign
        "bug_rate": 0.3,
        "jobs": 1,
        "reproducer_dir": os.path.join(APP_DATA_DIR, "reproducers"),
    },
    "output": {
        "json": False,
    },
}

# Environment variables mirroring command-line flags.
ENV_OVERRIDES = {
    "SPANGUARD_OPT": ("optimize.passes", str),
    "SPANGUARD_CACHE_CAP": ("runtime.cache_cap", int),
    "SPANGUARD_STEP_LIMIT": ("vm.step_limit", int),
    "SPANGUARD_SEED": ("fuzz.seed", int),
    "SPANGUARD_KEEP_GOING": ("vm.keep_going", "bool"),
    "SPANGUARD_JSON": ("output.json", "bool"),
}


def _parse_bool(raw: str) -> bool:
    return raw.strip().lower() in ("1", "true", "yes", "on")


class Config:
    """Dot-addressed settings (``config.get("vm.step_limit")``).

    The file only ever holds defaults plus values written through ``set``;
    environment overrides live in a separate layer that ``save`` ignores.
    """

    def __init__(self):
        self.path = CONFIG_FILE
        self._stored: Dict[str, Any] = {}
        self._overrides: Dict[str, Any] = {}
        self.load()

    def load(self) -> None:
        """Read the file (writing defaults on first use), then the environment."""
        os.makedirs(os.path.dirname(self.path) or ".", exist_ok=True)

        if not os.path.exists(self.path):
            self._stored = copy.deepcopy(DEFAULT_CONFIG)
            self.save()
            logger.info(f"Default configuration created at: {self.path}")
        else:
            try:
                with open(self.path, "r", encoding="utf-8") as f:
                    self._stored = self._merge_configs(DEFAULT_CONFIG, json.load(f))
                logger.info(f"Configuration loaded from: {self.path}")
            except (OSError, ValueError) as e:
                logger.error(f"Unreadable config {self.path}, using defaults: {e}")
                self._stored = copy.deepcopy(DEFAULT_CONFIG)

        self.apply_env_overrides()

    def apply_env_overrides(self) -> None:
        self._overrides = {}
        for env_name, (key, kind) in ENV_OVERRIDES.items():
            raw = os.environ.get(env_name, "")
            if not raw:
                continue
            try:
                value: Any = _parse_bool(raw) if kind == "bool" else kind(raw)
            except ValueError:
                logger.warning(f"Ignoring {env_name}={raw!r}: not a valid {kind}")
                continue
            self._overrides[key] = value
            logger.debug(f"Environment override {env_name} -> {key} = {value}")

    def save(self) -> None:
        try:
            with open(self.path, "w", encoding="utf-8") as f:
                json.dump(self._stored, f, indent=2, ensure_ascii=False)
            logger.debug(f"Configuration written to {self.path}")
        except OSError as e:
            logger.error(f"Failed to save configuration: {e}")

    def get(self, key: str, default: Any = None) -> Any:
        """Value at a dotted ``key`` such as ``'runtime.cache_cap'``, or ``default``."""
        if key in self._overrides:
            return self._overrides[key]
        node = self._walk(key.split("."))
        return default if node is None else node[key.rsplit(".", 1)[-1]]

    def set(self, key: str, value: Any, save: bool = True) -> None:
        """Store ``value`` under a dotted ``key``; ``save=False`` keeps it in memory only."""
        parts = key.split(".")
        node = self._stored
        for part in parts[:-1]:
            if not isinstance(node.get(part), dict):
                node[part] = {}
            node = node[part]
        node[parts[-1]] = value
        self._overrides.pop(key, None)
        logger.debug(f"Config set: {key} = {value}")
        if save:
            self.save()

    def reset(self) -> None:
        self._stored = copy.deepcopy(DEFAULT_CONFIG)
        self._overrides = {}
        self.save()
        logger.info("Configuration reset to defaults")

    def _walk(self, parts: List[str]) -> Optional[Dict[str, Any]]:
        """The dict holding the last part of a dotted key, if the whole path exists."""
        node: Any = self._stored
        for part in parts[:-1]:
            if not isinstance(node, dict) or not isinstance(node.get(part), dict):
                return None
            node = node[part]
        if not isinstance(node, dict) or parts[-1] not in node:
            return None
        return node

    @staticmethod
    def _merge_configs(default: Dict, loaded: Dict) -> Dict:
        """Overlay ``loaded`` on a copy of ``default``, section by section."""
        merged = copy.deepcopy(default)
        for key, value in loaded.items():
            if isinstance(merged.get(key), dict) and isinstance(value, dict):
                merged[key] = Config._merge_configs(merged[key], value)
            else:
                merged[key] = value
        return merged


config = Config()
