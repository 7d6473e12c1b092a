"""Workspace configuration.

A workspace file is plain `key = value` text (# comments, blank lines
ignored). Its path comes from the HERA_WORKSPACE environment variable.
Command-line flags always win over workspace values, which win over
built-in defaults.
"""

from __future__ import annotations

import os

from .errors import UsageError

ENV_VAR = "HERA_WORKSPACE"

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def parse_config_text(text: str, origin: str = "<config>") -> dict[str, str]:
    values: dict[str, str] = {}
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{origin}:{line_number}: expected key=value, got {raw!r}")
        values[key.strip()] = value.strip()
    return values


def load_workspace(environ=None) -> dict[str, str]:
    env = os.environ if environ is None else environ
    path = env.get(ENV_VAR)
    if not path:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fp:
            text = fp.read()
    except OSError as exc:
        raise UsageError(f"cannot read workspace file {path!r}: {exc}") from exc
    return parse_config_text(text, origin=path)


class Settings:
    """Flag-over-config-over-default resolution for one command."""

    def __init__(self, args, config: dict[str, str]):
        self._args = args
        self._config = config

    def _flag(self, name):
        return getattr(self._args, name, None)

    def text(self, name: str, default: str | None = None) -> str | None:
        value = self._flag(name)
        if value is not None:
            return value
        return self._config.get(name, default)

    def number(self, name: str, default: float) -> float:
        value = self.text(name)
        if value is None:
            return default
        try:
            return float(value)
        except (TypeError, ValueError):
            raise UsageError(f"--{name.replace('_', '-')} expects a number, got {value!r}")

    def flag(self, name: str, default: bool = False) -> bool:
        value = self._flag(name)
        if value is not None:
            return bool(value)
        raw = self._config.get(name)
        if raw is None:
            return default
        lowered = raw.lower()
        if lowered in _TRUE:
            return True
        if lowered in _FALSE:
            return False
        raise UsageError(f"config key {name} expects a boolean, got {raw!r}")

    def paths(self, name: str) -> list[str]:
        value = self._flag(name)
        if value:
            return list(value)
        raw = self._config.get(name)
        return raw.split() if raw else []
