from __future__ import annotations

import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, TextIO


class LoadError(RuntimeError):
    """Raised when a structured configuration file cannot be parsed."""


def ensure_directory(path: str | Path) -> Path:
    """Create a directory and return its Path object."""

    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def dump_json(path: str | Path, payload: Mapping[str, object], *, indent: int = 2) -> None:
    """Write structured JSON to disk with a trailing newline for readability."""

    path = Path(path)
    ensure_directory(path.parent)
    path.write_text(json.dumps(payload, indent=indent, sort_keys=True) + "\n")


def load_structured(path: str | Path) -> Dict[str, Any]:
    """Read a JSON mapping, falling back to YAML when PyYAML is installed."""

    raw_text = Path(path).read_text()
    try:
        data = json.loads(raw_text)
    except json.JSONDecodeError:
        try:
            import yaml  # type: ignore
        except ImportError as exc:  # pragma: no cover - fallback path
            raise LoadError(f"{path} is not JSON and PyYAML is not installed") from exc
        try:
            data = yaml.safe_load(raw_text)
        except yaml.YAMLError as exc:
            raise LoadError(f"Cannot parse {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise LoadError(f"{path} must contain a mapping at the top level")
    return data


class JsonLinesSink:
    """Callable event listener appending one JSON object per line."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        ensure_directory(self.path.parent)
        self._handle: Optional[TextIO] = self.path.open("a", encoding="utf-8")

    def __call__(self, event: Mapping[str, Any]) -> None:
        if self._handle is None:
            raise ValueError(f"Event sink {self.path} is closed")
        self._handle.write(json.dumps(dict(event), sort_keys=True, default=str) + "\n")
        self._handle.flush()

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None

    def __enter__(self) -> "JsonLinesSink":
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()


def configure_logging(verbosity: int, stream: Optional[TextIO] = None) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(
        level=level,
        stream=stream or sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )
