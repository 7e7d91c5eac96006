"""Name -> processor class mapping used by configuration files."""

from __future__ import annotations

import inspect
import json
import os
from typing import Dict, Mapping, Type

from .errors import ConfigError, InvalidParam, UnknownProcessorType
from .pipeline import Processor, SequentialProcessor

_REGISTRY: Dict[str, Type[Processor]] = {}


def register(cls: Type[Processor]) -> Type[Processor]:
    """Class decorator adding ``cls`` under its class name."""
    if not (inspect.isclass(cls) and issubclass(cls, Processor)):
        raise TypeError(f"{cls!r} is not a Processor subclass")
    _REGISTRY[cls.__name__] = cls
    return cls


def _load_builtins():
    from . import processors  # noqa: F401  (registers on import)


def registered_types() -> list:
    _load_builtins()
    return sorted(_REGISTRY)


def registry_instantiate(type_name: str, params: Mapping = None) -> Processor:
    _load_builtins()
    params = dict(params or {})
    try:
        cls = _REGISTRY[type_name]
    except (KeyError, TypeError):
        raise UnknownProcessorType(f"unknown processor type {type_name!r}") from None

    accepted = {
        name for name, p in inspect.signature(cls.__init__).parameters.items()
        if name != "self" and p.kind in (p.POSITIONAL_OR_KEYWORD, p.KEYWORD_ONLY)
    }
    unknown = sorted(set(params) - accepted)
    if unknown:
        raise InvalidParam(f"{type_name}: unknown parameter(s) {', '.join(unknown)}")
    try:
        return cls(**params)
    except (TypeError, ValueError) as exc:
        raise InvalidParam(f"{type_name}: {exc}") from exc


def build_pipeline(document: Mapping, base_dir=None) -> SequentialProcessor:
    """Build a pipeline from ``{"name": ..., "processors": [{"type", "params"}]}``.

    Relative file parameters (those a processor lists in ``path_params``) are
    resolved against ``base_dir`` when given.
    """
    _load_builtins()
    if not isinstance(document, Mapping):
        raise ConfigError("pipeline config must be a JSON object")
    entries = document.get("processors")
    if not isinstance(entries, list):
        raise ConfigError('pipeline config needs a "processors" list')
    name = document.get("name", "SequentialProcessor")
    if not isinstance(name, str):
        raise ConfigError('"name" must be a string')
    steps = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, Mapping) or "type" not in entry:
            raise ConfigError(f"processor entry {i} needs a \"type\"")
        extra = set(entry) - {"type", "params"}
        if extra:
            raise ConfigError(f"processor entry {i}: unexpected key(s) {', '.join(sorted(extra))}")
        params = entry.get("params", {})
        if not isinstance(params, Mapping):
            raise ConfigError(f"processor entry {i}: \"params\" must be an object")
        params = dict(params)
        cls = _REGISTRY.get(entry["type"]) if isinstance(entry["type"], str) else None
        if base_dir is not None and cls is not None:
            for key in getattr(cls, "path_params", ()):
                value = params.get(key)
                if isinstance(value, str) and not os.path.isabs(value):
                    params[key] = os.path.join(base_dir, value)
        steps.append(registry_instantiate(entry["type"], params))
    return SequentialProcessor(steps, name)


def load_pipeline(path) -> SequentialProcessor:
    try:
        with open(path, encoding="utf-8") as f:
            document = json.load(f)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return build_pipeline(document, base_dir=os.path.dirname(os.path.abspath(path)))
