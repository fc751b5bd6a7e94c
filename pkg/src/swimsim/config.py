"""Flat ``key = value`` config files for :class:`ModelParams`."""

from __future__ import annotations

import os
from dataclasses import asdict, fields

from .errors import ParameterError, TraceFormatError
from .model import ModelParams
from .presets import get_preset

_TYPES = {f.name: f.type for f in fields(ModelParams)}
_INTS = {"node_count", "rng_seed"}


def parse_config(text: str) -> ModelParams:
    """Parse config text. An optional ``preset`` key supplies the base values."""
    values = {}
    base = ModelParams()
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise TraceFormatError("expected key = value", no)
        key, _, value = (s.strip() for s in line.partition("="))
        if key == "preset":
            base = get_preset(value).params
            continue
        if key not in _TYPES:
            raise ParameterError(f"line {no}: unknown parameter {key!r}")
        try:
            values[key] = int(value) if key in _INTS else float(value)
        except ValueError:
            raise TraceFormatError(f"bad value for {key}: {value!r}", no) from None
    return base.replace(**values)


def load_config(path) -> ModelParams:
    with open(path) as fh:
        return parse_config(fh.read())


def format_config(params: ModelParams) -> str:
    lines = ["# SWIM model parameters"]
    for key, value in asdict(params).items():
        lines.append(f"{key} = {value!r}")
    return "\n".join(lines) + "\n"


def save_config(params: ModelParams, path) -> None:
    with open(os.fspath(path), "w") as fh:
        fh.write(format_config(params))
