"""SWIM mobility model: simulator, contact-trace analysis and forwarding harness."""

from .engine import EventLog, EventRecord, Simulator, run_many, run_simulation
from .errors import ParameterError, TraceFormatError, ValidationError
from .model import ModelParams
from .presets import PRESETS, get_preset

__all__ = [
    "EventLog",
    "EventRecord",
    "ModelParams",
    "ParameterError",
    "PRESETS",
    "Simulator",
    "TraceFormatError",
    "ValidationError",
    "get_preset",
    "run_many",
    "run_simulation",
]
