"""Scenario presets and dataset metadata for the three iMote traces."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from types import MappingProxyType

from .errors import ParameterError
from .model import ModelParams
from .traceio import DatasetMeta

DAY = 86400.0


@dataclass(frozen=True)
class DatasetInfo:
    meta: DatasetMeta
    internal_contacts: int
    contacts_per_pair_day: float


DATASETS = MappingProxyType({
    "cambridge05": DatasetInfo(DatasetMeta("Cambridge05", "iMote", 5, 120, 12, 12), 4229, 6.4),
    # 18 of the 54 devices were stationary and are not modelled
    "cambridge06": DatasetInfo(DatasetMeta("Cambridge06", "iMote", 11, 600, 54, 36), 10873, 0.345),
    "infocom05": DatasetInfo(DatasetMeta("Infocom05", "iMote", 3, 120, 41, 41), 22459, 4.6),
})

_SHARED = dict(radius=0.1, distance_scale_k=0.05, waiting_slope=1.45, waiting_min=60.0,
               waiting_max=4 * 3600.0, leg_duration=120.0)


@dataclass(frozen=True)
class ScenarioPreset:
    name: str
    params: ModelParams
    dataset: str

    @property
    def meta(self) -> DatasetMeta:
        return DATASETS[self.dataset].meta

    def describe(self) -> str:
        lines = [f"preset={self.name}", f"dataset={self.meta.name}"]
        lines += [f"{k}={v}" for k, v in asdict(self.params).items()]
        return "\n".join(lines)


PRESETS = MappingProxyType({
    "infocom05": ScenarioPreset("infocom05", ModelParams(node_count=41, alpha=0.75, sim_duration=3 * DAY, **_SHARED), "infocom05"),
    # 12 devices per the dataset table; the experiment text uses 11 (pass --nodes 11)
    "cambridge05": ScenarioPreset("cambridge05", ModelParams(node_count=12, alpha=0.95, sim_duration=5 * DAY, **_SHARED), "cambridge05"),
    "cambridge06": ScenarioPreset("cambridge06", ModelParams(node_count=36, alpha=0.95, sim_duration=11 * DAY, **_SHARED), "cambridge06"),
})


def get_preset(name: str) -> ScenarioPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ParameterError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
