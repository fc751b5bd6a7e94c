"""SWIM model mathematics: cell grid, cell weights, destination and waiting-time sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import NamedTuple

import numpy as np

from .errors import ParameterError

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class ModelParams:
    node_count: int = 41
    radius: float = 0.1
    alpha: float = 0.75
    distance_scale_k: float = 0.05
    waiting_slope: float = 1.45
    waiting_min: float = 60.0
    waiting_max: float = 4 * 3600.0
    leg_duration: float = 120.0
    sim_duration: float = 3 * 86400.0
    rng_seed: int = 0

    def __post_init__(self):
        if int(self.node_count) != self.node_count or self.node_count < 0:
            raise ParameterError(f"node_count must be a nonnegative integer, got {self.node_count!r}")
        if not 0.0 < self.radius < 1.0:
            raise ParameterError(f"radius must lie in (0, 1), got {self.radius!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ParameterError(f"alpha must lie in [0, 1], got {self.alpha!r}")
        if self.distance_scale_k < 0:
            raise ParameterError("distance_scale_k must be nonnegative")
        if not self.waiting_slope > 1.0:
            raise ParameterError("waiting_slope must be > 1")
        if not 0.0 < self.waiting_min < self.waiting_max:
            raise ParameterError("need 0 < waiting_min < waiting_max")
        if not self.leg_duration > 0:
            raise ParameterError("leg_duration must be positive")
        if self.sim_duration < 0:
            raise ParameterError("sim_duration must be nonnegative")
        if not -(2**63) <= self.rng_seed < 2**64:
            raise ParameterError("rng_seed must fit in 64 bits")

    def replace(self, **changes) -> "ModelParams":
        values = asdict(self)
        values.update(changes)
        return ModelParams(**values)


class Point(NamedTuple):
    x: float
    y: float


class CellIndex(NamedTuple):
    row: int
    col: int


@dataclass(frozen=True)
class CellGrid:
    cells_per_side: int

    @property
    def cell_side(self) -> float:
        return 1.0 / self.cells_per_side

    @property
    def cell_count(self) -> int:
        return self.cells_per_side * self.cells_per_side

    def contains(self, cell: CellIndex) -> bool:
        m = self.cells_per_side
        return 0 <= cell[0] < m and 0 <= cell[1] < m

    def cell_of(self, p) -> CellIndex:
        """Cell containing point ``p``; the right/top borders belong to the last cell."""
        m = self.cells_per_side
        col = min(int(p[0] * m), m - 1)
        row = min(int(p[1] * m), m - 1)
        return CellIndex(max(row, 0), max(col, 0))

    def flat(self, cell: CellIndex) -> int:
        return cell[0] * self.cells_per_side + cell[1]

    def unflat(self, index: int) -> CellIndex:
        return CellIndex(*divmod(int(index), self.cells_per_side))

    def centers(self) -> np.ndarray:
        """(cell_count, 2) array of cell centers as (x, y), in flat order."""
        m = self.cells_per_side
        c = (np.arange(m) + 0.5) / m
        xs, ys = np.meshgrid(c, c)  # ys varies along rows
        return np.column_stack([xs.ravel(), ys.ravel()])


def build_grid(radius: float) -> CellGrid:
    """Smallest uniform grid over the unit square whose cell diagonal is <= radius."""
    if not 0.0 < radius <= 1.0:
        raise ParameterError(f"radius must lie in (0, 1], got {radius!r}")
    m = math.ceil(SQRT2 / radius)
    # guard against ceil landing one short through rounding
    while SQRT2 / m > radius * (1 + 1e-12):
        m += 1
    return CellGrid(m)


def cell_center(grid: CellGrid, cell: CellIndex) -> Point:
    if not grid.contains(cell):
        raise ParameterError(f"cell {tuple(cell)} outside {grid.cells_per_side}x{grid.cells_per_side} grid")
    s = grid.cell_side
    return Point((cell[1] + 0.5) * s, (cell[0] + 0.5) * s)


def distance_decay(home, cell: CellIndex, grid: CellGrid, k: float) -> float:
    """1 / (1 + k*d)^2 with d the distance from ``home`` to the center of ``cell``."""
    if k < 0:
        raise ParameterError("k must be nonnegative")
    c = cell_center(grid, cell)
    d = math.hypot(home[0] - c.x, home[1] - c.y)
    return 1.0 / (1.0 + k * d) ** 2


def distance_decay_map(home, grid: CellGrid, k: float) -> np.ndarray:
    """Vectorised :func:`distance_decay` over every cell, in flat order."""
    d = np.hypot(grid.centers()[:, 0] - home[0], grid.centers()[:, 1] - home[1])
    return 1.0 / (1.0 + k * d) ** 2


@dataclass
class NodeModelState:
    home: Point
    grid: CellGrid
    seen: np.ndarray = None  # flat seen-fraction per cell
    current_position: Point = None
    _decay: np.ndarray = field(default=None, repr=False)
    _decay_k: float = field(default=None, repr=False)

    def __post_init__(self):
        if self.seen is None:
            self.seen = np.zeros(self.grid.cell_count)
        if self.current_position is None:
            self.current_position = self.home

    def decay(self, k: float) -> np.ndarray:
        if self._decay is None or self._decay_k != k:
            self._decay = distance_decay_map(self.home, self.grid, k)
            self._decay_k = k
        return self._decay

    def set_seen(self, cell: CellIndex, value: float) -> None:
        if not 0.0 <= value <= 1.0:
            raise ParameterError(f"seen fraction {value} outside [0, 1]")
        self.seen[self.grid.flat(cell)] = value


def cell_weight(node: NodeModelState, cell: CellIndex, grid: CellGrid, params: ModelParams) -> float:
    seen = node.seen[grid.flat(cell)]
    return params.alpha * distance_decay(node.home, cell, grid, params.distance_scale_k) + (1 - params.alpha) * seen


def weight_map(node: NodeModelState, params: ModelParams) -> np.ndarray:
    return params.alpha * node.decay(params.distance_scale_k) + (1 - params.alpha) * node.seen


def destination_probabilities(node: NodeModelState, params: ModelParams) -> np.ndarray:
    w = weight_map(node, params)
    total = w.sum()
    if total <= 0:
        # alpha == 0 with an empty map: uniform fallback
        return np.full(w.size, 1.0 / w.size)
    return w / total


def choose_destination(node: NodeModelState, grid: CellGrid, params: ModelParams, rng: np.random.Generator):
    """Sample a cell proportionally to its weight, then a uniform point inside it."""
    p = destination_probabilities(node, params)
    cum = np.cumsum(p)
    idx = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
    idx = min(idx, p.size - 1)
    cell = grid.unflat(idx)
    s = grid.cell_side
    u, v = rng.random(2)
    x = min(max((cell.col + u) * s, 0.0), 1.0)
    y = min(max((cell.row + v) * s, 0.0), 1.0)
    return cell, Point(x, y)


def bounded_pareto_ppf(u, slope: float, lo: float, hi: float):
    """Inverse CDF of the density proportional to t**-slope on [lo, hi]."""
    if not 0 < lo < hi:
        raise ParameterError("need 0 < lo < hi")
    if slope == 1.0:
        return lo * (hi / lo) ** u
    e = 1.0 - slope
    a, b = lo**e, hi**e
    t = (a + u * (b - a)) ** (1.0 / e)
    return np.clip(t, lo, hi)


def sample_waiting_time(params: ModelParams, rng: np.random.Generator, size=None):
    u = rng.random(size)
    t = bounded_pareto_ppf(u, params.waiting_slope, params.waiting_min, params.waiting_max)
    return float(t) if size is None else t


class Leg(NamedTuple):
    speed: float
    duration: float


def leg_kinematics(start, end, params: ModelParams) -> Leg:
    """Constant-time leg: every non-degenerate leg lasts ``leg_duration``."""
    d = math.hypot(end[0] - start[0], end[1] - start[1])
    if d == 0.0:
        return Leg(0.0, 0.0)
    return Leg(d / params.leg_duration, params.leg_duration)

