"""Discrete-event SWIM simulator with exact contact detection.

Every node follows a piecewise-linear trajectory. Whenever a node changes
segment (Start or Finish) the crossings of ``|A(t) - B(t)| = r`` against all
other nodes are re-solved in closed form for the window in which both nodes
keep a constant velocity. Pending crossings from an older window are
invalidated through a per-pair version counter.
"""

from __future__ import annotations

import heapq
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .model import (
    CellGrid,
    CellIndex,
    ModelParams,
    NodeModelState,
    Point,
    build_grid,
    choose_destination,
    leg_kinematics,
    sample_waiting_time,
)

MEET, DEPART, START, FINISH = "Meet", "Depart", "Start", "Finish"
KIND_PRIORITY = {FINISH: 0, START: 1, MEET: 2, DEPART: 3}


class EventRecord(NamedTuple):
    kind: str
    time: float
    node: int
    other: object  # node id for Meet/Depart, CellIndex for Start/Finish

    def sort_key(self):
        other = tuple(self.other) if isinstance(self.other, tuple) else (self.other,)
        return (self.time, KIND_PRIORITY[self.kind], self.node, other)


@dataclass
class EventLog:
    events: list = field(default_factory=list)
    node_count: int = 0
    sim_duration: float = 0.0
    header: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def counts(self) -> dict:
        out = {k: 0 for k in (START, FINISH, MEET, DEPART)}
        for e in self.events:
            out[e.kind] += 1
        return out


class Segment(NamedTuple):
    """Constant-velocity piece of a node trajectory, valid on [t0, t1]."""

    t0: float
    t1: float
    x0: float
    y0: float
    vx: float
    vy: float

    def position(self, t):
        dt = t - self.t0
        return self.x0 + self.vx * dt, self.y0 + self.vy * dt


def pair_transition_times(a: Segment, b: Segment, window, radius: float, in_range: bool = False):
    """Crossings of the range threshold for two constant-velocity nodes.

    ``window`` is ``(t0, t1)``; both segments must be valid over it. ``in_range``
    is the current logical state of the pair at ``t0``. Returns a list of
    ``(time, kind)`` sorted by time. A double root (grazing) yields nothing.
    """
    t0, t1 = window
    ax, ay = a.position(t0)
    bx, by = b.position(t0)
    return _solve_pair(ax - bx, ay - by, a.vx - b.vx, a.vy - b.vy, t0, t1 - t0, radius, in_range)


def _solve_pair(px, py, vx, vy, t0, horizon, radius, in_range):
    A = vx * vx + vy * vy
    B = 2.0 * (px * vx + py * vy)
    C = px * px + py * py - radius * radius
    out = []
    if A == 0.0:
        return out
    disc = B * B - 4.0 * A * C
    if disc <= 0.0:
        if in_range:
            # already on the boundary and not re-entering
            out.append((t0, DEPART))
        return out
    sq = math.sqrt(disc)
    q = -0.5 * (B + math.copysign(sq, B))
    r1, r2 = q / A, C / q
    if r1 > r2:
        r1, r2 = r2, r1
    if in_range:
        tau = max(r2, 0.0)
        if tau <= horizon:
            out.append((t0 + tau, DEPART))
    elif r2 > 0.0:
        tau = max(r1, 0.0)
        if tau <= horizon:
            out.append((t0 + tau, MEET))
            if r2 <= horizon:
                out.append((t0 + r2, DEPART))
    return out


def update_seen_at_finish(state: NodeModelState, cell: CellIndex, others, node_count: int) -> None:
    """On arrival: fraction of the other nodes currently located inside ``cell``."""
    m = state.grid.cells_per_side
    others = np.asarray(others, dtype=float).reshape(-1, 2)
    cols = np.minimum((others[:, 0] * m).astype(int), m - 1)
    rows = np.minimum((others[:, 1] * m).astype(int), m - 1)
    count = int(np.count_nonzero((rows == cell[0]) & (cols == cell[1])))
    state.set_seen(cell, count / (node_count - 1) if node_count > 1 else 0.0)


def update_seen_at_start(state: NodeModelState, cell: CellIndex, encountered, node_count: int) -> None:
    """On departure: fraction of distinct nodes that were in range during the stay."""
    state.set_seen(cell, len(set(encountered)) / (node_count - 1) if node_count > 1 else 0.0)


class Mobility:
    """Decides where nodes live, where they go and how long they wait."""

    def initial_position(self, sim, node: int) -> Point:
        raise NotImplementedError

    def first_wait(self, sim, node: int) -> float:
        return self.next_wait(sim, node)

    def next_destination(self, sim, node: int):
        raise NotImplementedError

    def next_wait(self, sim, node: int) -> float:
        raise NotImplementedError


class SwimMobility(Mobility):
    def __init__(self, params: ModelParams, grid: CellGrid, rng: np.random.Generator):
        self.params = params
        self.grid = grid
        self.rng = rng
        self.states = []

    def initial_position(self, sim, node):
        home = Point(*self.rng.random(2))
        self.states.append(NodeModelState(home=home, grid=self.grid))
        return home

    def next_destination(self, sim, node):
        return choose_destination(self.states[node], self.grid, self.params, self.rng)

    def next_wait(self, sim, node):
        return sample_waiting_time(self.params, self.rng)

    def seen(self, node):
        return self.states[node].seen


class ScriptedMobility(Mobility):
    """Test hook: fixed start points, waypoints and waiting times per node.

    ``scripts[i]`` is a dict with ``start`` (x, y), ``waypoints`` [(x, y), ...]
    and ``waits`` [w0, w1, ...] where ``w0`` is spent at ``start`` and ``wk``
    at waypoint ``k``. A node with no more waypoints waits forever.
    """

    def __init__(self, scripts, grid: CellGrid):
        self.scripts = scripts
        self.grid = grid
        self._leg = [0] * len(scripts)
        self._wait = [0] * len(scripts)

    def initial_position(self, sim, node):
        return Point(*self.scripts[node]["start"])

    def next_destination(self, sim, node):
        k = self._leg[node]
        self._leg[node] += 1
        p = Point(*self.scripts[node]["waypoints"][k])
        return self.grid.cell_of(p), p

    def next_wait(self, sim, node):
        s = self.scripts[node]
        k = self._wait[node]
        self._wait[node] += 1
        if k < len(s["waits"]) and self._leg[node] < len(s["waypoints"]):
            return float(s["waits"][k])
        return math.inf


class Simulator:
    def __init__(self, params: ModelParams, mobility: Mobility | None = None, record_segments=False):
        self.params = params
        self.grid = build_grid(params.radius)
        self.rng = np.random.default_rng(params.rng_seed)
        self.mobility = mobility or SwimMobility(params, self.grid, self.rng)
        self.record_segments = record_segments
        self.segments = [[] for _ in range(params.node_count)]

    # -- state helpers -------------------------------------------------
    def _positions(self, t):
        dt = t - self.seg_t0
        return self.x0 + self.vx * dt, self.y0 + self.vy * dt

    def position(self, node, t):
        dt = t - self.seg_t0[node]
        return (self.x0[node] + self.vx[node] * dt, self.y0[node] + self.vy[node] * dt)

    def _set_segment(self, i, t, x, y, vx, vy, t_end):
        if self.record_segments:
            segs = self.segments[i]
            if segs and segs[-1].t1 > t:
                segs[-1] = segs[-1]._replace(t1=t)
            segs.append(Segment(t, t_end, x, y, vx, vy))
        self.seg_t0[i] = t
        self.x0[i], self.y0[i] = x, y
        self.vx[i], self.vy[i] = vx, vy
        self.next_change[i] = t_end

    def _push(self, t, kind, a, b, version=None):
        self._seq += 1
        heapq.heappush(self._heap, (t, KIND_PRIORITY[kind], a, b, self._seq, kind, version))

    def _recompute(self, i, t):
        """Re-solve crossings of node ``i`` against all other nodes from time ``t``."""
        n = self.params.node_count
        if n < 2:
            return
        px, py = self._positions(t)
        rx = px[i] - px
        ry = py[i] - py
        rvx = self.vx[i] - self.vx
        rvy = self.vy[i] - self.vy
        end = np.minimum(self.next_change, self.next_change[i])
        end = np.minimum(end, self.params.sim_duration)
        horizon = end - t
        r = self.params.radius
        A = rvx * rvx + rvy * rvy
        B = 2.0 * (rx * rvx + ry * rvy)
        C = rx * rx + ry * ry - r * r
        disc = B * B - 4.0 * A * C
        row = self.in_range[i]
        # cheap filter: pairs that can produce an event in the window
        with np.errstate(invalid="ignore", divide="ignore"):
            cand = row | ((A > 0) & (disc > 0) & ((B < 0) | (C <= 0)))
        cand[i] = False
        others = np.arange(n)
        keys = np.where(others < i, others * n + i, i * n + others)
        keys = np.delete(keys, i)
        # every prediction involving i belonged to a window that has now ended
        self.version[keys] += 1
        for j in np.flatnonzero(cand):
            j = int(j)
            a, b = (i, j) if i < j else (j, i)
            ver = int(self.version[a * n + b])
            for te, kind in _solve_pair(rx[j], ry[j], rvx[j], rvy[j], t, horizon[j], r, bool(row[j])):
                self._push(te, kind, a, b, ver)

    # -- main loop -----------------------------------------------------
    def run(self) -> EventLog:
        p = self.params
        n = p.node_count
        T = p.sim_duration
        log = EventLog(node_count=n, sim_duration=T)
        self.log = log
        if n == 0:
            return log
        self._heap = []
        self._seq = 0
        self.seg_t0 = np.zeros(n)
        self.x0 = np.zeros(n)
        self.y0 = np.zeros(n)
        self.vx = np.zeros(n)
        self.vy = np.zeros(n)
        self.next_change = np.zeros(n)
        self.in_range = np.zeros((n, n), dtype=bool)
        self.version = np.zeros(n * n, dtype=np.int64)
        self.moving = [False] * n
        self.cell = [None] * n
        self.dest = [None] * n
        self.stay_met = [set() for _ in range(n)]

        for i in range(n):
            pos = self.mobility.initial_position(self, i)
            self.cell[i] = self.grid.cell_of(pos)
            self._set_segment(i, 0.0, pos[0], pos[1], 0.0, 0.0, math.inf)
        for i in range(n):
            w = self.mobility.first_wait(self, i)
            self.next_change[i] = w
            if self.record_segments:
                self.segments[i][-1] = self.segments[i][-1]._replace(t1=w)
            self._push(w, START, i, -1)
        self._initial_contacts()

        heap = self._heap
        emit = log.events.append
        while heap:
            t, _, a, b, _, kind, ver = heapq.heappop(heap)
            if t >= T:
                break
            if kind is MEET or kind is DEPART:
                if self.version[a * n + b] != ver:
                    continue
                now_in = kind is MEET
                if self.in_range[a, b] == now_in:
                    continue
                self.in_range[a, b] = self.in_range[b, a] = now_in
                if now_in:
                    if not self.moving[a]:
                        self.stay_met[a].add(b)
                    if not self.moving[b]:
                        self.stay_met[b].add(a)
                emit(EventRecord(kind, t, a, b))
            elif kind is START:
                self._start(a, t, emit)
            else:
                self._finish(a, t, emit)
        return log

    def _initial_contacts(self):
        n = self.params.node_count
        # everybody starts stationary; nodes already in range meet at t=0
        px, py = self._positions(0.0)
        d2 = (px[:, None] - px[None, :]) ** 2 + (py[:, None] - py[None, :]) ** 2
        r2 = self.params.radius ** 2
        for a in range(n):
            for b in range(a + 1, n):
                if d2[a, b] <= r2:
                    self.version[a * n + b] += 1
                    self._push(0.0, MEET, a, b, int(self.version[a * n + b]))

    def _start(self, i, t, emit):
        here = self.cell[i]
        emit(EventRecord(START, t, i, here))
        mob = self.mobility
        if isinstance(mob, SwimMobility):
            update_seen_at_start(mob.states[i], here, self.stay_met[i], self.params.node_count)
        cell, dest = mob.next_destination(self, i)
        pos = self.position(i, t)
        leg = leg_kinematics(pos, dest, self.params)
        self.moving[i] = True
        self.dest[i] = (cell, dest)
        if leg.duration > 0:
            vx = (dest[0] - pos[0]) / leg.duration
            vy = (dest[1] - pos[1]) / leg.duration
        else:
            vx = vy = 0.0
        self._set_segment(i, t, pos[0], pos[1], vx, vy, t + leg.duration)
        self._push(t + leg.duration, FINISH, i, -1)
        self._recompute(i, t)

    def _finish(self, i, t, emit):
        cell, dest = self.dest[i]
        emit(EventRecord(FINISH, t, i, cell))
        self.moving[i] = False
        self.cell[i] = cell
        wait = self.mobility.next_wait(self, i)
        self._set_segment(i, t, dest[0], dest[1], 0.0, 0.0, t + wait)
        self.stay_met[i] = set(int(j) for j in np.flatnonzero(self.in_range[i]))
        mob = self.mobility
        if isinstance(mob, SwimMobility):
            px, py = self._positions(t)
            others = np.column_stack([np.delete(px, i), np.delete(py, i)])
            update_seen_at_finish(mob.states[i], cell, others, self.params.node_count)
            mob.states[i].current_position = Point(*dest)
        if wait < math.inf:
            self._push(t + wait, START, i, -1)
        self._recompute(i, t)


def run_simulation(params: ModelParams, mobility: Mobility | None = None) -> EventLog:
    """Simulate SWIM for ``params.sim_duration`` seconds and return the event log."""
    sim = Simulator(params, mobility)
    log = sim.run()
    log.header = {"seed": params.rng_seed}
    return log


def _run_seed(args):
    params, seed = args
    return run_simulation(params.replace(rng_seed=seed))


def run_many(params: ModelParams, seeds: Sequence[int], workers: int | None = None) -> list:
    """Independent runs for each seed, returned in seed order."""
    seeds = list(seeds)
    if workers == 1 or len(seeds) <= 1:
        return [_run_seed((params, s)) for s in seeds]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_seed, [(params, s) for s in seeds]))
