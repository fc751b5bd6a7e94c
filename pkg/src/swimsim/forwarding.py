"""Epidemic and simplified delegation forwarding replayed over a contact trace.

Transfers are instantaneous and buffers unbounded: whenever a node obtains a
replica (by generation or by copy) it may pass it on at once over every
contact that is active at that instant.
"""

from __future__ import annotations

import os
from collections import defaultdict
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .engine import EventLog
from .errors import ParameterError, ValidationError
from .traceio import DatasetMeta, contacts_from_events

WINDOW = 3 * 3600.0
GENERATION_CUTOFF = 3600.0
MESSAGE_RATE = 0.25  # messages per second
PROTOCOLS = ("epidemic", "delegation")
CSV_HEADER = "trace,protocol,seed,cost,success_rate,avg_delay_s"


class Message(NamedTuple):
    id: int
    source: int
    destination: int
    gen_time: float


@dataclass
class ForwardingMetrics:
    protocol: str
    messages: int
    delivered: int
    replicas: int
    cost: float
    success_rate: float | None
    avg_delay: float | None
    delivery_times: dict = field(default_factory=dict, repr=False)

    def csv_row(self, trace: str, seed) -> str:
        def fmt(v):
            return "" if v is None else f"{v:.6f}"

        return f"{trace},{self.protocol},{seed},{self.cost:.6f},{fmt(self.success_rate)},{fmt(self.avg_delay)}"


@dataclass
class Trace:
    """Contacts plus the node population and time span they come from."""

    contacts: list
    nodes: list
    duration: float
    name: str = "trace"

    @classmethod
    def from_event_log(cls, log: EventLog, name="swim"):
        return cls(contacts_from_events(log), list(range(log.node_count)), log.sim_duration, name)

    @classmethod
    def from_import(cls, contacts, meta: DatasetMeta):
        duration = meta.duration_s or max((c.end for c in contacts), default=0.0)
        nodes = list(meta.node_ids()) if meta.device_count else sorted({n for c in contacts for n in (c.a, c.b)})
        return cls(list(contacts), nodes, duration, meta.name)


def generate_traffic(window, nodes, rng: np.random.Generator, rate=MESSAGE_RATE, cutoff=GENERATION_CUTOFF):
    """Poisson message arrivals over ``window`` minus its last ``cutoff`` seconds.

    ``nodes`` is a node count or a sequence of node ids; source and
    destination are distinct and uniform.
    """
    ids = list(range(nodes)) if isinstance(nodes, (int, np.integer)) else list(nodes)
    if len(ids) < 2:
        raise ParameterError("traffic needs at least two nodes")
    t0, t1 = window
    span = (t1 - t0) - cutoff
    times = poisson_arrivals(span, rate, rng)
    k = len(ids)
    src = rng.integers(0, k, size=times.size)
    dst = rng.integers(0, k - 1, size=times.size)
    dst = dst + (dst >= src)
    return [Message(i, ids[s], ids[d], t0 + float(t)) for i, (s, d, t) in enumerate(zip(src, dst, times))]


def poisson_arrivals(span: float, rate: float, rng: np.random.Generator) -> np.ndarray:
    if span <= 0:
        return np.empty(0)
    mean_gap = 1.0 / rate
    out = []
    t = 0.0
    chunk = max(16, int(span * rate * 1.2) + 16)
    while True:
        gaps = rng.exponential(mean_gap, size=chunk)
        times = t + np.cumsum(gaps)
        if times[-1] >= span:
            out.append(times[times < span])
            break
        out.append(times)
        t = times[-1]
    return np.concatenate(out)


def draw_qualities(nodes, rng: np.random.Generator) -> dict:
    """Uniform qualities on (0, 1]."""
    return {n: 1.0 - float(u) for n, u in zip(nodes, rng.random(len(nodes)))}


# -- replay ----------------------------------------------------------------

_OPEN, _GEN, _CLOSE = 0, 1, 2


def _timeline(contacts, traffic, window):
    t0, t1 = window
    ev = []
    for c in contacts:
        if c.end < t0 or c.start > t1:
            continue
        ev.append((max(c.start, t0), _OPEN, c.a, c.b))
        ev.append((min(c.end, t1), _CLOSE, c.a, c.b))
    for m in traffic:
        ev.append((m.gen_time, _GEN, m.id, -1))
    ev.sort()
    return ev


class _Replay:
    def __init__(self, contacts, traffic, window):
        self.window = window or (min((m.gen_time for m in traffic), default=0.0), float("inf"))
        self.traffic = {m.id: m for m in traffic}
        self.timeline = _timeline(contacts, traffic, self.window)
        self.active = defaultdict(lambda: defaultdict(int))
        self.delivered = {}
        self.replicas = 0

    def run(self, name):
        for t, kind, a, b in self.timeline:
            if kind == _OPEN:
                self.active[a][b] += 1
                self.active[b][a] += 1
                self.on_contact(a, b, t)
            elif kind == _CLOSE:
                for u, w in ((a, b), (b, a)):
                    self.active[u][w] -= 1
                    if not self.active[u][w]:
                        del self.active[u][w]
            else:
                m = self.traffic[a]
                self.replicas += 1
                self.on_generate(m, t)
        n = len(self.traffic)
        delays = [self.delivered[i] - self.traffic[i].gen_time for i in self.delivered]
        return ForwardingMetrics(
            protocol=name,
            messages=n,
            delivered=len(self.delivered),
            replicas=self.replicas,
            cost=self.replicas / n if n else 0.0,
            success_rate=len(self.delivered) / n if n else None,
            avg_delay=float(np.mean(delays)) if delays else None,
            delivery_times=dict(self.delivered),
        )

    def component(self, start):
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for w in self.active.get(u, ()):
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return seen

    def mark_delivered(self, mid, node, t):
        if self.traffic[mid].destination == node and mid not in self.delivered:
            self.delivered[mid] = t


class _Epidemic(_Replay):
    def __init__(self, contacts, traffic, window):
        super().__init__(contacts, traffic, window)
        self.held = defaultdict(set)
        self.dest_of = {m.id: m.destination for m in traffic}

    def _flood(self, nodes, t):
        union = set().union(*(self.held[u] for u in nodes))
        for u in nodes:
            new = union - self.held[u]
            if not new:
                continue
            self.replicas += len(new)
            self.held[u] |= new
            for mid in new:
                if self.dest_of[mid] == u and mid not in self.delivered:
                    self.delivered[mid] = t

    def on_contact(self, a, b, t):
        if self.held[a] != self.held[b]:
            self._flood(self.component(a), t)

    def on_generate(self, m, t):
        self.held[m.source].add(m.id)
        comp = self.component(m.source)
        if len(comp) > 1:
            self._flood(comp, t)


class _Delegation(_Replay):
    def __init__(self, contacts, traffic, window, qualities):
        super().__init__(contacts, traffic, window)
        self.q = qualities
        self.held = defaultdict(dict)  # node -> {message id: rate of that copy}

    def _exchange(self, queue, t):
        while queue:
            u, w = queue.pop()
            mine, theirs = self.held[u], self.held[w]
            qw = self.q[w]
            got = False
            for mid, rate in mine.items():
                if mid in theirs:
                    continue
                if qw > rate:
                    mine[mid] = qw
                    theirs[mid] = qw
                elif self.traffic[mid].destination == w:
                    # the destination always accepts its own message
                    theirs[mid] = max(rate, qw)
                else:
                    continue
                self.replicas += 1
                got = True
                self.mark_delivered(mid, w, t)
            if got:
                queue.extend((w, x) for x in self.active.get(w, ()) if x != u)

    def on_contact(self, a, b, t):
        self._exchange([(a, b), (b, a)], t)

    def on_generate(self, m, t):
        self.held[m.source][m.id] = self.q[m.source]
        self._exchange([(m.source, x) for x in self.active.get(m.source, ())], t)


def run_epidemic(contacts, traffic, window=None) -> ForwardingMetrics:
    return _Epidemic(contacts, traffic, window).run("epidemic")


def run_delegation(contacts, traffic, qualities, window=None) -> ForwardingMetrics:
    return _Delegation(contacts, traffic, window, qualities).run("delegation")


# -- pipeline --------------------------------------------------------------

def busiest_window(contacts, length: float, trace_end: float) -> float:
    """Start of the ``length``-second span holding the most contact starts."""
    if trace_end < length:
        raise ValidationError(f"trace spans {trace_end:.0f} s, shorter than the {length:.0f} s window")
    starts = sorted(c.start for c in contacts)
    cand = np.array([0.0] + starts)
    cand = cand[cand + length <= trace_end]
    counts = np.searchsorted(starts, cand + length, side="left") - np.searchsorted(starts, cand, side="left")
    return float(cand[int(np.argmax(counts))])


def evaluate_protocols(trace: Trace, protocols: Sequence[str], seed, window_start=None, length=WINDOW):
    """Run several protocols over one traffic draw; returns metrics in protocol order."""
    for p in protocols:
        if p not in PROTOCOLS:
            raise ParameterError(f"unknown protocol {p!r}; choose from {PROTOCOLS}")
    if trace.duration < length:
        raise ValidationError(f"trace spans {trace.duration:.0f} s, shorter than the {length:.0f} s window")
    if window_start is None:
        window_start = busiest_window(trace.contacts, length, trace.duration)
    elif window_start + length > trace.duration:
        raise ValidationError("window extends past the end of the trace")
    window = (window_start, window_start + length)
    rng = np.random.default_rng(seed)
    traffic = generate_traffic(window, trace.nodes, rng)
    qualities = draw_qualities(trace.nodes, rng)
    out = []
    for p in protocols:
        if p == "epidemic":
            out.append(run_epidemic(trace.contacts, traffic, window))
        else:
            out.append(run_delegation(trace.contacts, traffic, qualities, window))
    return out


def evaluate(trace, protocol: str, seed, window_start=None, length=WINDOW) -> ForwardingMetrics:
    if isinstance(trace, EventLog):
        trace = Trace.from_event_log(trace)
    return evaluate_protocols(trace, [protocol], seed, window_start, length)[0]


def write_metrics_csv(rows, sink) -> None:
    text = "\n".join([CSV_HEADER, *rows]) + "\n"
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "w") as fh:
            fh.write(text)
    else:
        sink.write(text)
