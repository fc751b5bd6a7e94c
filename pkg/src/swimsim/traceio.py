"""Event-log and contact-trace serialization.

Event log, one event per line, times with 6 decimals::

    # seed=1
    # node_count=41
    # sim_duration=259200.000000
    Start 812.345678 3 7 11        (kind time node row col)
    Meet 815.000001 3 9            (kind time node node)

Contact CSV, ``#`` lines carry :class:`DatasetMeta` fields as ``key=value``::

    # name=Infocom05
    # device_count=41
    id1,id2,start,end
    1,2,100,200
"""

from __future__ import annotations

import io
import os
from collections import defaultdict
from dataclasses import dataclass, fields
from typing import NamedTuple

from .engine import DEPART, FINISH, MEET, START, EventLog, EventRecord
from .errors import TraceFormatError, ValidationError
from .model import CellIndex

CONTACT_CSV_FORMAT = "id1,id2,start,end (seconds), optional '# key=value' metadata header"


class ContactRecord(NamedTuple):
    a: int
    b: int
    start: float
    end: float

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class DatasetMeta:
    name: str = "unnamed"
    device: str = ""
    duration_days: float = 0.0
    granularity_s: float = 0.0
    device_count: int = 0
    mobile_count: int = 0
    id_base: int = 1

    def __post_init__(self):
        if self.mobile_count > self.device_count:
            raise ValidationError("mobile_count exceeds device_count")

    @property
    def duration_s(self) -> float:
        return self.duration_days * 86400.0

    def node_ids(self):
        return range(self.id_base, self.id_base + self.device_count)


# -- helpers ---------------------------------------------------------------

def _open_read(source):
    if isinstance(source, (str, os.PathLike)):
        with open(source) as fh:
            return fh.read().splitlines()
    if hasattr(source, "read"):
        return source.read().splitlines()
    return [line.rstrip("\n") for line in source]


def _header_value(text):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _fmt_time(t):
    return f"{t:.6f}"


# -- event logs ------------------------------------------------------------

def format_event(e: EventRecord) -> str:
    if e.kind in (MEET, DEPART):
        return f"{e.kind} {_fmt_time(e.time)} {e.node} {e.other}"
    return f"{e.kind} {_fmt_time(e.time)} {e.node} {e.other[0]} {e.other[1]}"


def write_event_log(log: EventLog, sink) -> None:
    lines = []
    for key, value in log.header.items():
        if key in ("node_count", "sim_duration"):
            continue
        lines.append(f"# {key}={value}")
    lines.append(f"# node_count={log.node_count}")
    lines.append(f"# sim_duration={_fmt_time(log.sim_duration)}")
    lines.extend(format_event(e) for e in log.events)
    text = "\n".join(lines) + "\n"
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "w") as fh:
            fh.write(text)
    else:
        sink.write(text)


def dumps_event_log(log: EventLog) -> str:
    buf = io.StringIO()
    write_event_log(log, buf)
    return buf.getvalue()


def read_event_log(source) -> EventLog:
    log = EventLog()
    last_t = float("-inf")
    for no, raw in enumerate(_open_read(source), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                key = key.strip()
                if key == "node_count":
                    log.node_count = int(value)
                elif key == "sim_duration":
                    log.sim_duration = float(value)
                else:
                    log.header[key] = _header_value(value.strip())
            continue
        parts = line.split()
        kind = parts[0]
        try:
            if kind in (MEET, DEPART):
                if len(parts) != 4:
                    raise TraceFormatError(f"{kind} needs 'kind time id1 id2'", no)
                e = EventRecord(kind, float(parts[1]), int(parts[2]), int(parts[3]))
            elif kind in (START, FINISH):
                if len(parts) != 5:
                    raise TraceFormatError(f"{kind} needs 'kind time node row col'", no)
                e = EventRecord(kind, float(parts[1]), int(parts[2]), CellIndex(int(parts[3]), int(parts[4])))
            else:
                raise TraceFormatError(f"unknown event kind {kind!r}", no)
        except ValueError as exc:
            if isinstance(exc, TraceFormatError):
                raise
            raise TraceFormatError(str(exc), no) from None
        if e.time < last_t:
            raise ValidationError(f"line {no}: time {e.time} precedes {last_t}")
        last_t = e.time
        log.events.append(e)
    return log


def validate_event_log(log: EventLog) -> None:
    """Check ordering and Meet/Depart, Start/Finish alternation."""
    last_t = float("-inf")
    pair_open = {}
    moving = {}
    for e in log.events:
        if e.time < last_t:
            raise ValidationError(f"non-monotone time at {e}")
        last_t = e.time
        if e.kind in (MEET, DEPART):
            key = (min(e.node, e.other), max(e.node, e.other))
            want = e.kind == MEET
            if pair_open.get(key, False) == want:
                raise ValidationError(f"{e.kind} out of order for pair {key} at t={e.time}")
            pair_open[key] = want
        else:
            want = e.kind == START
            if moving.get(e.node, False) == want:
                raise ValidationError(f"{e.kind} out of order for node {e.node} at t={e.time}")
            moving[e.node] = want


# -- contacts --------------------------------------------------------------

def contacts_from_events(log: EventLog) -> list:
    """Pair each Meet with the next Depart of the same pair.

    A Meet still open at the end of the log closes at ``log.sim_duration``.
    Zero-length intervals are dropped.
    """
    open_at = {}
    out = []
    for e in log.events:
        if e.kind not in (MEET, DEPART):
            continue
        key = (min(e.node, e.other), max(e.node, e.other))
        if e.kind == MEET:
            if key in open_at:
                raise ValidationError(f"Meet for already-open pair {key} at t={e.time}")
            open_at[key] = e.time
        else:
            if key not in open_at:
                raise ValidationError(f"Depart without prior Meet for pair {key} at t={e.time}")
            start = open_at.pop(key)
            if e.time > start:
                out.append(ContactRecord(key[0], key[1], start, e.time))
    end = log.sim_duration
    for key, start in open_at.items():
        if end > start:
            out.append(ContactRecord(key[0], key[1], start, end))
    out.sort(key=lambda c: (c.start, c.a, c.b))
    return out


def contacts_by_pair(contacts) -> dict:
    pairs = defaultdict(list)
    for c in contacts:
        pairs[(c.a, c.b)].append(c)
    for lst in pairs.values():
        lst.sort(key=lambda c: c.start)
    return dict(pairs)


def inter_contact_from_contacts(contacts) -> dict:
    """Per pair, the gaps between the end of a contact and the start of the next."""
    gaps = {}
    for key, lst in contacts_by_pair(contacts).items():
        gaps[key] = [nxt.start - cur.end for cur, nxt in zip(lst, lst[1:])]
    return gaps


def merge_contacts(contacts) -> list:
    """Normalize pairs to a<b and merge overlapping or touching intervals."""
    merged = []
    for key, lst in contacts_by_pair(
        ContactRecord(min(c.a, c.b), max(c.a, c.b), c.start, c.end) for c in contacts
    ).items():
        cur = lst[0]
        for c in lst[1:]:
            if c.start <= cur.end:
                cur = cur._replace(end=max(cur.end, c.end))
            else:
                merged.append(cur)
                cur = c
        merged.append(cur)
    merged.sort(key=lambda c: (c.start, c.a, c.b))
    return merged


_META_FIELDS = {f.name: f.type for f in fields(DatasetMeta)}


def parse_meta(header: dict) -> DatasetMeta:
    values = {}
    for key, value in header.items():
        if key not in _META_FIELDS:
            continue
        if key in ("device_count", "mobile_count", "id_base"):
            values[key] = int(value)
        elif key in ("duration_days", "granularity_s"):
            values[key] = float(value)
        else:
            values[key] = str(value)
    return DatasetMeta(**values)


def read_contact_csv(source):
    """Parse a canonical contact CSV into (raw records, header dict)."""
    header = {}
    rows = []
    for no, raw in enumerate(_open_read(source), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                header[key.strip()] = value.strip()
            continue
        parts = [p.strip() for p in line.split(",")]
        if parts == ["id1", "id2", "start", "end"]:
            continue
        if len(parts) != 4:
            raise TraceFormatError(f"expected {CONTACT_CSV_FORMAT}", no)
        try:
            a, b = int(parts[0]), int(parts[1])
            start, end = float(parts[2]), float(parts[3])
        except ValueError:
            raise TraceFormatError(f"non-numeric field; expected {CONTACT_CSV_FORMAT}", no) from None
        if end < start:
            raise ValidationError(f"line {no}: negative contact duration ({start} > {end})")
        if a == b:
            raise ValidationError(f"line {no}: self-contact for node {a}")
        rows.append((no, ContactRecord(a, b, start, end)))
    return rows, header


def import_contact_trace(source, meta: DatasetMeta | None = None):
    """Load a contact CSV, validate ids against ``meta`` and merge overlaps.

    Returns ``(contacts, meta)``; when ``meta`` is None it is taken from the
    file header.
    """
    rows, header = read_contact_csv(source)
    if meta is None:
        meta = parse_meta(header)
    if meta.device_count > 0:
        lo, hi = meta.id_base, meta.id_base + meta.device_count
        for no, c in rows:
            for node in (c.a, c.b):
                if not lo <= node < hi:
                    raise ValidationError(f"line {no}: node id {node} not in [{lo}, {hi}) for {meta.name}")
    return merge_contacts(c for _, c in rows), meta


def write_contact_csv(contacts, sink, meta: DatasetMeta | None = None) -> None:
    lines = []
    if meta is not None:
        for f in fields(DatasetMeta):
            lines.append(f"# {f.name}={getattr(meta, f.name)}")
    lines.append("id1,id2,start,end")
    lines.extend(f"{c.a},{c.b},{_fmt_time(c.start)},{_fmt_time(c.end)}" for c in contacts)
    text = "\n".join(lines) + "\n"
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "w") as fh:
            fh.write(text)
    else:
        sink.write(text)


def haggle_to_canonical(lines, max_id: int | None = None):
    """Adapter for the whitespace-separated iMote ``contacts`` tables.

    Columns are ``id1 id2 start end [n_contact gap]``; extra columns are
    ignored. Ids above ``max_id`` (external or stationary devices) are
    dropped. Yields canonical CSV rows.
    """
    for raw in lines:
        parts = raw.split()
        if len(parts) < 4 or raw.lstrip().startswith("#"):
            continue
        a, b = int(parts[0]), int(parts[1])
        if max_id is not None and (a > max_id or b > max_id):
            continue
        yield f"{a},{b},{parts[2]},{parts[3]}"
