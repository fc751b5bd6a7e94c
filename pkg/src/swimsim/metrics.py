"""Empirical distributions of contact traces and head/tail fits."""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .traceio import contacts_by_pair, inter_contact_from_contacts

HOUR = 3600.0
HEAD_WINDOW = (600.0, 12 * HOUR)
TAIL_WINDOW = (12 * HOUR, None)
MIN_FIT_POINTS = 10


class InsufficientData(ValueError):
    pass


@dataclass
class FitResult:
    kind: str  # "power_law" (log-log) or "exponential" (semilog)
    slope: float
    intercept: float
    r2: float
    range: tuple
    points: int

    @property
    def rate(self) -> float:
        """Decay rate of an exponential fit, ``-slope``."""
        return -self.slope


@dataclass
class DistributionSummary:
    samples: np.ndarray
    values: np.ndarray  # distinct sample values, ascending
    ccdf: np.ndarray  # P(X > value)
    head_fit: FitResult | None = None
    tail_fit: FitResult | None = None
    stats: dict = field(default_factory=dict)

    @classmethod
    def from_points(cls, values, ccdf):
        """Summary built directly from (value, ccdf) points, e.g. an analytic curve."""
        values = np.asarray(values, dtype=float)
        return cls(samples=values.copy(), values=values, ccdf=np.asarray(ccdf, dtype=float))

    def evaluate(self, x):
        """Empirical P(X > x)."""
        n = self.samples.size
        return 1.0 - np.searchsorted(self.samples, x, side="right") / n

    def points(self):
        return list(zip(self.values.tolist(), self.ccdf.tolist()))


def ccdf(samples) -> DistributionSummary:
    x = np.sort(np.asarray(samples, dtype=float))
    if x.size == 0:
        raise InsufficientData("empty sample")
    if x[0] < 0:
        raise ValueError("samples must be nonnegative")
    values = np.unique(x)
    p = 1.0 - np.searchsorted(x, values, side="right") / x.size
    return DistributionSummary(samples=x, values=values, ccdf=p)


def _window(summary, rng):
    lo, hi = rng
    if hi is None:
        hi = float(summary.values.max()) if summary.values.size else 0.0
    m = (summary.values >= lo) & (summary.values <= hi) & (summary.ccdf > 0)
    return summary.values[m], summary.ccdf[m], (lo, hi)


def _linfit(x, y):
    if np.all(y == y[0]):
        return 0.0, float(y[0]), 1.0
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r2


def fit_power_law_head(summary: DistributionSummary, range=HEAD_WINDOW) -> FitResult:
    """Least squares on (log value, log ccdf) inside ``range``."""
    x, p, rng = _window(summary, range)
    x, p = x[x > 0], p[x > 0]
    if x.size < MIN_FIT_POINTS:
        raise InsufficientData(f"{x.size} ccdf points in {rng}, need {MIN_FIT_POINTS}")
    slope, intercept, r2 = _linfit(np.log(x), np.log(p))
    return FitResult("power_law", slope, intercept, r2, rng, int(x.size))


def fit_exponential_tail(summary: DistributionSummary, range=TAIL_WINDOW) -> FitResult:
    """Least squares on (value, log ccdf) inside ``range``."""
    x, p, rng = _window(summary, range)
    if x.size < MIN_FIT_POINTS:
        raise InsufficientData(f"{x.size} ccdf points in {rng}, need {MIN_FIT_POINTS}")
    slope, intercept, r2 = _linfit(x, np.log(p))
    return FitResult("exponential", slope, intercept, r2, rng, int(x.size))


def attach_fits(summary, head=HEAD_WINDOW, tail=TAIL_WINDOW):
    """Fill head/tail fits where the windows hold enough points."""
    try:
        summary.head_fit = fit_power_law_head(summary, head)
    except InsufficientData:
        summary.head_fit = None
    try:
        summary.tail_fit = fit_exponential_tail(summary, tail)
    except InsufficientData:
        summary.tail_fit = None
    return summary


def dichotomy(summary, head=HEAD_WINDOW, tail=TAIL_WINDOW) -> dict:
    """Both fit families on both windows.

    The power-law/exponential dichotomy holds when the log-log fit wins on the
    head and the semilog fit wins on the tail.
    """
    out = {
        "head_power_law": fit_power_law_head(summary, head),
        "head_exponential": fit_exponential_tail(summary, head),
        "tail_power_law": fit_power_law_head(summary, tail),
        "tail_exponential": fit_exponential_tail(summary, tail),
    }
    out["head_ok"] = out["head_power_law"].r2 > out["head_exponential"].r2
    out["tail_ok"] = out["tail_exponential"].r2 > out["tail_power_law"].r2
    return out


# -- the three trace profiles ----------------------------------------------

def inter_contact_distribution(contacts) -> DistributionSummary:
    gaps = list(itertools.chain.from_iterable(inter_contact_from_contacts(contacts).values()))
    return ccdf(gaps)


def contact_duration_distribution(contacts) -> DistributionSummary:
    return ccdf([c.end - c.start for c in contacts])


def contacts_per_pair(contacts, nodes, duration: float) -> DistributionSummary:
    """Contact count for every unordered node pair, zero-contact pairs included.

    ``nodes`` is a node count (ids ``0..n-1``) or an iterable of ids.
    ``stats["mean_contacts_per_pair_day"]`` normalises the total by the
    ordered pair count ``n(n-1)`` and the duration in days, the convention
    that reproduces the published per-dataset averages.
    """
    if nodes is None:
        raise ValueError("node count is required")
    ids = list(range(nodes)) if isinstance(nodes, int) else sorted(nodes)
    n = len(ids)
    if n < 2:
        raise InsufficientData("need at least two nodes")
    per_pair = {k: len(v) for k, v in contacts_by_pair(contacts).items()}
    counts = [per_pair.get((a, b), 0) for a, b in itertools.combinations(ids, 2)]
    s = ccdf(counts)
    total = sum(counts)
    days = duration / 86400.0
    s.stats = {
        "total_contacts": total,
        "nodes": n,
        "days": days,
        "mean_contacts_per_pair_day": total / (n * (n - 1) * days) if days > 0 else math.nan,
    }
    return s


def kolmogorov_distance(a: DistributionSummary, b: DistributionSummary) -> float:
    grid = np.union1d(a.values, b.values)
    return float(np.max(np.abs(a.evaluate(grid) - b.evaluate(grid))))


def fit_bounded_pareto_slope(samples, lo: float, hi: float) -> float:
    """Maximum-likelihood exponent of a density proportional to t**-a on [lo, hi]."""
    t = np.asarray(samples, dtype=float)
    mean_log = float(np.mean(np.log(t)))
    llo, lhi = math.log(lo), math.log(hi)

    def nll(a):
        e = 1.0 - a
        if abs(e) < 1e-9:
            norm = lhi - llo
        else:
            norm = (math.exp(e * lhi) - math.exp(e * llo)) / e
        return math.log(norm) + a * mean_log

    res = optimize.minimize_scalar(nll, bounds=(0.01, 10.0), method="bounded", options={"xatol": 1e-9})
    return float(res.x)


# -- export ----------------------------------------------------------------

def export_points(summary: DistributionSummary, max_points: int = 200):
    """Raw ccdf points, or the ccdf sampled on a log grid when there are too many."""
    if summary.values.size <= max_points:
        return summary.values, summary.ccdf
    pos = summary.values[summary.values > 0]
    grid = np.geomspace(pos[0], pos[-1], max_points - (1 if summary.values[0] == 0 else 0))
    if summary.values[0] == 0:
        grid = np.concatenate([[0.0], grid])
    return grid, summary.evaluate(grid)


def write_ccdf_csv(summary: DistributionSummary, sink, max_points: int = 200) -> None:
    xs, ps = export_points(summary, max_points)
    lines = ["value,ccdf"] + [f"{x:.6f},{p:.8f}" for x, p in zip(xs, ps)]
    text = "\n".join(lines) + "\n"
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "w") as fh:
            fh.write(text)
    else:
        sink.write(text)


def fit_report(name: str, summary: DistributionSummary, dich: dict | None = None) -> list:
    lines = [f"{name}.samples={summary.samples.size}"]
    for key, value in summary.stats.items():
        lines.append(f"{name}.{key}={value:.6g}" if isinstance(value, float) else f"{name}.{key}={value}")
    for label, fit in (("head", summary.head_fit), ("tail", summary.tail_fit)):
        if fit is None:
            lines.append(f"{name}.{label}_fit=insufficient_data")
            continue
        lines.append(f"{name}.{label}_fit.kind={fit.kind}")
        lines.append(f"{name}.{label}_fit.range={fit.range[0]:.1f}:{fit.range[1]:.1f}")
        lines.append(f"{name}.{label}_fit.slope={fit.slope:.8g}")
        lines.append(f"{name}.{label}_fit.r2={fit.r2:.6f}")
        lines.append(f"{name}.{label}_fit.points={fit.points}")
    if dich:
        for key in ("head_power_law", "head_exponential", "tail_power_law", "tail_exponential"):
            lines.append(f"{name}.{key}.r2={dich[key].r2:.6f}")
        lines.append(f"{name}.dichotomy_head={'yes' if dich['head_ok'] else 'no'}")
        lines.append(f"{name}.dichotomy_tail={'yes' if dich['tail_ok'] else 'no'}")
    return lines
