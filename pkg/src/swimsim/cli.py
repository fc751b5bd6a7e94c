"""Command-line front end: ``swimsim {simulate,analyze,forward,compare}``."""

from __future__ import annotations

import argparse
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import forwarding, metrics
from .config import load_config
from .engine import run_simulation
from .errors import ParameterError, TraceFormatError, ValidationError
from .forwarding import Trace
from .presets import PRESETS, get_preset
from .traceio import CONTACT_CSV_FORMAT, import_contact_trace, read_event_log, write_event_log

log = logging.getLogger("swimsim")

EVENT_KINDS = ("Meet", "Depart", "Start", "Finish")


# -- argument helpers ------------------------------------------------------

def parse_seeds(text: str) -> list:
    """``"7"``, ``"1..10"`` (inclusive) or ``"1,4,9"``."""
    if ".." in text:
        a, b = text.split("..", 1)
        a, b = int(a), int(b)
        if b < a:
            raise ParameterError(f"empty seed range {text!r}")
        return list(range(a, b + 1))
    return [int(s) for s in text.split(",") if s.strip()]


def parse_window(text: str):
    lo, _, hi = text.partition(":")
    return float(lo), (None if hi in ("", "max") else float(hi))


def _seeds(args) -> list:
    if getattr(args, "seeds", None):
        return parse_seeds(args.seeds)
    return [args.seed]


def _pmap(fn, items, workers):
    items = list(items)
    if workers == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _params_from_args(args):
    if args.config:
        params = load_config(args.config)
        name = Path(args.config).stem
    else:
        preset = get_preset(args.preset)
        params, name = preset.params, preset.name
    if getattr(args, "nodes", None) is not None:
        params = params.replace(node_count=args.nodes)
    return params, name


def load_trace(path, name=None) -> Trace:
    """Read either an event log or a contact CSV."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"trace {path} not found; expected an event log or a contact CSV ({CONTACT_CSV_FORMAT})")
    with open(path) as fh:
        first = ""
        for line in fh:
            if line.strip() and not line.startswith("#"):
                first = line.split()[0]
                break
    if first in EVENT_KINDS or (first == "" and _is_event_log_header(path)):
        trace = Trace.from_event_log(read_event_log(path), name=name or path.stem)
    else:
        contacts, meta = import_contact_trace(path)
        trace = Trace.from_import(contacts, meta)
        if name:
            trace.name = name
    return trace


def _is_event_log_header(path):
    with open(path) as fh:
        return any(line.startswith("# sim_duration=") for line in fh)


# -- analysis ----------------------------------------------------------------

def analyze_trace(trace: Trace, out_dir, prefix="", head=metrics.HEAD_WINDOW, tail=metrics.TAIL_WINDOW) -> list:
    """Write the three distribution CSVs and return the fit report lines."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = [f"trace={trace.name}", f"nodes={len(trace.nodes)}", f"duration_s={trace.duration:.1f}",
              f"contacts={len(trace.contacts)}"]
    if not trace.contacts:
        report.append("status=no contacts")
        return report
    ict = durations = None
    try:
        ict = metrics.attach_fits(metrics.inter_contact_distribution(trace.contacts), head, tail)
    except metrics.InsufficientData:
        report.append("ict=no inter-contact gaps")
    durations = metrics.attach_fits(metrics.contact_duration_distribution(trace.contacts), head, tail)
    per_pair = metrics.contacts_per_pair(trace.contacts, trace.nodes, trace.duration)
    if ict is not None:
        metrics.write_ccdf_csv(ict, out_dir / f"{prefix}ict.csv")
        dich = None
        try:
            dich = metrics.dichotomy(ict, head, tail)
        except metrics.InsufficientData:
            pass
        report += metrics.fit_report("ict", ict, dich)
    metrics.write_ccdf_csv(durations, out_dir / f"{prefix}contact_duration.csv")
    metrics.write_ccdf_csv(per_pair, out_dir / f"{prefix}contacts_per_pair.csv")
    report += metrics.fit_report("contact_duration", durations)
    report += metrics.fit_report("contacts_per_pair", per_pair)
    return report


# -- commands ----------------------------------------------------------------

def _simulate_one(job):
    params, seed, name, out = job
    t0 = time.perf_counter()
    ev = run_simulation(params.replace(rng_seed=seed))
    ev.header = {"seed": seed, "preset": name}
    write_event_log(ev, out)
    return ev.counts(), time.perf_counter() - t0


def cmd_simulate(args):
    if args.show_preset:
        for name in ([args.preset] if args.preset else PRESETS):
            print(get_preset(name).describe())
            print()
        return 0
    if not args.out:
        raise ParameterError("--out is required")
    params, name = _params_from_args(args)
    seeds = _seeds(args)
    if len(seeds) == 1:
        outs = [Path(args.out)]
    else:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        outs = [Path(args.out) / f"{name}_seed{s}.events" for s in seeds]
    for out in outs:
        out.parent.mkdir(parents=True, exist_ok=True)
    results = _pmap(_simulate_one, [(params, s, name, o) for s, o in zip(seeds, outs)], args.workers)
    for seed, out, (counts, wall) in zip(seeds, outs, results):
        summary = " ".join(f"{k}={counts[k]}" for k in EVENT_KINDS)
        print(f"seed={seed} nodes={params.node_count} duration={params.sim_duration:.0f}s {summary} "
              f"wall={wall:.2f}s -> {out}")
    return 0


def cmd_analyze(args):
    trace = load_trace(args.trace)
    report = analyze_trace(trace, args.out, head=parse_window(args.head_window),
                           tail=parse_window(args.tail_window))
    Path(args.out, "fits.txt").write_text("\n".join(report) + "\n")
    print("\n".join(report))
    return 0


def _forward_one(job):
    trace, protocols, seed, window_start = job
    return [m.csv_row(trace.name, seed)
            for m in forwarding.evaluate_protocols(trace, protocols, seed, window_start)]


def _protocols(name):
    return list(forwarding.PROTOCOLS) if name == "both" else [name]


def cmd_forward(args):
    trace = load_trace(args.trace)
    protocols = _protocols(args.protocol)
    jobs = [(trace, protocols, s, args.window_start) for s in _seeds(args)]
    rows = [r for chunk in _pmap(_forward_one, jobs, args.workers) for r in chunk]
    forwarding.write_metrics_csv(rows, args.out)
    print("\n".join([forwarding.CSV_HEADER, *rows]))
    return 0


def _compare_swim(job):
    params, seed, name, out_dir, prefix, window_start = job
    ev = run_simulation(params.replace(rng_seed=seed))
    trace = Trace.from_event_log(ev, name=f"swim_{name}")
    report = analyze_trace(trace, out_dir, prefix=prefix)
    ms = forwarding.evaluate_protocols(trace, list(forwarding.PROTOCOLS), seed, window_start)
    return report, ms


def _mean_rows(trace_name, per_seed):
    rows = []
    for i, proto in enumerate(forwarding.PROTOCOLS):
        ms = [m[i] for m in per_seed]
        succ = [m.success_rate for m in ms if m.success_rate is not None]
        delay = [m.avg_delay for m in ms if m.avg_delay is not None]
        mean = forwarding.ForwardingMetrics(proto, 0, 0, 0, float(np.mean([m.cost for m in ms])),
                                            float(np.mean(succ)) if succ else None,
                                            float(np.mean(delay)) if delay else None)
        rows.append(mean.csv_row(trace_name, "mean"))
    return rows


def cmd_compare(args):
    real_path = Path(args.real_trace)
    if not real_path.exists():
        raise FileNotFoundError(f"real trace {real_path} not found; expected a contact CSV ({CONTACT_CSV_FORMAT})")
    contacts, meta = import_contact_trace(real_path)
    real = Trace.from_import(contacts, meta)
    real.name = f"real_{meta.name}"
    preset = get_preset(args.preset)
    params = preset.params if args.nodes is None else preset.params.replace(node_count=args.nodes)
    seeds = _seeds(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    report = analyze_trace(real, out, prefix="real_")
    real_ms = [forwarding.evaluate_protocols(real, list(forwarding.PROTOCOLS), s) for s in seeds]
    prefixes = ["swim_"] if len(seeds) == 1 else [f"swim_seed{s}_" for s in seeds]
    jobs = [(params, s, preset.name, out, p, None) for s, p in zip(seeds, prefixes)]
    swim = _pmap(_compare_swim, jobs, args.workers)

    rows = []
    for s, ms in zip(seeds, real_ms):
        rows += [m.csv_row(real.name, s) for m in ms]
    swim_name = f"swim_{preset.name}"
    for s, (_, ms) in zip(seeds, swim):
        rows += [m.csv_row(swim_name, s) for m in ms]
    if len(seeds) > 1:
        rows += _mean_rows(real.name, real_ms)
        rows += _mean_rows(swim_name, [ms for _, ms in swim])
    forwarding.write_metrics_csv(rows, out / "forwarding.csv")
    for s, (rep, _) in zip(seeds, swim):
        report += [f"# swim seed={s}", *rep]
    (out / "fits.txt").write_text("\n".join(report) + "\n")
    print("\n".join([forwarding.CSV_HEADER, *rows]))
    return 0


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swimsim", description="SWIM mobility simulator and trace analysis")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def seeds(p):
        p.add_argument("--seed", type=int, default=1)
        p.add_argument("--seeds", help="seed list: N, A..B or A,B,C; runs fan out in parallel")
        p.add_argument("--workers", type=int, default=None, help="parallel workers for seed sweeps")

    p = sub.add_parser("simulate", help="run the model and write an event log")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--preset", choices=sorted(PRESETS))
    src.add_argument("--config", help="key = value parameter file")
    p.add_argument("--nodes", type=int, help="override the node count")
    p.add_argument("--out", help="event log path (a directory when several seeds are given)")
    p.add_argument("--show-preset", action="store_true", help="print preset parameters and exit")
    seeds(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="distribution CSVs and head/tail fits for a trace")
    p.add_argument("trace")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--head-window", default="600:43200", help="seconds lo:hi for the power-law fit")
    p.add_argument("--tail-window", default="43200:max", help="seconds lo:hi for the exponential fit")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("forward", help="evaluate forwarding protocols on a trace")
    p.add_argument("trace")
    p.add_argument("--protocol", choices=["epidemic", "delegation", "both"], default="both")
    p.add_argument("--window-start", type=float, default=None,
                   help="start of the 3-hour window (default: busiest span)")
    p.add_argument("--out", required=True, help="metrics CSV path")
    seeds(p)
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("compare", help="paired real-vs-SWIM distributions and forwarding metrics")
    p.add_argument("real_trace")
    p.add_argument("--preset", required=True, choices=sorted(PRESETS))
    p.add_argument("--nodes", type=int)
    p.add_argument("--out", required=True, help="output directory")
    seeds(p)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "simulate" and not args.show_preset and not (args.preset or args.config):
        parser.error("simulate needs --preset or --config")
    try:
        return args.func(args)
    except (ParameterError, TraceFormatError, ValidationError, metrics.InsufficientData, OSError) as exc:
        print(f"swimsim: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
