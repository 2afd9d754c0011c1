"""Command-line front end: ``rtcollect {check,schedule,select,simulate,sweep}``.

Settings come from built-in defaults, then an optional ``--config`` JSON
file, then explicit flags; later sources win.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import fields, replace
from pathlib import Path

from . import netmodel as nm
from .fileio import (ParseError, format_frame, format_queries, format_trace, format_trees,
                     parse_queries, parse_topology)
from .queries import delay_feasible, necessary_condition, sufficient_condition, total_load
from .routing import build_trees
from .scenario import SimConfig, mean_by_value, rows_to_csv, run_scenario, sweep
from .scheduler import build_frame
from .selection import select_queries
from .sim import simulate

SWEEPABLE = ("node_count", "source_count", "buffer_limit", "loss_scale", "frame_t", "chi", "max_queries")


class UsageError(Exception):
    pass


def make_model(settings: dict, tx_range: float):
    name = str(settings.get("model") or "rtscts").lower()
    if name == "prim":
        return nm.PrIM(rho=float(settings.get("rho") or 2.0))
    if name == "rtscts":
        return nm.RtsCts(interference=float(settings.get("interference") or 1.0))
    if name == "phim":
        beta = float(settings.get("beta") or 2.0)
        kappa = float(settings.get("kappa") or 4.0)
        noise = float(settings.get("noise") or 1.0)
        shrink = float(settings.get("shrink") or 0.7)
        if settings.get("power") is None:
            return nm.PhIM.for_range(tx_range, beta=beta, kappa=kappa, noise=noise, shrink=shrink)
        return nm.PhIM(float(settings["power"]), noise, beta, kappa, shrink)
    raise UsageError(f"unknown model {name!r} (expected prim, rtscts or phim)")


def _settings(args) -> dict:
    merged = {}
    if args.config:
        try:
            merged.update(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
    for key, value in vars(args).items():
        if value is not None and key not in ("command", "config", "func"):
            merged[key] = value
    return merged


def _read(path, what):
    if not path:
        raise UsageError(f"--{what} is required")
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {what} file: {exc}") from None


def _load_inputs(s, need_queries=True):
    net = parse_topology(_read(s.get("topology"), "topology"), s.get("topology"))
    queries = []
    if need_queries:
        queries = parse_queries(_read(s.get("queries"), "queries"), s.get("queries"))
        for q in queries:
            missing = sorted(set(q.sources) - set(net.ids))
            if missing:
                raise UsageError(f"query {q.id} names unknown source nodes {missing}")
    return net, queries, make_model(s, net.tx_range)


def _frame_t(s, queries):
    if s.get("frame_t") is not None:
        return float(s["frame_t"])
    periods = [q.period for q in queries]
    return 1.25 * max(periods) if periods else 1.0


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_check(s) -> int:
    net, queries, model = _load_inputs(s)
    if not queries:
        print("warning: query file is empty", file=sys.stderr)
    nec = necessary_condition(net, queries, model)
    suf = sufficient_condition(net, queries, model)
    lines = [f"total load: {total_load(queries)!r}",
             f"necessary: {nec}",
             f"sufficient: {suf}"]
    if queries:
        rep = delay_feasible(net, queries, model, _frame_t(s, queries))
        lines.append(f"delay (bound {rep.bound!r}, radius {rep.radius}): "
                     f"{'PASS' if rep.ok else 'FAIL'}")
        lines += [f"  query {qid}: {v}" for qid, v in sorted(rep.verdicts.items()) if not v]
        if rep.frame_shorter_than_period:
            lines.append("note: frame_t does not exceed every period")
    _emit("\n".join(lines) + "\n", s.get("out"))
    return 0 if suf else 1


def cmd_schedule(s) -> int:
    net, queries, model = _load_inputs(s)
    trees = build_trees(net, queries, model)
    frame = build_frame(net, queries, trees, model, _frame_t(s, queries))
    _emit(format_trees(trees) + format_frame(frame), s.get("out"))
    return 0


def cmd_select(s) -> int:
    net, queries, model = _load_inputs(s)
    sel = select_queries(queries, model)
    chosen = [q for q in queries if q.id in sel.ids]
    header = (f"# selected {','.join(map(str, sel.ids)) or '-'} weight {sel.weight!r} "
              f"phase {sel.phase} capacity {sel.capacity!r}\n")
    _emit(header + format_queries(chosen), s.get("out"))
    return 0


def _sim_config(s) -> SimConfig:
    known = {f.name for f in fields(SimConfig)}
    kw = {k: v for k, v in s.items() if k in known and k != "model"}
    for key in ("area", "period_range", "chi_range"):
        if key in kw:
            kw[key] = tuple(kw[key])
    cfg = SimConfig(**kw)
    return replace(cfg, model=make_model(s, cfg.tx_range))


def cmd_simulate(s) -> int:
    trace_path = s.get("trace")
    if s.get("topology"):
        net, queries, model = _load_inputs(s)
        res = simulate(net, queries, model, _frame_t(s, queries), float(s.get("duration", 20000.0)),
                       buffer_limit=s.get("buffer_limit"), loss_scale=float(s.get("loss_scale", 0.0)),
                       seed=int(s.get("seed", 0)), staggered=bool(s.get("staggered", False)),
                       record_trace=bool(trace_path))
    else:
        res = run_scenario(_sim_config(s), record_trace=bool(trace_path))
    if trace_path:
        Path(trace_path).write_text(format_trace(res.trace))
    _emit(res.metrics.to_text(), s.get("out"))
    return 0


def parse_range(text: str) -> list:
    """``start:stop:step`` (inclusive) or a comma list."""
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            vals = [start + i * step for i in range(count)]
        else:
            vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad range {text!r}; use start:stop:step or a comma list") from None
    if not vals:
        raise UsageError("sweep range is empty")
    return [int(v) if float(v).is_integer() else v for v in vals]


def cmd_sweep(s) -> int:
    arg = s.get("sweep")
    if not arg or "=" not in arg:
        raise UsageError("--sweep needs PARAM=RANGE, e.g. node_count=50:250:25")
    param, rng_text = arg.split("=", 1)
    if param not in SWEEPABLE:
        raise UsageError(f"cannot sweep {param!r}; choose from {', '.join(SWEEPABLE)}")
    values = parse_range(rng_text)
    seeds = list(range(int(s.get("seed", 0)), int(s.get("seed", 0)) + int(s.get("seeds", 10))))
    base = _sim_config(s)
    sizes = [int(x) for x in str(s.get("sizes", "")).split(",") if x] or [base.node_count]
    rows = []
    for n in sizes:
        rows += sweep(replace(base, node_count=n), param, values, seeds, int(s.get("workers", 1)))
    _emit(rows_to_csv(rows), s.get("out"))
    if s.get("out"):
        for v, m in mean_by_value(rows):
            print(f"{param}={v} mean_success_ratio={m:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rtcollect", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of settings (flags override it)")
    common.add_argument("--topology")
    common.add_argument("--queries")
    common.add_argument("--model", choices=("prim", "rtscts", "phim"))
    common.add_argument("--rho", type=float)
    common.add_argument("--interference", type=float, help="RTS/CTS range as a multiple of tx_range")
    common.add_argument("--power", type=float)
    common.add_argument("--noise", type=float)
    common.add_argument("--beta", type=float)
    common.add_argument("--kappa", type=float)
    common.add_argument("--shrink", type=float)
    common.add_argument("--frame-t", dest="frame_t", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--out")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common], help="schedulability tests").set_defaults(func=cmd_check)
    sub.add_parser("schedule", parents=[common], help="routing trees and frame layout").set_defaults(func=cmd_schedule)
    sub.add_parser("select", parents=[common], help="weighted query admission").set_defaults(func=cmd_select)
    for name, func in (("simulate", cmd_simulate), ("sweep", cmd_sweep)):
        sp = sub.add_parser(name, parents=[common])
        sp.set_defaults(func=func)
        sp.add_argument("--buffer-limit", dest="buffer_limit", type=int)
        sp.add_argument("--loss-scale", dest="loss_scale", type=float)
        sp.add_argument("--duration", type=float)
        sp.add_argument("--node-count", dest="node_count", type=int)
        sp.add_argument("--max-queries", dest="max_queries", type=int)
        sp.add_argument("--chi", type=float)
        if name == "simulate":
            sp.add_argument("--trace", help="write the transmission trace here")
            sp.add_argument("--staggered", action="store_true", default=None)
        else:
            sp.add_argument("--sweep", help="PARAM=start:stop:step or PARAM=v1,v2,...")
            sp.add_argument("--seeds", type=int, help="number of seeds (default 10)")
            sp.add_argument("--sizes", help="comma list of network sizes to repeat the sweep at")
            sp.add_argument("--workers", type=int)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(_settings(args))
    except (UsageError, ParseError, nm.NetworkError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
