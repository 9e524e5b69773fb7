"""Command-line front end.

Five sub-commands: `run` streams events into the engine and emits sample
snapshots plus a metrics table, `validate` executes the named-check
registry, `bench` produces per-checkpoint rows for the engine or one of
the two baselines, `rswp` runs the flat sampler studies (density grid,
busy predicate, edit-distance predicate), and `gen` writes synthetic
event streams. All tables are comma-delimited with a header row naming
the columns; wall-clock fields only appear behind --timings so that two
runs with the same arguments and seed produce byte-identical output.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import load_query_file, packaged_query, packaged_query_names
from .datagen import (er_events, fk_events, powerlaw_events, read_stream,
                      uniform_events, write_stream)
from .errors import BudgetExceeded, CapExceeded, ParseError
from .model import JoinQuery


def _resolve_query(name_or_path: str) -> JoinQuery:
    if os.path.exists(name_or_path):
        return load_query_file(name_or_path)
    names = packaged_query_names()
    if name_or_path in names:
        return packaged_query(name_or_path)
    raise ParseError(f"unknown query {name_or_path!r}; packaged: "
                     + ", ".join(names))


def _no_grouping(query: JoinQuery, disabled: bool):
    if not disabled:
        return None
    return {rel: False for rel in query.schemas}


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def _table(header, rows) -> list:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(row[col]) for col in header))
    return lines


def _write_lines(lines, out_path) -> None:
    text = "\n".join(lines) + "\n"
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _metrics_header(baseline: str, timings: bool) -> list:
    if baseline == "engine":
        cols = ["events", "sample_size", "join_positions", "next_calls",
                "skip_stops", "dummy_hits", "replacements", "propagation"]
    elif baseline == "b1":
        cols = ["events", "sample_size", "delta_total"]
    else:
        cols = ["events", "sample_size", "delta_total", "visited"]
    if timings:
        cols.append("seconds")
    return cols


# -- run ---------------------------------------------------------------------


def cmd_run(args) -> int:
    from time import perf_counter

    from .bench import _checkpoints
    from .engine import Engine

    query = _resolve_query(args.query)
    events = read_stream(args.stream, query)
    marks = _checkpoints(len(events), args.checkpoint_every) if events else set()
    eng = Engine(query, args.k, args.seed,
                 grouping=_no_grouping(query, args.no_grouping))
    attrs = eng.exec_query.attributes

    sample_rows = []
    metric_rows = []
    start = perf_counter()
    for i, (rel, values) in enumerate(events, start=1):
        eng.feed(rel, values)
        if i in marks:
            snap = eng.snapshot()
            for slot, item in enumerate(snap["samples"]):
                row = {"events": i, "slot": slot}
                row.update(zip(attrs, item))
                sample_rows.append(row)
            met = eng.metrics()
            res = met["reservoir"]
            mrow = {"events": i,
                    "sample_size": snap["sample_size"],
                    "join_positions": met["join_positions"],
                    "next_calls": res["next_calls"],
                    "skip_stops": res["skip_stops"],
                    "dummy_hits": res["dummy_hits"],
                    "replacements": res["replacements"],
                    "propagation": sum(c["propagation_loop_count"]
                                       for c in met["index"].values())}
            if args.timings:
                mrow["seconds"] = perf_counter() - start
            metric_rows.append(mrow)

    sample_lines = _table(["events", "slot", *attrs], sample_rows)
    metric_lines = _table(_metrics_header("engine", args.timings), metric_rows)
    if args.out is None:
        _write_lines(["[samples]", *sample_lines, "", "[metrics]",
                      *metric_lines], None)
    else:
        os.makedirs(args.out, exist_ok=True)
        _write_lines(sample_lines, os.path.join(args.out, "samples.csv"))
        _write_lines(metric_lines, os.path.join(args.out, "metrics.csv"))
    return 0


# -- validate ----------------------------------------------------------------


def cmd_validate(args) -> int:
    from .validate import NAMED_CHECKS, run_named_checks

    if args.list:
        _write_lines(sorted(NAMED_CHECKS), args.out)
        return 0
    names = None
    if args.check:
        names = [n for part in args.check for n in part.split(",") if n]
    kwargs = {} if args.seed is None else {"seed": args.seed}
    results = run_named_checks(names, scale=args.scale, **kwargs)
    _write_lines([r.line() for r in results], args.out)
    return 0 if all(r.ok for r in results) else 1


# -- bench -------------------------------------------------------------------


def cmd_bench(args) -> int:
    from .bench import b1_rows, b2_rows, engine_rows

    query = _resolve_query(args.query)
    events = read_stream(args.stream, query)
    if args.baseline == "engine":
        rows = engine_rows(query, events, args.k, args.seed,
                           checkpoint_every=args.checkpoint_every,
                           grouping=_no_grouping(query, args.no_grouping),
                           timings=args.timings, budget=args.budget)
    elif args.baseline == "b1":
        rows = b1_rows(query, events, args.k, args.seed,
                       checkpoint_every=args.checkpoint_every, cap=args.cap,
                       timings=args.timings, budget=args.budget)
    else:
        rows = b2_rows(query, events, args.k, args.seed,
                       checkpoint_every=args.checkpoint_every, cap=args.cap,
                       timings=args.timings, budget=args.budget)
    _write_lines(_table(_metrics_header(args.baseline, args.timings), rows),
                 args.out)
    return 0


# -- rswp --------------------------------------------------------------------


def cmd_rswp(args) -> int:
    import numpy as np

    from .bench import busy_timed_run, edit_distance_flags
    from .validate import rswp_density_study, spread_flags

    if args.mode == "density":
        rep = rswp_density_study(n=args.n, k=args.k, trials=args.trials,
                                 seed=args.seed)
        lines = _table(["density", "reals", "visited"], rep["rows"])
    elif args.mode == "busy":
        flags = spread_flags(args.n, args.density)
        out = busy_timed_run(flags, args.k, args.seed, args.iters)
        row = {"density": args.density, "iters": args.iters,
               "visited": out["visited"], "sample_size": out["sample_size"]}
        cols = ["density", "iters", "visited", "sample_size"]
        if args.timings:
            row["seconds"] = out["seconds"]
            cols.append("seconds")
        lines = _table(cols, [row])
    else:
        flags = edit_distance_flags(args.n, args.max_dist, args.seed)
        out = busy_timed_run(flags, args.k, args.seed, args.iters)
        row = {"max_dist": args.max_dist,
               "density": float(np.mean(flags)),
               "iters": args.iters,
               "visited": out["visited"], "sample_size": out["sample_size"]}
        cols = ["max_dist", "density", "iters", "visited", "sample_size"]
        if args.timings:
            row["seconds"] = out["seconds"]
            cols.append("seconds")
        lines = _table(cols, [row])
    _write_lines(lines, args.out)
    return 0


# -- gen ---------------------------------------------------------------------


def cmd_gen(args) -> int:
    query = _resolve_query(args.query)
    if args.shape == "uniform":
        events = uniform_events(query, args.n, args.dom, args.seed)
    elif args.shape == "er":
        events = er_events(query, args.n, args.vertices, args.seed)
    elif args.shape == "powerlaw":
        events = powerlaw_events(query, args.n, args.vertices, args.seed,
                                 alpha=args.alpha)
    else:
        if not query.foreign_keys:
            raise ParseError(f"query {args.query!r} declares no foreign keys; "
                             "fk generation needs them")
        events = fk_events(query, args.n, args.dom, args.seed)
    if args.out is None:
        for rel, values in events:
            sys.stdout.write(",".join([rel, *map(str, values)]) + "\n")
    else:
        write_stream(args.out, events)
    return 0


# -- argument wiring ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="joinsample",
        description="Streaming uniform samples over multi-way join results.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, stream=True):
        p.add_argument("--query", required=True,
                       help="packaged query name or config file path")
        if stream:
            p.add_argument("--stream", required=True,
                           help="event file, one 'Rel,v1,v2' line per event")
        p.add_argument("--k", type=int, default=10, help="sample capacity")
        p.add_argument("--seed", type=int, default=1)
        p.add_argument("--out", default=None)

    p = sub.add_parser("run", help="stream events, emit samples and metrics")
    common(p)
    p.add_argument("--checkpoint-every", type=int, default=None,
                   help="snapshot cadence in events (default: n/10)")
    p.add_argument("--no-grouping", action="store_true")
    p.add_argument("--timings", action="store_true",
                   help="append wall-clock columns (breaks byte determinism)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="run named checks from the registry")
    p.add_argument("--check", action="append", default=None,
                   help="comma-separated check names (default: all)")
    p.add_argument("--list", action="store_true", help="list check names")
    p.add_argument("--scale", type=float, default=1.0,
                   help="trial-count multiplier; below 1 loosens tolerances")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("bench", help="per-checkpoint metric rows")
    common(p)
    p.add_argument("--baseline", choices=("engine", "b1", "b2"),
                   default="engine")
    p.add_argument("--checkpoint-every", type=int, default=None)
    p.add_argument("--cap", type=int, default=2_000_000,
                   help="abort a baseline past this many materialized results")
    p.add_argument("--budget", type=float, default=None,
                   help="abort any run past this many seconds")
    p.add_argument("--no-grouping", action="store_true")
    p.add_argument("--timings", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("rswp", help="flat-stream sampler studies")
    p.add_argument("--mode", choices=("density", "busy", "edit"),
                   default="density")
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--k", type=int, default=1000)
    p.add_argument("--trials", type=int, default=1000,
                   help="density mode: trials per grid point")
    p.add_argument("--density", type=float, default=1.0,
                   help="busy mode: fraction of passing positions")
    p.add_argument("--iters", type=int, default=100,
                   help="busy/edit: predicate cost in spins per visited item")
    p.add_argument("--max-dist", type=int, default=8,
                   help="edit mode: acceptance threshold")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--timings", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_rswp)

    p = sub.add_parser("gen", help="write a synthetic event stream")
    p.add_argument("--query", required=True)
    p.add_argument("--shape", choices=("uniform", "er", "powerlaw", "fk"),
                   default="uniform")
    p.add_argument("--n", type=int, required=True, help="number of events")
    p.add_argument("--dom", type=int, default=100,
                   help="uniform/fk: attribute domain size")
    p.add_argument("--vertices", type=int, default=1000,
                   help="er/powerlaw: vertex count")
    p.add_argument("--alpha", type=float, default=2.1,
                   help="powerlaw: degree exponent")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (CapExceeded, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
