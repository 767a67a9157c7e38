"""Command-line interface: ``graphcumulants <subcommand> ...``.

Exit codes: 0 success, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from .atlas import AtlasError, get_atlas
from .counting import CountingError, count_all, falling_factorial
from .experiments import (ExperimentError, TrialConfig, auc_difference, chi2_calibration,
                          dump_json, pare_grid, roc_auc, run_trials)
from .graph import GraphError, GraphSample, assortative_sbm, heterogeneous_sbm, load_graph
from .statistics import (KINDS, StatisticsError, estimate_cumulants, estimate_moments,
                         sample_counts, sample_covariance)
from .twosample import TestError, two_sample_test


class ConfigError(Exception):
    pass


EXIT_CONFIG = 2
EXIT_DATA = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _kinds(kind: str) -> tuple[str, ...]:
    return KINDS if kind == "both" else (kind,)


def _load_sample(paths) -> GraphSample:
    if not paths:
        raise ConfigError("at least one --input file is required")
    graphs = []
    for p in paths:
        if not Path(p).exists():
            raise GraphError(f"{p}: no such file")
        graphs.append(load_graph(p))
    try:
        return GraphSample(graphs)
    except GraphError as exc:
        raise GraphError(f"sample files disagree: {exc}") from None


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_count(args) -> int:
    atlas = get_atlas()
    if len(args.input) != 1:
        raise ConfigError("count takes exactly one --input")
    G = _load_sample(args.input)[0]
    ids = [g for g in atlas.basis(args.r) if atlas[g].v <= G.n]
    cv = count_all(G, atlas, ids)
    rows = [{"name": atlas[g].name, "key": atlas[g].key, "edges": atlas[g].e, "nodes": atlas[g].v,
             "count": int(c), "moment": int(c) / falling_factorial(G.n, atlas[g].v)}
            for g, c in zip(cv.ids, cv.values)]
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        _emit(buf.getvalue(), args.out)
    else:
        _emit(dump_json({"n": G.n, "m": G.m, "r": args.r, "subgraphs": rows}), args.out)
    return 0


def cmd_stats(args) -> int:
    atlas = get_atlas()
    sample = _load_sample(args.input)
    counts = sample_counts(sample, 2 * args.r, atlas)
    doc = {"n": sample.n, "s": sample.s, "r": args.r,
           "moments": estimate_moments(sample, atlas.basis(args.r, connected=True), atlas,
                                       counts).to_json(atlas),
           "cumulants": estimate_cumulants(sample, args.r, atlas, counts).to_json(atlas)}
    for k in _kinds(args.kind):
        doc[f"covariance_{k}"] = sample_covariance(sample, args.r, k, atlas, counts).to_json(atlas)
    _emit(dump_json(doc), args.out)
    return 0


def cmd_test(args) -> int:
    atlas = get_atlas()
    if not args.input_b:
        raise ConfigError("--input-b is required for test")
    sa, sb = _load_sample(args.input), _load_sample(args.input_b)
    ca, cb = sample_counts(sa, 2 * args.r, atlas), sample_counts(sb, 2 * args.r, atlas)
    reps = [two_sample_test(sa, sb, args.r, k, atlas, ca, cb).to_json() for k in _kinds(args.kind)]
    _emit(dump_json(reps[0] if len(reps) == 1 else reps), args.out)
    return 0


def _sources(args):
    if args.input or args.input_b:
        if not (args.input and args.input_b) or len(args.input) != 1 or len(args.input_b) != 1:
            raise ConfigError("host-network mode needs exactly one --input and one --input-b")
        return _load_sample(args.input)[0], _load_sample(args.input_b)[0]
    try:
        return heterogeneous_sbm(args.rho, args.eps_h), assortative_sbm(args.rho, args.eps_a)
    except GraphError as exc:
        raise ConfigError(str(exc)) from None


def _need_out(args) -> Path:
    if not args.out:
        raise ConfigError("--out PREFIX is required")
    return Path(args.out)


def cmd_roc(args) -> int:
    out = _need_out(args)
    a, b = _sources(args)
    cfg = TrialConfig(a, b, args.n, args.s, args.r, args.trials, args.seed, _kinds(args.kind))
    batch = run_trials(cfg, args.threads)
    summary = {"config": cfg.to_json(), "auc": {}}
    _write(out.with_name(out.name + "_trials.csv"), batch.to_csv())
    for k in cfg.kinds:
        try:
            roc = roc_auc(batch, k)
        except ExperimentError as exc:
            summary["auc"][k] = {"error": str(exc)}
            continue
        _write(out.with_name(out.name + f"_roc_{k}.csv"), roc.to_csv(cfg.to_json()))
        summary["auc"][k] = {"auc": roc.auc, "excluded_degenerate": roc.excluded}
    if len(cfg.kinds) == 2:
        try:
            summary["auc_difference"] = auc_difference(batch, seed=args.seed)
        except ExperimentError as exc:
            summary["auc_difference"] = {"error": str(exc)}
    _write(out.with_name(out.name + "_summary.json"), dump_json(summary))
    return 0


def cmd_calibrate(args) -> int:
    out = _need_out(args)
    a, _ = _sources(args)
    cfg = TrialConfig(a, a, args.n, args.s, args.r, args.trials, args.seed, _kinds(args.kind),
                      protocol="null")
    batch = run_trials(cfg, args.threads)
    dof = len(get_atlas().basis(args.r, connected=True))
    summary = {"config": cfg.to_json(), "calibration": {}}
    _write(out.with_name(out.name + "_trials.csv"), batch.to_csv())
    for k in cfg.kinds:
        x = [t.statistic[k] for t in batch.records]
        cal = chi2_calibration(x, dof)
        _write(out.with_name(out.name + f"_hist_{k}.csv"), cal.to_csv(cfg.to_json()))
        summary["calibration"][k] = {**cal.summary(),
                                     "degenerate": sum(t.degenerate[k] for t in batch.records)}
    _write(out.with_name(out.name + "_summary.json"), dump_json(summary))
    return 0


def cmd_pare(args) -> int:
    out = _need_out(args)
    try:
        rep = pare_grid(args.rho_grid or [args.rho], args.eps_h_grid, args.eps_a_grid, n=args.n,
                        draws=args.draws, seed=args.seed)
    except GraphError as exc:
        raise ConfigError(str(exc)) from None
    _write(out.with_name(out.name + ".csv"), rep.to_csv())
    cells = [{"rho": c.rho, "eps_h": c.eps_h, "eps_a": c.eps_a, "log_pare": c.log_pare, "se": c.se}
             for c in rep.cells]
    _write(out.with_name(out.name + "_summary.json"),
           dump_json({"n": rep.n, "draws": rep.draws, "seed": rep.seed, "cells": cells}))
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="graphcumulants", description="Graph moment and cumulant two-sample tests.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, r_default=3):
        sp.add_argument("--r", type=int, choices=(1, 2, 3), default=r_default,
                        help="maximum number of edges in the statistic basis")
        sp.add_argument("--out", help="output file (or prefix for experiment outputs)")

    def sampling(sp, trials):
        sp.add_argument("--input", action="append", help="host network A (edge list or JSON)")
        sp.add_argument("--input-b", action="append", help="host network B")
        sp.add_argument("--n", type=_positive_int, default=256, help="nodes per graph")
        sp.add_argument("--s", type=_positive_int, default=4, help="graphs per sample")
        sp.add_argument("--rho", type=float, default=0.5, help="edge density of both models")
        sp.add_argument("--eps-h", type=float, default=1 / 16, help="heterogeneity of model A")
        sp.add_argument("--eps-a", type=float, default=1 / 16, help="assortativity of model B")
        sp.add_argument("--trials", type=_positive_int, default=trials)
        sp.add_argument("--seed", type=int, required=True, help="root seed; trial t uses stream (seed, t)")
        sp.add_argument("--kind", choices=KINDS + ("both",), default="both")
        sp.add_argument("--threads", type=_positive_int, default=1, help="worker processes")

    sp = sub.add_parser("count", help="subgraph counts and moments of one graph")
    sp.add_argument("--input", action="append", required=True)
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    common(sp)
    sp.set_defaults(func=cmd_count)

    sp = sub.add_parser("stats", help="moments, cumulants and covariances of a sample")
    sp.add_argument("--input", action="append", required=True)
    sp.add_argument("--kind", choices=KINDS + ("both",), default="both")
    common(sp)
    sp.set_defaults(func=cmd_stats)

    sp = sub.add_parser("test", help="two-sample test between two samples of graphs")
    sp.add_argument("--input", action="append", required=True)
    sp.add_argument("--input-b", action="append", required=True)
    sp.add_argument("--kind", choices=KINDS + ("both",), default="cumulant")
    common(sp)
    sp.set_defaults(func=cmd_test)

    sp = sub.add_parser("roc", help="coin-flip trials and ROC curves")
    sampling(sp, 500)
    common(sp)
    sp.set_defaults(func=cmd_roc)

    sp = sub.add_parser("calibrate", help="null statistics against chi-squared")
    sampling(sp, 2000)
    common(sp)
    sp.set_defaults(func=cmd_calibrate)

    sp = sub.add_parser("pare", help="asymptotic relative efficiency grid")
    sp.add_argument("--rho", type=float, default=0.5)
    sp.add_argument("--rho-grid", type=float, nargs="+")
    sp.add_argument("--eps-h-grid", type=float, nargs="+", default=[0.1, 0.25, 0.4])
    sp.add_argument("--eps-a-grid", type=float, nargs="+", default=[0.1, 0.25, 0.4])
    sp.add_argument("--n", type=_positive_int, default=256)
    sp.add_argument("--draws", type=_positive_int, default=10_000)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out", help="output prefix")
    sp.set_defaults(func=cmd_pare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ExperimentError, TestError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GraphError, CountingError, StatisticsError, AtlasError, OSError,
            json.JSONDecodeError, UnicodeDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
