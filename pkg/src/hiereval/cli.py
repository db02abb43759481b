"""Command-line front end: ``eval``, ``compare`` and ``preprocess-inner``."""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

from .evaluate import (ALL_MEASURES, DEFAULT_MEASURES, EvalConfig, SingleLabelRequired,
                       aggregate, evaluate_all)
from .hierarchy import Hierarchy, HierarchyError, UnknownNodeError, load_hierarchy, normalize_to_dag
from .labels import InstanceLabels, LabelFileError, format_label_lines, read_label_file
from .stats import ScoreSeries, orientation_of, rank_with_significance, sign_test, tau_matrix

EXIT_OK, EXIT_INPUT, EXIT_UNKNOWN = 0, 2, 3


class InputError(Exception):
    pass


class UnknownLabels(Exception):
    pass


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return format(x, ".6g")


def warn(msg: str) -> None:
    print(f"hiereval: warning: {msg}", file=sys.stderr)


# -- argument parsing ------------------------------------------------------
def _off_or(kind):
    def parse(text):
        if text.lower() == "off":
            return None
        value = kind(text)
        if value <= 0:
            raise argparse.ArgumentTypeError("must be positive or 'off'")
        return value
    return parse


def _measures(text):
    names = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in names if m not in ALL_MEASURES]
    if bad or not names:
        raise argparse.ArgumentTypeError(
            f"unknown measure(s) {', '.join(bad) or '(none)'}; choose from {', '.join(ALL_MEASURES)}")
    return tuple(dict.fromkeys(names))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hiereval", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, many_preds):
        p.add_argument("--hierarchy", required=True, help="edge file: 'parent child [weight]' per line")
        p.add_argument("--names", help="optional id<TAB>name sidecar (display only)")
        p.add_argument("--true", dest="true_file", required=True)
        if many_preds:
            p.add_argument("--pred", action="append", required=True,
                           help="predicted label file; repeat once per system")
        else:
            p.add_argument("--pred", required=True)
        p.add_argument("--measures", type=_measures, default=DEFAULT_MEASURES,
                       help=f"comma list from {','.join(ALL_MEASURES)}")
        p.add_argument("--dmax", type=float, default=5.0, help="default-class pairing cost")
        p.add_argument("--max-dist", type=_off_or(float), default=None, metavar="R|off")
        p.add_argument("--lca-threshold", type=_off_or(int), default=None, metavar="K|off")
        p.add_argument("--virtual-root", type=int, default=None, metavar="ID",
                       help="class id left out of ancestor-augmented sets")
        p.add_argument("--skip-unknown", action="store_true",
                       help="drop label ids missing from the hierarchy instead of failing")
        p.add_argument("--format", choices=("tsv", "json"), default="tsv")

    ev = sub.add_parser("eval", help="score one system")
    common(ev, many_preds=False)
    ev.add_argument("--per-instance", action="store_true")

    cmp_ = sub.add_parser("compare", help="score and rank several systems")
    cmp_.add_argument("--ranks-from", help="TSV of system ranks per measure; only tau is computed")
    cmp_.add_argument("--alpha", type=float, default=0.05)
    cmp_.add_argument("--hierarchy")
    cmp_.add_argument("--names")
    cmp_.add_argument("--true", dest="true_file")
    cmp_.add_argument("--pred", action="append")
    cmp_.add_argument("--measures", type=_measures, default=DEFAULT_MEASURES)
    cmp_.add_argument("--dmax", type=float, default=5.0)
    cmp_.add_argument("--max-dist", type=_off_or(float), default=None, metavar="R|off")
    cmp_.add_argument("--lca-threshold", type=_off_or(int), default=None, metavar="K|off")
    cmp_.add_argument("--virtual-root", type=int, default=None, metavar="ID")
    cmp_.add_argument("--skip-unknown", action="store_true")
    cmp_.add_argument("--format", choices=("tsv", "json"), default="tsv")

    pre = sub.add_parser("preprocess-inner",
                         help="move labels on inner nodes to fresh dummy leaves")
    pre.add_argument("--hierarchy", required=True)
    pre.add_argument("--true", dest="true_file", required=True)
    pre.add_argument("--out-dir", required=True)
    pre.add_argument("--pred", action="append", default=[],
                     help="predicted files rewritten with the same mapping")
    return parser


# -- loading ---------------------------------------------------------------
def load_inputs(args) -> Hierarchy:
    try:
        h = load_hierarchy(args.hierarchy, getattr(args, "names", None))
    except HierarchyError as exc:
        raise InputError(f"{args.hierarchy}: {exc}") from None
    except OSError as exc:
        raise InputError(str(exc)) from None
    if not h.is_acyclic():
        h, removed = normalize_to_dag(h)
        warn(f"hierarchy has cycles; removed {len(removed)} edge(s): "
             + ", ".join(f"{p}->{c}" for p, c in removed[:10])
             + (" ..." if len(removed) > 10 else ""))
    return h


def _read(path):
    try:
        return read_label_file(path)
    except LabelFileError as exc:
        raise InputError(str(exc)) from None
    except OSError as exc:
        raise InputError(str(exc)) from None


def load_instances(h: Hierarchy, true_path, pred_path, skip_unknown: bool) -> list[InstanceLabels]:
    truth, pred = _read(true_path), _read(pred_path)
    if len(truth) != len(pred):
        raise InputError(f"{pred_path}: {len(pred)} lines but {true_path} has {len(truth)}")
    out = []
    for lineno, (t, p) in enumerate(zip(truth, pred), start=1):
        t_set, p_set = set(t), set(p)
        missing = sorted(n for n in t_set | p_set if n not in h.nodes)
        if missing:
            if not skip_unknown:
                raise UnknownLabels(f"line {lineno}: unknown class id(s) {missing}")
            warn(f"line {lineno}: dropping unknown class id(s) {missing}")
            t_set -= set(missing)
            p_set -= set(missing)
        if not t_set:
            raise InputError(f"{true_path}:{lineno}: no true class")
        out.append(InstanceLabels(t_set, p_set))
    return out


def config_of(args) -> EvalConfig:
    return EvalConfig(args.dmax, args.max_dist, args.lca_threshold, args.virtual_root)


def config_line(cfg: EvalConfig, count: int) -> str:
    def show(v):
        return "off" if v is None else fmt(v)
    return (f"# d_max={fmt(cfg.d_max)} max_dist={show(cfg.max_dist)} "
            f"lca_threshold={show(cfg.lca_threshold)} virtual_root={show(cfg.virtual_root)} "
            f"instances={count}")


def _evaluate(h, instances, measures, cfg):
    try:
        return evaluate_all(h, instances, measures, cfg)
    except SingleLabelRequired as exc:
        raise InputError(str(exc)) from None


# -- commands --------------------------------------------------------------
def cmd_eval(args, out) -> int:
    h = load_inputs(args)
    instances = load_instances(h, args.true_file, args.pred, args.skip_unknown)
    cfg = config_of(args)
    rows = _evaluate(h, instances, args.measures, cfg)
    means = aggregate(rows, args.measures)
    if args.format == "json":
        doc = {"config": _config_dict(cfg), "instances": len(rows),
               "measures": {m: {"mean": _num(means[m])} for m in args.measures}}
        if args.per_instance:
            for m in args.measures:
                doc["measures"][m]["values"] = [_num(r[m]) for r in rows]
        json.dump(doc, out, indent=2)
        out.write("\n")
        return EXIT_OK
    out.write(config_line(cfg, len(rows)) + "\n")
    out.write("\t".join(("instance",) + tuple(args.measures)) + "\n")
    if args.per_instance:
        for i, r in enumerate(rows, start=1):
            out.write("\t".join([str(i)] + [fmt(r[m]) for m in args.measures]) + "\n")
    out.write("\t".join(["mean"] + [fmt(means[m]) for m in args.measures]) + "\n")
    return EXIT_OK


def _config_dict(cfg: EvalConfig) -> dict:
    return {"d_max": cfg.d_max, "max_dist": cfg.max_dist,
            "lca_threshold": cfg.lca_threshold, "virtual_root": cfg.virtual_root}


def _num(x):
    # round-trip through the printed precision so json and tsv agree
    return None if x is None or math.isnan(x) else float(fmt(x))


def system_names(paths: Sequence[str]) -> list[str]:
    stems = [Path(p).stem for p in paths]
    if len(set(stems)) == len(stems):
        return stems
    return [str(p) for p in paths]


def cmd_compare(args, out) -> int:
    if args.ranks_from:
        return _compare_ranks(args, out)
    for flag in ("hierarchy", "true_file", "pred"):
        if not getattr(args, flag):
            raise InputError(f"compare needs --{flag.replace('_file', '')} unless --ranks-from is given")
    h = load_inputs(args)
    cfg = config_of(args)
    names = system_names(args.pred)
    series: dict[str, dict[str, ScoreSeries]] = {m: {} for m in args.measures}
    means: dict[str, dict[str, float]] = {}
    for name, path in zip(names, args.pred):
        rows = _evaluate(h, load_instances(h, args.true_file, path, args.skip_unknown),
                         args.measures, cfg)
        means[name] = aggregate(rows, args.measures)
        for m in args.measures:
            series[m][name] = ScoreSeries(name, [r[m] for r in rows], orientation_of(m))
    report = ranking_report(names, args.measures, series, args.alpha)
    report["scores"] = means
    _write_report(report, names, args.measures, cfg, len(next(iter(series.values()))[names[0]].scores),
                  args.format, out)
    return EXIT_OK


def ranking_report(names, measures, series, alpha) -> dict:
    ranks = {}
    pvalues = {}
    for m in measures:
        if len(names) >= 2:
            ranks[m] = rank_with_significance([series[m][n] for n in names], alpha)
        else:
            ranks[m] = {names[0]: 1}
        pvalues[m] = {(a, b): sign_test(series[m][a], series[m][b]).p_value
                      for a in names for b in names if a != b}
    taus = _taus({m: [ranks[m][n] for n in names] for m in measures}) if len(names) >= 2 else {}
    return {"ranks": ranks, "tau": taus, "p_values": pvalues}


def _taus(rank_vectors: dict) -> dict:
    taus = tau_matrix(rank_vectors)
    for m in rank_vectors:
        taus[(m, m)] = 1.0
    return taus


def _write_report(report, names, measures, cfg, count, form, out):
    if form == "json":
        doc = {
            "config": _config_dict(cfg) if cfg else None,
            "instances": count,
            "systems": list(names),
            "scores": {n: {m: _num(report["scores"][n][m]) for m in measures} for n in names}
            if "scores" in report else None,
            "ranks": {m: report["ranks"][m] for m in measures} if "ranks" in report else None,
            "tau": {a: {b: _num(report["tau"][(a, b)]) for b in measures} for a in measures}
            if report.get("tau") else None,
            "p_values": {m: {a: {b: _num(report["p_values"][m][(a, b)]) for b in names if b != a}
                             for a in names} for m in measures}
            if "p_values" in report else None,
        }
        json.dump({k: v for k, v in doc.items() if v is not None}, out, indent=2)
        out.write("\n")
        return
    if cfg is not None:
        out.write(config_line(cfg, count) + "\n")
    if "scores" in report:
        out.write("## scores\n")
        out.write("\t".join(("system",) + tuple(measures)) + "\n")
        for n in names:
            out.write("\t".join([n] + [fmt(report["scores"][n][m]) for m in measures]) + "\n")
    if "ranks" in report:
        out.write("## ranks\n")
        out.write("\t".join(("system",) + tuple(measures)) + "\n")
        for n in names:
            out.write("\t".join([n] + [fmt(report["ranks"][m][n]) for m in measures]) + "\n")
    if report.get("tau"):
        out.write("## tau\n")
        out.write("\t".join(("measure",) + tuple(measures)) + "\n")
        for a in measures:
            out.write("\t".join([a] + [fmt(report["tau"][(a, b)]) for b in measures]) + "\n")
    if "p_values" in report:
        for m in measures:
            out.write(f"## p-values {m} (row beats column, one-sided)\n")
            out.write("\t".join(("system",) + tuple(names)) + "\n")
            for a in names:
                cells = ["-" if a == b else fmt(report["p_values"][m][(a, b)]) for b in names]
                out.write("\t".join([a] + cells) + "\n")


def read_rank_table(path) -> tuple[list[str], dict[str, list[float]]]:
    try:
        lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines()
                 if ln.strip() and not ln.startswith("#")]
    except OSError as exc:
        raise InputError(str(exc)) from None
    if not lines:
        raise InputError(f"{path}: empty rank table")
    header = lines[0].split("\t")
    if len(header) < 2:
        raise InputError(f"{path}:1: expected 'system<TAB>measure...' header")
    measures = header[1:]
    systems, columns = [], {m: [] for m in measures}
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split("\t")
        if len(cells) != len(header):
            raise InputError(f"{path}:{lineno}: expected {len(header)} columns, got {len(cells)}")
        systems.append(cells[0])
        for m, cell in zip(measures, cells[1:]):
            try:
                columns[m].append(float(cell))
            except ValueError:
                raise InputError(f"{path}:{lineno}: bad rank {cell!r}") from None
    if len(systems) < 2:
        raise InputError(f"{path}: need at least two systems")
    return systems, columns


def _compare_ranks(args, out) -> int:
    systems, columns = read_rank_table(args.ranks_from)
    measures = list(columns)
    report = {"ranks": {m: dict(zip(systems, columns[m])) for m in measures},
              "tau": _taus(columns)}
    _write_report(report, systems, measures, None, len(systems), args.format, out)
    return EXIT_OK


def preprocess_inner(h: Hierarchy, label_rows: Sequence[Sequence[int]]) -> tuple[list, dict]:
    """Fresh dummy leaf per labelled inner node; returns new edges and the mapping."""
    inner = sorted({n for row in label_rows for n in row if n in h.nodes and not h.is_leaf(n)})
    next_id = max(h.nodes, default=-1) + 1
    mapping = {}
    for n in inner:
        mapping[n] = next_id
        next_id += 1
    edges = list(h.edges) + [(n, leaf, 1.0) for n, leaf in mapping.items()]
    return edges, mapping


def cmd_preprocess_inner(args, out) -> int:
    h = load_inputs(args)
    truth = _read(args.true_file)
    preds = [(p, _read(p)) for p in args.pred]
    edges, mapping = preprocess_inner(h, truth)
    target = Path(args.out_dir)
    target.mkdir(parents=True, exist_ok=True)
    hier_out = target / Path(args.hierarchy).name
    hier_out.write_text("".join(f"{p} {c}\n" if w == 1.0 else f"{p} {c} {fmt(w)}\n"
                                for p, c, w in edges), encoding="utf-8")

    def rewrite(rows):
        return format_label_lines([[mapping.get(n, n) for n in row] for row in rows])

    (target / Path(args.true_file).name).write_text(rewrite(truth), encoding="utf-8")
    for path, rows in preds:
        (target / Path(path).name).write_text(rewrite(rows), encoding="utf-8")
    out.write("inner\tdummy_leaf\n")
    for n, leaf in mapping.items():
        out.write(f"{n}\t{leaf}\n")
    return EXIT_OK


COMMANDS = {"eval": cmd_eval, "compare": cmd_compare, "preprocess-inner": cmd_preprocess_inner}


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args, out)
    except InputError as exc:
        print(f"hiereval: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except UnknownLabels as exc:
        print(f"hiereval: error: {exc} (use --skip-unknown to drop them)", file=sys.stderr)
        return EXIT_UNKNOWN
    except UnknownNodeError as exc:
        print(f"hiereval: error: {exc}", file=sys.stderr)
        return EXIT_UNKNOWN


if __name__ == "__main__":
    sys.exit(main())
