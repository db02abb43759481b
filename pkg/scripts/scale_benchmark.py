"""Synthetic large-hierarchy run: timing, memory and ranking stability.

Builds a random DAG (default 10^5 classes, depth 14), a multi-label test
set and three systems of decreasing quality, then scores them through the
CLI with a distance threshold.

    python scripts/scale_benchmark.py --nodes 100000 --instances 100000 --threshold 4
"""
from __future__ import annotations

import argparse
import io
import json
import random
import resource
import sys
import tempfile
import time
from pathlib import Path

from hiereval.cli import main as cli_main
from hiereval.labels import format_label_lines

MEASURES = "gie,mgia,fnerror,ph,rh,fh,sdl,plca,rlca,flca,bianchi-fh,desc-fh"


def generate_dag(n_nodes: int, depth: int, seed: int = 0, extra_parent_rate: float = 0.05):
    """Levels 0..depth, one root; extra parents come from strictly shallower levels."""
    rng = random.Random(seed)
    # geometric-ish level sizes summing to n_nodes
    weights = [1.6 ** d for d in range(1, depth + 1)]
    scale = (n_nodes - 1) / sum(weights)
    sizes = [1] + [max(1, int(w * scale)) for w in weights]
    sizes[-1] += n_nodes - sum(sizes)
    levels, next_id, edges = [], 0, []
    for size in sizes:
        levels.append(list(range(next_id, next_id + size)))
        next_id += size
    for d in range(1, len(levels)):
        prev = levels[d - 1]
        for node in levels[d]:
            edges.append((rng.choice(prev), node))
            if d > 1 and rng.random() < extra_parent_rate:
                upper = levels[rng.randrange(0, d - 1)]
                edges.append((rng.choice(upper), node))
    edges = sorted(set(edges))
    return edges, levels


def generate_instances(levels, edges, n_instances: int, label_factor: int = 3, seed: int = 1):
    """Truth sets (1..2*factor-1 labels, mean ``factor``) and three systems.

    ``good`` keeps most labels and swaps the rest for siblings, ``fair``
    swaps more and adds a spurious label, ``poor`` draws random deep labels.
    """
    rng = random.Random(seed)
    parents, children = {}, {}
    for p, c in edges:
        parents.setdefault(c, []).append(p)
        children.setdefault(p, []).append(c)
    deep = [n for lvl in levels[len(levels) // 2:] for n in lvl]

    def sibling(n):
        ps = parents.get(n)
        if not ps:
            return n
        return rng.choice(children[rng.choice(ps)])

    truth, systems = [], {"good": [], "fair": [], "poor": []}
    for _ in range(n_instances):
        k = rng.randint(1, 2 * label_factor - 1)
        labels = sorted(set(rng.sample(deep, k)))
        truth.append(labels)
        systems["good"].append(sorted({n if rng.random() < 0.8 else sibling(n) for n in labels}))
        fair = {n if rng.random() < 0.4 else sibling(n) for n in labels}
        fair.add(rng.choice(deep))
        systems["fair"].append(sorted(fair))
        systems["poor"].append(sorted(set(rng.sample(deep, k))))
    return truth, systems


def write_inputs(folder: Path, edges, truth, systems) -> dict:
    folder.mkdir(parents=True, exist_ok=True)
    paths = {"hier": folder / "hierarchy.txt", "true": folder / "true.txt"}
    paths["hier"].write_text("".join(f"{p} {c}\n" for p, c in edges))
    paths["true"].write_text(format_label_lines(truth))
    for name, rows in systems.items():
        paths[name] = folder / f"{name}.txt"
        paths[name].write_text(format_label_lines(rows))
    return paths


def peak_rss_mb() -> float:
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024


def run_eval(paths, system: str, threshold: int, measures: str = MEASURES) -> tuple[str, float]:
    out = io.StringIO()
    start = time.perf_counter()
    code = cli_main(["eval", "--hierarchy", str(paths["hier"]), "--true", str(paths["true"]),
                     "--pred", str(paths[system]), "--measures", measures,
                     "--lca-threshold", str(threshold)], out=out)
    if code != 0:
        raise RuntimeError(f"eval exited with {code}")
    return out.getvalue(), time.perf_counter() - start


def run_compare(paths, threshold: int, measures: str = MEASURES) -> str:
    out = io.StringIO()
    argv = ["compare", "--hierarchy", str(paths["hier"]), "--true", str(paths["true"]),
            "--measures", measures, "--lca-threshold", str(threshold)]
    for name in ("good", "fair", "poor"):
        argv += ["--pred", str(paths[name])]
    if cli_main(argv, out=out) != 0:
        raise RuntimeError("compare failed")
    return out.getvalue()


def orderings(compare_tsv: str) -> dict[str, list[str]]:
    """Per measure, systems sorted by mean score (best first)."""
    lines = compare_tsv.splitlines()
    start = lines.index("## scores") + 1
    header = lines[start].split("\t")
    rows = []
    for line in lines[start + 1:]:
        if line.startswith("##"):
            break
        rows.append(line.split("\t"))
    lower = {"gie", "fnerror", "sdl"}
    out = {}
    for col, m in enumerate(header[1:], start=1):
        ranked = sorted(rows, key=lambda r: float(r[col]) * (1 if m in lower else -1))
        out[m] = [r[0] for r in ranked]
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=100_000)
    ap.add_argument("--depth", type=int, default=14)
    ap.add_argument("--instances", type=int, default=100_000)
    ap.add_argument("--label-factor", type=int, default=3)
    ap.add_argument("--threshold", type=int, default=4)
    ap.add_argument("--stability-instances", type=int, default=2_000,
                    help="instances used for the t=2 vs t=4 ordering check")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workdir")
    ap.add_argument("--report-json", help="also write timings and orderings to this file")
    args = ap.parse_args(argv)

    with tempfile.TemporaryDirectory() as tmp:
        folder = Path(args.workdir or tmp)
        t0 = time.perf_counter()
        edges, levels = generate_dag(args.nodes, args.depth, args.seed)
        truth, systems = generate_instances(levels, edges, args.instances, args.label_factor, args.seed + 1)
        paths = write_inputs(folder, edges, truth, systems)
        print(f"generated {args.nodes} nodes / {len(edges)} edges / depth {len(levels) - 1}, "
              f"{args.instances} instances in {time.perf_counter() - t0:.1f}s")
        report, seconds = run_eval(paths, "fair", args.threshold)
        print(report.rstrip())
        print(f"eval t={args.threshold}: {seconds:.1f}s, peak RSS {peak_rss_mb():.0f} MB")

        small = write_inputs(folder / "small", edges, truth[:args.stability_instances],
                             {k: v[:args.stability_instances] for k, v in systems.items()})
        order2 = orderings(run_compare(small, 2))
        order4 = orderings(run_compare(small, 4))
        for m in order2:
            print(f"{m:10s} t=2 {order2[m]}  t=4 {order4[m]}")
        print("orderings identical:", order2 == order4)
    if args.report_json:
        Path(args.report_json).write_text(json.dumps({
            "nodes": args.nodes, "instances": args.instances, "threshold": args.threshold,
            "eval_seconds": seconds, "peak_rss_mb": peak_rss_mb(),
            "orderings_t2": order2, "orderings_t4": order4,
        }, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
