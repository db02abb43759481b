"""Per-instance evaluation of a measure set and input-ordered aggregation."""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

from .hierarchy import Hierarchy
from .labels import InstanceLabels
from .lca_measures import apply_lca_threshold, lca_measures, prune_nested
from .pair_measures import gie, mgia, tree_induced_error
from .set_measures import ANCESTORS, DESCENDANTS, augment, bianchi_filter, set_scores

ALL_MEASURES = ("tie", "gie", "mgia", "fnerror", "ph", "rh", "fh", "sdl",
                "plca", "rlca", "flca", "bianchi-fh", "desc-fh")
DEFAULT_MEASURES = ("gie", "mgia", "fnerror", "ph", "rh", "fh", "sdl", "plca", "rlca", "flca")
WORKERS_ENV = "HIEREVAL_WORKERS"


class SingleLabelRequired(ValueError):
    pass


@dataclass(frozen=True)
class EvalConfig:
    d_max: float = 5.0
    max_dist: Optional[float] = None
    lca_threshold: Optional[int] = None
    virtual_root: Optional[int] = None


def evaluate_instance(h: Hierarchy, labels: InstanceLabels, measures: Sequence[str],
                      config: EvalConfig = EvalConfig()) -> dict[str, float]:
    wanted = set(measures)
    unknown = wanted - set(ALL_MEASURES)
    if unknown:
        raise ValueError(f"unknown measures: {', '.join(sorted(unknown))}")
    view = h
    if config.lca_threshold is not None:
        view, _ = apply_lca_threshold(h, labels, config.lca_threshold)
    out: dict[str, float] = {}

    if "tie" in wanted:
        if len(labels.truth) != 1 or len(labels.predicted) != 1:
            raise SingleLabelRequired("tie needs exactly one true and one predicted class")
        (y,), (y_hat,) = labels.truth, labels.predicted
        out["tie"] = tree_induced_error(view, y, y_hat)
    if "gie" in wanted:
        out["gie"] = gie(view, labels, config.d_max, config.max_dist).raw_error
    if wanted & {"mgia", "fnerror"}:
        score = mgia(view, labels, config.d_max, config.max_dist)
        out["mgia"], out["fnerror"] = score.score, score.raw_error

    if wanted & {"ph", "rh", "fh", "sdl", "bianchi-fh"}:
        aug = augment(view, labels, ANCESTORS, exclude=config.virtual_root)
        s = set_scores(aug)
        out.update(ph=s.p_h, rh=s.r_h, fh=s.f_h, sdl=s.sdl)
        if "bianchi-fh" in wanted:
            out["bianchi-fh"] = set_scores(bianchi_filter(view, aug)).f_h
    if "desc-fh" in wanted:
        out["desc-fh"] = set_scores(augment(h, labels, DESCENDANTS, exclude=config.virtual_root)).f_h

    if wanted & {"plca", "rlca", "flca"}:
        pruned = prune_nested(h, labels)
        lca_view = view
        if config.lca_threshold is not None and pruned != labels:
            lca_view, _ = apply_lca_threshold(h, pruned, config.lca_threshold)
        s, _ = lca_measures(lca_view, pruned)
        out.update(plca=s.p_lca, rlca=s.r_lca, flca=s.f_lca)
    return {m: out[m] for m in measures}


def mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values) if values else math.nan


def worker_count(default: int = 1) -> int:
    raw = os.environ.get(WORKERS_ENV)
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


# process-pool plumbing: the hierarchy is shipped once per worker
_shared: dict = {}


def _init_worker(h, measures, config):
    _shared.update(h=h, measures=measures, config=config)


def _run_chunk(chunk):
    h, measures, config = _shared["h"], _shared["measures"], _shared["config"]
    return [evaluate_instance(h, lab, measures, config) for lab in chunk]


def evaluate_all(h: Hierarchy, instances: Sequence[InstanceLabels], measures: Sequence[str],
                 config: EvalConfig = EvalConfig(), workers: Optional[int] = None) -> list[dict]:
    """Per-instance results in input order, independent of the worker count."""
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(instances) < 2 * workers:
        return [evaluate_instance(h, lab, measures, config) for lab in instances]
    size = max(1, math.ceil(len(instances) / (workers * 8)))
    chunks = [instances[i:i + size] for i in range(0, len(instances), size)]
    with ProcessPoolExecutor(workers, initializer=_init_worker,
                             initargs=(h, tuple(measures), config)) as pool:
        results = []
        for part in pool.map(_run_chunk, chunks):
            results.extend(part)
    return results


def aggregate(rows: Sequence[dict], measures: Sequence[str]) -> dict[str, float]:
    return {m: mean([r[m] for r in rows]) for m in measures}
