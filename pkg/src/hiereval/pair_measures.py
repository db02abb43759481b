"""Pair-based measures: tree induced error, GIE and MGIA."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .flow import CostMatrix, FlowResult, solve_pairing
from .hierarchy import Hierarchy, Unreachable, distances
from .labels import InstanceLabels

GIE_BOUNDS = (1, 1, 1, 1)


def mgia_bounds(m: int, n: int) -> tuple[int, int, int, int]:
    return (1, n, 1, m)


@dataclass
class PairScore:
    measure: str
    raw_error: float
    score: Optional[float] = None
    pairs: set = field(default_factory=set)


def tree_induced_error(h: Hierarchy, y: int, y_hat: int) -> float:
    """Weighted length of the shortest path between a true and a predicted class."""
    h.check(y_hat)
    dist = distances(h, y, targets=[y_hat])
    if y_hat not in dist:
        raise Unreachable(f"{y} and {y_hat} are not connected")
    return dist[y_hat]


def cost_matrix(h: Hierarchy, labels: InstanceLabels, d_max: float,
                cap: Optional[float] = None) -> tuple[CostMatrix, list, list]:
    """Shortest-path pairing costs, predicted rows x true columns.

    Pairs farther apart than ``cap`` (or disconnected) get no pairing edge,
    which leaves the default classes as their only option.
    """
    pred = sorted(labels.predicted)
    true = sorted(labels.truth)
    true_set = set(true)
    rows = []
    for p in pred:
        dist = distances(h, p, cap=cap, targets=true_set)
        rows.append([dist.get(t, math.inf) for t in true])
    return CostMatrix.from_pairs(rows, d_max, n=len(true)), pred, true


def _solve(h, labels, d_max, cap, bounds_for) -> tuple[FlowResult, list, list]:
    matrix, pred, true = cost_matrix(h, labels, d_max, cap)
    result = solve_pairing(matrix, *bounds_for(matrix.m, matrix.n))
    return result, pred, true


def _named_pairs(result: FlowResult, pred, true) -> set:
    pairs = {(pred[i], true[j]) for i, j in result.pairs}
    pairs |= {(pred[i], None) for i in result.to_default_true}
    pairs |= {(None, true[j]) for j in result.from_default_pred}
    return pairs


def gie(h: Hierarchy, labels: InstanceLabels, d_max: float = 5.0,
        cap: Optional[float] = None) -> PairScore:
    """Graph Induced Error: one-to-one pairing, unmatched classes cost ``d_max``."""
    if not labels.predicted:
        return PairScore("GIE", len(labels.truth) * d_max, None,
                         {(None, t) for t in labels.truth})
    result, pred, true = _solve(h, labels, d_max, cap, lambda m, n: GIE_BOUNDS)
    return PairScore("GIE", result.total_cost, None, _named_pairs(result, pred, true))


def mgia(h: Hierarchy, labels: InstanceLabels, d_max: float = 5.0,
         cap: Optional[float] = None) -> PairScore:
    """Multi-label Graph Induced Accuracy.

    Every class takes part in at least one pair; ``raw_error`` is the solved
    flow cost (fnerror) and ``score = 1 - fnerror / (|Y u Y^| * d_max)``,
    clamped to [0, 1].
    """
    if not labels.predicted:
        fnerror = len(labels.truth) * d_max
        pairs = {(None, t) for t in labels.truth}
    else:
        result, pred, true = _solve(h, labels, d_max, cap, mgia_bounds)
        fnerror = result.total_cost
        pairs = _named_pairs(result, pred, true)
    return PairScore("MGIA", fnerror, mgia_score(fnerror, labels.union_size, d_max), pairs)


def mgia_score(fnerror: float, union_size: int, d_max: float) -> float:
    denom = union_size * d_max
    if denom <= 0:
        return 1.0 if fnerror == 0 else 0.0
    return min(1.0, max(0.0, 1.0 - fnerror / denom))
