"""Rank correlation, micro sign test and significance-grouped ranks."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

HIGHER, LOWER = "higher-better", "lower-better"

LOWER_BETTER = frozenset({"tie", "gie", "fnerror", "sdl"})


def orientation_of(measure: str) -> str:
    return LOWER if measure in LOWER_BETTER else HIGHER


@dataclass(frozen=True)
class ScoreSeries:
    system: str
    scores: tuple
    orientation: str = HIGHER

    def __post_init__(self):
        object.__setattr__(self, "scores", tuple(float(s) for s in self.scores))
        if self.orientation not in (HIGHER, LOWER):
            raise ValueError(f"bad orientation {self.orientation!r}")

    def mean(self) -> float:
        return math.fsum(self.scores) / len(self.scores) if self.scores else math.nan


@dataclass(frozen=True)
class SignTestResult:
    n: int
    k: int
    z: float
    p_value: float
    approximate: bool


class UndefinedCorrelation(ValueError):
    pass


def kendall_tau(a: Sequence[float], b: Sequence[float]) -> float:
    """Tau-b with tie correction; O(n^2), which is plenty for system rankings."""
    if len(a) != len(b):
        raise ValueError("rank sequences differ in length")
    if len(a) < 2:
        raise ValueError("need at least two items")
    concordant = discordant = ties_a = ties_b = 0
    for i in range(len(a)):
        for j in range(i + 1, len(a)):
            da = (a[i] > a[j]) - (a[i] < a[j])
            db = (b[i] > b[j]) - (b[i] < b[j])
            if da == 0 and db == 0:
                continue
            if da == 0:
                ties_a += 1
            elif db == 0:
                ties_b += 1
            elif da == db:
                concordant += 1
            else:
                discordant += 1
    denom = math.sqrt((concordant + discordant + ties_a) * (concordant + discordant + ties_b))
    if denom == 0:
        raise UndefinedCorrelation("one sequence is entirely tied")
    return (concordant - discordant) / denom


def _wins(x: float, y: float, orientation: str) -> bool:
    return x > y if orientation == HIGHER else x < y


def sign_test(a: ScoreSeries, b: ScoreSeries) -> SignTestResult:
    """One-sided micro sign test that ``a`` beats ``b``.

    Only instances where the scores differ count; the normal approximation
    is flagged as such when 12 or fewer remain.
    """
    if len(a.scores) != len(b.scores):
        raise ValueError(f"series lengths differ: {len(a.scores)} vs {len(b.scores)}")
    if a.orientation != b.orientation:
        raise ValueError("series orientations differ")
    n = k = 0
    for x, y in zip(a.scores, b.scores):
        if x != y:
            n += 1
            k += _wins(x, y, a.orientation)
    if n == 0:
        return SignTestResult(0, 0, 0.0, 1.0, True)
    z = (k - 0.5 * n) / (0.5 * math.sqrt(n))
    return SignTestResult(n, k, z, 0.5 * math.erfc(z / math.sqrt(2)), n <= 12)


def _sort_key(series: ScoreSeries):
    m = series.mean()
    return -m if series.orientation == HIGHER else m


def rank_with_significance(systems: Sequence[ScoreSeries], alpha: float = 0.05) -> dict[str, int]:
    """1-based ranks; a system shares the rank of its tie-group head when the
    head does not beat it significantly."""
    if len(systems) < 2:
        raise ValueError("ranking needs at least two systems")
    order = sorted(systems, key=_sort_key)
    ranks: dict[str, int] = {}
    head = order[0]
    ranks[head.system] = 1
    for pos, series in enumerate(order[1:], start=2):
        if sign_test(head, series).p_value >= alpha:
            ranks[series.system] = ranks[head.system]
        else:
            head = series
            ranks[series.system] = pos
    return ranks


def tau_matrix(rankings: Mapping[str, Sequence[float]]) -> dict[tuple[str, str], float]:
    """Pairwise tau over named rank vectors; NaN where undefined."""
    names = list(rankings)
    out = {}
    for x in names:
        for y in names:
            try:
                out[(x, y)] = kendall_tau(rankings[x], rankings[y])
            except UndefinedCorrelation:
                out[(x, y)] = math.nan
    return out
