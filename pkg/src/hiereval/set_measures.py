"""Augmented-set measures: hierarchical P/R/F, symmetric difference loss."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .hierarchy import Hierarchy
from .labels import InstanceLabels

ANCESTORS = "ancestors"
DESCENDANTS = "descendants"


@dataclass(frozen=True)
class AugmentedSets:
    y_aug: frozenset
    y_hat_aug: frozenset
    mode: str = ANCESTORS
    filtered: bool = False


@dataclass(frozen=True)
class SetScore:
    p_h: float
    r_h: float
    f_h: float
    sdl: int


def augment(h: Hierarchy, labels: InstanceLabels, mode: str = ANCESTORS,
            exclude: Optional[int] = None) -> AugmentedSets:
    """Union each label set with the ancestors (or descendants) of its members.

    ``exclude`` drops one designated id, e.g. a virtual root that every
    class shares.
    """
    if mode == ANCESTORS:
        closure = h.ancestors
    elif mode == DESCENDANTS:
        closure = h.descendants
    else:
        raise ValueError(f"unknown augmentation mode {mode!r}")

    def grow(nodes):
        out = set(nodes)
        for n in nodes:
            out |= closure(n)
        out.discard(exclude)
        return frozenset(out)

    return AugmentedSets(grow(labels.truth), grow(labels.predicted), mode)


def bianchi_filter(h: Hierarchy, aug: AugmentedSets) -> AugmentedSets:
    """Drop nodes missing from the other set whose parents are all missing too.

    Both removals are decided against the unfiltered sets.
    """
    if aug.mode != ANCESTORS:
        raise ValueError("the tolerance filter applies to ancestor augmentation only")
    y, y_hat = aug.y_aug, aug.y_hat_aug

    def keep(nodes, other):
        return frozenset(n for n in nodes
                         if n in other or any(p in other for p in h.parents(n)))

    return AugmentedSets(keep(y, y_hat), keep(y_hat, y), aug.mode, True)


def set_scores(aug: AugmentedSets) -> SetScore:
    y, y_hat = aug.y_aug, aug.y_hat_aug
    common = len(y & y_hat)
    p = common / len(y_hat) if y_hat else 0.0
    r = common / len(y) if y else 0.0
    return SetScore(p, r, f1(p, r), len(y) + len(y_hat) - 2 * common)


def f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0
