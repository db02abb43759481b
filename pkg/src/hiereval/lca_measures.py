"""LCA precision, recall and F1.

Each label is linked to its lowest common ancestors with the other label
set.  The extended graphs hold every minimal label-to-LCA path; the minimal
graphs keep a small set of LCAs (greedy cover plus two redundancy-removal
passes) and one path per (label, LCA) requirement.

LCA costs here are costs of paths through a common ancestor-or-self, the
only paths that have an apex that is an ancestor of both endpoints.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .hierarchy import Hierarchy, ancestor_path_cost, lca_of_set, upward_paths
from .labels import InstanceLabels
from .set_measures import f1

TRUE, PRED = "t", "p"
ARTIFICIAL_ROOT = -1

# enumeration limits inside the production path; beyond them the greedy
# fallbacks take over
MAX_TIE_ORDERS = 128
MAX_PATH_COMBINATIONS = 2048


@dataclass(frozen=True)
class Graph:
    nodes: frozenset = frozenset()
    edges: frozenset = frozenset()  # (child, parent)

    @classmethod
    def from_paths(cls, paths: Iterable[tuple]) -> "Graph":
        nodes, edges = set(), set()
        for path in paths:
            nodes.update(path)
            edges.update(zip(path, path[1:]))
        return cls(frozenset(nodes), frozenset(edges))


@dataclass(frozen=True)
class LcaScore:
    p_lca: float
    r_lca: float
    f_lca: float


@dataclass
class LcaGraphs:
    g_ex_t: Graph
    g_ex_p: Graph
    g_t: Graph = field(default_factory=Graph)
    g_p: Graph = field(default_factory=Graph)
    chosen_lcas: frozenset = frozenset()


def prune_nested(h: Hierarchy, labels: InstanceLabels) -> InstanceLabels:
    """Drop every label that has a descendant in the same set."""

    def prune(nodes):
        return frozenset(n for n in nodes if not (h.descendants(n) & nodes))

    truth = prune(labels.truth)
    if labels.truth and not truth:
        raise ValueError("labels collapse to empty")
    return InstanceLabels(truth, prune(labels.predicted))


class _Links:
    """LCA sets and (partner, apex) links of every label on both sides."""

    def __init__(self, h: Hierarchy, labels: InstanceLabels):
        self.h = h
        self.side_labels = {TRUE: sorted(labels.truth), PRED: sorted(labels.predicted)}
        self.lcas: dict[tuple, frozenset] = {}
        self.links: dict[tuple, list] = {}
        for side, other in ((TRUE, PRED), (PRED, TRUE)):
            targets = self.side_labels[other]
            for n in self.side_labels[side]:
                key = (side, n)
                if not targets:
                    self.lcas[key], self.links[key] = frozenset(), []
                    continue
                res = lca_of_set(h, n, targets)
                self.lcas[key] = res.lcas
                links = []
                for o in sorted(res.s_best):
                    _, apexes = ancestor_path_cost(h, n, o)
                    links.extend((o, a) for a in sorted(apexes))
                self.links[key] = links
        self._paths: dict[tuple, tuple] = {}

    def keys(self):
        return list(self.lcas)

    def paths(self, node, apex) -> tuple:
        key = (node, apex)
        cached = self._paths.get(key)
        if cached is None:
            cached = upward_paths(self.h, node, apex)
            self._paths[key] = cached
        return cached

    def all_lcas(self) -> frozenset:
        return frozenset().union(*self.lcas.values())

    def coverage(self, a) -> int:
        return sum(1 for s in self.lcas.values() if a in s)

    def partner_candidates(self, side, apex) -> list:
        """Minimal paths from a ``side`` label up to ``apex`` via links of the other side."""
        other = PRED if side == TRUE else TRUE
        seen = set()
        for n in self.side_labels[other]:
            for o, a in self.links[(other, n)]:
                if a == apex:
                    seen.update(self.paths(o, a))
        return sorted(seen)


def build_extended_graphs(h: Hierarchy, labels: InstanceLabels,
                          links: Optional[_Links] = None) -> LcaGraphs:
    links = links or _Links(h, labels)
    paths = {TRUE: [], PRED: []}
    for (side, n), lcas in links.lcas.items():
        paths[side].append((n,))
        for a in lcas:
            paths[side].extend(links.paths(n, a))
        other = PRED if side == TRUE else TRUE
        for o, a in links.links[(side, n)]:
            paths[other].extend(links.paths(o, a))
    return LcaGraphs(Graph.from_paths(paths[TRUE]), Graph.from_paths(paths[PRED]))


def graph_scores(g_t: Graph, g_p: Graph) -> LcaScore:
    common = len(g_t.nodes & g_p.nodes)
    p = common / len(g_p.nodes) if g_p.nodes else 0.0
    r = common / len(g_t.nodes) if g_t.nodes else 0.0
    return LcaScore(p, r, f1(p, r))


# -- LCA selection -----------------------------------------------------------
class _Cover:
    """Bitmask view of the requirement that every label keeps one of its LCAs."""

    def __init__(self, links: _Links):
        self.order = sorted(links.all_lcas(), key=lambda a: (-links.coverage(a), a))
        self.coverage = {a: links.coverage(a) for a in self.order}
        self.bit = {a: 1 << i for i, a in enumerate(self.order)}
        masks = set()
        for lcas in links.lcas.values():
            if lcas:
                m = 0
                for a in lcas:
                    m |= self.bit[a]
                masks.add(m)
        self.requirements = sorted(masks)

    def satisfied(self, mask: int) -> bool:
        return all(r & mask for r in self.requirements)

    def mask(self, nodes) -> int:
        m = 0
        for a in nodes:
            m |= self.bit[a]
        return m


def _greedy_lcas(cover: _Cover, prefix: list) -> frozenset:
    """Redundancy removal over a satisfying greedy prefix: top-down, then bottom-up."""
    chosen = list(prefix)
    for a in list(chosen):
        rest = [b for b in chosen if b != a]
        if cover.satisfied(cover.mask(rest)):
            chosen = rest
    for a in list(reversed(chosen)):
        rest = [b for b in chosen if b != a]
        if cover.satisfied(cover.mask(rest)):
            chosen = rest
    return frozenset(chosen)


def _greedy_prefixes(cover: _Cover):
    """Satisfying prefixes of coverage-sorted LCA orders.

    The first prefix breaks coverage ties by ascending id.  Later ones
    permute tied groups (only as far as the prefix reaches) so the outcome
    does not hinge on how nodes happen to be numbered.
    """
    groups = [list(g) for _, g in itertools.groupby(cover.order, key=cover.coverage.get)]
    seen: set = set()
    budget = [MAX_TIE_ORDERS * 8]

    def walk(gi, prefix, mask):
        if gi == len(groups):
            key = tuple(prefix)
            if key not in seen:
                seen.add(key)
                yield prefix
            return
        for perm in itertools.permutations(groups[gi]):
            budget[0] -= 1
            if budget[0] < 0:
                return
            p, m = list(prefix), mask
            done = False
            for a in perm:
                p.append(a)
                m |= cover.bit[a]
                if cover.satisfied(m):
                    done = True
                    break
            if done:
                key = tuple(p)
                if key not in seen:
                    seen.add(key)
                    yield p
            else:
                yield from walk(gi + 1, p, m)
            if len(seen) >= MAX_TIE_ORDERS:
                return

    if not cover.requirements:
        yield []
        return
    yield from walk(0, [], 0)


def select_lcas(links: _Links) -> list[frozenset]:
    """Distinct LCA sets reachable by the greedy selection, first one id-ordered."""
    cover = _Cover(links)
    # LCAs that are some label's only option belong to every cover; when they
    # already satisfy everything the cover is unique
    forced = 0
    for r in cover.requirements:
        if r & (r - 1) == 0:
            forced |= r
    if cover.satisfied(forced):
        return [frozenset(a for a in cover.order if cover.bit[a] & forced)]
    seen = []
    for prefix in _greedy_prefixes(cover):
        chosen = _greedy_lcas(cover, prefix)
        if chosen not in seen:
            seen.append(chosen)
    return seen or [frozenset()]


# -- path selection --------------------------------------------------------
def _slots(links: _Links, chosen: frozenset):
    """Own-path requirements per side: (side, label, apex, candidate paths)."""
    own = []
    for (side, n), lcas in sorted(links.lcas.items()):
        hits = sorted(lcas & chosen)
        if not hits:
            own.append((side, n, None, ((n,),)))
        for a in hits:
            own.append((side, n, a, links.paths(n, a)))
    return own


def _covering_nodes(selection) -> dict:
    nodes = {TRUE: set(), PRED: set()}
    for side, path in selection:
        nodes[side].update(path)
    return nodes


def _finish(links: _Links, chosen: frozenset, own_pick: list, partner_pick: dict):
    paths = {TRUE: [], PRED: []}
    for side, path in own_pick:
        paths[side].append(path)
    for (side, _a), path in partner_pick.items():
        if path is not None:
            paths[side].append(path)
    return Graph.from_paths(paths[TRUE]), Graph.from_paths(paths[PRED])


def _rank(g_t: Graph, g_p: Graph):
    s = graph_scores(g_t, g_p)
    return (s.f_lca, -(len(g_t.nodes) + len(g_p.nodes)), s.p_lca)


def _exhaustive_paths(links, chosen, own):
    """Best path choice by enumeration, or None when over the budget."""
    partner_slots = []
    for side in (TRUE, PRED):
        for a in sorted(chosen):
            if not any(s == side and ap == a for s, _n, ap, _c in own):
                partner_slots.append((side, a, links.partner_candidates(side, a)))
    size = 1
    for *_ignored, cands in own:
        size *= len(cands)
    for _s, _a, cands in partner_slots:
        size *= len(cands) + 1
    if size > MAX_PATH_COMBINATIONS:
        return None

    best, best_key = None, None
    for own_choice in itertools.product(*(c for *_x, c in own)):
        own_pick = [(slot[0], p) for slot, p in zip(own, own_choice)]
        covered = _covering_nodes(own_pick)
        options = []
        for side, a, cands in partner_slots:
            opts = list(cands)
            if a in covered[side]:
                opts = [None] + opts
            options.append(opts)
        for partner_choice in itertools.product(*options):
            pick = {(s, a): p for (s, a, _c), p in zip(partner_slots, partner_choice)}
            g_t, g_p = _finish(links, chosen, own_pick, pick)
            if not (chosen <= g_t.nodes and chosen <= g_p.nodes):
                continue
            key = _rank(g_t, g_p)
            if best_key is None or key > best_key:
                best, best_key = (g_t, g_p), key
    return best


def _greedy_paths(links, chosen, own):
    """Most-constrained requirement first; keep the path sharing most selected nodes."""
    selected: set = set()
    own_pick = []
    for side, n, a, cands in sorted(own, key=lambda s: (len(s[3]), s[0], s[1], s[2] is None, s[2] or 0)):
        path = max(cands, key=lambda p: (len(selected.intersection(p)), _neg_lex(p)))
        own_pick.append((side, path))
        selected.update(path)
    covered = _covering_nodes(own_pick)
    partner_pick = {}
    for side in (TRUE, PRED):
        for a in sorted(chosen):
            if a in covered[side]:
                continue
            cands = links.partner_candidates(side, a)
            path = max(cands, key=lambda p: (len(selected.intersection(p)), _neg_lex(p)))
            partner_pick[(side, a)] = path
            selected.update(path)
            covered[side].update(path)
    return _finish(links, chosen, own_pick, partner_pick)


def _neg_lex(path):
    # max() with this key prefers the lexicographically smallest sequence
    return tuple(-x for x in path)


def best_paths(links: _Links, chosen: frozenset) -> tuple[Graph, Graph]:
    own = _slots(links, chosen)
    result = _exhaustive_paths(links, chosen, own)
    if result is None:
        result = _greedy_paths(links, chosen, own)
    return result


def select_minimal_graphs(h: Hierarchy, labels: InstanceLabels,
                          extended: Optional[LcaGraphs] = None,
                          links: Optional[_Links] = None) -> LcaGraphs:
    links = links or _Links(h, labels)
    if extended is None:
        extended = build_extended_graphs(h, labels, links)
    best, best_key = None, None
    for chosen in select_lcas(links):
        g_t, g_p = best_paths(links, chosen)
        key = _rank(g_t, g_p)
        if best_key is None or key > best_key:
            best, best_key = (chosen, g_t, g_p), key
    chosen, g_t, g_p = best
    return LcaGraphs(extended.g_ex_t, extended.g_ex_p, g_t, g_p, chosen)


def lca_scores(graphs: LcaGraphs) -> LcaScore:
    return graph_scores(graphs.g_t, graphs.g_p)


def lca_measures(h: Hierarchy, labels: InstanceLabels) -> tuple[LcaScore, LcaGraphs]:
    pruned = prune_nested(h, labels)
    links = _Links(h, pruned)
    graphs = select_minimal_graphs(h, pruned, build_extended_graphs(h, pruned, links), links)
    return lca_scores(graphs), graphs


def extended_scores(h: Hierarchy, labels: InstanceLabels) -> LcaScore:
    pruned = prune_nested(h, labels)
    ext = build_extended_graphs(h, pruned)
    return graph_scores(ext.g_ex_t, ext.g_ex_p)


def check_constraints(h: Hierarchy, labels: InstanceLabels, graphs: LcaGraphs) -> None:
    """Assert the selection constraints on a returned selection.

    Labels are expected to be pruned already.  Labels without any LCA (no
    common ancestor with the other set) are exempt from the LCA constraints.
    """
    links = _Links(h, labels)
    g_t, g_p = graphs.g_t, graphs.g_p
    if not labels.truth <= g_t.nodes or not labels.predicted <= g_p.nodes:
        raise AssertionError("a label is missing from its graph")
    if not (g_t.nodes <= graphs.g_ex_t.nodes and g_p.nodes <= graphs.g_ex_p.nodes):
        raise AssertionError("minimal graph leaves the extended graph")
    both = g_t.nodes & g_p.nodes
    for (side, n), lcas in links.lcas.items():
        if lcas and lcas.isdisjoint(both):
            raise AssertionError(f"label {n} has no LCA in both graphs")
        graph = g_t if side == TRUE else g_p
        if lcas and not any(_path_in(graph, p) for a in lcas & graph.nodes
                            for p in links.paths(n, a)):
            raise AssertionError(f"label {n} has no minimal path to an LCA")
    all_lcas = links.all_lcas()
    for side, graph in ((TRUE, g_t), (PRED, g_p)):
        for a in graph.nodes & all_lcas:
            if not any(_path_in(graph, p) for n in links.side_labels[side]
                       if a in h.up_distances(n) for p in _minimal_up(links, n, a)):
                raise AssertionError(f"LCA {a} not connected to a label on side {side}")


def _minimal_up(links: _Links, n, a):
    try:
        return links.paths(n, a)
    except LookupError:
        return ()


def _path_in(graph: Graph, path: tuple) -> bool:
    return set(path) <= graph.nodes and all(e in graph.edges for e in zip(path, path[1:]))


# -- distance threshold ----------------------------------------------------
def apply_lca_threshold(h: Hierarchy, labels: InstanceLabels, t: int,
                        artificial: int = ARTIFICIAL_ROOT) -> tuple[Hierarchy, InstanceLabels]:
    """Per-instance hierarchy view in which every label has an ancestor at distance ``t``.

    Ancestors up to ``t - 1`` hops above any label are kept, with the edges
    among them.  If some kept node loses a parent, or the kept part has
    several top nodes, an artificial node is placed above every top node,
    giving pairs without a nearer common ancestor an LCA at distance ``t``.
    """
    if t < 1:
        raise ValueError("threshold must be a positive integer")
    kept: dict = {}
    queue = deque()
    for n in sorted(labels.truth | labels.predicted):
        h.check(n)
        kept[n] = 0
        queue.append(n)
    while queue:
        n = queue.popleft()
        d = kept[n]
        if d + 1 > t - 1:
            continue
        for p in h.parents(n):
            if p not in kept:
                kept[p] = d + 1
                queue.append(p)
    edges = []
    cut = False
    tops = []
    for n in kept:
        has_kept_parent = False
        for p in h.parents(n):
            if p in kept:
                edges.append((p, n, h.weight(p, n)))
                has_kept_parent = True
            else:
                cut = True
        if not has_kept_parent:
            tops.append(n)
    if cut or len(tops) > 1:
        if artificial in h.nodes:
            raise ValueError(f"artificial node id {artificial} already in the hierarchy")
        edges.extend((artificial, n, 1.0) for n in sorted(tops))
    return Hierarchy(edges, nodes=kept), labels
