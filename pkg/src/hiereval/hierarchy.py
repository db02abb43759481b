"""Class hierarchies: parsing, cycle removal and closure/path queries.

A hierarchy is a set of integer class ids connected by weighted
parent -> child edges.  Trees and DAGs (possibly with several roots) are
both supported.  Instances are immutable once built; every query is a pure
function of the hierarchy, and the memo tables it fills are only caches.
"""
from __future__ import annotations

import heapq
import math
import re
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

Node = int
Edge = tuple[int, int, float]

_EPS = 1e-9


class HierarchyError(ValueError):
    """Malformed hierarchy text or an invalid edge."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnknownNodeError(KeyError):
    def __init__(self, node):
        self.node = node
        super().__init__(f"unknown class id {node}")

    def __str__(self):
        return self.args[0]


class Unreachable(LookupError):
    """Two nodes are not connected (or not within the requested cap)."""


class Hierarchy:
    """Weighted class DAG with ancestor/descendant closure queries."""

    def __init__(self, edges: Iterable[Edge] = (), nodes: Iterable[Node] = (),
                 names: Optional[dict[Node, str]] = None):
        weights: dict[tuple[Node, Node], float] = {}
        all_nodes: set[Node] = set(nodes)
        for parent, child, weight in edges:
            if parent == child:
                raise HierarchyError(f"self-edge on {parent}")
            if not weight > 0:
                raise HierarchyError(f"non-positive weight {weight} on {parent}->{child}")
            weights.setdefault((parent, child), float(weight))
            all_nodes.add(parent)
            all_nodes.add(child)

        parents: dict[Node, list[Node]] = defaultdict(list)
        children: dict[Node, list[Node]] = defaultdict(list)
        for parent, child in sorted(weights):
            parents[child].append(parent)
            children[parent].append(child)

        self._weights = weights
        self._parents = {n: tuple(ps) for n, ps in parents.items()}
        self._children = {n: tuple(cs) for n, cs in children.items()}
        self.nodes: frozenset[Node] = frozenset(all_nodes)
        self.roots: frozenset[Node] = frozenset(n for n in all_nodes if n not in self._parents)
        self.names: dict[Node, str] = dict(names or {})
        self.unit_weights = all(w == 1.0 for w in weights.values())
        self._anc_cache: dict[Node, frozenset] = {}
        self._desc_cache: dict[Node, frozenset] = {}
        self._up_cache: dict[Node, dict[Node, float]] = {}

    # -- structure ---------------------------------------------------------
    @property
    def edges(self) -> tuple[Edge, ...]:
        return tuple((p, c, w) for (p, c), w in sorted(self._weights.items()))

    def __len__(self):
        return len(self.nodes)

    def __contains__(self, node) -> bool:
        return node in self.nodes

    def __repr__(self):
        return f"Hierarchy({len(self.nodes)} nodes, {len(self._weights)} edges)"

    def check(self, node: Node) -> None:
        if node not in self.nodes:
            raise UnknownNodeError(node)

    def parents(self, node: Node) -> tuple[Node, ...]:
        return self._parents.get(node, ())

    def children(self, node: Node) -> tuple[Node, ...]:
        return self._children.get(node, ())

    def weight(self, parent: Node, child: Node) -> float:
        return self._weights[(parent, child)]

    def neighbors(self, node: Node):
        """Undirected neighbours with the connecting edge weight."""
        w = self._weights
        for p in self._parents.get(node, ()):
            yield p, w[(p, node)]
        for c in self._children.get(node, ()):
            yield c, w[(node, c)]

    def is_leaf(self, node: Node) -> bool:
        return node not in self._children

    def label(self, node: Node) -> str:
        return self.names.get(node, str(node))

    # -- closures ----------------------------------------------------------
    def ancestors(self, node: Node) -> frozenset:
        cached = self._anc_cache.get(node)
        if cached is None:
            self.check(node)
            cached = frozenset(_closure(node, self._parents))
            self._anc_cache[node] = cached
        return cached

    def descendants(self, node: Node) -> frozenset:
        cached = self._desc_cache.get(node)
        if cached is None:
            self.check(node)
            cached = frozenset(_closure(node, self._children))
            self._desc_cache[node] = cached
        return cached

    def up_distances(self, node: Node) -> dict[Node, float]:
        """Cheapest upward (child -> parent) cost from ``node`` to each ancestor-or-self."""
        cached = self._up_cache.get(node)
        if cached is None:
            self.check(node)
            cached = _dijkstra(node, lambda n: ((p, self._weights[(p, n)])
                                                for p in self._parents.get(n, ())))
            self._up_cache[node] = cached
        return cached

    def topological_order(self) -> list[Node]:
        """Kahn's algorithm; raises HierarchyError if a cycle exists."""
        indeg = {n: len(self._parents.get(n, ())) for n in self.nodes}
        ready = sorted(n for n, d in indeg.items() if d == 0)
        heapq.heapify(ready)
        order = []
        while ready:
            n = heapq.heappop(ready)
            order.append(n)
            for c in self._children.get(n, ()):
                indeg[c] -= 1
                if indeg[c] == 0:
                    heapq.heappush(ready, c)
        if len(order) != len(self.nodes):
            raise HierarchyError("hierarchy contains a cycle")
        return order

    def is_acyclic(self) -> bool:
        try:
            self.topological_order()
        except HierarchyError:
            return False
        return True

    def depth(self) -> int:
        """Longest root-to-node edge count."""
        longest: dict[Node, int] = {}
        for n in self.topological_order():
            longest[n] = max((longest[p] + 1 for p in self.parents(n)), default=0)
        return max(longest.values(), default=0)


def _closure(start, adjacency) -> set:
    seen: set = set()
    stack = list(adjacency.get(start, ()))
    while stack:
        n = stack.pop()
        if n in seen:
            continue
        seen.add(n)
        stack.extend(adjacency.get(n, ()))
    return seen


def _dijkstra(source, expand, cap: Optional[float] = None, stop=None) -> dict:
    dist = {source: 0.0}
    heap = [(0.0, source)]
    done = set()
    remaining = set(stop) if stop is not None else None
    while heap:
        d, n = heapq.heappop(heap)
        if n in done:
            continue
        done.add(n)
        if remaining is not None:
            remaining.discard(n)
            if not remaining:
                break
        for m, w in expand(n):
            nd = d + w
            if cap is not None and nd > cap + _EPS:
                continue
            if nd < dist.get(m, math.inf) - _EPS:
                dist[m] = nd
                heapq.heappush(heap, (nd, m))
    return {n: d for n, d in dist.items() if n in done}


# -- parsing ---------------------------------------------------------------
_LINE = re.compile(r"^\s*(\d+)\s+(\d+)(?:\s+(\S+))?\s*$")


def parse_hierarchy(text: str, names: Optional[dict[Node, str]] = None) -> Hierarchy:
    """Parse ``parent child [weight]`` lines; ``#`` starts a comment line."""
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _LINE.match(line)
        if m is None:
            raise HierarchyError(f"expected 'parent child [weight]', got {raw!r}", lineno)
        parent, child = int(m.group(1)), int(m.group(2))
        weight = 1.0
        if m.group(3) is not None:
            try:
                weight = float(m.group(3))
            except ValueError:
                raise HierarchyError(f"bad weight {m.group(3)!r}", lineno) from None
            if not math.isfinite(weight) or weight <= 0:
                raise HierarchyError(f"weight must be positive, got {m.group(3)}", lineno)
        if parent == child:
            raise HierarchyError(f"self-edge on {parent}", lineno)
        edges.append((parent, child, weight))
    return Hierarchy(edges, names=names)


def load_hierarchy(path, names_path=None) -> Hierarchy:
    names = load_names(names_path) if names_path else None
    return parse_hierarchy(Path(path).read_text(encoding="utf-8"), names=names)


def load_names(path) -> dict[Node, str]:
    """Sidecar ``id<TAB>name`` map; display only."""
    names = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip() and not line.startswith("#"):
            key, _, name = line.partition("\t")
            names[int(key)] = name.strip()
    return names


def format_hierarchy(h: Hierarchy) -> str:
    lines = []
    for p, c, w in h.edges:
        lines.append(f"{p} {c}" if w == 1.0 else f"{p} {c} {w:g}")
    return "\n".join(lines) + ("\n" if lines else "")


# -- cycle removal ---------------------------------------------------------
def normalize_to_dag(h: Hierarchy) -> tuple[Hierarchy, list[tuple[Node, Node]]]:
    """Drop DFS back edges so the result is acyclic.

    DFS starts from every in-degree-0 node in ascending id order, then from
    the lowest-id node not yet visited (cyclic components have no source).
    Children are visited in ascending id order.  Returns the new hierarchy
    and the removed ``(parent, child)`` edges.
    """
    WHITE, GREY, BLACK = 0, 1, 2
    colour = dict.fromkeys(h.nodes, WHITE)
    removed: list[tuple[Node, Node]] = []
    starts = sorted(h.roots) + sorted(h.nodes)
    for start in starts:
        if colour[start] != WHITE:
            continue
        colour[start] = GREY
        stack = [(start, iter(h.children(start)))]
        while stack:
            node, it = stack[-1]
            for child in it:
                if colour[child] == WHITE:
                    colour[child] = GREY
                    stack.append((child, iter(h.children(child))))
                    break
                if colour[child] == GREY:
                    removed.append((node, child))
            else:
                colour[node] = BLACK
                stack.pop()
    if not removed:
        return h, []
    drop = set(removed)
    kept = [(p, c, w) for p, c, w in h.edges if (p, c) not in drop]
    return Hierarchy(kept, nodes=h.nodes, names=h.names), sorted(removed)


# -- closures and paths ----------------------------------------------------
def ancestors(h: Hierarchy, n: Node) -> frozenset:
    return h.ancestors(n)


def descendants(h: Hierarchy, n: Node) -> frozenset:
    return h.descendants(n)


@dataclass(frozen=True)
class PathSet:
    """All minimum-cost undirected paths between two nodes.

    ``status`` is ``"ok"``, ``"exceeds_cap"`` or ``"unreachable"``; the two
    failure states carry no paths and an infinite cost.
    """

    endpoints: tuple[Node, Node]
    cost: float
    paths: tuple[tuple[Node, ...], ...] = field(default=())
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def distances(h: Hierarchy, source: Node, cap: Optional[float] = None,
              targets: Optional[Iterable[Node]] = None) -> dict[Node, float]:
    """Undirected shortest-path costs from ``source``.

    With ``cap`` the search frontier never grows past that cost; with
    ``targets`` it stops once all of them are settled.
    """
    h.check(source)
    return _dijkstra(source, h.neighbors, cap=cap, stop=targets)


def shortest_paths(h: Hierarchy, a: Node, b: Node, cap: Optional[float] = None) -> PathSet:
    h.check(a)
    h.check(b)
    dist = _dijkstra(a, h.neighbors, cap=cap, stop=[b])
    if b not in dist:
        if cap is not None and b in _dijkstra(a, h.neighbors, stop=[b]):
            return PathSet((a, b), math.inf, (), "exceeds_cap")
        return PathSet((a, b), math.inf, (), "unreachable")
    target = dist[b]

    # walk back from b over edges that sit on some shortest path
    def preds(n):
        return [m for m, w in h.neighbors(n)
                if m in dist and abs(dist[m] + w - dist[n]) <= _EPS]

    paths = []
    stack = [(b, (b,))]
    while stack:
        n, suffix = stack.pop()
        if n == a:
            paths.append(suffix)
            continue
        for m in preds(n):
            stack.append((m, (m,) + suffix))
    return PathSet((a, b), target, tuple(sorted(paths)), "ok")


def path_cost(h: Hierarchy, path: tuple[Node, ...]) -> float:
    total = 0.0
    for u, v in zip(path, path[1:]):
        total += h._weights[(u, v)] if (u, v) in h._weights else h._weights[(v, u)]
    return total


# -- lowest common ancestors -----------------------------------------------
# LCAs are apexes of cheapest "up then down" paths, i.e. of paths through a
# common ancestor-or-self; on trees this is the classic LCA.

def ancestor_path_cost(h: Hierarchy, a: Node, b: Node) -> tuple[float, frozenset]:
    """Cheapest cost of a path a -> c <- b through a common ancestor-or-self c.

    Returns ``(cost, apexes)``; ``(inf, frozenset())`` when a and b share no
    ancestor.
    """
    da, db = h.up_distances(a), h.up_distances(b)
    if len(db) < len(da):
        da, db = db, da
    best = math.inf
    apexes: list[Node] = []
    for c, d1 in da.items():
        d2 = db.get(c)
        if d2 is None:
            continue
        d = d1 + d2
        if d < best - _EPS:
            best, apexes = d, [c]
        elif d <= best + _EPS:
            apexes.append(c)
    return best, frozenset(apexes)


def lca_pair(h: Hierarchy, a: Node, b: Node) -> frozenset:
    h.check(a)
    h.check(b)
    cost, apexes = ancestor_path_cost(h, a, b)
    if not apexes:
        raise Unreachable(f"{a} and {b} share no ancestor")
    return apexes


def upward_paths(h: Hierarchy, node: Node, ancestor: Node) -> tuple[tuple[Node, ...], ...]:
    """All cheapest child->parent chains from ``node`` up to ``ancestor``."""
    up = h.up_distances(node)
    if ancestor not in up:
        raise Unreachable(f"{ancestor} is not an ancestor of {node}")
    w = h._weights
    paths = []
    stack = [(ancestor, (ancestor,))]
    while stack:
        n, tail = stack.pop()
        if n == node:
            paths.append(tuple(reversed(tail)))
            continue
        for c in h.children(n):
            dc = up.get(c)
            if dc is not None and abs(dc + w[(n, c)] - up[n]) <= _EPS:
                stack.append((c, tail + (c,)))
    return tuple(sorted(paths))


@dataclass(frozen=True)
class LcaResult:
    query: tuple[Node, frozenset]
    s_best: frozenset
    lcas: frozenset
    cost: float = math.inf


def lca_of_set(h: Hierarchy, n: Node, others: Iterable[Node]) -> LcaResult:
    """Members of ``others`` closest to n (through a common ancestor) and their LCAs."""
    others = frozenset(others)
    if not others:
        raise ValueError("lca_of_set needs a nonempty set")
    h.check(n)
    for s in others:
        h.check(s)
    best = math.inf
    scored = []
    for s in others:
        cost, apexes = ancestor_path_cost(h, n, s)
        scored.append((s, cost, apexes))
        best = min(best, cost)
    if best == math.inf:
        return LcaResult((n, others), frozenset(), frozenset(), math.inf)
    s_best = [s for s, c, _ in scored if c <= best + _EPS]
    lcas = frozenset().union(*(a for s, c, a in scored if c <= best + _EPS))
    return LcaResult((n, others), frozenset(s_best), lcas, best)
