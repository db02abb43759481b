"""Class pairing as an integral minimum-cost flow with capacity intervals.

Predicted classes P_1..P_M and true classes T_1..T_N are joined through a
source, a sink, a default predicted class DP and a default true class DT.
Lower capacity bounds are removed with the usual excess/deficit
transformation and the resulting network is solved by successive shortest
augmenting paths with vertex potentials, which keeps every flow integral.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Hashable, Optional, Sequence

SOURCE, SINK, DP, DT = "source", "sink", "DP", "DT"


class InfeasibleFlow(RuntimeError):
    pass


@dataclass(frozen=True)
class CostMatrix:
    """Pairing costs, (M+1) x (N+1); the last row/column are the defaults.

    ``math.inf`` marks a forbidden pair (no edge is built for it).
    """

    costs: tuple[tuple[float, ...], ...]
    default_cost: float

    def __post_init__(self):
        rows = len(self.costs)
        if rows == 0:
            raise ValueError("cost matrix needs at least the default row")
        width = len(self.costs[0])
        if width == 0 or any(len(r) != width for r in self.costs):
            raise ValueError("ragged cost matrix")
        if any(c < 0 or math.isnan(c) for r in self.costs for c in r):
            raise ValueError("pairing costs must be non-negative")

    @property
    def m(self) -> int:
        return len(self.costs) - 1

    @property
    def n(self) -> int:
        return len(self.costs[0]) - 1

    @classmethod
    def from_pairs(cls, pair_costs: Sequence[Sequence[float]], d_max: float,
                   n: Optional[int] = None) -> "CostMatrix":
        """Wrap an M x N matrix with default row/column priced at ``d_max``."""
        m = len(pair_costs)
        if n is None:
            n = len(pair_costs[0]) if m else 0
        rows = [tuple(float(c) for c in row) + (float(d_max),) for row in pair_costs]
        rows.append((float(d_max),) * n + (0.0,))
        return cls(tuple(rows), float(d_max))

    def pair(self, i: int, j: int) -> float:
        return self.costs[i][j]


@dataclass(frozen=True)
class FlowEdge:
    tail: Hashable
    head: Hashable
    lower: int
    upper: int
    cost: float = 0.0


@dataclass(frozen=True)
class PairingNetwork:
    vertices: tuple
    edges: tuple[FlowEdge, ...]
    bounds: tuple[int, int, int, int]
    m: int
    n: int

    def edge_index(self, tail, head) -> int:
        for idx, e in enumerate(self.edges):
            if e.tail == tail and e.head == head:
                return idx
        raise KeyError((tail, head))


@dataclass
class FlowResult:
    flow: dict[int, int]
    total_cost: float
    pairs: set[tuple[int, int]] = field(default_factory=set)
    to_default_true: dict[int, int] = field(default_factory=dict)
    from_default_pred: dict[int, int] = field(default_factory=dict)


def pred_vertex(i: int):
    return ("P", i)


def true_vertex(j: int):
    return ("T", j)


def build_pairing_network(matrix: CostMatrix, alpha_p: int, beta_p: int,
                          alpha_t: int, beta_t: int) -> PairingNetwork:
    """The generic pairing network for the given per-class pairing bounds."""
    for v in (alpha_p, beta_p, alpha_t, beta_t):
        if int(v) != v or v < 0:
            raise ValueError("pairing bounds must be non-negative integers")
    if alpha_p > beta_p or alpha_t > beta_t:
        raise ValueError("lower pairing bound exceeds upper bound")
    m, n = matrix.m, matrix.n
    edges: list[FlowEdge] = []
    for i in range(m):
        edges.append(FlowEdge(SOURCE, pred_vertex(i), alpha_p, beta_p))
    edges.append(FlowEdge(SOURCE, DP, 0, beta_t * n))
    for i in range(m):
        for j in range(n):
            c = matrix.costs[i][j]
            if c != math.inf:
                edges.append(FlowEdge(pred_vertex(i), true_vertex(j), 0, 1, c))
        if matrix.costs[i][n] != math.inf:
            edges.append(FlowEdge(pred_vertex(i), DT, 0, beta_p, matrix.costs[i][n]))
    for j in range(n):
        if matrix.costs[m][j] != math.inf:
            edges.append(FlowEdge(DP, true_vertex(j), 0, beta_t, matrix.costs[m][j]))
    for j in range(n):
        edges.append(FlowEdge(true_vertex(j), SINK, alpha_t, beta_t))
    edges.append(FlowEdge(DT, SINK, 0, beta_p * m))
    edges.append(FlowEdge(SINK, SOURCE, 0, beta_t * n + beta_p * m))
    vertices = (SOURCE, SINK, *(pred_vertex(i) for i in range(m)), *(true_vertex(j) for j in range(n)), DP, DT)
    return PairingNetwork(vertices, tuple(edges), (alpha_p, beta_p, alpha_t, beta_t), m, n)


class _Residual:
    __slots__ = ("head", "cap", "cost", "adj")

    def __init__(self, n_vertices: int):
        self.head: list[int] = []
        self.cap: list[int] = []
        self.cost: list[float] = []
        self.adj: list[list[int]] = [[] for _ in range(n_vertices)]

    def add(self, u: int, v: int, cap: int, cost: float) -> int:
        idx = len(self.head)
        self.head += [v, u]
        self.cap += [cap, 0]
        self.cost += [cost, -cost]
        self.adj[u].append(idx)
        self.adj[v].append(idx + 1)
        return idx


def _min_cost_flow(g: _Residual, s: int, t: int, need: int) -> int:
    """Push up to ``need`` units s->t along cheapest paths; returns units sent.

    All original costs are non-negative, so zero potentials are valid to
    start with and reduced costs stay non-negative throughout.
    """
    n = len(g.adj)
    potential = [0.0] * n
    sent = 0
    while sent < need:
        dist = [math.inf] * n
        via = [-1] * n
        dist[s] = 0.0
        heap = [(0.0, s)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            pu = potential[u]
            for e in g.adj[u]:
                if g.cap[e] <= 0:
                    continue
                v = g.head[e]
                nd = d + g.cost[e] + pu - potential[v]
                if nd < dist[v] - 1e-12:
                    dist[v] = nd
                    via[v] = e
                    heapq.heappush(heap, (nd, v))
        if dist[t] == math.inf:
            break
        for v in range(n):
            if dist[v] < math.inf:
                potential[v] += dist[v]
        push = need - sent
        v = t
        while v != s:
            e = via[v]
            push = min(push, g.cap[e])
            v = g.head[e ^ 1]
        v = t
        while v != s:
            e = via[v]
            g.cap[e] -= push
            g.cap[e ^ 1] += push
            v = g.head[e ^ 1]
        sent += push
    return sent


def solve_min_cost_flow(net: PairingNetwork) -> FlowResult:
    """Minimum-cost feasible circulation of ``net`` (integral)."""
    index = {v: i for i, v in enumerate(net.vertices)}
    super_s, super_t = len(index), len(index) + 1
    g = _Residual(len(index) + 2)
    excess = [0] * len(index)
    handles = []
    base_cost = 0.0
    for e in net.edges:
        if e.lower > e.upper:
            raise InfeasibleFlow(f"edge {e.tail}->{e.head} has empty interval")
        u, v = index[e.tail], index[e.head]
        handles.append(g.add(u, v, e.upper - e.lower, e.cost))
        if e.lower:
            excess[v] += e.lower
            excess[u] -= e.lower
            base_cost += e.cost * e.lower
    need = 0
    for i, x in enumerate(excess):
        if x > 0:
            g.add(super_s, i, x, 0.0)
            need += x
        elif x < 0:
            g.add(i, super_t, -x, 0.0)
    if _min_cost_flow(g, super_s, super_t, need) < need:
        raise InfeasibleFlow("no flow satisfies the capacity lower bounds")

    flow: dict[int, int] = {}
    total = base_cost
    result = FlowResult(flow, 0.0)
    for idx, (e, h) in enumerate(zip(net.edges, handles)):
        phi = e.lower + g.cap[h ^ 1]
        flow[idx] = phi
        total += e.cost * (phi - e.lower)
        if phi:
            if isinstance(e.tail, tuple) and isinstance(e.head, tuple):
                result.pairs.add((e.tail[1], e.head[1]))
            elif e.head == DT:
                result.to_default_true[e.tail[1]] = phi
            elif e.tail == DP:
                result.from_default_pred[e.head[1]] = phi
    result.total_cost = total
    return result


def solve_pairing(matrix: CostMatrix, alpha_p: int, beta_p: int, alpha_t: int, beta_t: int) -> FlowResult:
    return solve_min_cost_flow(build_pairing_network(matrix, alpha_p, beta_p, alpha_t, beta_t))


def check_flow(net: PairingNetwork, result: FlowResult, tol: float = 1e-9) -> None:
    """Assert conservation, capacity bounds, integrality and the cost identity."""
    balance = dict.fromkeys(net.vertices, 0)
    total = 0.0
    for idx, e in enumerate(net.edges):
        phi = result.flow[idx]
        if int(phi) != phi:
            raise AssertionError(f"non-integral flow on {e}")
        if not e.lower <= phi <= e.upper:
            raise AssertionError(f"flow {phi} outside [{e.lower};{e.upper}] on {e}")
        balance[e.tail] -= phi
        balance[e.head] += phi
        total += e.cost * phi
    bad = {v: b for v, b in balance.items() if b}
    if bad:
        raise AssertionError(f"conservation violated at {bad}")
    if abs(total - result.total_cost) > tol:
        raise AssertionError(f"total cost {result.total_cost} != sum {total}")


def nearest_pairing_cost(matrix: CostMatrix) -> float:
    """Every class independently takes its nearest counterpart or its default.

    Each chosen pairing edge is charged once.  This upper-bounds the
    many-to-many optimum and matches it whenever no class would rather share
    a slightly dearer edge with another class.
    """
    m, n = matrix.m, matrix.n
    chosen: set[tuple[int, int]] = set()
    total = 0.0
    for i in range(m):
        j = min(range(n + 1), key=lambda j: (matrix.costs[i][j], j))
        if matrix.costs[i][j] == math.inf:
            raise InfeasibleFlow(f"predicted class {i} cannot be paired")
        if j == n:
            total += matrix.costs[i][n]
        else:
            chosen.add((i, j))
    for j in range(n):
        i = min(range(m + 1), key=lambda i: (matrix.costs[i][j], i))
        if matrix.costs[i][j] == math.inf:
            raise InfeasibleFlow(f"true class {j} cannot be paired")
        if i == m:
            total += matrix.costs[m][j]
        else:
            chosen.add((i, j))
    return total + sum(matrix.costs[i][j] for i, j in chosen)
