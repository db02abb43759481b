"""Exhaustive reference implementations, used only by the test suite.

Graph queries go through networkx and the pairing search through numpy so
that no code is shared with the production solvers beyond the input types.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import networkx as nx
import numpy as np

from hiereval.flow import CostMatrix


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class OracleBudget:
    max_pred: int = 4
    max_true: int = 4
    max_nodes: int = 20
    max_labels: int = 6
    max_combinations: int = 200_000
    seconds: float = 10.0


DEFAULT_BUDGET = OracleBudget()


# -- pairing ---------------------------------------------------------------
def brute_force_pairing(matrix: CostMatrix, bounds, budget: OracleBudget = DEFAULT_BUDGET) -> float:
    """Minimum of the pairing objective over every 0/1 pairing matrix.

    Default-class usage is not enumerated: for a fixed pairing matrix the
    cheapest feasible default count per class is its deficit below the
    lower bound, since default costs are non-negative.
    """
    alpha_p, beta_p, alpha_t, beta_t = bounds
    m, n = matrix.m, matrix.n
    if m > budget.max_pred or n > budget.max_true:
        raise BudgetExceeded(f"{m}x{n} pairing exceeds the {budget.max_pred}x{budget.max_true} budget")
    if 2 ** (m * n) > budget.max_combinations:
        raise BudgetExceeded(f"2^{m * n} pairing matrices exceed the combination budget")
    costs = np.array(matrix.costs, dtype=float)
    pair = costs[:m, :n]
    allowed = np.isfinite(pair).ravel()
    cells = m * n
    grid = ((np.arange(2 ** cells)[:, None] >> np.arange(cells)) & 1).astype(bool)
    grid = grid[~(grid & ~allowed).any(axis=1)]
    x = grid.reshape(-1, m, n)
    rows, cols = x.sum(axis=2), x.sum(axis=1)
    d_rows = np.maximum(0, alpha_p - rows)
    d_cols = np.maximum(0, alpha_t - cols)
    # alpha <= beta, so topping a class up with defaults never breaks its upper bound
    feasible = (rows <= beta_p).all(axis=1) & (cols <= beta_t).all(axis=1)
    default_true, default_pred = costs[:m, n], costs[m, :n]
    # a deficit on a forbidden default makes that assignment infeasible
    feasible &= ~((d_rows > 0) & ~np.isfinite(default_true)).any(axis=1)
    feasible &= ~((d_cols > 0) & ~np.isfinite(default_pred)).any(axis=1)
    if not feasible.any():
        return math.inf
    safe_pair = np.where(np.isfinite(pair), pair, 0.0)
    total = (x * safe_pair).sum(axis=(1, 2))
    total = total + (d_rows * np.where(np.isfinite(default_true), default_true, 0.0)).sum(axis=1)
    total = total + (d_cols * np.where(np.isfinite(default_pred), default_pred, 0.0)).sum(axis=1)
    return float(total[feasible].min())


def nx_distances(edges, source) -> dict:
    g = nx.Graph()
    g.add_weighted_edges_from(edges)
    g.add_node(source)
    return nx.single_source_dijkstra_path_length(g, source)


# -- minimal LCA graphs ----------------------------------------------------
@dataclass
class OracleGraphs:
    f_lca: float
    p_lca: float
    r_lca: float
    g_t: frozenset
    g_p: frozenset
    chosen: frozenset
    witnesses: list


class _Dag:
    def __init__(self, hierarchy):
        self.g = nx.DiGraph()
        self.g.add_nodes_from(hierarchy.nodes)
        for p, c, w in hierarchy.edges:
            self.g.add_edge(p, c, weight=w)
        self.up = self.g.reverse(copy=True)  # child -> parent

    def anc_or_self(self, n):
        return nx.descendants(self.up, n) | {n}

    def up_len(self, n):
        return nx.single_source_dijkstra_path_length(self.up, n)

    def up_paths(self, n, a):
        return sorted(tuple(p) for p in nx.all_shortest_paths(self.up, n, a, weight="weight"))


def _prune(dag: _Dag, nodes):
    return frozenset(n for n in nodes if not (nx.descendants(dag.g, n) & set(nodes)))


def _lca_table(dag: _Dag, labels, others):
    """label -> (lca set, [(partner, apex), ...])."""
    table = {}
    for n in labels:
        du = dag.up_len(n)
        scored = []
        for o in others:
            do = dag.up_len(o)
            common = set(du) & set(do)
            if not common:
                continue
            cost = min(du[c] + do[c] for c in common)
            scored.append((cost, o, sorted(c for c in common if abs(du[c] + do[c] - cost) < 1e-9)))
        if not scored:
            table[n] = (frozenset(), [])
            continue
        best = min(s[0] for s in scored)
        links = [(o, a) for cost, o, apexes in scored if abs(cost - best) < 1e-9 for a in apexes]
        table[n] = (frozenset(a for _, a in links), links)
    return table


def _f(g_t, g_p):
    common = len(g_t & g_p)
    p = common / len(g_p) if g_p else 0.0
    r = common / len(g_t) if g_t else 0.0
    return (2 * p * r / (p + r) if p + r else 0.0), p, r


def brute_force_minimal_graphs(hierarchy, labels, budget: OracleBudget = DEFAULT_BUDGET) -> OracleGraphs:
    """Best F over every inclusion-minimal LCA cover and every path choice."""
    start = time.monotonic()
    dag = _Dag(hierarchy)
    truth = _prune(dag, labels.truth)
    pred = _prune(dag, labels.predicted)
    if len(truth) + len(pred) > budget.max_labels:
        raise BudgetExceeded("too many labels for exhaustive search")
    sides = {"t": (sorted(truth), _lca_table(dag, truth, pred)),
             "p": (sorted(pred), _lca_table(dag, pred, truth))}
    other = {"t": "p", "p": "t"}

    ext = {"t": set(truth), "p": set(pred)}
    for s, (_, table) in sides.items():
        for n, (lcas, links) in table.items():
            for a in lcas:
                for path in dag.up_paths(n, a):
                    ext[s].update(path)
            for o, a in links:
                for path in dag.up_paths(o, a):
                    ext[other[s]].update(path)
    if len(ext["t"] | ext["p"]) > budget.max_nodes:
        raise BudgetExceeded("extended graphs exceed the node budget")

    requirements = [lcas for s in sides for lcas, _ in sides[s][1].values() if lcas]
    universe = sorted(frozenset().union(*requirements)) if requirements else []

    def covers(chosen):
        return all(r & chosen for r in requirements)

    covers_all = []
    for size in range(len(universe) + 1):
        for combo in itertools.combinations(universe, size):
            c = frozenset(combo)
            if covers(c) and all(not covers(c - {a}) for a in c):
                covers_all.append(c)
    if not covers_all:
        covers_all = [frozenset()]

    best = None
    witnesses = []
    tried = 0
    for chosen in covers_all:
        own_slots = []
        for s in ("t", "p"):
            names, table = sides[s]
            for n in names:
                hits = sorted(table[n][0] & chosen)
                if not hits:
                    own_slots.append((s, [(n,)]))
                for a in hits:
                    own_slots.append((s, dag.up_paths(n, a)))
        partner_slots = []
        for s in ("t", "p"):
            for a in sorted(chosen):
                cands = set()
                for _n, (_l, links) in sides[other[s]][1].items():
                    for o, ap in links:
                        if ap == a:
                            cands.update(dag.up_paths(o, a))
                partner_slots.append((s, a, sorted(cands)))
        for own in itertools.product(*(c for _, c in own_slots)):
            nodes = {"t": set(), "p": set()}
            for (s, _), path in zip(own_slots, own):
                nodes[s].update(path)
            options = [([None] if a in nodes[s] else []) + cands for s, a, cands in partner_slots]
            for partner in itertools.product(*options):
                tried += 1
                if tried > budget.max_combinations or time.monotonic() - start > budget.seconds:
                    raise BudgetExceeded("path combinations exceed the budget")
                g = {"t": set(nodes["t"]), "p": set(nodes["p"])}
                for (s, _a, _c), path in zip(partner_slots, partner):
                    if path is not None:
                        g[s].update(path)
                if not (chosen <= g["t"] and chosen <= g["p"]):
                    continue
                f, p, r = _f(g["t"], g["p"])
                cand = (f, frozenset(g["t"]), frozenset(g["p"]), chosen, p, r)
                if best is None or f > best[0] + 1e-12:
                    best, witnesses = cand, [(cand[1], cand[2])]
                elif abs(f - best[0]) <= 1e-12:
                    witnesses.append((cand[1], cand[2]))
    f, g_t, g_p, chosen, p, r = best
    return OracleGraphs(f, p, r, g_t, g_p, chosen, witnesses)
