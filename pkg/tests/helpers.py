"""Shared builders for the test suite."""

from __future__ import annotations

from fractions import Fraction

import oracle

from linktrace import (
    DesignConfig,
    OrderedSample,
    PopulationGraph,
    Reordering,
    collect_observed,
    reduce_observed,
)
from linktrace.sampling import ActiveSetPolicy

POLICY = ActiveSetPolicy.FULL_SAMPLE

RING_EDGES = [(i, (i + 1) % 10) for i in range(10)]
# one two-node island plus a chain; the island sample exhausts its links
ISLAND_EDGES = [(0, 1)] + [(i, i + 1) for i in range(2, 9)]


def fig_graph() -> PopulationGraph:
    return PopulationGraph(8, oracle.FIG_EDGES)


def app_graph() -> PopulationGraph:
    return PopulationGraph(8, oracle.APP_EDGES)


def ring_graph() -> PopulationGraph:
    return PopulationGraph(10, RING_EDGES)


def island_graph() -> PopulationGraph:
    return PopulationGraph(10, ISLAND_EDGES)


def make_observed(graph, orders, n0s, targets=None, truncated=None,
                  jumps=None, forced=None):
    """Observed data for hand-picked orderings on a known graph."""
    if targets is None:
        targets = [len(u) for u in orders]
    samples = []
    for i, units in enumerate(orders):
        kwargs = {}
        if jumps is not None:
            kwargs["jumps"] = tuple(jumps[i])
        if forced is not None:
            kwargs["forced"] = tuple(forced[i])
        if truncated is not None:
            kwargs["truncated"] = truncated[i]
        samples.append(OrderedSample(units=tuple(units), n_initial=n0s[i],
                                     size_target=targets[i], **kwargs))
    return collect_observed(graph, samples)


def fig_observed():
    return make_observed(fig_graph(), [(0, 1, 2), (0, 3, 4)], [1, 1])


def app_jump_observed():
    """The jump-design survey on the graph with the isolated node."""
    return make_observed(app_graph(), [(0, 1, 2), (4, 3, 0)], [1, 1],
                         jumps=[(0, 0, 1), (0, 1, 0)],
                         forced=[(0, 0, 0), (0, 1, 0)])


def app_jump_reduced(trace_prob=0.7):
    design = DesignConfig(initial_sizes=(1, 1), final_sizes=(3, 3),
                          trace_prob=trace_prob, active_set=POLICY)
    return reduce_observed(app_jump_observed(), design)


def app_pure_trace_observed():
    # same survey recorded under d=1: the only jump is the forced one
    return make_observed(app_graph(), [(0, 1, 2), (4, 3, 0)], [1, 1],
                         jumps=[(0, 0, 0), (0, 1, 0)],
                         forced=[(0, 0, 0), (0, 1, 0)])


def app_pure_trace_reduced():
    design = DesignConfig(initial_sizes=(1, 1), final_sizes=(3, 3),
                          trace_prob=1.0, active_set=POLICY)
    return reduce_observed(app_pure_trace_observed(), design)


def reordering(orders, n0s, jumps=None, forced=None):
    kwargs = {}
    if jumps is not None:
        kwargs["jumps"] = tuple(tuple(j) for j in jumps)
    if forced is not None:
        kwargs["forced"] = tuple(tuple(h) for h in forced)
    return Reordering(orders=tuple(tuple(o) for o in orders),
                      initial_sizes=tuple(n0s), **kwargs)


# ---------------------------------------------------------------------------
# enumerable instances used for exact-vs-chain comparisons

def _md_point(adj):
    deg = oracle.degree_map(adj)

    def point(sets):
        return oracle.mean_degree(deg, frozenset().union(*sets))

    return point


def _md_var(adj):
    deg = oracle.degree_map(adj)

    def var(sets):
        n_hat = oracle.chapman(len(sets[0]), len(sets[1]),
                               len(sets[0] & sets[1]))
        return oracle.mean_degree_var(deg, frozenset().union(*sets), n_hat)

    return var


class Instance:
    """One enumerable survey with its oracle-side description."""

    def __init__(self, name, graph, adj, orders, n0s, targets,
                 truncated, stat_name):
        self.name = name
        self.graph = graph
        self.adj = adj
        self.orders = orders
        self.n0s = n0s
        self.targets = targets
        self.truncated = truncated
        self.stat_name = stat_name

    def observed(self):
        return make_observed(self.graph, self.orders, self.n0s,
                             targets=self.targets, truncated=self.truncated)

    def masses(self):
        return oracle.tuple_masses(self.adj, self.orders, self.n0s,
                                   truncated=self.truncated)

    def oracle_estimators(self):
        table = {
            "chapman": (oracle.chapman_on_sets, oracle.seber_on_sets),
            "chao-lb": (oracle.chao_lb, oracle.chao_var),
            "mean-degree": (_md_point(self.adj), _md_var(self.adj)),
        }
        return table[self.stat_name]

    def oracle_exact(self):
        masses = self.masses()
        point_fn, var_fn = self.oracle_estimators()
        point = oracle.rb_average(masses, self.n0s, point_fn)
        mean_var, spread = oracle.rb_spread_variance(masses, self.n0s,
                                                     point_fn, var_fn)
        return point, mean_var - spread, mean_var


def enumerable_instances():
    ring_adj = oracle.adjacency(10, RING_EDGES)
    island_adj = oracle.adjacency(10, ISLAND_EDGES)
    return [
        Instance("two-sample shared seed", fig_graph(), oracle.FIG_ADJ,
                 [(0, 1, 2), (0, 3, 4)], [1, 1], [3, 3], None, "chapman"),
        Instance("two-sample disjoint seeds", fig_graph(), oracle.FIG_ADJ,
                 [(1, 2, 7), (3, 6, 2)], [1, 1], [3, 3], None, "chapman"),
        Instance("ring overlap", ring_graph(), ring_adj,
                 [(0, 1, 2, 3), (2, 3, 4, 5)], [2, 2], [4, 4], None,
                 "chapman"),
        Instance("three-sample", fig_graph(), oracle.FIG_ADJ,
                 [(0, 1, 2), (0, 3, 4), (6, 2, 7)], [1, 1, 1], [3, 3, 3],
                 None, "chao-lb"),
        Instance("island truncated", island_graph(), island_adj,
                 [(0, 1), (2, 3, 4)], [1, 1], [3, 3], (True, False),
                 "chapman"),
    ]


def rel_err(got, want):
    want = float(want)
    if want == 0.0:
        return abs(got)
    return abs(got - want) / abs(want)


def paired_variance_gap(prelim, improved):
    """(var gap estimate, its standard error) for paired replications.

    Gap is Var(prelim) - Var(improved), estimated from centered squares;
    positive means the averaging helped.
    """
    import numpy as np

    prelim = np.asarray(prelim, dtype=float)
    improved = np.asarray(improved, dtype=float)
    a = (prelim - prelim.mean()) ** 2
    b = (improved - improved.mean()) ** 2
    d = a - b
    return float(d.mean()), float(d.std(ddof=1) / len(d) ** 0.5)
