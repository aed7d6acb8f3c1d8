"""Independent brute-force reference computations for the test suite.

Everything here is written against the definitions only: exact rational
arithmetic, naive full scans over adjacency dicts, no imports from the
package under test.  Deliberately slow and obvious.

Graphs are plain ``dict[int, set[int]]`` (symmetric).  Orders are tuples
of node ids; the first ``n0`` entries are the initial set.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

# ---------------------------------------------------------------------------
# graphs


def adjacency(n_nodes: int, edges) -> dict[int, set[int]]:
    adj = {i: set() for i in range(n_nodes)}
    for i, j in edges:
        adj[i].add(j)
        adj[j].add(i)
    return adj


def degree_map(adj) -> dict[int, int]:
    return {u: len(nbrs) for u, nbrs in adj.items()}


# the two worked-example populations: eight people A..H mapped to 0..7
A, B, C, D, E, F, G, H = range(8)
FIG_EDGES = [(A, B), (A, D), (B, C), (B, F), (C, G), (C, H), (D, E), (D, G)]
# second example removes D's links to E and G, isolating E
APP_EDGES = [(A, B), (A, D), (B, C), (B, F), (C, G), (C, H)]

FIG_ADJ = adjacency(8, FIG_EDGES)
APP_ADJ = adjacency(8, APP_EDGES)


# ---------------------------------------------------------------------------
# selection probabilities, replayed naively from the definitions


def links_out(adj, current: set) -> int:
    """Number of links from ``current`` to nodes outside it."""
    return sum(len(adj[u] - current) for u in current)


def links_into(adj, current: set, unit) -> int:
    return len(adj[unit] & current)


def order_weight(adj, order, n0) -> Fraction:
    """Product of adaptive-step probabilities of one ordered sample.

    The no-jump design's order probability without the initial
    simple-random-sample factor.  Zero when a step is untraceable.
    """
    current = set(order[:n0])
    weight = Fraction(1)
    for unit in order[n0:]:
        w_plus = links_out(adj, current)
        w_i = links_into(adj, current, unit)
        if w_i == 0:
            return Fraction(0)
        weight *= Fraction(w_i, w_plus)
        current.add(unit)
    return weight


def full_order_prob(adj, order, n0, n_population) -> Fraction:
    """No-jump order probability including the 1/C(N, n0) initial factor."""
    return order_weight(adj, order, n0) / math.comb(n_population, n0)


def jump_order_prob(adj, order, n0, jumps, forced, n_population, d: Fraction) -> Fraction:
    """Jump-design order probability for one sample with known J/H flags.

    Traced step: d * w_i / w_plus.  Free jump: (1-d) / (N - t).  Forced
    jump: 1 / (N - t), with t the number of units already selected.
    Returns zero for flag assignments the design cannot produce.
    """
    prob = Fraction(1, math.comb(n_population, n0))
    current = set(order[:n0])
    for t in range(n0, len(order)):
        unit = order[t]
        w_plus = links_out(adj, current)
        w_i = links_into(adj, current, unit)
        if forced[t] and (not jumps[t] or w_plus > 0):
            return Fraction(0)
        if w_plus == 0 and not forced[t]:
            return Fraction(0)
        if jumps[t]:
            step = Fraction(1, n_population - t)
            if not forced[t]:
                step *= 1 - d
        else:
            if w_i == 0:
                return Fraction(0)
            step = d * Fraction(w_i, w_plus)
        prob *= step
        current.add(unit)
    return prob


# ---------------------------------------------------------------------------
# reordering enumeration


def all_orderings(members, n0):
    """Every initial n0-set crossed with every permutation of the rest."""
    members = tuple(members)
    for init in itertools.combinations(members, n0):
        rest = tuple(u for u in members if u not in init)
        for tail in itertools.permutations(rest):
            yield init + tail


def sample_truncation_ok(adj, members, truncated) -> bool:
    # a truncated sample must have exhausted its links
    return not truncated or links_out(adj, set(members)) == 0


def tuple_masses(adj, samples, n0s, truncated=None):
    """Unnormalized weight of every positive-weight reordering tuple.

    ``samples`` holds per-sample member collections.  Returns
    ``dict[tuple_of_orders, Fraction]`` over the full cross product,
    zero-weight tuples omitted.
    """
    if truncated is None:
        truncated = (False,) * len(samples)
    per_sample = []
    for members, n0, trunc in zip(samples, n0s, truncated):
        if not sample_truncation_ok(adj, members, trunc):
            return {}
        weights = {}
        for order in all_orderings(members, n0):
            w = order_weight(adj, order, n0)
            if w > 0:
                weights[order] = w
        per_sample.append(weights)
    masses = {}
    for combo in itertools.product(*(w.items() for w in per_sample)):
        orders = tuple(item[0] for item in combo)
        weight = Fraction(1)
        for item in combo:
            weight *= item[1]
        masses[orders] = weight
    return masses


def conditional(masses):
    """Normalize a mass dict into exact conditional probabilities."""
    total = sum(masses.values())
    return {key: w / total for key, w in masses.items()}


def initial_sets(orders, n0s):
    return tuple(frozenset(order[:n0]) for order, n0 in zip(orders, n0s))


def grouped_conditional(masses, n0s):
    """Conditional probability of each initial-set tuple."""
    out = {}
    for orders, p in conditional(masses).items():
        key = initial_sets(orders, n0s)
        out[key] = out.get(key, Fraction(0)) + p
    return out


def rb_average(masses, n0s, estimator):
    """Exact conditional expectation of an initial-set statistic."""
    cond = conditional(masses)
    return sum(p * estimator(initial_sets(orders, n0s))
               for orders, p in cond.items())


def rb_spread_variance(masses, n0s, estimator, var_estimator):
    """(mean variance-estimate, spread of points); difference is the rb variance."""
    cond = conditional(masses)
    mean = rb_average(masses, n0s, estimator)
    mean_var = sum(p * var_estimator(initial_sets(orders, n0s))
                   for orders, p in cond.items())
    spread = sum(p * (estimator(initial_sets(orders, n0s)) - mean) ** 2
                 for orders, p in cond.items())
    return mean_var, spread


# ---------------------------------------------------------------------------
# jump-design consistency: enumerate flag patterns


def feasible_flag_vectors(adj, order, n0, pure_trace=False):
    """All (J, H) flag pairs the jump design could record for this order."""
    options = [[((0,) * n0, (0,) * n0)]]
    current = set(order[:n0])
    for t in range(n0, len(order)):
        unit = order[t]
        w_plus = links_out(adj, current)
        w_i = links_into(adj, current, unit)
        here = []
        if w_plus == 0:
            here.append((1, 1))  # forced jump
        else:
            if w_i > 0:
                here.append((0, 0))  # traced
            if not pure_trace:
                here.append((1, 0))  # free jump
        if not here:
            return []
        options.append([(j, h) for j, h in here])
        current.add(unit)
    out = []
    first = options[0][0]
    for picks in itertools.product(*options[1:]):
        jumps = first[0] + tuple(p[0] for p in picks)
        forced = first[1] + tuple(p[1] for p in picks)
        out.append((jumps, forced))
    return out


def jump_tuple_masses(adj, samples, n0s, jump_totals, d: Fraction,
                      n_population) -> dict:
    """Full-probability mass of every consistent (orders, flags) pair.

    Consistency means the per-position jump counts summed over samples
    equal ``jump_totals``.  Probabilities are evaluated at the given
    population size; the conditional distribution over pairs must not
    depend on it.
    """
    pure = d == 1
    per_sample = []
    for members, n0 in zip(samples, n0s):
        entries = []
        for order in all_orderings(members, n0):
            for jumps, forced in feasible_flag_vectors(adj, order, n0, pure):
                p = jump_order_prob(adj, order, n0, jumps, forced,
                                    n_population, d)
                if p > 0:
                    entries.append((order, jumps, forced, p))
        per_sample.append(entries)
    length = max(len(order) for entries in per_sample
                 for order, _, _, _ in entries)
    masses = {}
    for combo in itertools.product(*per_sample):
        totals = [0] * length
        for order, jumps, _, _ in combo:
            for t, j in enumerate(jumps):
                totals[t] += j
        if tuple(totals) != tuple(jump_totals):
            continue
        key = tuple((order, jumps, forced) for order, jumps, forced, _ in combo)
        prob = Fraction(1)
        for _, _, _, p in combo:
            prob *= p
        masses[key] = prob
    return masses


# ---------------------------------------------------------------------------
# estimators, exact


def chapman(n1, n2, m) -> Fraction:
    return Fraction((n1 + 1) * (n2 + 1), m + 1) - 1


def seber(n1, n2, m) -> Fraction:
    return Fraction((n1 + 1) * (n2 + 1) * (n1 - m) * (n2 - m),
                    (m + 1) ** 2 * (m + 2))


def chapman_on_sets(sets) -> Fraction:
    return chapman(len(sets[0]), len(sets[1]), len(sets[0] & sets[1]))


def seber_on_sets(sets) -> Fraction:
    return seber(len(sets[0]), len(sets[1]), len(sets[0] & sets[1]))


def mean_degree(degrees, units) -> Fraction:
    units = list(units)
    return Fraction(sum(degrees[u] for u in units), len(units))


def mean_degree_var(degrees, units, n_hat: Fraction) -> Fraction:
    units = list(units)
    m = len(units)
    mean = mean_degree(degrees, units)
    s2 = sum((Fraction(degrees[u]) - mean) ** 2 for u in units) / (m - 1)
    fpc = max(1 - Fraction(m) / n_hat, Fraction(0)) if n_hat > 0 else Fraction(0)
    return fpc * s2 / m


def capture_frequencies(sets):
    counts = {}
    for s in sets:
        for u in s:
            counts[u] = counts.get(u, 0) + 1
    freq = [0] * len(sets)
    for c in counts.values():
        freq[c - 1] += 1
    return len(counts), tuple(freq)


def chao_lb(sets) -> Fraction:
    distinct, freq = capture_frequencies(sets)
    f1 = freq[0]
    f2 = freq[1] if len(freq) > 1 else 0
    if f2 > 0:
        return distinct + Fraction(f1 * f1, 2 * f2)
    return distinct + Fraction(f1 * (f1 - 1), 2)


def chao_var(sets) -> Fraction:
    distinct, freq = capture_frequencies(sets)
    f1 = freq[0]
    f2 = freq[1] if len(freq) > 1 else 0
    if f2 > 0:
        a = Fraction(f1, f2)
        return f2 * (a ** 4 / 4 + a ** 3 + a ** 2 / 2)
    if f1 == 0:
        return Fraction(0)
    n_hat = chao_lb(sets)
    return (Fraction(f1 * (f1 - 1), 2) + Fraction(f1 * (2 * f1 - 1) ** 2, 4)
            - Fraction(f1 ** 4) / (4 * n_hat))


def m0_loglik(k, n_total, distinct, n) -> float:
    kn = k * n
    value = math.lgamma(n + 1) - math.lgamma(n - distinct + 1)
    value += n_total * math.log(n_total / kn)
    if kn > n_total:
        value += (kn - n_total) * math.log1p(-n_total / kn)
    return value


def m0_scan(k, n_total, distinct, hi) -> int:
    """Argmax of the equal-catchability profile likelihood by full scan."""
    best, best_val = distinct, m0_loglik(k, n_total, distinct, distinct)
    for n in range(distinct + 1, hi + 1):
        val = m0_loglik(k, n_total, distinct, n)
        if val > best_val:
            best, best_val = n, val
    return best


# ---------------------------------------------------------------------------
# sampler outcome distribution (no-jump design)


def outcome_distribution(adj, n_population, n0, target):
    """Exact law of (initial set, traced tail) under the no-jump design."""
    out = {}
    base = Fraction(1, math.comb(n_population, n0))

    def extend(current, tail, prob):
        if len(current) == len(tail) + n0 and len(current) == target:
            key = (frozenset(current) - set(tail), tuple(tail))
            out[key] = out.get(key, Fraction(0)) + prob
            return
        w_plus = links_out(adj, current)
        if w_plus == 0:
            key = (frozenset(current) - set(tail), tuple(tail))
            out[key] = out.get(key, Fraction(0)) + prob
            return
        for unit in adj:
            if unit in current:
                continue
            w_i = links_into(adj, current, unit)
            if w_i:
                extend(current | {unit}, tail + [unit],
                       prob * Fraction(w_i, w_plus))

    for init in itertools.combinations(sorted(adj), n0):
        extend(set(init), [], base)
    return out


# ---------------------------------------------------------------------------
# candidate distribution of the reordering chain


def candidate_order_probs(adj_within, members, n0):
    """Exact candidate law over one sample's orderings.

    ``adj_within`` must be the adjacency restricted to the sample's
    members (the chain never sees anything else).  Members nobody inside
    links to are always placed in the initial set; remaining initial
    slots are a uniform choice; the tail is ordered by tracing among the
    not-yet-placed members.  Returns dict order -> Fraction; missing
    orders have candidate probability zero.  The total over all orders
    can fall short of 1: the deficit is the chance of stranding.
    """
    members = tuple(members)
    forced = [u for u in members if not (adj_within[u] & set(members))]
    if len(forced) > n0:
        raise ValueError("more forced members than initial slots")
    choices = math.comb(len(members) - len(forced), n0 - len(forced))
    out = {}
    for init in itertools.combinations(members, n0):
        if not set(forced) <= set(init):
            continue
        for tail in itertools.permutations(u for u in members if u not in init):
            prob = Fraction(1, choices)
            placed = set(init)
            ok = True
            for pos, unit in enumerate(tail):
                pool = tail[pos:]
                counts = {v: links_into(adj_within, placed, v) for v in pool}
                total = sum(counts.values())
                if counts[unit] == 0:
                    ok = False
                    break
                prob *= Fraction(counts[unit], total)
                placed.add(unit)
            if ok:
                out[init + tail] = prob
    return out


def restrict(adj, members):
    members = set(members)
    return {u: adj[u] & members for u in members}
