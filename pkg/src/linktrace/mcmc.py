"""Markov chain over reorderings when enumeration is out of reach.

An independence Metropolis-Hastings sampler targets the conditional
distribution of reorderings given the order-free summary.  Each
iteration proposes a complete fresh reordering of *all* samples from the
candidate distribution below, accepts or rejects it, and adds the
current reordering's estimate to the running average (the realized
ordering is the chain's start and is included).

Candidate distribution, per sample: members that no other member links
to are placed in the hypothetical initial set (nothing else could ever
trace them in); the remaining initial slots are filled uniformly at
random; the rest of the sample is then ordered by repeatedly tracing a
link from the current hypothetical sample, with probability
proportional to within-sample link counts.  A proposal that strands
untraceable members is assigned probability zero and rejected outright.

Acceptance uses selection weights only: the population-size terms of the
target cancel between numerator and denominator, so nothing here depends
on the unknown population size.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .estimators import ReorderStatistic
from .reorder import Reordering, SampleFrame, build_frames, _replay_weight
from .sampling import ActiveSetPolicy, ObservedData, ReducedData, reduce_observed

__all__ = ["ChainResult", "propose_candidate", "candidate_prob", "run_chain",
           "run_chain_multi"]


@dataclass(frozen=True)
class ChainResult:
    """Reordering-averaged estimate from one chain.

    ``variance`` is the averaged variance estimate minus the spread of
    the chain's point estimates; ``fallback`` marks the conservative
    replacement used when that difference came out negative.
    """

    point: float
    variance: float
    acceptance_rate: float
    n_iterations: int
    fallback: bool


def _py_rng(seed) -> random.Random:
    if isinstance(seed, random.Random):
        return seed
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return random.Random(int.from_bytes(ss.generate_state(4, np.uint32).tobytes(), "little"))


def _candidate_setup(frame: SampleFrame):
    # members eligible for the uniform part of the initial fill
    free = tuple(i for i in range(frame.size) if i not in set(frame.forced_locals))
    n_fill = frame.n_initial - len(frame.forced_locals)
    if n_fill < 0:
        raise ValueError("more never-nominated members than initial slots; "
                         "the summary cannot come from this design")
    set_factor = 1.0 / math.comb(len(free), frame.size - frame.n_initial)
    return free, set_factor


def _propose_one(frame: SampleFrame, free, set_factor, rng: random.Random):
    """One sample's candidate: (initial locals, tail locals, q_cand, q_design)."""
    deg = frame.degrees
    adj = frame.adj_masks
    pool = rng.sample(free, frame.size - frame.n_initial)
    cur_mask = (1 << frame.size) - 1
    sum_deg = frame.total_degree
    internal = frame.total_internal
    for e in pool:
        cur_mask ^= 1 << e
        internal -= 2 * (adj[e] & cur_mask).bit_count()
        sum_deg -= deg[e]
    initial = cur_mask
    q_cand = set_factor
    q_design = 1.0
    tail = []
    pool = list(pool)
    while pool:
        counts = [(adj[u] & cur_mask).bit_count() for u in pool]
        total = sum(counts)
        if total == 0:
            return None  # stranded: candidate assigns this path probability zero
        r = rng.randrange(total)
        acc = 0
        for idx, c in enumerate(counts):
            acc += c
            if r < acc:
                break
        u = pool.pop(idx)
        q_cand *= counts[idx] / total
        q_design *= counts[idx] / (sum_deg - internal)
        internal += 2 * counts[idx]
        sum_deg += deg[u]
        cur_mask |= 1 << u
        tail.append(u)
    return initial, tuple(tail), q_cand, q_design


def _initial_locals(mask: int) -> tuple[int, ...]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return tuple(out)


def propose_candidate(reduced: ReducedData, rng=None,
                      ) -> tuple[Reordering, float] | None:
    """Draw one candidate reordering tuple and its proposal probability.

    Returns None when the tracing stage strands an untraceable member,
    the zero-probability outcome a chain rejects.

    Args:
        reduced: order-free summary of a no-jump survey.
        rng: ``random.Random``, seed, or None.
    """
    if reduced.jump_design:
        raise ValueError("candidate reorderings are defined for the no-jump design")
    rng = _py_rng(rng)
    frames = build_frames(reduced)
    orders = []
    prob = 1.0
    for frame in frames:
        free, set_factor = _candidate_setup(frame)
        drawn = _propose_one(frame, free, set_factor, rng)
        if drawn is None:
            return None
        initial, tail, q_cand, _ = drawn
        locs = _initial_locals(initial) + tail
        orders.append(tuple(frame.members[i] for i in locs))
        prob *= q_cand
    return Reordering(tuple(orders), reduced.initial_sizes), prob


def candidate_prob(reduced: ReducedData, reordering: Reordering) -> float:
    """Probability that :func:`propose_candidate` generates this reordering.

    Zero when a forced member sits outside the initial set or some tail
    step traces a nonexistent link.
    """
    if reduced.jump_design:
        raise ValueError("candidate reorderings are defined for the no-jump design")
    frames = build_frames(reduced)
    if reordering.initial_sizes != reduced.initial_sizes:
        raise ValueError("reordering initial sizes differ from the design's")
    prob = 1.0
    for frame, order in zip(frames, reordering.orders):
        free, set_factor = _candidate_setup(frame)
        locs = frame.locals_of(order)
        initial = set(locs[: frame.n_initial])
        if not initial.issuperset(frame.forced_locals):
            return 0.0
        prob *= set_factor
        cur_mask = 0
        for i in initial:
            cur_mask |= 1 << i
        pool = list(locs[frame.n_initial:])
        while pool:
            counts = [(frame.adj_masks[u] & cur_mask).bit_count() for u in pool]
            total = sum(counts)
            if counts[0] == 0:
                return 0.0
            prob *= counts[0] / total
            cur_mask |= 1 << pool.pop(0)
    return prob


def run_chain(data: ObservedData,
              statistic: ReorderStatistic | Callable,
              variance: Callable | None = None, *,
              n_iterations: int,
              random_state=None,
              trace=None,
              policy: ActiveSetPolicy = ActiveSetPolicy.FULL_SAMPLE) -> ChainResult:
    """Chain-average one preliminary estimator over reorderings.

    Args:
        data: the observed survey (the realized ordering seeds the chain).
        statistic: a :class:`ReorderStatistic` or a bare
            ``(initial_sets, reduced) -> float`` callable.
        variance: variance estimator when ``statistic`` is a bare
            callable; ignored otherwise.
        n_iterations: proposals to make (the average has this many terms
            plus the starting state).
        random_state: seed; equal seeds give identical results.
        trace: optional text stream receiving per-iteration CSV rows.
    """
    if isinstance(statistic, ReorderStatistic):
        named = statistic
    else:
        named = ReorderStatistic("custom", "size", statistic,
                                 variance or (lambda s, d: float("nan")), (1, 64))
    results = run_chain_multi(data, (named,), n_iterations=n_iterations,
                              random_state=random_state, trace=trace, policy=policy)
    return results[named.name]


def run_chain_multi(data: ObservedData,
                    statistics: Sequence[ReorderStatistic], *,
                    n_iterations: int,
                    random_state=None,
                    trace=None,
                    policy: ActiveSetPolicy = ActiveSetPolicy.FULL_SAMPLE,
                    ) -> dict[str, ChainResult]:
    """Run one chain and average several estimators along it.

    All statistics share the same reordering path, which is how a
    simulation study keeps many estimators per replication affordable.
    Returns one :class:`ChainResult` per statistic name.
    """
    if policy is not ActiveSetPolicy.FULL_SAMPLE:
        raise NotImplementedError(f"active-set policy {policy} not implemented")
    if n_iterations < 0:
        raise ValueError("n_iterations must be nonnegative")
    reduced = reduce_observed(data)
    if reduced.jump_design:
        raise ValueError("the chain sampler supports the no-jump design")
    frames = build_frames(reduced)
    for frame in frames:
        if frame.truncated and frame.total_degree - frame.total_internal != 0:
            raise ValueError("truncated sample still has links leaving it")
    setups = [_candidate_setup(f) for f in frames]
    rng = _py_rng(random_state)

    # start from the ordering the survey actually realized
    cur_sets: list[frozenset[int]] = []
    cur_design = 1.0
    for frame, sample in zip(frames, data.samples):
        locs = frame.locals_of(sample.units)
        w = _replay_weight(frame, locs)
        if w == 0.0:
            raise ValueError("recorded ordering has zero selection weight; data corrupt")
        cur_design *= w
        cur_sets.append(frozenset(sample.units[: frame.n_initial]))
    cur_cand = candidate_prob(reduced, Reordering.original(data))
    if cur_cand == 0.0:
        raise ValueError("recorded ordering unreachable by the candidate process")

    names = [s.name for s in statistics]
    if len(set(names)) != len(names):
        raise ValueError("statistic names must be unique")
    cur_vals = [s.point(cur_sets, reduced) for s in statistics]
    cur_vars = [s.variance(cur_sets, reduced) for s in statistics]
    sums = [v for v in cur_vals]
    sq_sums = [v * v for v in cur_vals]
    var_sums = [v for v in cur_vars]
    if trace is not None:
        trace.write("iteration,accepted," + ",".join(names) + "\n")
        trace.write("0,1," + ",".join(f"{v:.10g}" for v in cur_vals) + "\n")

    accepted = 0
    n_stats = len(statistics)
    for it in range(1, n_iterations + 1):
        prop = _propose_tuple(frames, setups, rng)
        took = False
        if prop is not None:
            initials, prop_cand, prop_design = prop
            ratio = (prop_design / cur_design) * (cur_cand / prop_cand)
            if ratio >= 1.0 or rng.random() < ratio:
                took = True
                accepted += 1
                cur_design = prop_design
                cur_cand = prop_cand
                cur_sets = [frozenset(frame.members[i] for i in _initial_locals(m))
                            for frame, m in zip(frames, initials)]
                for j, s in enumerate(statistics):
                    cur_vals[j] = s.point(cur_sets, reduced)
                    cur_vars[j] = s.variance(cur_sets, reduced)
        for j in range(n_stats):
            v = cur_vals[j]
            sums[j] += v
            sq_sums[j] += v * v
            var_sums[j] += cur_vars[j]
        if trace is not None:
            trace.write(f"{it},{int(took)}," +
                        ",".join(f"{v:.10g}" for v in cur_vals) + "\n")

    terms = n_iterations + 1
    out: dict[str, ChainResult] = {}
    rate = accepted / n_iterations if n_iterations else 0.0
    for j, s in enumerate(statistics):
        mean = sums[j] / terms
        spread = max(sq_sums[j] / terms - mean * mean, 0.0)
        mean_var = var_sums[j] / terms
        value = mean_var - spread
        fallback = value < 0.0
        if fallback:
            value = mean_var
        out[s.name] = ChainResult(mean, value, rate, n_iterations, fallback)
    return out


def _propose_tuple(frames, setups, rng):
    initials = []
    q_cand = 1.0
    q_design = 1.0
    for frame, (free, set_factor) in zip(frames, setups):
        drawn = _propose_one(frame, free, set_factor, rng)
        if drawn is None:
            return None
        initial, _tail, qc, qd = drawn
        initials.append(initial)
        q_cand *= qc
        q_design *= qd
    return initials, q_cand, q_design
