"""Reorderings of link-traced samples and exact reordering averages.

A reordering re-tells how the observed samples could have been selected:
per sample, a hypothetical initial set (an unordered prefix) followed by
an ordering of the remaining members.  Replaying the selection design
along a reordering yields its *selection weight*: the product over
adaptive steps of the step's conditional selection probability.  The
weight uses only observed quantities (degrees of sampled nodes and the
within-sample adjacency), because the number of links leaving a sample
equals the members' total degree minus twice the links inside it.

All replay code assumes the full-sample active set: every node selected
so far keeps tracing links.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, permutations
from typing import Callable, Iterator, Sequence

from .population import PopulationGraph
from .sampling import ActiveSetPolicy, ObservedData, ReducedData, reduce_observed

__all__ = [
    "Reordering",
    "SampleFrame",
    "build_frames",
    "selection_weight",
    "full_selection_prob",
    "is_consistent",
    "iter_orderings",
    "n_orderings",
    "n_reordering_tuples",
    "EnumerationLimitError",
    "RBDiagnostics",
    "ExactResult",
    "exact_rao_blackwell",
]


class EnumerationLimitError(RuntimeError):
    """Raised when the reordering space is too large to enumerate.

    Use the Markov chain sampler instead of the exact average.
    """


@dataclass(frozen=True)
class Reordering:
    """One hypothetical selection order for every sample.

    ``orders[k]`` lists sample k's members in hypothetical selection
    order; its first ``initial_sizes[k]`` entries form the initial set
    (their internal order carries no meaning).  Under the jump design a
    reordering also carries per-position jump (J) and forced (H)
    indicators, aligned with ``orders``.
    """

    orders: tuple[tuple[int, ...], ...]
    initial_sizes: tuple[int, ...]
    jumps: tuple[tuple[int, ...], ...] | None = None
    forced: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "orders",
                           tuple(tuple(int(u) for u in o) for o in self.orders))
        object.__setattr__(self, "initial_sizes",
                           tuple(int(v) for v in self.initial_sizes))
        if len(self.orders) != len(self.initial_sizes):
            raise ValueError("one initial size per sample required")
        for order, n0 in zip(self.orders, self.initial_sizes):
            if len(set(order)) != len(order):
                raise ValueError("ordering repeats a unit")
            if not 1 <= n0 <= len(order):
                raise ValueError("initial size outside 1..len(order)")
        for name in ("jumps", "forced"):
            flags = getattr(self, name)
            if flags is not None and tuple(len(f) for f in flags) != tuple(
                    len(o) for o in self.orders):
                raise ValueError(f"{name} not aligned with orders")

    @classmethod
    def original(cls, observed: ObservedData) -> "Reordering":
        """The ordering actually realized by the survey."""
        jumps = tuple(s.jumps for s in observed.samples)
        forced = tuple(s.forced for s in observed.samples)
        has_flags = any(jumps[k] for k in range(len(jumps)))
        return cls(
            tuple(s.units for s in observed.samples),
            tuple(s.n_initial for s in observed.samples),
            jumps=jumps if has_flags else None,
            forced=forced if has_flags else None,
        )

    @property
    def initial_sets(self) -> tuple[frozenset[int], ...]:
        return tuple(frozenset(o[:n0])
                     for o, n0 in zip(self.orders, self.initial_sizes))


class SampleFrame:
    """Replay scaffold for one sample: members with local bitmask adjacency.

    Local index i corresponds to ``members[i]``; ``adj_masks[i]`` has bit
    j set when members i and j are linked.  Degrees are the members'
    full population degrees.
    """

    __slots__ = ("members", "n_initial", "size_target", "truncated",
                 "degrees", "adj_masks", "index", "total_degree",
                 "total_internal", "forced_locals")

    def __init__(self, members, n_initial, degrees, adj_masks,
                 size_target=None, truncated=False):
        self.members = tuple(members)
        self.n_initial = int(n_initial)
        self.size_target = len(self.members) if size_target is None else int(size_target)
        self.truncated = bool(truncated)
        self.degrees = tuple(int(d) for d in degrees)
        self.adj_masks = tuple(int(m) for m in adj_masks)
        self.index = {u: i for i, u in enumerate(self.members)}
        self.total_degree = sum(self.degrees)
        self.total_internal = sum(m.bit_count() for m in self.adj_masks)
        # members no other member links to: they can never be traced into
        # the sample, so any consistent initial set must contain them
        self.forced_locals = tuple(i for i, m in enumerate(self.adj_masks) if m == 0)

    @property
    def size(self) -> int:
        return len(self.members)

    def locals_of(self, order: Sequence[int]) -> tuple[int, ...]:
        try:
            return tuple(self.index[u] for u in order)
        except KeyError as exc:
            raise ValueError(f"unit {exc.args[0]} is not a member of this sample") from None


def build_frames(reduced: ReducedData) -> tuple[SampleFrame, ...]:
    """Build one replay frame per sample from the order-free summary."""
    frames = []
    for k, members in enumerate(reduced.member_sets):
        ordered = tuple(sorted(members))
        index = {u: i for i, u in enumerate(ordered)}
        masks = [0] * len(ordered)
        for i, j in reduced.edges:
            if i in index and j in index:
                masks[index[i]] |= 1 << index[j]
                masks[index[j]] |= 1 << index[i]
        frames.append(SampleFrame(
            ordered, reduced.initial_sizes[k],
            tuple(reduced.degrees[u] for u in ordered), masks,
            size_target=reduced.final_sizes[k],
            truncated=reduced.truncated[k],
        ))
    return tuple(frames)


def _frame_from_graph(graph: PopulationGraph, members: Sequence[int],
                      n_initial: int) -> SampleFrame:
    ordered = tuple(sorted(members))
    index = {u: i for i, u in enumerate(ordered)}
    masks = [0] * len(ordered)
    for u in ordered:
        for v in graph.neighbors(u):
            v = int(v)
            if v in index:
                masks[index[u]] |= 1 << index[v]
    return SampleFrame(ordered, n_initial,
                       tuple(graph.degree(u) for u in ordered), masks)


def _frames_for(data, reordering: Reordering) -> tuple[SampleFrame, ...]:
    if isinstance(data, PopulationGraph):
        return tuple(_frame_from_graph(data, order, n0)
                     for order, n0 in zip(reordering.orders, reordering.initial_sizes))
    if isinstance(data, ObservedData):
        data = reduce_observed(data)
    if isinstance(data, ReducedData):
        if len(reordering.orders) != data.n_samples:
            raise ValueError("reordering and data disagree on the number of samples")
        if reordering.initial_sizes != data.initial_sizes:
            raise ValueError("reordering initial sizes differ from the design's")
        for order, members in zip(reordering.orders, data.member_sets):
            if frozenset(order) != members:
                raise ValueError("reordering does not range over the sample's members")
        return build_frames(data)
    raise ValueError(f"cannot replay against {type(data).__name__}")


def _replay_weight(frame: SampleFrame, order_locals: Sequence[int]) -> float:
    """Selection-probability product of the adaptive steps, replayed locally."""
    mask = 0
    sum_deg = 0
    internal = 0
    adj = frame.adj_masks
    deg = frame.degrees
    for i in order_locals[: frame.n_initial]:
        internal += 2 * (adj[i] & mask).bit_count()
        sum_deg += deg[i]
        mask |= 1 << i
    weight = 1.0
    for i in order_locals[frame.n_initial:]:
        w_i = (adj[i] & mask).bit_count()
        if w_i == 0:
            return 0.0
        # links out of the current sample: total degree minus internal ones
        weight *= w_i / (sum_deg - internal)
        internal += 2 * w_i
        sum_deg += deg[i]
        mask |= 1 << i
    return weight


def selection_weight(data, reordering: Reordering, *,
                     policy: ActiveSetPolicy = ActiveSetPolicy.FULL_SAMPLE) -> float:
    """Product of adaptive-step selection probabilities along a reordering.

    This is the population-size-free part of the reordering's selection
    probability under the no-jump design: the probability of the traced
    additions given the initial sets.  Zero when some step is untraceable.

    Args:
        data: a :class:`PopulationGraph`, :class:`ObservedData`, or
            :class:`ReducedData` to replay against.
        reordering: hypothetical selection order (jump indicators, if
            any, are ignored here).

    Returns:
        The weight in [0, 1]; exactly 0.0 for unobtainable orderings.
    """
    _check_policy(policy)
    frames = _frames_for(data, reordering)
    weight = 1.0
    for frame, order in zip(frames, reordering.orders):
        weight *= _replay_weight(frame, frame.locals_of(order))
        if weight == 0.0:
            return 0.0
    return weight


def _check_policy(policy):
    if policy is not ActiveSetPolicy.FULL_SAMPLE:
        raise NotImplementedError(f"active-set policy {policy} not implemented")


def full_selection_prob(data, reordering: Reordering, *,
                        n_population: int,
                        trace_prob: float | None = None,
                        policy: ActiveSetPolicy = ActiveSetPolicy.FULL_SAMPLE) -> float:
    """Full selection probability at a hypothetical population size.

    Includes the initial simple-random-sample factor ``1/C(N, n0k)`` of
    every sample.  Under the jump design (``trace_prob`` set) the
    reordering must carry jump/forced indicators; a traced step
    contributes ``d * w_i / w_+``, a free jump ``(1-d) / (N - t)`` and a
    forced jump ``1 / (N - t)``, with t the number of nodes already in
    the sample.

    Raises:
        ValueError: when indicators contradict the replay (forced while
            links remained, forced without jump, or a free jump where
            the design would have forced one).
    """
    _check_policy(policy)
    frames = _frames_for(data, reordering)
    n = int(n_population)
    if n < max(f.size for f in frames):
        raise ValueError(f"hypothetical population {n} smaller than a sample")
    jumps = reordering.jumps
    forced = reordering.forced
    if trace_prob is not None and jumps is None:
        raise ValueError("jump design requires jump indicators on the reordering")
    if trace_prob is None and jumps is not None and any(any(j) for j in jumps):
        raise ValueError("jump indicators need a trace probability")

    prob = 1.0
    for k, (frame, order) in enumerate(zip(frames, reordering.orders)):
        prob /= math.comb(n, frame.n_initial)
        order_locals = frame.locals_of(order)
        j_flags = jumps[k] if jumps is not None else (0,) * len(order)
        h_flags = forced[k] if forced is not None else (0,) * len(order)
        mask = 0
        sum_deg = 0
        internal = 0
        for t, i in enumerate(order_locals):
            if t < frame.n_initial:
                if j_flags[t] or h_flags[t]:
                    raise ValueError("jump/forced flag on an initial position")
                internal += 2 * (frame.adj_masks[i] & mask).bit_count()
                sum_deg += frame.degrees[i]
                mask |= 1 << i
                continue
            w_plus = sum_deg - internal
            w_i = (frame.adj_masks[i] & mask).bit_count()
            jump, force = j_flags[t], h_flags[t]
            if force and not jump:
                raise ValueError("forced step must be flagged as a jump")
            if force and w_plus > 0:
                raise ValueError("forced jump while links remained")
            if jump and not force and w_plus == 0:
                raise ValueError("free jump where the design forces one")
            if not jump and trace_prob is None and w_plus == 0:
                # no-jump replay of an exhausted state: unobtainable
                return 0.0
            if jump:
                step = 1.0 / (n - t)
                if not force:
                    step *= 1.0 - trace_prob
            else:
                if w_i == 0:
                    return 0.0
                step = w_i / w_plus
                if trace_prob is not None:
                    step *= trace_prob
            prob *= step
            internal += 2 * w_i
            sum_deg += frame.degrees[i]
            mask |= 1 << i
    return prob


def is_consistent(reordering: Reordering, reduced: ReducedData, *,
                  policy: ActiveSetPolicy = ActiveSetPolicy.FULL_SAMPLE) -> bool:
    """Could the design have produced this reordering, given the summary?

    No-jump design: the selection weight must be positive and every
    truncated sample must end with no links leaving it.  Jump design:
    each position must admit an assignment of per-sample jump indicators
    matching the recorded per-position jump totals, where a sample *must*
    jump when the next node is untraceable (and with trace probability 1
    a jump is *only* possible when the sample is exhausted).

    Raises:
        ValueError: if the reordering does not range over the summary's
            member sets.
    """
    _check_policy(policy)
    frames = _frames_for(reduced, reordering)

    if not reduced.jump_design:
        for frame, order in zip(frames, reordering.orders):
            if _replay_weight(frame, frame.locals_of(order)) == 0.0:
                return False
            if frame.truncated and frame.total_degree - frame.total_internal != 0:
                return False
        return True

    totals = reduced.jump_totals
    length = max(reduced.final_sizes)
    required = [0] * length
    available = [0] * length
    pure_trace = reduced.trace_prob == 1.0
    determined = [0] * length
    for frame, order in zip(frames, reordering.orders):
        mask = 0
        sum_deg = 0
        internal = 0
        for t, i in enumerate(frame.locals_of(order)):
            if t >= frame.n_initial:
                w_plus = sum_deg - internal
                w_i = (frame.adj_masks[i] & mask).bit_count()
                available[t] += 1
                must_jump = w_plus == 0 or w_i == 0
                if must_jump:
                    required[t] += 1
                if pure_trace:
                    if w_plus == 0:
                        determined[t] += 1
                    elif w_i == 0:
                        return False  # cannot trace, cannot jump freely
            internal += 2 * (frame.adj_masks[i] & mask).bit_count()
            sum_deg += frame.degrees[i]
            mask |= 1 << i
    if pure_trace:
        return list(totals) == determined
    return all(required[t] <= totals[t] <= available[t] for t in range(length))


def iter_orderings(members: Sequence[int], n_initial: int) -> Iterator[tuple[int, ...]]:
    """All orderings of ``members``: each initial set once, remainder permuted.

    Yields tuples whose first ``n_initial`` entries are the initial set
    in a canonical order; there are C(m, n0) * (m - n0)! of them.
    """
    members = tuple(members)
    for init in combinations(members, n_initial):
        chosen = set(init)
        rest = tuple(u for u in members if u not in chosen)
        for tail in permutations(rest):
            yield init + tail


def n_orderings(size: int, n_initial: int) -> int:
    """C(size, n_initial) * (size - n_initial)!"""
    return math.comb(size, n_initial) * math.factorial(size - n_initial)


def n_reordering_tuples(reduced: ReducedData) -> int:
    """Size of the full reordering-tuple space for this summary."""
    total = 1
    for members, n0 in zip(reduced.member_sets, reduced.initial_sizes):
        total *= n_orderings(len(members), n0)
    return total


@dataclass(frozen=True)
class RBDiagnostics:
    """Bookkeeping from a reordering average."""

    n_tuples: int
    n_consistent: int
    fallback: bool


@dataclass(frozen=True)
class ExactResult:
    """Exact reordering-averaged estimate."""

    point: float
    variance: float
    diagnostics: RBDiagnostics


def exact_rao_blackwell(
    data: ObservedData | ReducedData,
    statistic: Callable[[tuple[frozenset[int], ...], ReducedData], float],
    variance: Callable[[tuple[frozenset[int], ...], ReducedData], float] | None = None,
    *,
    enumeration_cap: int = 1_000_000,
    policy: ActiveSetPolicy = ActiveSetPolicy.FULL_SAMPLE,
) -> ExactResult:
    """Average a preliminary estimator over all consistent reorderings.

    Every reordering tuple is weighted by its selection weight,
    normalized over the tuple space; inconsistent tuples carry zero
    weight.  Because the preliminary estimator depends on a reordering
    only through its initial sets, orderings are grouped by initial set
    before the cross-sample product is formed.

    The variance field is the averaged variance estimate minus the
    weighted spread of the per-reordering estimates; when that difference
    is negative the averaged variance alone is returned and the fallback
    diagnostic is set.

    Args:
        data: observed survey data (no-jump design only).
        statistic: preliminary estimator on hypothetical initial sets.
        variance: its variance estimator, or None to skip.
        enumeration_cap: largest tuple-space size to enumerate.

    Raises:
        EnumerationLimitError: tuple space exceeds ``enumeration_cap``.
    """
    _check_policy(policy)
    reduced = reduce_observed(data) if isinstance(data, ObservedData) else data
    if reduced.jump_design:
        raise ValueError("exact averaging is implemented for the no-jump design")
    total_tuples = n_reordering_tuples(reduced)
    if total_tuples > enumeration_cap:
        raise EnumerationLimitError(
            f"{total_tuples} reordering tuples exceed the cap {enumeration_cap}; "
            "use the chain sampler")

    frames = build_frames(reduced)
    per_sample: list[dict[frozenset[int], float]] = []
    consistent = 1
    for frame in frames:
        if frame.truncated and frame.total_degree - frame.total_internal != 0:
            raise ValueError("truncated sample still has links leaving it")
        masses: dict[frozenset[int], float] = {}
        n_pos = 0
        for order in iter_orderings(range(frame.size), frame.n_initial):
            w = _replay_weight(frame, order)
            if w > 0.0:
                n_pos += 1
                key = frozenset(frame.members[i] for i in order[: frame.n_initial])
                masses[key] = masses.get(key, 0.0) + w
        if not masses:
            raise RuntimeError("no consistent ordering for a sample; data corrupt")
        per_sample.append(masses)
        consistent *= n_pos

    normalizer = math.prod(sum(m.values()) for m in per_sample)
    combos: list[tuple[tuple[frozenset[int], ...], float]] = [((), 1.0)]
    for masses in per_sample:
        combos = [(sets + (s,), w * mass)
                  for sets, w in combos for s, mass in masses.items()]

    values = [(w, statistic(sets, reduced), sets) for sets, w in combos]
    point = sum(w * v for w, v, _ in values) / normalizer

    fallback = False
    var_value = float("nan")
    if variance is not None:
        mean_var = sum(w * variance(sets, reduced) for w, _, sets in values) / normalizer
        spread = sum(w * (v - point) ** 2 for w, v, _ in values) / normalizer
        var_value = mean_var - spread
        if var_value < 0.0:
            var_value = mean_var
            fallback = True

    return ExactResult(point, var_value,
                       RBDiagnostics(total_tuples, consistent, fallback))
