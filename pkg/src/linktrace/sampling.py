"""Link-traced sample selection and the data it produces.

A survey takes ``n_samples`` independent samples from one population
graph.  Each sample starts as a simple random sample of ``n_initial``
nodes and then grows one node at a time: the next node is chosen with
probability proportional to the number of links from the *entire current
sample* to that node.  Two designs are supported:

* no-jump: growth stops early (truncates) once no links leave the
  current sample;
* jump: before each addition a coin with trace probability ``d`` decides
  between tracing a link and jumping to a uniform unsampled node, and an
  exhausted sample forces the jump, so the target size is always reached.

What the survey observes is :class:`ObservedData`: the ordered samples
with their jump/forced indicators, the degree of every sampled node, and
the adjacency among nodes that share a sample.  :func:`reduce_observed`
drops the selection order, keeping the summary that the reordering
machinery conditions on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_count, check_fraction, ensure_rng
from .population import PopulationGraph

__all__ = [
    "ActiveSetPolicy",
    "DesignConfig",
    "OrderedSample",
    "ObservedData",
    "ReducedData",
    "draw_sample",
    "draw_sample_jump",
    "collect_observed",
    "reduce_observed",
    "write_observed",
    "read_observed",
    "AdaptiveWebSampler",
]


class ActiveSetPolicy(Enum):
    """Which nodes trace links at each step.

    Only the full-sample policy is implemented: every node selected so
    far keeps tracing.  The enum exists so alternative policies can be
    added without changing call signatures.
    """

    FULL_SAMPLE = "full-sample"


@dataclass(frozen=True)
class DesignConfig:
    """Fixed, analyst-chosen parameters of the selection design.

    Args:
        initial_sizes: per-sample size of the simple random start.
        final_sizes: per-sample target size after link-traced growth.
        trace_prob: link-trace probability ``d`` of the jump design, or
            None for the no-jump design.
        active_set: node set that traces links at each step.
    """

    initial_sizes: tuple[int, ...]
    final_sizes: tuple[int, ...]
    trace_prob: float | None = None
    active_set: ActiveSetPolicy = ActiveSetPolicy.FULL_SAMPLE

    def __post_init__(self):
        object.__setattr__(self, "initial_sizes", tuple(int(v) for v in self.initial_sizes))
        object.__setattr__(self, "final_sizes", tuple(int(v) for v in self.final_sizes))
        if len(self.initial_sizes) != len(self.final_sizes):
            raise ValueError("initial_sizes and final_sizes must have equal length")
        if not self.initial_sizes:
            raise ValueError("need at least one sample")
        for n0, n in zip(self.initial_sizes, self.final_sizes):
            if n0 < 1:
                raise ValueError(f"initial size {n0} must be >= 1")
            if n < n0:
                raise ValueError(f"final size {n} below initial size {n0}")
        if self.trace_prob is not None:
            check_fraction(self.trace_prob, "trace_prob")
        if not isinstance(self.active_set, ActiveSetPolicy):
            raise ValueError(f"unknown active-set policy {self.active_set!r}")

    @classmethod
    def uniform(cls, n_samples: int, n_initial: int, n_final: int,
                trace_prob: float | None = None) -> "DesignConfig":
        """All samples share one initial and one final size."""
        n_samples = check_count(n_samples, "n_samples", minimum=1)
        return cls((n_initial,) * n_samples, (n_final,) * n_samples, trace_prob)

    @property
    def n_samples(self) -> int:
        return len(self.initial_sizes)

    @property
    def jump_design(self) -> bool:
        return self.trace_prob is not None


@dataclass(frozen=True)
class OrderedSample:
    """One sample in selection order.

    ``jumps[t]`` and ``forced[t]`` are the jump and forced-jump
    indicators of the node at position ``t`` (0-based here; both are 0
    on initial positions and everywhere under the no-jump design).
    ``truncated`` marks a no-jump sample that stalled before reaching
    ``size_target``.
    """

    units: tuple[int, ...]
    n_initial: int
    size_target: int
    jumps: tuple[int, ...] = ()
    forced: tuple[int, ...] = ()
    truncated: bool = False

    def __post_init__(self):
        object.__setattr__(self, "units", tuple(int(u) for u in self.units))
        if len(set(self.units)) != len(self.units):
            raise ValueError("sample contains repeated units")
        if not 1 <= self.n_initial <= len(self.units):
            raise ValueError("n_initial outside 1..len(units)")
        if len(self.units) > self.size_target:
            raise ValueError("sample larger than its target size")
        if self.truncated and len(self.units) == self.size_target:
            raise ValueError("full-size sample flagged truncated")
        if not self.truncated and len(self.units) < self.size_target:
            raise ValueError("short sample not flagged truncated")
        for name in ("jumps", "forced"):
            flags = getattr(self, name)
            if flags and len(flags) != len(self.units):
                raise ValueError(f"{name} length differs from sample length")
        if self.jumps:
            for t, (j, h) in enumerate(zip(self.jumps, self.forced)):
                if t < self.n_initial and (j or h):
                    raise ValueError("jump/forced flag set on an initial position")
                if h and not j:
                    raise ValueError("forced step must also be a jump")

    @property
    def size(self) -> int:
        return len(self.units)

    @property
    def initial_units(self) -> frozenset[int]:
        return frozenset(self.units[: self.n_initial])


@dataclass(frozen=True)
class ObservedData:
    """Everything the survey records.

    ``degrees`` covers every sampled node.  ``edges`` holds the observed
    adjacency as (min, max) pairs; a pair is observed exactly when the
    two nodes appear together in at least one sample.
    """

    samples: tuple[OrderedSample, ...]
    degrees: Mapping[int, int]
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        sampled = set()
        for s in self.samples:
            sampled.update(s.units)
        missing = sampled.difference(self.degrees)
        if missing:
            raise ValueError(f"degrees missing for sampled units {sorted(missing)}")
        for i, j in self.edges:
            if not (i < j):
                raise ValueError(f"edge ({i},{j}) not stored as (min,max)")

    @property
    def n_samples(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class ReducedData:
    """The order-free summary the estimators condition on.

    Keeps the unordered member set of every sample, the observed degrees
    and within-sample adjacency, and, under the jump design, the vector
    ``jump_totals`` whose entry t is the number of samples that jumped at
    position t (positions ``max(initial_sizes) .. max(final_sizes)-1``
    can be nonzero; the vector stores all positions 0-based from 0).
    The selection order itself is gone.
    """

    member_sets: tuple[frozenset[int], ...]
    initial_sizes: tuple[int, ...]
    final_sizes: tuple[int, ...]
    truncated: tuple[bool, ...]
    degrees: Mapping[int, int]
    edges: frozenset[tuple[int, int]]
    trace_prob: float | None = None
    jump_totals: tuple[int, ...] | None = None

    @property
    def n_samples(self) -> int:
        return len(self.member_sets)

    @property
    def jump_design(self) -> bool:
        return self.trace_prob is not None


def _assert_policy(policy: ActiveSetPolicy) -> None:
    if policy is not ActiveSetPolicy.FULL_SAMPLE:
        raise NotImplementedError(f"active-set policy {policy} not implemented")


def draw_sample(graph: PopulationGraph, n_initial: int, size_target: int,
                rng=None, *, policy: ActiveSetPolicy = ActiveSetPolicy.FULL_SAMPLE,
                ) -> OrderedSample:
    """Draw one no-jump link-traced sample.

    Starts from a simple random sample of ``n_initial`` nodes, then
    repeatedly adds an unsampled node with probability proportional to
    its link count from the current sample.  Stops at ``size_target`` or,
    truncating, when no links leave the sample.

    Args:
        graph: population to sample from.
        n_initial: size of the random start (1..size_target).
        size_target: desired final size (at most ``graph.n_nodes``).
        rng: seed or numpy Generator.

    Returns:
        The selected :class:`OrderedSample`, without jump indicators.
    """
    _assert_policy(policy)
    rng = ensure_rng(rng)
    n_initial, size_target = _check_sizes(graph, n_initial, size_target)
    units, counts, total, in_sample = _init_draw(graph, n_initial, rng)
    while len(units) < size_target:
        if total == 0:
            break
        nxt = _pick_weighted(counts, total, rng)
        total = _add_unit(graph, nxt, units, counts, total, in_sample)
    truncated = len(units) < size_target
    return OrderedSample(tuple(units), n_initial, size_target, truncated=truncated)


def draw_sample_jump(graph: PopulationGraph, n_initial: int, size_target: int,
                     trace_prob: float, rng=None, *,
                     policy: ActiveSetPolicy = ActiveSetPolicy.FULL_SAMPLE,
                     ) -> OrderedSample:
    """Draw one sample under the jump design with trace probability ``d``.

    At each growth step a Bernoulli(``trace_prob``) coin chooses between
    tracing (as in :func:`draw_sample`) and jumping to a uniformly random
    unsampled node.  When the sample has no outgoing links the jump is
    forced, so the sample always reaches ``size_target``.

    Returns:
        An :class:`OrderedSample` carrying per-position jump (J) and
        forced (H) indicators.
    """
    _assert_policy(policy)
    rng = ensure_rng(rng)
    trace_prob = check_fraction(trace_prob, "trace_prob")
    n_initial, size_target = _check_sizes(graph, n_initial, size_target)
    units, counts, total, in_sample = _init_draw(graph, n_initial, rng)
    jumps = [0] * n_initial
    forced = [0] * n_initial
    while len(units) < size_target:
        if total == 0:
            jump, force = 1, 1
        else:
            jump, force = (0, 0) if rng.random() < trace_prob else (1, 0)
        if jump:
            pool = np.flatnonzero(~in_sample)
            nxt = int(pool[rng.integers(len(pool))])
        else:
            nxt = _pick_weighted(counts, total, rng)
        total = _add_unit(graph, nxt, units, counts, total, in_sample)
        jumps.append(jump)
        forced.append(force)
    return OrderedSample(tuple(units), n_initial, size_target,
                         jumps=tuple(jumps), forced=tuple(forced))


def _check_sizes(graph, n_initial, size_target):
    n_initial = check_count(n_initial, "n_initial", minimum=1)
    size_target = check_count(size_target, "size_target", minimum=n_initial)
    if size_target > graph.n_nodes:
        raise ValueError(f"size_target {size_target} exceeds population {graph.n_nodes}")
    return n_initial, size_target


def _init_draw(graph, n_initial, rng):
    n = graph.n_nodes
    start = rng.choice(n, size=n_initial, replace=False)
    in_sample = np.zeros(n, dtype=bool)
    # counts[i] = links from the current sample to unsampled node i
    counts = np.zeros(n, dtype=np.int64)
    units: list[int] = []
    total = 0
    for u in start:
        total = _add_unit(graph, int(u), units, counts, total, in_sample)
    return units, counts, total, in_sample


def _add_unit(graph, unit, units, counts, total, in_sample):
    units.append(unit)
    in_sample[unit] = True
    total -= int(counts[unit])
    counts[unit] = 0
    nbrs = graph.neighbors(unit)
    outside = nbrs[~in_sample[nbrs]]
    counts[outside] += 1
    return total + len(outside)


def _pick_weighted(counts, total, rng):
    # integer threshold keeps each probability exactly counts[i]/total
    r = int(rng.integers(1, total + 1))
    return int(np.searchsorted(np.cumsum(counts), r))


def collect_observed(graph: PopulationGraph,
                     samples: tuple[OrderedSample, ...]) -> ObservedData:
    """Attach what the survey observes to the selected samples.

    Records the degree of every sampled node and the adjacency between
    every pair of nodes that share a sample.
    """
    degrees: dict[int, int] = {}
    edges: set[tuple[int, int]] = set()
    for s in samples:
        for u in s.units:
            degrees[u] = graph.degree(u)
        members = set(s.units)
        for u in s.units:
            for v in graph.neighbors(u):
                v = int(v)
                if v in members and u < v:
                    edges.add((u, v))
    return ObservedData(tuple(samples), degrees, frozenset(edges))


def reduce_observed(observed: ObservedData,
                    design: DesignConfig | None = None) -> ReducedData:
    """Drop the selection order, keeping the reordering-invariant summary.

    Args:
        observed: full survey record.
        design: the selection design.  Omitted, it is inferred as a
            no-jump design with the samples' own sizes; it must be given
            when any jump indicator is set.

    Returns:
        The :class:`ReducedData` summary.  Under the jump design it
        includes ``jump_totals``, the per-position count of samples that
        jumped there.
    """
    any_jumps = any(any(s.jumps) for s in observed.samples)
    if design is None:
        if any_jumps:
            raise ValueError("samples carry jump indicators; pass the jump design")
        design = DesignConfig(
            tuple(s.n_initial for s in observed.samples),
            tuple(s.size_target for s in observed.samples),
        )
    if design.n_samples != len(observed.samples):
        raise ValueError("design and data disagree on the number of samples")
    for s, n0, n in zip(observed.samples, design.initial_sizes, design.final_sizes):
        if s.n_initial != n0 or s.size_target != n:
            raise ValueError("design sizes do not match the recorded samples")
    jump_totals = None
    if design.jump_design:
        length = max(design.final_sizes)
        totals = [0] * length
        for s in observed.samples:
            for t, j in enumerate(s.jumps):
                totals[t] += j
        jump_totals = tuple(totals)
    elif any_jumps:
        raise ValueError("no-jump design cannot explain jump indicators")
    return ReducedData(
        member_sets=tuple(frozenset(s.units) for s in observed.samples),
        initial_sizes=design.initial_sizes,
        final_sizes=design.final_sizes,
        truncated=tuple(s.truncated for s in observed.samples),
        degrees=dict(observed.degrees),
        edges=observed.edges,
        trace_prob=design.trace_prob,
        jump_totals=jump_totals,
    )


def write_observed(observed: ObservedData, target) -> None:
    """Serialize observed data to the line-oriented text format.

    Layout: one ``sample k n0=<a> target=<b> truncated=<0|1>`` header per
    sample followed by ``k,position,node,J,H`` rows (positions 1-based),
    then ``degree node value`` and ``edge i j`` lines.
    """
    def _emit(fh):
        fh.write("# link-traced observed data v1\n")
        for k, s in enumerate(observed.samples):
            fh.write(f"sample {k} n0={s.n_initial} target={s.size_target} "
                     f"truncated={int(s.truncated)}\n")
            jumps = s.jumps or (0,) * s.size
            forced = s.forced or (0,) * s.size
            for pos, (u, j, h) in enumerate(zip(s.units, jumps, forced), start=1):
                fh.write(f"{k},{pos},{u},{j},{h}\n")
        for node in sorted(observed.degrees):
            fh.write(f"degree {node} {observed.degrees[node]}\n")
        for i, j in sorted(observed.edges):
            fh.write(f"edge {i} {j}\n")

    if hasattr(target, "write"):
        _emit(target)
    else:
        with open(target, "w", encoding="utf-8") as fh:
            _emit(fh)


def read_observed(source) -> ObservedData:
    """Parse the format written by :func:`write_observed`.

    Raises:
        ValueError: on malformed input, with the 1-based line number.
    """
    if hasattr(source, "read"):
        return _parse_observed(source)
    with open(source, "r", encoding="utf-8") as fh:
        return _parse_observed(fh)


class _ParseError(ValueError):
    pass


def _parse_observed(stream) -> ObservedData:
    headers: list[dict] = []
    rows: dict[int, list[tuple[int, int, int, int]]] = {}
    degrees: dict[int, int] = {}
    edges: set[tuple[int, int]] = set()

    def fail(lineno, why):
        raise _ParseError(f"line {lineno}: {why}")

    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "sample":
                fields = dict(p.split("=", 1) for p in parts[2:])
                if int(parts[1]) != len(headers):
                    fail(lineno, "sample headers out of order")
                headers.append({k: int(v) for k, v in fields.items()})
                rows[len(headers) - 1] = []
            elif parts[0] == "degree":
                degrees[int(parts[1])] = int(parts[2])
            elif parts[0] == "edge":
                i, j = int(parts[1]), int(parts[2])
                edges.add((i, j) if i < j else (j, i))
            else:
                k, pos, node, j, h = (int(v) for v in line.split(","))
                if k not in rows:
                    fail(lineno, f"row for undeclared sample {k}")
                if pos != len(rows[k]) + 1:
                    fail(lineno, f"position {pos} out of order in sample {k}")
                rows[k].append((node, j, h))
        except _ParseError:
            raise
        except Exception:
            fail(lineno, f"cannot parse {raw.rstrip()!r}")

    if not headers:
        raise ValueError("no sample headers found")
    samples = []
    for k, head in enumerate(headers):
        recs = rows[k]
        units = tuple(r[0] for r in recs)
        jumps = tuple(r[1] for r in recs)
        forced = tuple(r[2] for r in recs)
        if not any(jumps) and not any(forced):
            jumps, forced = (), ()
        samples.append(OrderedSample(
            units, head["n0"], head["target"], jumps=jumps, forced=forced,
            truncated=bool(head.get("truncated", 0)),
        ))
    return ObservedData(tuple(samples), degrees, frozenset(edges))


class AdaptiveWebSampler(BaseEstimator):
    """Link-traced sampler with a scikit-learn style parameter surface.

    Draws ``n_samples`` independent samples from a population graph and
    returns the survey's :class:`ObservedData`.

    Args:
        n_samples: number of independent samples.
        n_initial: simple-random start size (int, or one per sample).
        n_final: target size after growth (int, or one per sample).
        trace_prob: None for the no-jump design, else the jump design's
            link-trace probability ``d``.
        random_state: seed for :func:`ensure_rng`.
    """

    def __init__(self, n_samples=2, n_initial=60, n_final=70,
                 trace_prob=None, random_state=None):
        self.n_samples = n_samples
        self.n_initial = n_initial
        self.n_final = n_final
        self.trace_prob = trace_prob
        self.random_state = random_state

    def design(self) -> DesignConfig:
        """The DesignConfig these parameters describe."""
        def _per_sample(value):
            if isinstance(value, (tuple, list)):
                return tuple(int(v) for v in value)
            return (int(value),) * int(self.n_samples)

        return DesignConfig(_per_sample(self.n_initial),
                            _per_sample(self.n_final), self.trace_prob)

    def sample(self, graph: PopulationGraph, random_state=None) -> ObservedData:
        """Draw all samples and collect what the survey observes."""
        design = self.design()
        rng = ensure_rng(self.random_state if random_state is None else random_state)
        samples = []
        for n0, n in zip(design.initial_sizes, design.final_sizes):
            if design.jump_design:
                samples.append(draw_sample_jump(graph, n0, n, design.trace_prob, rng))
            else:
                samples.append(draw_sample(graph, n0, n, rng))
        return collect_observed(graph, tuple(samples))
