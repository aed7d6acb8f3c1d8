"""Replicated simulation studies of link-traced estimation designs.

One study: fix a population graph, repeatedly (a) draw a no-jump
link-traced survey, (b) compute each estimator from the actual initial
samples (preliminary) and from one shared reordering chain (improved),
(c) score confidence intervals against the known truth.  A pure
simple-random-sampling baseline of the final sizes puts the design's
variance in context.

Per-replication randomness is derived statelessly from the master seed
and the replication index, so results are identical for any worker
count.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, fields
from functools import partial
from types import SimpleNamespace

import numpy as np
from joblib import Parallel, delayed

from ._validation import check_count, check_fraction, spawn_seed
from .estimators import log_interval, normal_interval, statistic_for
from .mcmc import run_chain_multi
from .population import PopulationGraph, load_edge_list, random_population
from .sampling import DesignConfig, collect_observed, draw_sample, reduce_observed

__all__ = ["StudyConfig", "StudyRow", "StudyResult", "SRSBaseline",
           "srs_baseline", "run_study", "read_table_csv", "read_coverage_csv",
           "PRESETS"]


@dataclass
class StudyConfig:
    """Everything a study needs; mirrors the key=value config file."""

    graph_file: str | None = None
    graph_nodes: int = 595
    graph_mean_degree: float = 2.45
    graph_seed: int = 1959
    n_samples: int = 2
    n_initial: int | tuple[int, ...] = 60
    n_final: int | tuple[int, ...] = 70
    statistics: tuple[str, ...] = ("chapman", "mean-degree")
    replications: int = 500
    n_iterations: int = 5000
    level: float = 0.95
    seed: int = 404
    srs_replications: int | None = None
    n_jobs: int = 1
    trace_dir: str | None = None

    def design(self) -> DesignConfig:
        def per_sample(v):
            if isinstance(v, (tuple, list)):
                return tuple(int(x) for x in v)
            return (int(v),) * int(self.n_samples)

        return DesignConfig(per_sample(self.n_initial), per_sample(self.n_final))

    @classmethod
    def from_file(cls, path) -> "StudyConfig":
        """Parse a ``key=value`` text config (# comments allowed)."""
        known = {f.name: f for f in fields(cls)}
        values: dict = {}
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"line {lineno}: expected key=value, got {raw.rstrip()!r}")
                key, value = (part.strip() for part in line.split("=", 1))
                if key not in known:
                    raise ValueError(f"line {lineno}: unknown config key {key!r}")
                try:
                    values[key] = _parse_value(key, value)
                except ValueError as exc:
                    raise ValueError(f"line {lineno}: {exc}") from None
        return cls(**values)


def _parse_value(key: str, value: str):
    if key in ("graph_file", "trace_dir"):
        return value
    if key == "statistics":
        return tuple(part.strip() for part in value.split(",") if part.strip())
    if key in ("n_initial", "n_final"):
        parts = [int(p) for p in value.split(",")]
        return parts[0] if len(parts) == 1 else tuple(parts)
    if key in ("graph_mean_degree", "level"):
        return float(value)
    try:
        return int(value)
    except ValueError:
        raise ValueError(f"cannot parse {value!r} for {key}") from None


PRESETS: dict[str, StudyConfig] = {
    "full-2sample": StudyConfig(replications=2000, n_iterations=20000),
    "full-3sample": StudyConfig(n_samples=3,
                                 statistics=("m0", "chao-lb", "mean-degree"),
                                 replications=2000, n_iterations=30000),
    "desk-2sample": StudyConfig(replications=500, n_iterations=5000),
}


@dataclass(frozen=True)
class SRSBaseline:
    """Monte Carlo behavior of an estimator under simple random samples."""

    mean: float
    variance: float


def srs_baseline(graph: PopulationGraph, sizes, statistic, replications: int,
                 rng=None) -> SRSBaseline:
    """Mean and variance of a statistic over independent SRS draws.

    Each replication draws one simple random sample per entry of
    ``sizes`` and evaluates the statistic on them as if they were
    initial samples.

    Args:
        graph: the population.
        sizes: per-sample sizes.
        statistic: a registry :class:`ReorderStatistic` or its name.
        replications: number of Monte Carlo draws (at least 2).
        rng: seed or Generator.
    """
    if isinstance(statistic, str):
        statistic = statistic_for(statistic, len(sizes))
    replications = check_count(replications, "replications", minimum=2)
    rng = np.random.default_rng(rng)
    degrees = {u: graph.degree(u) for u in range(graph.n_nodes)}
    data = SimpleNamespace(degrees=degrees)
    values = np.empty(replications)
    for r in range(replications):
        sets = tuple(frozenset(int(u) for u in rng.choice(graph.n_nodes, s, replace=False))
                     for s in sizes)
        values[r] = statistic.point(sets, data)
    return SRSBaseline(float(values.mean()), float(values.var(ddof=1)))


@dataclass(frozen=True)
class StudyRow:
    """Aggregates for one estimator across all replications."""

    name: str
    kind: str
    mean_prelim: float
    var_prelim: float
    mean_rb: float
    var_rb: float
    var_srs: float
    fallback_rate: float
    cov_normal_prelim: float
    cov_normal_rb: float
    cov_log_prelim: float
    cov_log_rb: float
    len_normal_prelim: float
    len_normal_rb: float
    len_log_prelim: float
    len_log_rb: float


@dataclass(frozen=True)
class StudyResult:
    """Aggregated study output plus the per-replication draws behind it.

    ``draws[name]`` has one row per replication with columns
    (prelim point, prelim variance, improved point, improved variance,
    fallback flag); ``n_observed`` holds each replication's distinct
    initial-sample count.
    """

    rows: tuple[StudyRow, ...]
    draws: dict[str, np.ndarray]
    n_observed: np.ndarray
    true_size: int
    true_mean_degree: float
    replications: int
    level: float
    config: StudyConfig

    def row(self, name: str) -> StudyRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def table_csv(self) -> str:
        out = ["estimator,kind,mean_prelim,var_prelim,mean_rb,var_rb,var_srs,fallback_rate"]
        for r in self.rows:
            cells = [r.name, r.kind]
            cells += [_fmt(v, r.kind) for v in
                      (r.mean_prelim, r.var_prelim, r.mean_rb, r.var_rb, r.var_srs)]
            cells.append(f"{r.fallback_rate:.3f}")
            out.append(",".join(cells))
        return "\n".join(out) + "\n"

    def coverage_csv(self) -> str:
        out = ["estimator,kind,normal_prelim,normal_rb,log_prelim,log_rb,"
               "len_normal_prelim,len_normal_rb,len_log_prelim,len_log_rb"]
        for r in self.rows:
            cells = [r.name, r.kind]
            cells += [_fmt_cov(v) for v in (r.cov_normal_prelim, r.cov_normal_rb,
                                            r.cov_log_prelim, r.cov_log_rb)]
            cells += [_fmt(v, r.kind) for v in (r.len_normal_prelim, r.len_normal_rb,
                                                r.len_log_prelim, r.len_log_rb)]
            out.append(",".join(cells))
        return "\n".join(out) + "\n"

    def text_table(self) -> str:
        head = (f"population size {self.true_size}, mean degree "
                f"{self.true_mean_degree:.3f}, {self.replications} replications, "
                f"level {self.level:.2f}")
        lines = [head, ""]
        widths = (12, 12, 12, 12, 12, 12)
        header = ("estimator", "mean_prelim", "var_prelim", "mean_rb", "var_rb", "var_srs")
        lines.append("".join(h.ljust(w) for h, w in zip(header, widths)))
        for r in self.rows:
            cells = (r.name, _fmt(r.mean_prelim, r.kind), _fmt(r.var_prelim, r.kind),
                     _fmt(r.mean_rb, r.kind), _fmt(r.var_rb, r.kind),
                     _fmt(r.var_srs, r.kind))
            lines.append("".join(c.ljust(w) for c, w in zip(cells, widths)))
        lines.append("")
        header2 = ("estimator", "cov_n_pre", "cov_n_rb", "cov_log_pre", "cov_log_rb")
        lines.append("".join(h.ljust(w) for h, w in zip(header2, widths)))
        for r in self.rows:
            cells = (r.name, _fmt_cov(r.cov_normal_prelim), _fmt_cov(r.cov_normal_rb),
                     _fmt_cov(r.cov_log_prelim), _fmt_cov(r.cov_log_rb))
            lines.append("".join(c.ljust(w) for c, w in zip(cells, widths)))
        return "\n".join(lines) + "\n"

    def write(self, out_dir) -> None:
        """Write table.csv and coverage.csv under ``out_dir``."""
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "table.csv"), "w", encoding="utf-8") as fh:
            fh.write(self.table_csv())
        with open(os.path.join(out_dir, "coverage.csv"), "w", encoding="utf-8") as fh:
            fh.write(self.coverage_csv())


def _fmt(value: float, kind: str) -> str:
    if math.isnan(value):
        return ""
    # sizes print as integers, degree-scale values keep 3 decimals
    return f"{value:.0f}" if kind == "size" else f"{value:.3f}"


def _fmt_cov(value: float) -> str:
    return "" if math.isnan(value) else f"{value:.3f}"


def _load_csv(path) -> dict[str, dict[str, float]]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    header = lines[0].split(",")
    out: dict[str, dict[str, float]] = {}
    for line in lines[1:]:
        cells = line.split(",")
        row: dict[str, float] = {}
        for key, cell in zip(header[2:], cells[2:]):
            row[key] = float(cell) if cell else float("nan")
        out[cells[0]] = row
    return out


def read_table_csv(path) -> dict[str, dict[str, float]]:
    """Parse table.csv back into per-estimator numbers."""
    return _load_csv(path)


def read_coverage_csv(path) -> dict[str, dict[str, float]]:
    """Parse coverage.csv back into per-estimator numbers."""
    return _load_csv(path)


def _replicate(graph, design, stat_names, n_iterations, seed, trace_dir, rep):
    stats = [statistic_for(name, design.n_samples) for name in stat_names]
    rng = np.random.default_rng(spawn_seed(seed, 1, rep))
    samples = tuple(draw_sample(graph, n0, n, rng)
                    for n0, n in zip(design.initial_sizes, design.final_sizes))
    observed = collect_observed(graph, samples)
    reduced = reduce_observed(observed, design)
    initial_sets = tuple(s.initial_units for s in observed.samples)
    union: set[int] = set()
    for s in initial_sets:
        union.update(s)

    trace = None
    if trace_dir is not None:
        trace = open(os.path.join(trace_dir, f"rep{rep:05d}.csv"), "w", encoding="utf-8")
    try:
        chains = run_chain_multi(observed, stats, n_iterations=n_iterations,
                                 random_state=spawn_seed(seed, 2, rep), trace=trace)
    finally:
        if trace is not None:
            trace.close()

    record = {}
    for stat in stats:
        cr = chains[stat.name]
        record[stat.name] = (stat.point(initial_sets, reduced),
                             stat.variance(initial_sets, reduced),
                             cr.point, cr.variance, float(cr.fallback))
    return record, len(union)


def run_study(config: StudyConfig) -> StudyResult:
    """Run a full replicated study.

    Returns a :class:`StudyResult`; results are reproducible from
    ``config.seed`` regardless of ``config.n_jobs``.
    """
    reps = check_count(config.replications, "replications", minimum=2)
    check_count(config.n_iterations, "n_iterations")
    level = check_fraction(config.level, "level", allow_one=False)
    design = config.design()
    for name in config.statistics:
        statistic_for(name, design.n_samples)
    if len(set(config.statistics)) != len(config.statistics):
        raise ValueError("statistics must be unique")

    if config.graph_file is not None:
        graph = load_edge_list(config.graph_file)
    else:
        graph = random_population(config.graph_nodes, config.graph_mean_degree,
                                  config.graph_seed)
    for n in design.final_sizes:
        if n > graph.n_nodes:
            raise ValueError("final sample size exceeds the population")

    if config.trace_dir is not None:
        os.makedirs(config.trace_dir, exist_ok=True)

    task = partial(_replicate, graph, design, tuple(config.statistics),
                   config.n_iterations, config.seed, config.trace_dir)
    if config.n_jobs == 1:
        outcomes = [task(rep) for rep in range(reps)]
    else:
        outcomes = Parallel(n_jobs=config.n_jobs)(
            delayed(task)(rep) for rep in range(reps))

    draws = {name: np.empty((reps, 5)) for name in config.statistics}
    n_observed = np.empty(reps, dtype=np.int64)
    for rep, (record, m) in enumerate(outcomes):
        n_observed[rep] = m
        for name in config.statistics:
            draws[name][rep] = record[name]

    srs_reps = config.srs_replications or reps
    rows = []
    for name in config.statistics:
        stat = statistic_for(name, design.n_samples)
        truth = graph.n_nodes if stat.kind == "size" else graph.mean_degree
        srs = srs_baseline(graph, design.final_sizes, stat, srs_reps,
                           np.random.default_rng(spawn_seed(config.seed, 3)))
        rows.append(_aggregate(name, stat.kind, draws[name], n_observed,
                               truth, level, srs.variance))

    return StudyResult(tuple(rows), draws, n_observed, graph.n_nodes,
                       graph.mean_degree, reps, level, config)


def _aggregate(name, kind, table, n_observed, truth, level, var_srs) -> StudyRow:
    pp, pv, rp, rv = table[:, 0], table[:, 1], table[:, 2], table[:, 3]
    reps = len(pp)
    cover = {"np": 0, "nr": 0, "lp": 0, "lr": 0}
    length = {"np": 0.0, "nr": 0.0, "lp": 0.0, "lr": 0.0}
    with_log = kind == "size"
    for r in range(reps):
        for tag, point, var in (("np", pp[r], pv[r]), ("nr", rp[r], rv[r])):
            lo, hi = normal_interval(point, max(var, 0.0), level)
            cover[tag] += lo <= truth <= hi
            length[tag] += hi - lo
        if with_log:
            for tag, point, var in (("lp", pp[r], pv[r]), ("lr", rp[r], rv[r])):
                lo, hi = log_interval(point, max(var, 0.0), int(n_observed[r]), level)
                cover[tag] += lo <= truth <= hi
                length[tag] += hi - lo
    nan = float("nan")
    return StudyRow(
        name, kind,
        float(pp.mean()), float(pp.var(ddof=1)),
        float(rp.mean()), float(rp.var(ddof=1)),
        var_srs, float(table[:, 4].mean()),
        cover["np"] / reps, cover["nr"] / reps,
        cover["lp"] / reps if with_log else nan,
        cover["lr"] / reps if with_log else nan,
        length["np"] / reps, length["nr"] / reps,
        length["lp"] / reps if with_log else nan,
        length["lr"] / reps if with_log else nan,
    )
