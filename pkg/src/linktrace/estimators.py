"""Mark-recapture estimators evaluated on initial samples.

Every estimator here consumes only the composition of the (possibly
hypothetical) initial samples plus observed degrees, never the selection
order.  That makes each one usable both as a preliminary estimate on the
survey's own initial samples and as the integrand of a reordering
average: functions with the ``(initial_sets, data)`` signature are
collected in :data:`STATISTICS`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Sequence

from scipy.special import ndtri

from ._validation import check_count, check_fraction
from .sampling import ReducedData

__all__ = [
    "chapman_estimate",
    "seber_variance",
    "mean_degree_estimate",
    "mean_degree_variance",
    "CaptureSummary",
    "chao_lower_bound",
    "m0_estimate",
    "rao_blackwell_variance",
    "z_value",
    "normal_interval",
    "log_interval",
    "EstimateReport",
    "ReorderStatistic",
    "STATISTICS",
    "statistic_for",
]

M0_SEARCH_CAP = 10_000_000


def chapman_estimate(n_first: int, n_second: int, overlap: int) -> float:
    """Chapman's two-sample population size estimate.

    ``(n1 + 1) (n2 + 1) / (m + 1) - 1`` for two simple random samples of
    sizes n1 and n2 sharing m units.  Finite even when the overlap is
    empty.

    Args:
        n_first: size of the first sample.
        n_second: size of the second sample.
        overlap: number of units in both samples.

    Returns:
        The estimate, never below ``n_first + n_second - overlap``.
    """
    n_first = check_count(n_first, "n_first", minimum=1)
    n_second = check_count(n_second, "n_second", minimum=1)
    overlap = check_count(overlap, "overlap")
    if overlap > min(n_first, n_second):
        raise ValueError(f"overlap {overlap} exceeds a sample size")
    return (n_first + 1) * (n_second + 1) / (overlap + 1) - 1.0


def seber_variance(n_first: int, n_second: int, overlap: int) -> float:
    """Seber's variance estimate for :func:`chapman_estimate`.

    ``(n1+1)(n2+1)(n1-m)(n2-m) / ((m+1)^2 (m+2))``.
    """
    n_first = check_count(n_first, "n_first", minimum=1)
    n_second = check_count(n_second, "n_second", minimum=1)
    overlap = check_count(overlap, "overlap")
    if overlap > min(n_first, n_second):
        raise ValueError(f"overlap {overlap} exceeds a sample size")
    num = (n_first + 1) * (n_second + 1) * (n_first - overlap) * (n_second - overlap)
    return num / ((overlap + 1) ** 2 * (overlap + 2))


def mean_degree_estimate(units: Iterable[int], degrees: Mapping[int, int]) -> float:
    """Average degree over a set of observed units."""
    units = list(units)
    if not units:
        raise ValueError("cannot average degrees over an empty set")
    return sum(degrees[u] for u in units) / len(units)


def mean_degree_variance(units: Iterable[int], degrees: Mapping[int, int],
                         n_hat: float) -> float:
    """Variance estimate for the mean degree of a without-replacement sample.

    ``((n_hat - m) / n_hat) * s^2 / m`` where m counts the units and s^2
    is their sample degree variance; the finite-population factor is
    clamped at zero when the estimated population is not larger than the
    sample.

    Args:
        units: the distinct sampled units.
        degrees: observed degree of each unit.
        n_hat: estimated population size (plug-in).
    """
    units = list(units)
    m = len(units)
    if m < 2:
        raise ValueError("need at least two units for a variance estimate")
    values = [degrees[u] for u in units]
    mean = sum(values) / m
    s2 = sum((v - mean) ** 2 for v in values) / (m - 1)
    fpc = max(1.0 - m / n_hat, 0.0) if n_hat > 0 else 0.0
    return fpc * s2 / m


@dataclass(frozen=True)
class CaptureSummary:
    """Capture frequencies of K samples: how often each unit was caught.

    ``frequencies[j-1]`` counts units appearing in exactly j samples.
    """

    n_samples: int
    total_captures: int
    distinct: int
    frequencies: tuple[int, ...]

    def __post_init__(self):
        if len(self.frequencies) != self.n_samples:
            raise ValueError("need one frequency per possible capture count")
        if sum(self.frequencies) != self.distinct:
            raise ValueError("frequencies do not sum to the distinct count")
        if sum((j + 1) * f for j, f in enumerate(self.frequencies)) != self.total_captures:
            raise ValueError("frequencies do not account for all captures")

    @classmethod
    def from_sets(cls, sets: Sequence[frozenset[int]]) -> "CaptureSummary":
        if not sets:
            raise ValueError("need at least one sample")
        counts: dict[int, int] = {}
        for s in sets:
            for u in s:
                counts[u] = counts.get(u, 0) + 1
        freq = [0] * len(sets)
        for c in counts.values():
            freq[c - 1] += 1
        return cls(len(sets), sum(len(s) for s in sets), len(counts), tuple(freq))


def chao_lower_bound(summary: CaptureSummary) -> float:
    """Chao's lower bound for the population size.

    ``M + f1^2 / (2 f2)`` from the singleton and doubleton counts; when
    no unit was caught exactly twice the bias-corrected form
    ``M + f1 (f1 - 1) / 2`` is used.
    """
    f1 = summary.frequencies[0]
    f2 = summary.frequencies[1] if summary.n_samples >= 2 else 0
    if f2 > 0:
        return summary.distinct + f1 * f1 / (2.0 * f2)
    return summary.distinct + f1 * (f1 - 1) / 2.0


def m0_estimate(summary: CaptureSummary, *, search_cap: int = M0_SEARCH_CAP) -> float:
    """Maximum-likelihood population size under equal catchability.

    Profiles the binomial capture probability out of the equal-catch
    likelihood and maximizes over integer population sizes between the
    distinct count and ``search_cap``, exploiting unimodality of the
    profile log-likelihood.

    Returns:
        The integer maximizer as a float, or ``inf`` when every capture
        was a distinct unit (no recaptures), in which case no finite
        maximum exists.
    """
    if summary.total_captures == summary.distinct:
        return math.inf
    return float(_m0_search(summary.n_samples, summary.total_captures,
                            summary.distinct, search_cap))


@lru_cache(maxsize=65536)
def _m0_search(k: int, n_total: int, distinct: int, cap: int) -> int:
    def loglik(n: int) -> float:
        kn = k * n
        value = math.lgamma(n + 1) - math.lgamma(n - distinct + 1)
        value += n_total * math.log(n_total / kn)
        if kn > n_total:
            value += (kn - n_total) * math.log1p(-n_total / kn)
        return value

    def rising(n: int) -> bool:
        return loglik(n + 1) > loglik(n)

    lo = distinct
    if not rising(lo):
        return lo
    hi = lo + 1
    while hi < cap and rising(hi):
        hi = min(2 * hi, cap)
    if hi >= cap and rising(hi):
        return cap
    # smallest n in (lo, hi] where the likelihood stops rising
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if rising(mid):
            lo = mid
        else:
            hi = mid
    return hi


def _m0_variance(summary: CaptureSummary, n_hat: float) -> float:
    # textbook asymptotic variance of the equal-catchability MLE
    if math.isinf(n_hat):
        return math.inf
    k = summary.n_samples
    p = summary.total_captures / (k * n_hat)
    if p >= 1.0:
        return 0.0
    denom = (1.0 - p) ** (-k) - k / (1.0 - p) + k - 1.0
    return n_hat / denom if denom > 0 else math.inf


def _chao_variance(summary: CaptureSummary, n_hat: float) -> float:
    # Chao's variance for the lower bound, with the sparse-data form
    f1 = summary.frequencies[0]
    f2 = summary.frequencies[1] if summary.n_samples >= 2 else 0
    if f2 > 0:
        ratio = f1 / f2
        return f2 * (ratio ** 4 / 4.0 + ratio ** 3 + ratio ** 2 / 2.0)
    if f1 == 0:
        return 0.0
    return (f1 * (f1 - 1) / 2.0 + f1 * (2 * f1 - 1) ** 2 / 4.0
            - f1 ** 4 / (4.0 * n_hat))


def rao_blackwell_variance(points: Sequence[float], variances: Sequence[float],
                           weights: Sequence[float]) -> float:
    """Combine per-reordering variance estimates into one.

    The weighted mean of the variance estimates minus the weighted spread
    of the point estimates.  A negative combination (possible in small
    samples) falls back to the weighted mean alone, which is
    conservative.

    Args:
        points: per-reordering point estimates.
        variances: matching variance estimates.
        weights: nonnegative weights; normalized internally.
    """
    if not (len(points) == len(variances) == len(weights)):
        raise ValueError("points, variances and weights must align")
    total = float(sum(weights))
    if total <= 0.0:
        raise ValueError("weights must have positive sum")
    mean = sum(w * p for w, p in zip(weights, points)) / total
    mean_var = sum(w * v for w, v in zip(weights, variances)) / total
    spread = sum(w * (p - mean) ** 2 for w, p in zip(weights, points)) / total
    value = mean_var - spread
    return value if value >= 0.0 else mean_var


def z_value(level: float) -> float:
    """Two-sided standard normal quantile for a confidence level."""
    level = check_fraction(level, "level", allow_one=False)
    return float(ndtri(0.5 + level / 2.0))


def normal_interval(point: float, variance: float,
                    level: float = 0.95) -> tuple[float, float]:
    """Symmetric normal-theory interval ``point ± z * sqrt(variance)``."""
    if variance < 0.0:
        raise ValueError("variance must be nonnegative")
    half = z_value(level) * math.sqrt(variance)
    return point - half, point + half


def log_interval(point: float, variance: float, n_observed: int,
                 level: float = 0.95) -> tuple[float, float]:
    """Log-transform interval anchored at the observed distinct count.

    Writes the estimate as ``n_observed + f0`` and applies a normal
    interval to ``log(f0)``, giving
    ``(n_observed + f0 / C, n_observed + f0 * C)`` with
    ``C = exp(z * sqrt(log(1 + variance / f0^2)))``.  Its lower bound
    can never fall below the number of distinct units actually seen.
    """
    if variance < 0.0:
        raise ValueError("variance must be nonnegative")
    n_observed = check_count(n_observed, "n_observed")
    f0 = point - n_observed
    if f0 <= 0.0:
        return float(n_observed), float(n_observed)
    c = math.exp(z_value(level) * math.sqrt(math.log1p(variance / (f0 * f0))))
    return n_observed + f0 / c, n_observed + f0 * c


@dataclass(frozen=True)
class EstimateReport:
    """A point estimate with its variance and confidence intervals."""

    point: float
    variance: float
    normal: tuple[float, float]
    log: tuple[float, float] | None
    level: float


@dataclass(frozen=True)
class ReorderStatistic:
    """An estimator pair usable as the integrand of a reordering average.

    ``point`` and ``variance`` map ``(initial_sets, reduced_data)`` to a
    value; both must depend on a reordering only through its initial
    sets.  ``kind`` is "size" for population-size estimators (which get
    log intervals and integer reporting) or "degree".
    """

    name: str
    kind: str
    point: Callable[[Sequence[frozenset[int]], ReducedData], float]
    variance: Callable[[Sequence[frozenset[int]], ReducedData], float]
    n_samples: tuple[int, int]  # inclusive (min, max) sample count

    def check_design(self, k: int) -> None:
        lo, hi = self.n_samples
        if not lo <= k <= hi:
            raise ValueError(f"statistic {self.name!r} needs {lo}..{hi} samples, got {k}")


def _chapman_point(sets, data):
    return chapman_estimate(len(sets[0]), len(sets[1]), len(sets[0] & sets[1]))


def _chapman_var(sets, data):
    return seber_variance(len(sets[0]), len(sets[1]), len(sets[0] & sets[1]))


def _union(sets):
    out = set()
    for s in sets:
        out.update(s)
    return out


def _mean_degree_point(sets, data):
    return mean_degree_estimate(_union(sets), data.degrees)


def _mean_degree_var(sets, data):
    # population size plugged in from the first two initial samples
    n_hat = chapman_estimate(len(sets[0]), len(sets[1]), len(sets[0] & sets[1]))
    return mean_degree_variance(_union(sets), data.degrees, n_hat)


def _m0_point(sets, data):
    return m0_estimate(CaptureSummary.from_sets(sets))


def _m0_var(sets, data):
    summary = CaptureSummary.from_sets(sets)
    return _m0_variance(summary, m0_estimate(summary))


def _chao_point(sets, data):
    return chao_lower_bound(CaptureSummary.from_sets(sets))


def _chao_var(sets, data):
    summary = CaptureSummary.from_sets(sets)
    return _chao_variance(summary, chao_lower_bound(summary))


STATISTICS: dict[str, ReorderStatistic] = {
    s.name: s for s in (
        ReorderStatistic("chapman", "size", _chapman_point, _chapman_var, (2, 2)),
        ReorderStatistic("mean-degree", "degree", _mean_degree_point,
                         _mean_degree_var, (2, 64)),
        ReorderStatistic("m0", "size", _m0_point, _m0_var, (2, 64)),
        ReorderStatistic("chao-lb", "size", _chao_point, _chao_var, (2, 64)),
    )
}


def statistic_for(name: str, n_samples: int | None = None) -> ReorderStatistic:
    """Look up a named statistic, optionally checking the sample count."""
    try:
        stat = STATISTICS[name]
    except KeyError:
        raise ValueError(
            f"unknown statistic {name!r}; choose from {sorted(STATISTICS)}") from None
    if n_samples is not None:
        stat.check_design(n_samples)
    return stat
