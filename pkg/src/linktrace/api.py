"""High-level estimation interface in the scikit-learn idiom."""

from __future__ import annotations

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from ._validation import check_count, check_fraction
from .estimators import EstimateReport, log_interval, normal_interval, statistic_for
from .mcmc import run_chain
from .reorder import exact_rao_blackwell, n_reordering_tuples
from .sampling import ObservedData, reduce_observed

__all__ = ["RaoBlackwellEstimator"]


class RaoBlackwellEstimator(BaseEstimator):
    """Population estimation from link-traced samples, with improvement.

    Fitting computes the preliminary estimate (from the samples' actual
    initial sets) and its reordering-averaged improvement, either by
    exact enumeration when the reordering space is small or by the
    Metropolis-Hastings chain otherwise.

    Args:
        statistic: "chapman", "m0", "chao-lb", or "mean-degree".
        method: "exact", "mcmc", or "auto" (exact when the reordering
            space fits under ``enumeration_cap``).
        n_iterations: chain length for the mcmc path.
        enumeration_cap: largest reordering space the exact path takes.
        level: confidence level for both intervals.
        random_state: chain seed.

    Attributes (after fit):
        preliminary_: :class:`EstimateReport` before improvement.
        improved_: :class:`EstimateReport` after reordering averaging.
        method_: "exact" or "mcmc", whichever actually ran.
        n_reorderings_: size of the full reordering-tuple space.
        n_observed_: distinct units across the actual initial samples.
        diagnostics_: the exact average's diagnostics or the ChainResult.
    """

    def __init__(self, statistic="chapman", method="auto", n_iterations=20000,
                 enumeration_cap=100_000, level=0.95, random_state=None):
        self.statistic = statistic
        self.method = method
        self.n_iterations = n_iterations
        self.enumeration_cap = enumeration_cap
        self.level = level
        self.random_state = random_state

    def fit(self, observed: ObservedData, y=None) -> "RaoBlackwellEstimator":
        """Estimate from one survey's observed data."""
        if not isinstance(observed, ObservedData):
            raise ValueError("fit expects ObservedData from a link-traced survey")
        if self.method not in ("auto", "exact", "mcmc"):
            raise ValueError(f"unknown method {self.method!r}")
        check_count(self.n_iterations, "n_iterations")
        check_count(self.enumeration_cap, "enumeration_cap", minimum=1)
        level = check_fraction(self.level, "level", allow_one=False)
        stat = statistic_for(self.statistic, observed.n_samples)
        reduced = reduce_observed(observed)

        initial_sets = tuple(s.initial_units for s in observed.samples)
        union = set()
        for s in initial_sets:
            union.update(s)
        self.n_observed_ = len(union)
        self.n_reorderings_ = n_reordering_tuples(reduced)

        prelim_point = stat.point(initial_sets, reduced)
        prelim_var = stat.variance(initial_sets, reduced)
        self.preliminary_ = self._report(stat, prelim_point, prelim_var, level)

        method = self.method
        if method == "auto":
            method = "exact" if self.n_reorderings_ <= self.enumeration_cap else "mcmc"
        if method == "exact":
            res = exact_rao_blackwell(reduced, stat.point, stat.variance,
                                      enumeration_cap=self.enumeration_cap)
            self.improved_ = self._report(stat, res.point, res.variance, level)
            self.diagnostics_ = res.diagnostics
        else:
            res = run_chain(observed, stat, n_iterations=self.n_iterations,
                            random_state=self.random_state)
            self.improved_ = self._report(stat, res.point, res.variance, level)
            self.diagnostics_ = res
        self.method_ = method
        return self

    def _report(self, stat, point, variance, level) -> EstimateReport:
        log = None
        if stat.kind == "size":
            log = log_interval(point, variance, self.n_observed_, level)
        return EstimateReport(point, variance,
                              normal_interval(point, variance, level), log, level)

    def _fitted(self) -> None:
        if not hasattr(self, "improved_"):
            raise NotFittedError("call fit(observed) first")

    def summary(self) -> str:
        """Short human-readable account of both estimates."""
        self._fitted()
        lines = [f"statistic: {self.statistic}   method: {self.method_}   "
                 f"reordering space: {self.n_reorderings_}"]
        for label, rep in (("preliminary", self.preliminary_),
                           ("improved", self.improved_)):
            lo, hi = rep.normal
            lines.append(f"  {label:<11} point={rep.point:.4f} var={rep.variance:.4f} "
                         f"normal=({lo:.2f}, {hi:.2f})")
            if rep.log is not None:
                lines.append(f"  {'':<11} log=({rep.log[0]:.2f}, {rep.log[1]:.2f})")
        return "\n".join(lines)
