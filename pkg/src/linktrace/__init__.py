"""Link-traced network sampling and reordering-averaged estimation.

The package covers the full pipeline: population graphs
(:mod:`linktrace.population`), adaptive link-traced sample selection
(:mod:`linktrace.sampling`), replaying hypothetical selection orders
(:mod:`linktrace.reorder`), mark-recapture estimators
(:mod:`linktrace.estimators`), a Metropolis-Hastings sampler over
reorderings (:mod:`linktrace.mcmc`), the high-level estimation interface
(:mod:`linktrace.api`), and simulation studies with a command line
(:mod:`linktrace.study`, :mod:`linktrace.cli`).
"""

from .api import RaoBlackwellEstimator
from .estimators import (
    STATISTICS,
    CaptureSummary,
    EstimateReport,
    ReorderStatistic,
    chao_lower_bound,
    chapman_estimate,
    log_interval,
    m0_estimate,
    mean_degree_estimate,
    mean_degree_variance,
    normal_interval,
    rao_blackwell_variance,
    seber_variance,
    statistic_for,
    z_value,
)
from .mcmc import ChainResult, candidate_prob, propose_candidate, run_chain, run_chain_multi
from .population import PopulationGraph, load_edge_list, random_population, write_edge_list
from .reorder import (
    EnumerationLimitError,
    ExactResult,
    RBDiagnostics,
    Reordering,
    exact_rao_blackwell,
    full_selection_prob,
    is_consistent,
    iter_orderings,
    n_orderings,
    n_reordering_tuples,
    selection_weight,
)
from .sampling import (
    ActiveSetPolicy,
    AdaptiveWebSampler,
    DesignConfig,
    ObservedData,
    OrderedSample,
    ReducedData,
    collect_observed,
    draw_sample,
    draw_sample_jump,
    read_observed,
    reduce_observed,
    write_observed,
)
from .study import PRESETS, SRSBaseline, StudyConfig, StudyResult, StudyRow, run_study, srs_baseline

__version__ = "0.1.0"
