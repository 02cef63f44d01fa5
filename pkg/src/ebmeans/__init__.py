"""Empirical-prior Bayesian inference for sparse normal means."""

from .experiments import (
    CoverageRow,
    ExperimentSpec,
    coverage_experiment,
    emit_plot_svg,
    generate_data,
    read_coverage_csv,
    read_experiment_config,
    replicate_seeds,
    run_replicate,
    write_coverage_csv,
)
from .inference import (
    IntervalRequest,
    IntervalResult,
    inclusion_from_samples,
    interval_from_samples,
    median_probability_model,
    mixture_from_samples,
    posterior_mean,
)
from .mixture import NormalStepMixture
from .model import (
    BetaBinomialPrior,
    ComplexityPrior,
    Configuration,
    DataVector,
    ModelConfig,
    SizePrior,
    log_config_prior,
    log_size_prior,
    log_unnorm_posterior,
    posterior_variance,
)
from .oracle import (
    EnumerationCapError,
    LinearFunctional,
    PosteriorTable,
    enumerate_posterior,
    equal_tailed_interval,
    functional_cdf,
    functional_mixture,
    inclusion_probability,
    upper_credible_bound,
)
from .samplers import (
    ChainSettings,
    ChainSummary,
    ConfigurationSamples,
    chain_summary,
    conditional_inclusion_probabilities,
    draw_theta_given_config,
    gibbs_chain,
    mh_chain,
)
from .theory import (
    RatioBoundReport,
    SignalPartition,
    rho_threshold,
    size_prior_ratio_report,
    strong_signal_partition,
    tv_upper_bound,
    zeta_threshold,
)

__version__ = "0.1.0"
