"""Simulation and estimation toolkit for single-ancilla phase estimation.

The package splits along the experiment pipeline:

``spectrum``
    Eigenphase/weight containers and circular-error helpers.
``simulator``
    Exact outcome distributions and samplers for multi-round
    experiments, with optional depolarizing noise.
``design``
    Measurement schedules: fixed single-round cycles, the k = 1
    multi-round layout, and the adaptive order rule.
``extraction``
    Spectral-signal estimation g(k) from counts, including the
    closed-form weight-pair coefficients with their enumeration oracle.
``prony``
    Hankel matrix-pencil recovery of phases and amplitudes from a
    signal, with single- and double-sided variants.
``bayes``
    Fourier-represented Bayesian posterior, multi-eigenvalue tracking
    and the amplitude belief.
``bench``
    Seeded Monte-Carlo campaigns tying the above together; the
    ``qpe-bench`` console script fronts it.
"""

from .spectrum import (
    ErrorStats,
    Spectrum,
    circular_distance,
    error_stats,
    load_spectrum,
    save_spectrum,
    wrap_phase,
)
from .simulator import (
    AggregatedCounts,
    ExperimentSpec,
    NoiseModel,
    RoundSpec,
    experiment_outcome_prob,
    hamming_pmf,
    hamming_prob,
    round_outcome_prob,
    run_schedule,
    sample_experiment,
)
from .design import (
    BayesAdaptivePolicy,
    adaptive_order,
    schedule_k_tot,
    ts_multi_round_schedule,
    ts_single_round_schedule,
)
from .extraction import (
    SignalEstimate,
    chi_closed_form,
    chi_oracle,
    chi_table,
    exact_signal,
    extend_negative,
    g_from_multi_round,
    g_from_single_round,
)
from .prony import (
    PronyEstimate,
    build_hankel,
    eigenphases,
    estimate,
    recover_amplitudes,
    select_target,
    solve_shift,
)
from .bayes import (
    AmplitudeBelief,
    FourierPosterior,
    MultiEigPosterior,
    estimate_phase,
    holevo_var,
    init_flat,
    init_multi,
    mle_amplitudes_exact,
    newton_step,
    rejection_check,
    update_multi,
    update_single,
)
from .bench import ScenarioConfig, run_scenario

__version__ = "0.1.0"

__all__ = [
    "AggregatedCounts",
    "AmplitudeBelief",
    "BayesAdaptivePolicy",
    "ErrorStats",
    "ExperimentSpec",
    "FourierPosterior",
    "MultiEigPosterior",
    "NoiseModel",
    "PronyEstimate",
    "RoundSpec",
    "ScenarioConfig",
    "SignalEstimate",
    "Spectrum",
    "adaptive_order",
    "build_hankel",
    "chi_closed_form",
    "chi_oracle",
    "chi_table",
    "circular_distance",
    "eigenphases",
    "error_stats",
    "estimate",
    "estimate_phase",
    "exact_signal",
    "extend_negative",
    "experiment_outcome_prob",
    "g_from_multi_round",
    "g_from_single_round",
    "hamming_pmf",
    "hamming_prob",
    "holevo_var",
    "init_flat",
    "init_multi",
    "load_spectrum",
    "mle_amplitudes_exact",
    "newton_step",
    "recover_amplitudes",
    "rejection_check",
    "round_outcome_prob",
    "run_scenario",
    "run_schedule",
    "sample_experiment",
    "save_spectrum",
    "schedule_k_tot",
    "select_target",
    "solve_shift",
    "ts_multi_round_schedule",
    "ts_single_round_schedule",
    "update_multi",
    "update_single",
    "wrap_phase",
]
