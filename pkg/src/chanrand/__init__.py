"""Correlated bit sources, randomness testing, and key-generation security.

The package models a lag-1 Markov bit source (the kind produced by
quantizing a reciprocal fading channel), provides a battery of
statistical randomness tests with closed-form accept probabilities under
that source, the tree-search attack an adversary can mount on it, and a
grid-search procedure that picks a significance level and compression
ratio so random guessing of the final key is at least as good as the
attack. A simulation pipeline ties the pieces together end to end.
"""

from .bitmodel import (
    BitSequence,
    MarkovBitModel,
    MaryMarkovModel,
    encode_states,
    generate,
    generate_batch,
    lag1_correlation,
    mary_correlation,
    read_bits_packed,
    read_bits_text,
    sample_states,
    transition_matrix,
    write_bits_packed,
    write_bits_text,
)
from .errors import (
    ChanRandError,
    DegenerateVarianceError,
    DomainError,
    InputError,
    InsufficientBudgetError,
    InsufficientDataError,
    ScaleError,
)
from .guideline import (
    GridSpec,
    GuidelineProblem,
    GuidelineSolution,
    constraint_slack,
    efficiency,
    empirical_accept_fn,
    feasible,
    optimize,
)
from .mlts import (
    AdversaryBudget,
    SecurityReport,
    budget_from_searches,
    build_security_report,
    collision_prob,
    enumerate_mlts,
    eve_success_prob,
    mlts_success_prob,
    mlts_success_prob_exact_budget,
    mlts_success_prob_mary,
    mlts_success_prob_raw,
    realizable_searches,
    rg_success_prob,
    security_loss,
)
from .pipeline import (
    ChannelConfig,
    PipelineConfig,
    PipelineReport,
    QuantizerConfig,
    TrialRow,
    level_crossing_quantize,
    mary_quantize,
    parity_kept_mask,
    parse_config,
    privacy_amplify,
    reconcile,
    run_pipeline,
    simulate_channel,
)
from .randtests import (
    TestKind,
    TestOutcome,
    TestSpec,
    accept_probability,
    accept_rates,
    aperiodic_templates,
    longest_run_state_dist,
    run_test,
    template_hit_moments,
)
from .rng import ALGORITHM, derive_generator, derive_seed, fresh_seed, make_generator

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "ALGORITHM",
    "AdversaryBudget",
    "BitSequence",
    "ChanRandError",
    "ChannelConfig",
    "DegenerateVarianceError",
    "DomainError",
    "GridSpec",
    "GuidelineProblem",
    "GuidelineSolution",
    "InputError",
    "InsufficientBudgetError",
    "InsufficientDataError",
    "MarkovBitModel",
    "MaryMarkovModel",
    "PipelineConfig",
    "PipelineReport",
    "QuantizerConfig",
    "ScaleError",
    "SecurityReport",
    "TestKind",
    "TestOutcome",
    "TestSpec",
    "TrialRow",
    "accept_probability",
    "accept_rates",
    "aperiodic_templates",
    "budget_from_searches",
    "build_security_report",
    "collision_prob",
    "constraint_slack",
    "derive_generator",
    "derive_seed",
    "efficiency",
    "empirical_accept_fn",
    "encode_states",
    "enumerate_mlts",
    "eve_success_prob",
    "feasible",
    "fresh_seed",
    "generate",
    "generate_batch",
    "lag1_correlation",
    "level_crossing_quantize",
    "longest_run_state_dist",
    "make_generator",
    "mary_correlation",
    "mary_quantize",
    "mlts_success_prob",
    "mlts_success_prob_exact_budget",
    "mlts_success_prob_mary",
    "mlts_success_prob_raw",
    "optimize",
    "parity_kept_mask",
    "parse_config",
    "privacy_amplify",
    "read_bits_packed",
    "read_bits_text",
    "realizable_searches",
    "reconcile",
    "rg_success_prob",
    "run_pipeline",
    "run_test",
    "sample_states",
    "security_loss",
    "simulate_channel",
    "template_hit_moments",
    "transition_matrix",
    "write_bits_packed",
    "write_bits_text",
]
