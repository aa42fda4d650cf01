"""Randomness test battery with analytic and Monte Carlo calibration."""

from .analytic import (
    accept_probability,
    longest_run_state_dist,
    template_hit_moments,
)
from .mc import accept_rates, batch_pvalues, collect_pvalues
from .suite import (
    DEFAULT_APEN_ORDER,
    DEFAULT_BLOCK_SIZE,
    DEFAULT_SERIAL_ORDER,
    MIN_LENGTHS,
    TestKind,
    TestOutcome,
    TestSpec,
    longest_run_config,
    run_test,
)
from .templates import (
    DEFAULT_TEMPLATE_LENGTH,
    aperiodic_templates,
    default_template,
    load_default_templates,
    template_self_overlaps,
)

__all__ = [
    "TestKind",
    "TestSpec",
    "TestOutcome",
    "run_test",
    "MIN_LENGTHS",
    "DEFAULT_BLOCK_SIZE",
    "DEFAULT_APEN_ORDER",
    "DEFAULT_SERIAL_ORDER",
    "longest_run_config",
    "accept_probability",
    "longest_run_state_dist",
    "template_hit_moments",
    "accept_rates",
    "batch_pvalues",
    "collect_pvalues",
    "aperiodic_templates",
    "default_template",
    "load_default_templates",
    "template_self_overlaps",
    "DEFAULT_TEMPLATE_LENGTH",
]
