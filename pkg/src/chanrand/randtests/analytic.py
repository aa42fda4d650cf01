"""Closed-form accept probabilities of the tests under the Markov model.

For a source with lag-1 correlation rho, each test's accept probability
h(rho, alpha) = P(p_value > alpha) is evaluated without simulation:

- frequency, runs, and DFT through Gaussian approximations of their
  statistics, whose means and variances under the chain are known;
- the chi-square family (block frequency, longest run, template
  matching, approximate entropy, serial) through a scaled chi-square
  approximation: the statistic's expectation under the chain, divided by
  its expectation under the fair coin, rescales the acceptance
  threshold.

All forms reduce to exactly 1 - alpha at rho = 0, are monotone
non-increasing in alpha, and tend to 1 as alpha tends to 0.

Two building blocks are exposed because they are useful on their own:
the distribution of the longest ones-run in a Markov block
(``longest_run_state_dist``) and the occurrence moments of a template
under the non-overlapping scan (``template_hit_moments``).
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np

from .. import specfun
from ..bitmodel import BitSequence
from ..errors import DomainError, InsufficientDataError
from .suite import (
    TestKind,
    TestSpec,
    _TEMPLATE_BLOCKS,
    longest_run_config,
)
from .templates import template_self_overlaps

__all__ = [
    "accept_probability",
    "longest_run_state_dist",
    "template_hit_moments",
]

_GAUSSIAN_KINDS = frozenset(
    {TestKind.FREQUENCY, TestKind.RUNS, TestKind.DFT}
)


def _check_rho(rho: float) -> float:
    rho = float(rho)
    if not -1.0 < rho < 1.0 or math.isnan(rho):
        raise DomainError(
            f"analytic accept probability needs rho in (-1, 1), got {rho!r}"
        )
    return rho


def accept_probability(
    spec: TestSpec, rho: float, length: Optional[int] = None
) -> float:
    """P(test accepts) for a Markov source with lag-1 correlation rho.

    ``length`` is the sequence length the test will see; only the
    frequency test is length-free. Values are clamped to [0, 1].
    """
    rho = _check_rho(rho)
    kind = spec.kind
    if kind is TestKind.FREQUENCY:
        h = _freq_accept(rho, spec.alpha)
    else:
        if length is None:
            raise DomainError(f"{kind.value} accept probability needs a length")
        if length < 2:
            raise InsufficientDataError(
                f"length must be at least 2, got {length}"
            )
        if kind is TestKind.RUNS:
            h = _runs_accept(rho, spec.alpha, length)
        elif kind is TestKind.DFT:
            h = _dft_accept(rho, spec.alpha, length)
        else:
            h = _chi_accept(spec, rho, length)
    return min(1.0, max(0.0, h))


# ---------------------------------------------------------------------------
# Gaussian-statistic tests


def _freq_accept(rho: float, alpha: float) -> float:
    # The normalized bit sum is N(0, (1+rho)/(1-rho)) in the limit.
    t = specfun.erfc_inv(alpha)
    return specfun.erf(t * math.sqrt((1.0 - rho) / (1.0 + rho)))


def _two_sided_band(half_width: float, mean: float, sd: float) -> float:
    """P(|X - 0| < half_width) for X ~ N(mean, sd^2), as an erf pair."""
    if sd <= 0.0:
        return 1.0 if abs(mean) < half_width else 0.0
    s = sd * math.sqrt(2.0)
    return 0.5 * (
        specfun.erf((half_width + mean) / s)
        + specfun.erf((half_width - mean) / s)
    )


def _runs_accept(rho: float, alpha: float, length: int) -> float:
    # Transition count is Binomial(L-1, theta); the test's band is cut
    # around L/2 with the fair-coin width.
    theta = (1.0 - rho) / 2.0
    half_width = 0.5 * math.sqrt(2.0 * length) * specfun.erfc_inv(alpha)
    mean = length * theta - length / 2.0
    sd = math.sqrt(length * theta * (1.0 - theta))
    return _two_sided_band(half_width, mean, sd)


@lru_cache(maxsize=512)
def _dft_low_band_prob(rho: float, length: int) -> float:
    """Mean probability that a spectral bin falls below the 95% cutoff."""
    half = length // 2
    freqs = np.arange(half) * (2.0 * math.pi / length)
    # Spectral density of the +-1 chain at each bin frequency.
    g = (1.0 - rho * rho) / (1.0 - 2.0 * rho * np.cos(freqs) + rho * rho)
    return float(np.mean(1.0 - 0.05 ** (1.0 / g)))


def _dft_accept(rho: float, alpha: float, length: int) -> float:
    half_bins = length // 2
    p_low = _dft_low_band_prob(rho, length)
    sd0 = math.sqrt(length * 0.95 * 0.05 / 4.0)
    half_width = math.sqrt(2.0) * specfun.erfc_inv(alpha) * sd0
    mean = (p_low - 0.95) * half_bins
    sd = math.sqrt(length * p_low * (1.0 - p_low) / 4.0)
    return _two_sided_band(half_width, mean, sd)


# ---------------------------------------------------------------------------
# chi-square family: h = P(chi2_dof < threshold(alpha) / scale)


@lru_cache(maxsize=4096)
def _chi_threshold(half_dof: float, alpha: float) -> float:
    return specfun.inv_reg_inc_gamma_upper(half_dof, alpha)


def _chi_accept(spec: TestSpec, rho: float, length: int) -> float:
    half_dof, scale = _chi_family_params(spec, rho, length)
    scale = max(scale, 1e-12)
    t = _chi_threshold(half_dof, spec.alpha)
    return specfun.reg_inc_gamma(half_dof, t / scale)


def _chi_family_params(
    spec: TestSpec, rho: float, length: int
) -> Tuple[float, float]:
    """(half dof, expectation scale E_rho[stat] / E_0[stat]) per kind."""
    kind = spec.kind
    if kind is TestKind.BLOCK_FREQUENCY:
        m = spec.resolved_block_size()
        blocks = length // m
        if blocks < 1:
            raise InsufficientDataError(
                f"need at least one block of {m} bits, got {length}"
            )
        return blocks / 2.0, _block_sum_var_scale(rho, m)
    if kind is TestKind.LONGEST_RUN:
        return _longest_run_params(rho, length)
    if kind is TestKind.NON_OVERLAPPING:
        return _template_params(spec.resolved_template(), rho, length)
    if kind is TestKind.APPROXIMATE_ENTROPY:
        m = spec.resolved_pattern_order()
        dof = 2.0**m
        ncp = 2.0 * length * (math.log(2.0) - _flip_entropy(rho))
        return dof / 2.0, 1.0 + ncp / dof
    if kind is TestKind.SERIAL1:
        m = spec.resolved_pattern_order()
        dof = 2.0 ** (m - 1)
        ncp = length * (_psi_tilde(rho, m, length) - _psi_tilde(rho, m - 1, length))
        return dof / 2.0, 1.0 + ncp / dof
    if kind is TestKind.SERIAL2:
        m = spec.resolved_pattern_order()
        dof = 2.0 ** (m - 2)
        ncp = length * (
            _psi_tilde(rho, m, length)
            - 2.0 * _psi_tilde(rho, m - 1, length)
            + _psi_tilde(rho, m - 2, length)
        )
        return dof / 2.0, 1.0 + ncp / dof
    raise DomainError(f"no chi-square form for {kind.value}")


@lru_cache(maxsize=4096)
def _block_sum_var_scale(rho: float, block_size: int) -> float:
    """Var of a block's bit sum under the chain over its fair-coin value."""
    k = np.arange(1, block_size)
    return float(1.0 + 2.0 / block_size * ((block_size - k) * rho**k).sum())


def _flip_entropy(rho: float) -> float:
    """Conditional entropy (nats) of the next bit given the current one."""
    theta = (1.0 - rho) / 2.0
    h = 0.0
    for p in (theta, 1.0 - theta):
        if p > 0.0:
            h -= p * math.log(p)
    return h


def _psi_tilde(rho: float, order: int, length: int) -> float:
    """E[psi^2_order] / length: 2^k * sum of squared pattern probs, minus 1."""
    if order <= 0:
        return 0.0
    # Chain the squared transition probabilities across the pattern.
    p_same = (0.5 + rho / 2.0) ** 2
    p_diff = (0.5 - rho / 2.0) ** 2
    m2 = np.array([[p_same, p_diff], [p_diff, p_same]])
    v = np.array([0.25, 0.25])
    for _ in range(order - 1):
        v = v @ m2
    return 2.0**order * float(v.sum()) - 1.0


# ---------------------------------------------------------------------------
# longest ones-run distribution in a Markov block


def _check_chain_rho(rho: float) -> float:
    rho = float(rho)
    if not -1.0 < rho < 1.0 or math.isnan(rho):
        raise DomainError(
            f"run-length distribution needs rho in (-1, 1), got {rho!r}"
        )
    return rho


@lru_cache(maxsize=8192)
def _longest_run_cdf(rho: float, cap: int, block_len: int) -> float:
    """P(longest ones-run <= cap) over a stationary Markov block."""
    if cap < 0:
        return 0.0
    if cap >= block_len:
        return 1.0
    p_same = 0.5 + rho / 2.0
    p_diff = 0.5 - rho / 2.0
    # State = current trailing ones-run length, 0..cap; exceeding cap
    # leaks out of the (sub-stochastic) matrix.
    q = np.zeros((cap + 1, cap + 1))
    q[0, 0] = p_same
    if cap >= 1:
        q[0, 1] = p_diff
        q[1:, 0] = p_diff
        for j in range(1, cap):
            q[j, j + 1] = p_same
    state = np.zeros(cap + 1)
    state[0] = 0.5
    if cap >= 1:
        state[1] = 0.5
    for _ in range(block_len - 1):
        state = state @ q
    return float(state.sum())


def longest_run_state_dist(
    rho: float, run_cap: int, block_len: int
) -> np.ndarray:
    """Distribution of the longest ones-run within a block of the chain.

    Entry j < run_cap is P(longest run == j); the final entry run_cap
    absorbs everything at or above the cap. Entries sum to 1.
    """
    rho = _check_chain_rho(rho)
    if run_cap < 1:
        raise DomainError(f"run_cap must be >= 1, got {run_cap}")
    if block_len < 1:
        raise DomainError(f"block_len must be >= 1, got {block_len}")
    cdf = np.array(
        [_longest_run_cdf(rho, c, block_len) for c in range(run_cap)]
    )
    out = np.empty(run_cap + 1)
    out[0] = cdf[0]
    out[1:run_cap] = np.diff(cdf)
    out[run_cap] = 1.0 - cdf[run_cap - 1]
    return out


def _longest_run_params(rho: float, length: int) -> Tuple[float, float]:
    block, lo, hi, table = longest_run_config(length)
    blocks = length // block

    def class_probs(r: float) -> np.ndarray:
        cdf = np.array(
            [_longest_run_cdf(r, c, block) for c in range(lo, hi)]
        )
        probs = np.empty(hi - lo + 1)
        probs[0] = cdf[0]
        probs[1:-1] = np.diff(cdf)
        probs[-1] = 1.0 - cdf[-1]
        return probs

    def expected_stat(p: np.ndarray) -> float:
        # E[chi2] when class counts have mean N*p against table probs.
        return float(
            ((p * (1.0 - p) + blocks * (p - table) ** 2) / table).sum()
        )

    num = expected_stat(class_probs(rho))
    den = expected_stat(class_probs(0.0))
    return (hi - lo) / 2.0, num / den


# ---------------------------------------------------------------------------
# template occurrence moments under the non-overlapping scan


def template_hit_moments(
    template: BitSequence, rho: float, window: int
) -> Tuple[float, float]:
    """(mean, variance) of non-overlapping template hits in a window.

    The scan restarts past each full match; the count is modeled as
    Poisson (variance equals mean), with the per-position hit rate
    corrected for the template's self-overlap structure so that clumped
    occurrences are not double-counted.
    """
    rho = _check_chain_rho(rho)
    m = len(template)
    if m < 1:
        raise DomainError("template must be non-empty")
    if window < m:
        raise InsufficientDataError(
            f"window of {window} bits cannot hold a length-{m} template"
        )
    bits = template.bits

    def step(a: int, b: int) -> float:
        return 0.5 + rho / 2.0 if a == b else 0.5 - rho / 2.0

    occur = 0.5
    for t in range(m - 1):
        occur *= step(bits[t], bits[t + 1])

    clump = 1.0
    for t in template_self_overlaps(template):
        # Continuation probability of a restart shifted m - t positions.
        cont = step(bits[m - 1], bits[t])
        for l in range(t, m - 1):
            cont *= step(bits[l], bits[l + 1])
        clump += cont
    mean = (window - m + 1) * occur / clump
    return mean, mean


def _template_params(
    template: BitSequence, rho: float, length: int
) -> Tuple[float, float]:
    blocks = _TEMPLATE_BLOCKS
    window = length // blocks
    m = len(template)
    if window < m:
        raise InsufficientDataError(
            f"blocks of {window} bits cannot hold a length-{m} template"
        )
    mu0 = (window - m + 1) / 2.0**m
    var0 = window * (2.0**-m - (2.0 * m - 1.0) / 2.0 ** (2 * m))

    def expected_stat(r: float) -> float:
        mean, var = template_hit_moments(template, r, window)
        return (var + (mean - mu0) ** 2) / var0

    return blocks / 2.0, expected_stat(rho) / expected_stat(0.0)
