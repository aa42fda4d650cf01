"""Batch Monte Carlo estimation of test accept rates.

Every test kind has an array core that computes p-values for a whole
(trials, length) batch at once, so calibration sweeps over 10^4..10^5
trials stay in numpy. Sequences come from the same Markov generator the
rest of the package uses; chunking keeps memory bounded and is seeded
per chunk, so results are reproducible for a fixed (seed, length,
trials) triple.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np
import scipy.special as sp

from ..bitmodel import MarkovBitModel, generate_batch
from ..errors import InsufficientDataError
from ..rng import derive_seed
from .suite import (
    MIN_LENGTHS,
    TestKind,
    TestSpec,
    _TEMPLATE_BLOCKS,
    _longest_one_runs,
    _non_overlap_counts,
    longest_run_config,
)
from .templates import template_self_overlaps

__all__ = ["batch_pvalues", "accept_rates", "collect_pvalues"]

_CHUNK_BITS = 2**26


def batch_pvalues(spec: TestSpec, batch: np.ndarray) -> np.ndarray:
    """p-values of one test applied to every row of a (trials, L) array."""
    x = np.ascontiguousarray(batch, dtype=np.uint8)
    if x.ndim != 2:
        raise ValueError(f"batch must be 2-d, got shape {x.shape}")
    kind = spec.kind
    if kind is TestKind.FREQUENCY:
        return _batch_frequency(x)
    if kind is TestKind.BLOCK_FREQUENCY:
        return _batch_block_frequency(x, spec.resolved_block_size())
    if kind is TestKind.RUNS:
        return _batch_runs(x)
    if kind is TestKind.LONGEST_RUN:
        return _batch_longest_run(x)
    if kind is TestKind.DFT:
        return _batch_dft(x)
    if kind is TestKind.NON_OVERLAPPING:
        return _batch_template(x, spec.resolved_template().bits)
    if kind is TestKind.APPROXIMATE_ENTROPY:
        return _batch_apen(x, spec.resolved_pattern_order())
    if kind is TestKind.SERIAL1:
        return _batch_serial(x, spec.resolved_pattern_order(), 1)
    return _batch_serial(x, spec.resolved_pattern_order(), 2)


def accept_rates(
    spec: TestSpec,
    rho: float,
    length: int,
    trials: int,
    seed: int,
    alphas: Optional[Sequence[float]] = None,
    *,
    enforce_min_length: bool = True,
) -> np.ndarray:
    """Fraction of simulated sequences accepted, per alpha.

    Returns an array aligned with ``alphas`` (default: the spec's own
    alpha). The verdict rule is the strict p > alpha comparison.
    """
    if enforce_min_length and length < MIN_LENGTHS[spec.kind]:
        raise InsufficientDataError(
            f"{spec.kind.value} needs at least {MIN_LENGTHS[spec.kind]} bits, "
            f"got {length}"
        )
    grid = np.atleast_1d(
        np.asarray(alphas if alphas is not None else [spec.alpha], dtype=float)
    )
    model = MarkovBitModel(rho)
    counts = np.zeros(grid.size, dtype=np.int64)
    chunk = max(1, _CHUNK_BITS // max(length, 1))
    done = 0
    index = 0
    while done < trials:
        n = min(chunk, trials - done)
        batch = generate_batch(model, length, n, derive_seed(seed, index))
        p = batch_pvalues(spec, batch)
        counts += (p[:, None] > grid[None, :]).sum(axis=0)
        done += n
        index += 1
    return counts / float(trials)


def collect_pvalues(
    spec: TestSpec, rho: float, length: int, trials: int, seed: int
) -> np.ndarray:
    """All per-trial p-values of a simulated batch, concatenated."""
    model = MarkovBitModel(rho)
    parts = []
    chunk = max(1, _CHUNK_BITS // max(length, 1))
    done = 0
    index = 0
    while done < trials:
        n = min(chunk, trials - done)
        batch = generate_batch(model, length, n, derive_seed(seed, index))
        parts.append(batch_pvalues(spec, batch))
        done += n
        index += 1
    return np.concatenate(parts)


# ---------------------------------------------------------------------------
# array cores


def _batch_frequency(x: np.ndarray) -> np.ndarray:
    n = x.shape[1]
    s = (2.0 * x.sum(axis=1, dtype=np.int64) - n) / math.sqrt(n)
    return sp.erfc(np.abs(s) / math.sqrt(2.0))


def _batch_block_frequency(x: np.ndarray, block_size: int) -> np.ndarray:
    trials, n = x.shape
    blocks = n // block_size
    if blocks < 1:
        raise InsufficientDataError(
            f"need at least one block of {block_size} bits, got {n}"
        )
    props = (
        x[:, : blocks * block_size]
        .reshape(trials, blocks, block_size)
        .mean(axis=2)
    )
    chi = 4.0 * block_size * ((props - 0.5) ** 2).sum(axis=1)
    return sp.gammaincc(blocks / 2.0, chi / 2.0)


def _batch_runs(x: np.ndarray) -> np.ndarray:
    trials, n = x.shape
    pi = x.mean(axis=1)
    v = 1 + (x[:, 1:] != x[:, :-1]).sum(axis=1, dtype=np.int64)
    num = np.abs(v - 2.0 * n * pi * (1.0 - pi))
    den = 2.0 * math.sqrt(2.0 * n) * pi * (1.0 - pi)
    out = np.zeros(trials)
    # Constant rows must stay in the rejected bucket even when n < 16 makes
    # the pre-test band vacuous; they would divide by zero otherwise.
    ok = (np.abs(pi - 0.5) < 2.0 / math.sqrt(n)) & (pi > 0.0) & (pi < 1.0)
    out[ok] = sp.erfc(num[ok] / den[ok])
    return out


def _batch_longest_run(x: np.ndarray) -> np.ndarray:
    trials, n = x.shape
    block, lo, hi, probs = longest_run_config(n)
    blocks = n // block
    flat = (
        x[:, : blocks * block]
        .reshape(trials * blocks, block)
        .astype(np.int64)
    )
    classes = (np.clip(_longest_one_runs(flat), lo, hi) - lo).reshape(
        trials, blocks
    )
    nclass = hi - lo + 1
    v = np.zeros((trials, nclass))
    rows = np.repeat(np.arange(trials), blocks)
    np.add.at(v, (rows, classes.reshape(-1)), 1.0)
    expected = blocks * probs
    chi = ((v - expected) ** 2 / expected).sum(axis=1)
    return sp.gammaincc((hi - lo) / 2.0, chi / 2.0)


def _batch_dft(x: np.ndarray) -> np.ndarray:
    n = x.shape[1]
    signed = 2.0 * x.astype(np.float64) - 1.0
    mods = np.abs(np.fft.rfft(signed, axis=1))[:, : n // 2]
    threshold = math.sqrt(n * math.log(1.0 / 0.05))
    n1 = (mods < threshold).sum(axis=1)
    d = (n1 - 0.95 * n / 2.0) / math.sqrt(n * 0.95 * 0.05 / 4.0)
    return sp.erfc(np.abs(d) / math.sqrt(2.0))


def _batch_template(x: np.ndarray, template: np.ndarray) -> np.ndarray:
    trials, n = x.shape
    m = template.size
    blocks = _TEMPLATE_BLOCKS
    window = n // blocks
    if window < m:
        raise InsufficientDataError(
            f"blocks of {window} bits cannot hold a length-{m} template"
        )
    mean = (window - m + 1) / 2.0**m
    var = window * (2.0**-m - (2.0 * m - 1.0) / 2.0 ** (2 * m))
    if template_self_overlaps(_TemplateView(template)):
        # Self-overlapping template: the scan's restart skip matters, fall
        # back to the sequential per-block counter.
        counts = np.empty((trials, blocks))
        for i in range(trials):
            for b in range(blocks):
                counts[i, b] = _non_overlap_counts(
                    x[i, b * window : (b + 1) * window], template
                )
    else:
        # Aperiodic template: occurrences cannot overlap, so the count is
        # a plain window-match count, which vectorizes.
        code = 0
        for bit in template:
            code = code * 2 + int(bit)
        vals = np.zeros((trials, n - m + 1), dtype=np.int64)
        for j in range(m):
            vals = vals * 2 + x[:, j : j + n - m + 1]
        match = vals == code
        counts = np.empty((trials, blocks))
        for b in range(blocks):
            counts[:, b] = match[
                :, b * window : b * window + window - m + 1
            ].sum(axis=1)
    chi = ((counts - mean) ** 2 / var).sum(axis=1)
    return sp.gammaincc(blocks / 2.0, chi / 2.0)


class _TemplateView:
    """Minimal BitSequence-alike over a raw array, for overlap checks."""

    def __init__(self, bits: np.ndarray):
        self._bits = bits

    def to_string(self) -> str:
        return "".join("1" if b else "0" for b in self._bits)


def _batch_pattern_counts(x: np.ndarray, order: int) -> np.ndarray:
    trials, n = x.shape
    aug = np.concatenate([x, x[:, : order - 1]], axis=1) if order > 1 else x
    vals = np.zeros((trials, n), dtype=np.int64)
    for j in range(order):
        vals = vals * 2 + aug[:, j : j + n]
    counts = np.zeros((trials, 2**order))
    rows = np.repeat(np.arange(trials), n)
    np.add.at(counts, (rows, vals.reshape(-1)), 1.0)
    return counts


def _batch_apen(x: np.ndarray, order: int) -> np.ndarray:
    n = x.shape[1]
    if n < 2 ** (order + 1):
        raise InsufficientDataError(
            f"approximate entropy of order {order} needs at least "
            f"{2 ** (order + 1)} bits, got {n}"
        )
    phis = []
    for k in (order, order + 1):
        freq = _batch_pattern_counts(x, k) / n
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(freq > 0, freq * np.log(freq), 0.0)
        phis.append(terms.sum(axis=1))
    chi = np.maximum(2.0 * n * (math.log(2.0) - (phis[0] - phis[1])), 0.0)
    return sp.gammaincc(2.0**order / 2.0, chi / 2.0)


def _batch_psi_sq(x: np.ndarray, order: int) -> np.ndarray:
    if order <= 0:
        return np.zeros(x.shape[0])
    n = x.shape[1]
    counts = _batch_pattern_counts(x, order)
    return 2.0**order / n * (counts**2).sum(axis=1) - n


def _batch_serial(x: np.ndarray, order: int, variant: int) -> np.ndarray:
    psi_m = _batch_psi_sq(x, order)
    psi_1 = _batch_psi_sq(x, order - 1)
    if variant == 1:
        delta = psi_m - psi_1
        half_dof = 2.0 ** (order - 2)
    else:
        delta = psi_m - 2.0 * psi_1 + _batch_psi_sq(x, order - 2)
        half_dof = 2.0 ** (order - 3)
    return sp.gammaincc(half_dof, np.maximum(delta, 0.0) / 2.0)
