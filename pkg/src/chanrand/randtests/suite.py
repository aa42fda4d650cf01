"""Statistical randomness tests over bit sequences.

Nine tests: frequency, block frequency, runs, longest run of ones, spectral
(DFT), non-overlapping template matching, approximate entropy, and the two
serial statistics. Each produces a statistic and a p-value; the verdict is
accept iff p_value > alpha (strict).

The per-test statistic cores operate on plain uint8 arrays so batch Monte
Carlo estimation can reuse them without BitSequence wrapping overhead.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .. import specfun
from ..bitmodel import BitSequence
from ..errors import DomainError, InsufficientDataError
from .templates import default_template

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
]


class TestKind(str, enum.Enum):
    FREQUENCY = "frequency"
    BLOCK_FREQUENCY = "block_frequency"
    RUNS = "runs"
    LONGEST_RUN = "longest_run"
    DFT = "dft"
    NON_OVERLAPPING = "non_overlapping_template"
    APPROXIMATE_ENTROPY = "approximate_entropy"
    SERIAL1 = "serial1"
    SERIAL2 = "serial2"


#: Shortest sequence each test is calibrated for.
MIN_LENGTHS = {
    TestKind.FREQUENCY: 100,
    TestKind.BLOCK_FREQUENCY: 100,
    TestKind.RUNS: 100,
    TestKind.LONGEST_RUN: 128,
    TestKind.DFT: 1000,
    TestKind.NON_OVERLAPPING: 100,
    TestKind.APPROXIMATE_ENTROPY: 100,
    TestKind.SERIAL1: 100,
    TestKind.SERIAL2: 100,
}

DEFAULT_BLOCK_SIZE = 128
DEFAULT_APEN_ORDER = 2
DEFAULT_SERIAL_ORDER = 3

_TEMPLATE_BLOCKS = 8

# (min length, block size, shortest class, longest class, class probabilities)
_LONGEST_RUN_CONFIGS = (
    (750_000, 10_000, 10, 16,
     (0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727)),
    (6_272, 128, 4, 9,
     (0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124)),
    # 8-bit blocks admit exact dyadic class masses (55, 94, 59, 48)/256
    (128, 8, 1, 4,
     (0.21484375, 0.3671875, 0.23046875, 0.1875)),
)


def longest_run_config(length: int):
    """Block size, class bounds, and class probabilities for a length.

    Returns (block_size, lo, hi, probs): runs of length <= lo share the
    lowest class, runs >= hi the highest.
    """
    for min_len, block, lo, hi, probs in _LONGEST_RUN_CONFIGS:
        if length >= min_len:
            return block, lo, hi, np.asarray(probs)
    raise InsufficientDataError(
        f"longest-run test needs at least 128 bits, got {length}"
    )


@dataclass(frozen=True)
class TestSpec:
    """A test selection with its significance level and parameters.

    Parameters only apply to the kinds that use them: block_size to
    block_frequency, template to non_overlapping_template, pattern_order
    to approximate_entropy and the serial tests. Leaving them None picks
    the standard defaults (128, the bundled 000000001 template, 2 for
    approximate entropy, 3 for serial).
    """

    kind: TestKind
    alpha: float = 0.01
    block_size: Optional[int] = None
    template: Optional[BitSequence] = None
    pattern_order: Optional[int] = None
    allow_degenerate_template: bool = False

    def __post_init__(self):
        kind = TestKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.block_size is not None:
            if kind is not TestKind.BLOCK_FREQUENCY:
                raise DomainError("block_size only applies to block_frequency")
            if self.block_size < 2:
                raise DomainError("block_size must be at least 2")
        if self.template is not None:
            if kind is not TestKind.NON_OVERLAPPING:
                raise DomainError(
                    "template only applies to non_overlapping_template"
                )
            if len(self.template) < 1:
                raise DomainError("template must be non-empty")
            bits = self.template.bits
            if bits.min() == bits.max() and not self.allow_degenerate_template:
                raise DomainError(
                    "constant template is degenerate; pass "
                    "allow_degenerate_template=True to force it"
                )
        if self.pattern_order is not None:
            if kind is TestKind.APPROXIMATE_ENTROPY:
                if self.pattern_order < 1:
                    raise DomainError("pattern_order must be at least 1")
            elif kind is TestKind.SERIAL1:
                if self.pattern_order < 2:
                    raise DomainError(
                        "serial1 needs pattern_order at least 2"
                    )
            elif kind is TestKind.SERIAL2:
                if self.pattern_order < 3:
                    raise DomainError(
                        "serial2 needs pattern_order at least 3"
                    )
            else:
                raise DomainError(
                    "pattern_order only applies to approximate_entropy "
                    "and the serial tests"
                )

    def resolved_block_size(self) -> int:
        return self.block_size if self.block_size is not None else DEFAULT_BLOCK_SIZE

    def resolved_template(self) -> BitSequence:
        return self.template if self.template is not None else default_template()

    def resolved_pattern_order(self) -> int:
        if self.pattern_order is not None:
            return self.pattern_order
        if self.kind is TestKind.APPROXIMATE_ENTROPY:
            return DEFAULT_APEN_ORDER
        return DEFAULT_SERIAL_ORDER

    def params(self, length: int) -> dict:
        """Resolved parameter record for reports."""
        out = {"alpha": self.alpha, "length": length}
        if self.kind is TestKind.BLOCK_FREQUENCY:
            out["block_size"] = self.resolved_block_size()
        elif self.kind is TestKind.LONGEST_RUN:
            out["block_size"] = longest_run_config(length)[0]
        elif self.kind is TestKind.NON_OVERLAPPING:
            out["template"] = self.resolved_template().to_string()
            out["blocks"] = _TEMPLATE_BLOCKS
        elif self.kind in (
            TestKind.APPROXIMATE_ENTROPY,
            TestKind.SERIAL1,
            TestKind.SERIAL2,
        ):
            out["pattern_order"] = self.resolved_pattern_order()
        return out


@dataclass(frozen=True)
class TestOutcome:
    kind: TestKind
    statistic: float
    p_value: float
    verdict: bool
    params: dict = field(default_factory=dict)
    note: Optional[str] = None

    def as_dict(self) -> dict:
        out = {
            "kind": self.kind.value,
            "params": dict(self.params),
            "statistic": self.statistic,
            "p_value": self.p_value,
            "verdict": "accept" if self.verdict else "reject",
        }
        if self.note is not None:
            out["note"] = self.note
        return out


def run_test(
    spec: TestSpec,
    x: BitSequence,
    *,
    enforce_min_length: bool = True,
) -> TestOutcome:
    """Apply one test to a bit sequence.

    enforce_min_length=False skips the calibration length check; p-values
    on very short inputs are then approximate and should only be used for
    relative comparisons.
    """
    bits = x.bits
    n = bits.size
    if enforce_min_length and n < MIN_LENGTHS[spec.kind]:
        raise InsufficientDataError(
            f"{spec.kind.value} needs at least {MIN_LENGTHS[spec.kind]} bits, "
            f"got {n}"
        )
    if n < 2:
        raise InsufficientDataError("tests need at least 2 bits")

    note = None
    if spec.kind is TestKind.FREQUENCY:
        stat, p = frequency_statistic(bits)
    elif spec.kind is TestKind.BLOCK_FREQUENCY:
        stat, p = block_frequency_statistic(bits, spec.resolved_block_size())
    elif spec.kind is TestKind.RUNS:
        stat, p, note = runs_statistic(bits)
    elif spec.kind is TestKind.LONGEST_RUN:
        stat, p = longest_run_statistic(bits)
    elif spec.kind is TestKind.DFT:
        stat, p = dft_statistic(bits)
    elif spec.kind is TestKind.NON_OVERLAPPING:
        stat, p = non_overlapping_statistic(bits, spec.resolved_template().bits)
    elif spec.kind is TestKind.APPROXIMATE_ENTROPY:
        stat, p = approximate_entropy_statistic(
            bits, spec.resolved_pattern_order()
        )
    elif spec.kind is TestKind.SERIAL1:
        stat, p = serial_statistic(bits, spec.resolved_pattern_order(), 1)
    else:
        stat, p = serial_statistic(bits, spec.resolved_pattern_order(), 2)

    return TestOutcome(
        kind=spec.kind,
        statistic=float(stat),
        p_value=float(p),
        verdict=bool(p > spec.alpha),
        params=spec.params(n),
        note=note,
    )


def frequency_statistic(bits: np.ndarray):
    n = bits.size
    s = 2.0 * float(bits.sum()) - n
    stat = s / math.sqrt(n)
    return stat, specfun.erfc(abs(stat) / math.sqrt(2.0))


def block_frequency_statistic(bits: np.ndarray, block_size: int):
    n = bits.size
    blocks = n // block_size
    if blocks < 1:
        raise InsufficientDataError(
            f"need at least one block of {block_size} bits, got {n}"
        )
    props = (
        bits[: blocks * block_size]
        .reshape(blocks, block_size)
        .mean(axis=1)
    )
    chi = 4.0 * block_size * float(((props - 0.5) ** 2).sum())
    return chi, specfun.reg_inc_gamma(blocks / 2.0, chi / 2.0, upper=True)


def runs_statistic(bits: np.ndarray):
    n = bits.size
    pi = float(bits.mean())
    # For n < 16 the pre-test band is wider than [0, 1], so a constant
    # sequence would otherwise reach the statistic with a zero denominator.
    if abs(pi - 0.5) >= 2.0 / math.sqrt(n) or pi in (0.0, 1.0):
        # Ones proportion too far off balance for the normal approximation;
        # by convention the sequence is rejected outright.
        v = 1 + int(np.count_nonzero(np.diff(bits)))
        return float(v), 0.0, "ones proportion outside the pre-test band"
    v = 1 + int(np.count_nonzero(np.diff(bits)))
    num = abs(v - 2.0 * n * pi * (1.0 - pi))
    den = 2.0 * math.sqrt(2.0 * n) * pi * (1.0 - pi)
    return float(v), specfun.erfc(num / den), None


def _longest_one_runs(blocks: np.ndarray) -> np.ndarray:
    """Longest run of ones in each row."""
    rows = blocks.shape[0]
    run = np.zeros(rows, dtype=np.int64)
    best = np.zeros(rows, dtype=np.int64)
    for j in range(blocks.shape[1]):
        run = (run + 1) * blocks[:, j]
        np.maximum(best, run, out=best)
    return best


def longest_run_statistic(bits: np.ndarray):
    n = bits.size
    block, lo, hi, probs = longest_run_config(n)
    blocks = n // block
    longest = _longest_one_runs(
        bits[: blocks * block].reshape(blocks, block).astype(np.int64)
    )
    classes = np.clip(longest, lo, hi) - lo
    v = np.bincount(classes, minlength=hi - lo + 1).astype(float)
    expected = blocks * probs
    chi = float(((v - expected) ** 2 / expected).sum())
    k = hi - lo
    return chi, specfun.reg_inc_gamma(k / 2.0, chi / 2.0, upper=True)


def dft_statistic(bits: np.ndarray):
    n = bits.size
    signed = 2.0 * bits.astype(np.float64) - 1.0
    mods = np.abs(np.fft.rfft(signed))[: n // 2]
    threshold = math.sqrt(n * math.log(1.0 / 0.05))
    n1 = float(np.count_nonzero(mods < threshold))
    n0 = 0.95 * n / 2.0
    d = (n1 - n0) / math.sqrt(n * 0.95 * 0.05 / 4.0)
    return d, specfun.erfc(abs(d) / math.sqrt(2.0))


def _non_overlap_counts(block: np.ndarray, template: np.ndarray) -> int:
    """Occurrences under a scan that restarts past each full match."""
    m = template.size
    windows = np.lib.stride_tricks.sliding_window_view(block, m)
    hits = np.flatnonzero((windows == template).all(axis=1))
    count = 0
    next_free = 0
    for idx in hits:
        if idx >= next_free:
            count += 1
            next_free = idx + m
    return count


def non_overlapping_statistic(bits: np.ndarray, template: np.ndarray):
    n = bits.size
    m = template.size
    blocks = _TEMPLATE_BLOCKS
    block_len = n // blocks
    if block_len < m:
        raise InsufficientDataError(
            f"blocks of {block_len} bits cannot hold a length-{m} template"
        )
    counts = np.array(
        [
            _non_overlap_counts(
                bits[i * block_len : (i + 1) * block_len], template
            )
            for i in range(blocks)
        ],
        dtype=float,
    )
    mean = (block_len - m + 1) / 2.0**m
    var = block_len * (2.0**-m - (2.0 * m - 1.0) / 2.0 ** (2 * m))
    chi = float(((counts - mean) ** 2 / var).sum())
    return chi, specfun.reg_inc_gamma(blocks / 2.0, chi / 2.0, upper=True)


def _pattern_values(bits: np.ndarray, order: int) -> np.ndarray:
    """Wraparound length-`order` pattern codes at every position."""
    n = bits.size
    aug = np.concatenate([bits, bits[: order - 1]]) if order > 1 else bits
    vals = np.zeros(n, dtype=np.int64)
    for j in range(order):
        vals = vals * 2 + aug[j : j + n]
    return vals


def _pattern_counts(bits: np.ndarray, order: int) -> np.ndarray:
    return np.bincount(_pattern_values(bits, order), minlength=2**order)


def approximate_entropy_statistic(bits: np.ndarray, order: int):
    n = bits.size
    if n < 2**order:
        raise InsufficientDataError(
            f"approximate entropy of order {order} needs at least "
            f"{2 ** order} bits, got {n}"
        )
    phis = []
    for k in (order, order + 1):
        freq = _pattern_counts(bits, k) / n
        nz = freq[freq > 0]
        phis.append(float((nz * np.log(nz)).sum()))
    apen = phis[0] - phis[1]
    chi = 2.0 * n * (math.log(2.0) - apen)
    chi = max(chi, 0.0)
    return chi, specfun.reg_inc_gamma(2.0**order / 2.0, chi / 2.0, upper=True)


def _psi_sq(bits: np.ndarray, order: int) -> float:
    if order <= 0:
        return 0.0
    n = bits.size
    counts = _pattern_counts(bits, order).astype(np.float64)
    return float(2.0**order / n * (counts**2).sum() - n)


def serial_statistic(bits: np.ndarray, order: int, variant: int):
    n = bits.size
    if n < 2**order:
        raise InsufficientDataError(
            f"serial test of order {order} needs at least {2 ** order} bits"
        )
    psi_m = _psi_sq(bits, order)
    psi_1 = _psi_sq(bits, order - 1)
    if variant == 1:
        delta = psi_m - psi_1
        half_dof = 2.0 ** (order - 2)
    else:
        psi_2 = _psi_sq(bits, order - 2)
        delta = psi_m - 2.0 * psi_1 + psi_2
        half_dof = 2.0 ** (order - 3)
    delta = max(delta, 0.0)
    return delta, specfun.reg_inc_gamma(half_dof, delta / 2.0, upper=True)
