"""Maximum-likelihood tree search (MLTS) attack model.

An adversary who knows the lag-1 structure of the key source enumerates
candidate L-bit sequences from most to least likely and checks each one.
Candidates sort by transition count w: under positive correlation few
transitions are likely, under negative correlation many, and an adversary
who does not know the sign interleaves both hypotheses, i.e. ranks groups
by min(w, L - w) with the low-w group first on rank ties and lexicographic
order inside a group.

The closed-form success probability for a depth-n budget
(all candidates with at most n/2 transitions per branch, N = 2 * sum_{i<=n/2}
C(L, i) searches in total) is the two-branch regularized-beta expression

    I_{(1-rho)/2}(L - n/2, n/2 + 1) + I_{(1+rho)/2}(L - n/2, n/2 + 1)

with theta = (1 - rho)/2. The two branches double-count sequences that are
likely under both hypotheses, so the raw sum can exceed 1; it is clamped
to [0, 1] and the raw value remains available for reporting.

Benchmarks: random guessing over an M-bit key succeeds with probability
N * 2^-M; hash collisions add roughly 1 - (1 - 2^-M)^L; the security loss
of a setup is log2(P(Eve) / P(RG)) in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterator, List, Optional, Tuple

from .bitmodel import BitSequence
from .errors import DomainError, InsufficientBudgetError, ScaleError
from .specfun import check_probability, reg_inc_beta

__all__ = [
    "AdversaryBudget",
    "SecurityReport",
    "budget_from_searches",
    "realizable_searches",
    "mlts_success_prob",
    "mlts_success_prob_raw",
    "mlts_success_prob_exact_budget",
    "mlts_success_prob_mary",
    "enumerate_mlts",
    "rg_success_prob",
    "collision_prob",
    "security_loss",
    "eve_success_prob",
]

# Full-group enumeration materializes candidate groups; past this length
# the groups no longer fit comfortably in memory.
MAX_ENUMERATION_LENGTH = 26


@dataclass(frozen=True)
class AdversaryBudget:
    """Search budget N, its even tree depth n, and the sequence length."""

    searches: int
    depth: int
    sequence_length: int

    @classmethod
    def from_depth(cls, sequence_length: int, depth: int) -> "AdversaryBudget":
        _check_depth(sequence_length, depth)
        return cls(
            searches=realizable_searches(sequence_length, depth),
            depth=depth,
            sequence_length=sequence_length,
        )


def realizable_searches(sequence_length: int, depth: int) -> int:
    """N = 2 * sum_{i=0}^{depth/2} C(L, i), the exact count at a depth."""
    _check_depth(sequence_length, depth)
    k = depth // 2
    return 2 * sum(math.comb(sequence_length, i) for i in range(k + 1))


def budget_from_searches(searches: int, sequence_length: int) -> AdversaryBudget:
    """Largest even depth whose implied search count fits in ``searches``.

    The raw budget is preserved in ``searches``; the depth floors to the
    nearest realizable tree.
    """
    if sequence_length < 1:
        raise DomainError(f"sequence_length must be >= 1, got {sequence_length}")
    if searches < 2:
        raise InsufficientBudgetError(
            f"budget must cover the two zero-transition candidates, got {searches}"
        )
    max_depth = sequence_length - (sequence_length % 2)
    depth = 0
    cumulative = 2  # 2 * C(L, 0)
    while depth + 2 <= max_depth:
        nxt = cumulative + 2 * math.comb(sequence_length, depth // 2 + 1)
        if nxt > searches:
            break
        depth += 2
        cumulative = nxt
    return AdversaryBudget(
        searches=searches, depth=depth, sequence_length=sequence_length
    )


def _check_depth(sequence_length: int, depth: int) -> None:
    if sequence_length < 1:
        raise DomainError(f"sequence_length must be >= 1, got {sequence_length}")
    if depth < 0 or depth > sequence_length:
        raise DomainError(
            f"depth must lie in [0, sequence_length], got {depth} for L={sequence_length}"
        )
    if depth % 2:
        raise DomainError(f"depth must be even, got {depth}")


def _check_rho(rho: float) -> float:
    if math.isnan(rho) or not -1.0 <= rho <= 1.0:
        raise DomainError(f"rho must lie in [-1, 1], got {rho!r}")
    return float(rho)


def mlts_success_prob_raw(sequence_length: int, rho: float, depth: int) -> float:
    """Unclamped two-branch closed form; may exceed 1 by double counting."""
    _check_depth(sequence_length, depth)
    rho = _check_rho(rho)
    k = depth // 2
    a = sequence_length - k
    b = k + 1
    theta = (1.0 - rho) / 2.0
    return reg_inc_beta(theta, a, b) + reg_inc_beta(1.0 - theta, a, b)


def mlts_success_prob(sequence_length: int, rho: float, depth: int) -> float:
    """P(MLTS finds the key) at an even depth budget, clamped to [0, 1]."""
    return min(1.0, mlts_success_prob_raw(sequence_length, rho, depth))


def mlts_success_prob_exact_budget(
    sequence_length: int, rho: float, searches: int
) -> float:
    """P(MLTS succeeds) for a raw budget that need not land on a full depth.

    The floored-depth closed form plus the fraction of the next transition
    group the remaining budget covers, split evenly across the two
    branches. Reduces to searches * 2^-L at rho = 0 and lies between the
    floored-depth and next-depth closed forms.
    """
    budget = budget_from_searches(searches, sequence_length)
    rho = _check_rho(rho)
    base = mlts_success_prob_raw(sequence_length, rho, budget.depth)
    extra = searches - realizable_searches(sequence_length, budget.depth)
    if extra > 0:
        k_next = budget.depth // 2 + 1
        if k_next <= sequence_length:
            theta = (1.0 - rho) / 2.0
            p1 = theta**k_next * (1.0 - theta) ** (sequence_length - k_next)
            p2 = (1.0 - theta) ** k_next * theta ** (sequence_length - k_next)
            base += (extra / 2.0) * (p1 + p2)
    return min(1.0, base)


def mlts_success_prob_mary(
    sequence_length: int, rho: float, depth: int, m: int
) -> float:
    """m-level MLTS success probability, clamped to [0, 1].

    Evaluates m identical regularized-beta branches at
    x = rho + (1 - rho)/2^m with slot count floor(L / 2^(m-1)) and depth
    contribution floor(n / 2^m); m = 1 reduces to a single branch of the
    binary closed form.
    """
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    if sequence_length < 1:
        raise DomainError(f"sequence_length must be >= 1, got {sequence_length}")
    if depth < 0:
        raise DomainError(f"depth must be >= 0, got {depth}")
    rho = _check_rho(rho)
    slots = sequence_length // 2 ** (m - 1)
    k = depth // 2**m
    a = slots - k
    b = k + 1
    if a <= 0:
        raise DomainError(
            f"depth {depth} too deep for L={sequence_length}, m={m}: "
            f"beta parameter L/2^(m-1) - n/2^m = {a} must be positive"
        )
    x = rho + (1.0 - rho) / 2**m
    x = min(1.0, max(0.0, x))
    return min(1.0, m * reg_inc_beta(x, a, b))


def _transition_groups(sequence_length: int) -> List[int]:
    """Transition counts ordered by (min(w, L - w), w)."""
    return sorted(range(sequence_length), key=lambda w: (min(w, sequence_length - w), w))


def _group_members(sequence_length: int, w: int) -> List[int]:
    """All sequences with exactly w transitions, as ints, ascending."""
    members = []
    for first in (0, 1):
        for slots in combinations(range(sequence_length - 1), w):
            value = first
            bit = first
            pos = 0
            for s in slots:
                # bits pos+1 .. s keep the current value, then flip at s+1
                value = (value << (s - pos)) | (bit * ((1 << (s - pos)) - 1))
                bit ^= 1
                value = (value << 1) | bit
                pos = s + 1
            tail = sequence_length - 1 - pos
            value = (value << tail) | (bit * ((1 << tail) - 1))
            members.append(value)
    members.sort()
    return members


def enumerate_mlts(budget: AdversaryBudget) -> Iterator[BitSequence]:
    """Candidates in MLTS order, stopping after ``budget.searches``.

    Groups of equal transition count w are emitted in (min(w, L - w), w)
    order, lexicographically inside a group; every sequence appears at
    most once. Only lengths up to MAX_ENUMERATION_LENGTH are supported.
    """
    L = budget.sequence_length
    if L > MAX_ENUMERATION_LENGTH:
        raise ScaleError(
            f"enumeration supports L <= {MAX_ENUMERATION_LENGTH}, got {L}"
        )
    remaining = budget.searches
    if remaining < 1:
        return
    for w in _transition_groups(L):
        for value in _group_members(L, w):
            yield BitSequence.from_int(value, L)
            remaining -= 1
            if remaining == 0:
                return


def rg_success_prob(searches: int, key_bits: int) -> float:
    """Random guessing over a key of ``key_bits`` bits: min(N * 2^-M, 1)."""
    if searches < 1:
        raise DomainError(f"searches must be >= 1, got {searches}")
    if key_bits < 1:
        raise DomainError(f"key_bits must be >= 1, got {key_bits}")
    if searches.bit_length() > key_bits:
        return 1.0
    if searches.bit_length() <= 1000:
        return min(1.0, math.ldexp(float(searches), -key_bits))
    log2_value = math.log2(searches) - key_bits
    if log2_value >= 0.0:
        return 1.0
    if log2_value < -1074.0:
        return 0.0
    return 2.0**log2_value


def collision_prob(sequence_length: int, key_bits: int) -> float:
    """P(some other input collides): 1 - (1 - 2^-M)^L, in log space."""
    if sequence_length < 1:
        raise DomainError(f"sequence_length must be >= 1, got {sequence_length}")
    if key_bits < 1:
        raise DomainError(f"key_bits must be >= 1, got {key_bits}")
    if key_bits > 1074:
        return 0.0
    per_key = math.ldexp(1.0, -key_bits)
    return -math.expm1(sequence_length * math.log1p(-per_key))


def security_loss(p_eve: float, p_rg: float) -> float:
    """log2(P(Eve) / P(RG)) in bits; negative means Eve does worse than RG."""
    p_eve = check_probability(p_eve, "p_eve")
    p_rg = check_probability(p_rg, "p_rg")
    if p_eve == 0.0 or p_rg == 0.0:
        raise DomainError("security loss undefined for zero probabilities")
    return math.log2(p_eve) - math.log2(p_rg)


def eve_success_prob(i_mlts: float, p_accept: float) -> float:
    """Joint probability that the test accepts and MLTS then succeeds."""
    return check_probability(i_mlts, "i_mlts") * check_probability(
        p_accept, "p_accept"
    )


@dataclass(frozen=True)
class SecurityReport:
    """Attack-side summary for one (L, rho, N, M) configuration."""

    p_eve: float
    p_rg: float
    security_loss_bits: float
    p_collision: float
    note: Optional[str] = None

    def as_dict(self) -> dict:
        out = {
            "p_eve": self.p_eve,
            "p_rg": self.p_rg,
            "security_loss_bits": self.security_loss_bits,
            "p_collision": self.p_collision,
        }
        if self.note is not None:
            out["note"] = self.note
        return out


def build_security_report(
    sequence_length: int,
    rho: float,
    searches: int,
    key_bits: int,
    p_accept: float = 1.0,
) -> Tuple[SecurityReport, bool]:
    """SecurityReport for a configuration, plus whether the clamp engaged.

    p_eve is the exact-budget MLTS probability times p_accept (worst case
    p_accept = 1 when no test is in the loop).
    """
    raw_budget = budget_from_searches(searches, sequence_length)
    raw = mlts_success_prob_raw(sequence_length, rho, raw_budget.depth)
    i_mlts = mlts_success_prob_exact_budget(sequence_length, rho, searches)
    p_eve = eve_success_prob(i_mlts, p_accept)
    p_rg = rg_success_prob(searches, key_bits)
    loss = security_loss(p_eve, p_rg) if p_eve > 0.0 and p_rg > 0.0 else math.nan
    note = None
    if not math.isnan(loss) and loss < 0.0:
        note = "trivial strategy: random guessing beats MLTS here"
    report = SecurityReport(
        p_eve=p_eve,
        p_rg=p_rg,
        security_loss_bits=loss,
        p_collision=collision_prob(sequence_length, key_bits),
        note=note,
    )
    return report, raw > 1.0
