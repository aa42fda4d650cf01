"""Bit sequences, the lag-1 Markov bit model, and sequence file formats.

The binary model is the symmetric two-state Markov chain parametrized by
the lag-1 correlation rho: each bit flips the previous one with
probability theta = (1 - rho) / 2, and the first bit is uniform, so the
chain is stationary. rho = 0 is the IID fair-coin source, rho = 1 is a
constant sequence, rho = -1 strictly alternates.

The m-level generalization uses the row-stochastic transition matrix

    Phi[r][s] = rho * delta(r, s) + (1 - rho) / m

over m levels, each level encoded on ceil(log2 m) bits.

Two interchange formats are defined for sequences on disk:

- text: one ASCII '0'/'1' per bit, one newline-terminated record per
  sequence (a file may hold several records);
- packed: a 16-byte header (magic "CRND", one version byte, three
  reserved zero bytes, bit length as 8-byte little-endian unsigned)
  followed by the bits packed most-significant-bit first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, List, Sequence, Union

import numpy as np

from .errors import (
    DegenerateVarianceError,
    DomainError,
    InputError,
    InsufficientDataError,
)
from .rng import make_generator

__all__ = [
    "BitSequence",
    "MarkovBitModel",
    "MaryMarkovModel",
    "generate",
    "generate_batch",
    "lag1_correlation",
    "transition_matrix",
    "mary_correlation",
    "sample_states",
    "encode_states",
    "read_bits_text",
    "write_bits_text",
    "read_bits_packed",
    "write_bits_packed",
]

PACKED_MAGIC = b"CRND"
PACKED_VERSION = 1
_HEADER_LEN = 16


class BitSequence:
    """Immutable wrapper around a numpy array of 0/1 values."""

    __slots__ = ("_bits",)

    def __init__(self, bits: Union[Sequence[int], np.ndarray]):
        arr = np.asarray(bits, dtype=np.uint8)
        if arr.ndim != 1:
            raise DomainError(f"bits must be one-dimensional, got shape {arr.shape}")
        if arr.size and arr.max() > 1:
            raise DomainError("bits must contain only 0 and 1")
        arr = arr.copy()
        arr.setflags(write=False)
        self._bits = arr

    @classmethod
    def from_string(cls, text: str) -> "BitSequence":
        stripped = text.strip()
        if stripped and set(stripped) - {"0", "1"}:
            raise InputError(f"bit string contains non-binary characters: {text!r}")
        return cls(np.frombuffer(stripped.encode("ascii"), dtype=np.uint8) - ord("0"))

    @classmethod
    def from_int(cls, value: int, length: int) -> "BitSequence":
        """Bits of ``value`` MSB-first, zero-padded to ``length``."""
        if value < 0 or length < 0 or value >> length:
            raise DomainError(f"value {value} does not fit in {length} bits")
        return cls([(value >> (length - 1 - i)) & 1 for i in range(length)])

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    def to_string(self) -> str:
        return "".join("1" if b else "0" for b in self._bits)

    def as_int(self) -> int:
        """The sequence read as an MSB-first integer."""
        value = 0
        for b in self._bits:
            value = (value << 1) | int(b)
        return value

    def transitions(self) -> int:
        """Number of adjacent unequal pairs."""
        if len(self) < 2:
            return 0
        return int(np.count_nonzero(self._bits[1:] != self._bits[:-1]))

    def __len__(self) -> int:
        return int(self._bits.size)

    def __getitem__(self, idx):
        out = self._bits[idx]
        if isinstance(idx, slice):
            return BitSequence(out)
        return int(out)

    def __iter__(self) -> Iterator[int]:
        return (int(b) for b in self._bits)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitSequence):
            return NotImplemented
        return len(self) == len(other) and bool(np.all(self._bits == other._bits))

    def __hash__(self) -> int:
        return hash((len(self), self._bits.tobytes()))

    def __repr__(self) -> str:
        if len(self) <= 32:
            return f"BitSequence({self.to_string()!r})"
        return f"BitSequence(<{len(self)} bits>)"


@dataclass(frozen=True)
class MarkovBitModel:
    """Symmetric binary Markov source with lag-1 correlation ``rho``."""

    rho: float

    def __post_init__(self):
        if not -1.0 <= self.rho <= 1.0 or math.isnan(self.rho):
            raise DomainError(f"rho must lie in [-1, 1], got {self.rho!r}")

    @property
    def theta(self) -> float:
        """Per-step flip probability (1 - rho) / 2."""
        return (1.0 - self.rho) / 2.0


def generate_batch(
    model: MarkovBitModel, length: int, trials: int, seed: int
) -> np.ndarray:
    """``trials`` independent sequences as a (trials, length) uint8 array.

    One Philox stream drives the whole batch; ``generate`` is the
    single-sequence view of the same construction.
    """
    if length < 1:
        raise DomainError(f"length must be >= 1, got {length}")
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    rng = make_generator(seed)
    first = (rng.random(trials) < 0.5).astype(np.uint8)
    out = np.empty((trials, length), dtype=np.uint8)
    out[:, 0] = first
    if length > 1:
        flips = rng.random((trials, length - 1)) < model.theta
        # bit_i = first XOR (number of flips so far) mod 2
        parity = np.cumsum(flips, axis=1, dtype=np.int64) & 1
        out[:, 1:] = first[:, None] ^ parity.astype(np.uint8)
    return out


def generate(model: MarkovBitModel, length: int, seed: int) -> BitSequence:
    """One sequence of ``length`` bits from the model under ``seed``."""
    return BitSequence(generate_batch(model, length, 1, seed)[0])


def lag1_correlation(x: Union[BitSequence, np.ndarray]) -> float:
    """Sample lag-1 Pearson correlation over pairs (x_i, x_{i+1})."""
    bits = x.bits if isinstance(x, BitSequence) else np.asarray(x)
    if bits.size < 2:
        raise InsufficientDataError(
            f"lag-1 correlation needs at least 2 bits, got {bits.size}"
        )
    a = bits[:-1].astype(np.float64)
    b = bits[1:].astype(np.float64)
    da = a - a.mean()
    db = b - b.mean()
    va = float(np.dot(da, da))
    vb = float(np.dot(db, db))
    if va == 0.0 or vb == 0.0:
        raise DegenerateVarianceError(
            "lag-1 correlation undefined: a margin of the pair sequence is constant"
        )
    r = float(np.dot(da, db)) / math.sqrt(va * vb)
    return max(-1.0, min(1.0, r))


def transition_matrix(m: int, rho: float, *, literal: bool = False) -> np.ndarray:
    """m-level transition matrix rho * I + (1 - rho) / m * J.

    With ``literal=True`` the off-diagonal denominator is 2^m instead of
    m, the form some derivations quote; that variant is row-stochastic
    only when the level count is itself a power 2^m, and is provided for
    side-by-side comparison only.
    """
    if m < 2:
        raise DomainError(f"transition matrix needs m >= 2 levels, got {m}")
    lo = -1.0 / (m - 1)
    if not lo <= rho <= 1.0:
        raise DomainError(
            f"rho must lie in [{lo:.6g}, 1] for {m} levels, got {rho!r}"
        )
    denom = float(2**m) if literal else float(m)
    phi = np.full((m, m), (1.0 - rho) / denom)
    phi[np.diag_indices(m)] += rho
    return phi


@dataclass(frozen=True)
class MaryMarkovModel:
    """m-level Markov source; levels are encoded on ceil(log2 m) bits."""

    levels: int
    rho_m: float
    bits_per_level: int = field(init=False)
    matrix: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.levels < 2:
            raise DomainError(f"levels must be >= 2, got {self.levels}")
        object.__setattr__(self, "bits_per_level", _bits_per_level(self.levels))
        object.__setattr__(self, "matrix", transition_matrix(self.levels, self.rho_m))


def _bits_per_level(levels: int) -> int:
    return max(1, math.ceil(math.log2(levels)))


def sample_states(model: MaryMarkovModel, count: int, seed: int) -> np.ndarray:
    """``count`` states from the stationary m-level chain."""
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count}")
    rng = make_generator(seed)
    m = model.levels
    states = np.empty(count, dtype=np.int64)
    states[0] = rng.integers(m)
    # Phi = rho*I + (1-rho)/m * J: stay with probability rho, otherwise
    # resample uniformly, which realizes the matrix exactly.
    stay = rng.random(count - 1) < model.rho_m
    fresh = rng.integers(m, size=count - 1)
    for i in range(1, count):
        states[i] = states[i - 1] if stay[i - 1] else fresh[i - 1]
    return states


def encode_states(states: np.ndarray, bits_per_level: int) -> BitSequence:
    """Concatenate the plain binary (MSB-first) encodings of the states."""
    states = np.asarray(states, dtype=np.int64)
    if states.size and (states.min() < 0 or states.max() >> bits_per_level):
        raise DomainError("state out of range for bits_per_level")
    shifts = np.arange(bits_per_level - 1, -1, -1)
    bits = ((states[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
    return BitSequence(bits.reshape(-1))


def mary_correlation(x: Union[BitSequence, np.ndarray], m: int) -> float:
    """Lag-1 correlation of an m-level sequence given as concatenated bits.

    Bits are grouped into ceil(log2 m)-bit blocks, each block decoded as
    an integer symbol, and the lag-1 Pearson correlation of the symbol
    sequence is returned. Under the m-level transition model the
    expectation of this estimate is rho_m regardless of the encoding; at
    m = 2 it coincides with ``lag1_correlation``.
    """
    if m < 2:
        raise DomainError(f"m must be >= 2, got {m}")
    bits = x.bits if isinstance(x, BitSequence) else np.asarray(x, dtype=np.uint8)
    b = _bits_per_level(m)
    if bits.size % b:
        raise DomainError(
            f"bit length {bits.size} is not divisible by bits_per_level {b}"
        )
    n_sym = bits.size // b
    if n_sym < 2:
        raise InsufficientDataError(
            f"need at least 2 symbols, got {n_sym} (length {bits.size}, m={m})"
        )
    shifts = np.arange(b - 1, -1, -1)
    values = (bits.reshape(n_sym, b).astype(np.int64) << shifts).sum(axis=1)
    a = values[:-1].astype(np.float64)
    c = values[1:].astype(np.float64)
    da = a - a.mean()
    dc = c - c.mean()
    va = float(np.dot(da, da))
    vc = float(np.dot(dc, dc))
    if va == 0.0 or vc == 0.0:
        raise DegenerateVarianceError(
            "m-level correlation undefined: symbol sequence margin is constant"
        )
    r = float(np.dot(da, dc)) / math.sqrt(va * vc)
    return max(-1.0, min(1.0, r))


# ---------------------------------------------------------------------------
# file formats


def write_bits_text(path, sequences: Union[BitSequence, Iterable[BitSequence]]) -> None:
    """Write one newline-terminated record of '0'/'1' chars per sequence."""
    if isinstance(sequences, BitSequence):
        sequences = [sequences]
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for seq in sequences:
            fh.write(seq.to_string())
            fh.write("\n")


def read_bits_text(path) -> List[BitSequence]:
    """Read every record of a text-format sequence file."""
    records: List[BitSequence] = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.rstrip("\n").rstrip("\r")
            if set(stripped) - {"0", "1"}:
                raise InputError(
                    f"{path}: line {lineno} contains non-binary characters"
                )
            records.append(BitSequence.from_string(stripped))
    return records


def write_bits_packed(path, sequence: BitSequence) -> None:
    """Write a single sequence in the packed format."""
    n = len(sequence)
    header = (
        PACKED_MAGIC
        + bytes([PACKED_VERSION])
        + b"\x00\x00\x00"
        + n.to_bytes(8, "little")
    )
    payload = np.packbits(sequence.bits).tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_bits_packed(path) -> BitSequence:
    """Read a packed-format sequence file."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER_LEN:
        raise InputError(f"{path}: truncated header ({len(raw)} bytes)")
    if raw[:4] != PACKED_MAGIC:
        raise InputError(f"{path}: bad magic {raw[:4]!r}")
    if raw[4] != PACKED_VERSION:
        raise InputError(f"{path}: unsupported version {raw[4]}")
    n = int.from_bytes(raw[8:16], "little")
    payload = raw[_HEADER_LEN:]
    need = (n + 7) // 8
    if len(payload) != need:
        raise InputError(
            f"{path}: payload holds {len(payload)} bytes, expected {need} for {n} bits"
        )
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8))[:n]
    return BitSequence(bits)
