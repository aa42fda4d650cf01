"""Seeded random number generation.

All randomness in the package flows through numpy's Philox generator, a
counter-based algorithm whose name is recorded in reports so runs can be
reproduced bit for bit. Per-trial streams are derived by hashing the
master seed together with the trial index (numpy's SeedSequence spawn
mechanism), so trial i of a run is independent of how many trials ran
before it.
"""

from __future__ import annotations

import secrets

import numpy as np

ALGORITHM = "philox4x64"

# Seeds are kept in a printable range so CLI users can retype them.
_SEED_BITS = 63


def fresh_seed() -> int:
    """Pick a random seed suitable for printing and re-use."""
    return secrets.randbits(_SEED_BITS)


def make_generator(seed: int) -> np.random.Generator:
    """Philox generator for a master seed."""
    _check_seed(seed)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def derive_generator(seed: int, index: int) -> np.random.Generator:
    """Philox generator for stream ``index`` under a master seed."""
    _check_seed(seed)
    if index < 0:
        raise ValueError(f"stream index must be >= 0, got {index}")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, index: int) -> int:
    """Integer sub-seed for stream ``index`` under a master seed.

    Useful when a batch API wants a seed rather than a generator; the
    derivation hashes (seed, index) so sub-seeds never collide with the
    master stream.
    """
    _check_seed(seed)
    if index < 0:
        raise ValueError(f"stream index must be >= 0, got {index}")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    return int(ss.generate_state(1, np.uint64)[0] >> 1)


def _check_seed(seed: int) -> None:
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
        raise ValueError(f"seed must be an integer, got {seed!r}")
    if seed < 0:
        raise ValueError(f"seed must be >= 0, got {seed}")
