"""Key-generation pipeline: channel, quantization, reconciliation, hashing.

A trial simulates two endpoints observing the same fading process through
independent noise, quantizing to bits, discarding parity-mismatched
blocks, testing the sequence, and compressing the survivor with a
Toeplitz hash to M = ceil(r * L) key bits. An attacker runs the
tree-search enumeration against the reconciled sequence; random guessing
of the final key is the benchmark the attacker must not beat.

The channel is a stationary unit-variance AR(1) process
h_t = a h_{t-1} + sqrt(1 - a^2) w_t, observed as h + noise at each
endpoint. Quantizer options are level crossing with a guard band (the
kept sample indices are public, so both sides emit equally many bits) and
an m-level equiprobable quantizer with Gray-coded output.

All run_test calls made here skip the calibration length check: pipeline
experiments run at attack scale (short sequences the enumeration can
actually cover), where p-values are approximate but verdicts and rates
remain well defined.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.signal

from .bitmodel import BitSequence, lag1_correlation
from .errors import (
    ChanRandError,
    DegenerateVarianceError,
    DomainError,
    InputError,
    ScaleError,
)
from .guideline import GridSpec, GuidelineProblem, GuidelineSolution
from .guideline import optimize as guideline_optimize
from .mlts import (
    MAX_ENUMERATION_LENGTH,
    budget_from_searches,
    collision_prob,
    enumerate_mlts,
    mlts_success_prob_exact_budget,
    mlts_success_prob_raw,
    rg_success_prob,
)
from .randtests import TestKind, TestSpec, run_test
from .rng import ALGORITHM, derive_generator
from .specfun import check_probability

__all__ = [
    "ChannelConfig",
    "QuantizerConfig",
    "PipelineConfig",
    "PipelineReport",
    "TrialRow",
    "simulate_channel",
    "level_crossing_quantize",
    "mary_quantize",
    "reconcile",
    "parity_kept_mask",
    "privacy_amplify",
    "run_pipeline",
    "parse_config",
    "test_spec_from_dict",
    "resolve_operating_point",
    "TRIAL_COLUMNS",
]

TRIAL_COLUMNS = ("trial", "accepted", "mismatch", "eve_hit", "key_bits", "elapsed")

_CEIL_SLOP = 1e-9


@dataclass(frozen=True)
class ChannelConfig:
    """AR(1) fading channel observed through per-endpoint noise."""

    duration: int
    ar_coeff: float
    noise_sd: float
    sample_interval: float = 1.0

    def __post_init__(self):
        if self.duration < 2:
            raise DomainError(f"duration must be >= 2 samples, got {self.duration}")
        if not -1.0 < self.ar_coeff < 1.0:
            raise DomainError(
                f"ar_coeff must lie in (-1, 1), got {self.ar_coeff!r}"
            )
        if not self.noise_sd >= 0.0:
            raise DomainError(f"noise_sd must be >= 0, got {self.noise_sd!r}")
        if not self.sample_interval > 0.0:
            raise DomainError(
                f"sample_interval must be > 0, got {self.sample_interval!r}"
            )

    def as_dict(self) -> dict:
        return {
            "duration": self.duration,
            "ar_coeff": self.ar_coeff,
            "noise_sd": self.noise_sd,
            "sample_interval": self.sample_interval,
        }


@dataclass(frozen=True)
class QuantizerConfig:
    """Level-crossing or m-level quantizer settings."""

    kind: str = "level_crossing"
    guard: float = 0.3
    interval: int = 1
    levels: int = 2

    def __post_init__(self):
        if self.kind not in ("level_crossing", "mary"):
            raise DomainError(
                f"quantizer kind must be level_crossing or mary, got {self.kind!r}"
            )
        if self.guard < 0.0:
            raise DomainError(f"guard must be >= 0, got {self.guard!r}")
        if self.interval < 1:
            raise DomainError(f"interval must be >= 1, got {self.interval}")
        if self.levels not in (2, 4, 8):
            raise DomainError(f"levels must be one of 2, 4, 8, got {self.levels}")

    def as_dict(self) -> dict:
        out = {"kind": self.kind, "interval": self.interval}
        if self.kind == "level_crossing":
            out["guard"] = self.guard
        else:
            out["levels"] = self.levels
        return out


@dataclass(frozen=True)
class ChannelTrace:
    """One trial's channel path and the two endpoint observations."""

    channel: np.ndarray
    alice: np.ndarray
    bob: np.ndarray


def simulate_channel(
    config: ChannelConfig, rng: np.random.Generator
) -> ChannelTrace:
    """Draw one stationary AR(1) path plus independent observation noise."""
    n = config.duration
    a = config.ar_coeff
    w = rng.standard_normal(n)
    # h_t = a h_{t-1} + sqrt(1-a^2) w_t with h_0 = w_0 is stationary with
    # unit variance; lfilter with denominator (1, -a) realizes the recursion.
    drive = math.sqrt(1.0 - a * a) * w
    drive[0] = w[0]
    h = scipy.signal.lfilter([1.0], [1.0, -a], drive)
    noise = config.noise_sd * rng.standard_normal((2, n))
    return ChannelTrace(channel=h, alice=h + noise[0], bob=h + noise[1])


def level_crossing_quantize(
    samples: np.ndarray,
    q_plus: float,
    q_minus: float,
    interval: int = 1,
) -> Tuple[BitSequence, np.ndarray]:
    """Threshold quantizer with a guard band.

    Every interval-th sample maps to 1 above q_plus, 0 below q_minus, and
    is dropped inside the band. Returns the bits and the kept sample
    indices (into the original array) for sharing with the peer.
    """
    if q_minus > q_plus:
        raise DomainError(
            f"guard band is inverted: q_minus {q_minus} > q_plus {q_plus}"
        )
    if interval < 1:
        raise DomainError(f"interval must be >= 1, got {interval}")
    samples = np.asarray(samples, dtype=np.float64)
    idx = np.arange(0, samples.size, interval)
    vals = samples[idx]
    keep = (vals > q_plus) | (vals < q_minus)
    kept_idx = idx[keep]
    bits = (samples[kept_idx] > q_plus).astype(np.uint8)
    return BitSequence(bits), kept_idx


def quantize_at_indices(
    samples: np.ndarray, indices: np.ndarray, midpoint: float
) -> BitSequence:
    """Peer-side decision at shared indices: 1 above the band midpoint."""
    samples = np.asarray(samples, dtype=np.float64)
    return BitSequence((samples[indices] > midpoint).astype(np.uint8))


def mary_quantize(
    samples: np.ndarray, levels: int, interval: int = 1
) -> Tuple[BitSequence, np.ndarray]:
    """Equiprobable m-level quantizer with Gray-coded bit output.

    Bin edges are the empirical quantiles of the strided samples, so each
    level is hit equally often; adjacent levels differ in one output bit.
    Returns the bits and the level index sequence.
    """
    if levels not in (2, 4, 8):
        raise DomainError(f"levels must be one of 2, 4, 8, got {levels}")
    if interval < 1:
        raise DomainError(f"interval must be >= 1, got {interval}")
    samples = np.asarray(samples, dtype=np.float64)[::interval]
    if samples.size < levels:
        raise DomainError(
            f"need at least {levels} samples to form {levels} levels, "
            f"got {samples.size}"
        )
    if np.ptp(samples) == 0.0:
        raise DegenerateVarianceError(
            "samples are constant; quantile bin edges are degenerate"
        )
    edges = np.quantile(samples, np.arange(1, levels) / levels)
    states = np.searchsorted(edges, samples, side="left")
    gray = states ^ (states >> 1)
    width = max(1, math.ceil(math.log2(levels)))
    shifts = np.arange(width - 1, -1, -1)
    bits = ((gray[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
    return BitSequence(bits.reshape(-1)), states


def parity_kept_mask(
    alice: BitSequence, bob: BitSequence, block_size: int
) -> np.ndarray:
    """Boolean mask over the truncated bits marking parity-agreed blocks."""
    if block_size < 1:
        raise DomainError(f"block_size must be >= 1, got {block_size}")
    if len(alice) != len(bob):
        raise DomainError(
            f"sequences differ in length: {len(alice)} vs {len(bob)}"
        )
    n = (len(alice) // block_size) * block_size
    a = alice.bits[:n].reshape(-1, block_size)
    b = bob.bits[:n].reshape(-1, block_size)
    agreed = (a.sum(axis=1) & 1) == (b.sum(axis=1) & 1)
    return np.repeat(agreed, block_size)


def reconcile(
    alice: BitSequence, bob: BitSequence, block_size: int = 8
) -> Tuple[BitSequence, float]:
    """Drop parity-mismatched blocks; report the raw pre-discard mismatch.

    Both sides compute block parities, exchange them, and discard every
    block whose parities differ (trailing bits that do not fill a block
    are dropped too). Returns Alice's retained bits and the raw Hamming
    mismatch rate of the full sequences before any discarding. Blocks
    with an even number of errors slip through; the residual mismatch is
    observable via parity_kept_mask.
    """
    if len(alice) != len(bob):
        raise DomainError(
            f"sequences differ in length: {len(alice)} vs {len(bob)}"
        )
    if len(alice) == 0:
        raise DomainError("cannot reconcile empty sequences")
    mismatch = float(np.mean(alice.bits != bob.bits))
    mask = parity_kept_mask(alice, bob, block_size)
    n = mask.size
    return BitSequence(alice.bits[:n][mask]), mismatch


def privacy_amplify(bits: BitSequence, r: float, rng: np.random.Generator) -> BitSequence:
    """Toeplitz-hash L bits down to M = ceil(r * L).

    The hash matrix is defined by L + M - 1 public random bits; entry
    (i, j) is tap i - j + L - 1, so output i is a sliding mod-2
    convolution window. r = 1 returns the input unchanged.
    """
    if not 0.0 < r <= 1.0:
        raise DomainError(f"r must lie in (0, 1], got {r!r}")
    n = len(bits)
    if n == 0:
        raise DomainError("cannot amplify an empty sequence")
    if r == 1.0:
        return bits
    m = max(1, math.ceil(r * n - _CEIL_SLOP))
    taps = rng.integers(0, 2, size=n + m - 1, dtype=np.int64)
    conv = np.convolve(bits.bits.astype(np.int64), taps)
    return BitSequence((conv[n - 1 : n - 1 + m] & 1).astype(np.uint8))


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class PipelineConfig:
    """Full experiment description, as parsed from a config mapping."""

    channel: ChannelConfig
    quantizer: QuantizerConfig
    test: TestSpec
    adversary_searches: int
    r: Optional[float]
    trials: int
    reconcile_block: int = 8
    position: int = 1
    adversary_enabled: bool = True
    optimize_grids: Optional[Dict[str, GridSpec]] = None
    calibration_trials: int = 32

    def __post_init__(self):
        if self.optimize_grids is not None:
            coerced = {
                name: grid if isinstance(grid, GridSpec) else GridSpec.from_dict(grid)
                for name, grid in self.optimize_grids.items()
            }
            object.__setattr__(self, "optimize_grids", coerced)
        if self.adversary_searches < 2:
            raise DomainError(
                f"adversary searches must be >= 2, got {self.adversary_searches}"
            )
        if self.r is not None and not 0.0 < self.r <= 1.0:
            raise DomainError(f"r must lie in (0, 1], got {self.r!r}")
        if self.r is None and self.optimize_grids is None:
            raise DomainError(
                "guideline section must pin r or request optimization"
            )
        if self.trials < 1:
            raise DomainError(f"trials must be >= 1, got {self.trials}")
        if self.reconcile_block < 2:
            raise DomainError(
                f"reconcile_block must be >= 2, got {self.reconcile_block}"
            )
        if self.position not in (1, 2):
            raise DomainError(f"position must be 1 or 2, got {self.position}")
        if self.calibration_trials < 2:
            raise DomainError(
                f"calibration_trials must be >= 2, got {self.calibration_trials}"
            )

    def as_dict(self) -> dict:
        guideline: dict = {}
        if self.r is not None:
            guideline["r"] = self.r
        if self.optimize_grids is not None:
            guideline["optimize"] = {
                name: grid.as_dict() for name, grid in self.optimize_grids.items()
            }
            guideline["calibration_trials"] = self.calibration_trials
        test = {"kind": self.test.kind.value, "alpha": self.test.alpha}
        if self.test.block_size is not None:
            test["block_size"] = self.test.block_size
        if self.test.template is not None:
            test["template"] = self.test.template.to_string()
        if self.test.pattern_order is not None:
            test["pattern_order"] = self.test.pattern_order
        return {
            "channel": self.channel.as_dict(),
            "quantizer": self.quantizer.as_dict(),
            "test": test,
            "guideline": guideline,
            "adversary": {
                "searches": self.adversary_searches,
                "enabled": self.adversary_enabled,
            },
            "trials": self.trials,
            "reconcile_block": self.reconcile_block,
            "position": self.position,
        }


def _require_mapping(data, what: str) -> dict:
    if not isinstance(data, dict):
        raise InputError(f"{what} must be a mapping, got {type(data).__name__}")
    return data


def _reject_unknown(data: dict, known: set, what: str) -> None:
    extra = set(data) - known
    if extra:
        raise InputError(f"unknown {what} keys: {sorted(extra)}")


def test_spec_from_dict(data: dict) -> TestSpec:
    """Build a TestSpec from config keys (kind, alpha, optional params)."""
    data = _require_mapping(data, "test section")
    _reject_unknown(
        data,
        {"kind", "alpha", "block_size", "template", "pattern_order"},
        "test",
    )
    if "kind" not in data:
        raise InputError("test section needs a kind")
    try:
        kind = TestKind(data["kind"])
    except ValueError:
        names = ", ".join(k.value for k in TestKind)
        raise InputError(
            f"unknown test kind {data['kind']!r}; expected one of: {names}"
        ) from None
    template = data.get("template")
    if template is not None:
        template = BitSequence.from_string(template)
    return TestSpec(
        kind=kind,
        alpha=float(data.get("alpha", 0.01)),
        block_size=data.get("block_size"),
        template=template,
        pattern_order=data.get("pattern_order"),
    )


def parse_config(data: dict) -> PipelineConfig:
    """Validate and convert a config mapping (e.g. parsed JSON)."""
    data = _require_mapping(data, "config")
    _reject_unknown(
        data,
        {
            "channel",
            "quantizer",
            "test",
            "guideline",
            "adversary",
            "trials",
            "reconcile_block",
            "position",
        },
        "config",
    )
    for key in ("channel", "quantizer", "test", "guideline", "adversary", "trials"):
        if key not in data:
            raise InputError(f"config is missing the {key!r} section")

    ch = _require_mapping(data["channel"], "channel section")
    _reject_unknown(
        ch, {"duration", "ar_coeff", "noise_sd", "sample_interval"}, "channel"
    )
    try:
        channel = ChannelConfig(
            duration=int(ch["duration"]),
            ar_coeff=float(ch["ar_coeff"]),
            noise_sd=float(ch["noise_sd"]),
            sample_interval=float(ch.get("sample_interval", 1.0)),
        )
    except KeyError as exc:
        raise InputError(f"channel section is missing {exc.args[0]!r}") from None

    qz = _require_mapping(data["quantizer"], "quantizer section")
    _reject_unknown(qz, {"kind", "guard", "interval", "levels"}, "quantizer")
    quantizer = QuantizerConfig(
        kind=qz.get("kind", "level_crossing"),
        guard=float(qz.get("guard", 0.3)),
        interval=int(qz.get("interval", 1)),
        levels=int(qz.get("levels", 2)),
    )

    test = test_spec_from_dict(data["test"])

    gl = _require_mapping(data["guideline"], "guideline section")
    _reject_unknown(gl, {"r", "optimize", "calibration_trials"}, "guideline")
    r = gl.get("r")
    grids = None
    if "optimize" in gl:
        opt = _require_mapping(gl["optimize"], "guideline optimize section")
        _reject_unknown(opt, {"alpha_grid", "r_grid"}, "optimize")
        grids = {}
        if "alpha_grid" in opt:
            grids["alpha_grid"] = GridSpec.from_dict(opt["alpha_grid"])
        if "r_grid" in opt:
            grids["r_grid"] = GridSpec.from_dict(opt["r_grid"])
    if r is not None and grids is not None:
        raise InputError("guideline section must not pin r and also optimize")

    adv = _require_mapping(data["adversary"], "adversary section")
    _reject_unknown(adv, {"searches", "enabled"}, "adversary")
    if "searches" not in adv:
        raise InputError("adversary section needs searches")

    return PipelineConfig(
        channel=channel,
        quantizer=quantizer,
        test=test,
        adversary_searches=int(adv["searches"]),
        r=None if r is None else float(r),
        trials=int(data["trials"]),
        reconcile_block=int(data.get("reconcile_block", 8)),
        position=int(data.get("position", 1)),
        adversary_enabled=bool(adv.get("enabled", True)),
        optimize_grids=grids,
        calibration_trials=int(gl.get("calibration_trials", 32)),
    )


# ---------------------------------------------------------------------------
# running


@dataclass(frozen=True)
class TrialRow:
    trial: int
    accepted: bool
    mismatch: float
    eve_hit: bool
    key_bits: int
    elapsed: float

    def as_tuple(self) -> tuple:
        return (
            self.trial,
            int(self.accepted),
            self.mismatch,
            int(self.eve_hit),
            self.key_bits,
            self.elapsed,
        )


@dataclass(frozen=True)
class PipelineReport:
    """Aggregated run outcome; as_dict() is the JSON object the CLI emits."""

    config: PipelineConfig
    seed: int
    alpha: float
    r: float
    trials: int
    r_mismatch: float
    p_accept_empirical: float
    p_eve_empirical: float
    p_rg_analytic: float
    eve_advantage: float
    l_security: Optional[float]
    l_efficiency: float
    key_rate: float
    i_mlts: Optional[float]
    p_collision: Optional[float]
    clamp_engaged: bool
    solution: Optional[GuidelineSolution] = None

    def as_dict(self) -> dict:
        out = {
            "r_mismatch": self.r_mismatch,
            "p_accept_empirical": self.p_accept_empirical,
            "p_eve_empirical": self.p_eve_empirical,
            "p_rg_analytic": self.p_rg_analytic,
            "eve_advantage": self.eve_advantage,
            "l_security": self.l_security,
            "l_efficiency": self.l_efficiency,
            "key_rate": self.key_rate,
            "alpha": self.alpha,
            "r": self.r,
            "trials": self.trials,
            "i_mlts": self.i_mlts,
            "p_collision": self.p_collision,
            "clamp_engaged": self.clamp_engaged,
            "seeds": {
                "master": self.seed,
                "per_trial": "spawn_key=(trial,)",
                "algorithm": ALGORITHM,
            },
            "config": self.config.as_dict(),
        }
        if self.solution is not None:
            out["guideline_solution"] = self.solution.as_dict()
        return out


def _quantize_pair(
    config: PipelineConfig, trace: ChannelTrace
) -> Tuple[BitSequence, BitSequence]:
    qz = config.quantizer
    if qz.kind == "level_crossing":
        mu = float(trace.alice.mean())
        sd = float(trace.alice.std())
        q_plus = mu + qz.guard * sd
        q_minus = mu - qz.guard * sd
        alice, kept = level_crossing_quantize(
            trace.alice, q_plus, q_minus, qz.interval
        )
        bob = quantize_at_indices(trace.bob, kept, (q_plus + q_minus) / 2.0)
        return alice, bob
    alice, _ = mary_quantize(trace.alice, qz.levels, qz.interval)
    bob, _ = mary_quantize(trace.bob, qz.levels, qz.interval)
    return alice, bob


class _EveCache:
    """First-N candidate sets of the enumeration, keyed by length."""

    def __init__(self, searches: int):
        self.searches = searches
        self._by_length: Dict[int, frozenset] = {}

    def candidate_set(self, length: int) -> frozenset:
        if length not in self._by_length:
            if length > MAX_ENUMERATION_LENGTH:
                raise ScaleError(
                    f"attack enumeration supports sequences up to "
                    f"{MAX_ENUMERATION_LENGTH} bits, got {length}; shrink the "
                    f"channel duration or raise the quantizer interval"
                )
            budget = budget_from_searches(self.searches, length)
            self._by_length[length] = frozenset(
                seq.as_int() for seq in enumerate_mlts(budget)
            )
        return self._by_length[length]


def resolve_operating_point(
    config: PipelineConfig, seed: int
) -> Tuple[float, float, Optional[GuidelineSolution]]:
    """(alpha, r) to run at; optimizes over calibration data when asked.

    When the config pins r, the test's own alpha is used unchanged. In
    optimize mode, calibration trials (seeded past the run's trial range)
    estimate the bit-level correlation, and the grid search picks
    (alpha*, r*).
    """
    if config.optimize_grids is None:
        return config.test.alpha, float(config.r), None
    chunks = []
    lengths = []
    for i in range(config.calibration_trials):
        rng = derive_generator(seed, config.trials + i)
        trace = simulate_channel(config.channel, rng)
        alice, _ = _quantize_pair(config, trace)
        chunks.append(alice.bits)
        lengths.append(len(alice))
    rho_hat = lag1_correlation(np.concatenate(chunks))
    typical_length = int(np.median(lengths))
    problem = GuidelineProblem(
        sequence_length=max(2, typical_length),
        adversary_searches=config.adversary_searches,
        rho=rho_hat,
        test=config.test,
        **config.optimize_grids,
    )
    solution = guideline_optimize(problem)
    return solution.alpha_star, solution.r_star, solution


def _run_trials(
    config: PipelineConfig,
    test: TestSpec,
    r: float,
    seed: int,
    start: int,
    stop: int,
) -> tuple:
    """Trial loop over [start, stop); pure in (config, test, r, seed)."""
    eve = _EveCache(config.adversary_searches) if config.adversary_enabled else None
    rows: List[TrialRow] = []
    rg_sum = 0.0
    key_bits_total = 0
    rho_hats: List[float] = []
    rec_lengths: List[int] = []
    for trial in range(start, stop):
        t0 = time.perf_counter()
        rng = derive_generator(seed, trial)
        trace = simulate_channel(config.channel, rng)
        alice, bob = _quantize_pair(config, trace)

        accepted = True
        if config.position == 1:
            if len(alice) >= 2:
                outcome = run_test(test, alice, enforce_min_length=False)
                accepted = outcome.verdict
            else:
                accepted = False

        retained, mismatch = reconcile(alice, bob, config.reconcile_block)
        if config.position == 2:
            if len(retained) >= 2:
                outcome = run_test(test, retained, enforce_min_length=False)
                accepted = outcome.verdict
            else:
                accepted = False

        if accepted and len(retained) == 0:
            accepted = False
        eve_hit = False
        key_bits = 0
        if accepted:
            key = privacy_amplify(retained, r, rng)
            key_bits = len(key)
            rg_sum += rg_success_prob(config.adversary_searches, key_bits)
            if eve is not None:
                eve_hit = retained.as_int() in eve.candidate_set(len(retained))
            rec_lengths.append(len(retained))
            try:
                rho_hats.append(abs(lag1_correlation(alice)))
            except ChanRandError:
                pass

        key_bits_total += key_bits
        rows.append(
            TrialRow(
                trial=trial,
                accepted=accepted,
                mismatch=mismatch,
                eve_hit=eve_hit,
                key_bits=key_bits,
                elapsed=time.perf_counter() - t0,
            )
        )
    return rows, rg_sum, key_bits_total, rho_hats, rec_lengths


def run_pipeline(
    config: PipelineConfig, seed: int, jobs: int = 1
) -> Tuple[PipelineReport, List[TrialRow]]:
    """Run all trials; returns the aggregate report and per-trial rows.

    jobs > 1 splits the trial range over worker processes; per-trial
    seeding makes the result identical to the sequential run.
    """
    if jobs < 1:
        raise DomainError(f"jobs must be >= 1, got {jobs}")
    alpha, r, solution = resolve_operating_point(config, seed)
    test = (
        config.test
        if config.test.alpha == alpha
        else replace(config.test, alpha=alpha)
    )

    jobs = min(jobs, config.trials)
    if jobs == 1:
        parts = [_run_trials(config, test, r, seed, 0, config.trials)]
    else:
        edges = np.linspace(0, config.trials, jobs + 1).astype(int)
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(
                pool.map(
                    _run_trials,
                    *zip(
                        *(
                            (config, test, r, seed, int(a), int(b))
                            for a, b in zip(edges[:-1], edges[1:])
                        )
                    ),
                )
            )

    rows = [row for part in parts for row in part[0]]
    rg_sum = sum(part[1] for part in parts)
    key_bits_total = sum(part[2] for part in parts)
    rho_hats = [v for part in parts for v in part[3]]
    rec_lengths = [v for part in parts for v in part[4]]
    clamp_engaged = False

    n = config.trials
    p_accept = sum(row.accepted for row in rows) / n
    p_eve = sum(row.eve_hit for row in rows) / n
    p_rg = rg_sum / n
    i_mlts = None
    p_coll = None
    if rec_lengths:
        length = int(np.median(rec_lengths))
        rho_typ = float(np.median(rho_hats)) if rho_hats else 0.0
        i_mlts = mlts_success_prob_exact_budget(
            length, rho_typ, config.adversary_searches
        )
        depth = budget_from_searches(config.adversary_searches, length).depth
        clamp_engaged = mlts_success_prob_raw(length, rho_typ, depth) > 1.0
        p_coll = collision_prob(
            length, max(1, math.ceil(r * length - _CEIL_SLOP))
        )
    l_security = None
    if p_eve > 0.0 and p_rg > 0.0:
        l_security = math.log2(p_eve) - math.log2(p_rg)
    duration_s = config.channel.duration * config.channel.sample_interval
    report = PipelineReport(
        config=config,
        seed=seed,
        alpha=alpha,
        r=r,
        trials=n,
        r_mismatch=float(np.mean([row.mismatch for row in rows])),
        p_accept_empirical=p_accept,
        p_eve_empirical=p_eve,
        p_rg_analytic=check_probability(min(1.0, p_rg), "p_rg"),
        eve_advantage=p_eve - p_rg,
        l_security=l_security,
        l_efficiency=1.0 - p_accept * r,
        key_rate=key_bits_total / (n * duration_s),
        i_mlts=i_mlts,
        p_collision=p_coll,
        clamp_engaged=clamp_engaged,
        solution=solution,
    )
    return report, rows
