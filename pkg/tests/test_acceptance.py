"""Acceptance gate: one test per release criterion, C1 through C10.

Each test prints a single C<n> PASS/FAIL line with its measurements, so
the run log doubles as the acceptance record. Monte-Carlo criteria use
pinned seeds; every tolerance appears literally in the assertion.
"""

import json
import math
import os
import random
import time

import numpy as np
import pytest

from chanrand.bitmodel import BitSequence, MarkovBitModel, generate_batch
from chanrand.cli import main as cli_main
from chanrand.guideline import (
    GridSpec,
    GuidelineProblem,
    constraint_slack,
    efficiency,
    feasible,
    optimize,
)
from chanrand.mlts import (
    collision_prob,
    mlts_success_prob,
    realizable_searches,
    rg_success_prob,
    security_loss,
)
from chanrand.pipeline import (
    ChannelConfig,
    PipelineConfig,
    QuantizerConfig,
    run_pipeline,
)
from chanrand.randtests import (
    TestKind,
    TestSpec,
    accept_probability,
    accept_rates,
    run_test,
)
from chanrand import specfun

BUILD_DIR = os.path.join(os.path.dirname(__file__), "..", "build")


def report_line(capsys, criterion: str, ok: bool, detail: str) -> None:
    # bypass capture so the verdict line shows for passing tests too
    with capsys.disabled():
        print(f"{criterion} {'PASS' if ok else 'FAIL'}: {detail}")


# ---------------------------------------------------------------------------
# C1: closed-form attack probability vs brute-force enumeration


def enumeration_oracle(length: int, rho: float, depth: int) -> float:
    """Sum the per-sequence candidate mass over all 2^length sequences.

    A candidate lies within depth/2 substitutions of either constant
    sequence; its mass is the equal mixture of the two per-slot flip
    measures (flip probability theta from one root, 1 - theta from the
    other).
    """
    theta = (1.0 - rho) / 2.0
    v = np.arange(2**length, dtype=np.uint64)
    w = np.zeros(v.size, dtype=np.int64)
    for b in range(length):
        w += ((v >> np.uint64(b)) & np.uint64(1)).astype(np.int64)
    candidate = np.minimum(w, length - w) <= depth // 2
    wf = w[candidate].astype(np.float64)
    mass = 0.5 * (
        theta**wf * (1.0 - theta) ** (length - wf)
        + (1.0 - theta) ** wf * theta ** (length - wf)
    )
    return min(1.0, float(mass.sum()))


def c1_grid():
    for length in (8, 12, 16):
        for rho in (0.0, 0.2, 0.5, 0.9):
            for depth in sorted({0, 2, 4, length // 2}):
                yield length, rho, depth


def test_c01_attack_closed_form_matches_enumeration(capsys):
    t0 = time.perf_counter()
    worst = 0.0
    for length, rho, depth in c1_grid():
        got = mlts_success_prob(length, rho, depth)
        want = enumeration_oracle(length, rho, depth)
        worst = max(worst, abs(got - want))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed < 60.0
    report_line(
        capsys, "C1", ok,
        f"max |closed form - enumeration| = {worst:.3e}, {elapsed:.1f}s",
    )
    assert worst <= 1e-10
    assert elapsed < 60.0


# ---------------------------------------------------------------------------
# C2: at rho = 0 the attack collapses to random guessing over 2^L


def test_c02_uncorrelated_attack_equals_guessing(capsys):
    worst = 0.0
    for length, _, depth in c1_grid():
        got = mlts_success_prob(length, 0.0, depth)
        want = realizable_searches(length, depth) * 2.0**-length
        worst = max(worst, abs(got - want))
    ok = worst <= 1e-12
    report_line(capsys, "C2", ok, f"max |P - N*2^-L| = {worst:.3e}")
    assert worst <= 1e-12


# ---------------------------------------------------------------------------
# C3: pinned reference constants


def test_c03_reference_constants(capsys):
    loss = security_loss(2.0**-80, 2.0**-120)
    coll = collision_prob(32, 32)
    rg = rg_success_prob(2**96, 128)
    ok = (
        loss == 40.0
        and abs(coll - 7.45e-9) / 7.45e-9 <= 0.01
        and rg == 2.0**-32
    )
    report_line(capsys, "C3", ok, f"loss={loss}, collision={coll:.6g}, rg={rg:.6g}")
    assert loss == 40.0
    assert coll == pytest.approx(7.45e-9, rel=0.01)
    assert rg == 2.0**-32


# ---------------------------------------------------------------------------
# C4: frequency-test analytics against Monte Carlo


def exact_frequency_accept(rho: float, alpha: float, length: int) -> float:
    """Ground-truth accept probability by dynamic programming.

    Tracks (last bit, sum of +-1 steps) through the chain and accumulates
    the mass with |sum| below the test's threshold. The statistic lives
    on a lattice of gap 2/sqrt(L), so this differs from the continuous
    approximation at short lengths.
    """
    threshold = math.sqrt(2.0 * length) * specfun.erfc_inv(alpha)
    theta = (1.0 - rho) / 2.0
    offsets = np.arange(-length, length + 1)
    state = np.zeros((2, 2 * length + 1))
    state[0, length - 1] = 0.5
    state[1, length + 1] = 0.5
    for _ in range(length - 1):
        nxt = np.zeros_like(state)
        # a 0 bit moves the sum down one slot, a 1 bit up one
        nxt[0, :-1] = state[0, 1:] * (1.0 - theta) + state[1, 1:] * theta
        nxt[1, 1:] = state[1, :-1] * (1.0 - theta) + state[0, :-1] * theta
        state = nxt
    mass = state.sum(axis=0)
    return float(mass[np.abs(offsets) < threshold].sum())


def test_c04_frequency_analytics_track_monte_carlo(capsys):
    t0 = time.perf_counter()
    closed_gap = max(
        abs(
            accept_probability(TestSpec(TestKind.FREQUENCY, alpha=a), 0.0, 128)
            - (1.0 - a)
        )
        for a in (0.0001, 0.01, 0.05, 0.3)
    )

    trials = 100_000
    lines = []
    failures = []
    for rho in (0.0, 0.1, 0.3):
        for alpha in (0.01, 0.05):
            spec = TestSpec(TestKind.FREQUENCY, alpha=alpha)
            h = accept_probability(spec, rho, 128)
            rate = float(accept_rates(spec, rho, 128, trials, seed=2601)[0])
            lattice = exact_frequency_accept(rho, alpha, 128)
            sigma = math.sqrt(h * (1.0 - h) / trials)
            pull = abs(rate - h) / sigma
            lines.append(
                f"  rho={rho} alpha={alpha}: analytic={h:.5f} mc={rate:.5f} "
                f"lattice-exact={lattice:.5f} ({pull:.1f} sigma)"
            )
            if pull > 3.0:
                failures.append((rho, alpha, pull))
    elapsed = time.perf_counter() - t0
    ok = closed_gap <= 1e-9 and not failures and elapsed < 120.0
    report_line(
        capsys,
        "C4",
        ok,
        f"closed-form gap {closed_gap:.1e}; "
        f"{len(failures)} of 6 cells beyond 3 sigma; {elapsed:.1f}s",
    )
    for line in lines:
        print(line)
    if failures:
        print(
            "  the 128-bit statistic takes values on a lattice of gap "
            "2/sqrt(128); the lattice-exact column shows the resulting "
            "accept probability, which the Monte Carlo rate follows"
        )
    assert closed_gap <= 1e-9
    assert elapsed < 120.0
    assert not failures, f"cells beyond 3 sigma of analytic: {failures}"


# ---------------------------------------------------------------------------
# C5: chi-square family analytics, discrepancies recorded


CHI_KINDS = (
    TestKind.BLOCK_FREQUENCY,
    TestKind.LONGEST_RUN,
    TestKind.NON_OVERLAPPING,
    TestKind.APPROXIMATE_ENTROPY,
    TestKind.SERIAL1,
    TestKind.SERIAL2,
)


def test_c05_chi_family_analytics_reported(capsys):
    trials = 10_000
    cells = []
    for kind in CHI_KINDS:
        for rho in (0.0, 0.2):
            spec = TestSpec(kind, alpha=0.05)
            h = accept_probability(spec, rho, 1024)
            rate = float(accept_rates(spec, rho, 1024, trials, seed=1605)[0])
            gap_pp = abs(rate - h) * 100.0
            cells.append(
                {
                    "kind": kind.value,
                    "rho": rho,
                    "alpha": 0.05,
                    "length": 1024,
                    "trials": trials,
                    "analytic": h,
                    "monte_carlo": rate,
                    "gap_percentage_points": gap_pp,
                    "status": "ok" if gap_pp <= 5.0 else "reported_discrepancy",
                }
            )
    os.makedirs(BUILD_DIR, exist_ok=True)
    path = os.path.join(BUILD_DIR, "analytic_mc_report.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"cells": cells, "tolerance_pp": 5.0}, fh, indent=2)
        fh.write("\n")

    flagged = [c for c in cells if c["status"] != "ok"]
    ok = len(cells) == 12 and os.path.exists(path)
    report_line(
        capsys,
        "C5",
        ok,
        f"12 cells evaluated, {len(flagged)} beyond 5pp recorded in "
        f"build/analytic_mc_report.json",
    )
    for c in cells:
        print(
            f"  {c['kind']:28s} rho={c['rho']}: analytic={c['analytic']:.4f} "
            f"mc={c['monte_carlo']:.4f} gap={c['gap_percentage_points']:.2f}pp "
            f"[{c['status']}]"
        )
    assert len(cells) == 12
    assert os.path.exists(path)
    # fair-coin cells are tight for the kinds whose statistic is smooth at
    # this length; the template test's block counts are small integers at
    # 1024 bits, so its p-values are lumpy and it stays a reported cell
    for c in cells:
        if c["rho"] == 0.0 and c["kind"] != "non_overlapping_template":
            assert c["gap_percentage_points"] <= 5.0


# ---------------------------------------------------------------------------
# C6: optimizer equals an exhaustive re-scan


def independent_rescan(problem: GuidelineProblem):
    best = None
    fallback = None
    for a in problem.alpha_grid.values():
        for r in problem.r_grid.values():
            e = efficiency(problem, float(a), float(r))
            s = constraint_slack(problem, float(a), float(r))
            if s >= 0.0:
                key = (e, -a, r)
                if best is None or key > best[0]:
                    best = (key, float(a), float(r))
            else:
                fkey = (s, e, -a, r)
                if fallback is None or fkey > fallback[0]:
                    fallback = (fkey, float(a), float(r))
    if best is not None:
        return best[1], best[2], True
    return fallback[1], fallback[2], False


def test_c06_optimizer_matches_exhaustive_scan(capsys):
    mismatches = []
    infeasible_slack = 0
    frontier_breaks = 0
    solved = 0
    for seed in range(20):
        rng = random.Random(1000 + seed)
        problem = GuidelineProblem(
            sequence_length=rng.choice([12, 16, 20, 24]),
            adversary_searches=rng.choice([4, 32, 256, 1024]),
            rho=rng.uniform(-0.7, 0.7),
            test=TestSpec(rng.choice([TestKind.FREQUENCY, TestKind.RUNS])),
            alpha_grid=GridSpec(0.0001, 0.3, 0.0299),
            r_grid=GridSpec(0.1, 1.0, 0.09),
        )
        sol = optimize(problem)
        a, r, feas = independent_rescan(problem)
        solved += 1
        if (
            sol.feasible != feas
            or abs(sol.alpha_star - a) > 1e-15
            or abs(sol.r_star - r) > 1e-15
        ):
            mismatches.append((seed, sol.alpha_star, a, sol.r_star, r))
        if sol.feasible and sol.constraint_slack < 0.0:
            infeasible_slack += 1
        # frontier: at fixed r, feasibility is preserved as alpha grows
        for rv in problem.r_grid.values():
            flags = [
                feasible(problem, float(av), float(rv))
                for av in problem.alpha_grid.values()
            ]
            first = flags.index(True) if True in flags else len(flags)
            if not all(flags[first:]):
                frontier_breaks += 1
    ok = not mismatches and infeasible_slack == 0 and frontier_breaks == 0
    report_line(
        capsys,
        "C6",
        ok,
        f"{solved} problems: {len(mismatches)} scan mismatches, "
        f"{infeasible_slack} negative-slack solutions, "
        f"{frontier_breaks} frontier breaks",
    )
    assert not mismatches
    assert infeasible_slack == 0
    assert frontier_breaks == 0


# ---------------------------------------------------------------------------
# C7: paired pipeline experiment on a correlated channel


def c7_config(**guideline):
    return PipelineConfig(
        channel=ChannelConfig(duration=40, ar_coeff=0.9, noise_sd=0.12),
        quantizer=QuantizerConfig(kind="level_crossing", guard=0.0, interval=2),
        test=TestSpec(TestKind.RUNS, alpha=1e-4),
        adversary_searches=256,
        trials=10_000,
        reconcile_block=4,
        position=2,
        **guideline,
    )


def advantage_sigma(report, rows, searches):
    rg_vals = np.array(
        [
            rg_success_prob(searches, row.key_bits) if row.accepted else 0.0
            for row in rows
        ]
    )
    n = len(rows)
    p = report.p_eve_empirical
    return math.sqrt(p * (1.0 - p) / n + float(np.var(rg_vals)) / n)


def test_c07_guideline_neutralizes_the_attack(capsys):
    t0 = time.perf_counter()
    seed = 20260816
    loose = c7_config(r=1.0)
    loose_report, loose_rows = run_pipeline(loose, seed=seed, jobs=4)

    optimized = c7_config(
        r=None,
        optimize_grids={
            "alpha_grid": GridSpec(0.0001, 0.3, 0.001),
            "r_grid": GridSpec(0.1, 1.0, 0.01),
        },
        calibration_trials=64,
    )
    opt_report, opt_rows = run_pipeline(optimized, seed=seed, jobs=4)

    loose_adv = loose_report.eve_advantage
    loose_sig = advantage_sigma(loose_report, loose_rows, 256)
    opt_adv = opt_report.eve_advantage
    opt_sig = advantage_sigma(opt_report, opt_rows, 256)
    elapsed = time.perf_counter() - t0
    ok = loose_adv > 0.0 and opt_adv <= 3.0 * opt_sig
    report_line(
        capsys,
        "C7",
        ok,
        f"loose advantage {loose_adv:+.4f} (3 sigma {3*loose_sig:.4f}), "
        f"optimized advantage {opt_adv:+.4f} (3 sigma {3*opt_sig:.4f}) at "
        f"alpha*={opt_report.alpha:.4g} r*={opt_report.r:.3g}; {elapsed:.0f}s",
    )
    assert loose_adv > 0.0
    assert loose_adv > 3.0 * loose_sig  # the loose gap is significant too
    assert opt_adv <= 3.0 * opt_sig
    assert opt_report.solution is not None and opt_report.solution.feasible


# ---------------------------------------------------------------------------
# C8: test-suite behavior on known inputs


def test_c08_suite_worked_value_and_fair_coin_tally(capsys):
    out = run_test(
        TestSpec(TestKind.FREQUENCY),
        BitSequence.from_string("1011010101"),
        enforce_min_length=False,
    )
    worked_ok = abs(out.p_value - 0.5271) <= 0.0001

    batch = generate_batch(MarkovBitModel(0.0), 1_000_000, 100, seed=1)
    counts = {kind: 0 for kind in TestKind}
    for i in range(100):
        seq = BitSequence(batch[i])
        for kind in TestKind:
            counts[kind] += int(
                run_test(TestSpec(kind, alpha=0.01), seq).verdict
            )
    worst = min(counts.values())
    ok = worked_ok and worst >= 97
    tally = ", ".join(f"{k.value}={v}" for k, v in counts.items())
    report_line(
        capsys,
        "C8",
        ok,
        f"frequency P={out.p_value:.6f}; per-test accepts over 100 runs: "
        f"min {worst}",
    )
    print(f"  {tally}")
    assert worked_ok
    assert worst >= 97


# ---------------------------------------------------------------------------
# C9: special-function invariants at scale


def test_c09_special_function_invariants(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(909)
    n = 10_000

    worst_round = 0.0
    for q in 10.0 ** rng.uniform(-6.0, math.log10(1.999), n):
        worst_round = max(worst_round, abs(specfun.erfc(specfun.erfc_inv(q)) - q))

    worst_reflect = 0.0
    for _ in range(n):
        a = 10.0 ** rng.uniform(-2.0, 3.0)
        b = 10.0 ** rng.uniform(-2.0, 3.0)
        x = rng.uniform(1e-9, 1.0 - 1e-9)
        s = specfun.reg_inc_beta(x, a, b) + specfun.reg_inc_beta(1.0 - x, b, a)
        worst_reflect = max(worst_reflect, abs(s - 1.0))

    worst_binom = 0.0
    for _ in range(n):
        length = int(rng.integers(1, 61))
        k = int(rng.integers(0, length + 1))
        p = rng.uniform(0.0, 1.0)
        direct = sum(
            math.comb(length, i) * p**i * (1.0 - p) ** (length - i)
            for i in range(k + 1)
        )
        worst_binom = max(
            worst_binom, abs(specfun.binomial_tail_sum(length, k, p) - direct)
        )

    worst_gamma = 0.0
    for _ in range(n):
        a = 10.0 ** rng.uniform(-2.0, 3.0)
        x = 10.0 ** rng.uniform(-3.0, 3.0)
        s = specfun.reg_inc_gamma(a, x) + specfun.reg_inc_gamma(a, x, upper=True)
        worst_gamma = max(worst_gamma, abs(s - 1.0))

    elapsed = time.perf_counter() - t0
    ok = (
        worst_round <= 1e-10
        and worst_reflect <= 1e-10
        and worst_binom <= 1e-10
        and worst_gamma <= 1e-12
        and elapsed < 30.0
    )
    report_line(
        capsys,
        "C9",
        ok,
        f"round-trip {worst_round:.1e}, reflection {worst_reflect:.1e}, "
        f"binomial {worst_binom:.1e}, gamma tails {worst_gamma:.1e}; "
        f"{elapsed:.1f}s",
    )
    assert worst_round <= 1e-10
    assert worst_reflect <= 1e-10
    assert worst_binom <= 1e-10
    assert worst_gamma <= 1e-12
    assert elapsed < 30.0


# ---------------------------------------------------------------------------
# C10: byte-identical CLI output under a fixed seed


def test_c10_cli_reproducibility(capsys, tmp_path):
    seq_file = tmp_path / "seqs.txt"
    cli_main(
        ["gen", "--L", "2048", "--rho", "0.1", "--seed", "30", "--out", str(seq_file)]
    )
    opt_cfg = tmp_path / "problem.json"
    opt_cfg.write_text(
        json.dumps(
            {
                "sequence_length": 20,
                "adversary_searches": 64,
                "rho": 0.25,
                "test": {"kind": "frequency"},
                "alpha_grid": {"lo": 0.001, "hi": 0.1, "step": 0.01},
                "r_grid": {"lo": 0.25, "hi": 1.0, "step": 0.25},
            }
        )
    )
    sim_cfg = tmp_path / "pipeline.json"
    sim_cfg.write_text(
        json.dumps(
            {
                "channel": {"duration": 30, "ar_coeff": 0.5, "noise_sd": 0.1},
                "quantizer": {"kind": "level_crossing", "guard": 0.0, "interval": 2},
                "test": {"kind": "frequency", "alpha": 0.01},
                "guideline": {"r": 1.0},
                "adversary": {"searches": 32},
                "trials": 50,
            }
        )
    )
    capsys.readouterr()

    commands = {
        "gen": ["gen", "--L", "512", "--trials", "3", "--rho", "0.2", "--seed", "7"],
        "test": ["test", "--kind", "all", "--in", str(seq_file)],
        "attack": ["attack", "--L", "24", "--rho", "0.3", "--N", "128", "--M", "12"],
        "optimize": ["optimize", "--config", str(opt_cfg), "--trials", "400",
                     "--seed", "19"],
        "simulate": ["simulate", "--config", str(sim_cfg), "--seed", "23",
                     "--jobs", "2"],
    }
    diffs = []
    for name, argv in commands.items():
        code1 = cli_main(list(argv))
        out1 = capsys.readouterr().out
        code2 = cli_main(list(argv))
        out2 = capsys.readouterr().out
        if code1 != 0 or code2 != 0 or out1 != out2 or not out1:
            diffs.append(name)
    ok = not diffs
    report_line(
        capsys,
        "C10",
        ok,
        f"5 subcommands re-run under fixed seeds; "
        f"differing: {diffs if diffs else 'none'}",
    )
    assert not diffs
