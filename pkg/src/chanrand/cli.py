"""Command-line interface.

Five subcommands: gen (draw model sequences), test (run the randomness
battery on sequence files), attack (closed-form attack probabilities),
optimize (grid-search an operating point), simulate (run the full
pipeline). Machine-readable results go to stdout (or --out), human
summaries to stderr. Exit codes: 0 success, 1 domain/input error, 2
usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from typing import List, Optional

from .bitmodel import (
    BitSequence,
    MarkovBitModel,
    MaryMarkovModel,
    encode_states,
    generate_batch,
    lag1_correlation,
    read_bits_packed,
    read_bits_text,
    sample_states,
    write_bits_packed,
)
from .errors import ChanRandError, InputError
from .guideline import (
    GridSpec,
    GuidelineProblem,
    empirical_accept_fn,
    optimize as guideline_optimize,
)
from .mlts import (
    build_security_report,
    mlts_success_prob,
    mlts_success_prob_exact_budget,
    mlts_success_prob_mary,
    realizable_searches,
)
from .pipeline import (
    TRIAL_COLUMNS,
    parse_config,
    run_pipeline,
    test_spec_from_dict,
)
from .randtests import TestKind, TestSpec, run_test
from .rng import derive_seed, fresh_seed

_PACKED_MAGIC = b"CRND"


def main(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ChanRandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chanrand",
        description="Markov bit sources, randomness tests, attack models, "
        "and the key-generation pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="draw sequences from the Markov model")
    gen.add_argument("--L", type=int, required=True, help="bits per sequence")
    gen.add_argument("--rho", type=float, default=0.0, help="lag-1 correlation")
    gen.add_argument("--trials", type=int, default=1, help="number of sequences")
    gen.add_argument(
        "--m-levels", type=int, default=None,
        help="use the m-level chain with this many levels",
    )
    gen.add_argument("--seed", type=int, default=None)
    gen.add_argument("--out", default=None, help="output file (default stdout)")
    gen.add_argument(
        "--format", choices=("text", "packed"), default="text",
        help="sequence file format (packed needs --out and --trials 1)",
    )
    gen.set_defaults(func=_cmd_gen)

    test = sub.add_parser("test", help="run randomness tests on sequences")
    test.add_argument(
        "--kind", default="all",
        choices=tuple(k.value for k in TestKind) + ("all",),
    )
    test.add_argument("--alpha", type=float, default=0.01)
    test.add_argument(
        "--in", dest="infile", default=None,
        help="sequence file, text or packed (default: text records on stdin)",
    )
    test.add_argument("--out", default=None, help="write the JSON here")
    test.add_argument(
        "--no-min-length", action="store_true",
        help="skip the per-test calibration length check",
    )
    test.set_defaults(func=_cmd_test)

    attack = sub.add_parser(
        "attack", help="closed-form attack success probabilities"
    )
    attack.add_argument("--L", type=int, required=True, help="sequence length")
    attack.add_argument("--rho", type=float, required=True)
    attack.add_argument("--n", type=int, default=None, help="even tree depth")
    attack.add_argument(
        "--N", type=int, default=None, help="raw search budget"
    )
    attack.add_argument(
        "--m-levels", type=int, default=None,
        help="evaluate the m-level variant at this m",
    )
    attack.add_argument(
        "--M", type=int, default=None,
        help="key bits; emits the full security report when given",
    )
    attack.add_argument("--out", default=None)
    attack.set_defaults(func=_cmd_attack)

    opt = sub.add_parser("optimize", help="grid-search an operating point")
    opt.add_argument("--config", required=True, help="problem JSON file")
    opt.add_argument(
        "--in", dest="infile", default=None,
        help="sequence file whose lag-1 correlation replaces config rho",
    )
    opt.add_argument(
        "--trials", type=int, default=None,
        help="estimate accept rates empirically from this many trials",
    )
    opt.add_argument("--seed", type=int, default=None)
    opt.add_argument("--figures", default=None, help="drop figures in this directory")
    opt.add_argument("--out", default=None)
    opt.set_defaults(func=_cmd_optimize)

    sim = sub.add_parser("simulate", help="run the key-generation pipeline")
    sim.add_argument("--config", required=True, help="pipeline JSON file")
    sim.add_argument("--trials", type=int, default=None, help="override trials")
    sim.add_argument(
        "--position", type=int, choices=(1, 2), default=None,
        help="override the test position",
    )
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--jobs", type=int, default=1, help="worker processes")
    sim.add_argument("--out", default=None, help="per-trial rows file")
    sim.add_argument(
        "--format", choices=("csv", "json"), default="csv",
        help="per-trial row format for --out",
    )
    sim.add_argument("--figures", default=None, help="drop figures in this directory")
    sim.set_defaults(func=_cmd_simulate)

    return parser


def _resolve_seed(seed: Optional[int]) -> int:
    if seed is not None:
        return seed
    seed = fresh_seed()
    print(f"seed {seed} (generated; pass --seed {seed} to reproduce)", file=sys.stderr)
    return seed


def _emit_json(obj, out: Optional[str]) -> None:
    text = json.dumps(obj, indent=2)
    if out is None:
        print(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def _read_sequences(path: Optional[str]) -> List[BitSequence]:
    if path is None:
        data = sys.stdin.read()
        return [
            BitSequence.from_string(line)
            for line in data.splitlines()
            if line.strip()
        ]
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == _PACKED_MAGIC:
        return [read_bits_packed(path)]
    return read_bits_text(path)


# ---------------------------------------------------------------------------
# subcommands


def _cmd_gen(args) -> int:
    seed = _resolve_seed(args.seed)
    if args.trials < 1:
        raise InputError(f"--trials must be >= 1, got {args.trials}")
    if args.m_levels is not None and args.m_levels != 2:
        model = MaryMarkovModel(levels=args.m_levels, rho_m=args.rho)
        b = model.bits_per_level
        if args.L % b:
            raise InputError(
                f"--L {args.L} is not divisible by the {b} bits each of the "
                f"{args.m_levels} levels encodes to"
            )
        count = args.L // b
        seqs = [
            encode_states(sample_states(model, count, derive_seed(seed, i)), b)
            for i in range(args.trials)
        ]
    else:
        batch = generate_batch(MarkovBitModel(args.rho), args.L, args.trials, seed)
        seqs = [BitSequence(row) for row in batch]

    if args.format == "packed":
        if args.out is None:
            raise InputError("--format packed needs --out")
        if args.trials != 1:
            raise InputError("--format packed holds a single sequence")
        write_bits_packed(args.out, seqs[0])
    elif args.out is None:
        for seq in seqs:
            print(seq.to_string())
    else:
        with open(args.out, "w", encoding="ascii", newline="\n") as fh:
            for seq in seqs:
                fh.write(seq.to_string() + "\n")
    dest = args.out if args.out else "stdout"
    print(
        f"wrote {args.trials} sequence(s) of {args.L} bits to {dest} "
        f"(rho={args.rho}, seed={seed})",
        file=sys.stderr,
    )
    return 0


def _test_specs(kind: str, alpha: float) -> List[TestSpec]:
    if kind == "all":
        return [TestSpec(k, alpha=alpha) for k in TestKind]
    return [TestSpec(TestKind(kind), alpha=alpha)]


def _cmd_test(args) -> int:
    seqs = _read_sequences(args.infile)
    if not seqs:
        raise InputError("no input sequences")
    specs = _test_specs(args.kind, args.alpha)
    records = []
    for i, seq in enumerate(seqs):
        results = []
        for spec in specs:
            outcome = run_test(
                spec, seq, enforce_min_length=not args.no_min_length
            )
            results.append(outcome.as_dict())
            verdict = "accept" if outcome.verdict else "reject"
            print(
                f"record {i} {spec.kind.value}: p={outcome.p_value:.6g} {verdict}",
                file=sys.stderr,
            )
        records.append({"index": i, "length": len(seq), "results": results})
    _emit_json({"records": records}, args.out)
    return 0


def _cmd_attack(args) -> int:
    if (args.n is None) == (args.N is None):
        raise InputError("pass exactly one of --n (depth) or --N (budget)")
    if args.m_levels is not None:
        if args.n is None:
            raise InputError("the m-level closed form takes --n, not --N")
        prob = mlts_success_prob_mary(args.L, args.rho, args.n, args.m_levels)
        searches = None
    elif args.n is not None:
        prob = mlts_success_prob(args.L, args.rho, args.n)
        searches = realizable_searches(args.L, args.n)
    else:
        prob = mlts_success_prob_exact_budget(args.L, args.rho, args.N)
        searches = args.N

    if args.M is None:
        _emit_json(prob, args.out)
        print(f"attack success probability {prob:.6g}", file=sys.stderr)
        return 0
    if searches is None:
        raise InputError("the security report does not cover the m-level variant")
    report, clamped = build_security_report(
        args.L, args.rho, searches, args.M
    )
    out = report.as_dict()
    out["clamp_engaged"] = clamped
    _emit_json(out, args.out)
    print(
        f"p_eve={report.p_eve:.6g} p_rg={report.p_rg:.6g} "
        f"loss={report.security_loss_bits:+.3f} bits",
        file=sys.stderr,
    )
    return 0


def _cmd_optimize(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise InputError("optimize config must be a JSON object")
    unknown = set(data) - {
        "sequence_length",
        "adversary_searches",
        "rho",
        "test",
        "alpha_grid",
        "r_grid",
    }
    if unknown:
        raise InputError(f"unknown optimize config keys: {sorted(unknown)}")
    for key in ("sequence_length", "adversary_searches", "test"):
        if key not in data:
            raise InputError(f"optimize config is missing {key!r}")

    if args.infile is not None:
        bits = _read_sequences(args.infile)
        joined = []
        for seq in bits:
            joined.extend(seq)
        rho = lag1_correlation(BitSequence(joined))
        print(f"estimated rho={rho:.6f} from {args.infile}", file=sys.stderr)
    elif "rho" in data:
        rho = float(data["rho"])
    else:
        raise InputError("optimize config needs rho (or pass --in to estimate it)")

    kwargs = {}
    if "alpha_grid" in data:
        kwargs["alpha_grid"] = GridSpec.from_dict(data["alpha_grid"])
    if "r_grid" in data:
        kwargs["r_grid"] = GridSpec.from_dict(data["r_grid"])
    problem = GuidelineProblem(
        sequence_length=int(data["sequence_length"]),
        adversary_searches=int(data["adversary_searches"]),
        rho=rho,
        test=test_spec_from_dict(data["test"]),
        **kwargs,
    )
    accept_fn = None
    if args.trials is not None:
        seed = _resolve_seed(args.seed)
        accept_fn = empirical_accept_fn(problem, args.trials, seed)
        print(
            f"empirical accept rates from {args.trials} trials (seed {seed})",
            file=sys.stderr,
        )
    solution = guideline_optimize(problem, accept_fn)
    _emit_json(solution.as_dict(), args.out)
    status = "feasible" if solution.feasible else "INFEASIBLE (least-violating shown)"
    print(
        f"{status}: alpha*={solution.alpha_star:.6g} r*={solution.r_star:.4g} "
        f"M={solution.key_length} E={solution.efficiency:.4f}",
        file=sys.stderr,
    )
    if args.figures is not None:
        import os

        from .report import render_guideline_figure

        os.makedirs(args.figures, exist_ok=True)
        path = render_guideline_figure(
            problem, solution, os.path.join(args.figures, "guideline_efficiency.png")
        )
        print(f"figure: {path}", file=sys.stderr)
    return 0


def _cmd_simulate(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    config = parse_config(data)
    if args.trials is not None:
        config = replace(config, trials=args.trials)
    if args.position is not None:
        config = replace(config, position=args.position)
    seed = _resolve_seed(args.seed)
    report, rows = run_pipeline(config, seed, jobs=args.jobs)
    _emit_json(report.as_dict(), None)
    if args.out is not None:
        if args.format == "csv":
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(TRIAL_COLUMNS)
                writer.writerows(row.as_tuple() for row in rows)
        else:
            _emit_json(
                [dict(zip(TRIAL_COLUMNS, row.as_tuple())) for row in rows],
                args.out,
            )
        print(f"wrote {len(rows)} trial rows to {args.out}", file=sys.stderr)
    sec = (
        "n/a" if report.l_security is None else f"{report.l_security:+.3f} bits"
    )
    print(
        f"accept={report.p_accept_empirical:.4f} "
        f"eve={report.p_eve_empirical:.6g} rg={report.p_rg_analytic:.6g} "
        f"advantage={report.eve_advantage:+.6g} loss={sec} "
        f"key_rate={report.key_rate:.4f} bit/s",
        file=sys.stderr,
    )
    if args.figures is not None:
        from .report import render_pipeline_figures

        for path in render_pipeline_figures(report, rows, args.figures):
            print(f"figure: {path}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
