"""Command-line interface.

Subcommands: analyze, envelope, bootstrap, simulate, affinity,
demo-discontinuity.  Every run prints its resolved configuration; exit
codes are 0 (success), 1 (estimation degraded, see report diagnostics),
2 (usage or I/O error).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .affinity import affinity_table
from .envelope import EnvelopeConfig, lower_confidence_limit
from .ingest import DataFormatError, FrequencyData, parse_frequencies, parse_raw_counts
from .montecarlo import bootstrap_quantiles, default_estimators, sample_population
from .npmle import MixingDistribution, NpmleConfig, PopulationModel, fit_npmle
from .pathology import blowup_trace
from .report import AnalysisOptions, analyze, render_table

EXIT_OK = 0
EXIT_DEGRADED = 1
EXIT_USAGE = 2


def _read_data(path: str, fmt: str) -> FrequencyData:
    text = Path(path).read_text(encoding="utf-8")
    if fmt == "auto":
        for line in text.splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                fmt = "freq" if len(line.split()) == 2 else "raw"
                break
        else:
            raise DataFormatError("empty input (n = 0)")
    if fmt == "freq":
        return parse_frequencies(text)
    return parse_raw_counts(text)


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v != ""]


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v != ""]


def _add_data_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument("file", help="count data file")
    p.add_argument(
        "--format",
        choices=("auto", "freq", "raw"),
        default="auto",
        help="freq: 'x n_x' pairs; raw: one count per line (default: sniff)",
    )


def _add_envelope_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=0.05, help="one-sided level")
    p.add_argument("--grid-size", type=int, default=400, help="LP atom grid size")
    p.add_argument("--grid-lo", type=float, default=1e-4, help="smallest grid atom")
    p.add_argument("--grid-hi", type=float, default=None, help="largest grid atom")
    p.add_argument(
        "--ks-reps", type=int, default=100_000, help="Monte Carlo reps for the band width"
    )
    p.add_argument("--ks-seed", type=int, default=None, help="band Monte Carlo seed")


def _envelope_config(args: argparse.Namespace) -> EnvelopeConfig:
    kwargs = dict(
        grid_size=args.grid_size,
        grid_lo=args.grid_lo,
        grid_hi=args.grid_hi,
        reps=args.ks_reps,
    )
    if args.ks_seed is not None:
        kwargs["seed"] = args.ks_seed
    return EnvelopeConfig(**kwargs)


def _print_config(args: argparse.Namespace) -> None:
    resolved = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    print(f"# classcount {__version__} | config: {resolved}")


def _cmd_analyze(args: argparse.Namespace) -> int:
    _print_config(args)
    data = _read_data(args.file, args.format)
    options = AnalysisOptions(
        k_cap=args.kmax,
        alpha=args.alpha,
        bootstrap=args.bootstrap,
        alpha_q=args.alpha_q,
        seed=args.seed,
        threads=args.threads,
        unconditional=args.unconditional,
        run_envelope=not args.no_envelope,
        envelope=_envelope_config(args),
        npmle=NpmleConfig(tolerance=args.npmle_tol),
    )
    report = analyze(data, options, source=args.file)
    print(render_table(report.to_dict()))
    if args.json:
        payload = json.dumps(report.to_dict(), indent=2)
        if args.json == "-":
            print(payload)
        else:
            Path(args.json).write_text(payload + "\n", encoding="utf-8")
    return EXIT_DEGRADED if report.degraded else EXIT_OK


def _cmd_envelope(args: argparse.Namespace) -> int:
    _print_config(args)
    data = _read_data(args.file, args.format)
    result = lower_confidence_limit(data, args.alpha, _envelope_config(args))
    if result.solution.status != "feasible":
        print("envelope: infeasible at this grid/epsilon")
        return EXIT_DEGRADED
    print(
        f"odds lower limit {result.theta_lower:.6f} (epsilon {result.epsilon:.6f}, "
        f"n {result.n}, alpha {result.alpha}) -> class count >= {result.c_lower}"
    )
    return EXIT_OK


def _cmd_bootstrap(args: argparse.Namespace) -> int:
    _print_config(args)
    data = _read_data(args.file, args.format)
    fit = fit_npmle(data, NpmleConfig(tolerance=args.npmle_tol))
    if not fit.converged:
        print(f"warning: NPMLE not converged (sup gradient {fit.sup_gradient:.3e})")
    from .hankel import ladder

    chi = max(ladder(data, args.kmax).chi_hat, 1)
    summary = bootstrap_quantiles(
        fit.mixture,
        data.n,
        args.bootstrap,
        alpha_q=args.alpha_q,
        estimators=default_estimators(chi),
        seed=args.seed,
        keep_replicates=args.dump is not None,
        threads=args.threads,
    )
    print(f"B={summary.B} n={summary.n} alpha_q={summary.alpha_q} rng={summary.rng}")
    for name in summary.estimators:
        q = summary.quantiles[name]
        miss = summary.missing[name]
        extra = f"  (missing {miss})" if miss else ""
        print(f"  {name:8s} {q:9.3f}{extra}")
    if args.dump is not None and summary.replicates is not None:
        import csv

        with open(args.dump, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["estimator", "replicate", "value"])
            for name, vals in summary.replicates.items():
                for b, v in enumerate(vals):
                    writer.writerow([name, b, repr(float(v))])
        print(f"replicates written to {args.dump}")
    return EXIT_OK if fit.converged else EXIT_DEGRADED


def _cmd_simulate(args: argparse.Namespace) -> int:
    _print_config(args)
    atoms = _float_list(args.atoms)
    weights = _float_list(args.weights)
    model = PopulationModel(
        c=args.c, P=MixingDistribution(np.array(atoms), np.array(weights))
    )
    rng = np.random.default_rng(args.seed)
    data, n0 = sample_population(model, rng)
    if data is None:
        print("no class detected; nothing to write")
        return EXIT_DEGRADED
    lines = [
        f"# simulated: c={args.c} atoms={atoms} weights={weights} seed={args.seed}",
        f"# detected n={data.n}, undetected n0={n0}",
    ]
    lines += [f"{x} {nx}" for x, nx in sorted(data.counts.items())]
    text = "\n".join(lines) + "\n"
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out} (n={data.n}, n0={n0})")
    return EXIT_OK


def _cmd_affinity(args: argparse.Namespace) -> int:
    _print_config(args)
    rows = affinity_table(_int_list(args.c), _float_list(args.rho), args.alpha)
    print("c,rho,affinity,floor,infinite_ucl_lower_bound")
    for r in rows:
        floor = "" if r.floor_bound is None else f"{r.floor_bound:.6f}"
        print(f"{r.c},{r.rho},{r.affinity:.6f},{floor},{r.infinite_ucl_lower_bound:.6f}")
    return EXIT_OK


def _cmd_demo_discontinuity(args: argparse.Namespace) -> int:
    _print_config(args)
    base = MixingDistribution(
        np.array(_float_list(args.atoms)), np.array(_float_list(args.weights))
    )
    trace = blowup_trace(base, _float_list(args.s))
    print(f"base odds: {trace.base_odds:.6f}")
    print("s,pi,eta,odds,tv,tv_tail,tv_bound,hellinger")
    for r in trace.rows:
        print(
            f"{r.s},{r.pi_s},{r.eta_s},{r.theta_mixed:.6f},{r.tv_value:.3e},"
            f"{r.tv_tail:.1e},{r.tv_bound:.3e},{r.hellinger:.3e}"
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="classcount",
        description="Class-count estimation from frequency-of-frequencies data",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="full analysis of one dataset")
    _add_data_arg(p)
    _add_envelope_args(p)
    p.add_argument("--kmax", type=int, default=8, help="largest moment-bound order")
    p.add_argument("--bootstrap", type=int, default=0, help="model resamples (0: off)")
    p.add_argument("--alpha-q", type=float, default=0.05, help="bootstrap quantile level")
    p.add_argument("--seed", type=int, default=0, help="bootstrap seed")
    p.add_argument("--threads", type=int, default=1, help="bootstrap worker threads")
    p.add_argument("--unconditional", action="store_true", help="redraw n per resample")
    p.add_argument("--no-envelope", action="store_true", help="skip the envelope limit")
    p.add_argument("--npmle-tol", type=float, default=1e-6, help="NPMLE gradient tolerance")
    p.add_argument("--json", help="write the full report as JSON ('-' for stdout)")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("envelope", help="one-sided lower confidence limit only")
    _add_data_arg(p)
    _add_envelope_args(p)
    p.set_defaults(func=_cmd_envelope)

    p = sub.add_parser("bootstrap", help="model-based bootstrap quantiles")
    _add_data_arg(p)
    p.add_argument("--bootstrap", type=int, default=400, help="number of resamples")
    p.add_argument("--alpha-q", type=float, default=0.05, help="quantile level")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kmax", type=int, default=8)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--npmle-tol", type=float, default=1e-6)
    p.add_argument("--dump", help="write per-replicate values to this CSV")
    p.set_defaults(func=_cmd_bootstrap)

    p = sub.add_parser("simulate", help="draw a synthetic dataset from (c, P)")
    p.add_argument("--c", type=int, required=True, help="number of classes")
    p.add_argument("--atoms", required=True, help="comma-separated rates")
    p.add_argument("--weights", required=True, help="comma-separated weights")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-", help="output file ('-' for stdout)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("affinity", help="binomial/Poisson affinity table (CSV)")
    p.add_argument("--c", required=True, help="comma-separated class counts")
    p.add_argument("--rho", required=True, help="comma-separated detection probabilities")
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=_cmd_affinity)

    p = sub.add_parser(
        "demo-discontinuity", help="contamination trace showing the odds blow-up"
    )
    p.add_argument("--s", default="0.1,0.01,0.001", help="comma-separated path values")
    p.add_argument("--atoms", default=str(np.log(2.0)), help="base mixture rates")
    p.add_argument("--weights", default="1.0", help="base mixture weights")
    p.set_defaults(func=_cmd_demo_discontinuity)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, DataFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
