"""Command-line interface.

Subcommands: oracle, sample, interval, coverage, check-prior,
thresholds. Flags mirror the model symbols (--alpha, --tau, --sigma2,
--gamma). Data come either from a whitespace-separated text file
(--data) or are generated from a counts-and-values template (--theta
'5x7,5x2,190x0') with --seed. All floating-point output is printed with
6 significant digits; output files are written only after a subcommand
finishes computing, so failures never leave partial files.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .experiments import (
    ExperimentSpec,
    coverage_csv_text,
    coverage_experiment,
    emit_plot_svg,
    parse_grid,
    parse_theta_blocks,
    read_experiment_config,
    spec_from_mapping,
)
from .inference import (
    INTERVAL_CSV_HEADER,
    IntervalRequest,
    IntervalResult,
    interval_from_samples,
)
from .model import (
    BetaBinomialPrior,
    ComplexityPrior,
    DataVector,
    ModelConfig,
    SizePrior,
)
from .oracle import (
    DEFAULT_ENUMERATION_CAP,
    LinearFunctional,
    enumerate_posterior,
    equal_tailed_interval,
    inclusion_probability,
)
from .samplers import ChainSettings, chain_summary, gibbs_chain, mh_chain
from .theory import rho_threshold, size_prior_ratio_report, zeta_threshold


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=0.95, help="fractional likelihood power")
    p.add_argument("--tau", type=float, default=0.025, help="slab prior precision")
    p.add_argument("--sigma2", type=float, default=1.0, help="noise variance")


def _add_prior_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--prior",
        choices=["complexity", "beta-binomial"],
        default="complexity",
        help="configuration-size prior family",
    )
    p.add_argument("--a", type=float, default=1.0, help="complexity prior exponent")
    p.add_argument("--c", type=float, default=1.0, help="complexity prior constant")
    p.add_argument("--xi", type=float, default=1.01, help="beta-binomial exponent (b_n = n^xi)")


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", help="text file of whitespace-separated observations")
    p.add_argument("--seed", type=int, help="data-generation seed (with --theta)")
    p.add_argument(
        "--theta",
        help="true-mean template 'COUNTxVALUE,...' used with --seed to draw data",
    )


def _add_chain_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--iterations", type=int, default=25000)
    p.add_argument("--burn-in", type=int, default=None, help="default: 10%% of iterations")
    p.add_argument("--chain-seed", type=int, default=0)
    p.add_argument("--flip-probability", type=float, default=0.9)


def _build_prior(args) -> SizePrior:
    if args.prior == "complexity":
        return ComplexityPrior(a=args.a, c=args.c)
    return BetaBinomialPrior(xi=args.xi)


def _load_data(args, parser: argparse.ArgumentParser, n: int) -> DataVector:
    if args.data is not None:
        values = np.loadtxt(args.data, ndmin=1, dtype=float)
        Y = DataVector(values)
        if Y.n != n:
            raise ValueError(f"data file has {Y.n} entries but --n is {n}")
        return Y
    if args.seed is None or args.theta is None:
        parser.error("provide --data FILE, or both --seed and --theta")
    blocks = parse_theta_blocks(args.theta)
    theta = np.concatenate([np.full(c, v) for c, v in blocks])
    if theta.size != n:
        raise ValueError(f"--theta expands to {theta.size} entries but --n is {n}")
    rng = np.random.default_rng(args.seed)
    return DataVector(theta + np.sqrt(args.sigma2) * rng.standard_normal(n))


def _cmd_oracle(args, parser) -> int:
    cfg = ModelConfig(n=args.n, sigma2=args.sigma2, alpha=args.alpha, tau=args.tau)
    prior = _build_prior(args)
    Y = _load_data(args, parser, args.n)
    table = enumerate_posterior(cfg, prior, Y, cap=args.cap)
    out = [table.to_text()]
    out.append("\nindex,inclusion\n")
    for k in range(1, args.n + 1):
        out.append(f"{k},{inclusion_probability(table, k):.6g}\n")
    with open(args.out, "w", newline="") as fh:
        fh.write("".join(out))
    return 0


def _cmd_sample(args, parser) -> int:
    cfg = ModelConfig(n=args.n, sigma2=args.sigma2, alpha=args.alpha, tau=args.tau)
    prior = _build_prior(args)
    Y = _load_data(args, parser, args.n)
    settings = ChainSettings(
        iterations=args.iterations,
        burn_in=args.burn_in,
        seed=args.chain_seed,
        flip_probability=args.flip_probability,
    )
    sampler = mh_chain if args.method == "mh" else gibbs_chain
    samples = sampler(cfg, prior, Y, settings)
    summary = chain_summary(samples)
    with open(args.out, "w", newline="") as fh:
        fh.write(samples.to_text())
    if summary.acceptance_rate is not None:
        print(f"acceptance_rate,{summary.acceptance_rate:.6g}")
    print(f"mean_size,{summary.mean_size:.6g}")
    for k in range(1, args.n + 1):
        print(f"inclusion_{k},{summary.inclusion_frequencies[k - 1]:.6g}")
    return 0


def _cmd_interval(args, parser) -> int:
    cfg = ModelConfig(n=args.n, sigma2=args.sigma2, alpha=args.alpha, tau=args.tau)
    prior = _build_prior(args)
    Y = _load_data(args, parser, args.n)
    if (args.k is None) == (args.x_file is None):
        parser.error("provide exactly one of --k or --x-file")
    if args.k is not None:
        target = args.k
        label = f"theta_{args.k}"
    else:
        target = LinearFunctional(np.loadtxt(args.x_file, ndmin=1, dtype=float))
        label = "functional"
    if args.method == "oracle":
        table = enumerate_posterior(cfg, prior, Y, cap=args.cap)
        x = (
            LinearFunctional.coordinate(target, args.n)
            if isinstance(target, int)
            else target
        )
        lower, upper = equal_tailed_interval(table, cfg, Y, x, args.gamma)
        from .oracle import functional_mixture

        mix = functional_mixture(table, cfg, Y, x)
        incl = (
            inclusion_probability(table, target) if isinstance(target, int) else None
        )
        result = IntervalResult(
            lower=lower,
            upper=upper,
            gamma=args.gamma,
            jump_mass_at_zero=mix.jump,
            estimated_inclusion=incl,
        )
    else:
        settings = ChainSettings(
            iterations=args.iterations,
            burn_in=args.burn_in,
            seed=args.chain_seed,
            flip_probability=args.flip_probability,
        )
        sampler = mh_chain if args.method == "mh" else gibbs_chain
        samples = sampler(cfg, prior, Y, settings)
        result = interval_from_samples(
            samples, cfg, Y, IntervalRequest(target=target, gamma=args.gamma)
        )
    text = INTERVAL_CSV_HEADER + "\n" + result.csv_row(label) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    return 0


def _cmd_coverage(args, parser) -> int:
    if args.spec is not None:
        spec = read_experiment_config(args.spec)
    else:
        required = dict(
            n=args.n,
            theta=args.theta,
            vary_index=args.vary_index,
            grid=args.grid,
            replicates=args.replicates,
        )
        missing = [f"--{k.replace('_', '-')}" for k, v in required.items() if v is None]
        if missing:
            parser.error(f"without --spec, these flags are required: {' '.join(missing)}")
        mapping = {
            "n": str(args.n),
            "theta": args.theta,
            "vary_index": str(args.vary_index),
            "grid": args.grid,
            "replicates": str(args.replicates),
            "alpha": str(args.alpha),
            "tau": str(args.tau),
            "sigma2": str(args.sigma2),
            "prior": args.prior,
            "a": str(args.a),
            "c": str(args.c),
            "xi": str(args.xi),
            "gamma": str(args.gamma),
            "method": args.method,
            "iterations": str(args.iterations),
            "flip_probability": str(args.flip_probability),
            "master_seed": str(args.master_seed),
        }
        if args.burn_in is not None:
            mapping["burn_in"] = str(args.burn_in)
        spec = spec_from_mapping(mapping)

    def progress(gi: int, row) -> None:
        print(
            f"grid {gi + 1}/{len(spec.signal_grid)} signal={row.signal_value:.6g} "
            f"coverage={row.coverage:.6g} mean_length={row.mean_length:.6g}",
            file=sys.stderr,
            flush=True,
        )

    rows = coverage_experiment(spec, workers=args.threads, progress=progress)
    text = coverage_csv_text(rows)
    with open(args.out, "w", newline="") as fh:
        fh.write(text)
    if args.svg is not None:
        emit_plot_svg(rows, args.svg, "coverage", nominal_level=1.0 - spec.gamma)
        stem, dot, ext = args.svg.rpartition(".")
        length_path = f"{stem}-length.{ext}" if dot else f"{args.svg}-length"
        emit_plot_svg(rows, length_path, "length")
    return 0


def _cmd_check_prior(args, parser) -> int:
    prior = _build_prior(args)
    s_max = args.smax if args.smax is not None else min(args.n, 30)
    report = size_prior_ratio_report(prior, args.n, s_max)
    print(f"n,{args.n}")
    print(f"s_max,{s_max}")
    print(f"min_ratio,{report.min_ratio:.6g}")
    print(f"max_ratio,{report.max_ratio:.6g}")
    print(f"implied_a1,{report.implied_a1:.6g}")
    print(f"implied_a2,{report.implied_a2:.6g}")
    ok = 0.0 < report.min_ratio and report.max_ratio < 1.0
    print(f"decaying,{'yes' if ok else 'no'}")
    return 0 if ok else 1


def _cmd_thresholds(args, parser) -> int:
    cfg = ModelConfig(n=args.n, sigma2=args.sigma2, alpha=args.alpha, tau=args.tau)
    M = args.M if args.M is not None else 1.0 + args.a1
    print(f"rho,{rho_threshold(cfg, M):.6g}")
    if (args.s_star is None) != (args.s_dagger is None):
        parser.error("--s-star and --s-dagger must be given together")
    if args.s_star is not None:
        zeta = zeta_threshold(cfg, args.a1, args.s_star, args.s_dagger)
        print(f"zeta,{zeta:.6g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ebmeans",
        description="Empirical-prior posterior inference for sparse normal means",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("oracle", help="exact posterior table by enumeration")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--cap", type=int, default=DEFAULT_ENUMERATION_CAP)
    p.add_argument("--out", required=True)
    _add_model_flags(p)
    _add_prior_flags(p)
    _add_data_flags(p)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("sample", help="run an MCMC chain and dump the draws")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--method", choices=["mh", "gibbs"], default="mh")
    p.add_argument("--out", required=True)
    _add_model_flags(p)
    _add_prior_flags(p)
    _add_data_flags(p)
    _add_chain_flags(p)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("interval", help="marginal credible interval for a target")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, help="1-based coordinate index")
    p.add_argument("--x-file", help="text file with functional coefficients")
    p.add_argument("--gamma", type=float, default=0.05)
    p.add_argument("--method", choices=["mh", "gibbs", "oracle"], default="mh")
    p.add_argument("--cap", type=int, default=DEFAULT_ENUMERATION_CAP)
    p.add_argument("--out", help="CSV path (default: print to stdout)")
    _add_model_flags(p)
    _add_prior_flags(p)
    _add_data_flags(p)
    _add_chain_flags(p)
    p.set_defaults(func=_cmd_interval)

    p = sub.add_parser("coverage", help="Monte Carlo coverage study")
    p.add_argument("--spec", help="key=value config file (overrides inline flags)")
    p.add_argument("--out", required=True, help="coverage CSV path")
    p.add_argument("--svg", help="coverage plot path (length plot gets -length suffix)")
    p.add_argument("--threads", type=int, default=1, help="parallel replicate workers")
    p.add_argument("--n", type=int)
    p.add_argument("--theta", help="true-mean template 'COUNTxVALUE,...'")
    p.add_argument("--vary-index", type=int)
    p.add_argument("--grid", help="'start:stop:step' or comma list")
    p.add_argument("--replicates", type=int)
    p.add_argument("--gamma", type=float, default=0.05)
    p.add_argument("--method", choices=["mh", "gibbs", "exact"], default="mh")
    p.add_argument("--master-seed", type=int, default=0)
    _add_model_flags(p)
    _add_prior_flags(p)
    _add_chain_flags(p)
    p.set_defaults(func=_cmd_coverage)

    p = sub.add_parser("check-prior", help="size-prior tail decay report")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--smax", type=int, default=None)
    _add_prior_flags(p)
    p.set_defaults(func=_cmd_check_prior)

    p = sub.add_parser("thresholds", help="selection and marginal-coverage thresholds")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--a1", type=float, default=1.0)
    p.add_argument("--M", type=float, default=None, help="default: 1 + a1")
    p.add_argument("--s-star", type=int, default=None)
    p.add_argument("--s-dagger", type=int, default=None)
    _add_model_flags(p)
    p.set_defaults(func=_cmd_thresholds)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
