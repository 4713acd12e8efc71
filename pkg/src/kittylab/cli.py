"""Command-line entry point: ``kittylab <subcommand> ...``.

Exit codes: 0 success, 1 runtime failure, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .auction import collusion_experiment, expected_public_share
from .chain import COOLDOWN_ENV, env_cooldown_table
from .genescience import as_digest
from .genome import CattributeRegistry, GeneArray, cattributes, decode_gene, default_registry
from .market import ConfigError, ScenarioConfig, diamond_scenario, run_simulation
from .prediction import monte_carlo_distribution, predict_child, trait_distribution

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _gene(text: str) -> GeneArray:
    try:
        return decode_gene(text)
    except ValueError as e:
        raise UsageError(str(e)) from e


def _digest(text: str) -> bytes:
    try:
        return as_digest(text)
    except ValueError as e:
        raise UsageError(f"bad seed: {e}") from e


def _registry(path) -> CattributeRegistry:
    if path is None:
        return default_registry()
    try:
        return CattributeRegistry.load(path)
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise UsageError(f"cannot read registry {path}: {e}") from e


def cmd_mix(args, out) -> int:
    matron, sire = _gene(args.matron), _gene(args.sire)
    child = predict_child(matron, sire, _digest(args.seed))
    print(child.hex, file=out)
    print("cell\tmatron\tsire\tchild", file=out)
    for i in range(len(child)):
        print(f"{i}\t{matron[i]}\t{sire[i]}\t{child[i]}", file=out)
    return EXIT_OK


def cmd_predict(args, out) -> int:
    matron, sire = _gene(args.matron), _gene(args.sire)
    if args.target_seed is not None:
        print(predict_child(matron, sire, _digest(args.target_seed)).hex, file=out)
        return EXIT_OK
    if args.monte_carlo is not None and args.monte_carlo < 1:
        raise UsageError("--monte-carlo needs a positive sample count")
    exact = trait_distribution(matron, sire)
    mc = None
    if args.monte_carlo:
        mc = monte_carlo_distribution(matron, sire, args.monte_carlo, rng_seed=args.mc_seed)
    text = exact.to_csv(monte_carlo=mc)
    if args.out:
        Path(args.out).write_text(text)
    else:
        out.write(text)
    if mc is not None:
        print(f"max |exact - monte_carlo| = {exact.max_abs_error(mc):.6f}", file=sys.stderr)
    return EXIT_OK


def cmd_cattributes(args, out) -> int:
    for name in sorted(cattributes(_gene(args.gene), _registry(args.registry))):
        print(name, file=out)
    return EXIT_OK


def cmd_jewel_scenario(args, out) -> int:
    if args.children < 0:
        raise UsageError("--children must be non-negative")
    r = diamond_scenario(args.children, _registry(args.registry), args.cattribute)
    print(f"gross_eth {r.gross}", file=out)
    print(f"fees_eth {r.fees}", file=out)
    print(f"net_eth {r.net}", file=out)
    for tier, n in r.tier_counts.items():
        print(f"{tier} {n}", file=out)
    return EXIT_OK


def cmd_auction_sim(args, out) -> int:
    if args.auctions < 0 or args.public < 0 or any(d < 0 for d in args.delay):
        raise UsageError("counts and delays must be non-negative")
    if args.discovery_mean < 1:
        raise UsageError("--discovery-mean must be at least 1")
    out_path = Path(args.out) if args.out else None
    if out_path is not None and len(args.delay) > 1:
        out_path.mkdir(parents=True, exist_ok=True)
    print("delay_blocks\tcolluder_rate\tpublic_share\texpected_public_share\tmean_price", file=out)
    for d in args.delay:
        r = collusion_experiment(args.auctions, d, args.discovery_mean, args.seed, n_public=args.public)
        expected = expected_public_share(d, args.discovery_mean, args.public)
        print(f"{d}\t{r.colluder_rate:.4f}\t{r.public_share:.4f}\t{expected:.4f}\t{r.mean_price:.6f}", file=out)
        if out_path is not None:
            r.to_csv(out_path / f"collusion_delay_{d}.csv" if len(args.delay) > 1 else out_path)
    return EXIT_OK


def cmd_market_sim(args, out) -> int:
    if not Path(args.config).is_file():
        raise UsageError(f"config file {args.config} not found")
    try:
        cfg = ScenarioConfig.load(args.config)
        override = env_cooldown_table()
    except ConfigError as e:
        raise UsageError(str(e)) from e
    except ValueError as e:
        raise UsageError(f"bad {COOLDOWN_ENV}: {e}") from e
    report = run_simulation(cfg, seed=args.seed, cooldown_override=override)
    report.write(args.out)
    print(f"wrote {Path(args.out) / 'report.json'} and {Path(args.out) / 'trades.csv'}", file=out)
    print(f"gini {report.gini:.4f}", file=out)
    for name, ok in report.condition_flags.items():
        print(f"{name} {'pass' if ok else 'fail'}", file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kittylab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("mix", help="mix two genes with a known 256-bit seed")
    s.add_argument("--matron", required=True, help="60-char gene hex")
    s.add_argument("--sire", required=True, help="60-char gene hex")
    s.add_argument("--seed", required=True, help="64-char digest hex")
    s.set_defaults(func=cmd_mix)

    s = sub.add_parser("predict", help="exact child for a known digest, else the child trait law")
    s.add_argument("--matron", required=True)
    s.add_argument("--sire", required=True)
    s.add_argument("--target-seed", help="64-char digest hex of the target block")
    s.add_argument("--out", help="CSV path for the distribution (default: stdout)")
    s.add_argument("--monte-carlo", type=int, metavar="N", help="add an N-sample Monte Carlo column")
    s.add_argument("--mc-seed", type=int, default=0)
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("cattributes", help="list the Cattributes a gene carries")
    s.add_argument("--gene", required=True)
    s.add_argument("--registry", help="registry JSON (default: bundled)")
    s.set_defaults(func=cmd_cattributes)

    s = sub.add_parser("jewel-scenario", help="income from breeding heirs of a Diamond kitty")
    s.add_argument("--children", type=int, default=499)
    s.add_argument("--cattribute", default="driver")
    s.add_argument("--registry")
    s.set_defaults(func=cmd_jewel_scenario)

    s = sub.add_parser("auction-sim", help="colluding bidder vs public bidders under a bid delay")
    s.add_argument("--auctions", type=int, default=10000)
    s.add_argument("--delay", type=int, nargs="+", default=[0, 60, 240, 960], help="bid delay(s) in blocks")
    s.add_argument("--discovery-mean", type=float, default=60.0, help="mean public discovery time in blocks")
    s.add_argument("--public", type=int, default=3, help="number of public bidders")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help="CSV path (one delay) or directory (several)")
    s.set_defaults(func=cmd_auction_sim)

    s = sub.add_parser("market-sim", help="run a scenario and write report.json and trades.csv")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=int, help="overrides the config seed")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_market_sim)
    return p


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        return args.func(args, out)
    except UsageError as e:
        print(f"kittylab {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:  # anything past input validation is a runtime failure
        print(f"kittylab {args.command}: error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
