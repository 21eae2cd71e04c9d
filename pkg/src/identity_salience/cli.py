"""Command-line entry point: ``identity-salience <subcommand>``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import InfeasibleConfig, SalienceError
from .pipeline import RunConfig, load_inputs, resample_check, run_pipeline
from .synth import PlantedBridge, SynthConfig, default_dimension_specs, generate, write_dataset
from .tagging import Dimension

log = logging.getLogger("identity_salience")


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _nonneg_int(s: str) -> int:
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def _ratio(s: str) -> float:
    v = float(s)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"must be in (0, 1), got {v}")
    return v


def _dim_value(s: str) -> tuple[Dimension, str]:
    name, _, value = s.partition("=")
    if not value:
        raise argparse.ArgumentTypeError(f"expected DIM=VALUE, got {s!r}")
    try:
        return Dimension.parse(name), value
    except SalienceError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _bridge_target(s: str) -> tuple[str, str, list[str]]:
    # LABEL=DIM:CAT1|CAT2
    label, _, rest = s.partition("=")
    dim, _, cats = rest.partition(":")
    if not (label and dim and cats):
        raise argparse.ArgumentTypeError(f"expected LABEL=DIM:CAT1|CAT2, got {s!r}")
    return label, Dimension.parse(dim).value, cats.split("|")


def _add_inputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--users", required=True, help="users file")
    p.add_argument("--edges", required=True, help="edges file")
    p.add_argument("--categories", help="influencer category strings file")
    p.add_argument("--vocab", help="vocabulary file (default: built-in categories)")


def _add_analysis(p: argparse.ArgumentParser) -> None:
    p.add_argument("--boot-iters", type=int, default=10_000)
    p.add_argument("--confidence", type=_ratio, default=0.99)
    p.add_argument("--bonferroni-factor", type=_positive_int, default=15)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--include-untagged-category", action="store_true")
    p.add_argument("--denominator", choices=("tagged", "all-followees"), default="tagged")
    p.add_argument("--top-k", type=_nonneg_int, default=10)
    p.add_argument("--min-audience", type=_nonneg_int, default=5)
    p.add_argument("--require-excess", action=argparse.BooleanOptionalAction, default=True,
                   help="only rank influencers whose own share beats their audience's (default on)")
    p.add_argument("--bridge-target", type=_bridge_target, action="append",
                   metavar="LABEL=DIM:CAT1|CAT2", help="repeatable; default Women and POC")
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument("-o", "--out-dir", default=".")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="identity-salience", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log timings to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--m", type=_positive_int, required=True, help="influencer count")
    p.add_argument("--n", type=_positive_int, required=True, help="audience count")
    p.add_argument("--out-degree", type=float, default=100.0, help="mean followees per user")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--homophily", type=_dim_value, action="append", default=[],
                   metavar="DIM=INF[,AUD]", help="in-group follow probability, repeatable")
    p.add_argument("--coverage", type=_dim_value, action="append", default=[],
                   metavar="DIM=P", help="probability an influencer is tagged, repeatable")
    p.add_argument("--plant-bridge", action="append", default=[],
                   metavar="INDEX:DIM:CATEGORY[:FRACTION]")
    p.add_argument("-o", "--out-dir", required=True)

    p = sub.add_parser("ingest-check", help="validate input files and print counts")
    _add_inputs(p)

    for name, help_ in (
        ("pipeline", "profiles, divergence report and bridges"),
        ("bridges", "bridge ranking only"),
    ):
        p = sub.add_parser(name, help=help_)
        _add_inputs(p)
        _add_analysis(p)

    p = sub.add_parser("resample-check", help="divergence robustness over audience subsamples")
    _add_inputs(p)
    _add_analysis(p)
    p.add_argument("--k-samples", type=_positive_int, default=10)
    p.add_argument("--sample-size", type=_positive_int, help="audience members per subsample (default N/2)")
    return parser


def _run_config(args) -> RunConfig:
    cfg = RunConfig(
        users=args.users,
        edges=args.edges,
        categories=args.categories,
        vocab=args.vocab,
        boot_iters=args.boot_iters,
        confidence=args.confidence,
        bonferroni_factor=args.bonferroni_factor,
        seed=args.seed,
        include_untagged_category=args.include_untagged_category,
        denominator=args.denominator,
        top_k=args.top_k,
        min_audience=args.min_audience,
        require_excess=args.require_excess,
        threads=args.threads,
        out_dir=args.out_dir,
    )
    if args.bridge_target:
        cfg.bridge_targets = {label: [dim, cats] for label, dim, cats in args.bridge_target}
    return cfg


def _synth_config(args, parser) -> SynthConfig:
    specs = default_dimension_specs()
    for dim, value in args.homophily:
        parts = value.split(",")
        try:
            inf = float(parts[0])
            aud = float(parts[1]) if len(parts) > 1 else inf
        except (ValueError, IndexError):
            parser.error(f"bad --homophily value {value!r}")
        specs[dim].influencer_homophily, specs[dim].audience_homophily = inf, aud
    for dim, value in args.coverage:
        specs[dim].coverage = float(value)
    bridges = []
    for s in args.plant_bridge:
        parts = s.split(":")
        if len(parts) not in (3, 4):
            parser.error(f"bad --plant-bridge value {s!r}")
        frac = float(parts[3]) if len(parts) == 4 else 0.95
        bridges.append(PlantedBridge(int(parts[0]), Dimension.parse(parts[1]), parts[2], frac))
    return SynthConfig(args.m, args.n, args.out_degree, args.seed, specs, bridges)


def _write_echo(out_dir, text: str) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config-echo.json").write_bytes(text.encode("utf-8"))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        if args.command == "synth":
            config = _synth_config(args, parser)
            paths = write_dataset(args.out_dir, generate(config))
            _write_echo(args.out_dir, json.dumps({"command": "synth", **config.to_dict()}, indent=2, sort_keys=True) + "\n")
            log.info("wrote %s", ", ".join(str(p) for p in paths.values()))
            return 0

        if args.command == "ingest-check":
            cfg = RunConfig(args.users, args.edges, args.categories, args.vocab)
            graph, tags = load_inputs(cfg)
            summary = {
                "influencers": graph.m,
                "audience": graph.n,
                "edges": graph.n_edges,
                "tagged": {d.value: int(t.tagged().sum()) for d, t in tags.items()},
            }
            print(json.dumps(summary, indent=2, sort_keys=True))
            return 0

        cfg = _run_config(args)
        if cfg.boot_iters < 1000:
            parser.error("--boot-iters must be at least 1000")
        if args.command == "resample-check":
            result = resample_check(cfg, args.k_samples, args.sample_size)
            out = Path(cfg.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            (out / "robustness.json").write_bytes(
                (json.dumps(result, indent=2, sort_keys=True) + "\n").encode("utf-8")
            )
            _write_echo(out, cfg.echo("resample-check", k_samples=args.k_samples,
                                      sample_size=result["sample_size"]))
            return 0

        run_pipeline(cfg, with_divergence=args.command == "pipeline")
        _write_echo(cfg.out_dir, cfg.echo(args.command))
        return 0
    except InfeasibleConfig as exc:
        print(f"error: infeasible config: {exc}", file=sys.stderr)
        return 1
    except (SalienceError, OSError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        if args.command == "resample-check" and "sample size" in str(exc):
            parser.error(str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
