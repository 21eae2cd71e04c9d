"""End-to-end runs: load, tag, profile, test, rank, and write reports."""
from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .bridge import DEFAULT_TARGETS, bridges_csv, rank_bridges
from .graph import FollowGraph, load_graph
from .salience import SalienceProfile, compute_profiles
from .stats import DivergenceConfig, divergence_report
from .tagging import Dimension, TagMatrix, load_vocabulary, tag_influencers, tag_strings

log = logging.getLogger(__name__)


@dataclass
class RunConfig:
    users: str | None = None
    edges: str | None = None
    categories: str | None = None
    vocab: str | None = None
    boot_iters: int = 10_000
    confidence: float = 0.99
    bonferroni_factor: int = 15
    seed: int = 0
    include_untagged_category: bool = False
    denominator: str = "tagged"
    top_k: int = 10
    min_audience: int = 5
    require_excess: bool = True
    bridge_targets: dict[str, list] = field(
        default_factory=lambda: {k: [d.value, list(c)] for k, (d, c) in DEFAULT_TARGETS.items()}
    )
    threads: int = 1
    out_dir: str = "."

    def divergence_config(self) -> DivergenceConfig:
        return DivergenceConfig(
            iterations=self.boot_iters,
            confidence=self.confidence,
            factor=self.bonferroni_factor,
            seed=self.seed,
            threads=self.threads,
        )

    def echo(self, command: str, **extra) -> str:
        doc = {"command": command, **asdict(self), **extra}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def load_inputs(cfg: RunConfig) -> tuple[FollowGraph, dict[Dimension, TagMatrix]]:
    t0 = time.perf_counter()
    graph = load_graph(cfg.users, cfg.edges)
    log.info("loaded graph M=%d N=%d edges=%d in %.2fs", graph.m, graph.n, graph.n_edges, time.perf_counter() - t0)
    vocab = load_vocabulary(cfg.vocab)
    if cfg.categories:
        tags = tag_influencers(cfg.categories, vocab, graph)
    else:
        tags = tag_strings([[] for _ in range(graph.m)], vocab)
    return graph, tags


def profiles_tsv(profiles: dict[Dimension, SalienceProfile]) -> str:
    def fmt(x):
        return "" if np.isnan(x) else repr(float(x))

    parts = ["user_id\tdimension\traw\tego\taudience\n"]
    for dim, p in profiles.items():
        aud = np.full(len(p.user_ids), np.nan)
        aud[: p.m] = p.audience
        parts.extend(
            f"{u}\t{dim.value}\t{fmt(r)}\t{fmt(e)}\t{fmt(a)}\n"
            for u, r, e, a in zip(p.user_ids, p.raw.tolist(), p.ego.tolist(), aud.tolist())
        )
    return "".join(parts)


def profiles_json(profiles: dict[Dimension, SalienceProfile], cfg: RunConfig) -> str:
    doc = {
        "log_base": "e",
        "include_untagged_category": cfg.include_untagged_category,
        "dimensions": {
            dim.value: {
                "metric": dim.metric_kind.value,
                "n_defined": p.n_defined,
                "n_users": len(p.user_ids),
                "population_mean": None if p.degenerate else p.population_mean,
                "population_std": None if p.degenerate else p.population_std,
                "n_audience_scores": int((~np.isnan(p.audience)).sum()),
                "degenerate": p.degenerate,
            }
            for dim, p in profiles.items()
        },
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def bridge_report(graph, tags, profiles, cfg: RunConfig) -> str:
    rows = []
    for label, (dim_name, cats) in cfg.bridge_targets.items():
        dim = Dimension.parse(dim_name)
        prof = profiles[dim]
        if prof.degenerate:
            log.warning("skipping bridges for %s: %s", label, prof.degenerate)
            continue
        rows.extend(
            rank_bridges(
                prof, graph, tags[dim], cats, cfg.top_k, cfg.min_audience,
                cfg.denominator, label, cfg.require_excess,
            )
        )
    return bridges_csv(rows)


def _write(out: Path, name: str, text: str) -> None:
    (out / name).write_bytes(text.encode("utf-8"))


def run_pipeline(cfg: RunConfig, with_bridges: bool = True, with_divergence: bool = True) -> dict:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    graph, tags = load_inputs(cfg)
    t0 = time.perf_counter()
    profiles = compute_profiles(graph, tags, cfg.include_untagged_category)
    log.info("profiles in %.2fs", time.perf_counter() - t0)
    _write(out, "profiles.tsv", profiles_tsv(profiles))
    _write(out, "profiles.json", profiles_json(profiles, cfg))
    report = None
    if with_divergence:
        t0 = time.perf_counter()
        report = divergence_report(profiles, cfg.divergence_config())
        log.info("divergence report in %.2fs", time.perf_counter() - t0)
        _write(out, "divergence.json", report.to_json())
        _write(out, "divergence.csv", report.to_csv())
    if with_bridges:
        _write(out, "bridges.csv", bridge_report(graph, tags, profiles, cfg))
    return {"graph": graph, "tags": tags, "profiles": profiles, "report": report}


def resample_check(cfg: RunConfig, k_samples: int, sample_size: int | None = None) -> dict:
    """Re-run the divergence pipeline on ``k_samples`` seeded audience subsamples."""
    graph, tags = load_inputs(cfg)
    size = graph.n // 2 if sample_size is None else sample_size
    if not 1 <= size <= graph.n:
        raise ValueError(f"sample size {size} outside [1, {graph.n}]")
    dcfg = cfg.divergence_config()
    full = divergence_report(compute_profiles(graph, tags, cfg.include_untagged_category), dcfg)
    per_dim = {d: [] for d in full.dimensions}
    for k in range(k_samples):
        rng = np.random.default_rng([cfg.seed, k])
        keep = graph.m + np.sort(rng.choice(graph.n, size=size, replace=False))
        sub = graph.restrict_audience(keep)
        rep = divergence_report(compute_profiles(sub, tags, cfg.include_untagged_category), dcfg)
        for d, v in rep.dimensions.items():
            per_dim[d].append(v)
    dims = {}
    for d, full_v in full.dimensions.items():
        means = [v.mean_diff for v in per_dim[d] if v.mean_diff is not None]
        doc = {
            "full_mean_diff": full_v.mean_diff,
            "full_corrected_p": full_v.corrected_p,
            "subsample_mean_diffs": means,
            "subsample_corrected_p": [v.corrected_p for v in per_dim[d]],
            "degenerate_subsamples": sum(1 for v in per_dim[d] if v.degenerate),
        }
        if means and full_v.mean_diff is not None:
            sign = np.sign(full_v.mean_diff)
            doc |= {
                "min": min(means),
                "max": max(means),
                "spread": max(means) - min(means),
                "std": float(np.std(means)),
                "sign_agreement": float(np.mean(np.sign(means) == sign)),
            }
        dims[d] = doc
    return {"k_samples": k_samples, "sample_size": size, "audience_population": graph.n, "dimensions": dims}
