"""Ego-minus-audience difference sets and the significance pipeline."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import stats as sps

from .errors import DegenerateSample
from .salience import SalienceProfile
from .tagging import Dimension

log = logging.getLogger(__name__)

TESTS = ("t", "wilcoxon", "bootstrap")

# Elements per bootstrap chunk. Chunk boundaries (and so the random streams)
# depend only on n, never on the worker count.
CHUNK_ELEMENTS = 2_000_000


@dataclass(frozen=True, eq=False)
class DifferenceSet:
    dimension: Dimension
    ids: tuple[str, ...]
    diffs: np.ndarray
    excluded_count: int

    @property
    def n(self) -> int:
        return len(self.diffs)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.ids, self.diffs.tolist()))


def difference_set(profile: SalienceProfile) -> DifferenceSet:
    """Ego minus audience score for influencers holding both."""
    ego = profile.ego[: profile.m]
    both = ~np.isnan(ego) & ~np.isnan(profile.audience)
    idx = np.flatnonzero(both)
    diffs = ego[idx] - profile.audience[idx]
    diffs.setflags(write=False)
    ids = tuple(profile.user_ids[i] for i in idx)
    return DifferenceSet(profile.dimension, ids, diffs, profile.m - len(idx))


def paired_t_test(diffs) -> tuple[float, float]:
    """One-sample t-test of the differences against zero, two-sided."""
    d = np.asarray(diffs, dtype=np.float64)
    n = len(d)
    if n < 2:
        raise DegenerateSample(f"t-test needs n >= 2, got {n}")
    sd = float(np.std(d, ddof=1))
    mean = float(np.mean(d))
    if not sd > 1e-14 * max(1.0, abs(mean)):
        raise DegenerateSample("zero variance in differences")
    t = mean / (sd / math.sqrt(n))
    p = 2.0 * float(sps.t.sf(abs(t), n - 1))
    return t, min(1.0, p)


def _signed_ranks(diffs, zero_method: str):
    d = np.asarray(diffs, dtype=np.float64)
    if zero_method == "wilcox":
        d = d[d != 0]
        ranks = sps.rankdata(np.abs(d))
    elif zero_method == "pratt":
        ranks = sps.rankdata(np.abs(d))
        keep = d != 0
        d, ranks = d[keep], ranks[keep]
    else:
        raise ValueError(f"unknown zero_method {zero_method!r}")
    if len(d) == 0:
        raise DegenerateSample("all differences are zero")
    return d, ranks


def exact_rank_sum_cdf(ranks, w: float) -> float:
    """P(T+ <= w) under the null, by counting all 2**n sign assignments.

    Ranks may be half-integers (tied averages); the counting runs on doubled ranks.
    """
    doubled = np.rint(np.asarray(ranks) * 2).astype(np.int64)
    total = int(doubled.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    hi = 0
    for r in doubled:
        counts[r : hi + r + 1] += counts[: hi + 1].copy()
        hi += r
    limit = int(math.floor(2 * w + 1e-9))
    return float(counts[: limit + 1].sum() / counts.sum())


def wilcoxon_signed_rank(
    diffs,
    method: str = "auto",
    zero_method: str = "wilcox",
    exact_max_n: int = 25,
) -> tuple[float, float]:
    """Wilcoxon signed-rank test, two-sided. Returns ``(W, p)``.

    W is the smaller of the positive and negative rank sums. ``auto`` uses the
    exact null distribution up to ``exact_max_n`` nonzero differences and the
    tie-corrected normal approximation with continuity correction beyond.
    """
    d, ranks = _signed_ranks(diffs, zero_method)
    n = len(d)
    r_plus = float(ranks[d > 0].sum())
    r_minus = float(ranks[d < 0].sum())
    w = min(r_plus, r_minus)
    if method == "auto":
        method = "exact" if n <= exact_max_n else "approx"
    if method == "exact":
        p = 2.0 * exact_rank_sum_cdf(ranks, w)
    elif method == "approx":
        mean = n * (n + 1) / 4.0
        _, tie_counts = np.unique(ranks, return_counts=True)
        var = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(tie_counts**3 - tie_counts)) / 48.0
        if var <= 0:
            raise DegenerateSample("zero variance in rank statistic")
        dev = w - mean
        if dev != 0:
            dev -= 0.5 * math.copysign(1.0, dev)
        z = dev / math.sqrt(var)
        p = math.erfc(abs(z) / math.sqrt(2.0))
    else:
        raise ValueError(f"unknown method {method!r}")
    return w, min(1.0, p)


def _chunk_stream(seed: int, stream: int, chunk: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(stream, chunk))
    return np.random.Generator(np.random.Philox(ss))


def bootstrap_distribution(
    diffs,
    iterations: int = 10_000,
    rng_seed: int = 0,
    statistics: Sequence[str] = ("mean", "median"),
    stream: int = 0,
    threads: int = 1,
) -> dict[str, np.ndarray]:
    """Resampled statistics of ``diffs`` (with replacement), one value per iteration.

    All requested statistics share the same resamples. Each chunk of iterations
    draws from its own Philox stream keyed by (seed, stream, chunk index), so
    the result does not depend on ``threads``.
    """
    d = np.asarray(diffs, dtype=np.float64)
    n = len(d)
    per_chunk = max(1, CHUNK_ELEMENTS // max(n, 1))
    bounds = [(s, min(s + per_chunk, iterations)) for s in range(0, iterations, per_chunk)]
    funcs = {"mean": lambda x: x.mean(axis=1), "median": lambda x: np.median(x, axis=1)}
    for s in statistics:
        if s not in funcs:
            raise ValueError(f"unknown statistic {s!r}")
    out = {s: np.empty(iterations) for s in statistics}

    def run(k):
        lo, hi = bounds[k]
        rng = _chunk_stream(rng_seed, stream, k)
        sample = d[rng.integers(0, n, size=(hi - lo, n))]
        for s in statistics:
            out[s][lo:hi] = funcs[s](sample)

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, range(len(bounds))))
    else:
        for k in range(len(bounds)):
            run(k)
    return out


def percentile_ci(boot: np.ndarray, confidence: float) -> tuple[float, float]:
    alpha = 1.0 - confidence
    lo, hi = np.quantile(boot, [alpha / 2, 1 - alpha / 2])
    return float(lo), float(hi)


def bootstrap_p(boot: np.ndarray) -> float:
    """Two-sided p from the share of resampled statistics on either side of zero."""
    below = float(np.mean(boot <= 0))
    above = float(np.mean(boot >= 0))
    return min(1.0, 2.0 * min(below, above))


def paired_bootstrap(
    diffs,
    statistic: str = "mean",
    iterations: int = 10_000,
    confidence: float = 0.99,
    rng_seed: int = 0,
    stream: int = 0,
    threads: int = 1,
) -> tuple[tuple[float, float], float]:
    """Percentile CI and two-sided p for ``statistic`` of the differences."""
    d = np.asarray(diffs, dtype=np.float64)
    if len(d) < 2:
        raise DegenerateSample(f"bootstrap needs n >= 2, got {len(d)}")
    if iterations < 1000:
        raise ValueError("iterations must be at least 1000")
    if not 0 < confidence < 1:
        raise ValueError("confidence must be in (0, 1)")
    boot = bootstrap_distribution(d, iterations, rng_seed, (statistic,), stream, threads)[statistic]
    return percentile_ci(boot, confidence), bootstrap_p(boot)


def bonferroni(p_values: Mapping, factor: int = 15) -> dict:
    """Multiply every p-value by ``factor`` and clamp at 1."""
    if factor < 1:
        raise ValueError("factor must be >= 1")
    return {k: min(1.0, factor * p) for k, p in p_values.items()}


@dataclass
class DivergenceConfig:
    iterations: int = 10_000
    confidence: float = 0.99
    factor: int = 15
    seed: int = 0
    threads: int = 1
    zero_method: str = "wilcox"


@dataclass
class DimensionDivergence:
    dimension: str
    n: int
    excluded: int
    mean_diff: float | None = None
    median_diff: float | None = None
    mean_ci: tuple[float, float] | None = None
    median_ci: tuple[float, float] | None = None
    t_stat: float | None = None
    t_p: float | None = None
    wilcoxon_stat: float | None = None
    wilcoxon_p: float | None = None
    bootstrap_p: float | None = None
    corrected_p: dict = field(default_factory=dict)
    box: dict | None = None
    degenerate: dict = field(default_factory=dict)

    def p_values(self) -> dict[str, float]:
        return {
            t: p
            for t, p in (("t", self.t_p), ("wilcoxon", self.wilcoxon_p), ("bootstrap", self.bootstrap_p))
            if p is not None
        }


def _box_summary(d: np.ndarray) -> dict:
    q1, q3 = np.quantile(d, [0.25, 0.75])
    iqr = q3 - q1
    inside = d[(d >= q1 - 1.5 * iqr) & (d <= q3 + 1.5 * iqr)]
    return {
        "min": float(d.min()),
        "q1": float(q1),
        "q3": float(q3),
        "max": float(d.max()),
        "whisker_low": float(inside.min()),
        "whisker_high": float(inside.max()),
    }


def divergence_for(ds: DifferenceSet, config: DivergenceConfig, stream: int = 0) -> DimensionDivergence:
    """All statistics for one difference set; failed tests land in ``degenerate``."""
    d = ds.diffs
    res = DimensionDivergence(ds.dimension.value, ds.n, ds.excluded_count)
    if ds.n == 0:
        res.degenerate["all"] = "empty difference set"
        return res
    res.mean_diff = float(np.mean(d))
    res.median_diff = float(np.median(d))
    res.box = _box_summary(d)
    try:
        res.t_stat, res.t_p = paired_t_test(d)
    except DegenerateSample as exc:
        res.degenerate["t"] = str(exc)
    try:
        res.wilcoxon_stat, res.wilcoxon_p = wilcoxon_signed_rank(d, zero_method=config.zero_method)
    except DegenerateSample as exc:
        res.degenerate["wilcoxon"] = str(exc)
    if ds.n < 2:
        res.degenerate["bootstrap"] = f"bootstrap needs n >= 2, got {ds.n}"
        return res
    t0 = time.perf_counter()
    boot = bootstrap_distribution(d, config.iterations, config.seed, ("mean", "median"), stream, config.threads)
    log.info("bootstrap %s: %d x %d in %.2fs", ds.dimension.value, config.iterations, ds.n, time.perf_counter() - t0)
    res.mean_ci = percentile_ci(boot["mean"], config.confidence)
    res.median_ci = percentile_ci(boot["median"], config.confidence)
    res.bootstrap_p = bootstrap_p(boot["mean"])
    return res


_STREAM = {d: k for k, d in enumerate(Dimension)}


@dataclass
class DivergenceReport:
    config: DivergenceConfig
    dimensions: dict[str, DimensionDivergence]

    def to_dict(self) -> dict:
        return {
            # worker count never changes results, so it stays out of the report
            "config": {k: v for k, v in asdict(self.config).items() if k != "threads"},
            "notes": {
                "bootstrap_p": "approximation: two-sided share of bootstrap means on either side of 0",
                "ci_method": "percentile",
            },
            "dimensions": {k: _clean(asdict(v)) for k, v in self.dimensions.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        cols = [
            "dimension", "n", "excluded", "mean_diff", "median_diff",
            "mean_ci_low", "mean_ci_high", "median_ci_low", "median_ci_high",
            "q1", "q3", "whisker_low", "whisker_high", "min", "max",
            "t_p", "wilcoxon_p", "bootstrap_p",
            "t_p_corrected", "wilcoxon_p_corrected", "bootstrap_p_corrected", "degenerate",
        ]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for v in self.dimensions.values():
            box = v.box or {}
            row = {
                "dimension": v.dimension, "n": v.n, "excluded": v.excluded,
                "mean_diff": v.mean_diff, "median_diff": v.median_diff,
                "mean_ci_low": v.mean_ci[0] if v.mean_ci else None,
                "mean_ci_high": v.mean_ci[1] if v.mean_ci else None,
                "median_ci_low": v.median_ci[0] if v.median_ci else None,
                "median_ci_high": v.median_ci[1] if v.median_ci else None,
                **{k: box.get(k) for k in ("q1", "q3", "whisker_low", "whisker_high", "min", "max")},
                "t_p": v.t_p, "wilcoxon_p": v.wilcoxon_p, "bootstrap_p": v.bootstrap_p,
                **{f"{t}_p_corrected": v.corrected_p.get(t) for t in TESTS},
                "degenerate": "; ".join(f"{k}: {m}" for k, m in sorted(v.degenerate.items())),
            }
            w.writerow(["" if row[c] is None else (repr(row[c]) if isinstance(row[c], float) else row[c]) for c in cols])
        return buf.getvalue()


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def divergence_report(
    profiles: Mapping[Dimension, SalienceProfile],
    config: DivergenceConfig | None = None,
    dimensions: Sequence[Dimension] | None = None,
) -> DivergenceReport:
    config = config or DivergenceConfig()
    dims = list(dimensions) if dimensions is not None else list(profiles)
    out = {}
    for dim in dims:
        prof = profiles[dim]
        if prof.degenerate is not None:
            res = DimensionDivergence(dim.value, 0, prof.m)
            res.degenerate["all"] = prof.degenerate
        else:
            res = divergence_for(difference_set(prof), config, stream=_STREAM[dim])
        res.corrected_p = bonferroni(res.p_values(), config.factor)
        out[dim.value] = res
    return DivergenceReport(config, out)
