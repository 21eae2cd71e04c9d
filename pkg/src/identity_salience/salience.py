"""Raw, ego-centric and audience-centric salience scores.

Undefined scores are stored as NaN in per-user float arrays indexed by the
graph's global user index. The scalar functions (:func:`category_distribution`,
:func:`entropy_raw`, :func:`coverage_raw`) describe one user at a time;
:func:`compute_profiles` evaluates the same quantities for every user at once
through sparse products.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import DegeneratePopulation, InvalidDistribution
from .graph import FollowGraph
from .tagging import Dimension, MetricKind, TagMatrix

DIST_TOL = 1e-9


def category_distribution(followees, tags: TagMatrix, include_untagged: bool = False):
    """Share of membership occurrences per category among ``followees``.

    A followee with several categories counts once per category. Returns None
    when no followee carries a membership. With ``include_untagged`` an extra
    trailing entry counts followees without any membership.
    """
    idx = np.asarray(followees, dtype=np.int64)
    counts = tags.matrix[idx].sum(axis=0).astype(np.float64)
    if include_untagged:
        untagged = float(len(idx) - tags.matrix[idx].any(axis=1).sum())
        counts = np.append(counts, untagged)
    total = counts.sum()
    if total == 0:
        return None
    return counts / total


def entropy_raw(dist, base: float = math.e) -> float:
    """Shannon entropy of a probability vector, with 0 log 0 = 0."""
    p = np.asarray(dist, dtype=np.float64)
    if p.ndim != 1 or np.any(p < 0) or not np.all(np.isfinite(p)):
        raise InvalidDistribution("entries must be finite and non-negative")
    if abs(p.sum() - 1.0) > DIST_TOL:
        raise InvalidDistribution(f"entries sum to {p.sum()!r}, not 1")
    nz = p[p > 0]
    h = -float(np.sum(nz * np.log(nz)))
    if base != math.e:
        h /= math.log(base)
    return max(h, 0.0)


def coverage_raw(followees, tags: TagMatrix):
    """Fraction of ``followees`` with no membership in the dimension, or None."""
    idx = np.asarray(followees, dtype=np.int64)
    if len(idx) == 0:
        return None
    return float((~tags.matrix[idx].any(axis=1)).sum()) / len(idx)


def _zscore(values: np.ndarray):
    w = np.asarray(values, dtype=np.float64)
    defined = ~np.isnan(w)
    k = int(defined.sum())
    if k < 2:
        raise DegeneratePopulation(f"{k} defined score(s); need at least 2")
    mu = float(np.mean(w[defined]))
    sigma = float(np.std(w[defined]))
    if not sigma > 1e-12 * max(1.0, abs(mu)):
        raise DegeneratePopulation("all defined scores are equal")
    return -(w - mu) / sigma, mu, sigma


def normalize_scores(raw):
    """Sign-flipped z-scores over defined raw values (population sigma).

    ``raw`` is an array with NaN for undefined scores, or a mapping from user
    to value/None. Returns ``(ego, mean, std)`` in the same shape as the input;
    undefined entries stay NaN (array) or are omitted (mapping).
    """
    if isinstance(raw, Mapping):
        keys = list(raw)
        arr = np.array([np.nan if raw[k] is None else raw[k] for k in keys], dtype=np.float64)
        ego, mu, sigma = _zscore(arr)
        return {k: float(e) for k, e in zip(keys, ego) if not np.isnan(e)}, mu, sigma
    return _zscore(raw)


def audience_scores(graph: FollowGraph, ego: np.ndarray):
    """Mean ego score over each influencer's audience followers with defined ego.

    Returns ``(scores, counts)``: scores is NaN where no follower contributes.
    """
    ego = np.asarray(ego, dtype=np.float64)
    aud = ego[graph.m :]
    defined = ~np.isnan(aud)
    A = graph.audience_matrix()
    counts = A @ defined.astype(np.float64)
    sums = A @ np.where(defined, aud, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        scores = np.where(counts > 0, sums / counts, np.nan)
    return scores, counts.astype(np.int64)


@dataclass(frozen=True, eq=False)
class SalienceProfile:
    dimension: Dimension
    user_ids: tuple[str, ...]
    m: int
    raw: np.ndarray
    basis_count: np.ndarray
    ego: np.ndarray
    audience: np.ndarray
    audience_count: np.ndarray
    population_mean: float = math.nan
    population_std: float = math.nan
    degenerate: str | None = None

    @property
    def n_defined(self) -> int:
        return int((~np.isnan(self.raw)).sum())

    def require(self) -> "SalienceProfile":
        if self.degenerate is not None:
            raise DegeneratePopulation(f"{self.dimension.value}: {self.degenerate}")
        return self

    def ego_map(self) -> dict[str, float]:
        return {u: float(e) for u, e in zip(self.user_ids, self.ego) if not np.isnan(e)}

    def audience_map(self) -> dict[str, float]:
        return {
            u: float(a) for u, a in zip(self.user_ids[: self.m], self.audience) if not np.isnan(a)
        }


def raw_scores(
    graph: FollowGraph,
    tags: TagMatrix,
    include_untagged: bool = False,
    log_base: float = math.e,
):
    """Raw scores and basis counts for every user in one dimension."""
    F = graph.followee_matrix()
    deg = graph.out_degrees().astype(np.float64)
    if tags.dimension.metric_kind is MetricKind.ENTROPY:
        counts = np.asarray(F @ tags.matrix.astype(np.float64))
        if include_untagged:
            tagged = F @ tags.tagged().astype(np.float64)
            counts = np.column_stack([counts, deg - tagged])
        total = counts.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            p = counts / total[:, None]
            terms = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
        w = -terms.sum(axis=1)
        if log_base != math.e:
            w /= math.log(log_base)
        w = np.where(total > 0, np.maximum(w, 0.0), np.nan)
        basis = total
    else:
        tagged = F @ tags.tagged().astype(np.float64)
        with np.errstate(invalid="ignore", divide="ignore"):
            w = np.where(deg > 0, (deg - tagged) / deg, np.nan)
        basis = deg
    return w, basis.astype(np.int64)


def compute_profiles(
    graph: FollowGraph,
    tags: Mapping[Dimension, TagMatrix],
    include_untagged: bool = False,
    log_base: float = math.e,
) -> dict[Dimension, SalienceProfile]:
    """Profiles for every dimension in ``tags``.

    Dimensions that cannot be normalized come back with ``degenerate`` set and
    empty ego/audience scores; :meth:`SalienceProfile.require` raises for them.
    """
    ids = tuple(graph.user_ids())
    out = {}
    for dim, tm in tags.items():
        w, basis = raw_scores(graph, tm, include_untagged, log_base)
        try:
            ego, mu, sigma = _zscore(w)
        except DegeneratePopulation as exc:
            nan_u = np.full(graph.n_users, np.nan)
            out[dim] = SalienceProfile(
                dim, ids, graph.m, w, basis, nan_u, np.full(graph.m, np.nan),
                np.zeros(graph.m, dtype=np.int64), degenerate=str(exc),
            )
            continue
        aud, aud_n = audience_scores(graph, ego)
        out[dim] = SalienceProfile(dim, ids, graph.m, w, basis, ego, aud, aud_n, mu, sigma)
    return out
