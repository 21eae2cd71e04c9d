"""Ranking influencers who could bridge their audience to a target community."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyDifferenceSet, UnknownCategory
from .graph import FollowGraph
from .salience import SalienceProfile
from .tagging import Dimension, TagMatrix

DENOMINATORS = ("tagged", "all-followees")

# Default target sets; the POC set pools every non-Caucasian race category.
DEFAULT_TARGETS = {
    "Women": (Dimension.GENDER, ("Female",)),
    "POC": (
        Dimension.RACE,
        ("African-American", "Asian", "Hispanic/Latino", "Native American/Hawaiian"),
    ),
}

CSV_COLUMNS = (
    "influencer_id",
    "dimension",
    "salience_diff",
    "target",
    "influencer_pct",
    "audience_pct",
    "n_audience",
)


@dataclass(frozen=True)
class BridgeCandidate:
    influencer: str
    dimension: Dimension
    salience_diff: float
    target: str
    influencer_pct: float
    audience_pct: float
    n_audience: int


def _target_mask(tags: TagMatrix, categories: str | Iterable[str]) -> np.ndarray:
    if isinstance(categories, str):
        categories = (categories,)
    cols = []
    for c in categories:
        if c not in tags.categories:
            raise UnknownCategory(f"{c!r} is not a {tags.dimension.value} category")
        cols.append(tags.category_index(c))
    return tags.matrix[:, cols].any(axis=1)


def followee_category_share(
    graph: FollowGraph,
    user: int,
    tags: TagMatrix,
    categories: str | Iterable[str],
    denominator: str = "tagged",
):
    """Share of ``user``'s followees in any of ``categories``, or None if undefined.

    The denominator counts dimension-tagged followees (``tagged``) or every
    followee (``all-followees``).
    """
    target = _target_mask(tags, categories)
    f = graph.followees(user)
    den = len(f) if denominator == "all-followees" else int(tags.tagged()[f].sum())
    if den == 0:
        return None
    return int(target[f].sum()) / den


def category_shares(
    graph: FollowGraph,
    tags: TagMatrix,
    categories: str | Iterable[str],
    denominator: str = "tagged",
) -> np.ndarray:
    """:func:`followee_category_share` for every user at once, NaN where undefined."""
    if denominator not in DENOMINATORS:
        raise ValueError(f"denominator must be one of {DENOMINATORS}")
    F = graph.followee_matrix()
    num = F @ _target_mask(tags, categories).astype(np.float64)
    if denominator == "all-followees":
        den = graph.out_degrees().astype(np.float64)
    else:
        den = F @ tags.tagged().astype(np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(den > 0, num / den, np.nan)


def rank_bridges(
    profile: SalienceProfile,
    graph: FollowGraph,
    tags: TagMatrix,
    categories: str | Iterable[str],
    top_k: int = 10,
    min_audience: int = 5,
    denominator: str = "tagged",
    label: str | None = None,
    require_excess: bool = False,
) -> list[BridgeCandidate]:
    """Top influencers by ego-minus-audience salience gap, with followee-share context.

    Candidates need at least ``min_audience`` audience followers contributing to
    the audience score and a defined own share. Ties in the gap are broken by
    influencer id. ``require_excess`` additionally drops influencers whose own
    share does not exceed their audience's mean share.
    """
    if isinstance(categories, str):
        categories = (categories,)
    categories = tuple(categories)
    label = label or "|".join(categories)
    shares = category_shares(graph, tags, categories, denominator)
    if top_k <= 0:
        _target_mask(tags, categories)
        return []
    ego = profile.ego[: profile.m]
    both = ~np.isnan(ego) & ~np.isnan(profile.audience)
    if not both.any():
        raise EmptyDifferenceSet(f"no influencer has both scores on {profile.dimension.value}")

    aud = shares[graph.m :]
    defined = ~np.isnan(aud)
    A = graph.audience_matrix()
    aud_n = A @ defined.astype(np.float64)
    aud_sum = A @ np.where(defined, aud, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        aud_pct = np.where(aud_n > 0, aud_sum / aud_n, np.nan)

    own = shares[: graph.m]
    ok = both & (profile.audience_count >= min_audience) & ~np.isnan(own) & ~np.isnan(aud_pct)
    if require_excess:
        ok &= own > aud_pct
    idx = np.flatnonzero(ok)
    diffs = ego[idx] - profile.audience[idx]
    ids = [profile.user_ids[i] for i in idx]
    order = sorted(range(len(idx)), key=lambda k: (-diffs[k], ids[k]))[:top_k]
    return [
        BridgeCandidate(
            ids[k],
            profile.dimension,
            float(diffs[k]),
            label,
            float(own[idx[k]]),
            float(aud_pct[idx[k]]),
            int(profile.audience_count[idx[k]]),
        )
        for k in order
    ]


def bridges_csv(candidates: Sequence[BridgeCandidate]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for c in candidates:
        w.writerow(
            [
                c.influencer,
                c.dimension.value,
                repr(c.salience_diff),
                c.target,
                repr(c.influencer_pct),
                repr(c.audience_pct),
                c.n_audience,
            ]
        )
    return buf.getvalue()


def read_bridges_csv(text: str) -> list[BridgeCandidate]:
    rows = list(csv.DictReader(io.StringIO(text)))
    return [
        BridgeCandidate(
            r["influencer_id"],
            Dimension(r["dimension"]),
            float(r["salience_diff"]),
            r["target"],
            float(r["influencer_pct"]),
            float(r["audience_pct"]),
            int(r["n_audience"]),
        )
        for r in rows
    ]


def render_table(candidates: Sequence[BridgeCandidate], names: dict[str, str] | None = None) -> str:
    """Human-readable table: gap to two decimals, shares as whole percentages."""
    names = names or {}
    lines = ["Inf.\tSalience Diff\tBridge to\t% Followees Inf.\t% Followees Aud."]
    for c in candidates:
        lines.append(
            f"{names.get(c.influencer, c.influencer)}\t{c.salience_diff:.2f}\t{c.target}"
            f"\t{c.influencer_pct * 100:.0f}%\t{c.audience_pct * 100:.0f}%"
        )
    return "\n".join(lines) + "\n"
