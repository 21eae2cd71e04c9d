"""Synthetic influencer/audience populations with planted homophily.

Every user (influencer or audience member) belongs to one group per
dimension: a category, or "untagged" (group -1). Influencers' groups are their
primary tag; audience groups are drawn from the same proportions. Each
followee draw walks the dimensions in order and, with that dimension's
homophily probability for the user's role, restricts the candidate pool to the
user's group; the target is then uniform over the pool. So for every
dimension the expected in-group share of a user in group g is
``h + (1 - h) * share_g``.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import InfeasibleConfig
from .graph import FollowGraph, Role, UserRecord, write_edges, write_users
from .tagging import DEFAULT_CATEGORIES, Dimension, TagMatrix, write_categories

# Default category proportions (percent of influencers) and tag coverage per dimension.
_DEFAULT_WEIGHTS = {
    Dimension.RACE: ([63, 21, 7, 7, 1], 1.0),
    Dimension.GENDER: ([60, 40, 0.3], 1.0),
    Dimension.LGBTQ: ([3, 2, 1, 1, 0.5, 0.5, 0.2, 0.02], 0.09),
    Dimension.RELIGION: ([12, 5, 4, 1, 0.3, 0.2, 0.1, 0.04, 0.01], 0.22),
    Dimension.POLITICS: ([7, 4, 0.7, 0.5], 0.12),
}

MAX_ROUNDS = 40


@dataclass
class DimensionSpec:
    weights: list[float]
    coverage: float = 1.0
    influencer_homophily: float = 0.0
    audience_homophily: float = 0.0
    multi_tag_prob: float = 0.0

    def validate(self, dim: Dimension) -> None:
        w = np.asarray(self.weights, dtype=np.float64)
        if len(w) != len(DEFAULT_CATEGORIES[dim]):
            raise InfeasibleConfig(f"{dim.value}: expected {len(DEFAULT_CATEGORIES[dim])} weights")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise InfeasibleConfig(f"{dim.value}: weights must be non-negative and sum to 1")
        for name in ("coverage", "influencer_homophily", "audience_homophily", "multi_tag_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InfeasibleConfig(f"{dim.value}: {name} must be in [0, 1]")


def default_dimension_specs() -> dict[Dimension, DimensionSpec]:
    out = {}
    for dim, (w, cov) in _DEFAULT_WEIGHTS.items():
        w = np.asarray(w, dtype=np.float64)
        out[dim] = DimensionSpec((w / w.sum()).tolist(), cov)
    return out


@dataclass
class PlantedBridge:
    """Force one influencer to draw ``in_category`` of its followees from a category."""

    influencer: int
    dimension: Dimension
    category: str
    in_category: float = 0.95


@dataclass
class SynthConfig:
    m: int
    n: int
    followees_per_user: float = 100.0
    rng_seed: int = 0
    dimensions: dict[Dimension, DimensionSpec] = field(default_factory=default_dimension_specs)
    planted_bridges: list[PlantedBridge] = field(default_factory=list)

    def validate(self) -> None:
        if self.m < 1 or self.n < 1:
            raise InfeasibleConfig("m and n must be >= 1")
        if not self.followees_per_user > 0:
            raise InfeasibleConfig("followees_per_user must be positive")
        for dim, spec in self.dimensions.items():
            spec.validate(dim)
        for b in self.planted_bridges:
            if not 0 <= b.influencer < self.m:
                raise InfeasibleConfig(f"planted influencer {b.influencer} out of range")
            if b.category not in DEFAULT_CATEGORIES[b.dimension]:
                raise InfeasibleConfig(f"unknown category {b.category!r}")
            if not 0.0 <= b.in_category <= 1.0:
                raise InfeasibleConfig("in_category must be in [0, 1]")

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "followees_per_user": self.followees_per_user,
            "rng_seed": self.rng_seed,
            "dimensions": {d.value: asdict(s) for d, s in self.dimensions.items()},
            "planted_bridges": [asdict(b) | {"dimension": b.dimension.value} for b in self.planted_bridges],
        }


@dataclass
class SynthDataset:
    graph: FollowGraph
    tags: dict[Dimension, TagMatrix]
    category_strings: list[list[str]]
    ground_truth: dict
    groups: dict[Dimension, np.ndarray]  # per-user group index, -1 untagged


def _allocate(k: int, probs: np.ndarray) -> np.ndarray:
    """Largest-remainder integer allocation of ``k`` items to ``probs``."""
    exact = k * probs
    base = np.floor(exact).astype(np.int64)
    rem = k - int(base.sum())
    if rem > 0:
        order = np.lexsort((np.arange(len(probs)), -(exact - base)))
        base[order[:rem]] += 1
    return base


def _assign_groups(k: int, spec: DimensionSpec, rng: np.random.Generator) -> np.ndarray:
    w = np.asarray(spec.weights, dtype=np.float64)
    probs = np.append(w * spec.coverage, 1.0 - spec.coverage)
    counts = _allocate(k, np.clip(probs, 0.0, None))
    labels = np.repeat(np.append(np.arange(len(w)), -1), counts)
    return rng.permutation(labels)


def _degrees(k: int, mean: float, cap: int, rng: np.random.Generator) -> np.ndarray:
    deg = rng.poisson(mean, size=k)
    for _ in range(10):
        zero = deg == 0
        if not zero.any():
            break
        deg[zero] = rng.poisson(mean, size=int(zero.sum()))
    return np.clip(deg, 1, max(cap, 0)) if cap > 0 else np.zeros(k, dtype=np.int64)


def generate(config: SynthConfig) -> SynthDataset:
    """Generate a population; identical configs give identical datasets."""
    config.validate()
    m, n = config.m, config.n
    dims = list(config.dimensions)
    ss = np.random.SeedSequence(config.rng_seed)
    tag_rng, deg_rng, edge_rng = (np.random.default_rng(s) for s in ss.spawn(3))

    # groups and tags
    groups, memberships = {}, {}
    for dim in dims:
        spec = config.dimensions[dim]
        g_inf = _assign_groups(m, spec, tag_rng)
        g_aud = _assign_groups(n, spec, tag_rng)
        groups[dim] = np.concatenate([g_inf, g_aud])
        C = len(spec.weights)
        mat = np.zeros((m, C), dtype=bool)
        tagged = np.flatnonzero(g_inf >= 0)
        mat[tagged, g_inf[tagged]] = True
        if spec.multi_tag_prob > 0 and C > 1:
            extra = tagged[tag_rng.random(len(tagged)) < spec.multi_tag_prob]
            w = np.asarray(spec.weights)
            for i in extra:
                p = w.copy()
                p[g_inf[i]] = 0.0
                if p.sum() > 0:
                    mat[i, tag_rng.choice(C, p=p / p.sum())] = True
        memberships[dim] = mat
        if spec.influencer_homophily > 0 or spec.audience_homophily > 0:
            present = np.bincount(g_inf[g_inf >= 0], minlength=C)
            need = np.flatnonzero((np.asarray(spec.weights) * spec.coverage > 0) & (present == 0))
            if len(need):
                names = [DEFAULT_CATEGORIES[dim][c] for c in need]
                raise InfeasibleConfig(
                    f"{dim.value}: categories {names} have weight but no influencers at m={m}"
                )

    deg = np.concatenate(
        [
            _degrees(m, config.followees_per_user, m - 1, deg_rng),
            _degrees(n, config.followees_per_user, m, deg_rng),
        ]
    )
    is_inf = np.arange(m + n) < m
    homophily = {
        d: np.where(is_inf, config.dimensions[d].influencer_homophily, config.dimensions[d].audience_homophily)
        for d in dims
    }

    planted = {b.influencer: b for b in config.planted_bridges}
    rows = np.repeat(np.arange(m + n), deg)
    accepted_rows = np.empty(0, dtype=np.int64)
    accepted_cols = np.empty(0, dtype=np.int64)
    pending = rows
    for _ in range(MAX_ROUNDS):
        if len(pending) == 0:
            break
        cols = _draw_targets(pending, groups, homophily, memberships, planted, m, edge_rng)
        all_rows = np.concatenate([accepted_rows, pending])
        all_cols = np.concatenate([accepted_cols, cols])
        valid = all_rows != all_cols
        key = all_rows[valid] * m + all_cols[valid]
        key = np.unique(key)
        accepted_rows, accepted_cols = key // m, key % m
        have = np.bincount(accepted_rows, minlength=m + n)
        short = np.maximum(deg - have, 0)
        pending = np.repeat(np.arange(m + n), short)

    influencers = tuple(
        UserRecord(uid, Role.INFLUENCER, 10_001 + 100 * int(c), True)
        for uid, c in zip(_ids("k", m), np.bincount(accepted_cols, minlength=m))
    )
    audience = tuple(UserRecord(uid, Role.AUDIENCE, 0, True) for uid in _ids("a", n))
    index = {u.id: j for j, u in enumerate([*influencers, *audience])}
    graph = FollowGraph._assemble(influencers, audience, accepted_rows, accepted_cols, index)

    tags = {}
    for dim in dims:
        mat = memberships[dim]
        mat.setflags(write=False)
        tags[dim] = TagMatrix(dim, tuple(DEFAULT_CATEGORIES[dim]), mat)
    for dim in Dimension:
        if dim not in tags:
            tags[dim] = TagMatrix(dim, tuple(DEFAULT_CATEGORIES[dim]), np.zeros((m, len(DEFAULT_CATEGORIES[dim])), bool))
    strings = [
        [f"{DEFAULT_CATEGORIES[d][c]} people" for d in Dimension for c in np.flatnonzero(tags[d].matrix[i])]
        for i in range(m)
    ]
    truth = _ground_truth(config, graph, groups, deg)
    return SynthDataset(graph, tags, strings, truth, groups)


def _ids(prefix: str, k: int) -> list[str]:
    width = max(1, len(str(k - 1)))
    return [f"{prefix}{i:0{width}d}" for i in range(k)]


def _draw_targets(rows, groups, homophily, memberships, planted, m, rng):
    """One target per pending draw, following the restriction rule."""
    dims = list(groups)
    k = len(rows)
    # mixed-radix key: per dimension code 0 = unrestricted, g + 2 = group g (g = -1 untagged)
    key = np.zeros(k, dtype=np.int64)
    radices = []
    for d in dims:
        C = memberships[d].shape[1]
        radix = C + 2
        restrict = rng.random(k) < homophily[d][rows]
        code = np.where(restrict, groups[d][rows] + 2, 0)
        key = key * radix + code
        radices.append(radix)

    out = np.empty(k, dtype=np.int64)
    inf_groups = {d: groups[d][:m] for d in dims}
    order = np.argsort(key, kind="stable")
    uniq, starts = np.unique(key[order], return_index=True)
    ends = np.append(starts[1:], k)
    for kv, s, e in zip(uniq.tolist(), starts, ends):
        codes = []
        for radix in reversed(radices):
            codes.append(kv % radix)
            kv //= radix
        codes.reverse()
        constraints = [(d, c - 2) for d, c in zip(dims, codes) if c != 0]
        pool = _pool(constraints, inf_groups, m)
        sel = order[s:e]
        out[sel] = pool[rng.integers(0, len(pool), size=e - s)]

    if planted:
        for i, b in planted.items():
            sel = np.flatnonzero(rows == i)
            if len(sel) == 0:
                continue
            mat = memberships.get(b.dimension)
            if mat is None:
                continue
            c = DEFAULT_CATEGORIES[b.dimension].index(b.category)
            inside = np.flatnonzero(mat[:, c])
            outside = np.flatnonzero(mat.any(axis=1) & ~mat[:, c])
            pick_in = rng.random(len(sel)) < b.in_category
            if len(inside) == 0 or len(outside) == 0:
                raise InfeasibleConfig(f"planted bridge on {b.category!r} has an empty pool")
            out[sel[pick_in]] = inside[rng.integers(0, len(inside), size=int(pick_in.sum()))]
            out[sel[~pick_in]] = outside[rng.integers(0, len(outside), size=int((~pick_in).sum()))]
    return out


def _pool(constraints, inf_groups, m):
    """Influencers meeting every constraint, relaxing from the last one if empty."""
    while True:
        mask = np.ones(m, dtype=bool)
        for d, g in constraints:
            mask &= inf_groups[d] == g
        pool = np.flatnonzero(mask)
        if len(pool) or not constraints:
            return pool
        constraints = constraints[:-1]


def _ground_truth(config, graph, groups, deg) -> dict:
    m = graph.m
    rows = np.repeat(np.arange(graph.n_users), graph.out_degrees())
    cols = graph.out_indices.astype(np.int64)
    out_deg = graph.out_degrees()
    has = out_deg > 0
    dims = {}
    for d, spec in config.dimensions.items():
        g = groups[d]
        inf_g = g[:m]
        same = (g[rows] == g[cols]).astype(np.float64)
        per_user = np.bincount(rows, weights=same, minlength=graph.n_users)
        frac = np.where(has, per_user / np.maximum(out_deg, 1), np.nan)
        share = {int(c): float(np.mean(inf_g == c)) for c in np.unique(g)}
        expected = _expected_in_group(g, m, spec, share)
        dims[d.value] = {
            "influencer_homophily": spec.influencer_homophily,
            "audience_homophily": spec.audience_homophily,
            "influencer_group_counts": {str(k): int(v) for k, v in zip(*np.unique(inf_g, return_counts=True))},
            "audience_group_counts": {str(k): int(v) for k, v in zip(*np.unique(g[m:], return_counts=True))},
            "mean_in_group_fraction": {
                "influencers": _nanmean(frac[:m]),
                "audience": _nanmean(frac[m:]),
            },
            "mean_expected_in_group_fraction": {
                "influencers": _nanmean(np.where(has[:m], expected[:m], np.nan)),
                "audience": _nanmean(np.where(has[m:], expected[m:], np.nan)),
            },
        }
    return {
        "config": config.to_dict(),
        "n_edges": graph.n_edges,
        "mean_out_degree": float(np.mean(out_deg)),
        "planted_bridges": [graph.influencers[b.influencer].id for b in config.planted_bridges],
        "dimensions": dims,
    }


def _expected_in_group(g, m, spec, share):
    h = np.where(np.arange(len(g)) < m, spec.influencer_homophily, spec.audience_homophily)
    s = np.array([share.get(int(x), 0.0) for x in range(-1, max(share) + 1)])
    return h + (1 - h) * s[g + 1]


def _nanmean(x):
    x = x[~np.isnan(x)]
    return float(np.mean(x)) if len(x) else None


def write_dataset(out_dir, dataset: SynthDataset) -> dict[str, Path]:
    """Write users/edges/categories files and the ground-truth document."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "users": out / "users.tsv",
        "edges": out / "edges.tsv",
        "categories": out / "categories.tsv",
        "ground_truth": out / "ground_truth.json",
    }
    g = dataset.graph
    write_users(paths["users"], [*g.influencers, *g.audience])
    write_edges(paths["edges"], g)
    write_categories(paths["categories"], [u.id for u in g.influencers], dataset.category_strings)
    paths["ground_truth"].write_text(
        json.dumps(dataset.ground_truth, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return paths
