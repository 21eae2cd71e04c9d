"""Influencer and audience selection over a raw candidate graph.

A candidate graph is any directed follow graph over users carrying a
platform-wide follower count and an eligibility flag. Roles do not exist yet;
they are assigned by :func:`select_influencers` / :func:`select_audience` and
then materialized with :func:`build_follow_graph`.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import EmptyInfluencerSet, UnknownSeed, UnknownUser
from .graph import FollowGraph, Role, UserRecord


@dataclass
class CandidateGraph:
    users: dict[str, UserRecord]
    followees: dict[str, set[str]] = field(default_factory=lambda: defaultdict(set))

    @classmethod
    def from_edges(cls, users: Iterable[UserRecord], edges: Iterable[tuple[str, str]]):
        g = cls({u.id: u for u in users})
        for src, dst in edges:
            if src not in g.users:
                raise UnknownUser(f"unknown user {src!r}")
            if dst not in g.users:
                raise UnknownUser(f"unknown user {dst!r}")
            g.followees[src].add(dst)
        return g

    def followers_of(self, targets: set[str]) -> dict[str, set[str]]:
        """Map each user following anything in ``targets`` to those followees."""
        out = {}
        for src, dsts in self.followees.items():
            hit = dsts & targets
            if hit:
                out[src] = hit
        return out


def _passes(u: UserRecord, min_followers: int, require_eligible: bool) -> bool:
    return u.follower_count > min_followers and (u.eligible or not require_eligible)


def select_influencers(
    graph: CandidateGraph,
    seeds: Iterable[str],
    min_followers: int = 10_000,
    require_eligible: bool = True,
) -> set[str]:
    """Users one or two followee hops from any seed that clear the filters.

    The follower threshold is strict (``follower_count > min_followers``).
    Seeds are kept when they clear the filters themselves.
    """
    seeds = set(seeds)
    for s in seeds:
        if s not in graph.users:
            raise UnknownSeed(f"unknown seed {s!r}")
    hop1 = set().union(*(graph.followees.get(s, ()) for s in seeds))
    hop2 = set().union(*(graph.followees.get(x, ()) for x in hop1))
    reached = seeds | hop1 | hop2
    return {u for u in reached if _passes(graph.users[u], min_followers, require_eligible)}


def select_audience(
    graph: CandidateGraph,
    influencers: Iterable[str],
    sample_fraction: float = 0.01,
    min_followees_in_set: int = 20,
    rng_seed: int = 0,
) -> set[str]:
    """Seeded uniform sample of the influencers' followers, then a followee-count floor."""
    influencers = set(influencers)
    if not influencers:
        raise EmptyInfluencerSet("influencer set is empty")
    if not 0 < sample_fraction <= 1:
        raise ValueError("sample_fraction must be in (0, 1]")
    followers = graph.followers_of(influencers)
    pool = sorted(u for u in followers if u not in influencers)
    if sample_fraction < 1:
        k = math.floor(sample_fraction * len(pool) + 0.5)
        rng = np.random.default_rng(rng_seed)
        picked = rng.choice(len(pool), size=k, replace=False)
        pool = [pool[i] for i in np.sort(picked)]
    return {u for u in pool if len(followers[u]) >= min_followees_in_set}


def build_follow_graph(
    graph: CandidateGraph, influencers: Iterable[str], audience: Iterable[str]
) -> FollowGraph:
    """Materialize the bipartite graph; only edges landing on influencers survive."""
    inf_ids = sorted(influencers)
    aud_ids = sorted(set(audience) - set(inf_ids))
    recs = [
        *(_with_role(graph.users[u], Role.INFLUENCER) for u in inf_ids),
        *(_with_role(graph.users[u], Role.AUDIENCE) for u in aud_ids),
    ]
    index = {u.id: j for j, u in enumerate(recs)}
    m = len(inf_ids)
    rows, cols = [], []
    for j, u in enumerate(recs):
        for dst in sorted(graph.followees.get(u.id, ())):
            i = index.get(dst)
            if i is not None and i < m and i != j:
                rows.append(j)
                cols.append(i)
    return FollowGraph.from_edges(recs[:m], recs[m:], np.array(rows), np.array(cols))


def _with_role(u: UserRecord, role: Role) -> UserRecord:
    return UserRecord(u.id, role, u.follower_count, u.eligible)


def load_candidate_graph(users_path, edges_path) -> CandidateGraph:
    """Read a candidate graph from the users/edges formats; roles are ignored and
    edges may point at any known user."""
    from .graph import MalformedLine, _parse_users, read_lines

    influencers, audience = _parse_users(users_path)
    g = CandidateGraph({u.id: u for u in [*influencers, *audience]})
    for k, line in enumerate(read_lines(edges_path), 1):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise MalformedLine("expected 2 tab-separated fields", edges_path, k)
        src, dst = parts
        for uid in parts:
            if uid not in g.users:
                raise UnknownUser(f"unknown user {uid!r}", edges_path, k)
        g.followees[src].add(dst)
    return g
