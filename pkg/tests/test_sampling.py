import numpy as np
import pytest

from oracles import bfs_two_hops
from identity_salience.errors import EmptyInfluencerSet, UnknownSeed
from identity_salience.graph import Role, UserRecord
from identity_salience.sampling import (
    CandidateGraph,
    build_follow_graph,
    load_candidate_graph,
    select_audience,
    select_influencers,
)


def cand(users, edges):
    recs = [UserRecord(u, Role.AUDIENCE, c, e) for u, c, e in users]
    return CandidateGraph.from_edges(recs, edges)


def test_chain_two_hops():
    g = cand(
        [("s", 50_000, True), ("x", 50_000, True), ("y", 50_000, True), ("z", 50_000, True)],
        [("s", "x"), ("x", "y"), ("y", "z")],
    )
    assert select_influencers(g, {"s"}) == {"s", "x", "y"}
    g2 = cand(
        [("s", 5, True), ("x", 50_000, True), ("y", 50_000, True), ("z", 50_000, True)],
        [("s", "x"), ("x", "y"), ("y", "z")],
    )
    assert select_influencers(g2, {"s"}) == {"x", "y"}


def test_strict_threshold_and_eligibility():
    g = cand([("s", 0, True), ("x", 10_000, True), ("y", 10_001, False)], [("s", "x"), ("s", "y")])
    assert select_influencers(g, {"s"}, min_followers=10_000) == set()
    assert select_influencers(g, {"s"}, require_eligible=False) == {"y"}


def test_unknown_seed():
    g = cand([("s", 0, True)], [])
    with pytest.raises(UnknownSeed):
        select_influencers(g, {"nope"})


def _random_candidates(rng, n=50, p=0.06):
    users = [(f"u{i}", int(rng.integers(0, 30_000)), bool(rng.random() < 0.8)) for i in range(n)]
    edges = [(f"u{i}", f"u{j}") for i in range(n) for j in range(n) if i != j and rng.random() < p]
    return users, edges


@pytest.mark.parametrize("seed", range(10))
def test_influencers_match_bfs_oracle(seed):
    rng = np.random.default_rng(seed)
    users, edges = _random_candidates(rng)
    g = cand(users, edges)
    seeds = {f"u{i}" for i in rng.choice(50, size=3, replace=False)}
    adj = {}
    for a, b in edges:
        adj.setdefault(a, []).append(b)
    info = {u: (c, e) for u, c, e in users}
    expect = {u for u in bfs_two_hops(adj, seeds) if info[u][0] > 10_000 and info[u][1]}
    assert select_influencers(g, seeds) == expect
    # edge order does not matter
    perm = [edges[k] for k in rng.permutation(len(edges))]
    assert select_influencers(cand(users, perm), seeds) == expect


def _audience_graph(rng, n_inf=30, n_aud=1000):
    users = [(f"k{i}", 20_000, True) for i in range(n_inf)]
    users += [(f"a{j}", 0, True) for j in range(n_aud)]
    edges = []
    for j in range(n_aud):
        for i in rng.choice(n_inf, size=int(rng.integers(1, n_inf)), replace=False):
            edges.append((f"a{j}", f"k{i}"))
    return cand(users, edges), {f"k{i}" for i in range(n_inf)}


def test_audience_threshold():
    users = [(f"k{i}", 20_000, True) for i in range(25)] + [("a", 0, True), ("b", 0, True)]
    edges = [("a", f"k{i}") for i in range(19)] + [("b", f"k{i}") for i in range(20)]
    g = cand(users, edges)
    infl = {f"k{i}" for i in range(25)}
    assert select_audience(g, infl, 1.0, 20) == {"b"}
    assert select_audience(g, infl, 1.0, 1) == {"a", "b"}


def test_audience_seeded_and_fraction():
    g, infl = _audience_graph(np.random.default_rng(3))
    a = select_audience(g, infl, 0.1, 1, rng_seed=7)
    b = select_audience(g, infl, 0.1, 1, rng_seed=7)
    c = select_audience(g, infl, 0.1, 1, rng_seed=8)
    assert a == b and a != c
    assert len(a) == 100
    full = [select_audience(g, infl, 1.0, 5, rng_seed=s) for s in range(3)]
    assert full[0] == full[1] == full[2]


def test_audience_empty_influencers():
    g, _ = _audience_graph(np.random.default_rng(0), 2, 5)
    with pytest.raises(EmptyInfluencerSet):
        select_audience(g, set())


def test_build_follow_graph_roles():
    g = cand(
        [("s", 50_000, True), ("x", 50_000, True), ("a", 0, True), ("b", 0, True)],
        [("s", "x"), ("a", "x"), ("a", "s"), ("b", "a")],
    )
    fg = build_follow_graph(g, {"s", "x"}, {"a", "b"})
    assert fg.m == 2 and fg.n == 2
    assert [u.role for u in fg.influencers] == [Role.INFLUENCER] * 2
    # b -> a is audience to audience and is dropped
    assert fg.n_edges == 3


def test_load_candidate_graph(tmp_path):
    (tmp_path / "u").write_text("s\taudience\t9\t1\nx\tinfluencer\t20000\t1\n")
    (tmp_path / "e").write_text("s\tx\nx\ts\n")
    g = load_candidate_graph(tmp_path / "u", tmp_path / "e")
    assert g.followees["x"] == {"s"}
