import numpy as np
import pytest

from conftest import make_graph
from identity_salience.bridge import (
    BridgeCandidate,
    bridges_csv,
    category_shares,
    followee_category_share,
    rank_bridges,
    read_bridges_csv,
    render_table,
)
from identity_salience.errors import EmptyDifferenceSet, UnknownCategory
from identity_salience.salience import compute_profiles
from identity_salience.stats import difference_set
from identity_salience.tagging import Dimension, TagMatrix

GENDER = ["Male", "Female", "Non-Binary"]


def gender_tags(mem):
    return TagMatrix.from_memberships(Dimension.GENDER, GENDER, mem)


def test_share_examples():
    g = make_graph(4, 1, [(4, 0), (4, 1), (4, 2), (3, 0)])
    tags = gender_tags([{1}, {1}, {0}, set()])
    assert followee_category_share(g, 4, tags, "Female") == pytest.approx(2 / 3)
    assert followee_category_share(g, 4, tags, "Female", "all-followees") == pytest.approx(2 / 3)
    g2 = make_graph(4, 1, [(4, 0), (4, 3)])
    assert followee_category_share(g2, 4, tags, "Female", "all-followees") == 0.5
    assert followee_category_share(g2, 4, tags, "Female") == 1.0
    assert followee_category_share(g, 1, tags, "Female") is None
    with pytest.raises(UnknownCategory):
        followee_category_share(g, 4, tags, "Women")


def test_vector_shares_match_scalar():
    rng = np.random.default_rng(0)
    edges = [(j, i) for j in range(40) for i in range(15) if i != j and rng.random() < 0.3]
    g = make_graph(15, 25, edges)
    tags = gender_tags([set(np.flatnonzero(rng.random(3) < 0.4).tolist()) for _ in range(15)])
    for den in ("tagged", "all-followees"):
        vec = category_shares(g, tags, ["Female", "Non-Binary"], den)
        for j in range(g.n_users):
            s = followee_category_share(g, j, tags, ["Female", "Non-Binary"], den)
            assert (np.isnan(vec[j]) and s is None) or vec[j] == pytest.approx(s, abs=1e-15)


def _setup(seed=0, m=12, n=80):
    rng = np.random.default_rng(seed)
    tags = gender_tags([{int(c)} for c in rng.integers(0, 2, size=m)])
    edges = [(j, i) for j in range(m + n) for i in range(m) if i != j and rng.random() < 0.5]
    g = make_graph(m, n, edges)
    prof = compute_profiles(g, {Dimension.GENDER: tags})[Dimension.GENDER]
    return g, tags, prof, edges


def test_rank_contract():
    g, tags, prof, _ = _setup()
    ranked = rank_bridges(prof, g, tags, "Female", top_k=100, min_audience=1)
    diffs = [c.salience_diff for c in ranked]
    assert diffs == sorted(diffs, reverse=True)
    ds = difference_set(prof).as_dict()
    for c in ranked:
        assert c.salience_diff == ds[c.influencer]
        assert 0 <= c.influencer_pct <= 1 and 0 <= c.audience_pct <= 1
        assert c.n_audience >= 1
    top3 = rank_bridges(prof, g, tags, "Female", top_k=3, min_audience=1)
    assert top3 == ranked[:3]
    assert rank_bridges(prof, g, tags, "Female", top_k=0) == []
    with pytest.raises(UnknownCategory):
        rank_bridges(prof, g, tags, "Women", top_k=0)
    strict = rank_bridges(prof, g, tags, "Female", top_k=100, min_audience=1, require_excess=True)
    assert all(c.influencer_pct > c.audience_pct for c in strict)
    assert set(strict) <= set(ranked)


def test_min_audience_filter():
    g, tags, prof, _ = _setup()
    ranked = rank_bridges(prof, g, tags, "Female", top_k=100, min_audience=10_000)
    assert ranked == []


def test_audience_pct_is_mean_of_follower_shares():
    g, tags, prof, _ = _setup(3)
    shares = category_shares(g, tags, "Female")
    for c in rank_bridges(prof, g, tags, "Female", top_k=5, min_audience=1):
        i = g.index[c.influencer]
        vals = [shares[j] for j in g.audience_followers(i) if not np.isnan(shares[j])]
        assert c.audience_pct == pytest.approx(np.mean(vals), abs=1e-12)
        assert c.influencer_pct == shares[i]


def test_ties_broken_by_id():
    # k0 and k1 are mirror images, so their gaps are equal
    tags = gender_tags([{0}, {0}, {1}, {1}, {0}, {1}])
    edges = [(0, 2), (1, 3), (2, 4), (2, 5), (6, 0), (6, 4), (6, 5), (7, 1), (7, 4), (7, 5)]
    g = make_graph(6, 2, edges)
    prof = compute_profiles(g, {Dimension.GENDER: tags})[Dimension.GENDER]
    ranked = rank_bridges(prof, g, tags, "Female", top_k=4, min_audience=1)
    diffs = {c.influencer: c.salience_diff for c in ranked}
    assert diffs["k0"] == diffs["k1"]
    ids = [c.influencer for c in ranked]
    assert ids.index("k0") == ids.index("k1") - 1


def test_edge_order_invariance():
    g, tags, prof, edges = _setup(5)
    rng = np.random.default_rng(1)
    g2 = make_graph(g.m, g.n, [edges[k] for k in rng.permutation(len(edges))])
    prof2 = compute_profiles(g2, {Dimension.GENDER: tags})[Dimension.GENDER]
    assert rank_bridges(prof, g, tags, "Female", 50, 1) == rank_bridges(prof2, g2, tags, "Female", 50, 1)


def test_empty_difference_set():
    tags = gender_tags([{0}, {0}, {1}])
    # influencer scores vary, but no audience member follows anyone
    g = make_graph(3, 2, [(0, 1), (1, 0), (1, 2)])
    prof = compute_profiles(g, {Dimension.GENDER: tags})[Dimension.GENDER]
    assert prof.degenerate is None
    with pytest.raises(EmptyDifferenceSet):
        rank_bridges(prof, g, tags, "Female")


ROW = BridgeCandidate("k0042", Dimension.GENDER, 3.32, "Women", 0.94, 0.43, 57)


def test_table_row_fixture_roundtrip():
    text = bridges_csv([ROW])
    assert text == (
        "influencer_id,dimension,salience_diff,target,influencer_pct,audience_pct,n_audience\n"
        "k0042,gender,3.32,Women,0.94,0.43,57\n"
    )
    back = read_bridges_csv(text)
    assert back == [ROW]
    assert bridges_csv(back).encode() == text.encode()
    table = render_table(back, {"k0042": "Singer A"})
    assert table.splitlines()[1] == "Singer A\t3.32\tWomen\t94%\t43%"


def test_csv_repr_is_lossless():
    c = BridgeCandidate("x,y", Dimension.RACE, 0.1 + 0.2, "POC", 1 / 3, 2 / 7, 5)
    assert read_bridges_csv(bridges_csv([c])) == [c]
