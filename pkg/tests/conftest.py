import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from identity_salience.graph import FollowGraph, Role, UserRecord  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, title): acceptance criterion check")
    config.addinivalue_line("markers", "slow: long-running statistical or scale check")
    config._acceptance = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        num, title = mark.args
        res = item.config._acceptance.setdefault(num, {"title": title, "ok": True, "notes": []})
        res["ok"] = res["ok"] and rep.passed
        res["notes"].extend(f"{k}={v}" for k, v in item.user_properties)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config._acceptance
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        r = results[num]
        status = "PASS" if r["ok"] else "FAIL"
        notes = f"  ({', '.join(r['notes'])})" if r["notes"] else ""
        terminalreporter.write_line(f"{status} criterion {num}: {r['title']}{notes}")


def make_graph(m, n, edges):
    """Graph from (follower, followee) global index pairs; ids k0.., a0.."""
    inf = [UserRecord(f"k{i}", Role.INFLUENCER, 20_000) for i in range(m)]
    aud = [UserRecord(f"a{j}", Role.AUDIENCE) for j in range(n)]
    e = np.array(edges, dtype=np.int64).reshape(-1, 2)
    return FollowGraph.from_edges(inf, aud, e[:, 0], e[:, 1])


def random_graph(rng, m, n, p=0.3):
    edges = [
        (j, i)
        for j in range(m + n)
        for i in range(m)
        if i != j and rng.random() < p
    ]
    return make_graph(m, n, edges)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
