"""Users, roles and the immutable influencer/audience follow graph.

The graph stores the followee matrix column-wise: for every user ``j`` the
sorted influencer indices it follows, plus the transposed audience block
(for every influencer, the audience members following it).

Global user indices put influencers first (``0 .. M-1``) and audience members
after them (``M .. M+N-1``).
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import (
    DuplicateEdge,
    DuplicateUser,
    MalformedLine,
    NonInfluencerTarget,
    SelfEdge,
    UnknownUser,
)


class Role(enum.Enum):
    INFLUENCER = "influencer"
    AUDIENCE = "audience"


@dataclass(frozen=True)
class UserRecord:
    id: str
    role: Role
    follower_count: int = 0
    eligible: bool = True


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FollowGraph:
    """Bipartite follow graph. Build with :meth:`from_edges` or :func:`load_graph`."""

    influencers: tuple[UserRecord, ...]
    audience: tuple[UserRecord, ...]
    out_indptr: np.ndarray
    out_indices: np.ndarray
    in_indptr: np.ndarray
    in_indices: np.ndarray
    index: dict = field(repr=False)

    @property
    def m(self) -> int:
        return len(self.influencers)

    @property
    def n(self) -> int:
        return len(self.audience)

    @property
    def n_users(self) -> int:
        return self.m + self.n

    @property
    def n_edges(self) -> int:
        return int(self.out_indptr[-1])

    def user(self, j: int) -> UserRecord:
        return self.influencers[j] if j < self.m else self.audience[j - self.m]

    def user_ids(self) -> list[str]:
        return [u.id for u in self.influencers] + [u.id for u in self.audience]

    def followees(self, j: int) -> np.ndarray:
        """Sorted influencer indices followed by user ``j``."""
        return self.out_indices[self.out_indptr[j] : self.out_indptr[j + 1]]

    def audience_followers(self, i: int) -> np.ndarray:
        """Sorted global indices of audience members following influencer ``i``."""
        return self.in_indices[self.in_indptr[i] : self.in_indptr[i + 1]]

    def out_degrees(self) -> np.ndarray:
        return np.diff(self.out_indptr)

    def followee_matrix(self) -> sp.csr_matrix:
        """Transpose of the followee matrix: rows are users, columns influencers."""
        data = np.ones(len(self.out_indices), dtype=np.float64)
        return sp.csr_matrix(
            (data, self.out_indices, self.out_indptr), shape=(self.n_users, self.m)
        )

    def audience_matrix(self) -> sp.csr_matrix:
        """Influencer x audience incidence (rows influencers, columns audience offset by M)."""
        data = np.ones(len(self.in_indices), dtype=np.float64)
        return sp.csr_matrix(
            (data, self.in_indices - self.m, self.in_indptr), shape=(self.m, self.n)
        )

    @classmethod
    def from_edges(
        cls,
        influencers: Sequence[UserRecord],
        audience: Sequence[UserRecord],
        followers: np.ndarray,
        followees: np.ndarray,
    ) -> "FollowGraph":
        """Build from parallel arrays of global follower/followee indices.

        Raises on targets outside the influencer block, self edges and duplicates;
        the ``line`` attribute of the error is the 1-based edge position.
        """
        m, n = len(influencers), len(audience)
        index = {}
        for j, u in enumerate([*influencers, *audience]):
            if u.id in index:
                raise DuplicateUser(f"duplicate user {u.id!r}")
            index[u.id] = j
        rows = np.asarray(followers, dtype=np.int64)
        cols = np.asarray(followees, dtype=np.int64)
        _check_edges(rows, cols, m, m + n, index_ids=None)
        return cls._assemble(tuple(influencers), tuple(audience), rows, cols, index)

    @classmethod
    def _assemble(cls, influencers, audience, rows, cols, index):
        m, n = len(influencers), len(audience)
        order = np.lexsort((cols, rows))
        rows_s, cols_s = rows[order], cols[order]
        out_indptr = np.zeros(m + n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows_s, minlength=m + n), out=out_indptr[1:])
        out_indices = cols_s.astype(np.int32)

        aud = rows_s >= m
        a_rows, a_cols = rows_s[aud], cols_s[aud]
        order = np.lexsort((a_rows, a_cols))
        in_indptr = np.zeros(m + 1, dtype=np.int64)
        np.cumsum(np.bincount(a_cols, minlength=m), out=in_indptr[1:])
        in_indices = a_rows[order].astype(np.int32)
        return cls(
            influencers,
            audience,
            _freeze(out_indptr),
            _freeze(out_indices),
            _freeze(in_indptr),
            _freeze(in_indices),
            index,
        )

    def restrict_audience(self, keep: Iterable[int]) -> "FollowGraph":
        """Subgraph with all influencers and only the given audience members (global indices)."""
        keep = np.unique(np.asarray(list(keep), dtype=np.int64))
        if len(keep) and (keep[0] < self.m or keep[-1] >= self.n_users):
            raise IndexError("audience indices out of range")
        users = np.concatenate([np.arange(self.m), keep])
        remap = np.full(self.n_users, -1, dtype=np.int64)
        remap[users] = np.arange(len(users))
        deg = self.out_degrees()
        rows = np.repeat(np.arange(self.n_users), deg)
        sel = remap[rows] >= 0
        audience = tuple(self.audience[j - self.m] for j in keep)
        index = {u.id: k for k, u in enumerate([*self.influencers, *audience])}
        return FollowGraph._assemble(
            self.influencers,
            audience,
            remap[rows[sel]],
            self.out_indices[sel].astype(np.int64),
            index,
        )


def _check_edges(rows, cols, m, n_users, index_ids, path=None, line_of=None):
    """Validate edge arrays; ``line_of`` maps edge position to file line."""

    def line(k):
        return int(line_of[k]) if line_of is not None else int(k) + 1

    ids = index_ids
    bad = np.flatnonzero((cols < 0) | (cols >= m) | (rows < 0) | (rows >= n_users))
    if len(bad):
        k = bad[0]
        who = ids[cols[k]] if ids is not None and 0 <= cols[k] < n_users else int(cols[k])
        raise NonInfluencerTarget(f"followee {who!r} is not an influencer", path, line(k))
    selfs = np.flatnonzero(rows == cols)
    if len(selfs):
        k = selfs[0]
        who = ids[rows[k]] if ids is not None else int(rows[k])
        raise SelfEdge(f"user {who!r} follows itself", path, line(k))
    if len(rows) > 1:
        key = rows * m + cols
        order = np.argsort(key, kind="stable")
        dup = np.flatnonzero(key[order][1:] == key[order][:-1])
        if len(dup):
            k = order[dup + 1].min()
            raise DuplicateEdge("duplicate edge", path, line(k))


_TRAILING_WS = re.compile(r"[ \t\r\f\v]$", re.MULTILINE)


def read_lines(path) -> list[str]:
    """Split a UTF-8 file into lines; any trailing whitespace is a MalformedLine."""
    text = Path(path).read_bytes().decode("utf-8")
    bad = _TRAILING_WS.search(text)
    if bad:
        raise MalformedLine("trailing whitespace", path, text.count("\n", 0, bad.start()) + 1)
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return lines


def _parse_users(path) -> tuple[list[UserRecord], list[UserRecord]]:
    influencers, audience = [], []
    seen = set()
    for k, line in enumerate(read_lines(path), 1):
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise MalformedLine(f"expected 4 tab-separated fields, got {len(parts)}", path, k)
        uid, role, count, eligible = parts
        if not uid:
            raise MalformedLine("empty user id", path, k)
        try:
            role = Role(role)
        except ValueError:
            raise MalformedLine(f"unknown role {role!r}", path, k) from None
        if not count.isdigit() or not count.isascii():
            raise MalformedLine(f"bad follower_count {count!r}", path, k)
        if eligible not in ("0", "1"):
            raise MalformedLine(f"bad eligible flag {eligible!r}", path, k)
        if uid in seen:
            raise DuplicateUser(f"duplicate user {uid!r}", path, k)
        seen.add(uid)
        rec = UserRecord(uid, role, int(count), eligible == "1")
        (influencers if role is Role.INFLUENCER else audience).append(rec)
    return influencers, audience


_TRAILING_WS_BYTES = re.compile(rb"[ \t\r\f\v]$", re.MULTILINE)
_EDGE_CHUNK_LINES = 1 << 20


def parse_edge_file(path, index: dict) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Parse ``follower<TAB>followee`` lines into global index arrays.

    Works on the raw bytes: tab and newline offsets are located with numpy and
    ids are resolved against the sorted user table, chunk by chunk, so no
    per-line Python objects are created. Returns ``(rows, cols, line_of)``;
    ``line_of`` is None when edge k sits on line k+1.
    """
    data = Path(path).read_bytes()
    try:
        data.decode("utf-8")
    except UnicodeDecodeError as exc:
        line = data.count(b"\n", 0, exc.start) + 1
        raise MalformedLine("invalid UTF-8", path, line) from None
    bad = _TRAILING_WS_BYTES.search(data)
    if bad:
        raise MalformedLine("trailing whitespace", path, data.count(b"\n", 0, bad.start()) + 1)

    buf = np.frombuffer(data, dtype=np.uint8)
    ends = np.flatnonzero(buf == 10)
    if len(buf) and buf[-1] != 10:
        ends = np.append(ends, len(buf))
    starts = np.concatenate([[0], ends[:-1] + 1]).astype(np.int64) if len(ends) else ends
    nonempty = ends > starts
    line_of = None
    if not nonempty.all():
        line_of = np.flatnonzero(nonempty) + 1
        starts, ends = starts[nonempty], ends[nonempty]

    def lineno(k):
        return int(line_of[k]) if line_of is not None else int(k) + 1

    tabs = np.flatnonzero(buf == 9)
    tab_line = np.searchsorted(ends, tabs)
    per_line = np.bincount(tab_line, minlength=len(ends))[: len(ends)]
    wrong = np.flatnonzero(per_line != 1)
    if len(wrong):
        k = int(wrong[0])
        raise MalformedLine(
            f"expected 2 tab-separated fields, got {int(per_line[k]) + 1}", path, lineno(k)
        )
    # offsets are ascending and every line holds one tab, so tabs[k] is line k's
    empty = np.flatnonzero((tabs == starts) | (tabs + 1 == ends))
    if len(empty):
        raise MalformedLine("empty user id", path, lineno(int(empty[0])))

    ids = list(index)
    encoded = [u.encode("utf-8") for u in ids]
    width = max([len(e) for e in encoded], default=1)
    table = np.array(encoded, dtype=f"S{width}")
    order = np.argsort(table, kind="stable")
    table_sorted = table[order]
    idx_of = np.array([index[u] for u in ids], dtype=np.int64)[order]

    def resolve(lo, hi):
        ln = hi - lo
        if len(ln) == 0:
            return np.empty(0, dtype=np.int64)
        w = int(ln.max())
        if w > width:
            too_long = ln > width
        else:
            too_long = None
        w = min(w, width)
        offs = np.arange(w)
        pos = lo[:, None] + offs[None, :]
        raw = np.where(offs[None, :] < ln[:, None], buf[np.minimum(pos, len(buf) - 1)], 0)
        tok = np.ascontiguousarray(raw.astype(np.uint8)).view(f"S{w}").ravel().astype(f"S{width}")
        at = np.minimum(np.searchsorted(table_sorted, tok), len(table_sorted) - 1)
        hit = table_sorted[at] == tok
        if too_long is not None:
            hit &= ~too_long
        return np.where(hit, idx_of[at], -1)

    rows = np.empty(len(starts), dtype=np.int64)
    cols = np.empty(len(starts), dtype=np.int64)
    for c0 in range(0, len(starts), _EDGE_CHUNK_LINES):
        c1 = min(c0 + _EDGE_CHUNK_LINES, len(starts))
        rows[c0:c1] = resolve(starts[c0:c1], tabs[c0:c1])
        cols[c0:c1] = resolve(tabs[c0:c1] + 1, ends[c0:c1])
    missing = np.flatnonzero((rows < 0) | (cols < 0))
    if len(missing):
        k = int(missing[0])
        lo, hi = (starts[k], tabs[k]) if rows[k] < 0 else (tabs[k] + 1, ends[k])
        uid = data[lo:hi].decode("utf-8")
        raise UnknownUser(f"unknown user {uid!r}", path, lineno(k))
    return rows, cols, line_of


def load_graph(users_path, edges_path) -> FollowGraph:
    """Load and validate a follow graph from the users and edges files."""
    influencers, audience = _parse_users(users_path)
    all_users = [*influencers, *audience]
    index = {u.id: j for j, u in enumerate(all_users)}
    rows, cols, line_of = parse_edge_file(edges_path, index)
    ids = [u.id for u in all_users]
    _check_edges(rows, cols, len(influencers), len(all_users), ids, edges_path, line_of)
    return FollowGraph._assemble(tuple(influencers), tuple(audience), rows, cols, index)


def write_users(path, users: Iterable[UserRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(
            f"{u.id}\t{u.role.value}\t{u.follower_count}\t{int(u.eligible)}\n"
            for u in users
        )


def write_edges(path, graph: FollowGraph) -> None:
    ids = np.array(graph.user_ids(), dtype=object)
    deg = graph.out_degrees()
    src = np.repeat(ids, deg)
    dst = ids[graph.out_indices]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("".join(f"{s}\t{d}\n" for s, d in zip(src, dst)))
