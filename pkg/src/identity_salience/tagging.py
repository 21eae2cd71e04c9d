"""Identity dimensions, category vocabularies and influencer tagging."""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    AudienceUserTagged,
    DuplicateCategory,
    MalformedLine,
    UnknownDimension,
    UnknownUser,
)
from .graph import FollowGraph, read_lines


class MetricKind(enum.Enum):
    ENTROPY = "entropy"
    COVERAGE = "coverage"


class Dimension(enum.Enum):
    RACE = "race"
    GENDER = "gender"
    LGBTQ = "lgbtq"
    RELIGION = "religion"
    POLITICS = "politics"

    @property
    def metric_kind(self) -> MetricKind:
        if self in (Dimension.RACE, Dimension.GENDER):
            return MetricKind.ENTROPY
        return MetricKind.COVERAGE

    @classmethod
    def parse(cls, name: str) -> "Dimension":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise UnknownDimension(f"unknown dimension {name!r}") from None


DEFAULT_CATEGORIES = {
    Dimension.RACE: [
        "Caucasian",
        "African-American",
        "Asian",
        "Hispanic/Latino",
        "Native American/Hawaiian",
    ],
    Dimension.GENDER: ["Male", "Female", "Non-Binary"],
    Dimension.LGBTQ: [
        "LGBT",
        "Gay",
        "Bisexual",
        "Lesbian",
        "Transgender",
        "Queer",
        "Pansexual",
        "Asexual",
    ],
    Dimension.RELIGION: [
        "Jewish",
        "Christian",
        "Catholic",
        "Muslim",
        "Buddhist",
        "Hindu",
        "Atheist",
        "Sikh",
        "Spiritual",
    ],
    Dimension.POLITICS: ["Democrat", "Republican", "Libertarian", "Independent"],
}


def default_terms(category: str) -> tuple[str, ...]:
    """Matcher terms derived from a category name; slashes separate alternatives."""
    return tuple(t.strip().lower() for t in category.split("/") if t.strip())


class Vocabulary:
    """Per-dimension ordered mapping of category name to matcher terms."""

    def __init__(self, entries: Mapping[Dimension, Mapping[str, Sequence[str]]] | None = None):
        self._cats: dict[Dimension, dict[str, tuple[str, ...]]] = {d: {} for d in Dimension}
        for dim, cats in (entries or {}).items():
            for name, terms in cats.items():
                self.add(dim, name, terms)

    def add(self, dim: Dimension, name: str, terms: Sequence[str]) -> None:
        if name in self._cats[dim]:
            raise DuplicateCategory(f"duplicate category {name!r} in {dim.value}")
        self._cats[dim][name] = tuple(t.lower() for t in terms)

    def categories(self, dim: Dimension) -> list[str]:
        return list(self._cats[dim])

    def terms(self, dim: Dimension, category: str) -> tuple[str, ...]:
        return self._cats[dim][category]

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self._cats == other._cats

    @classmethod
    def default(cls) -> "Vocabulary":
        return cls({d: {c: default_terms(c) for c in cats} for d, cats in DEFAULT_CATEGORIES.items()})


def load_vocabulary(path=None) -> Vocabulary:
    """Parse ``dimension<TAB>category<TAB>term1|term2`` lines; no path gives the default."""
    if path is None:
        return Vocabulary.default()
    vocab = Vocabulary()
    for k, line in enumerate(read_lines(path), 1):
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise MalformedLine(f"expected 3 tab-separated fields, got {len(parts)}", path, k)
        dim_name, cat, terms = parts
        try:
            dim = Dimension(dim_name.lower())
        except ValueError:
            raise UnknownDimension(f"unknown dimension {dim_name!r}", path, k) from None
        term_list = [t for t in terms.split("|") if t]
        if not cat or not term_list:
            raise MalformedLine("empty category or term list", path, k)
        try:
            vocab.add(dim, cat, term_list)
        except DuplicateCategory as exc:
            raise DuplicateCategory(str(exc), path, k) from None
    return vocab


@dataclass(frozen=True, eq=False)
class TagMatrix:
    """Influencer-by-category boolean memberships for one dimension."""

    dimension: Dimension
    categories: tuple[str, ...]
    matrix: np.ndarray  # shape (M, C), bool

    @property
    def n_categories(self) -> int:
        return len(self.categories)

    def category_index(self, name: str) -> int:
        return self.categories.index(name)

    def members(self, i: int) -> set[int]:
        return set(np.flatnonzero(self.matrix[i]).tolist())

    @property
    def memberships(self) -> list[set[int]]:
        return [self.members(i) for i in range(self.matrix.shape[0])]

    def tagged(self) -> np.ndarray:
        """Boolean mask of influencers with any membership."""
        return self.matrix.any(axis=1)

    @classmethod
    def from_memberships(cls, dimension, categories, memberships: Sequence[Iterable[int]]):
        mat = np.zeros((len(memberships), len(categories)), dtype=bool)
        for i, cs in enumerate(memberships):
            for c in cs:
                mat[i, c] = True
        mat.setflags(write=False)
        return cls(dimension, tuple(categories), mat)


def _term_pattern(terms: Sequence[str]) -> re.Pattern | None:
    if not terms:
        return None
    # term must start at a word start: "female" does not yield "male"
    alts = "|".join(re.escape(t) for t in sorted(terms, key=len, reverse=True))
    return re.compile(rf"(?<!\w)(?:{alts})")


def tag_strings(
    strings: Sequence[Sequence[str]], vocabulary: Vocabulary
) -> dict[Dimension, TagMatrix]:
    """Tag influencers given each one's list of category strings."""
    texts = ["\n".join(s).lower() for s in strings]
    out = {}
    for dim in Dimension:
        cats = vocabulary.categories(dim)
        mat = np.zeros((len(texts), len(cats)), dtype=bool)
        for c, cat in enumerate(cats):
            pat = _term_pattern(vocabulary.terms(dim, cat))
            if pat is None:
                continue
            for i, text in enumerate(texts):
                if text and pat.search(text):
                    mat[i, c] = True
        mat.setflags(write=False)
        out[dim] = TagMatrix(dim, tuple(cats), mat)
    return out


def read_category_strings(categories_path, graph: FollowGraph) -> list[list[str]]:
    """Read ``user_id<TAB>category string`` lines into per-influencer string lists."""
    strings: list[list[str]] = [[] for _ in range(graph.m)]
    for k, line in enumerate(read_lines(categories_path), 1):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise MalformedLine(
                f"expected 2 tab-separated fields, got {len(parts)}", categories_path, k
            )
        uid, text = parts
        j = graph.index.get(uid)
        if j is None:
            raise UnknownUser(f"unknown user {uid!r}", categories_path, k)
        if j >= graph.m:
            raise AudienceUserTagged(f"audience member {uid!r} carries categories", categories_path, k)
        strings[j].append(text)
    return strings


def tag_influencers(
    categories_path, vocabulary: Vocabulary, graph: FollowGraph
) -> dict[Dimension, TagMatrix]:
    return tag_strings(read_category_strings(categories_path, graph), vocabulary)


def write_categories(path, ids: Sequence[str], strings: Sequence[Sequence[str]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for uid, ss in zip(ids, strings):
            for s in ss:
                fh.write(f"{uid}\t{s}\n")


def write_vocabulary(path, vocabulary: Vocabulary) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for dim in Dimension:
            for cat in vocabulary.categories(dim):
                fh.write(f"{dim.value}\t{cat}\t{'|'.join(vocabulary.terms(dim, cat))}\n")
