"""Relational data model for the peer-review corpus.

A :class:`Corpus` is an immutable in-memory snapshot of one conference's
submissions, reviews, authors, scholar profiles, institution rankings and
per-submission arXiv candidate pools.  Construction happens through
``revaudit.corpus.io.load_corpus``; after that the snapshot is treated as
read-only and is safe to share across concurrent analyses.
"""

from __future__ import annotations

import datetime
import enum
from dataclasses import dataclass, field

from revaudit.errors import UndefinedStatisticError

EMBEDDING_DIM = 768

# Decision strings that mark a record for exclusion at load time.  These
# submissions never enter a Corpus, so no analysis can touch them.
EXCLUDED_DECISIONS = frozenset({"DeskReject", "Withdrawn"})


class Decision(enum.Enum):
    ORAL = "Oral"
    SPOTLIGHT = "Spotlight"
    POSTER = "Poster"
    TALK = "Talk"
    WORKSHOP_INVITE = "WorkshopInvite"
    REJECT = "Reject"

    @property
    def accepted(self) -> bool:
        """Binary accept flag: a workshop invite counts as a reject."""
        return self not in (Decision.REJECT, Decision.WORKSHOP_INVITE)


class ReportedGender(enum.Enum):
    FEMALE = "Female"
    MALE = "Male"
    NON_BINARY = "NonBinary"
    UNSPECIFIED = "Unspecified"


class RankingSource(enum.Enum):
    CSRANKING = "CSRanking"
    ICLR = "ICLR"


@dataclass
class CorpusConfig:
    """Validation bounds for a corpus; read from a key-value config file."""

    year_min: int
    year_max: int
    rating_min: int = 1
    rating_max: int = 10
    confidence_min: int = 1
    confidence_max: int = 5

    def rating_bounds(self, year: int) -> tuple[int, int]:
        return self.rating_min, self.rating_max

    def confidence_bounds(self, year: int) -> tuple[int, int]:
        return self.confidence_min, self.confidence_max

    @property
    def years(self) -> list[int]:
        return list(range(self.year_min, self.year_max + 1))


@dataclass
class Submission:
    id: str
    year: int
    title: str
    abstract: str
    keywords: list[str]
    author_ids: list[str]
    decision: Decision
    input_len: int
    n_fig: int
    n_ref: int
    n_sec: int
    fluency: float | None = None
    embedding: list[float] | None = None
    arxiv_first: bool | None = None

    @property
    def accepted(self) -> bool:
        return self.decision.accepted

    def field_violations(self, config: CorpusConfig) -> list[tuple[str, str]]:
        bad = []
        if not self.author_ids:
            bad.append(("author_ids", "must be non-empty"))
        elif len(set(self.author_ids)) != len(self.author_ids):
            bad.append(("author_ids", "contains duplicate ids"))
        if not config.year_min <= self.year <= config.year_max:
            bad.append(("year", f"{self.year} outside [{config.year_min}, {config.year_max}]"))
        for name in ("input_len", "n_fig", "n_ref", "n_sec"):
            if getattr(self, name) < 0:
                bad.append((name, "must be >= 0"))
        if self.fluency is not None and not 0.0 <= self.fluency <= 1.0:
            bad.append(("fluency", f"{self.fluency} outside [0, 1]"))
        if self.embedding is not None and len(self.embedding) != EMBEDDING_DIM:
            bad.append(("embedding", f"dimension {len(self.embedding)} != {EMBEDDING_DIM}"))
        return bad


@dataclass
class Review:
    id: str
    submission_id: str
    rating: int
    confidence: int
    text_len: int
    sentiment: float | None = None

    def field_violations(self, config: CorpusConfig, year: int) -> list[tuple[str, str]]:
        bad = []
        lo, hi = config.rating_bounds(year)
        if not lo <= self.rating <= hi:
            bad.append(("rating", f"{self.rating} outside [{lo}, {hi}] for year {year}"))
        lo, hi = config.confidence_bounds(year)
        if not lo <= self.confidence <= hi:
            bad.append(("confidence", f"{self.confidence} outside [{lo}, {hi}] for year {year}"))
        if self.text_len < 0:
            bad.append(("text_len", "must be >= 0"))
        if self.sentiment is not None and not 0.0 <= self.sentiment <= 1.0:
            bad.append(("sentiment", f"{self.sentiment} outside [0, 1]"))
        return bad


@dataclass
class Affiliation:
    institution: str
    start_year: int
    end_year: int


@dataclass
class Author:
    id: str
    first_name: str
    full_name: str
    email_domains: dict[int, str] = field(default_factory=dict)
    reported_gender: ReportedGender = ReportedGender.UNSPECIFIED
    affiliations: list[Affiliation] = field(default_factory=list)
    scholar_id: str | None = None

    def latest_institution(self) -> str | None:
        """Institution of the most recent affiliation interval, if any."""
        if not self.affiliations:
            return None
        best = max(self.affiliations, key=lambda a: (a.end_year, a.start_year))
        return best.institution

    def institutions_at(self, year: int) -> list[str]:
        """Institutions whose affiliation interval covers ``year``."""
        return [a.institution for a in self.affiliations if a.start_year <= year <= a.end_year]

    def field_violations(self, config: CorpusConfig) -> list[tuple[str, str]]:
        bad = []
        for year in self.email_domains:
            if not config.year_min <= year <= config.year_max:
                bad.append(("email_domains", f"year {year} outside configured range"))
        for aff in self.affiliations:
            if aff.start_year > aff.end_year:
                bad.append(("affiliations", f"{aff.institution!r}: start {aff.start_year} > end {aff.end_year}"))
        return bad


@dataclass
class ScholarProfile:
    scholar_id: str
    name: str
    institution: str
    citations_by_year: dict[int, int] = field(default_factory=dict)
    h_index: int = 0

    def field_violations(self, config: CorpusConfig) -> list[tuple[str, str]]:
        bad = []
        for year, count in self.citations_by_year.items():
            if count < 0:
                bad.append(("citations_by_year", f"year {year}: negative count {count}"))
        if self.h_index < 0:
            bad.append(("h_index", "must be >= 0"))
        return bad


@dataclass
class RankingEntry:
    institution: str
    rank: int
    source: RankingSource
    year: int

    def field_violations(self, config: CorpusConfig) -> list[tuple[str, str]]:
        if self.rank < 1:
            return [("rank", "must be positive")]
        return []


@dataclass
class ArxivCandidate:
    arxiv_id: str
    title: str
    authors: set[str]
    embedding: list[float] | None
    first_public_date: datetime.date

    def field_violations(self, config: CorpusConfig) -> list[tuple[str, str]]:
        bad = []
        if not self.authors:
            bad.append(("authors", "author set must be non-empty"))
        if self.embedding is not None and len(self.embedding) != EMBEDDING_DIM:
            bad.append(("embedding", f"dimension {len(self.embedding)} != {EMBEDDING_DIM}"))
        return bad


@dataclass
class Corpus:
    submissions: dict[str, Submission]
    reviews: dict[str, Review]
    authors: dict[str, Author]
    profiles: dict[str, ScholarProfile]
    rankings: list[RankingEntry]
    arxiv_pools: dict[str, list[ArxivCandidate]]
    config: CorpusConfig

    def __post_init__(self):
        self._reviews_by_submission: dict[str, list[Review]] | None = None

    def reviews_for(self, submission_id: str) -> list[Review]:
        if self._reviews_by_submission is None:
            index: dict[str, list[Review]] = {sid: [] for sid in self.submissions}
            for review in self.reviews.values():
                index.setdefault(review.submission_id, []).append(review)
            self._reviews_by_submission = index
        return self._reviews_by_submission.get(submission_id, [])

    def authors_of(self, submission: Submission) -> list[Author]:
        return [self.authors[aid] for aid in submission.author_ids if aid in self.authors]

    def summary_by_year(self) -> dict[int, dict[str, int]]:
        """Per-year counts of submissions (split by decision), reviews, authors."""
        years = sorted({s.year for s in self.submissions.values()})
        table: dict[int, dict[str, int]] = {}
        for year in years:
            subs = [s for s in self.submissions.values() if s.year == year]
            counts = {"submissions": len(subs)}
            for decision in Decision:
                counts[decision.value] = sum(1 for s in subs if s.decision is decision)
            counts["reviews"] = sum(len(self.reviews_for(s.id)) for s in subs)
            counts["authors"] = len({aid for s in subs for aid in s.author_ids})
            table[year] = counts
        return table


def reviews_per_submission(corpus: Corpus) -> float:
    """Arithmetic mean of per-submission review counts."""
    n = len(corpus.submissions)
    if n == 0:
        raise UndefinedStatisticError("reviews_per_submission is undefined on an empty corpus")
    total = sum(len(corpus.reviews_for(sid)) for sid in corpus.submissions)
    return total / n
