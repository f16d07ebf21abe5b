import datetime

import pytest

from revaudit.corpus.model import (
    Affiliation,
    ArxivCandidate,
    Author,
    Corpus,
    CorpusConfig,
    Decision,
    RankingEntry,
    RankingSource,
    Review,
    Submission,
)

DEFAULT_CONFIG = CorpusConfig(year_min=2017, year_max=2022)


def make_submission(sid="s1", year=2020, author_ids=("a1",), decision=Decision.POSTER, **kwargs):
    fields = dict(
        id=sid,
        year=year,
        title=f"Title {sid}",
        abstract=f"Abstract {sid}",
        keywords=[],
        author_ids=list(author_ids),
        decision=decision,
        input_len=5000,
        n_fig=5,
        n_ref=30,
        n_sec=10,
    )
    fields.update(kwargs)
    return Submission(**fields)


def make_review(rid="r1", submission_id="s1", rating=6, confidence=3, text_len=300, sentiment=None):
    return Review(id=rid, submission_id=submission_id, rating=rating,
                  confidence=confidence, text_len=text_len, sentiment=sentiment)


def make_author(aid="a1", first_name="Alex", full_name=None, **kwargs):
    fields = dict(
        id=aid,
        first_name=first_name,
        full_name=full_name or f"{first_name} {aid.title()}son",
    )
    fields.update(kwargs)
    return Author(**fields)


def make_corpus(submissions=(), reviews=(), authors=(), profiles=(), rankings=(),
                arxiv_pools=None, config=DEFAULT_CONFIG):
    sub_map = {s.id: s for s in submissions}
    needed = {aid for s in submissions for aid in s.author_ids}
    author_map = {a.id: a for a in authors}
    for aid in needed - set(author_map):
        author_map[aid] = make_author(aid)
    return Corpus(
        submissions=sub_map,
        reviews={r.id: r for r in reviews},
        authors=author_map,
        profiles={p.scholar_id: p for p in profiles},
        rankings=list(rankings),
        arxiv_pools=dict(arxiv_pools or {}),
        config=config,
    )


def make_ranking(institution, rank, source=RankingSource.CSRANKING, year=2020):
    return RankingEntry(institution=institution, rank=rank, source=source, year=year)


def make_candidate(arxiv_id="2001.0001", title="Title", authors=("Alex A.",),
                   embedding=None, first_public_date=datetime.date(2019, 10, 1)):
    return ArxivCandidate(arxiv_id=arxiv_id, title=title, authors=set(authors),
                          embedding=embedding, first_public_date=first_public_date)


@pytest.fixture
def config():
    return DEFAULT_CONFIG


@pytest.fixture
def affiliation():
    return Affiliation("MIT", 2015, 2025)
