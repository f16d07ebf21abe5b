"""Readers and writers for the corpus dump formats.

Entity tables (submissions, reviews, authors, scholar profiles, arXiv
candidates, LM feature files) are newline-delimited JSON, one object per
line, UTF-8, lower_snake_case field names.  Ranking tables are CSV with
header ``institution,rank,source,year``.  The config is a ``key = value``
text file.

The loader is strict: a record that violates a field constraint raises
:class:`MalformedRecordError` naming file, line and field, and dangling
foreign ids raise :class:`IntegrityError` listing the offenders.  As a
consequence ``validate_corpus(load_corpus(...))`` is always empty.
"""

from __future__ import annotations

import csv
import datetime
import json
import logging
from pathlib import Path

from revaudit.corpus.model import (
    EMBEDDING_DIM,
    EXCLUDED_DECISIONS,
    Affiliation,
    ArxivCandidate,
    Author,
    Corpus,
    CorpusConfig,
    Decision,
    RankingEntry,
    RankingSource,
    ReportedGender,
    Review,
    ScholarProfile,
    Submission,
)
from revaudit.errors import IntegrityError, MalformedRecordError

logger = logging.getLogger(__name__)

CONFIG_KEYS = ("year_min", "year_max", "rating_min", "rating_max", "confidence_min", "confidence_max")

FEATURE_NAMES = ("sentiment", "fluency", "embedding")


def read_config(path) -> CorpusConfig:
    """Parse a ``key = value`` config file; unrelated keys are ignored."""
    values: dict[str, int] = {}
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise MalformedRecordError(path, line_no, "-", "expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in CONFIG_KEYS:
            continue
        try:
            values[key] = int(value.strip())
        except ValueError:
            raise MalformedRecordError(path, line_no, key, f"expected integer, got {value.strip()!r}") from None
    for key in ("year_min", "year_max"):
        if key not in values:
            raise MalformedRecordError(path, 0, key, "required key missing")
    return CorpusConfig(**values)


def write_config(config: CorpusConfig, path) -> None:
    lines = [f"{key} = {getattr(config, key)}" for key in CONFIG_KEYS]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


class _Record:
    """One parsed NDJSON object plus the context needed for good errors."""

    def __init__(self, obj: dict, path, line_no: int, known: set[str], unknown_seen: set[str]):
        self.obj = obj
        self.path = path
        self.line_no = line_no
        for key in obj:
            if key not in known and key not in unknown_seen:
                unknown_seen.add(key)
                logger.warning("%s:%d: ignoring unknown field %r", path, line_no, key)

    def fail(self, field: str, message: str):
        raise MalformedRecordError(self.path, self.line_no, field, message)

    def has(self, field: str) -> bool:
        return self.obj.get(field) is not None

    def str_(self, field: str) -> str:
        value = self.obj.get(field)
        if not isinstance(value, str):
            self.fail(field, f"expected string, got {value!r}")
        return value

    def int_(self, field: str) -> int:
        value = self.obj.get(field)
        if isinstance(value, bool) or not isinstance(value, int):
            self.fail(field, f"expected integer, got {value!r}")
        return value

    def float_(self, field: str) -> float:
        value = self.obj.get(field)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(field, f"expected number, got {value!r}")
        return float(value)

    def bool_(self, field: str) -> bool:
        value = self.obj.get(field)
        if not isinstance(value, bool):
            self.fail(field, f"expected boolean, got {value!r}")
        return value

    def str_list(self, field: str) -> list[str]:
        value = self.obj.get(field)
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            self.fail(field, f"expected list of strings, got {value!r}")
        return list(value)

    def vector(self, field: str) -> list[float]:
        value = self.obj.get(field)
        if not isinstance(value, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
        ):
            self.fail(field, f"expected list of numbers, got {type(value).__name__}")
        return [float(v) for v in value]

    def year_map(self, field: str, cast=int) -> dict[int, int | str]:
        value = self.obj.get(field)
        if not isinstance(value, dict):
            self.fail(field, f"expected object keyed by year, got {value!r}")
        out = {}
        for key, entry in value.items():
            try:
                year = int(key)
            except ValueError:
                self.fail(field, f"non-integer year key {key!r}")
            out[year] = cast(entry)
        return out

    def date_(self, field: str) -> datetime.date:
        value = self.str_(field)
        try:
            return datetime.date.fromisoformat(value)
        except ValueError:
            self.fail(field, f"expected ISO date, got {value!r}")


def _iter_records(path, known: set[str]):
    unknown_seen: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecordError(path, line_no, "-", f"invalid JSON: {exc.msg}") from None
            if not isinstance(obj, dict):
                raise MalformedRecordError(path, line_no, "-", "expected a JSON object")
            yield _Record(obj, path, line_no, known, unknown_seen)


def _check_fields(entity, rec: _Record, config: CorpusConfig, **kwargs) -> None:
    for field, message in entity.field_violations(config, **kwargs):
        rec.fail(field, message)


_SUBMISSION_FIELDS = {
    "id", "year", "title", "abstract", "keywords", "author_ids", "decision",
    "input_len", "n_fig", "n_ref", "n_sec", "fluency", "embedding", "arxiv_first",
}


def _read_submissions(path, config) -> tuple[dict[str, Submission], set[str]]:
    submissions: dict[str, Submission] = {}
    excluded: set[str] = set()
    for rec in _iter_records(path, _SUBMISSION_FIELDS):
        sid = rec.str_("id")
        decision_raw = rec.str_("decision")
        if decision_raw in EXCLUDED_DECISIONS:
            excluded.add(sid)
            continue
        try:
            decision = Decision(decision_raw)
        except ValueError:
            rec.fail("decision", f"unknown decision {decision_raw!r}")
        sub = Submission(
            id=sid,
            year=rec.int_("year"),
            title=rec.str_("title"),
            abstract=rec.str_("abstract"),
            keywords=rec.str_list("keywords") if rec.has("keywords") else [],
            author_ids=rec.str_list("author_ids"),
            decision=decision,
            input_len=rec.int_("input_len"),
            n_fig=rec.int_("n_fig"),
            n_ref=rec.int_("n_ref"),
            n_sec=rec.int_("n_sec"),
            fluency=rec.float_("fluency") if rec.has("fluency") else None,
            embedding=rec.vector("embedding") if rec.has("embedding") else None,
            arxiv_first=rec.bool_("arxiv_first") if rec.has("arxiv_first") else None,
        )
        if sid in submissions:
            rec.fail("id", f"duplicate submission id {sid!r}")
        _check_fields(sub, rec, config)
        submissions[sid] = sub
    return submissions, excluded


_REVIEW_FIELDS = {"id", "submission_id", "rating", "confidence", "text_len", "sentiment"}


def _read_reviews(path, config, submissions, excluded_subs):
    reviews: dict[str, Review] = {}
    dangling: list[str] = []
    n_dropped = 0
    for rec in _iter_records(path, _REVIEW_FIELDS):
        rid = rec.str_("id")
        review = Review(
            id=rid,
            submission_id=rec.str_("submission_id"),
            rating=rec.int_("rating"),
            confidence=rec.int_("confidence"),
            text_len=rec.int_("text_len"),
            sentiment=rec.float_("sentiment") if rec.has("sentiment") else None,
        )
        if review.submission_id in excluded_subs:
            n_dropped += 1
            continue
        if review.submission_id not in submissions:
            dangling.append(f"review {rid!r} -> submission {review.submission_id!r}")
            continue
        if rid in reviews:
            rec.fail("id", f"duplicate review id {rid!r}")
        _check_fields(review, rec, config, year=submissions[review.submission_id].year)
        reviews[rid] = review
    if n_dropped:
        logger.info("dropped %d reviews attached to excluded submissions", n_dropped)
    return reviews, dangling


_AUTHOR_FIELDS = {"id", "first_name", "full_name", "email_domains", "reported_gender", "affiliations", "scholar_id"}


def _read_authors(path, config):
    authors: dict[str, Author] = {}
    for rec in _iter_records(path, _AUTHOR_FIELDS):
        aid = rec.str_("id")
        affiliations = []
        if rec.has("affiliations"):
            raw = rec.obj["affiliations"]
            if not isinstance(raw, list):
                rec.fail("affiliations", "expected a list")
            for item in raw:
                if not isinstance(item, dict) or not isinstance(item.get("institution"), str):
                    rec.fail("affiliations", f"bad entry {item!r}")
                try:
                    affiliations.append(
                        Affiliation(item["institution"], int(item["start_year"]), int(item["end_year"]))
                    )
                except (KeyError, TypeError, ValueError):
                    rec.fail("affiliations", f"bad entry {item!r}")
        gender = ReportedGender.UNSPECIFIED
        if rec.has("reported_gender"):
            try:
                gender = ReportedGender(rec.str_("reported_gender"))
            except ValueError:
                rec.fail("reported_gender", f"unknown value {rec.obj['reported_gender']!r}")
        author = Author(
            id=aid,
            first_name=rec.str_("first_name"),
            full_name=rec.str_("full_name"),
            email_domains=rec.year_map("email_domains", cast=str) if rec.has("email_domains") else {},
            reported_gender=gender,
            affiliations=affiliations,
            scholar_id=rec.str_("scholar_id") if rec.has("scholar_id") else None,
        )
        if aid in authors:
            rec.fail("id", f"duplicate author id {aid!r}")
        _check_fields(author, rec, config)
        authors[aid] = author
    return authors


_PROFILE_FIELDS = {"scholar_id", "name", "institution", "citations_by_year", "h_index"}


def _read_profiles(path, config):
    profiles: dict[str, ScholarProfile] = {}
    for rec in _iter_records(path, _PROFILE_FIELDS):
        pid = rec.str_("scholar_id")
        profile = ScholarProfile(
            scholar_id=pid,
            name=rec.str_("name"),
            institution=rec.str_("institution"),
            citations_by_year=rec.year_map("citations_by_year") if rec.has("citations_by_year") else {},
            h_index=rec.int_("h_index") if rec.has("h_index") else 0,
        )
        if pid in profiles:
            rec.fail("scholar_id", f"duplicate profile id {pid!r}")
        _check_fields(profile, rec, config)
        profiles[pid] = profile
    return profiles


def canonical_institution(name: str) -> str:
    """Uncased, whitespace-collapsed institution name."""
    return " ".join(name.casefold().split())


def _read_rankings(path, config) -> list[RankingEntry]:
    entries: list[RankingEntry] = []
    seen: set[tuple] = set()
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["institution", "rank", "source", "year"]:
            raise MalformedRecordError(path, 1, "-", f"bad header {header!r}")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise MalformedRecordError(path, line_no, "-", f"expected 4 columns, got {len(row)}")
            name, rank_raw, source_raw, year_raw = row
            try:
                source = RankingSource(source_raw)
            except ValueError:
                raise MalformedRecordError(path, line_no, "source", f"unknown source {source_raw!r}") from None
            try:
                rank, year = int(rank_raw), int(year_raw)
            except ValueError:
                raise MalformedRecordError(path, line_no, "rank", "rank and year must be integers") from None
            entry = RankingEntry(canonical_institution(name), rank, source, year)
            for field, message in entry.field_violations(config):
                raise MalformedRecordError(path, line_no, field, message)
            key = (entry.source, entry.year, entry.institution)
            if key in seen:
                raise MalformedRecordError(path, line_no, "institution", f"duplicate entry for {key!r}")
            seen.add(key)
            entries.append(entry)
    return entries


_ARXIV_FIELDS = {"submission_id", "arxiv_id", "title", "authors", "embedding", "first_public_date"}


def _read_arxiv(path, config, submissions, excluded_subs):
    pools: dict[str, list[ArxivCandidate]] = {}
    dangling: list[str] = []
    for rec in _iter_records(path, _ARXIV_FIELDS):
        sid = rec.str_("submission_id")
        candidate = ArxivCandidate(
            arxiv_id=rec.str_("arxiv_id"),
            title=rec.str_("title"),
            authors=set(rec.str_list("authors")),
            embedding=rec.vector("embedding") if rec.has("embedding") else None,
            first_public_date=rec.date_("first_public_date"),
        )
        if sid in excluded_subs:
            continue
        if sid not in submissions:
            dangling.append(f"arxiv candidate {candidate.arxiv_id!r} -> submission {sid!r}")
            continue
        _check_fields(candidate, rec, config)
        pools.setdefault(sid, []).append(candidate)
    return pools, dangling


def _read_feature_file(path, corpus: Corpus) -> None:
    """Attach LM feature records (sentiment / fluency / embedding) in place."""
    dangling: list[str] = []
    for rec in _iter_records(path, {"id", "feature", "value", "model"}):
        entity_id = rec.str_("id")
        feature = rec.str_("feature")
        if feature not in FEATURE_NAMES:
            rec.fail("feature", f"unknown feature {feature!r}; expected one of {FEATURE_NAMES}")
        if not rec.has("value"):
            continue  # missing value: leave the field absent
        if feature == "sentiment":
            review = corpus.reviews.get(entity_id)
            if review is None:
                dangling.append(f"feature sentiment -> review {entity_id!r}")
                continue
            value = rec.float_("value")
            if not 0.0 <= value <= 1.0:
                rec.fail("value", f"sentiment {value} outside [0, 1]")
            review.sentiment = value
        elif feature == "fluency":
            sub = corpus.submissions.get(entity_id)
            if sub is None:
                dangling.append(f"feature fluency -> submission {entity_id!r}")
                continue
            value = rec.float_("value")
            if not 0.0 <= value <= 1.0:
                rec.fail("value", f"fluency {value} outside [0, 1]")
            sub.fluency = value
        else:
            sub = corpus.submissions.get(entity_id)
            if sub is None:
                dangling.append(f"feature embedding -> submission {entity_id!r}")
                continue
            vector = rec.vector("value")
            if len(vector) != EMBEDDING_DIM:
                rec.fail("value", f"embedding dimension {len(vector)} != {EMBEDDING_DIM}")
            sub.embedding = vector
    if dangling:
        raise IntegrityError(f"{len(dangling)} feature records with unresolved ids", dangling)


def load_corpus(
    submission_path,
    review_path,
    author_path,
    profile_path,
    ranking_path,
    arxiv_path,
    config: CorpusConfig,
    feature_paths=(),
) -> Corpus:
    """Load and cross-validate a corpus snapshot from disk.

    Desk-rejected / withdrawn submissions are dropped together with their
    reviews and candidate pools.  ``feature_paths`` may name LM feature
    files whose values are attached to the loaded entities.
    """
    submissions, excluded = _read_submissions(submission_path, config)
    authors = _read_authors(author_path, config)
    profiles = _read_profiles(profile_path, config)
    reviews, dangling = _read_reviews(review_path, config, submissions, excluded)
    rankings = _read_rankings(ranking_path, config)
    pools, dangling_arxiv = _read_arxiv(arxiv_path, config, submissions, excluded)
    dangling.extend(dangling_arxiv)
    for sub in submissions.values():
        for aid in sub.author_ids:
            if aid not in authors:
                dangling.append(f"submission {sub.id!r} -> author {aid!r}")
    for author in authors.values():
        if author.scholar_id is not None and author.scholar_id not in profiles:
            dangling.append(f"author {author.id!r} -> scholar profile {author.scholar_id!r}")
    if dangling:
        raise IntegrityError(f"{len(dangling)} unresolved foreign ids", dangling)
    corpus = Corpus(submissions, reviews, authors, profiles, rankings, pools, config)
    for path in feature_paths:
        _read_feature_file(path, corpus)
    return corpus


def _dump(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False)


def _submission_obj(sub: Submission) -> dict:
    obj = {
        "id": sub.id,
        "year": sub.year,
        "title": sub.title,
        "abstract": sub.abstract,
        "keywords": sub.keywords,
        "author_ids": sub.author_ids,
        "decision": sub.decision.value,
        "input_len": sub.input_len,
        "n_fig": sub.n_fig,
        "n_ref": sub.n_ref,
        "n_sec": sub.n_sec,
    }
    if sub.fluency is not None:
        obj["fluency"] = sub.fluency
    if sub.embedding is not None:
        obj["embedding"] = sub.embedding
    if sub.arxiv_first is not None:
        obj["arxiv_first"] = sub.arxiv_first
    return obj


def write_corpus(corpus: Corpus, directory) -> dict[str, Path]:
    """Serialize a corpus snapshot; ``load_corpus`` restores it exactly."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {name: directory / fname for name, fname in [
        ("submissions", "submissions.ndjson"),
        ("reviews", "reviews.ndjson"),
        ("authors", "authors.ndjson"),
        ("profiles", "profiles.ndjson"),
        ("rankings", "rankings.csv"),
        ("arxiv", "arxiv.ndjson"),
        ("config", "config.txt"),
    ]}

    with open(paths["submissions"], "w", encoding="utf-8") as handle:
        for sid in sorted(corpus.submissions):
            handle.write(_dump(_submission_obj(corpus.submissions[sid])) + "\n")

    with open(paths["reviews"], "w", encoding="utf-8") as handle:
        for rid in sorted(corpus.reviews):
            review = corpus.reviews[rid]
            obj = {
                "id": review.id,
                "submission_id": review.submission_id,
                "rating": review.rating,
                "confidence": review.confidence,
                "text_len": review.text_len,
            }
            if review.sentiment is not None:
                obj["sentiment"] = review.sentiment
            handle.write(_dump(obj) + "\n")

    with open(paths["authors"], "w", encoding="utf-8") as handle:
        for aid in sorted(corpus.authors):
            author = corpus.authors[aid]
            obj = {
                "id": author.id,
                "first_name": author.first_name,
                "full_name": author.full_name,
                "email_domains": {str(y): d for y, d in sorted(author.email_domains.items())},
                "reported_gender": author.reported_gender.value,
                "affiliations": [
                    {"institution": a.institution, "start_year": a.start_year, "end_year": a.end_year}
                    for a in author.affiliations
                ],
            }
            if author.scholar_id is not None:
                obj["scholar_id"] = author.scholar_id
            handle.write(_dump(obj) + "\n")

    with open(paths["profiles"], "w", encoding="utf-8") as handle:
        for pid in sorted(corpus.profiles):
            profile = corpus.profiles[pid]
            obj = {
                "scholar_id": profile.scholar_id,
                "name": profile.name,
                "institution": profile.institution,
                "citations_by_year": {str(y): c for y, c in sorted(profile.citations_by_year.items())},
                "h_index": profile.h_index,
            }
            handle.write(_dump(obj) + "\n")

    with open(paths["rankings"], "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["institution", "rank", "source", "year"])
        for entry in corpus.rankings:
            writer.writerow([entry.institution, entry.rank, entry.source.value, entry.year])

    with open(paths["arxiv"], "w", encoding="utf-8") as handle:
        for sid in sorted(corpus.arxiv_pools):
            for cand in corpus.arxiv_pools[sid]:
                obj = {
                    "submission_id": sid,
                    "arxiv_id": cand.arxiv_id,
                    "title": cand.title,
                    "authors": sorted(cand.authors),
                    "first_public_date": cand.first_public_date.isoformat(),
                }
                if cand.embedding is not None:
                    obj["embedding"] = cand.embedding
                handle.write(_dump(obj) + "\n")

    write_config(corpus.config, paths["config"])
    return paths


def load_snapshot(directory, feature_paths=()) -> Corpus:
    """Load a corpus previously written by :func:`write_corpus`."""
    directory = Path(directory)
    config = read_config(directory / "config.txt")
    return load_corpus(
        directory / "submissions.ndjson",
        directory / "reviews.ndjson",
        directory / "authors.ndjson",
        directory / "profiles.ndjson",
        directory / "rankings.csv",
        directory / "arxiv.ndjson",
        config,
        feature_paths=feature_paths,
    )
