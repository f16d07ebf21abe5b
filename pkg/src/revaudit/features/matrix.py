"""Design-matrix assembly for the audit's nested feature sets.

The builder is fit/transform-shaped: ``fit`` learns imputation means and
standardization statistics on the training rows only, ``transform`` then
maps any set of submissions onto the same columns, so the test split never
leaks into the scaling.

Missing numeric values are filled with the training-column mean; fluency
and the author-derived features additionally carry 0/1 missingness
indicator columns (flags and review aggregates do not).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator

from revaudit.corpus.model import Corpus, Submission
from revaudit.errors import MatrixAssemblyError
from revaudit.features.attributes import author_citations_at, submission_aggregates
from revaudit.features.gender import perceived_gender
from revaudit.features.geography import NORTH_AMERICA, geography_of_author
from revaudit.linkage import match_institution

FEATURE_SETS = ("base", "plus_author", "plus_rev", "plus_revnlp", "all")

_AUTHOR_COLUMNS = (
    "author_cite_max", "author_cite_avg", "author_cite_missing",
    "ins_rank_best", "ins_rank_avg", "ins_rank_missing",
    "gender_lead_male", "gender_lead_missing",
    "gender_avg_male", "gender_avg_missing",
    "geo_frac_na", "geo_missing",
)
_REV_COLUMNS = (
    "rating_avg", "rating_max", "rating_min",
    "confidence_avg", "confidence_max", "confidence_min",
    "n_review",
)
_REVNLP_COLUMNS = (
    "sentiment_avg", "sentiment_max", "sentiment_min",
    "rlen_avg", "rlen_max", "rlen_min",
)


@dataclass
class FeatureContext:
    """Everything beyond the corpus that feature extraction depends on."""

    cluster_labels: dict[str, int] | None = None
    scholar_map: dict[str, str] | None = None
    ranking: list = field(default_factory=list)
    ranking_by_year: dict[int, list] | None = None
    gender_dictionary: dict[str, float] = field(default_factory=dict)
    tld_table: dict[str, str] | None = None
    tld_overrides: dict[str, str] | None = None
    match_threshold: float = 0.8

    def ranking_for(self, year: int) -> list:
        if self.ranking_by_year is not None:
            return self.ranking_by_year.get(year, [])
        return self.ranking


@dataclass
class FeatureMatrix:
    ids: list[str]
    columns: list[str]
    values: np.ndarray
    feature_set: str

    def __post_init__(self):
        if len(set(self.columns)) != len(self.columns):
            raise MatrixAssemblyError("duplicate column names")
        if self.values.shape != (len(self.ids), len(self.columns)):
            raise MatrixAssemblyError(
                f"shape {self.values.shape} does not match {len(self.ids)} ids x {len(self.columns)} columns"
            )

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write("id," + ",".join(self.columns) + "\n")
            for i, row_id in enumerate(self.ids):
                handle.write(row_id + "," + ",".join(repr(v) for v in self.values[i].tolist()) + "\n")

    @classmethod
    def from_csv(cls, path, feature_set: str = "base") -> "FeatureMatrix":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        header = lines[0].split(",")
        if header[0] != "id":
            raise MatrixAssemblyError(f"{path}: first column must be 'id'")
        columns = header[1:]
        ids, rows = [], []
        for line in lines[1:]:
            cells = line.split(",")
            ids.append(cells[0])
            rows.append([float(c) for c in cells[1:]])
        values = np.array(rows, dtype=float) if rows else np.zeros((0, len(columns)))
        return cls(ids=ids, columns=columns, values=values, feature_set=feature_set)


def columns_for(feature_set: str, years: list[int], n_clusters: int) -> list[str]:
    """Deterministic column list of a feature set (before standardization)."""
    if feature_set not in FEATURE_SETS:
        raise MatrixAssemblyError(f"unknown feature set {feature_set!r}; expected one of {FEATURE_SETS}")
    columns = [
        "input_len", "n_fig", "n_ref", "n_sec",
        "fluency", "fluency_missing", "n_author", "arxiv_first",
    ]
    columns.extend(f"year_{year}" for year in years[1:])
    columns.extend(f"cluster_{j:02d}" for j in range(n_clusters))
    if feature_set in ("plus_author", "all"):
        columns.extend(_AUTHOR_COLUMNS)
    if feature_set in ("plus_rev", "plus_revnlp", "all"):
        columns.extend(_REV_COLUMNS)
    if feature_set in ("plus_revnlp", "all"):
        columns.extend(_REVNLP_COLUMNS)
    return columns


class DesignMatrixBuilder(BaseEstimator):
    """Assemble, impute and standardize per-submission feature rows."""

    def __init__(self, feature_set: str = "base", n_clusters: int = 20):
        self.feature_set = feature_set
        self.n_clusters = n_clusters

    def _raw_row(self, corpus: Corpus, sub: Submission, context: FeatureContext) -> list[float | None]:
        labels = context.cluster_labels or {}
        row: list[float | None] = [
            float(sub.input_len), float(sub.n_fig), float(sub.n_ref), float(sub.n_sec),
            sub.fluency,
            0.0 if sub.fluency is not None else 1.0,
            float(len(sub.author_ids)),
            1.0 if sub.arxiv_first else 0.0,
        ]
        years = corpus.config.years
        row.extend(1.0 if sub.year == year else 0.0 for year in years[1:])
        label = labels.get(sub.id)
        if label is not None and not 0 <= label < self.n_clusters:
            raise MatrixAssemblyError(
                f"cluster label {label} for submission {sub.id!r} outside [0, {self.n_clusters})"
            )
        row.extend(1.0 if label == j else 0.0 for j in range(self.n_clusters))

        if self.feature_set in ("plus_author", "all"):
            row.extend(self._author_family(corpus, sub, context))
        if self.feature_set in ("plus_rev", "plus_revnlp", "all"):
            reviews = corpus.reviews_for(sub.id)
            agg = submission_aggregates(reviews) if reviews else None
            if agg is None:
                row.extend([None] * len(_REV_COLUMNS))
            else:
                row.extend([
                    agg.rating_avg, agg.rating_max, agg.rating_min,
                    agg.confidence_avg, agg.confidence_max, agg.confidence_min,
                    float(agg.n_review),
                ])
            if self.feature_set in ("plus_revnlp", "all"):
                if agg is None:
                    row.extend([None] * len(_REVNLP_COLUMNS))
                else:
                    row.extend([
                        agg.sentiment_avg, agg.sentiment_max, agg.sentiment_min,
                        agg.rlen_avg, agg.rlen_max, agg.rlen_min,
                    ])
        return row

    def _matched_rank(self, institution: str, year: int, context: FeatureContext) -> int | None:
        if not hasattr(self, "_rank_cache"):
            self._rank_cache: dict[tuple[str, int], int | None] = {}
        key = (institution, year)
        if key not in self._rank_cache:
            entry = match_institution(institution, context.ranking_for(year),
                                      threshold=context.match_threshold)
            self._rank_cache[key] = entry.rank if entry is not None else None
        return self._rank_cache[key]

    def _author_family(self, corpus: Corpus, sub: Submission, context: FeatureContext):
        authors = corpus.authors_of(sub)

        citations = [
            c for a in authors
            if (c := author_citations_at(corpus, a, sub.year, context.scholar_map)) is not None
        ]
        cite_max = float(max(citations)) if citations else None
        cite_avg = sum(citations) / len(citations) if citations else None

        ranks = []
        if context.ranking_for(sub.year):
            for author in authors:
                for institution in author.institutions_at(sub.year):
                    rank = self._matched_rank(institution, sub.year, context)
                    if rank is not None:
                        ranks.append(rank)
        rank_best = float(min(ranks)) if ranks else None
        rank_avg = sum(ranks) / len(ranks) if ranks else None

        lead = corpus.authors.get(sub.author_ids[0]) if sub.author_ids else None
        lead_score = (
            perceived_gender(lead.first_name, context.gender_dictionary) if lead is not None else None
        )
        scores = [
            s for a in authors
            if (s := perceived_gender(a.first_name, context.gender_dictionary)) is not None
        ]
        avg_score = sum(scores) / len(scores) if scores else None

        geographies = [
            g for a in authors
            if (g := geography_of_author(a, sub.year, context.tld_table, context.tld_overrides)) is not None
        ]
        frac_na = (
            sum(1 for g in geographies if g in NORTH_AMERICA) / len(geographies) if geographies else None
        )

        return [
            cite_max, cite_avg, 0.0 if citations else 1.0,
            rank_best, rank_avg, 0.0 if ranks else 1.0,
            lead_score, 0.0 if lead_score is not None else 1.0,
            avg_score, 0.0 if avg_score is not None else 1.0,
            frac_na, 0.0 if frac_na is not None else 1.0,
        ]

    def _raw_matrix(self, corpus: Corpus, ids: list[str], context: FeatureContext) -> np.ndarray:
        rows = []
        for sid in ids:
            sub = corpus.submissions.get(sid)
            if sub is None:
                raise MatrixAssemblyError(f"unknown submission id {sid!r}")
            rows.append(self._raw_row(corpus, sub, context))
        n_cols = len(self.columns_)
        matrix = np.full((len(rows), n_cols), np.nan)
        for i, row in enumerate(rows):
            for j, value in enumerate(row):
                if value is not None:
                    matrix[i, j] = value
        return matrix

    def fit(self, corpus: Corpus, train_ids: list[str], context: FeatureContext):
        """Learn imputation means and scaling statistics on the training rows."""
        if context.cluster_labels is None:
            raise MatrixAssemblyError("cluster labels are required to assemble the cluster block")
        if not train_ids:
            raise MatrixAssemblyError("training split is empty")
        self.columns_ = columns_for(self.feature_set, corpus.config.years, self.n_clusters)
        raw = self._raw_matrix(corpus, train_ids, context)
        observed = ~np.isnan(raw)
        self.impute_ = np.where(observed.any(axis=0), np.nansum(raw, axis=0) / np.maximum(observed.sum(axis=0), 1), 0.0)
        filled = np.where(observed, raw, self.impute_)
        self.mean_ = filled.mean(axis=0)
        std = filled.std(axis=0)
        self.scale_ = np.where(std > 0.0, std, 1.0)
        return self

    def transform(self, corpus: Corpus, ids: list[str], context: FeatureContext) -> FeatureMatrix:
        raw = self._raw_matrix(corpus, ids, context)
        filled = np.where(np.isnan(raw), self.impute_, raw)
        values = (filled - self.mean_) / self.scale_
        return FeatureMatrix(ids=list(ids), columns=list(self.columns_), values=values,
                             feature_set=self.feature_set)


def build_feature_matrix(
    corpus: Corpus,
    feature_set: str,
    cluster_labels: dict[str, int] | None = None,
    context: FeatureContext | None = None,
    train_years: list[int] | None = None,
    n_clusters: int = 20,
) -> FeatureMatrix:
    """One-shot assembly over the whole corpus (ids in sorted order).

    Standardization statistics come from the rows whose year is in
    ``train_years`` (all rows when not given) and are applied everywhere.
    """
    if context is None:
        context = FeatureContext(cluster_labels=cluster_labels)
    elif cluster_labels is not None:
        context.cluster_labels = cluster_labels
    ids = sorted(corpus.submissions)
    if train_years is None:
        train_ids = ids
    else:
        train_ids = [sid for sid in ids if corpus.submissions[sid].year in train_years]
    builder = DesignMatrixBuilder(feature_set=feature_set, n_clusters=n_clusters)
    builder.fit(corpus, train_ids, context)
    return builder.transform(corpus, ids, context)
