"""Per-submission aggregates and dichotomized sensitive attributes."""

from __future__ import annotations

from dataclasses import dataclass

from revaudit.corpus.model import Author, Corpus, Review, Submission
from revaudit.errors import UndefinedStatisticError
from revaudit.features.gender import perceived_gender
from revaudit.features.geography import NORTH_AMERICA, geography_of_author
from revaudit.linkage import match_institution

TOP_PERCENTILE = 99
TOP_RANK_CUTOFF = 10
FEMALE_SCORE_CUTOFF = 0.5


@dataclass
class SubmissionAggregates:
    rating_avg: float
    rating_max: float
    rating_min: float
    confidence_avg: float
    confidence_max: float
    confidence_min: float
    rlen_avg: float
    rlen_max: float
    rlen_min: float
    sentiment_avg: float | None
    sentiment_max: float | None
    sentiment_min: float | None
    n_review: int


def submission_aggregates(reviews: list[Review]) -> SubmissionAggregates:
    """Mean and extrema of rating, confidence, review length and sentiment.

    Sentiment aggregates use only the reviews where sentiment is present
    and are missing when no review carries one.
    """
    if not reviews:
        raise UndefinedStatisticError("aggregates need at least one review")
    ratings = [r.rating for r in reviews]
    confidences = [r.confidence for r in reviews]
    lengths = [r.text_len for r in reviews]
    sentiments = [r.sentiment for r in reviews if r.sentiment is not None]
    return SubmissionAggregates(
        rating_avg=sum(ratings) / len(ratings),
        rating_max=max(ratings),
        rating_min=min(ratings),
        confidence_avg=sum(confidences) / len(confidences),
        confidence_max=max(confidences),
        confidence_min=min(confidences),
        rlen_avg=sum(lengths) / len(lengths),
        rlen_max=max(lengths),
        rlen_min=min(lengths),
        sentiment_avg=sum(sentiments) / len(sentiments) if sentiments else None,
        sentiment_max=max(sentiments) if sentiments else None,
        sentiment_min=min(sentiments) if sentiments else None,
        n_review=len(reviews),
    )


def author_citations_at(corpus: Corpus, author: Author, year: int, scholar_map=None) -> int | None:
    """Citation count of the author's resolved scholar profile at a year."""
    scholar_id = author.scholar_id
    if scholar_map is not None and author.id in scholar_map:
        scholar_id = scholar_map[author.id]
    if scholar_id is None:
        return None
    profile = corpus.profiles.get(scholar_id)
    if profile is None:
        return None
    return profile.citations_by_year.get(year)


def citation_percentile_table(corpus: Corpus, year: int, scholar_map=None) -> dict[int, int]:
    """Empirical citation quantiles over the year's submitting authors.

    Nearest-rank on the >=-side: the p-th percentile is the k-th largest
    count with k = ceil((100 - p)/100 * n), so values at or above the
    boundary are exactly the top (100 - p) percent plus ties.
    """
    author_ids = {
        aid
        for sub in corpus.submissions.values()
        if sub.year == year
        for aid in sub.author_ids
    }
    counts = []
    for aid in sorted(author_ids):
        author = corpus.authors.get(aid)
        if author is None:
            continue
        count = author_citations_at(corpus, author, year, scholar_map)
        if count is not None:
            counts.append(count)
    if not counts:
        raise UndefinedStatisticError(f"no citation data for year {year}")
    counts.sort(reverse=True)
    n = len(counts)
    table = {}
    for p in range(1, 101):
        k = max(1, -(-((100 - p) * n) // 100))  # ceil in integer arithmetic
        table[p] = counts[k - 1]
    return table


@dataclass
class SensitiveAttributes:
    """Dichotomized group flags; None marks an underivable flag, and such
    rows are excluded from the corresponding group analysis upstream."""

    majority_north_america: bool | None
    no_us_author: bool | None
    leading_author_female: bool | None
    top_percent_author: bool | None
    top_institution: bool | None

    @property
    def provenance(self) -> dict[str, str]:
        return {
            name: "missing" if getattr(self, name) is None else "derived"
            for name in (
                "majority_north_america",
                "no_us_author",
                "leading_author_female",
                "top_percent_author",
                "top_institution",
            )
        }


def sensitive_attributes(
    sub: Submission,
    corpus: Corpus,
    ranking,
    percentile_table: dict[int, int] | None,
    gender_dictionary: dict[str, float],
    scholar_map=None,
    tld_table=None,
    tld_overrides=None,
    top_rank_cutoff: int = TOP_RANK_CUTOFF,
    top_percentile: int = TOP_PERCENTILE,
    match_threshold: float = 0.8,
) -> SensitiveAttributes:
    """Derive the four dichotomized flags for one submission.

    Geography: strict majority of the resolvable author geographies in
    North America; an exact tie or no resolvable author yields a missing
    flag.  Gender: leading author's male score below 0.5.  Author
    prestige: the best author citation count at the submission year
    reaches the given percentile boundary.  Institution prestige: the best
    matched institution rank is within the cutoff.
    """
    authors = corpus.authors_of(sub)

    geographies = [
        geography_of_author(a, sub.year, table=tld_table, overrides=tld_overrides) for a in authors
    ]
    resolved = [g for g in geographies if g is not None]
    if not resolved:
        majority_na = None
        no_us = None
    else:
        na_count = sum(1 for g in resolved if g in NORTH_AMERICA)
        if 2 * na_count == len(resolved):
            majority_na = None  # exact tie
        else:
            majority_na = 2 * na_count > len(resolved)
        no_us = not any(g == "US" for g in resolved)

    leading_female = None
    leading = corpus.authors.get(sub.author_ids[0]) if sub.author_ids else None
    if leading is not None:
        score = perceived_gender(leading.first_name, gender_dictionary)
        if score is not None and score != FEMALE_SCORE_CUTOFF:
            leading_female = score < FEMALE_SCORE_CUTOFF

    top_author = None
    if percentile_table is not None:
        citations = [
            c for a in authors
            if (c := author_citations_at(corpus, a, sub.year, scholar_map)) is not None
        ]
        if citations:
            top_author = max(citations) >= percentile_table[top_percentile]

    top_institution = None
    if ranking:
        best_rank = None
        for author in authors:
            for institution in author.institutions_at(sub.year):
                entry = match_institution(institution, ranking, threshold=match_threshold)
                if entry is not None and (best_rank is None or entry.rank < best_rank):
                    best_rank = entry.rank
        if best_rank is not None:
            top_institution = best_rank <= top_rank_cutoff

    return SensitiveAttributes(
        majority_north_america=majority_na,
        no_us_author=no_us,
        leading_author_female=leading_female,
        top_percent_author=top_author,
        top_institution=top_institution,
    )
