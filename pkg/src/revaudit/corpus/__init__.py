from revaudit.corpus.model import (
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
    reviews_per_submission,
)
from revaudit.corpus.io import load_corpus, read_config, write_corpus
from revaudit.corpus.validate import ValidationReport, Violation, validate_corpus

__all__ = [
    "Affiliation",
    "ArxivCandidate",
    "Author",
    "Corpus",
    "CorpusConfig",
    "Decision",
    "RankingEntry",
    "RankingSource",
    "ReportedGender",
    "Review",
    "ScholarProfile",
    "Submission",
    "ValidationReport",
    "Violation",
    "load_corpus",
    "read_config",
    "reviews_per_submission",
    "validate_corpus",
    "write_corpus",
]
