"""Structural validation of an assembled corpus.

Violations are data, not errors: the validator never raises, it reports.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from revaudit.corpus.model import Corpus


@dataclass
class Violation:
    kind: str       # entity kind, e.g. "review"
    entity_id: str
    field: str
    message: str

    def __str__(self) -> str:
        return f"{self.kind} {self.entity_id!r}: field {self.field!r}: {self.message}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    def add(self, kind: str, entity_id: str, field_name: str, message: str) -> None:
        self.violations.append(Violation(kind, entity_id, field_name, message))

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        if self.ok:
            return "corpus valid: no violations"
        lines = [f"{len(self.violations)} violations:"]
        lines.extend(f"  - {v}" for v in self.violations)
        return "\n".join(lines)


def validate_corpus(corpus: Corpus) -> ValidationReport:
    """Check every structural invariant; empty report iff the corpus is valid."""
    report = ValidationReport()
    config = corpus.config

    for sub in corpus.submissions.values():
        for fname, message in sub.field_violations(config):
            report.add("submission", sub.id, fname, message)
        for aid in sub.author_ids:
            if aid not in corpus.authors:
                report.add("submission", sub.id, "author_ids", f"unresolved author id {aid!r}")

    for review in corpus.reviews.values():
        sub = corpus.submissions.get(review.submission_id)
        if sub is None:
            report.add("review", review.id, "submission_id",
                       f"unresolved submission id {review.submission_id!r}")
            continue
        for fname, message in review.field_violations(config, year=sub.year):
            report.add("review", review.id, fname, message)

    for author in corpus.authors.values():
        for fname, message in author.field_violations(config):
            report.add("author", author.id, fname, message)
        if author.scholar_id is not None and author.scholar_id not in corpus.profiles:
            report.add("author", author.id, "scholar_id",
                       f"unresolved scholar id {author.scholar_id!r}")

    for profile in corpus.profiles.values():
        for fname, message in profile.field_violations(config):
            report.add("profile", profile.scholar_id, fname, message)

    seen: set[tuple] = set()
    for i, entry in enumerate(corpus.rankings):
        for fname, message in entry.field_violations(config):
            report.add("ranking", entry.institution, fname, message)
        key = (entry.source, entry.year, entry.institution)
        if key in seen:
            report.add("ranking", entry.institution, "rank",
                       f"duplicate rank entry for source {entry.source.value} year {entry.year}")
        seen.add(key)

    for sid, pool in corpus.arxiv_pools.items():
        if sid not in corpus.submissions:
            report.add("arxiv_pool", sid, "submission_id", f"unresolved submission id {sid!r}")
        for cand in pool:
            for fname, message in cand.field_violations(config):
                report.add("arxiv_candidate", cand.arxiv_id, fname, message)

    return report
