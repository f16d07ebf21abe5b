"""String-similarity primitives and entity resolution across sources.

Covers the three matching procedures (author institution against a ranking
table, submission against its arXiv candidate pool, author against scholar
profiles), keyword clustering, and the data-driven per-year institution
ranking by cumulative accepted papers.

All functions are pure; candidate ordering effects are removed by explicit
deterministic tie-breaking.
"""

from __future__ import annotations

import datetime
from dataclasses import dataclass

from revaudit.corpus.io import canonical_institution
from revaudit.corpus.model import ArxivCandidate, Author, Corpus, RankingEntry, ScholarProfile, Submission
from revaudit.errors import DanglingReferenceError, DegenerateInputError

INSTITUTION_MATCH_THRESHOLD = 0.8
SCHOLAR_MATCH_THRESHOLD = 0.8
ARXIV_MATCH_THRESHOLD = 0.5
KEYWORD_DISTANCE_THRESHOLD = 2


def levenshtein(a: str, b: str) -> int:
    """Raw edit distance (insert / delete / substitute, unit costs)."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost))
        prev = cur
    return prev[-1]


def normalized_levenshtein(a: str, b: str) -> float:
    """Similarity in [0, 1]: 1 - distance / max length, on case-folded inputs."""
    a, b = a.casefold(), b.casefold()
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / longest


def jaccard(a: set, b: set) -> float:
    """|a & b| / |a | b|, with 1.0 for two empty sets."""
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def cosine_similarity(u, v) -> float:
    if len(u) != len(v):
        raise DegenerateInputError(f"dimension mismatch: {len(u)} vs {len(v)}")
    dot = uu = vv = 0.0
    for x, y in zip(u, v):
        dot += x * y
        uu += x * x
        vv += y * y
    if uu == 0.0 or vv == 0.0:
        raise DegenerateInputError("cosine similarity is undefined for a zero vector")
    return dot / (uu ** 0.5 * vv ** 0.5)


def match_institution(
    name: str, ranking: list[RankingEntry], threshold: float = INSTITUTION_MATCH_THRESHOLD
) -> RankingEntry | None:
    """Best fuzzy match of an institution name in a ranking table.

    Returns the entry maximizing the normalized Levenshtein similarity if
    that maximum reaches the threshold, else None.  Ties go to the better
    (smaller) rank.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    key = canonical_institution(name)
    best: RankingEntry | None = None
    best_sim = 0.0
    for entry in ranking:
        # 1 - |len difference| / max length bounds the similarity from above,
        # so entries that cannot beat the current best are skipped unscored.
        longest = max(len(key), len(entry.institution))
        if longest > 0:
            bound = 1.0 - abs(len(key) - len(entry.institution)) / longest
            if bound < threshold or bound < best_sim:
                continue
        sim = normalized_levenshtein(key, entry.institution)
        if sim < threshold:
            continue
        if best is None or sim > best_sim or (sim == best_sim and entry.rank < best.rank):
            best, best_sim = entry, sim
    return best


@dataclass
class ArxivMatch:
    submission_id: str
    arxiv_id: str
    author_jaccard: float
    author_levenshtein: float
    embedding_cosine: float | None
    preprint_before_review: bool

    @property
    def embedding_checked(self) -> bool:
        return self.embedding_cosine is not None


def _surname_key(names) -> str:
    """Sorted, case-folded surnames concatenated into one comparison string."""
    surnames = sorted(n.casefold().split()[-1] for n in names if n.strip())
    return " ".join(surnames)


def match_arxiv(
    sub: Submission,
    authors: list[Author],
    candidates: list[ArxivCandidate],
    review_release: datetime.date,
    threshold: float = ARXIV_MATCH_THRESHOLD,
    mode: str = "and",
) -> ArxivMatch | None:
    """Link a submission to the best qualifying preprint candidate.

    In the default "and" mode a candidate qualifies when author Jaccard,
    author Levenshtein and (when embeddings exist on both sides) the
    title-abstract embedding cosine all reach the threshold; the "or" mode
    (for sensitivity analysis) requires any one test to pass.  Among
    qualifying candidates the one with the highest cosine wins; candidates
    without a comparable embedding rank below any candidate with one and
    fall back to their author scores.  Ties break on the candidate id, so
    the result is invariant under permutations of the candidate list.
    """
    if mode not in ("and", "or"):
        raise ValueError(f"mode must be 'and' or 'or', got {mode!r}")
    sub_names = {a.full_name.casefold() for a in authors}
    sub_surnames = _surname_key(a.full_name for a in authors)
    best: ArxivMatch | None = None
    best_key: tuple | None = None
    for cand in candidates:
        cand_names = {n.casefold() for n in cand.authors}
        author_jac = jaccard(sub_names, cand_names)
        author_lev = normalized_levenshtein(sub_surnames, _surname_key(cand.authors))
        cosine = None
        if sub.embedding is not None and cand.embedding is not None:
            cosine = cosine_similarity(sub.embedding, cand.embedding)
        passed = [author_jac >= threshold, author_lev >= threshold]
        if cosine is not None:
            passed.append(cosine >= threshold)
        if mode == "and" and not all(passed):
            continue
        if mode == "or" and not any(passed):
            continue
        # Sort key: embedding-backed matches first (by cosine), then author
        # similarities; ties on all scores break toward the smaller id.
        key = (
            1 if cosine is not None else 0,
            cosine if cosine is not None else 0.0,
            author_jac,
            author_lev,
        )
        if best_key is None or key > best_key or (key == best_key and cand.arxiv_id < best.arxiv_id):
            best_key = key
            best = ArxivMatch(
                submission_id=sub.id,
                arxiv_id=cand.arxiv_id,
                author_jaccard=author_jac,
                author_levenshtein=author_lev,
                embedding_cosine=cosine,
                preprint_before_review=cand.first_public_date < review_release,
            )
    return best


def match_scholar(
    author: Author,
    profiles: list[ScholarProfile],
    threshold: float = SCHOLAR_MATCH_THRESHOLD,
) -> ScholarProfile | None:
    """Resolve an author to a scholar profile.

    An explicitly reported scholar id wins outright (and must resolve).
    Otherwise the search string "name + latest institution" is compared
    against each profile's "name + institution"; if nothing reaches the
    threshold the comparison is retried on the name alone.
    """
    if author.scholar_id is not None:
        for profile in profiles:
            if profile.scholar_id == author.scholar_id:
                return profile
        raise DanglingReferenceError(
            f"author {author.id!r} reports scholar id {author.scholar_id!r}, not among profiles"
        )

    def best_match(query: str, profile_key) -> tuple[ScholarProfile | None, float]:
        best, best_sim = None, 0.0
        for profile in profiles:
            sim = normalized_levenshtein(query, profile_key(profile))
            if sim > best_sim or (
                sim == best_sim and best is not None and profile.scholar_id < best.scholar_id
            ):
                best, best_sim = profile, sim
        return best, best_sim

    institution = author.latest_institution()
    if institution is not None:
        found, sim = best_match(
            f"{author.full_name} {institution}",
            lambda p: f"{p.name} {p.institution}",
        )
        if found is not None and sim >= threshold:
            return found
    found, sim = best_match(author.full_name, lambda p: p.name)
    if found is not None and sim >= threshold:
        return found
    return None


@dataclass
class KeywordCluster:
    cluster_id: int
    members: set[str]
    representative: str


def cluster_keywords(keywords, distance_threshold: int = KEYWORD_DISTANCE_THRESHOLD) -> list[KeywordCluster]:
    """Single-linkage clusters of keywords under a raw edit-distance cap.

    Two keywords are connected when their Levenshtein distance is at most
    the threshold; clusters are the connected components.  Cluster ids are
    assigned in order of the (lexicographically smallest) representatives.
    """
    if distance_threshold < 0:
        raise ValueError("distance_threshold must be >= 0")
    vocab = sorted(set(keywords))
    parent = list(range(len(vocab)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(vocab)):
        for j in range(i + 1, len(vocab)):
            # Length difference lower-bounds the edit distance.
            if abs(len(vocab[i]) - len(vocab[j])) > distance_threshold:
                continue
            if levenshtein(vocab[i], vocab[j]) <= distance_threshold:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)

    groups: dict[int, set[str]] = {}
    for i, word in enumerate(vocab):
        groups.setdefault(find(i), set()).add(word)
    clusters = [
        KeywordCluster(0, members, min(members)) for members in groups.values()
    ]
    clusters.sort(key=lambda c: c.representative)
    for idx, cluster in enumerate(clusters):
        cluster.cluster_id = idx
    return clusters


@dataclass
class IclrRankingTable:
    """Per-year institution ranks by cumulative accepted papers."""

    ranks: dict[tuple[int, str], int]

    def rank_of(self, year: int, institution: str) -> int | None:
        return self.ranks.get((year, canonical_institution(institution)))

    def entries_for(self, year: int) -> list[RankingEntry]:
        from revaudit.corpus.model import RankingSource

        return [
            RankingEntry(inst, rank, RankingSource.ICLR, year)
            for (y, inst), rank in sorted(self.ranks.items())
            if y == year
        ]


def submission_institutions(corpus: Corpus, sub: Submission) -> set[str]:
    """Canonical institutions of the submission's authors at its year."""
    names: set[str] = set()
    for author in corpus.authors_of(sub):
        for institution in author.institutions_at(sub.year):
            names.add(canonical_institution(institution))
    return names


def iclr_ranking(corpus: Corpus, target_year: int) -> IclrRankingTable:
    """Rank institutions by accepted-paper counts in years before the target.

    Ties share the smaller rank and the next rank is skipped (competition
    ranking); institutions with no accepted papers are omitted.
    """
    counts: dict[str, int] = {}
    for sub in corpus.submissions.values():
        if sub.year >= target_year or not sub.accepted:
            continue
        for institution in submission_institutions(corpus, sub):
            counts[institution] = counts.get(institution, 0) + 1
    ordered = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    ranks: dict[tuple[int, str], int] = {}
    prev_count, prev_rank = None, 0
    for position, (institution, count) in enumerate(ordered, start=1):
        rank = prev_rank if count == prev_count else position
        ranks[(target_year, institution)] = rank
        prev_count, prev_rank = count, rank
    return IclrRankingTable(ranks)


def write_arxiv_matches(matches: list[ArxivMatch], path) -> None:
    """Serialize matches: one comma-separated record per line."""
    lines = []
    for m in sorted(matches, key=lambda m: m.submission_id):
        cosine = "" if m.embedding_cosine is None else repr(m.embedding_cosine)
        lines.append(
            f"{m.submission_id},{m.arxiv_id},{m.author_jaccard!r},"
            f"{m.author_levenshtein!r},{cosine},{str(m.preprint_before_review).lower()}"
        )
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + ("\n" if lines else ""))
