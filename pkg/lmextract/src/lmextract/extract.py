"""The three extraction operations: texts in, feature records out.

Each operation emits one record per input entity (a null value where the
input text was empty), tagged with the backend's model identifier, so
reruns under the same model version are value-identical.
"""

from __future__ import annotations

from lmextract.records import FeatureFileRecord


def _sorted_items(texts: dict[str, str]) -> tuple[list[str], list[str]]:
    ids = sorted(texts)
    return ids, [texts[i] for i in ids]


def extract_sentiment(review_texts: dict[str, str], backend) -> list[FeatureFileRecord]:
    """Positive-sentiment probability per review text."""
    ids, texts = _sorted_items(review_texts)
    scores = backend.score(texts)
    return [
        FeatureFileRecord(entity_id=i, feature="sentiment", value=s, model=backend.model_id)
        for i, s in zip(ids, scores)
    ]


def extract_fluency(submission_texts: dict[str, str], backend) -> list[FeatureFileRecord]:
    """Fluency score per submission full text (higher = plainer prose)."""
    ids, texts = _sorted_items(submission_texts)
    scores = backend.score(texts)
    return [
        FeatureFileRecord(entity_id=i, feature="fluency", value=s, model=backend.model_id)
        for i, s in zip(ids, scores)
    ]


def extract_embeddings(title_abstracts: dict[str, tuple[str, str]], backend) -> list[FeatureFileRecord]:
    """One document embedding per (title, abstract) pair.

    Title and abstract are joined with the separator the document-embedding
    models expect; identical inputs always produce identical vectors.
    """
    ids = sorted(title_abstracts)
    texts = []
    for i in ids:
        title, abstract = title_abstracts[i]
        texts.append(f"{title} [SEP] {abstract}".strip())
    vectors = backend.embed(texts)
    return [
        FeatureFileRecord(entity_id=i, feature="embedding", value=v, model=backend.model_id)
        for i, v in zip(ids, vectors)
    ]
