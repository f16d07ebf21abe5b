"""Scoring backends.

Each extractor takes a backend object exposing ``model_id`` plus a scoring
method; the offline backends below are deterministic pure functions and
need no downloaded weights, so they also serve as the test backends.  The
transformer-based backends live in ``lmextract.hf``.
"""

from __future__ import annotations

import hashlib
import math
import re

import numpy as np

from lmextract.records import EMBEDDING_DIM

_WORD = re.compile(r"[a-z]+")

POSITIVE_WORDS = frozenset("""
accept excellent outstanding great good strong solid novel interesting clear
clean elegant impressive convincing thorough rigorous well sound insightful
valuable significant effective robust useful important compelling promising
creative correct careful complete easy readable intuitive principled
""".split())

NEGATIVE_WORDS = frozenset("""
reject poor weak bad unclear confusing flawed wrong incorrect trivial
limited incremental insufficient missing lacking questionable unconvincing
sloppy vague misleading overstated broken incomplete hard difficult messy
noisy marginal boring derivative unsound problematic disappointing
""".split())


class LexiconSentimentBackend:
    """Valence-word counting mapped onto [0, 1]; 0.5 is neutral."""

    model_id = "lexicon-sentiment/1.0"

    def score(self, texts: list[str]) -> list[float | None]:
        out: list[float | None] = []
        for text in texts:
            if not text or not text.strip():
                out.append(None)
                continue
            words = _WORD.findall(text.casefold())
            pos = sum(1 for w in words if w in POSITIVE_WORDS)
            neg = sum(1 for w in words if w in NEGATIVE_WORDS)
            if pos + neg == 0:
                out.append(0.5)
            else:
                out.append(0.5 + 0.5 * (pos - neg) / (pos + neg))
        return out


_CLEAN_TOKEN = re.compile(r"[A-Za-z]+[.,;:!?')\"]*$")
_MATHY = re.compile(r"[\\^_{}=+$|<>~\[\]]|\d")


class HeuristicFluencyBackend:
    """Fraction of grammatical-looking tokens; equations and symbol soup
    drag the score down, so plainer prose scores higher."""

    model_id = "heuristic-fluency/1.0"

    def score(self, texts: list[str]) -> list[float | None]:
        out: list[float | None] = []
        for text in texts:
            tokens = text.split()
            if not tokens:
                out.append(None)
                continue
            clean = sum(
                1 for t in tokens if _CLEAN_TOKEN.match(t) and not _MATHY.search(t)
            )
            out.append(clean / len(tokens))
        return out


class HashedEmbeddingBackend:
    """Feature-hashed character n-grams, L2-normalized, 768-dimensional.

    Deterministic for fixed (text, salt); shared n-grams push related texts
    toward higher cosine similarity.
    """

    def __init__(self, salt: str = "v1", n_min: int = 3, n_max: int = 5):
        self.salt = salt
        self.n_min = n_min
        self.n_max = n_max
        self.model_id = f"hashed-ngram-embedding/{salt}"

    def embed(self, texts: list[str]) -> list[list[float] | None]:
        out: list[list[float] | None] = []
        for text in texts:
            normalized = " ".join(text.casefold().split())
            if not normalized:
                out.append(None)
                continue
            vec = np.zeros(EMBEDDING_DIM)
            for n in range(self.n_min, self.n_max + 1):
                for i in range(len(normalized) - n + 1):
                    gram = normalized[i:i + n]
                    digest = hashlib.blake2b(
                        f"{self.salt}|{gram}".encode("utf-8"), digest_size=8
                    ).digest()
                    bucket = int.from_bytes(digest[:4], "little") % EMBEDDING_DIM
                    sign = 1.0 if digest[4] & 1 else -1.0
                    vec[bucket] += sign
            norm = math.sqrt(float(vec @ vec))
            if norm == 0.0:
                out.append(None)
                continue
            out.append([float(v) for v in vec / norm])
        return out


def default_backend(feature: str, kind: str = "offline"):
    """Backend factory for the CLI: kind is "offline" or "hf"."""
    if kind == "offline":
        return {
            "sentiment": LexiconSentimentBackend,
            "fluency": HeuristicFluencyBackend,
            "embedding": HashedEmbeddingBackend,
        }[feature]()
    if kind == "hf":
        from lmextract import hf

        return {
            "sentiment": hf.HFSentimentBackend,
            "fluency": hf.HFFluencyBackend,
            "embedding": hf.HFEmbeddingBackend,
        }[feature]()
    raise ValueError(f"unknown backend kind {kind!r}; expected 'offline' or 'hf'")
