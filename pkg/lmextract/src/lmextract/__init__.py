"""LM feature extraction: review sentiment, submission fluency, document embeddings."""

__version__ = "0.1.0"

from lmextract.records import EMBEDDING_DIM, FeatureFileRecord, read_feature_file, write_feature_file
from lmextract.extract import extract_embeddings, extract_fluency, extract_sentiment

__all__ = [
    "EMBEDDING_DIM",
    "FeatureFileRecord",
    "extract_embeddings",
    "extract_fluency",
    "extract_sentiment",
    "read_feature_file",
    "write_feature_file",
]
