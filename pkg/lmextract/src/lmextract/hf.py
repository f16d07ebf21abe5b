"""Transformer-backed scoring (optional extra: ``lmextract[hf]``).

Model weights load lazily on first use; a failed load (missing dependency,
no network, bad snapshot) raises :class:`ModelLoadError`.  Inputs longer
than the model window are truncated from the start of the text.  Batch
size and device only change throughput, not values (beyond ~1e-6 float
noise from kernel selection).
"""

from __future__ import annotations

from lmextract.records import EMBEDDING_DIM

SENTIMENT_MODEL = "cardiffnlp/twitter-roberta-base-sentiment"
FLUENCY_MODEL = "prithivida/parrot_fluency_model"
EMBEDDING_MODEL = "allenai/specter"


class ModelLoadError(RuntimeError):
    pass


def _load(loader, model_name):
    try:
        return loader()
    except Exception as exc:
        raise ModelLoadError(f"could not load {model_name!r}: {exc}") from exc


class _LazyPipeline:
    def __init__(self, task: str, model_name: str, batch_size: int = 16, device: str = "cpu"):
        self.task = task
        self.model_name = model_name
        self.batch_size = batch_size
        self.device = device
        self._pipeline = None

    def pipeline(self):
        if self._pipeline is None:
            def build():
                from transformers import pipeline

                return pipeline(
                    self.task,
                    model=self.model_name,
                    device=self.device,
                    truncation=True,
                    top_k=None,
                )

            self._pipeline = _load(build, self.model_name)
        return self._pipeline


class HFSentimentBackend(_LazyPipeline):
    """Positive-class probability from a tweet-sentiment classifier."""

    def __init__(self, batch_size: int = 16, device: str = "cpu"):
        super().__init__("text-classification", SENTIMENT_MODEL, batch_size, device)
        self.model_id = f"{SENTIMENT_MODEL}/main"

    def score(self, texts: list[str]) -> list[float | None]:
        out: list[float | None] = [None] * len(texts)
        keep = [(i, t) for i, t in enumerate(texts) if t and t.strip()]
        if not keep:
            return out
        results = self.pipeline()([t for _, t in keep], batch_size=self.batch_size)
        for (i, _), scores in zip(keep, results):
            # three-way head: LABEL_2 is the positive class
            positive = next(s["score"] for s in scores if s["label"] in ("LABEL_2", "positive"))
            out[i] = float(positive)
        return out


class HFFluencyBackend(_LazyPipeline):
    """Probability that text reads as fluent prose."""

    def __init__(self, batch_size: int = 16, device: str = "cpu"):
        super().__init__("text-classification", FLUENCY_MODEL, batch_size, device)
        self.model_id = f"{FLUENCY_MODEL}/main"

    def score(self, texts: list[str]) -> list[float | None]:
        out: list[float | None] = [None] * len(texts)
        keep = [(i, t) for i, t in enumerate(texts) if t and t.strip()]
        if not keep:
            return out
        results = self.pipeline()([t for _, t in keep], batch_size=self.batch_size)
        for (i, _), scores in zip(keep, results):
            fluent = next(s["score"] for s in scores if s["label"] in ("LABEL_1", "fluent"))
            out[i] = float(fluent)
        return out


class HFEmbeddingBackend:
    """Scientific-document embeddings (CLS token of the encoder)."""

    def __init__(self, batch_size: int = 8, device: str = "cpu"):
        self.batch_size = batch_size
        self.device = device
        self.model_id = f"{EMBEDDING_MODEL}/main"
        self._model = None
        self._tokenizer = None

    def _ensure(self):
        if self._model is None:
            def build():
                from transformers import AutoModel, AutoTokenizer

                tokenizer = AutoTokenizer.from_pretrained(EMBEDDING_MODEL)
                model = AutoModel.from_pretrained(EMBEDDING_MODEL).to(self.device).eval()
                return tokenizer, model

            self._tokenizer, self._model = _load(build, EMBEDDING_MODEL)

    def embed(self, texts: list[str]) -> list[list[float] | None]:
        import torch

        self._ensure()
        out: list[list[float] | None] = [None] * len(texts)
        keep = [(i, t) for i, t in enumerate(texts) if t and t.strip()]
        for start in range(0, len(keep), self.batch_size):
            chunk = keep[start:start + self.batch_size]
            encoded = self._tokenizer(
                [t for _, t in chunk], padding=True, truncation=True,
                max_length=512, return_tensors="pt",
            ).to(self.device)
            with torch.no_grad():
                hidden = self._model(**encoded).last_hidden_state[:, 0, :]
            for (i, _), row in zip(chunk, hidden.cpu().numpy()):
                vector = [float(v) for v in row]
                if len(vector) != EMBEDDING_DIM:
                    raise ModelLoadError(
                        f"{EMBEDDING_MODEL} produced dimension {len(vector)}, expected {EMBEDDING_DIM}"
                    )
                out[i] = vector
        return out
