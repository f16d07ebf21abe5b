"""Spectral clustering of document embeddings under cosine affinity.

Affinity is cosine similarity clipped at zero, the Laplacian is the
symmetric normalized one, and the spectral embedding (row-normalized
eigenvectors of the k smallest eigenvalues) is clustered by a seeded
k-means with a fixed restart count.  Everything downstream of the seed is
deterministic; input order never matters because ids are sorted first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from revaudit.errors import AuditError, DegenerateInputError


def _kmeans_pp_init(X, k, rng):
    """k-means++ seeding; falls back to unchosen indices when all distances vanish."""
    n = X.shape[0]
    chosen = [int(rng.randint(n))]
    d2 = np.sum((X - X[chosen[0]]) ** 2, axis=1)
    for _ in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            for idx in range(n):
                if idx not in chosen:
                    chosen.append(idx)
                    break
            else:
                chosen.append(chosen[-1])
            d2 = np.minimum(d2, np.sum((X - X[chosen[-1]]) ** 2, axis=1))
            continue
        r = rng.random_sample() * total
        idx = int(np.searchsorted(np.cumsum(d2), r, side="right"))
        idx = min(idx, n - 1)
        chosen.append(idx)
        d2 = np.minimum(d2, np.sum((X - X[idx]) ** 2, axis=1))
    return X[chosen].copy()


def _lloyd(X, centers, max_iter=300):
    for _ in range(max_iter):
        # argmin over squared distances; ties resolve to the lowest label
        d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = np.argmin(d2, axis=1)
        new_centers = centers.copy()
        for j in range(centers.shape[0]):
            mask = labels == j
            if mask.any():
                new_centers[j] = X[mask].mean(axis=0)
            else:
                # re-seed an emptied cluster at the point worst served
                worst = int(np.argmax(d2[np.arange(len(labels)), labels]))
                new_centers[j] = X[worst]
        if np.array_equal(new_centers, centers):
            break
        centers = new_centers
    d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)
    inertia = float(d2[np.arange(len(labels)), labels].sum())
    return labels, inertia


def _kmeans(X, k, seed, n_restarts=10):
    rng = np.random.RandomState(seed)
    best_labels, best_inertia = None, np.inf
    for _ in range(n_restarts):
        centers = _kmeans_pp_init(X, k, rng)
        labels, inertia = _lloyd(X, centers)
        if inertia < best_inertia:
            best_labels, best_inertia = labels, inertia
    return best_labels


@dataclass
class ClusterAssignment:
    labels: dict[str, int]
    k: int


class SpectralCosineClustering(BaseEstimator):
    """sklearn-style clusterer over raw embedding rows."""

    def __init__(self, n_clusters: int = 20, random_state: int = 0, n_restarts: int = 10):
        self.n_clusters = n_clusters
        self.random_state = random_state
        self.n_restarts = n_restarts

    def fit_predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ValueError("expected a 2-d array of embeddings")
        n = X.shape[0]
        if n < self.n_clusters:
            raise ValueError(f"need at least {self.n_clusters} items, got {n}")
        norms = np.linalg.norm(X, axis=1)
        if np.any(norms == 0.0):
            raise DegenerateInputError("zero embedding vector")

        unit = X / norms[:, None]
        affinity = np.clip(unit @ unit.T, 0.0, None)
        np.fill_diagonal(affinity, 1.0)
        inv_sqrt_deg = 1.0 / np.sqrt(affinity.sum(axis=1))
        laplacian = np.eye(n) - inv_sqrt_deg[:, None] * affinity * inv_sqrt_deg[None, :]
        try:
            _, vectors = np.linalg.eigh(laplacian)
        except np.linalg.LinAlgError as exc:
            raise AuditError(f"eigendecomposition failed: {exc}") from exc
        basis = vectors[:, : self.n_clusters]
        row_norms = np.linalg.norm(basis, axis=1)
        row_norms[row_norms == 0.0] = 1.0
        basis = basis / row_norms[:, None]

        labels = _kmeans(basis, self.n_clusters, self.random_state, self.n_restarts)
        self.labels_ = labels
        return labels

    def fit(self, X, y=None):
        self.fit_predict(X)
        return self


def spectral_cluster(embeddings: dict[str, list[float]], k: int = 20, seed: int = 0) -> ClusterAssignment:
    """Cluster a keyed embedding map; deterministic for fixed (inputs, seed)."""
    ids = sorted(embeddings)
    if len(ids) < k:
        raise ValueError(f"need at least {k} embeddings, got {len(ids)}")
    X = np.array([embeddings[i] for i in ids], dtype=float)
    labels = SpectralCosineClustering(n_clusters=k, random_state=seed).fit_predict(X)
    return ClusterAssignment(labels={i: int(label) for i, label in zip(ids, labels)}, k=k)
