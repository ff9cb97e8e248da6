"""Retriever label distribution and retrieval-trust weight."""
from dataclasses import dataclass

import numpy as np

from .memory import knn_query, knn_radius
from .simplex import ProbVec


@dataclass(frozen=True)
class RetrievalView:
    rhat: ProbVec
    w_fact: float
    radius: float
    k: int


def retriever_distribution(neighbors, C):
    """Empirical label frequencies among the neighbors."""
    labels = np.asarray(neighbors.labels, dtype=np.int64)
    if labels.size == 0:
        raise ValueError("empty neighbor set")
    if labels.min() < 1 or labels.max() > C:
        raise ValueError(f"neighbor labels must lie in 1..{C}")
    counts = np.bincount(labels, minlength=C + 1)[1:]
    return ProbVec(counts / labels.size)


def trust_weight(neighbors, bandwidth=1.0):
    """Mean of ``exp(-(d_j / bandwidth)^2)`` over neighbor distances.

    With unit bandwidth this is the plain Gaussian-kernel trust weight.
    Very distant neighborhoods can underflow to exactly 0.
    """
    if len(neighbors) == 0:
        raise ValueError("empty neighbor set")
    if not bandwidth > 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    scaled = np.asarray(neighbors.distances) / bandwidth
    return float(np.mean(np.exp(-np.square(scaled))))


def retrieve(store, x, k, bandwidth=1.0):
    """One retrieval: both r-hat and w_fact come from the same neighbor set."""
    nb = knn_query(store, x, k)
    return RetrievalView(
        rhat=retriever_distribution(nb, store.n_labels),
        w_fact=trust_weight(nb, bandwidth),
        radius=knn_radius(nb),
        k=nb.k,
    )
