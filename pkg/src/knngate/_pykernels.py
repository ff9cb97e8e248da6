"""Pure numpy k-NN scan; reference fallback for the compiled kernel.

Distances are accumulated one coordinate at a time, in coordinate order, so
the floating-point values match the compiled kernel bit for bit.
"""
import numpy as np

NORM_CODES = {"l2": 0, "l1": 1, "linf": 2}


def distances(points, x, norm_code):
    points = np.asarray(points, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    d = points.shape[1]
    if norm_code == 0:
        acc = np.square(points[:, 0] - x[0])
        for j in range(1, d):
            acc += np.square(points[:, j] - x[j])
        return np.sqrt(acc)
    if norm_code == 1:
        acc = np.abs(points[:, 0] - x[0])
        for j in range(1, d):
            acc += np.abs(points[:, j] - x[j])
        return acc
    if norm_code == 2:
        acc = np.abs(points[:, 0] - x[0])
        for j in range(1, d):
            np.maximum(acc, np.abs(points[:, j] - x[j]), out=acc)
        return acc
    raise ValueError(f"unknown norm code {norm_code}")


def knn_scan(points, x, k, norm_code):
    """Return ``(indices, distances)`` of the k nearest points.

    Ordered by distance, ties by ascending index.
    """
    dist = distances(points, x, norm_code)
    n = dist.size
    if k >= n:
        order = np.argsort(dist, kind="stable")[:k]
    else:
        kth = np.partition(dist, k - 1)[k - 1]
        cand = np.flatnonzero(dist <= kth)
        order = cand[np.argsort(dist[cand], kind="stable")[:k]]
    return order.astype(np.int64), dist[order]
