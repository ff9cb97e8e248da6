"""Categorical distributions over labels ``1..C``.

Labels are 1-based everywhere in the public API; the backing arrays are
0-based, so label ``y`` lives at ``probs[y - 1]``.
"""
import math

import numpy as np

NORMALIZATION_TOL = 1e-12


class ProbVec:
    """Immutable probability vector over ``C`` labels."""

    __slots__ = ("_p",)

    def __init__(self, probs):
        p = np.array(probs, dtype=np.float64).reshape(-1)
        if p.size < 1:
            raise ValueError("a distribution needs at least one label")
        if not np.all(np.isfinite(p)):
            raise ValueError("probabilities must be finite")
        if np.any(p < 0.0) or np.any(p > 1.0 + NORMALIZATION_TOL):
            raise ValueError(f"probabilities must lie in [0, 1], got {p}")
        total = p.sum()
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        if total != 1.0:
            p = p / total
        np.clip(p, 0.0, 1.0, out=p)
        p.setflags(write=False)
        self._p = p

    @classmethod
    def uniform(cls, C):
        return cls(np.full(C, 1.0 / C))

    @classmethod
    def point_mass(cls, label, C):
        check_label(label, C)
        p = np.zeros(C)
        p[label - 1] = 1.0
        return cls(p)

    @property
    def probs(self):
        return self._p

    @property
    def C(self):
        return self._p.size

    def at(self, label):
        """Probability of ``label`` (1-based)."""
        check_label(label, self.C)
        return float(self._p[label - 1])

    def __len__(self):
        return self._p.size

    def __iter__(self):
        return iter(self._p.tolist())

    def __array__(self, dtype=None, copy=None):
        return self._p if dtype is None else self._p.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, ProbVec):
            return NotImplemented
        return self.C == other.C and bool(np.array_equal(self._p, other._p))

    def __hash__(self):
        return hash(self._p.tobytes())

    def __repr__(self):
        return f"ProbVec({self._p.tolist()})"


def check_label(label, C):
    if not 1 <= int(label) <= C:
        raise ValueError(f"label {label} outside 1..{C}")


def _same_size(p, q):
    if p.C != q.C:
        raise ValueError(f"dimension mismatch: {p.C} labels vs {q.C}")


def cross_entropy(p, q):
    """Sum of ``p_y * -log q_y`` in nats.

    Zero-mass labels of ``p`` contribute nothing; the result is ``inf`` when
    ``q`` puts zero mass on a label that ``p`` supports.
    """
    _same_size(p, q)
    pp, qq = p.probs, q.probs
    support = pp > 0.0
    if np.any(qq[support] == 0.0):
        return math.inf
    return float(-np.sum(pp[support] * np.log(qq[support])))


def entropy(p):
    return cross_entropy(p, p)


def modal_label(p):
    """Smallest label attaining the maximum probability."""
    return int(np.argmax(p.probs)) + 1


def top_gap(p):
    """Gap between the largest and the second-largest probability.

    With a single label the runner-up mass is taken to be 0.
    """
    if p.C == 1:
        return float(p.probs[0])
    top2 = np.sort(p.probs)[-2:]
    return float(top2[1] - top2[0])


def tv_distance(p, q):
    """L1 distance ``sum_y |p_y - q_y|`` (twice the total variation)."""
    _same_size(p, q)
    return float(np.sum(np.abs(p.probs - q.probs)))


def l1_distance(p, q):
    return tv_distance(p, q)
