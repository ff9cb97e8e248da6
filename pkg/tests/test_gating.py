import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from knngate.gating import GateInputs, hard_gate, local_objective, mixture, \
    objective_derivative, smooth, soft_gate
from knngate.simplex import ProbVec, cross_entropy

from conftest import random_probvec


def inputs(p, q, r, w=1.0, zeta=0.0, smoothing=0.0):
    return GateInputs(ProbVec(p), ProbVec(q), ProbVec(r), w, zeta, smoothing)


def test_hard_gate_switches_to_better_retriever():
    dec = hard_gate(inputs([0.9, 0.1], [0.5, 0.5], [0.9, 0.1]))
    assert dec.lam == 1.0
    assert dec.mixed.probs.tolist() == [0.9, 0.1]


def test_hard_gate_tie_keeps_base():
    dec = hard_gate(inputs([0.5, 0.5], [0.5, 0.5], [0.5, 0.5]))
    assert dec.lam == 0.0


def test_penalty_blocks_switch():
    gain = cross_entropy(ProbVec([0.9, 0.1]), ProbVec([0.5, 0.5])) - \
        cross_entropy(ProbVec([0.9, 0.1]), ProbVec([0.9, 0.1]))
    assert hard_gate(inputs([0.9, 0.1], [0.5, 0.5], [0.9, 0.1], 0.5, 1.9 * gain)).lam == 1.0
    assert hard_gate(inputs([0.9, 0.1], [0.5, 0.5], [0.9, 0.1], 0.5, 2.1 * gain)).lam == 0.0


def test_infinite_retriever_loss_never_switches():
    dec = hard_gate(inputs([0.5, 0.5], [0.5, 0.5], [1.0, 0.0]))
    assert dec.lam == 0.0 and dec.ellr == math.inf
    assert soft_gate(inputs([0.5, 0.5], [0.5, 0.5], [1.0, 0.0])).lam < 1.0


def test_both_endpoints_infinite_soft_gate_is_interior():
    dec = soft_gate(inputs([0.5, 0.5], [1.0, 0.0], [0.0, 1.0]))
    assert dec.lam == pytest.approx(0.5, abs=1e-8)


def test_mixture_endpoints_return_inputs():
    q, r = ProbVec([0.3, 0.7]), ProbVec([0.6, 0.4])
    assert mixture(q, r, 0.0) is q and mixture(q, r, 1.0) is r
    assert mixture(q, r, 0.5).probs == pytest.approx([0.45, 0.55])
    with pytest.raises(ValueError):
        mixture(q, r, 1.5)


@pytest.mark.parametrize("w", [-0.1, 1.1])
def test_invalid_weight(w):
    with pytest.raises(ValueError):
        inputs([1.0], [1.0], [1.0], w)


def test_smoothing():
    r = smooth(ProbVec([1.0, 0.0]), 0.5)
    assert r.probs.tolist() == [0.75, 0.25]
    gi = inputs([0.5, 0.5], [0.5, 0.5], [1.0, 0.0], smoothing=0.5)
    assert math.isfinite(hard_gate(gi).ellr)


def test_derivative_matches_finite_differences(rng):
    for _ in range(300):
        C = int(rng.integers(2, 6))
        gi = GateInputs(*(random_probvec(rng, C) for _ in range(3)),
                        float(rng.random()), float(rng.random() * 2))
        lam, h = float(rng.uniform(0.05, 0.95)), 1e-6
        fd = (local_objective(gi, lam + h) - local_objective(gi, lam - h)) / (2 * h)
        assert objective_derivative(gi, lam) == pytest.approx(fd, rel=1e-5, abs=1e-6)


def test_soft_gate_beats_grid(rng):
    grid = np.linspace(0, 1, 1001)
    for _ in range(300):
        C = int(rng.integers(2, 5))
        gi = GateInputs(*(random_probvec(rng, C) for _ in range(3)),
                        float(rng.random()), float(rng.random()))
        lam = soft_gate(gi).lam
        best = min(local_objective(gi, g) for g in grid)
        assert local_objective(gi, lam) <= best + 1e-8


@given(st.floats(0, 1), st.floats(0, 5), st.floats(0, 5))
def test_soft_gate_monotone_in_penalty(w, z1, z2):
    p, q, r = ProbVec([0.7, 0.2, 0.1]), ProbVec([0.3, 0.3, 0.4]), ProbVec([0.6, 0.3, 0.1])
    lo, hi = sorted((z1, z2))
    assert soft_gate(GateInputs(p, q, r, w, hi)).lam <= soft_gate(GateInputs(p, q, r, w, lo)).lam + 1e-9


def test_soft_gate_boundary_screening():
    # retriever equal to the truth with no penalty: derivative at 1 is exactly 0
    assert soft_gate(inputs([0.7, 0.3], [0.4, 0.6], [0.7, 0.3])).lam == 1.0
    # retriever worse everywhere: derivative at 0 is positive
    assert soft_gate(inputs([0.7, 0.3], [0.7, 0.3], [0.2, 0.8])).lam == 0.0
