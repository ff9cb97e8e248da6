import math

import pytest

from knngate.discordance import DegenerateTarget, NonUniqueBayesLabel, asymptotic_target, \
    classify_regime, delta_h, discordance_record, evaluate, gate_limit_value, hdisc
from knngate.gating import GateInputs, soft_gate
from knngate.simplex import ProbVec, modal_label

from conftest import random_probvec


def test_hdisc_example():
    assert hdisc(0.5, ProbVec([0.2, 0.8]), 2) == pytest.approx(0.1)
    with pytest.raises(ValueError):
        hdisc(0.5, ProbVec([0.2, 0.8]), 3)


def test_identity_against_recomputation(rng):
    for _ in range(2000):
        C = int(rng.integers(1, 6))
        gi = GateInputs(*(random_probvec(rng, C, zeros=True) for _ in range(3)),
                        float(rng.random()), float(rng.random()))
        dec, rec = evaluate(gi)
        y = modal_label(gi.rhat)
        direct = gi.w_fact * (1 - gi.q0.at(y)) - gi.w_fact * (1 - dec.mixed.at(y))
        assert abs(rec.delta_h - direct) <= 1e-12
        assert abs(rec.delta_h - (rec.h_q0 - rec.h_mixed)) <= 1e-12
        assert abs(rec.delta_h - dec.lam * gi.w_fact * (gi.rhat.at(y) - gi.q0.at(y))) <= 1e-12


def test_identity_holds_for_soft_gate(rng):
    for _ in range(300):
        gi = GateInputs(*(random_probvec(rng, 3) for _ in range(3)), float(rng.random()), 0.5)
        dec = soft_gate(gi)
        rec = discordance_record(gi, dec)
        assert rec.h_q0 - rec.h_mixed == pytest.approx(rec.delta_h, abs=1e-12)


def test_sign_law(rng):
    for _ in range(2000):
        gi = GateInputs(*(random_probvec(rng, 3, zeros=True) for _ in range(3)),
                        float(rng.random()), float(rng.random()))
        _, rec = evaluate(gi)
        if rec.regime == "A":
            assert rec.delta_h >= 0.0
        elif rec.regime == "B":
            assert rec.delta_h < 0.0
        else:
            assert rec.delta_h == 0.0


def test_regimes():
    assert classify_regime(1.0, 0.5, 0.1, 0.6, 0.4) == "A"
    assert classify_regime(1.0, 0.5, 0.1, 0.3, 0.4) == "B"
    assert classify_regime(1.0, 0.5, 0.5, 0.6, 0.4) == "C"


def test_large_penalty_suppresses_change():
    gi = GateInputs(ProbVec([0.9, 0.1]), ProbVec([0.5, 0.5]), ProbVec([0.9, 0.1]), 0.2, 100.0)
    _, rec = evaluate(gi)
    assert rec.delta_h == 0.0 and rec.regime == "C"


def test_delta_h_formula():
    assert delta_h(1.0, 0.5, 0.8, 0.3) == pytest.approx(0.25)
    assert delta_h(0.0, 0.5, 0.8, 0.3) == 0.0


def test_asymptotic_target_example():
    t = asymptotic_target(ProbVec([0.7, 0.3]), ProbVec([0.4, 0.6]))
    assert t.y_star == 1
    assert t.ell_bayes == pytest.approx(0.610864, abs=1e-6)
    assert t.ell0 == pytest.approx(0.794651, abs=1e-6)
    assert t.lambda_inf == 1
    assert t.limit_value == pytest.approx(0.3)


def test_limit_value_when_gate_stays_off():
    assert gate_limit_value(0.8, 0.6, 0.7, 0.4) == (0, 0.0)


def test_target_errors():
    with pytest.raises(NonUniqueBayesLabel):
        asymptotic_target(ProbVec([0.5, 0.5]), ProbVec([0.3, 0.7]))
    with pytest.raises(DegenerateTarget):
        asymptotic_target(ProbVec([0.7, 0.3]), ProbVec([0.7, 0.3]))


def test_target_with_infinite_base_loss():
    t = asymptotic_target(ProbVec([0.7, 0.3]), ProbVec([1.0, 0.0]))
    assert t.ell0 == math.inf and t.lambda_inf == 1
    assert t.limit_value == pytest.approx(-0.3)
