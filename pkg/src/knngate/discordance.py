"""Discordance scores, their change under the hard gate, and limit targets."""
import math
from dataclasses import dataclass

from .gating import hard_gate
from .simplex import check_label, cross_entropy, entropy, modal_label, top_gap

DEGENERACY_TOL = 1e-12


class NonUniqueBayesLabel(ValueError):
    pass


class DegenerateTarget(ValueError):
    """Bayes and base-model cross-entropies coincide; the limit is undefined."""


@dataclass(frozen=True)
class DiscordanceRecord:
    y_r: int
    h_q0: float
    h_mixed: float
    delta_h: float
    delta_x: float
    regime: str


@dataclass(frozen=True)
class AsymptoticTarget:
    y_star: int
    gamma: float
    ell_bayes: float
    ell0: float
    lambda_inf: int
    limit_value: float


def hdisc(w_fact, dist, y_r):
    """``w_fact * (1 - dist(y_r))``."""
    if not 0.0 <= w_fact <= 1.0:
        raise ValueError(f"w_fact must lie in [0, 1], got {w_fact}")
    check_label(y_r, dist.C)
    return w_fact * (1.0 - dist.at(y_r))


def delta_h(lam, w_fact, rhat_at_yr, q0_at_yr):
    return lam * w_fact * (rhat_at_yr - q0_at_yr)


def classify_regime(ell0, ellr, penalty, rhat_at_yr, q0_at_yr):
    """'A' (switch, gain), 'B' (switch, discordance grows) or 'C' (no switch)."""
    if ellr + penalty < ell0:
        return "A" if rhat_at_yr >= q0_at_yr else "B"
    return "C"


def discordance_record(inputs, decision):
    """Discordance change for any gate value carried by ``decision``."""
    y_r = modal_label(inputs.rhat)
    r_at, q_at = inputs.rhat.at(y_r), inputs.q0.at(y_r)
    w = inputs.w_fact
    return DiscordanceRecord(
        y_r=y_r,
        h_q0=hdisc(w, inputs.q0, y_r),
        h_mixed=hdisc(w, decision.mixed, y_r),
        delta_h=delta_h(decision.lam, w, r_at, q_at),
        delta_x=r_at - q_at,
        regime=classify_regime(decision.ell0, decision.ellr, decision.penalty, r_at, q_at),
    )


def evaluate(inputs):
    """Hard-gate decision together with its discordance record."""
    dec = hard_gate(inputs)
    return dec, discordance_record(inputs, dec)


def realized_delta_h(inputs):
    return evaluate(inputs)[1]


def gate_limit_value(ell_bayes, ell0, p_star, q0_star):
    lam_inf = 1 if ell_bayes < ell0 else 0
    return lam_inf, lam_inf * (p_star - q0_star)


def asymptotic_target(p_true, q0):
    """Large-sample limit of the realized discordance change at a query."""
    gamma = top_gap(p_true)
    if gamma <= 0.0:
        raise NonUniqueBayesLabel("Bayes label is not unique (zero margin)")
    y_star = modal_label(p_true)
    ell_bayes = entropy(p_true)
    ell0 = cross_entropy(p_true, q0)
    if math.isfinite(ell0) and abs(ell_bayes - ell0) <= DEGENERACY_TOL:
        raise DegenerateTarget(
            f"Bayes cross-entropy equals the base model's ({ell_bayes!r})")
    lam_inf, value = gate_limit_value(ell_bayes, ell0, p_true.at(y_star), q0.at(y_star))
    return AsymptoticTarget(y_star, gamma, ell_bayes, ell0, lam_inf, value)

