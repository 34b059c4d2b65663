"""Monte Carlo operating-characteristics engine.

Replicate r draws its randomness from a counter-based generator advanced to
position r * budget in the stream keyed by the seed, so results are
bit-identical however replicates are partitioned across workers.  All
aggregation runs on integer counters; no floating accumulation order can
change a reported value.
"""

from __future__ import annotations

import math
from enum import Enum
from fractions import Fraction
from typing import List, Sequence, Tuple, Union

import numpy as np

from .errors import ValidationError
from .stats import binom_pmf_vector, norm_quantile, smallest_int_greater
from .types import (
    DecisionKind,
    DesignGoal,
    OneStageDesign,
    SimConfig,
    SimResult,
    TwoStageDesign,
    UmetConfig,
    UmetSimResult,
)

__all__ = [
    "DeviationType",
    "simulate_one_stage",
    "simulate_two_stage",
    "sensitivity_p_high",
    "sensitivity_n_deviation",
    "umet_decide",
    "simulate_umet",
    "replicate_uniforms",
]

_GAP_TOL = 1e-9


class DeviationType(str, Enum):
    HIGH_ONLY = "HighOnly"
    LOW_ONLY = "LowOnly"
    SAME_DIRECTION = "SameDirection"
    OPPOSITE_DIRECTION = "OppositeDirection"


def replicate_uniforms(seed: int, start: int, count: int, budget: int) -> np.ndarray:
    """Uniforms for replicates [start, start+count): row r-start holds the
    ``budget`` variates of replicate r.  Any partition of [0, n_reps) into
    such calls reassembles the exact same matrix.

    Replicate streams are aligned to the counter blocks of the underlying
    generator (4 outputs per counter step), so ``advance`` lands each
    replicate exactly at its own block.
    """
    blocks = (budget + 3) // 4
    bg = np.random.Philox(key=seed)
    bg.advance(start * blocks)
    u = np.random.Generator(bg).random((count, blocks * 4))
    return u[:, :budget]


def _binom_from_uniform(u: np.ndarray, n: int, p: float) -> np.ndarray:
    """Inverse-CDF binomial draw; exact table lookup, one uniform per draw."""
    if n == 0:
        return np.zeros(u.shape, dtype=np.int64)
    cdf = np.cumsum(binom_pmf_vector(n, p))
    k = np.searchsorted(cdf, u, side="right")
    return np.minimum(k, n).astype(np.int64)


def _select_low_cut(lambda_: Union[float, Fraction], n_high: int, n_low: int) -> int:
    """Integer threshold t: select low iff k_h*n_low - k_l*n_high <= t.

    The proportion comparison p_hat_h - p_hat_l <= lambda is cross-multiplied
    into integers; the boundary itself is resolved exactly through Fraction.
    """
    lam = lambda_ if isinstance(lambda_, Fraction) else Fraction(str(lambda_))
    return smallest_int_greater(lam * n_high * n_low) - 1


def _classify_truth(goal: DesignGoal, p_low: float, p_high: float) -> Tuple[str, bool]:
    gap = p_high - p_low
    if abs(gap) <= _GAP_TOL:
        return "S_L", True
    if gap >= goal.delta - _GAP_TOL:
        return "S_H", True
    return "intermediate", False


def _design_boundary(design, float_attr: str, exact_attr: str):
    exact = getattr(design, exact_attr, None)
    return exact if exact is not None else getattr(design, float_attr)


def _result(goal: DesignGoal, p_low: float, p_high: float, n_reps: int,
            n_low_sel: int, n_high_sel: int, pet_count: int,
            pat_low: int) -> SimResult:
    scenario, anchored = _classify_truth(goal, p_low, p_high)
    if scenario == "S_L":
        pcs = n_low_sel / n_reps
    else:
        # for unanchored gaps this reports Pr(select high), flagged via anchored
        pcs = n_high_sel / n_reps
    return SimResult(
        pcs=pcs,
        pet=pet_count / n_reps,
        en=pat_low / n_reps,
        mc_se=math.sqrt(pcs * (1.0 - pcs) / n_reps),
        scenario=scenario,
        anchored=anchored,
    )


def simulate_one_stage(design: OneStageDesign, cfg: SimConfig) -> SimResult:
    """Simulate the one-stage rule at the true rates and enrolled sizes."""
    nl = cfg.enrolled_n_low or design.n_low
    nh = cfg.enrolled_n_high or design.n_high
    lam = _design_boundary(design, "lambda_", "lambda_exact")
    tcut = _select_low_cut(lam, nh, nl)
    u = replicate_uniforms(cfg.seed, 0, cfg.n_reps, 2)
    kl = _binom_from_uniform(u[:, 0], nl, cfg.true_p_low)
    kh = _binom_from_uniform(u[:, 1], nh, cfg.true_p_high)
    low_sel = int(np.count_nonzero(kh * nl - kl * nh <= tcut))
    return _result(design.goal, cfg.true_p_low, cfg.true_p_high, cfg.n_reps,
                   low_sel, cfg.n_reps - low_sel, 0, cfg.n_reps * nl)


def simulate_two_stage(design: TwoStageDesign, cfg: SimConfig) -> SimResult:
    """Simulate the two-stage rule with its interim early-selection look."""
    nl = cfg.enrolled_n_low or design.n_low
    nh = cfg.enrolled_n_high or design.n_high
    n1l = cfg.enrolled_n1_low or design.n1_low
    n1h = cfg.enrolled_n1_high or design.n1_high
    if n1l > nl or n1h > nh:
        raise ValidationError("stage-1 enrollment cannot exceed the total")
    n2l, n2h = nl - n1l, nh - n1h
    lam1 = _design_boundary(design, "lambda1", "lambda1_exact")
    lam = _design_boundary(design, "lambda_", "lambda_exact")
    lam1 = lam1 if isinstance(lam1, Fraction) else Fraction(str(lam1))
    stop_cut = smallest_int_greater(lam1 * n1h * n1l)  # stop iff score1 >= cut
    tcut = _select_low_cut(lam, nh, nl)

    u = replicate_uniforms(cfg.seed, 0, cfg.n_reps, 4)
    k1l = _binom_from_uniform(u[:, 0], n1l, cfg.true_p_low)
    k1h = _binom_from_uniform(u[:, 1], n1h, cfg.true_p_high)
    k2l = _binom_from_uniform(u[:, 2], n2l, cfg.true_p_low)
    k2h = _binom_from_uniform(u[:, 3], n2h, cfg.true_p_high)

    stopped = (k1h * n1l - k1l * n1h) >= stop_cut
    ktl, kth = k1l + k2l, k1h + k2h
    final_low = (kth * nl - ktl * nh) <= tcut
    low_sel = int(np.count_nonzero(~stopped & final_low))
    pet_count = int(np.count_nonzero(stopped))
    pat_low = cfg.n_reps * n1l + (cfg.n_reps - pet_count) * n2l
    return _result(design.goal, cfg.true_p_low, cfg.true_p_high, cfg.n_reps,
                   low_sel, cfg.n_reps - low_sel, pet_count, pat_low)


def simulate_design(design, cfg: SimConfig) -> SimResult:
    if isinstance(design, TwoStageDesign):
        return simulate_two_stage(design, cfg)
    return simulate_one_stage(design, cfg)


def sensitivity_p_high(goal: DesignGoal, true_p_high_grid: Sequence[float],
                       cfg: SimConfig) -> List[Tuple[float, SimResult, SimResult]]:
    """Operating characteristics when the true high-dose rate deviates from
    the one the design assumed.

    The design is built once at the goal's assumed rate; each grid point is
    then simulated under both anchoring truths (rates equal, and low dose
    worse by the margin), reusing the configured seed.
    """
    from .normal import design_one_stage, design_two_stage

    design = design_two_stage(goal) if goal.omega is not None else design_one_stage(goal)
    out = []
    for p_true in true_p_high_grid:
        if not 0.0 < p_true < 1.0 or p_true - goal.delta <= 0.0:
            raise ValidationError(f"grid point {p_true!r} incompatible with margin")
        cfg_sl = _with_truth(cfg, p_true, p_true)
        cfg_sh = _with_truth(cfg, p_true - goal.delta, p_true)
        out.append((p_true, simulate_design(design, cfg_sl),
                    simulate_design(design, cfg_sh)))
    return out


def _with_truth(cfg: SimConfig, p_low: float, p_high: float) -> SimConfig:
    return SimConfig(seed=cfg.seed, true_p_low=p_low, true_p_high=p_high,
                     n_reps=cfg.n_reps, enrolled_n_low=cfg.enrolled_n_low,
                     enrolled_n_high=cfg.enrolled_n_high,
                     enrolled_n1_low=cfg.enrolled_n1_low,
                     enrolled_n1_high=cfg.enrolled_n1_high)


def sensitivity_n_deviation(design, deviation_type: DeviationType,
                            deviation_grid: Sequence[int], cfg: SimConfig
                            ) -> List[Tuple[int, SimResult]]:
    """Operating characteristics when actual enrollment deviates from plan.

    Four patterns: one arm off plan, both arms shifted together, or both
    shifted in opposite directions (which keeps the combined enrollment
    fixed).  Stage-1 sizes stay at plan, capped by the enrolled totals.
    """
    deviation_type = DeviationType(deviation_type)
    n = design.n_low
    out = []
    for off in deviation_grid:
        if deviation_type is DeviationType.HIGH_ONLY:
            nl, nh = n, n + off
        elif deviation_type is DeviationType.LOW_ONLY:
            nl, nh = n + off, n
        elif deviation_type is DeviationType.SAME_DIRECTION:
            nl, nh = n + off, n + off
        else:
            nl, nh = n - off, n + off
        if nl < 1 or nh < 1:
            raise ValidationError(f"offset {off!r} empties an arm")
        kwargs = dict(seed=cfg.seed, true_p_low=cfg.true_p_low,
                      true_p_high=cfg.true_p_high, n_reps=cfg.n_reps,
                      enrolled_n_low=nl, enrolled_n_high=nh)
        if isinstance(design, TwoStageDesign):
            kwargs["enrolled_n1_low"] = min(design.n1_low, nl)
            kwargs["enrolled_n1_high"] = min(design.n1_high, nh)
        out.append((off, simulate_design(design, SimConfig(**kwargs))))
    return out


def umet_decide(n_low: int, n_high: int, quasi_events_low: float,
                quasi_events_high: float, cfg: UmetConfig) -> DecisionKind:
    """Utility-difference comparator decision from quasi-event totals.

    The one-sided lower confidence bound LB(g) = u_diff - z_{1-g} * se is
    checked at the two significance levels; the high dose needs LB to clear
    zero at the stricter level, the low dose is selected when even the looser
    bound fails to stay positive, and anything between is the deferred
    "consider the high dose" outcome.  A zero-variance tie selects the low
    dose.
    """
    if not (0 <= quasi_events_low <= n_low and 0 <= quasi_events_high <= n_high):
        raise ValidationError("quasi-event totals must lie in [0, n] per arm")
    ul = quasi_events_low / n_low
    uh = quasi_events_high / n_high
    diff = uh - ul
    se = math.sqrt(ul * (1 - ul) / n_low + uh * (1 - uh) / n_high)
    if se == 0.0 and diff == 0.0:
        return DecisionKind.SELECT_LOW
    if diff - norm_quantile(1.0 - cfg.gamma_high) * se > 0.0:
        return DecisionKind.SELECT_HIGH
    if diff - norm_quantile(1.0 - cfg.gamma_low) * se < 0.0:
        return DecisionKind.SELECT_LOW
    return DecisionKind.CONSIDER_HIGH


def simulate_umet(cfg: SimConfig, ucfg: UmetConfig,
                  delta: float | None = None) -> UmetSimResult:
    """Simulate the utility-difference comparator.

    Per patient, response and toxicity are drawn independently at the
    configured marginal rates (the minimal assumption; the source material
    specifies only marginals) and scored with the unit utilities.  The
    headline ``pcs`` counts consider-high as selecting the high dose, the
    reporting convention used in comparisons; raw fractions ride along.
    """
    nl, nh = cfg.enrolled_n_low, cfg.enrolled_n_high
    if nl is None or nh is None:
        raise ValidationError("comparator simulation requires enrolled sizes")
    u1, u2, u3, u4 = ucfg.unit_utilities
    budget = 2 * (nl + nh)
    u = replicate_uniforms(cfg.seed, 0, cfg.n_reps, budget)

    def arm_quasi(block: np.ndarray, n: int, p: float, tox: float) -> np.ndarray:
        resp = block[:, :n] < p
        toxd = block[:, n:2 * n] < tox
        score = np.where(resp, np.where(toxd, u3, u1), np.where(toxd, u4, u2))
        return score.sum(axis=1)

    xl = arm_quasi(u[:, : 2 * nl], nl, cfg.true_p_low, ucfg.tox_low)
    xh = arm_quasi(u[:, 2 * nl:], nh, cfg.true_p_high, ucfg.tox_high)

    ul_hat = xl / nl
    uh_hat = xh / nh
    diff = uh_hat - ul_hat
    se = np.sqrt(ul_hat * (1 - ul_hat) / nl + uh_hat * (1 - uh_hat) / nh)
    z_hi = norm_quantile(1.0 - ucfg.gamma_high)
    z_lo = norm_quantile(1.0 - ucfg.gamma_low)
    tie = (se == 0.0) & (diff == 0.0)
    sel_high = (diff - z_hi * se > 0.0) & ~tie
    sel_low = ((diff - z_lo * se < 0.0) & ~sel_high) | tie
    consider = ~sel_high & ~sel_low

    n_low_sel = int(np.count_nonzero(sel_low))
    n_high_sel = int(np.count_nonzero(sel_high))
    n_consider = int(np.count_nonzero(consider))
    reps = cfg.n_reps

    # anchored-truth classification mirrors the primary engine's convention
    gap = cfg.true_p_high - cfg.true_p_low
    if abs(gap) <= _GAP_TOL:
        scenario, anchored = "S_L", True
        pcs = n_low_sel / reps
    elif delta is not None and gap < delta - _GAP_TOL:
        scenario, anchored = "intermediate", False
        pcs = (n_high_sel + n_consider) / reps
    else:
        scenario, anchored = "S_H", True
        pcs = (n_high_sel + n_consider) / reps
    return UmetSimResult(
        pcs=pcs,
        pet=0.0,
        en=float(nl),
        mc_se=math.sqrt(pcs * (1.0 - pcs) / reps),
        scenario=scenario,
        anchored=anchored,
        frac_select_low=n_low_sel / reps,
        frac_select_high=n_high_sel / reps,
        frac_consider_high=n_consider / reps,
    )
