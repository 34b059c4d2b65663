"""Exact-binomial design engine.

Boundaries and sample sizes are found by full enumeration of the binomial
difference distributions; threshold comparisons run in exact rational
arithmetic so lattice points are never misclassified.  Selection
probabilities are discontinuous in the boundaries exactly at lattice values,
which is why float comparisons are banned here.

Numeric boundary arguments are interpreted as the decimal literal of their
shortest repr (0.044 means 44/1000), matching how grid values are published.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Optional, Tuple, Union

import numpy as np

from .errors import InfeasibleDesignError, ValidationError
from .normal import error_spent_at_interim
from .stats import LatticeDist, binom_pmf_vector
from .types import (
    DesignGoal,
    ExactOC,
    ExactSearchConfig,
    Method,
    OneStageDesign,
    TwoStageDesign,
)

__all__ = [
    "exact_pi_high_one_stage",
    "design_exact_one_stage",
    "exact_pi_low_two_stage",
    "exact_pet",
    "design_exact_two_stage",
    "design_exact_global_min",
    "exact_oc",
    "enumerate_feasible_two_stage",
]

BoundaryLike = Union[int, float, Fraction, str]


def as_boundary(x: BoundaryLike) -> Fraction:
    """Exact rational reading of a boundary value (floats via shortest repr)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    return Fraction(str(x))


def _cut(lam: Fraction, n: int) -> int:
    """Smallest integer c with c > lam*n: select-high fires iff the count
    difference is >= c."""
    t = lam * n
    return int(t) + 1 if t.denominator == 1 else math.floor(t) + 1


@lru_cache(maxsize=2048)
def _diff_arrays(n: int, pa_key: str, pb_key: str) -> tuple[np.ndarray, np.ndarray]:
    """(mass, cdf) of X_a - X_b on support -n..n for equal arm sizes."""
    pa = binom_pmf_vector(n, float(pa_key))
    pb = binom_pmf_vector(n, float(pb_key))
    mass = np.convolve(pa, pb[::-1])
    mass = mass / mass.sum()
    cdf = np.cumsum(mass)
    mass.setflags(write=False)
    cdf.setflags(write=False)
    return mass, cdf


def _diff(n: int, pa: float, pb: float) -> tuple[np.ndarray, np.ndarray]:
    return _diff_arrays(n, repr(float(pa)), repr(float(pb)))


def _tail_from(mass: np.ndarray, n: int, c: int) -> float:
    """Pr(D >= c) for a difference distribution on -n..n."""
    idx = c + n
    if idx > 2 * n:
        return 0.0
    if idx <= 0:
        return 1.0
    return float(mass[idx:].sum())


def exact_pi_high_one_stage(p_low: float, p_high: float, n: int,
                            lambda_: BoundaryLike) -> float:
    """Probability the one-stage rule selects the high dose: mass of the
    count-difference distribution strictly above lambda * n."""
    if n < 1:
        raise ValidationError(f"n={n!r} must be >= 1")
    lam = as_boundary(lambda_)
    mass, _ = _diff(n, p_high, p_low)
    return _tail_from(mass, n, _cut(lam, n))


def exact_pet(p_low: float, p_high: float, n1: int, lambda1: BoundaryLike) -> float:
    """Probability of stopping at the interim (selecting the high dose).

    Callers evaluating the equal-rates scenario must pass the high-dose rate
    for both arms.
    """
    if n1 < 1:
        raise ValidationError(f"n1={n1!r} must be >= 1")
    lam1 = as_boundary(lambda1)
    mass, _ = _diff(n1, p_high, p_low)
    return _tail_from(mass, n1, _cut(lam1, n1))


def exact_pi_low_two_stage(p_low: float, p_high: float, n1: int, n2: int,
                           lambda1: BoundaryLike, lambda_: BoundaryLike) -> float:
    """Probability the two-stage rule selects the low dose.

    Stage-wise count-difference distributions collapse the quadruple sum to
    sum_{d1 <= lam1*n1} P(D1 = d1) * Pr(D2 <= lam*(n1+n2) - d1).
    """
    if n1 < 1 or n2 < 1:
        raise ValidationError("stage sizes must be >= 1")
    c1 = _cut(as_boundary(lambda1), n1)
    c = _cut(as_boundary(lambda_), n1 + n2)
    return _pi_low_cuts(p_low, p_high, n1, n2, c1, c)


def _pi_low_cuts(p_low: float, p_high: float, n1: int, n2: int,
                 c1: int, c: int) -> float:
    m1, _ = _diff(n1, p_high, p_low)
    _, f2 = _diff(n2, p_high, p_low)
    top = min(c1 - 1, n1)
    if top < -n1:
        return 0.0
    d1 = np.arange(-n1, top + 1)
    lim = (c - 1) - d1
    idx = lim + n2
    vals = np.where(idx < 0, 0.0, f2[np.clip(idx, 0, 2 * n2)])
    return float(m1[: top + n1 + 1] @ vals)


def _pi_low_cuts_all_c(p_low: float, p_high: float, n1: int, n2: int,
                       c1: int, cs: np.ndarray) -> np.ndarray:
    """pi_low for one interim cut and a vector of final cuts."""
    m1, _ = _diff(n1, p_high, p_low)
    _, f2 = _diff(n2, p_high, p_low)
    top = min(c1 - 1, n1)
    if top < -n1:
        return np.zeros(len(cs))
    d1 = np.arange(-n1, top + 1)
    idx = (cs[:, None] - 1) - d1[None, :] + n2
    vals = np.where(idx < 0, 0.0, f2[np.clip(idx, 0, 2 * n2)])
    return vals @ m1[: top + n1 + 1]


def _grid_m_max(bound: Fraction, step: Fraction) -> int:
    """Largest grid index m with m*step <= bound."""
    return int(bound / step)


def _smallest_grid_for_cut(c: int, n: int, step: Fraction, m_max: int) -> Optional[int]:
    """Smallest grid index whose boundary realizes integer cut c at size n."""
    m = math.ceil(Fraction(c - 1, n) / step)
    if m > m_max or _cut(m * step, n) != c:
        return None
    return m


def _one_stage_feasible_m(goal: DesignGoal, cfg: ExactSearchConfig, n: int
                          ) -> Optional[Tuple[int, int]]:
    """(smallest, largest) feasible grid index at size n, or None."""
    step = cfg.lambda_step
    m_max = _grid_m_max(Fraction(str(goal.delta)), step)
    mass_sl, _ = _diff(n, goal.p_high, goal.p_high)
    mass_sh, _ = _diff(n, goal.p_high, goal.p_high - goal.delta)
    lo = None
    hi = None
    for m in range(m_max + 1):
        c = _cut(m * step, n)
        beta_low = 1.0 - _tail_from(mass_sl, n, c)
        if beta_low < goal.alpha_low:
            continue
        beta_high = _tail_from(mass_sh, n, c)
        if beta_high < goal.alpha_high:
            break  # beta_high only decreases from here
        if lo is None:
            lo = m
        hi = m
    if lo is None:
        return None
    return lo, hi


def design_exact_one_stage(goal: DesignGoal,
                           cfg: ExactSearchConfig = ExactSearchConfig()
                           ) -> OneStageDesign:
    """Smallest n admitting a feasible boundary, reporting the smallest
    feasible grid boundary at that n.  Equal allocation only."""
    if goal.ratio != 1.0:
        raise ValidationError("exact designs support equal allocation only")
    step = cfg.lambda_step
    for n in range(1, cfg.n_cap + 1):
        found = _one_stage_feasible_m(goal, cfg, n)
        if found is None:
            continue
        m_lo, m_hi = found
        lam = m_lo * step
        beta_low = 1.0 - exact_pi_high_one_stage(goal.p_high, goal.p_high, n, lam)
        beta_high = exact_pi_high_one_stage(goal.p_high - goal.delta, goal.p_high,
                                            n, lam)
        return OneStageDesign(
            lambda_=float(lam),
            n_low=n,
            n_high=n,
            lambda_interval=(float(m_lo * step), float(m_hi * step)),
            achieved_pcs_low=beta_low,
            achieved_pcs_high=beta_high,
            method=Method.EXACT,
            goal=goal,
            lambda_exact=lam,
        )
    raise InfeasibleDesignError(f"no feasible one-stage design with n <= {cfg.n_cap}")


def _spending_lambda1(goal: DesignGoal, cfg: ExactSearchConfig, n1: int
                      ) -> Optional[Fraction]:
    """Smallest grid boundary whose equal-rates early-stop probability stays
    within the interim error-spending cap."""
    cap = error_spent_at_interim(goal.alpha_low, goal.require_omega())
    step = cfg.lambda1_step
    m_max = _grid_m_max(Fraction(1), step)
    mass, _ = _diff(n1, goal.p_high, goal.p_high)
    # PET steps down only at lattice multiples; walk cuts instead of the grid
    # (cut c=1 is what lambda1=0 realizes; c=0 is unreachable from [0, 1])
    for c in range(1, n1 + 2):
        if _tail_from(mass, n1, c) <= cap:
            m = _smallest_grid_for_cut(c, n1, step, m_max)
            if m is None:
                continue  # cut not realizable on this grid; spend less
            return m * step
    return None


def design_exact_two_stage(goal: DesignGoal,
                           cfg: ExactSearchConfig = ExactSearchConfig()
                           ) -> TwoStageDesign:
    """Error-spending-constrained exact two-stage search.

    For each candidate n the interim boundary is pinned by the spending cap;
    the final boundary is the smallest feasible grid value in [0, delta]
    (never exceeding the interim boundary, which the decision rule requires).
    """
    if goal.ratio != 1.0:
        raise ValidationError("exact designs support equal allocation only")
    omega = goal.require_omega()
    step = cfg.lambda_step
    m_max = _grid_m_max(Fraction(str(goal.delta)), step)
    ph, pl_h = goal.p_high, goal.p_high - goal.delta
    for n in range(2, cfg.n_cap + 1):
        n1 = math.ceil(omega * n)
        n2 = n - n1
        if n2 < 1 or n1 < 1:
            continue
        lam1 = _spending_lambda1(goal, cfg, n1)
        if lam1 is None:
            continue
        c1 = _cut(lam1, n1)
        cs_seen: set[int] = set()
        for m in range(m_max + 1):
            lam = m * step
            if lam > lam1:
                break
            c = _cut(lam, n)
            if c in cs_seen:
                continue
            cs_seen.add(c)
            beta_low = _pi_low_cuts(ph, ph, n1, n2, c1, c)
            if beta_low < goal.alpha_low:
                continue
            beta_high = 1.0 - _pi_low_cuts(pl_h, ph, n1, n2, c1, c)
            if beta_high < goal.alpha_high:
                break
            return TwoStageDesign(
                lambda1=float(lam1),
                lambda_=float(lam),
                n1_low=n1,
                n1_high=n1,
                n_low=n,
                n_high=n,
                omega=omega,
                method=Method.EXACT,
                goal=goal,
                achieved_pcs_low=beta_low,
                achieved_pcs_high=beta_high,
                lambda1_exact=lam1,
                lambda_exact=lam,
            )
    raise InfeasibleDesignError(f"no feasible two-stage design with n <= {cfg.n_cap}")


def enumerate_feasible_two_stage(goal: DesignGoal, cfg: ExactSearchConfig, n: int,
                                 spending_cap: bool = False
                                 ) -> Iterator[Tuple[Fraction, Fraction, float, float]]:
    """All feasible (lambda1, lambda, beta_low, beta_high) grid pairs at size
    n, subject to lambda <= lambda1; boundaries are the smallest grid values
    realizing their integer cuts.  Used by the global-minimum search, the
    minimality property checks, and divergence audit dumps."""
    omega = goal.require_omega()
    n1 = math.ceil(omega * n)
    n2 = n - n1
    if n1 < 1 or n2 < 1:
        return
    step, step1 = cfg.lambda_step, cfg.lambda1_step
    m_max = _grid_m_max(Fraction(str(goal.delta)), step)
    m1_max = _grid_m_max(Fraction(1), step1)
    ph, pl_h = goal.p_high, goal.p_high - goal.delta
    if spending_cap:
        lam1_fixed = _spending_lambda1(goal, cfg, n1)
        if lam1_fixed is None:
            return
        c1_range = [_cut(lam1_fixed, n1)]
    else:
        c1_range = list(range(1, n1 + 2))

    cs = []
    lams = []
    for c in range(1, math.floor(goal.delta * n) + 2):
        m = _smallest_grid_for_cut(c, n, step, m_max)
        if m is None:
            continue
        cs.append(c)
        lams.append(m * step)
    cs_arr = np.array(cs, dtype=int)

    for c1 in c1_range:
        if spending_cap:
            lam1_min = lam1_fixed
        else:
            m1 = _smallest_grid_for_cut(c1, n1, step1, m1_max)
            if m1 is None:
                continue
            lam1_min = m1 * step1
        bl = _pi_low_cuts_all_c(ph, ph, n1, n2, c1, cs_arr)
        bh = 1.0 - _pi_low_cuts_all_c(pl_h, ph, n1, n2, c1, cs_arr)
        for j, c in enumerate(cs):
            if bl[j] < goal.alpha_low or bh[j] < goal.alpha_high:
                continue
            lam = lams[j]
            lam1 = lam1_min
            if lam1 < lam:
                # lift lambda1 within its cut interval to honor lam <= lam1
                m1_lift = math.ceil(lam / step1)
                lam1 = m1_lift * step1
                if _cut(lam1, n1) != c1 or lam1 > 1:
                    continue
            yield lam1, lam, float(bl[j]), float(bh[j])


def design_exact_global_min(goal: DesignGoal,
                            cfg: ExactSearchConfig = ExactSearchConfig()
                            ) -> TwoStageDesign:
    """Joint boundary search without the error-spending constraint: minimize
    n subject only to lambda <= lambda1, reporting the smallest lambda and
    then the smallest lambda1 among ties at the minimum n."""
    if goal.ratio != 1.0:
        raise ValidationError("exact designs support equal allocation only")
    omega = goal.require_omega()
    for n in range(2, cfg.n_cap + 1):
        best = None
        for lam1, lam, bl, bh in enumerate_feasible_two_stage(goal, cfg, n):
            key = (lam, lam1)
            if best is None or key < (best[1], best[0]):
                best = (lam1, lam, bl, bh)
        if best is not None:
            lam1, lam, bl, bh = best
            n1 = math.ceil(omega * n)
            return TwoStageDesign(
                lambda1=float(lam1),
                lambda_=float(lam),
                n1_low=n1,
                n1_high=n1,
                n_low=n,
                n_high=n,
                omega=omega,
                method=Method.EXACT_GLOBAL_MIN,
                goal=goal,
                achieved_pcs_low=bl,
                achieved_pcs_high=bh,
                lambda1_exact=lam1,
                lambda_exact=lam,
            )
    raise InfeasibleDesignError(f"no feasible design with n <= {cfg.n_cap}")


def _design_lambda(design, attr_float: str, attr_exact: str) -> Fraction:
    exact = getattr(design, attr_exact, None)
    return exact if exact is not None else as_boundary(getattr(design, attr_float))


def _score_dist(nh: int, nl: int, ph: float, pl: float,
                wh: int, wl: int) -> LatticeDist:
    """Distribution of the integer score wh*X_H - wl*X_L (X_j ~ B(n_j, p_j));
    used for rules on proportion differences with unequal arm sizes."""
    pm_h = binom_pmf_vector(nh, ph)
    pm_l = binom_pmf_vector(nl, pl)
    kh = np.arange(nh + 1)
    kl = np.arange(nl + 1)
    scores = wh * kh[:, None] - wl * kl[None, :]
    weights = np.outer(pm_h, pm_l)
    lo = int(scores.min())
    mass = np.bincount((scores - lo).ravel(), weights=weights.ravel())
    return LatticeDist(offset=lo, mass=mass / mass.sum())


def exact_oc(design: Union[OneStageDesign, TwoStageDesign], p_low: float,
             p_high: float) -> ExactOC:
    """Exact operating characteristics of a design at a true rate pair.

    Works for designs from any engine; unequal allocation is handled through
    integer score lattices so proportion thresholds stay exact.
    """
    if isinstance(design, OneStageDesign):
        lam = _design_lambda(design, "lambda_", "lambda_exact")
        nl, nh = design.n_low, design.n_high
        if nl == nh:
            mass, _ = _diff(nl, p_high, p_low)
            pi_h = _tail_from(mass, nl, _cut(lam, nl))
        else:
            score = _score_dist(nh, nl, p_high, p_low, nl, nh)
            pi_h = score.prob_greater(lam * nh * nl)
        return ExactOC(pcs_low=1.0 - pi_h, pcs_high=pi_h, pet_low=0.0,
                       pet_high=0.0, en_low=float(nl), en_high=float(nh))

    lam1 = _design_lambda(design, "lambda1", "lambda1_exact")
    lam = _design_lambda(design, "lambda_", "lambda_exact")
    n1l, n1h = design.n1_low, design.n1_high
    nl, nh = design.n_low, design.n_high
    if n1l == n1h and nl == nh:
        c1 = _cut(lam1, n1l)
        c = _cut(lam, nl)
        mass1, _ = _diff(n1l, p_high, p_low)
        pet = _tail_from(mass1, n1l, c1)
        pi_l = _pi_low_cuts(p_low, p_high, n1l, nl - n1l, c1, c)
    else:
        pet, pi_l = _two_stage_unequal(p_low, p_high, n1l, n1h, nl, nh, lam1, lam)
    pi_h = 1.0 - pi_l
    en_low = n1l + (1.0 - pet) * (nl - n1l)
    en_high = n1h + (1.0 - pet) * (nh - n1h)
    return ExactOC(pcs_low=pi_l, pcs_high=pi_h, pet_low=pet, pet_high=pet,
                   en_low=en_low, en_high=en_high)


def _two_stage_unequal(pl: float, ph: float, n1l: int, n1h: int, nl: int, nh: int,
                       lam1: Fraction, lam: Fraction) -> tuple[float, float]:
    """(PET, pi_low) for unequal-allocation two-stage rules via joint
    enumeration of the stage-1 grid and a stage-2 score lattice."""
    n2l, n2h = nl - n1l, nh - n1h
    pm1h = binom_pmf_vector(n1h, ph)
    pm1l = binom_pmf_vector(n1l, pl)
    k1h = np.arange(n1h + 1)[:, None]
    k1l = np.arange(n1l + 1)[None, :]
    w1 = np.outer(pm1h, pm1l)
    # interim: continue iff k1h/n1h - k1l/n1l <= lam1 (floor of the exact
    # rational threshold, thresholds here are nonnegative)
    interim_score = k1h * n1l - k1l * n1h
    cont = interim_score <= math.floor(lam1 * n1h * n1l)
    pet = float(w1[~cont].sum())
    # final: select low iff K_H * nl - K_L * nh <= lam * nh * nl
    final_part = k1h * nl - k1l * nh
    tcut = math.floor(lam * nh * nl)
    s2 = _score_dist(n2h, n2l, ph, pl, nl, nh)
    f2 = s2.cdf_vector()
    lims = tcut - final_part[cont]
    idx = lims - s2.offset
    vals = np.where(idx < 0, 0.0, f2[np.clip(idx, 0, len(f2) - 1)])
    pi_l = float(w1[cont] @ vals)
    return pet, pi_l
