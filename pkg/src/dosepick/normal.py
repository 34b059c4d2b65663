"""Normal-approximation design engine.

One-stage designs come from the closed-form boundary/sample-size solution;
two-stage designs spend the low-arm error conservatively at the interim
(O'Brien-Fleming schedule), solve the final standardized boundary by
bisection, then scan the total sample size upward until the high-scenario
selection probability reaches its target.
"""

from __future__ import annotations

import math
from typing import Tuple, Union

from .errors import InfeasibleDesignError, ValidationError
from .stats import bvn_upper, norm_cdf, norm_quantile
from .types import DesignGoal, Method, NormalApproxContext, OneStageDesign, TwoStageDesign

__all__ = [
    "pcs_one_stage",
    "lambda_interval",
    "design_one_stage",
    "interim_boundary_star",
    "final_boundary_star",
    "pcs_high_two_stage",
    "design_two_stage",
]

N_SCAN_CAP = 10 ** 6
_BISECT_WIDTH = 1e-10
_ROOT_RESIDUAL = 1e-8


def pcs_one_stage(goal: DesignGoal, lambda_: float, n_low: Union[int, float]
                  ) -> Tuple[float, float]:
    """Normal-approximation correct-selection probabilities of a one-stage
    rule at boundary ``lambda_`` with ``n_low`` patients on the low arm.

    Returns (beta_low, beta_high): the probability of selecting the low dose
    when the rates are equal, and of selecting the high dose when the high
    dose is better by the goal's margin.
    """
    if n_low < 1:
        raise ValidationError(f"n_low={n_low!r} must be >= 1")
    if lambda_ < 0:
        raise ValidationError(f"lambda={lambda_!r} must be >= 0")
    ctx = NormalApproxContext.from_goal(goal)
    rn = math.sqrt(n_low)
    beta_low = norm_cdf(rn * lambda_ / ctx.sigma_low)
    beta_high = 1.0 - norm_cdf(rn * (lambda_ - goal.delta) / ctx.sigma_high)
    return beta_low, beta_high


def lambda_interval(goal: DesignGoal, n_low: Union[int, float]) -> Tuple[float, float]:
    """Feasible boundary interval (lambda_L, lambda_H) at a given low-arm n."""
    ctx = NormalApproxContext.from_goal(goal)
    rn = math.sqrt(n_low)
    lo = ctx.sigma_low / rn * norm_quantile(goal.alpha_low)
    hi = ctx.sigma_high / rn * norm_quantile(1.0 - goal.alpha_high) + goal.delta
    return lo, hi


def _one_stage_solution(goal: DesignGoal) -> Tuple[float, float]:
    """Unrounded minimal n_low and the boundary at which the feasible
    interval collapses to a point."""
    ctx = NormalApproxContext.from_goal(goal)
    zl = norm_quantile(goal.alpha_low)
    zh = norm_quantile(1.0 - goal.alpha_high)
    denom = ctx.sigma_low * zl - ctx.sigma_high * zh
    n_exact = (denom / goal.delta) ** 2
    lam = goal.delta * ctx.sigma_low * zl / denom
    return n_exact, lam


def design_one_stage(goal: DesignGoal) -> OneStageDesign:
    """Minimal one-stage design for the goal.

    The boundary keeps its closed-form value from the unrounded sample size;
    rounding n up only widens the feasible interval, so no recalculation is
    needed (the containment is asserted).
    """
    n_exact, lam = _one_stage_solution(goal)
    n_low = math.ceil(n_exact)
    # high-arm size rounds the *unrounded* C*n product
    n_high = math.ceil(goal.ratio * n_exact)
    interval = lambda_interval(goal, n_low)
    beta_low, beta_high = pcs_one_stage(goal, lam, n_low)
    return OneStageDesign(
        lambda_=lam,
        n_low=n_low,
        n_high=n_high,
        lambda_interval=interval,
        achieved_pcs_low=beta_low,
        achieved_pcs_high=beta_high,
        method=Method.NORMAL_APPROX,
        goal=goal,
    )


def interim_boundary_star(alpha_low: float, omega: float) -> float:
    """Standardized interim boundary from the O'Brien-Fleming spending rule."""
    if not 0.5 < alpha_low < 1.0:
        raise ValidationError(f"alpha_low={alpha_low!r} outside (0.5, 1)")
    if not 0.0 < omega < 1.0:
        raise ValidationError(f"omega={omega!r} outside (0, 1)")
    spent = 2.0 * norm_cdf(norm_quantile((1.0 - alpha_low) / 2.0) / math.sqrt(omega))
    return norm_quantile(1.0 - spent)


def error_spent_at_interim(alpha_low: float, omega: float) -> float:
    """Cumulative incorrect-selection probability allowed at the interim."""
    if not 0.5 < alpha_low < 1.0:
        raise ValidationError(f"alpha_low={alpha_low!r} outside (0.5, 1)")
    if not 0.0 < omega < 1.0:
        raise ValidationError(f"omega={omega!r} outside (0, 1)")
    return 2.0 * norm_cdf(norm_quantile((1.0 - alpha_low) / 2.0) / math.sqrt(omega))


def final_boundary_star(alpha_low: float, omega: float, lambda1_star: float) -> float:
    """Standardized final boundary: solves the two-look error equation

        Pr(Z1 > l1*) + Pr(Z1 <= l1*, Z > l*) = 1 - alpha_low

    by bisection on [0, 10]; the left side is strictly decreasing in l*.
    """
    if not 0.5 < alpha_low < 1.0:
        raise ValidationError(f"alpha_low={alpha_low!r} outside (0.5, 1)")
    if not 0.0 < omega < 1.0:
        raise ValidationError(f"omega={omega!r} outside (0, 1)")
    rho = math.sqrt(omega)
    target = 1.0 - alpha_low
    head = 1.0 - norm_cdf(lambda1_star)

    def lhs(ls: float) -> float:
        # Pr(Z1 <= l1*, Z > l*) = Pr(Z > l*) - Pr(Z1 > l1*, Z > l*)
        return head + (1.0 - norm_cdf(ls)) - bvn_upper(lambda1_star, ls, rho)

    lo, hi = 0.0, 10.0
    if lhs(lo) < target or lhs(hi) > target:
        raise AssertionError("final boundary root not bracketed in [0, 10]")
    while hi - lo > _BISECT_WIDTH:
        mid = 0.5 * (lo + hi)
        if lhs(mid) > target:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    assert abs(lhs(root) - target) < _ROOT_RESIDUAL
    return root


def pcs_high_two_stage(goal: DesignGoal, lambda1_star: float, lambda_star: float,
                       n_low: Union[int, float]) -> float:
    """High-scenario selection probability of the two-stage rule at a given
    (possibly non-integer) low-arm sample size.

    The interim size enters as omega * n_low on the real line, matching the
    sqrt(omega) correlation of the standardized statistics; integer rounding
    is applied only after the sample-size scan settles.
    """
    if n_low < 1:
        raise ValidationError(f"n_low={n_low!r} must be >= 1")
    omega = goal.require_omega()
    ctx = NormalApproxContext.from_goal(goal)
    n1 = omega * n_low
    if lambda1_star == -math.inf and lambda_star == -math.inf:
        return 1.0
    h = (lambda1_star * ctx.sigma_low - goal.delta * math.sqrt(n1)) / ctx.sigma_high
    k = (lambda_star * ctx.sigma_low - goal.delta * math.sqrt(n_low)) / ctx.sigma_high
    rho = math.sqrt(omega)
    # Pr(Z1* > h) + Pr(Z1* <= h, Z* > k)
    return (1.0 - norm_cdf(h)) + (1.0 - norm_cdf(k)) - bvn_upper(h, k, rho)


def design_two_stage(goal: DesignGoal) -> TwoStageDesign:
    """Minimal two-stage design for the goal.

    Scans n_low upward from 1 (the high-scenario probability is not proven
    monotone in n, and the scan is cheap) and stops at the first n meeting
    the target; stage sizes and displayed boundaries then come from the
    integer-rounded sizes.
    """
    omega = goal.require_omega()
    l1s = interim_boundary_star(goal.alpha_low, omega)
    ls = final_boundary_star(goal.alpha_low, omega, l1s)
    ctx = NormalApproxContext.from_goal(goal)

    n_low = None
    best = -1.0
    for n in range(1, N_SCAN_CAP + 1):
        bh = pcs_high_two_stage(goal, l1s, ls, n)
        if bh >= goal.alpha_high:
            n_low = n
            break
        best = max(best, bh)
    if n_low is None:
        raise InfeasibleDesignError(
            f"no n <= {N_SCAN_CAP} reaches alpha_high={goal.alpha_high}",
            best_achieved=best)

    n1_low = math.ceil(omega * n_low)
    n_high = math.ceil(goal.ratio * n_low)
    # stage-1 high-arm size follows the information fraction of the high arm
    n1_high = math.ceil(omega * n_high)
    lambda1 = l1s * ctx.sigma_low / math.sqrt(n1_low)
    lambda_ = ls * ctx.sigma_low / math.sqrt(n_low)
    beta_high = pcs_high_two_stage(goal, l1s, ls, n_low)
    # achieved low-scenario PCS at the integer sizes, same bivariate form
    rho = math.sqrt(omega)
    h1 = lambda1 * math.sqrt(n1_low) / ctx.sigma_low
    hf = lambda_ * math.sqrt(n_low) / ctx.sigma_low
    beta_low = 1.0 - ((1.0 - norm_cdf(h1)) + (1.0 - norm_cdf(hf))
                      - bvn_upper(h1, hf, rho))
    return TwoStageDesign(
        lambda1=lambda1,
        lambda_=lambda_,
        n1_low=n1_low,
        n1_high=n1_high,
        n_low=n_low,
        n_high=n_high,
        omega=omega,
        method=Method.NORMAL_APPROX,
        goal=goal,
        lambda1_star=l1s,
        lambda_star=ls,
        achieved_pcs_low=beta_low,
        achieved_pcs_high=beta_high,
    )
