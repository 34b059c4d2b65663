"""Normal-approximation engine: published design rows, closed-form
identities, and the interval/containment/ordering properties."""

import math

import pytest

from dosepick import normal
from dosepick.errors import InfeasibleDesignError, ValidationError
from dosepick.stats import norm_quantile
from dosepick.types import DesignGoal, NormalApproxContext

from oracles import phi_inv_ref, phi_ref


def goal(ph, d, al, ah, ratio=1.0, omega=None):
    return DesignGoal(p_high=ph, delta=d, alpha_low=al, alpha_high=ah,
                      ratio=ratio, omega=omega)


# ten target pairs shared by the published design tables
ALPHA_GRID = [(0.60, 0.60), (0.60, 0.70), (0.65, 0.65), (0.65, 0.75),
              (0.70, 0.70), (0.70, 0.80), (0.75, 0.75), (0.75, 0.85),
              (0.80, 0.80), (0.80, 0.90)]
PH_GRID = [0.3, 0.4, 0.5]
DELTA_GRID = [0.1, 0.15]


class TestPcsOneStage:
    def test_zero_boundary_is_coin_flip(self):
        bl, _ = normal.pcs_one_stage(goal(0.3, 0.1, 0.6, 0.6), 0.0, 17)
        assert bl == pytest.approx(0.5, abs=1e-15)

    def test_published_design_meets_targets(self):
        bl, bh = normal.pcs_one_stage(goal(0.3, 0.1, 0.6, 0.6), 0.052, 11)
        assert bl >= 0.60 and bh >= 0.60

    def test_unrounded_size_hits_targets_to_rounding(self):
        # at the unrounded minimal size, the published 3-decimal boundary
        # returns both probabilities to within its own rounding
        bl, bh = normal.pcs_one_stage(goal(0.3, 0.1, 0.6, 0.6), 0.052, 10.131)
        assert bl == pytest.approx(0.60, abs=1e-3)
        assert bh == pytest.approx(0.60, abs=1e-3)

    def test_invalid_goal_reports_violation(self):
        with pytest.raises(ValidationError) as err:
            normal.pcs_one_stage(goal(0.3, 0.1, 0.4, 0.6), 0.05, 10)
        assert "alpha_low" in str(err.value)


class TestDesignOneStage:
    @pytest.mark.parametrize("ph,d,al,ah,lam,n", [
        (0.3, 0.1, 0.60, 0.60, 0.052, 11),
        (0.4, 0.1, 0.65, 0.65, 0.051, 28),
        (0.3, 0.15, 0.60, 0.70, 0.053, 10),
        (0.3, 0.05, 0.60, 0.60, 0.025, 42),
        (0.5, 0.05, 0.80, 0.90, 0.020, 899),
    ])
    def test_published_rows(self, ph, d, al, ah, lam, n):
        design = normal.design_one_stage(goal(ph, d, al, ah))
        assert round(design.lambda_, 3) == pytest.approx(lam, abs=1e-12)
        assert design.n_low == n and design.n_high == n

    @pytest.mark.parametrize("ph,d,al,ah,lam,nl,nh", [
        (0.3, 0.1, 0.60, 0.60, 0.052, 8, 15),
        (0.3, 0.1, 0.75, 0.85, 0.042, 84, 167),
        (0.5, 0.15, 0.80, 0.90, 0.061, 73, 145),
    ])
    def test_published_unequal_allocation_rows(self, ph, d, al, ah, lam, nl, nh):
        design = normal.design_one_stage(goal(ph, d, al, ah, ratio=2))
        assert round(design.lambda_, 3) == pytest.approx(lam, abs=1e-12)
        assert (design.n_low, design.n_high) == (nl, nh)

    def test_high_arm_rounds_the_unrounded_product(self):
        # exact n_low here is 7.43; doubling before the ceiling gives 15
        design = normal.design_one_stage(goal(0.3, 0.1, 0.6, 0.6, ratio=2))
        assert (design.n_low, design.n_high) == (8, 15)

    def test_boundary_lies_in_interval(self):
        design = normal.design_one_stage(goal(0.42, 0.12, 0.66, 0.71))
        lo, hi = design.lambda_interval
        assert lo <= design.lambda_ <= hi


class TestInterimBoundaryStar:
    def test_reference_value(self):
        # chained through the high-precision reference: -0.8416/sqrt(.5)
        # -> cumulative 0.233976 -> upper quantile 0.72623
        assert abs(normal.interim_boundary_star(0.6, 0.5) - 0.7262) < 5e-4

    def test_grows_without_bound_as_target_tightens(self):
        vals = [normal.interim_boundary_star(a, 0.5)
                for a in (0.9, 0.99, 0.999, 0.99999)]
        assert vals == sorted(vals)
        assert vals[-1] > 4.0

    def test_full_information_collapses_to_single_look(self):
        got = normal.interim_boundary_star(0.6, 1 - 1e-12)
        assert abs(got - 0.2533) < 5e-4

    def test_domain(self):
        with pytest.raises(ValidationError):
            normal.interim_boundary_star(0.5, 0.5)
        with pytest.raises(ValidationError):
            normal.interim_boundary_star(0.6, 1.0)


class TestFinalBoundaryStar:
    def test_residual(self):
        l1s = normal.interim_boundary_star(0.6, 0.5)
        ls = normal.final_boundary_star(0.6, 0.5, l1s)
        # recompute the two-look error at the root
        from dosepick.stats import bvn_upper, norm_cdf
        rho = math.sqrt(0.5)
        lhs = (1 - norm_cdf(l1s)) + (1 - norm_cdf(ls)) - bvn_upper(l1s, ls, rho)
        assert abs(lhs - 0.4) < 1e-8

    def test_published_boundary_scale(self):
        # published two-stage row: boundary 0.074 at n=13, p_high=0.3
        l1s = normal.interim_boundary_star(0.6, 0.5)
        ls = normal.final_boundary_star(0.6, 0.5, l1s)
        sigma_low = math.sqrt(2 * 0.3 * 0.7)
        assert round(ls * sigma_low / math.sqrt(13), 3) == 0.074

    def test_published_boundary_scale_second_row(self):
        l1s = normal.interim_boundary_star(0.65, 0.5)
        ls = normal.final_boundary_star(0.65, 0.5, l1s)
        sigma_low = math.sqrt(2 * 0.4 * 0.6)
        assert round(ls * sigma_low / math.sqrt(31), 3) == 0.065

    def test_full_information_limit(self):
        omega = 1 - 1e-9
        l1s = normal.interim_boundary_star(0.6, omega)
        ls = normal.final_boundary_star(0.6, omega, l1s)
        assert abs(ls - norm_quantile(0.6)) < 5e-3


class TestPcsHighTwoStage:
    def test_published_design_meets_target(self):
        g = goal(0.3, 0.1, 0.6, 0.6, omega=0.5)
        l1s = normal.interim_boundary_star(0.6, 0.5)
        ls = normal.final_boundary_star(0.6, 0.5, l1s)
        assert normal.pcs_high_two_stage(g, l1s, ls, 13) >= 0.60

    def test_published_design_meets_target_wide_margin_row(self):
        g = goal(0.3, 0.15, 0.7, 0.7, omega=0.5)
        l1s = normal.interim_boundary_star(0.7, 0.5)
        ls = normal.final_boundary_star(0.7, 0.5, l1s)
        assert normal.pcs_high_two_stage(g, l1s, ls, 21) >= 0.70

    def test_sentinels_force_selection(self):
        g = goal(0.3, 0.1, 0.6, 0.6, omega=0.5)
        assert normal.pcs_high_two_stage(g, -math.inf, -math.inf, 13) == 1.0


class TestDesignTwoStage:
    @pytest.mark.parametrize("ph,d,al,ah,l1,n1,lam,n", [
        (0.3, 0.1, 0.60, 0.60, 0.178, 7, 0.074, 13),
        (0.4, 0.15, 0.70, 0.80, 0.161, 21, 0.069, 41),
        (0.5, 0.05, 0.80, 0.90, 0.048, 466, 0.021, 931),
    ])
    def test_published_rows(self, ph, d, al, ah, l1, n1, lam, n):
        design = normal.design_two_stage(goal(ph, d, al, ah, omega=0.5))
        assert round(design.lambda1, 3) == pytest.approx(l1, abs=1e-12)
        assert round(design.lambda_, 3) == pytest.approx(lam, abs=1e-12)
        assert (design.n1_low, design.n_low) == (n1, n)

    def test_published_unequal_allocation_row(self):
        design = normal.design_two_stage(goal(0.3, 0.1, 0.6, 0.6, ratio=2,
                                              omega=0.5))
        assert round(design.lambda1, 3) == 0.182
        assert (design.n1_low, design.n1_high) == (5, 10)
        assert round(design.lambda_, 3) == 0.074
        assert (design.n_low, design.n_high) == (10, 20)

    def test_stage1_high_arm_follows_information_fraction(self):
        # odd low-arm total: ceil(omega * n_high) = 57, not 2 * ceil(omega * n_low)
        design = normal.design_two_stage(goal(0.3, 0.1, 0.75, 0.75, ratio=2,
                                              omega=0.5))
        assert (design.n1_low, design.n1_high) == (29, 57)
        assert (design.n_low, design.n_high) == (57, 114)

    def test_requires_omega(self):
        with pytest.raises(ValidationError):
            normal.design_two_stage(goal(0.3, 0.1, 0.6, 0.6))

    def test_infeasible_reports_best(self, monkeypatch):
        monkeypatch.setattr(normal, "N_SCAN_CAP", 3)
        with pytest.raises(InfeasibleDesignError) as err:
            normal.design_two_stage(goal(0.3, 0.05, 0.8, 0.9, omega=0.5))
        assert err.value.best_achieved is not None
        assert 0 < err.value.best_achieved < 0.9


class TestIntervalProperties:
    def test_interval_monotonicity(self):
        g = goal(0.3, 0.1, 0.65, 0.7)
        los, his = [], []
        for n in range(1, 501):
            lo, hi = normal.lambda_interval(g, n)
            los.append(lo)
            his.append(hi)
        assert all(a > b for a, b in zip(los, los[1:]))
        assert all(a < b for a, b in zip(his, his[1:]))

    @pytest.mark.parametrize("ph", PH_GRID)
    @pytest.mark.parametrize("d", DELTA_GRID)
    @pytest.mark.parametrize("al,ah", ALPHA_GRID)
    def test_containment(self, ph, d, al, ah):
        design = normal.design_one_stage(goal(ph, d, al, ah))
        lo, hi = normal.lambda_interval(goal(ph, d, al, ah), design.n_low)
        assert lo <= design.lambda_ <= hi

    @pytest.mark.parametrize("ph", PH_GRID)
    @pytest.mark.parametrize("d", DELTA_GRID)
    @pytest.mark.parametrize("a", [0.6, 0.65, 0.7, 0.75, 0.8])
    def test_boundary_near_half_margin_at_equal_targets(self, ph, d, a):
        g = goal(ph, d, a, a)
        design = normal.design_one_stage(g)
        assert abs(design.lambda_ - d / 2) < 0.02 * d + 0.005
        # literal identity: the shared quantile cancels
        ctx = NormalApproxContext.from_goal(g)
        expected = d * ctx.sigma_low / (ctx.sigma_low + ctx.sigma_high)
        assert design.lambda_ == pytest.approx(expected, abs=1e-15)

    @pytest.mark.parametrize("ph", PH_GRID)
    @pytest.mark.parametrize("d", DELTA_GRID)
    @pytest.mark.parametrize("al,ah", ALPHA_GRID)
    def test_pcs_floor_at_unrounded_size(self, ph, d, al, ah):
        g = goal(ph, d, al, ah)
        n_exact, lam = normal._one_stage_solution(g)
        bl, bh = normal.pcs_one_stage(g, lam, n_exact)
        assert abs(bl - al) < 1e-9
        assert abs(bh - ah) < 1e-9

    @pytest.mark.parametrize("ph", PH_GRID)
    @pytest.mark.parametrize("d", DELTA_GRID)
    @pytest.mark.parametrize("al,ah", ALPHA_GRID)
    def test_rounding_never_hurts(self, ph, d, al, ah):
        g = goal(ph, d, al, ah)
        design = normal.design_one_stage(g)
        assert design.achieved_pcs_low >= al - 1e-12
        assert design.achieved_pcs_high >= ah - 1e-12


class TestTwoStageOrdering:
    @pytest.mark.parametrize("ph", PH_GRID)
    @pytest.mark.parametrize("d", DELTA_GRID)
    @pytest.mark.parametrize("al,ah", ALPHA_GRID)
    def test_orderings_across_grid(self, ph, d, al, ah):
        one = normal.design_one_stage(goal(ph, d, al, ah))
        two = normal.design_two_stage(goal(ph, d, al, ah, omega=0.5))
        assert two.lambda_ < two.lambda1
        assert two.lambda_ > one.lambda_
        assert two.n_low >= one.n_low - 1


class TestEqualAllocationReduction:
    @pytest.mark.parametrize("ph", PH_GRID)
    @pytest.mark.parametrize("d", DELTA_GRID)
    @pytest.mark.parametrize("al,ah", ALPHA_GRID)
    def test_ratio_one_matches_dedicated_formulas(self, ph, d, al, ah):
        # independent rendering of the equal-allocation formulas
        sl = math.sqrt(2 * ph * (1 - ph))
        sh = math.sqrt((ph - d) * (1 - ph + d) + ph * (1 - ph))
        zl = norm_quantile(al)
        zh = norm_quantile(1 - ah)
        n_exact = ((sl * zl - sh * zh) / d) ** 2
        lam = d * sl * zl / (sl * zl - sh * zh)
        design = normal.design_one_stage(goal(ph, d, al, ah, ratio=1.0))
        assert design.lambda_ == lam  # bit-for-bit
        assert design.n_low == math.ceil(n_exact)
