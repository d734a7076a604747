import math
from fractions import Fraction

import numpy as np
import pytest

from simplexcr import (
    EmpiricalDistribution,
    RegionSpec,
    SimplexGrid,
    SimplexPoint,
    chi2_prefilter,
    covering_collection,
    enumerate_simplex,
    level_set_membership_via_pvalue,
    member_of_covering,
    outer_bound_reject,
    p_value,
    polytope_membership,
    region_membership,
    sanov_membership,
    sanov_refined_valid,
    sanov_threshold,
)
from simplexcr.core import LOG_TIE_TOL, compositions_array, log_pmf_array
from simplexcr.regions import (
    covering_sizes_grid,
    levelset_membership_grid,
    polytope_membership_grid,
    polytope_threshold,
    sanov_membership_grid,
)

from oracles import (
    exact_p_value,
    min_covering_size_bruteforce,
    point_from_fractions,
    random_rational_point,
)

UNIFORM3 = SimplexPoint.uniform(3)


class TestRegionSpec:
    def test_validates_delta(self):
        with pytest.raises(ValueError):
            RegionSpec(0.0, "levelset", 5, 3)
        with pytest.raises(ValueError):
            RegionSpec(1.0, "levelset", 5, 3)

    def test_validates_kind(self):
        with pytest.raises(ValueError):
            RegionSpec(0.3, "wilson", 5, 3)


class TestCoveringCollection:
    def test_uniform_example(self):
        cc = covering_collection(UNIFORM3, 5, 0.7)
        assert {m.counts for m in cc.members} == {(1, 2, 2), (2, 1, 2), (2, 2, 1)}
        assert len(cc) == 3
        assert cc.total_mass >= 0.3
        assert cc.total_mass == pytest.approx(90 / 243, abs=1e-12)

    def test_deterministic_parameter(self):
        cc = covering_collection(SimplexPoint((1.0, 0.0, 0.0)), 5, 0.3)
        assert [m.counts for m in cc.members] == [(5, 0, 0)]
        assert cc.total_mass == 1.0

    def test_minimal_cardinality_concentrated_case(self):
        # exhaustive subset oracle over all of Delta_{3,6}
        p = SimplexPoint((0.7, 0.2, 0.1))
        cc = covering_collection(p, 6, 0.3)
        counts = compositions_array(3, 6)
        probs = np.exp(log_pmf_array(counts, p.as_array()))
        assert len(cc) == min_covering_size_bruteforce(probs, 0.7)

    def test_minimal_cardinality_random_sweep(self):
        rng = np.random.default_rng(23)
        for k, n in [(2, 4), (2, 6), (3, 4)]:
            counts = compositions_array(k, n)
            for delta in (0.1, 0.3):
                for _ in range(10):
                    p = SimplexPoint(tuple(rng.dirichlet(np.ones(k))), normalize=True)
                    probs = np.exp(log_pmf_array(counts, p.as_array()))
                    want = min_covering_size_bruteforce(probs, 1.0 - delta)
                    assert len(covering_collection(p, n, delta)) == want

    def test_mass_reaches_target_and_prefix_minimal(self):
        rng = np.random.default_rng(29)
        for _ in range(25):
            p = SimplexPoint(tuple(rng.dirichlet(np.ones(3))), normalize=True)
            delta = float(rng.uniform(0.05, 0.9))
            cc = covering_collection(p, 7, delta)
            assert cc.total_mass >= 1.0 - delta
            if len(cc) > 1:
                assert cc.cumulative[-2] < 1.0 - delta

    def test_probability_descending_with_lex_ties(self):
        cc = covering_collection(UNIFORM3, 5, 0.7)
        assert [m.counts for m in cc.members] == [(1, 2, 2), (2, 1, 2), (2, 2, 1)]

    def test_rejects_bad_delta(self):
        with pytest.raises(ValueError):
            covering_collection(UNIFORM3, 5, 0.0)


class TestMemberOfCovering:
    def test_uniform_tie_class_member(self):
        assert member_of_covering(EmpiricalDistribution((1, 2, 2)), UNIFORM3, 0.7)
        assert member_of_covering(EmpiricalDistribution((2, 2, 1)), UNIFORM3, 0.7)

    def test_uniform_corner_not_member(self):
        assert not member_of_covering(EmpiricalDistribution((5, 0, 0)), UNIFORM3, 0.7)

    def test_sole_positive_outcome(self):
        p = SimplexPoint((1.0, 0.0, 0.0))
        for delta in (0.05, 0.5, 0.95):
            assert member_of_covering(EmpiricalDistribution((5, 0, 0)), p, delta)
            assert not member_of_covering(EmpiricalDistribution((4, 1, 0)), p, delta)

    def test_agrees_with_materialized_collection(self):
        rng = np.random.default_rng(31)
        outcomes = enumerate_simplex(3, 5)
        for _ in range(40):
            p = SimplexPoint(tuple(rng.dirichlet(np.ones(3))), normalize=True)
            delta = float(rng.uniform(0.05, 0.9))
            members = set(covering_collection(p, 5, delta).members)
            for phat in outcomes:
                assert member_of_covering(phat, p, delta) == (phat in members)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            member_of_covering(EmpiricalDistribution((1, 1)), UNIFORM3, 0.3)


class TestPValue:
    def test_deterministic_outcome(self):
        p = SimplexPoint((1.0, 0.0, 0.0))
        assert p_value(EmpiricalDistribution((5, 0, 0)), p) == 1.0

    def test_zero_probability_outcome(self):
        p = SimplexPoint((1.0, 0.0, 0.0))
        assert p_value(EmpiricalDistribution((0, 5, 0)), p) == 0.0

    def test_exhaustive_rational_oracle(self):
        rng = np.random.default_rng(37)
        for _ in range(5):
            fracs = random_rational_point(rng, 3, denom=20)
            p = point_from_fractions(fracs)
            for counts in [(1, 2, 2), (5, 0, 0), (0, 1, 4), (2, 2, 1)]:
                want = float(exact_p_value(counts, fracs))
                got = p_value(EmpiricalDistribution(counts), p)
                assert got == pytest.approx(want, rel=1e-9, abs=1e-12)

    def test_most_probable_outcome_under_uniform(self):
        # every outcome ties or falls below the modal tie class, so the sum
        # covers the whole simplex
        assert p_value(EmpiricalDistribution((1, 2, 2)), UNIFORM3) == 1.0


class TestPvalueMembership:
    def test_deterministic(self):
        p = SimplexPoint((1.0, 0.0, 0.0))
        assert level_set_membership_via_pvalue(p, EmpiricalDistribution((5, 0, 0)), 0.3)

    def test_exhaustive_comparison(self):
        fracs = (Fraction(1, 3),) * 3
        want = float(exact_p_value((5, 0, 0), fracs))
        got = level_set_membership_via_pvalue(
            UNIFORM3, EmpiricalDistribution((5, 0, 0)), 0.3
        )
        assert got == (want > 0.3)

    def test_disagreements_only_inside_tie_class(self):
        rng = np.random.default_rng(41)
        outcomes = enumerate_simplex(3, 5)
        counts = compositions_array(3, 5)
        delta = 0.7
        checked = disagreements = 0
        for _ in range(50):
            p = SimplexPoint(tuple(rng.dirichlet(np.ones(3))), normalize=True)
            logp = log_pmf_array(counts, p.as_array())
            for i, phat in enumerate(outcomes):
                a = member_of_covering(phat, p, delta)
                b = level_set_membership_via_pvalue(p, phat, delta)
                checked += 1
                if a != b:
                    disagreements += 1
                    q = logp[i]
                    strict = math.fsum(np.exp(logp[logp > q + LOG_TIE_TOL]))
                    tie_mass = math.fsum(
                        np.exp(logp[np.abs(logp - q) <= LOG_TIE_TOL])
                    )
                    assert strict < 1.0 - delta <= strict + tie_mass
        assert checked == 50 * 21
        assert disagreements < checked


class TestOuterBound:
    def test_never_rejects_at_truth(self):
        phat = EmpiricalDistribution((6, 6, 3))
        assert not outer_bound_reject(phat, phat.as_point(), 0.3)

    def test_extreme_parameter_rejected(self):
        p = SimplexPoint((1e-6, 1e-6, 1.0 - 2e-6))
        assert outer_bound_reject(EmpiricalDistribution((5, 5, 5)), p, 0.3)

    def test_soundness_sweep(self):
        rng = np.random.default_rng(43)
        outcomes = enumerate_simplex(3, 6)
        for _ in range(25):
            p = SimplexPoint(tuple(rng.dirichlet(np.ones(3))), normalize=True)
            for delta in (0.05, 0.3):
                for phat in outcomes:
                    if outer_bound_reject(phat, p, delta):
                        assert p_value(phat, p) <= delta

    def test_type_class_sandwich(self):
        rng = np.random.default_rng(47)
        counts = compositions_array(3, 8)
        n, k = 8, 3
        from simplexcr import kl_divergence

        for _ in range(20):
            p = SimplexPoint(tuple(rng.dirichlet(np.ones(3))), normalize=True)
            logp = log_pmf_array(counts, p.as_array())
            for row, lp in zip(counts, logp):
                div = kl_divergence(EmpiricalDistribution(tuple(row)).as_point(), p)
                assert lp <= -n * div + 1e-9
                assert lp >= -n * div - k * math.log(n + 1) - 1e-9


class TestChi2Prefilter:
    def test_exact_fit_gives_one(self):
        phat = EmpiricalDistribution((5, 5, 5))
        assert chi2_prefilter(phat, UNIFORM3) == pytest.approx(1.0)

    def test_hand_evaluated_statistic(self):
        # counts (6,6,3) against uniform expectation 5: (1+1+4)/5 = 1.2
        from scipy.stats import chi2

        phat = EmpiricalDistribution((6, 6, 3))
        assert chi2_prefilter(phat, UNIFORM3) == pytest.approx(
            float(chi2.sf(1.2, 2)), abs=1e-14
        )

    def test_monotone_in_statistic(self):
        base = chi2_prefilter(EmpiricalDistribution((6, 6, 3)), UNIFORM3)
        worse = chi2_prefilter(EmpiricalDistribution((9, 3, 3)), UNIFORM3)
        assert worse < base

    def test_zero_coordinate_unavailable(self):
        with pytest.raises(ValueError):
            chi2_prefilter(EmpiricalDistribution((1, 1, 1)), SimplexPoint((0.5, 0.5, 0.0)))


class TestSanov:
    def test_self_membership(self):
        phat = EmpiricalDistribution((6, 6, 3))
        assert sanov_membership(phat.as_point(), phat, 0.7)

    def test_refined_threshold_value(self):
        assert sanov_threshold(3, 15, 0.7) == pytest.approx(
            2.0 * math.log(4.0 / 0.7) / 15.0, abs=1e-15
        )

    def test_fallback_threshold_value(self):
        assert sanov_threshold(3, 15, 0.7, refined=False) == pytest.approx(
            (3.0 * math.log(16.0) - math.log(0.7)) / 15.0, abs=1e-15
        )

    def test_validity_condition(self):
        assert not sanov_refined_valid(3, 15)  # e * (15/8pi)^(1/3) ~ 2.29
        assert sanov_refined_valid(2, 15)
        assert sanov_refined_valid(3, 50)

    def test_membership_uses_kl(self):
        phat = EmpiricalDistribution((6, 6, 3))
        thr = sanov_threshold(3, 15, 0.7)
        from simplexcr import kl_divergence

        p = SimplexPoint((0.45, 0.35, 0.2))
        want = kl_divergence(phat.as_point(), p) <= thr
        assert sanov_membership(p, phat, 0.7) == want


class TestPolytope:
    def test_self_membership(self):
        phat = EmpiricalDistribution((6, 6, 3))
        assert polytope_membership(phat.as_point(), phat, 0.7)

    def test_threshold_value(self):
        assert polytope_threshold(3, 15, 0.7) == pytest.approx(
            math.log(6.0 / 0.7) / 15.0, abs=1e-15
        )

    def test_single_coordinate_violation(self):
        phat = EmpiricalDistribution((6, 6, 3))
        p = SimplexPoint((0.99, 0.005, 0.005))
        assert not polytope_membership(p, phat, 0.7)

    def test_conjunction_semantics(self):
        phat = EmpiricalDistribution((5, 5, 5))
        ok = SimplexPoint((0.34, 0.33, 0.33))
        assert polytope_membership(ok, phat, 0.3)
        # move one marginal far out while keeping the rest reasonable
        bad = SimplexPoint((0.95, 0.03, 0.02))
        assert not polytope_membership(bad, phat, 0.3)


class TestRegionMembership:
    def test_levelset_blue_dot(self):
        spec = RegionSpec(0.7, "levelset", 5, 3)
        assert region_membership(UNIFORM3, EmpiricalDistribution((1, 2, 2)), spec)

    def test_sanov_self(self):
        spec = RegionSpec(0.5, "sanov", 15, 3)
        phat = EmpiricalDistribution((6, 6, 3))
        assert region_membership(phat.as_point(), phat, spec)

    def test_polytope_example_false(self):
        spec = RegionSpec(0.7, "polytope", 15, 3)
        phat = EmpiricalDistribution((6, 6, 3))
        assert not region_membership(SimplexPoint((0.99, 0.005, 0.005)), phat, spec)

    def test_spec_consistency_enforced(self):
        spec = RegionSpec(0.7, "levelset", 6, 3)
        with pytest.raises(ValueError):
            region_membership(UNIFORM3, EmpiricalDistribution((1, 2, 2)), spec)

    def test_prefilter_never_changes_answer(self):
        rng = np.random.default_rng(53)
        outcomes = enumerate_simplex(3, 10)
        for delta in (0.05, 0.3):
            spec = RegionSpec(delta, "levelset", 10, 3)
            for _ in range(8):
                p = SimplexPoint(tuple(rng.dirichlet(np.ones(3))), normalize=True)
                for phat in outcomes:
                    plain = region_membership(p, phat, spec)
                    fast = region_membership(p, phat, spec, use_chi2_prefilter=True)
                    assert plain == fast


class TestVectorizedPaths:
    def test_levelset_grid_matches_scalar(self):
        rng = np.random.default_rng(59)
        phat = EmpiricalDistribution((2, 5, 3))
        pts = rng.dirichlet(np.ones(3), size=150)
        for delta in (0.1, 0.5):
            got = levelset_membership_grid(phat, delta, pts)
            want = [member_of_covering(phat, SimplexPoint(tuple(r), normalize=True), delta) for r in pts]
            assert got.tolist() == want

    def test_levelset_grid_boundary_points(self):
        phat = EmpiricalDistribution((2, 5, 3))
        pts = np.array([[1.0, 0.0, 0.0], [0.0, 0.5, 0.5], [0.2, 0.5, 0.3]])
        got = levelset_membership_grid(phat, 0.3, pts)
        want = [member_of_covering(phat, SimplexPoint(tuple(r)), 0.3) for r in pts]
        assert got.tolist() == want

    def test_sanov_polytope_grids_match_scalar(self):
        rng = np.random.default_rng(61)
        phat = EmpiricalDistribution((6, 6, 3))
        pts = rng.dirichlet(np.ones(3), size=100)
        sg = sanov_membership_grid(phat, 0.7, pts)
        pg = polytope_membership_grid(phat, 0.7, pts)
        for i, row in enumerate(pts):
            p = SimplexPoint(tuple(row), normalize=True)
            assert sg[i] == sanov_membership(p, phat, 0.7)
            assert pg[i] == polytope_membership(p, phat, 0.7)

    def test_covering_sizes_match_collections(self):
        rng = np.random.default_rng(67)
        pts = rng.dirichlet(np.ones(3), size=40)
        sizes = covering_sizes_grid(5, 3, 0.7, pts)
        for row, size in zip(pts, sizes):
            p = SimplexPoint(tuple(row), normalize=True)
            assert size == len(covering_collection(p, 5, 0.7))

    def test_uniform_covering_size_is_three(self):
        sizes = covering_sizes_grid(5, 3, 0.7, np.array([[1 / 3, 1 / 3, 1 / 3]]))
        assert sizes.tolist() == [3]
