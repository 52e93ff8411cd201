"""Analytic bound formulas against frozen high-precision oracles.

Frozen constants were evaluated before the build with mpmath (40+ digits)
or, for the half-line integrals, with a midpoint Riemann sum at step 1e-5
truncated at x = 40.
"""

import math

import pytest

from pdtrunc.bounds import (
    BERNSTEIN_BOUNDED_FIXED,
    BERNSTEIN_GAUSS_EXPDIAG,
    BERNSTEIN_GAUSS_FIXED,
    INDETERMINATE,
    LIMIT_ONE,
    LIMIT_ZERO,
    bernstein_lower,
    classify_limit,
    dense_sandwich,
    marginal_distance_bounds,
    sparse_marginal_bounds,
    truncation_distances,
)
from pdtrunc.errors import DomainError
from pdtrunc.estimators import estimate_c, estimate_c_given_z
from pdtrunc.model import (
    BernoulliSparsity,
    Dense,
    ExponentialDiagonal,
    FixedDiagonal,
    GammaDiagonal,
    GaussianSlab,
    LaplaceSlab,
    PriorSpec,
    StructureMatrix,
    max_degree,
)
from pdtrunc.numerics import ADAPTIVE_SIMPSON, GAUSS_LEGENDRE, QuadratureSpec
from pdtrunc.schedules import Const, Power

TWO_PHI_ONE_MINUS_ONE = 0.682689492137086

# Riemann oracle, step 1e-5, truncation x = 40: k=3, Exp(1) diagonal,
# sigma = 0.1, m = 3 active pairs.
SANDWICH_EXP_LOWER = 0.47794787874992856
SANDWICH_EXP_UPPER = 0.9971535288319938

# mpmath oracles
BERNSTEIN_I_MID = 0.99985054661475219  # mu=1, sigma=0.15, d=2, k=5
BERNSTEIN_II_POS = 0.99992304650171689  # mu=2, sigma=0.1, a=0.2, d=3, k=8
BERNSTEIN_III_CLOSED = 0.895535264752  # mu=1, sigma=0.001, d=4, k=10
SPARSE_KL_JOINT = 0.69314718055994531  # b=0.5
SPARSE_KL_OFF = 0.015403270679109896  # b=0.5, k=10
SPARSE_TV_OFF = 0.087758961591138645
MEAN_KL = 0.16363636363636364  # c=e^-9, k=10, non-iid
MEAN_TV = 0.28603877677367769
IID_KL_OFF = 0.2
IID_TV_OFF = 0.31622776601683793
IID_KL_DIAG = 0.9
IID_TV_DIAG = 0.67082039324993691


class TestTruncationDistances:
    def test_no_truncation(self):
        d = truncation_distances(1.0)
        assert d.tv_joint == 0.0 and d.kl_joint == 0.0

    def test_half(self):
        d = truncation_distances(0.5)
        assert d.tv_joint == pytest.approx(0.5)
        assert d.kl_joint == pytest.approx(math.log(2.0), abs=1e-15)

    def test_heavy_truncation(self):
        d = truncation_distances(math.exp(-4.0))
        assert d.tv_joint == pytest.approx(1.0 - math.exp(-4.0), abs=1e-15)
        assert d.kl_joint == pytest.approx(4.0, abs=1e-12)

    def test_rejects_zero(self):
        with pytest.raises(DomainError):
            truncation_distances(0.0)


class TestMarginalDistanceBounds:
    def test_no_truncation_vanishes(self):
        for k in (2, 10, 50):
            d = marginal_distance_bounds(1.0, k, iid=True)
            assert d.kl_diag_marginal == 0.0 and d.kl_offdiag_marginal == 0.0
            assert d.tv_diag_marginal == 0.0 and d.tv_offdiag_marginal == 0.0

    def test_iid_frozen_values(self):
        d = marginal_distance_bounds(math.exp(-9.0), 10, iid=True)
        assert d.kl_offdiag_marginal == pytest.approx(IID_KL_OFF, abs=1e-12)
        assert d.tv_offdiag_marginal == pytest.approx(IID_TV_OFF, abs=1e-12)
        assert d.kl_diag_marginal == pytest.approx(IID_KL_DIAG, abs=1e-12)
        assert d.tv_diag_marginal == pytest.approx(IID_TV_DIAG, abs=1e-12)

    def test_mean_marginal_frozen_values(self):
        d = marginal_distance_bounds(math.exp(-9.0), 10, iid=False)
        assert d.kl_mean_marginal == pytest.approx(MEAN_KL, abs=1e-12)
        assert d.tv_mean_marginal == pytest.approx(MEAN_TV, abs=1e-12)
        assert d.tv_diag_marginal is None

    def test_json_omits_absent_fields(self):
        obj = marginal_distance_bounds(0.5, 5, iid=False).to_json()
        assert set(obj) == {"tv_mean_marginal", "kl_mean_marginal"}


class TestDenseSandwich:
    def test_k2_bounds_coincide_with_exact_law(self):
        res = dense_sandwich(FixedDiagonal(1.0), 1.0, 2, m=1)
        assert res.lower == res.upper
        assert res.lower == pytest.approx(TWO_PHI_ONE_MINUS_ONE, abs=1e-12)

    def test_tiny_scale_saturates(self):
        for k, m in [(5, 10), (50, 1225)]:
            res = dense_sandwich(FixedDiagonal(1.0), 1e-8, k, m=m)
            assert abs(res.lower - 1.0) < 1e-12
            assert abs(res.upper - 1.0) < 1e-12

    @pytest.mark.parametrize("method", [ADAPTIVE_SIMPSON, GAUSS_LEGENDRE])
    def test_exponential_diag_against_riemann_oracle(self, method):
        quad = QuadratureSpec(method=method)
        res = dense_sandwich(ExponentialDiagonal(1.0), 0.1, 3, m=3, quad=quad)
        assert abs(res.lower - SANDWICH_EXP_LOWER) < 1e-8
        assert abs(res.upper - SANDWICH_EXP_UPPER) < 1e-8

    def test_monotone_in_sigma_and_m(self):
        diag = FixedDiagonal(1.0)
        sigmas = [0.02, 0.05, 0.1, 0.3]
        results = [dense_sandwich(diag, s, 10) for s in sigmas]
        for a, b in zip(results, results[1:]):
            assert b.lower <= a.lower and b.upper <= a.upper
        ms = [0, 10, 30, 45]
        results = [dense_sandwich(diag, 0.1, 10, m=m) for m in ms]
        for a, b in zip(results, results[1:]):
            assert b.lower <= a.lower and b.upper <= a.upper

    def test_underflow_safe_at_k200(self):
        res = dense_sandwich(FixedDiagonal(1.0), 0.05, 200)
        assert 0.0 <= res.lower <= res.upper <= 1.0
        assert res.lower == 0.0  # far below double-precision floor, clamped by log-space eval

    def test_non_gaussian_slab_notes_generalisation(self):
        res = dense_sandwich(FixedDiagonal(1.0), 0.1, 5, slab=LaplaceSlab(0.1))
        assert "central probability" in res.notes
        assert 0.0 < res.lower <= res.upper <= 1.0

    def test_sandwich_contains_mc_estimate_fixed_diag(self):
        for k, sigma in [(5, 0.1), (10, 0.05)]:
            spec = PriorSpec(k, FixedDiagonal(1.0), GaussianSlab(sigma), Dense())
            est = estimate_c(spec, 4000, seed=31)
            res = dense_sandwich(FixedDiagonal(1.0), sigma, k)
            assert res.lower - 3 * est.se <= est.value <= res.upper + 3 * est.se

    def test_sandwich_contains_mc_estimate_stochastic_diag(self):
        for diag in (ExponentialDiagonal(1.0), GammaDiagonal(2.0, 2.0)):
            spec = PriorSpec(5, diag, GaussianSlab(0.05), Dense())
            est = estimate_c(spec, 4000, seed=32)
            res = dense_sandwich(diag, 0.05, 5)
            assert res.lower - 3 * est.se <= est.value <= res.upper + 3 * est.se

    def test_sparse_exponent_matches_pattern_constant(self):
        z = StructureMatrix.from_edges(5, [[0, 1], [1, 2], [3, 4]])
        spec = PriorSpec(5, FixedDiagonal(1.0), GaussianSlab(0.3), Dense())
        est = estimate_c_given_z(spec, z, 5000, seed=33)
        res = dense_sandwich(FixedDiagonal(1.0), 0.3, 5, m=z.edge_count())
        assert res.lower - 3 * est.se <= est.value <= res.upper + 3 * est.se


class TestBernsteinLower:
    def test_sharp_regime_rounds_to_one(self):
        # complement 2k*exp(-50) ~ 3.86e-20 is below double resolution of 1
        res = bernstein_lower(BERNSTEIN_GAUSS_FIXED, 1.0, 0.05, 4, 100)
        assert res.lower == 1.0
        assert res.upper == 1.0 and res.valid

    def test_gauss_fixed_frozen_value(self):
        res = bernstein_lower(BERNSTEIN_GAUSS_FIXED, 1.0, 0.15, 2, 5)
        assert res.lower == pytest.approx(BERNSTEIN_I_MID, abs=1e-14)

    def test_vacuous_bound_clamps(self):
        res = bernstein_lower(BERNSTEIN_GAUSS_FIXED, 1.0, 1e6, 4, 100)
        assert res.lower == 0.0
        assert "clamped" in res.notes

    def test_bounded_fixed_frozen_value(self):
        res = bernstein_lower(BERNSTEIN_BOUNDED_FIXED, 2.0, 0.1, 3, 8, a=0.2)
        assert res.lower == pytest.approx(BERNSTEIN_II_POS, abs=1e-14)

    def test_bounded_fixed_needs_cap(self):
        with pytest.raises(DomainError):
            bernstein_lower(BERNSTEIN_BOUNDED_FIXED, 1.0, 0.1, 3, 8)

    def test_expdiag_closed_form_frozen_value(self):
        res = bernstein_lower(BERNSTEIN_GAUSS_EXPDIAG, 1.0, 0.001, 4, 10)
        assert res.lower == pytest.approx(BERNSTEIN_III_CLOSED, abs=1e-9)
        assert res.valid

    def test_expdiag_hypothesis_failure_flags_invalid(self):
        res = bernstein_lower(BERNSTEIN_GAUSS_EXPDIAG, 1.0, 10.0, 4, 10)
        assert not res.valid
        assert res.lower == 0.0

    def test_expdiag_free_threshold_at_optimiser_dominates_closed_form(self):
        mu, sigma, d, k = 1.0, 0.001, 4, 10
        t1 = sigma * math.sqrt(2 * d * math.log(2 * math.sqrt(2) * mu / (sigma * math.sqrt(d))))
        free = bernstein_lower(BERNSTEIN_GAUSS_EXPDIAG, mu, sigma, d, k, t=t1)
        closed = bernstein_lower(BERNSTEIN_GAUSS_EXPDIAG, mu, sigma, d, k)
        assert free.lower >= closed.lower - 1e-12

    def test_monotonicity(self):
        lows_d = [bernstein_lower(BERNSTEIN_GAUSS_FIXED, 1.0, 0.1, d, 20).lower for d in (1, 3, 9, 19)]
        assert lows_d == sorted(lows_d, reverse=True)
        lows_s = [bernstein_lower(BERNSTEIN_GAUSS_FIXED, 1.0, s, 4, 20).lower for s in (0.05, 0.1, 0.2)]
        assert lows_s == sorted(lows_s, reverse=True)
        lows_mu = [bernstein_lower(BERNSTEIN_GAUSS_FIXED, mu, 0.1, 4, 20).lower for mu in (0.5, 1.0, 2.0)]
        assert lows_mu == sorted(lows_mu)

    def test_lower_bounds_conditional_constant(self):
        z = StructureMatrix.from_edges(8, [[0, 1], [1, 2], [2, 3], [4, 5], [6, 7], [1, 3]])
        spec = PriorSpec(8, FixedDiagonal(1.0), GaussianSlab(0.12), Dense())
        est = estimate_c_given_z(spec, z, 5000, seed=34)
        res = bernstein_lower(BERNSTEIN_GAUSS_FIXED, 1.0, 0.12, max_degree(z), 8)
        assert res.lower <= est.value + 3 * est.se


class TestSparseMarginalBounds:
    def test_zero_b_vanishes(self):
        d = sparse_marginal_bounds(0.0, 10, 0.5)
        assert d.tv_joint == 0.0 and d.kl_joint == 0.0
        assert d.kl_offdiag_marginal == 0.0 and d.tv_offdiag_marginal == 0.0

    def test_frozen_values(self):
        d = sparse_marginal_bounds(0.5, 10, 0.5)
        assert d.kl_joint == pytest.approx(SPARSE_KL_JOINT, abs=1e-14)
        assert d.kl_offdiag_marginal == pytest.approx(SPARSE_KL_OFF, abs=1e-14)
        assert d.tv_offdiag_marginal == pytest.approx(SPARSE_TV_OFF, abs=1e-14)

    def test_rejects_trivial_b(self):
        with pytest.raises(DomainError):
            sparse_marginal_bounds(1.0, 10, 0.5)

    def test_caps_edge_probability_shift(self):
        """The off-diagonal TV bound dominates the empirical shift in the
        edge frequency caused by conditioning on positive definiteness."""
        k, eta, sigma, n = 8, 0.3, 0.05, 4000
        spec = PriorSpec(k, FixedDiagonal(1.0), GaussianSlab(sigma), BernoulliSparsity(eta))
        from pdtrunc.model import is_pd, sample_matrix, sample_structure
        from pdtrunc.rng import RngStream

        gen = RngStream(35).generator()
        n_pairs = k * (k - 1) // 2
        kept_edges = kept = 0
        for _ in range(n):
            z = sample_structure(spec, gen)
            m = sample_matrix(spec, z, gen)
            if is_pd(m):
                kept += 1
                kept_edges += z.edge_count()
        assert kept > 100
        freq = kept_edges / (kept * n_pairs)
        se = math.sqrt(eta * (1 - eta) / (kept * n_pairs))
        b = 1.0 - bernstein_lower(BERNSTEIN_GAUSS_FIXED, 1.0, sigma, k - 1, k).lower
        d = sparse_marginal_bounds(b, k, eta)
        assert abs(freq - eta) <= d.tv_offdiag_marginal + 3 * se


class TestClassifyLimit:
    def test_dense_fixed_constant_margins(self):
        assert classify_limit("dense-fixed", delta=Const(0.1)).verdict == LIMIT_ONE
        assert classify_limit("dense-fixed", delta=Const(-0.05)).verdict == LIMIT_ZERO
        assert classify_limit("dense-fixed", delta=Const(0.0)).verdict == INDETERMINATE

    def test_dense_fixed_decaying_margins(self):
        assert classify_limit("dense-fixed", delta=Power(1.0, -0.5)).verdict == LIMIT_ONE
        assert classify_limit("dense-fixed", delta=Power(1.0, -1.0)).verdict == INDETERMINATE
        assert classify_limit("dense-fixed", delta=Power(1.0, -2.0 / 3.0)).verdict == INDETERMINATE

    def test_exp_diagonal_rules(self):
        assert classify_limit("dense-stochastic-exp", sigma=Power(1.0, -2.0)).verdict == LIMIT_ONE
        assert classify_limit("dense-stochastic-exp", sigma=Power(1.0, -1.0)).verdict == INDETERMINATE
        assert classify_limit("dense-stochastic-exp", sigma=Const(0.5)).verdict == LIMIT_ZERO
        assert classify_limit("dense-stochastic-exp", sigma=Power(2.0, -0.25)).verdict == LIMIT_ZERO

    def test_gamma_diagonal_rule(self):
        one = classify_limit("dense-stochastic-gamma", sigma=Power(1.0, -1.25), alpha=2.0)
        assert one.verdict == LIMIT_ONE
        border = classify_limit("dense-stochastic-gamma", sigma=Power(1.0, -1.0), alpha=2.0)
        assert border.verdict == INDETERMINATE

    def test_sparse_fixed_rules(self):
        fast_eta = classify_limit("sparse-fixed", delta=Const(0.1), eta=Power(0.5, -0.5))
        assert fast_eta.verdict == INDETERMINATE
        ok = classify_limit("sparse-fixed", delta=Const(0.1), eta=Power(0.5, -0.25))
        assert ok.verdict == LIMIT_ONE
        down = classify_limit("sparse-fixed", delta=Const(-0.1), eta=Const(0.2))
        assert down.verdict == LIMIT_ZERO

    def test_every_verdict_cites_a_rule(self):
        res = classify_limit("dense-fixed", delta=Power(1.0, -1.0))
        assert res.rule

    def test_missing_schedule_raises(self):
        with pytest.raises(DomainError):
            classify_limit("sparse-fixed", delta=Const(0.1))
        with pytest.raises(DomainError):
            classify_limit("dense-stochastic-gamma", sigma=Power(1.0, -2.0), alpha=0.5)
        with pytest.raises(DomainError):
            classify_limit("unknown-family", delta=Const(0.1))


class TestJsonSurfaces:
    def test_bound_result_json(self):
        obj = bernstein_lower(BERNSTEIN_GAUSS_FIXED, 1.0, 0.15, 2, 5).to_json()
        assert set(obj) == {"lower", "upper", "method", "valid", "notes"}

    def test_distance_bounds_json(self):
        obj = sparse_marginal_bounds(0.25, 6, 0.5).to_json()
        assert "tv_joint" in obj and "tv_diag_marginal" not in obj
