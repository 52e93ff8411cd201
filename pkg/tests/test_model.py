"""Sampling laws, matrix primitives, and the scale coupling."""

import math

import numpy as np
import pytest

from pdtrunc.errors import DomainError
from pdtrunc.model import (
    BernoulliSparsity,
    Dense,
    ExponentialDiagonal,
    FixedDiagonal,
    FixedPattern,
    GammaDiagonal,
    GaussianSlab,
    LaplaceSlab,
    PriorSpec,
    StructureMatrix,
    StudentTSlab,
    SymMatrix,
    TruncatedGaussianSlab,
    coupled_scale,
    is_pd,
    max_degree,
    min_eig,
    sample_matrix,
    sample_structure,
)
from pdtrunc.rng import RngStream, StreamPool

# mpmath: variance of N(0,1) truncated to |x| <= 1.5
TG_VARIANCE_CAP_1_5 = 0.55152441576155131


def _gen(seed, index=0):
    return RngStream(seed, index).generator()


class TestStreams:
    def test_same_stream_replays_bits(self):
        a = RngStream(7, 3).generator().standard_normal(8)
        b = RngStream(7, 3).generator().standard_normal(8)
        assert np.array_equal(a, b)

    def test_distinct_indices_differ(self):
        a = RngStream(7, 0).generator().standard_normal(8)
        b = RngStream(7, 1).generator().standard_normal(8)
        assert not np.array_equal(a, b)

    def test_pool_matches_fresh_generators(self):
        pool = StreamPool()
        for idx in (0, 1, 17, 2**40):
            fresh = RngStream(99, idx).generator().standard_normal(6)
            pooled = pool.generator(99, idx).standard_normal(6)
            assert np.array_equal(fresh, pooled)


class TestStructureSampling:
    def test_dense_pattern_is_complete(self):
        spec = PriorSpec(3, FixedDiagonal(1.0), GaussianSlab(1.0), Dense())
        z = sample_structure(spec, _gen(0))
        assert np.all(z.bits == 1)
        assert z.to_dense().sum() == 6

    def test_bernoulli_zero_is_empty(self):
        spec = PriorSpec(10, FixedDiagonal(1.0), GaussianSlab(1.0), BernoulliSparsity(0.0))
        z = sample_structure(spec, _gen(1))
        assert z.edge_count() == 0

    def test_bernoulli_half_frequency(self):
        # binomial SE over the 1225 pairs at k = 50 is sqrt(0.25/1225)
        spec = PriorSpec(50, FixedDiagonal(1.0), GaussianSlab(1.0), BernoulliSparsity(0.5))
        z = sample_structure(spec, _gen(12345))
        frac = z.edge_count() / (50 * 49 / 2)
        assert abs(frac - 0.5) <= 3.0 * math.sqrt(0.25 / 1225)

    def test_fixed_pattern_passthrough(self):
        pattern = StructureMatrix.from_edges(4, [[0, 1], [2, 3]])
        spec = PriorSpec(4, FixedDiagonal(1.0), GaussianSlab(1.0), FixedPattern(pattern))
        assert sample_structure(spec, _gen(2)) == pattern

    def test_pattern_symmetry_and_diagonal(self):
        z = StructureMatrix.from_edges(5, [[3, 1], [0, 4]])
        dense = z.to_dense()
        assert np.array_equal(dense, dense.T)
        assert np.all(np.diag(dense) == 0)


class TestMatrixSampling:
    def test_empty_structure_gives_identity(self):
        spec = PriorSpec(4, FixedDiagonal(1.0), GaussianSlab(2.0))
        m = sample_matrix(spec, StructureMatrix.empty(4), _gen(3))
        np.testing.assert_array_equal(m.to_dense(), np.eye(4))

    def test_degenerate_slab_gives_identity(self):
        spec = PriorSpec(5, FixedDiagonal(1.0), GaussianSlab(0.0))
        m = sample_matrix(spec, StructureMatrix.complete(5), _gen(4))
        np.testing.assert_array_equal(m.to_dense(), np.eye(5))

    def test_exponential_diagonal_moments(self):
        spec = PriorSpec(100, ExponentialDiagonal(1.0), GaussianSlab(0.1))
        m = sample_matrix(spec, StructureMatrix.complete(100), _gen(5))
        assert abs(m.diag.mean() - 1.0) <= 3.0 / math.sqrt(100)

    def test_dimension_mismatch(self):
        spec = PriorSpec(4, FixedDiagonal(1.0), GaussianSlab(1.0))
        with pytest.raises(DomainError):
            sample_matrix(spec, StructureMatrix.empty(5), _gen(6))


class TestSlabLaws:
    @pytest.mark.parametrize(
        "slab,expected_var",
        [
            (GaussianSlab(0.7), 0.49),
            (LaplaceSlab(0.5), 0.5),
            (StudentTSlab(5.0, 0.8), 0.64 * 5.0 / 3.0),
            (TruncatedGaussianSlab(1.0, 1.5), TG_VARIANCE_CAP_1_5),
        ],
    )
    def test_variance_accessor_matches_samples(self, slab, expected_var):
        assert abs(slab.variance() - expected_var) < 1e-12
        draws = slab.sample(_gen(99), 400_000)
        assert abs(draws.mean()) < 0.02
        assert abs(draws.var() - expected_var) / expected_var < 0.03

    def test_truncated_samples_respect_cap(self):
        slab = TruncatedGaussianSlab(1.0, 0.8)
        draws = slab.sample(_gen(100), 50_000)
        assert np.max(np.abs(draws)) <= 0.8

    def test_central_prob_matches_normal(self):
        slab = GaussianSlab(2.0)
        from pdtrunc.numerics import normal_cdf

        assert abs(slab.central_prob(2.0) - (2 * normal_cdf(1.0) - 1)) < 1e-14

    def test_central_prob_is_a_cdf_of_abs(self):
        for slab in (GaussianSlab(1.0), LaplaceSlab(1.0), StudentTSlab(4.0, 1.0),
                     TruncatedGaussianSlab(1.0, 2.0)):
            draws = np.abs(slab.sample(_gen(7), 200_000))
            for r in (0.3, 1.0, 2.5):
                assert abs(slab.central_prob(r) - (draws <= r).mean()) < 0.01

    def test_quantiles_invert_sampling(self):
        for slab in (GaussianSlab(1.3), LaplaceSlab(0.6), StudentTSlab(6.0, 0.9)):
            draws = slab.sample(_gen(8), 200_000)
            for p in (0.1, 0.5, 0.9):
                assert abs((draws <= slab.quantile(p)).mean() - p) < 0.01

    def test_dof_validation(self):
        with pytest.raises(DomainError):
            StudentTSlab(2.0, 1.0)


class TestPdAndEigen:
    def test_identity_is_pd(self):
        assert is_pd(SymMatrix.from_dense(np.eye(5)))

    def test_two_by_two_threshold(self):
        assert not is_pd(np.array([[1.0, 1.5], [1.5, 1.0]]))
        assert is_pd(np.array([[1.0, 0.999], [0.999, 1.0]]))

    def test_min_eig_identity(self):
        assert min_eig(np.eye(4)) == pytest.approx(1.0, abs=1e-12)

    def test_min_eig_two_by_two(self):
        for rho in (-0.7, 0.3, 0.95):
            m = np.array([[1.0, rho], [rho, 1.0]])
            assert min_eig(m) == pytest.approx(1.0 - abs(rho), abs=1e-12)

    def test_min_eig_known_spectrum(self):
        gen = _gen(11)
        q, _ = np.linalg.qr(gen.standard_normal((10, 10)))
        spectrum = np.array([0.1, 0.4, 0.9, 1.0, 1.5, 2.0, 2.2, 3.0, 4.5, 9.0])
        m = q @ np.diag(spectrum) @ q.T
        m = 0.5 * (m + m.T)
        assert abs(min_eig(m) - 0.1) < 1e-9

    def test_pd_agrees_with_min_eig_off_boundary(self):
        spec = PriorSpec(8, FixedDiagonal(1.0), GaussianSlab(0.25))
        gen = _gen(13)
        for _ in range(300):
            m = sample_matrix(spec, StructureMatrix.complete(8), gen)
            lam = min_eig(m)
            if abs(lam) > 1e-8:
                assert is_pd(m) == (lam > 0.0)

    def test_pd_samples_satisfy_pairwise_necessary_condition(self):
        spec = PriorSpec(6, ExponentialDiagonal(1.0), GaussianSlab(0.15))
        gen = _gen(14)
        checked = 0
        for _ in range(500):
            m = sample_matrix(spec, StructureMatrix.complete(6), gen)
            if not is_pd(m):
                continue
            checked += 1
            dense = m.to_dense()
            d = np.diag(dense)
            bound = np.sqrt(np.outer(d, d))
            off = ~np.eye(6, dtype=bool)
            assert np.all(np.abs(dense[off]) < bound[off])
        assert checked > 20


class TestDegreesAndCoupling:
    def test_max_degree_cases(self):
        assert max_degree(StructureMatrix.empty(6)) == 0
        assert max_degree(StructureMatrix.complete(6)) == 5
        path = StructureMatrix.from_edges(4, [[0, 1], [1, 2], [2, 3]])
        assert max_degree(path) == 2

    def test_coupling_identity_and_collapse(self):
        spec = PriorSpec(4, FixedDiagonal(1.0), GaussianSlab(0.5))
        m = sample_matrix(spec, StructureMatrix.complete(4), _gen(15))
        same = coupled_scale(m, 0.5, 0.5)
        np.testing.assert_array_equal(same.to_dense(), m.to_dense())
        collapsed = coupled_scale(m, 0.5, 0.0)
        np.testing.assert_array_equal(collapsed.to_dense(), np.diag(m.diag))

    def test_coupling_two_by_two(self):
        m = SymMatrix(2, np.array([1.0, 1.0]), np.array([0.4]))
        scaled = coupled_scale(m, 1.0, 2.0)
        assert scaled.off[0] == pytest.approx(0.8)

    def test_losing_pd_is_monotone_along_coupling(self):
        """If a draw is PD at an enlarged scale it was PD at the original."""
        spec = PriorSpec(8, ExponentialDiagonal(1.0), GaussianSlab(1.0))
        gen = _gen(16)
        grid = [0.05, 0.1, 0.2, 0.4, 0.8]
        for _ in range(2500):
            m = sample_matrix(spec, StructureMatrix.complete(8), gen)
            flags = [is_pd(coupled_scale(m, 1.0, s)) for s in grid]
            # once lost, never regained as the scale grows
            assert all(not (b and not a) for a, b in zip(flags, flags[1:]))


class TestSerialization:
    @pytest.mark.parametrize(
        "spec",
        [
            PriorSpec(5, FixedDiagonal(1.0), GaussianSlab(0.1), Dense()),
            PriorSpec(8, ExponentialDiagonal(2.0), LaplaceSlab(0.3), BernoulliSparsity(0.25)),
            PriorSpec(3, GammaDiagonal(2.0, 2.0), StudentTSlab(4.5, 0.2), Dense()),
            PriorSpec(
                4,
                FixedDiagonal(2.0),
                TruncatedGaussianSlab(0.5, 1.0),
                FixedPattern(StructureMatrix.from_edges(4, [[0, 1], [1, 3]])),
            ),
        ],
    )
    def test_round_trip(self, spec):
        import json

        payload = json.loads(json.dumps(spec.to_json()))
        restored = PriorSpec.from_json(payload)
        assert restored.to_json() == spec.to_json()

    def test_exact_field_names(self):
        spec = PriorSpec(5, FixedDiagonal(1.0), GaussianSlab(0.1), BernoulliSparsity(0.2))
        obj = spec.to_json()
        assert set(obj) == {"k", "diagonal", "slab", "sparsity"}
        assert obj["diagonal"] == {"type": "fixed", "params": {"mu": 1.0}}
        assert obj["slab"] == {"type": "gaussian", "params": {"sigma": 0.1}}
        assert obj["sparsity"] == {"type": "bernoulli", "params": {"eta": 0.2}}

    def test_validation_errors(self):
        with pytest.raises(DomainError):
            FixedDiagonal(0.0)
        with pytest.raises(DomainError):
            ExponentialDiagonal(-1.0)
        with pytest.raises(DomainError):
            BernoulliSparsity(1.5)
        with pytest.raises(DomainError):
            PriorSpec(1, FixedDiagonal(1.0), GaussianSlab(1.0))
