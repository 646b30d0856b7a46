import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import qmc

from rqmc_ci.rqmc import (
    BITS,
    PointSet,
    RangeError,
    ReplicateSample,
    ScrambleState,
    SobolGenerator,
    check_range,
    generate_sobol,
    replicate_estimates,
    scramble,
    scrambled_nets,
    scrambled_sobol,
    stream_words,
)

seeds = st.integers(min_value=0, max_value=2**63 - 1)


def _rows(a):
    return sorted(map(tuple, np.asarray(a).tolist()))


def _dyadic_cells(values, n):
    return np.floor(values * n).astype(int)


class TestUnscrambled:
    def test_two_points(self):
        np.testing.assert_array_equal(generate_sobol(2, 2).values, [[0.0, 0.0], [0.5, 0.5]])

    def test_single_point_is_origin(self):
        ps = generate_sobol(1, 1)
        assert ps.values.tolist() == [[0.0]]
        assert not ps.scrambled

    def test_one_dimensional_projection(self):
        assert sorted(generate_sobol(1, 8).values[:, 0]) == [k / 8 for k in range(8)]

    @pytest.mark.parametrize("d", [2, 16, 64])
    def test_matches_reference_generator_as_sets(self, d):
        # independent oracle: scipy's own Joe-Kuo based generator
        ref = qmc.Sobol(d, scramble=False, bits=BITS).random_base2(8)
        ref_bits = np.round(ref * 2.0**BITS).astype(np.uint64)
        ours = generate_sobol(d, 256).bits.astype(np.uint64)
        assert _rows(ours) == _rows(ref_bits)

    @pytest.mark.parametrize("d", [1, 5, 32])
    def test_every_projection_is_a_permutation(self, d):
        n = 64
        v = generate_sobol(d, n).values
        for j in range(d):
            assert sorted(_dyadic_cells(v[:, j], n)) == list(range(n))

    def test_generating_matrices_are_upper_unit_triangular(self):
        gen = SobolGenerator.create(8)
        for j in range(8):
            C = gen.matrix(j)
            assert np.all(np.diag(C) == 1)
            assert np.all(np.tril(C, -1) == 0)

    @pytest.mark.parametrize("d,n", [(0, 4), (65, 4), (2, 3), (2, 0)])
    def test_invalid(self, d, n):
        with pytest.raises(ValueError):
            generate_sobol(d, n)


class TestScramble:
    def test_identity_leaves_points(self):
        ps = generate_sobol(3, 16)
        out = scramble(ps, ScrambleState.identity(3))
        np.testing.assert_array_equal(out.bits, ps.bits)
        assert out.scrambled

    def test_pure_shift_flips_first_bit(self):
        ps = generate_sobol(2, 8)
        shift = np.full(2, 1 << (BITS - 1), dtype=np.uint32)
        out = scramble(ps, ScrambleState.identity(2, shift=shift))
        np.testing.assert_array_equal(out.values, np.mod(ps.values + 0.5, 1.0))

    def test_double_scramble_rejected(self):
        ps = scrambled_sobol(2, 8, seed=1)
        with pytest.raises(ValueError):
            scramble(ps, ScrambleState.random(2, seed=2))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            scramble(generate_sobol(2, 8), ScrambleState.identity(3))

    def test_random_state_is_lower_unit_triangular(self):
        st_ = ScrambleState.random(4, seed=7, replicate=3)
        for j in range(4):
            L = st_.matrix(j)
            assert np.all(np.diag(L) == 1)
            assert np.all(np.triu(L, 1) == 0)

    @given(seed=seeds)
    @settings(max_examples=50, deadline=None)
    def test_one_point_per_dyadic_interval(self, seed):
        v = scrambled_sobol(1, 8, seed).values[:, 0]
        assert sorted(_dyadic_cells(v, 8)) == list(range(8))

    @given(seed=seeds, rep=st.integers(0, 1000))
    @settings(max_examples=25, deadline=None)
    def test_projections_stay_stratified(self, seed, rep):
        n, d = 64, 5
        v = scrambled_sobol(d, n, seed, rep).values
        for j in range(d):
            assert sorted(_dyadic_cells(v[:, j], n)) == list(range(n))
        # (0, m, 2)-net property of the first two coordinates survives scrambling
        cells = _dyadic_cells(v[:, 0], 8) * 8 + _dyadic_cells(v[:, 1], 8)
        assert sorted(cells) == list(range(64))

    @given(seed=seeds, rep=st.integers(0, 50))
    @settings(max_examples=25, deadline=None)
    def test_vectorised_path_matches_explicit_scramble(self, seed, rep):
        a = scramble(generate_sobol(3, 32), ScrambleState.random(3, seed, rep))
        b = scrambled_sobol(3, 32, seed, rep)
        np.testing.assert_array_equal(a.bits, b.bits)
        np.testing.assert_array_equal(scrambled_nets(3, 32, seed, [rep])[0], b.bits)

    def test_deterministic(self):
        a = scrambled_sobol(4, 32, seed=11, replicate=2)
        b = scrambled_sobol(4, 32, seed=11, replicate=2)
        np.testing.assert_array_equal(a.bits, b.bits)
        c = scrambled_sobol(4, 32, seed=11, replicate=3)
        assert not np.array_equal(a.bits, c.bits)

    def test_marginal_uniformity(self):
        # each scrambled point is uniform on [0,1): mean 1/2, variance 1/12
        x = scrambled_nets(1, 1, seed=5, replicates=np.arange(20000))[:, 0, 0] * 2.0**-BITS
        assert abs(x.mean() - 0.5) < 5 * np.sqrt(1 / 12 / x.size)
        assert abs(x.var() - 1 / 12) < 0.005

    def test_stream_words_distinct(self):
        w = stream_words(3, np.arange(4), 33)
        assert w.shape == (4, 33)
        assert np.unique(w).size == w.size

    def test_to_csv(self, tmp_path):
        ps = scrambled_sobol(2, 4, seed=1)
        path = tmp_path / "pts.csv"
        ps.to_csv(path)
        back = np.loadtxt(path, delimiter=",", ndmin=2, skiprows=1)
        np.testing.assert_allclose(back, ps.values, rtol=1e-9)


class TestReplicateEstimates:
    def test_constant(self):
        s = replicate_estimates(lambda x: np.full(len(x), 0.3), 2, 4, 10, seed=1)
        np.testing.assert_array_equal(s.values, 0.3)
        assert (s.R, s.n, s.N) == (10, 4, 40)

    def test_identity_two_points(self):
        # each Y is the mean of a uniform on [0,1/2) and one on [1/2,1): variance 1/96
        s = replicate_estimates(lambda x: x[:, 0], 1, 2, 20000, seed=3)
        se = np.sqrt(1 / 96 / s.R)
        assert abs(s.values.mean() - 0.5) < 5 * se
        assert abs(s.values.var(ddof=1) / (1 / 96) - 1) < 5 * np.sqrt(2 / (s.R - 1)) * 1.2

    def test_indicator_variance(self):
        s = replicate_estimates(lambda x: (x[:, 0] < 1 / 3).astype(float), 1, 4, 10_000, seed=9)
        target = 2 / (9 * 16)
        y = s.values
        # relative SE of the sample variance from the fourth central moment
        m4 = np.mean((y - y.mean()) ** 4)
        se = np.sqrt((m4 - y.var() ** 2) / y.size)
        assert abs(y.var(ddof=1) - target) < 5 * se

    def test_chunking_does_not_change_values(self):
        f = lambda x: x.mean(axis=1)
        a = replicate_estimates(f, 3, 8, 50, seed=4)
        b = replicate_estimates(f, 3, 8, 50, seed=4, chunk_points=24)
        np.testing.assert_array_equal(a.values, b.values)

    def test_out_of_range_integrand(self):
        with pytest.raises(RangeError):
            replicate_estimates(lambda x: np.full(len(x), 1.5), 1, 2, 3, seed=0)

    def test_rounding_noise_is_clamped(self):
        y = check_range(np.array([-1e-14, 0.5, 1 + 1e-14]))
        assert y.tolist() == [0.0, 0.5, 1.0]

    def test_sample_validation(self):
        with pytest.raises(ValueError):
            ReplicateSample(np.array([0.2, 1.2]), n=1, d=1)
        with pytest.raises(ValueError):
            ReplicateSample(np.array([]), n=1, d=1)

    def test_pointset_properties(self):
        ps = PointSet(np.zeros((4, 2), dtype=np.uint32))
        assert (ps.n, ps.d) == (4, 2)
