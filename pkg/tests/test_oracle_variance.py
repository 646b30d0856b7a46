import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rqmc_ci.oracle_variance import (
    SMOOTH_ASYMPTOTIC,
    QuadratureError,
    indicator_third,
    smooth_1d,
    smooth_antiderivative,
    smooth_sq_antiderivative,
    var_indicator_third,
    var_smooth_exact,
    var_stratified_numeric,
)
from rqmc_ci.rqmc import replicate_estimates

SIZES = [1, 2, 4, 8, 16, 32]


def _smooth_scalar(x):
    return x * math.exp(x - 1.0)


class TestClosedForms:
    def test_indicator_values(self):
        assert var_indicator_third(1) == pytest.approx(2 / 9)
        assert var_indicator_third(8) == pytest.approx(2 / 576)
        assert var_indicator_third(8) == pytest.approx(3.4722e-3, abs=1e-7)

    def test_smooth_population_variance(self):
        F, G = smooth_antiderivative, smooth_sq_antiderivative
        ref = (G(1.0) - G(0.0)) - (F(1.0) - F(0.0)) ** 2
        assert var_smooth_exact(1) == pytest.approx(ref, rel=1e-14)
        assert F(1.0) - F(0.0) == pytest.approx(math.exp(-1))

    def test_antiderivatives_by_finite_differences(self):
        x = np.linspace(0.0, 1.0, 201)
        h = 1e-5
        dF = (smooth_antiderivative(x + h) - smooth_antiderivative(x - h)) / (2 * h)
        dG = (smooth_sq_antiderivative(x + h) - smooth_sq_antiderivative(x - h)) / (2 * h)
        f = x * np.exp(x - 1)
        assert np.max(np.abs(dF - f)) < 1e-8
        assert np.max(np.abs(dG - f * f)) < 1e-8

    def test_smooth_asymptote(self):
        assert SMOOTH_ASYMPTOTIC == pytest.approx(0.101347, abs=1e-6)
        n = 1 << 10
        assert n**3 * var_smooth_exact(n) == pytest.approx(SMOOTH_ASYMPTOTIC, rel=1e-2)

    def test_rates(self):
        ns = [1 << k for k in range(11)]
        li = np.diff(np.log2([var_indicator_third(n) for n in ns]))
        ls = np.diff(np.log2([var_smooth_exact(n) for n in ns]))
        np.testing.assert_allclose(li, -2.0, atol=1e-12)
        assert abs(ls[-1] + 3) < 1e-3
        assert np.all(np.abs(np.diff(ls[3:])) < 0.05)

    @pytest.mark.parametrize("n", [3, 0, 12])
    def test_power_of_two_required(self, n):
        with pytest.raises(ValueError):
            var_smooth_exact(n)


class TestQuadratureOracle:
    @pytest.mark.parametrize("n", SIZES)
    def test_indicator(self, n):
        f = lambda x: float(x < 1 / 3)
        got = var_stratified_numeric(f, n, breakpoints=(1 / 3,)).total
        assert got == pytest.approx(var_indicator_third(n), abs=1e-10)

    @pytest.mark.parametrize("n", SIZES)
    def test_smooth(self, n):
        got = var_stratified_numeric(_smooth_scalar, n).total
        assert got == pytest.approx(var_smooth_exact(n), abs=1e-10)

    def test_constant(self):
        assert var_stratified_numeric(lambda x: 0.7, 8).total == pytest.approx(0.0, abs=1e-15)

    def test_per_stratum(self):
        sv = var_stratified_numeric(lambda x: float(x < 1 / 3), 4, breakpoints=(1 / 3,))
        # only the stratum [1/4, 1/2) straddles the jump, where p = 1/3
        np.testing.assert_allclose(sv.per_stratum, [0, 2 / 9, 0, 0], atol=1e-12)

    def test_reports_failure(self):
        with pytest.raises(QuadratureError):
            var_stratified_numeric(lambda x: 1.0 / math.sqrt(abs(x - 0.3)) if x != 0.3 else 0.0, 1,
                                   tol=1e-15, limit=3)


class TestIntegrands:
    @given(x=st.floats(0, 1, exclude_max=True))
    def test_ranges(self, x):
        assert 0.0 <= smooth_1d(np.array([x]))[0] <= 1.0
        assert indicator_third(np.array([[x, 0.9]]))[0] == (x < 1 / 3)


@pytest.mark.parametrize("n", [2, 4, 8])
@pytest.mark.parametrize("name,f,var", [
    ("indicator", lambda x: (x[:, 0] < 1 / 3).astype(float), var_indicator_third),
    ("smooth", lambda x: smooth_1d(x), var_smooth_exact),
])
def test_simulation_agrees(name, f, var, n):
    # sample variance of 10^4 replicate means; SE from the fourth moment
    y = replicate_estimates(f, 1, n, 10_000, seed=100 + n).values
    m4 = np.mean((y - y.mean()) ** 4)
    se = math.sqrt(max(m4 - y.var() ** 2, 0.0) / y.size)
    assert abs(y.var(ddof=1) - var(n)) <= 5 * se
