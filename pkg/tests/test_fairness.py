import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from cermec.fairness import (FairnessDomainError, jain_index, jain_or_nan, total_utility, utility,
                             utility_derivative)


class TestUtility:
    def test_values(self):
        assert utility(0.0, 5.0) == 5.0
        assert utility(1.0, math.e) == pytest.approx(1.0)
        assert utility(2.0, 2.0) == pytest.approx(-0.5)

    def test_zero_rate(self):
        assert utility(0.5, 0.0) == 0.0
        with pytest.raises(FairnessDomainError):
            utility(1.0, 0.0)
        with pytest.raises(FairnessDomainError):
            utility(2.0, -1.0)

    def test_rejects_max_min_sentinel(self):
        with pytest.raises(FairnessDomainError):
            utility(math.inf, 1.0)
        with pytest.raises(FairnessDomainError):
            utility(-0.5, 1.0)

    def test_total(self):
        assert total_utility(0.0, [1.0, 2.0]) == 3.0

    def test_continuity_at_one(self):
        R = np.geomspace(0.1, 1e6, 200)
        for a in (1 - 1e-6, 1 + 1e-6):
            # The power branch differs from ln R by the constant 1/(1 - alpha).
            shift = 1.0 / (1.0 - a)
            assert np.max(np.abs(utility(a, R) - shift - utility(1.0, R))) <= 1e-4


class TestDerivative:
    def test_values(self):
        assert utility_derivative(0.0, 7.0) == 1.0
        assert utility_derivative(1.0, 2.0) == 0.5
        assert utility_derivative(2.0, 4.0) == 0.0625

    @pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0, 2.0, 5.0])
    def test_finite_difference(self, alpha):
        R = np.geomspace(0.5, 1e4, 50)
        h = 1e-6 * R
        fd = (utility(alpha, R + h) - utility(alpha, R - h)) / (2 * h)
        np.testing.assert_allclose(utility_derivative(alpha, R), fd, rtol=1e-6)

    def test_domain(self):
        with pytest.raises(FairnessDomainError):
            utility_derivative(1.0, 0.0)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0.0, 10.0), st.floats(1e-3, 1e6), st.floats(1e-3, 1e6))
    def test_monotone_and_concave(self, alpha, a, b):
        lo, hi = min(a, b), max(a, b)
        if hi > lo * (1 + 1e-9):
            assert utility(alpha, hi) > utility(alpha, lo)
            assert utility_derivative(alpha, hi) <= utility_derivative(alpha, lo)


class TestJain:
    def test_values(self):
        assert jain_index([1, 1, 1, 1]) == 1.0
        assert jain_index([1, 0, 0, 0]) == 0.25
        assert jain_index([1, 2, 3, 4]) == pytest.approx(100 / 120)

    def test_all_zero(self):
        with pytest.raises(FairnessDomainError):
            jain_index([0.0, 0.0])
        assert math.isnan(jain_or_nan([0.0, 0.0]))

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(0.0, 1e6), min_size=1, max_size=8), st.floats(1e-6, 1e6))
    def test_scale_invariance_and_bounds(self, R, c):
        R = np.array(R)
        # scaling a subnormal can round it to zero, which leaves the domain
        assume(np.any(R > 0) and np.any(c * R > 0))
        j = jain_index(R)
        assert 1.0 / R.size - 1e-12 <= j <= 1.0 + 1e-12
        assert jain_index(c * R) == pytest.approx(j, rel=1e-12)
