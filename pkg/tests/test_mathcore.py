"""Special-function layer against independent oracles.

The Laguerre oracle evaluates the defining series with exact rational
coefficients (Fraction arithmetic), so any disagreement is the
recurrence's fault.  Bessel goes against its integral representation,
Gamma against a numerically integrated defining integral.
"""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from turbmodes.mathcore import (
    bessel_j,
    binomial,
    gamma_fn,
    gauss_legendre,
    hermite,
    laguerre,
    log_factorial,
)


def laguerre_series(n: int, a: int, x: float) -> tuple[float, float]:
    """Sum_{j} (-1)^j C(n+a, n-j) x^j / j! with exact coefficients.

    Returns the value and the sum of absolute term magnitudes; the
    latter bounds how much a floating evaluation can lose to rounding.
    """
    total = Fraction(0)
    magnitude = Fraction(0)
    xf = Fraction(x)
    for j in range(n + 1):
        coeff = Fraction(1)
        for t in range(1, n - j + 1):
            coeff *= Fraction(a + j + t, t)
        term = coeff * xf**j / math.factorial(j)
        total += (-1) ** j * term
        magnitude += abs(term)
    return float(total), float(magnitude)


class TestLaguerre:
    @given(
        n=st.integers(0, 60),
        a=st.integers(-60, 60),
        x=st.floats(0.0, 50.0, allow_nan=False),
    )
    def test_matches_exact_series(self, n, a, x):
        got = laguerre(n, a, x)
        want, magnitude = laguerre_series(n, a, x)
        assert abs(got - want) <= 1e-8 * abs(want) + 1e-8 * magnitude

    def test_reflection_root_is_exact_near_zero(self):
        # L_4^{-4}(x) = x^4 / 24: the value must stay accurate far below
        # the recurrence's cancellation floor
        for x in (1e-30, 1e-12, 1e-6, 1e-3):
            assert laguerre(4, -4, x) == pytest.approx(x**4 / 24.0, rel=1e-13)

    @given(
        m=st.integers(1, 20),
        extra=st.integers(0, 20),
        x=st.floats(1e-30, 40.0),
    )
    def test_reflection_identity(self, m, extra, x):
        n = m + extra
        lhs = laguerre(n, -m, x)
        rhs = (
            (-x) ** m
            * math.factorial(n - m)
            / math.factorial(n)
            * laguerre(n - m, m, x)
        )
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-300)

    def test_scipy_agreement_for_positive_superscript(self):
        from scipy.special import eval_genlaguerre

        rng = np.random.default_rng(7)
        for _ in range(50):
            n = int(rng.integers(0, 40))
            a = float(rng.uniform(-0.9, 30.0))
            x = float(rng.uniform(0.0, 80.0))
            assert laguerre(n, a, x) == pytest.approx(
                float(eval_genlaguerre(n, a, x)), rel=1e-9, abs=1e-12
            )

    def test_vectorized_matches_scalar(self):
        x = np.linspace(0.0, 12.0, 7)
        vec = laguerre(5, -3, x)
        assert vec.shape == x.shape
        for xi, vi in zip(x, vec):
            assert vi == laguerre(5, -3, float(xi))

    def test_negative_degree_rejected(self):
        with pytest.raises(ValueError):
            laguerre(-1, 0, 1.0)


class TestHermite:
    def test_known_values(self):
        assert hermite(0, 0.7) == 1.0
        assert hermite(1, 0.7) == pytest.approx(1.4)
        assert hermite(2, 0.7) == pytest.approx(4 * 0.49 - 2)
        assert hermite(3, 0.7) == pytest.approx(8 * 0.7**3 - 12 * 0.7)
        assert hermite(10, 0.0) == pytest.approx(-30240.0)

    def test_scipy_agreement(self):
        from scipy.special import eval_hermite

        rng = np.random.default_rng(3)
        for _ in range(40):
            n = int(rng.integers(0, 30))
            x = float(rng.uniform(-6.0, 6.0))
            assert hermite(n, x) == pytest.approx(
                float(eval_hermite(n, x)), rel=1e-10, abs=1e-8
            )

    @given(x=st.floats(-5.0, 5.0), n=st.integers(1, 25))
    def test_parity(self, x, n):
        assert hermite(n, -x) == pytest.approx(
            (-1.0) ** n * hermite(n, x), rel=1e-9, abs=1e-6
        )

    def test_negative_degree_rejected(self):
        with pytest.raises(ValueError):
            hermite(-2, 0.0)


class TestBessel:
    def test_integral_representation(self):
        # J_n(x) = (1/pi) int_0^pi cos(n tau - x sin tau) dtau
        tau, w = gauss_legendre(200, 0.0, math.pi)
        for n in (0, 1, 2, 5):
            for x in (0.1, 1.0, 3.7, 12.0):
                want = float(np.dot(np.cos(n * tau - x * np.sin(tau)), w)) / math.pi
                assert bessel_j(n, x) == pytest.approx(want, abs=1e-12)

    def test_vectorized(self):
        x = np.array([0.0, 0.5, 2.0])
        out = bessel_j(0, x)
        assert out.shape == x.shape
        assert out[0] == 1.0

    def test_negative_order_rejected(self):
        with pytest.raises(ValueError):
            bessel_j(-1, 1.0)


class TestGamma:
    def test_integer_factorials(self):
        for n in range(1, 12):
            assert gamma_fn(float(n)) == pytest.approx(math.factorial(n - 1), rel=1e-14)

    def test_defining_integral_at_one_sixth(self):
        # Gamma(1/6) = 6 int_0^inf exp(-u^6) du; the tail beyond u = 4
        # is below exp(-4096)
        u, w = gauss_legendre(400, 0.0, 4.0)
        want = 6.0 * float(np.dot(np.exp(-(u**6)), w))
        assert gamma_fn(1.0 / 6.0) == pytest.approx(want, rel=1e-12)

    @given(x=st.floats(0.05, 0.95))
    def test_reflection(self, x):
        assert gamma_fn(x) * gamma_fn(1.0 - x) == pytest.approx(
            math.pi / math.sin(math.pi * x), rel=1e-11
        )


class TestLogFactorialAndBinomial:
    def test_log_factorial_exact_small(self):
        running = 0.0
        assert log_factorial(0) == 0.0
        for n in range(1, 300):
            running += math.log(n)
            assert log_factorial(n) == pytest.approx(running, rel=1e-12)

    @given(n=st.integers(0, 60), k=st.integers(0, 60))
    def test_binomial_matches_comb(self, n, k):
        if k > n:
            with pytest.raises(ValueError):
                binomial(n, k)
        else:
            assert binomial(n, k) == float(math.comb(n, k))

    def test_pascal_identity(self):
        for n in range(2, 30):
            for k in range(1, n):
                assert binomial(n, k) == binomial(n - 1, k - 1) + binomial(n - 1, k)

    def test_negative_arguments_rejected(self):
        with pytest.raises(ValueError):
            log_factorial(-1)
        with pytest.raises(ValueError):
            binomial(-1, 0)


class TestGaussLegendre:
    def test_polynomial_exactness(self):
        # npts nodes integrate polynomials up to degree 2 npts - 1
        rng = np.random.default_rng(11)
        for npts in (2, 5, 16):
            deg = 2 * npts - 1
            coeffs = rng.uniform(-2.0, 2.0, deg + 1)
            a, b = -1.3, 2.7
            x, w = gauss_legendre(npts, a, b)
            got = float(np.dot(np.polyval(coeffs, x), w))
            anti = np.polyint(coeffs)
            want = float(np.polyval(anti, b) - np.polyval(anti, a))
            assert got == pytest.approx(want, rel=1e-12, abs=1e-12)

    def test_interval_mapping(self):
        x, w = gauss_legendre(24, 0.0, 5.0)
        assert np.all((x > 0.0) & (x < 5.0))
        assert float(w.sum()) == pytest.approx(5.0, rel=1e-14)
        assert np.all(np.diff(x) > 0.0)

    def test_returned_arrays_are_fresh(self):
        x1, w1 = gauss_legendre(12, 0.0, 1.0)
        x1 += 100.0
        w1 *= 0.0
        x2, w2 = gauss_legendre(12, 0.0, 1.0)
        assert np.all(x2 < 1.0)
        assert float(w2.sum()) == pytest.approx(1.0, rel=1e-14)

    def test_bad_arguments_rejected(self):
        with pytest.raises(ValueError):
            gauss_legendre(0, 0.0, 1.0)

    def test_degenerate_interval_integrates_to_zero(self):
        x, w = gauss_legendre(4, 1.0, 1.0)
        assert np.all(x == 1.0)
        assert float(w.sum()) == 0.0
