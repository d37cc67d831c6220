import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from oracles import generating_coefficients, meixner_M_exact, meixner_monic_exact, multinomial
from sipduality.fock import SiteSpace, TruncatedSpace, inner_product
from sipduality.meixner import (
    HYPERGEOMETRIC_MAX_DEGREE,
    MeixnerParams,
    PolynomialExpansion,
    build_I_n,
    evaluate_expansion,
    generating_function,
    generating_partial_sum,
    meixner_M,
    meixner_monic,
    monic_by_recurrence,
    monic_recurrence_coefficients,
)

PARAMS = [(1.0, 0.5), (1.5, 0.3), (0.5, 0.9), (2.5, 0.1)]


def test_parameter_validation():
    for a, p in ((0.0, 0.3), (-1.0, 0.3), (1.0, 0.0), (1.0, 1.0)):
        with pytest.raises(ValueError):
            MeixnerParams(a, p)
    with pytest.raises(ValueError):
        meixner_M(-1, 0.0, MeixnerParams(1.0, 0.3))


@pytest.mark.parametrize("a, p", PARAMS)
def test_degree_zero_and_one(a, p):
    params = MeixnerParams(a, p)
    x = np.arange(15.0)
    np.testing.assert_array_equal(meixner_M(0, x, params), np.ones_like(x))
    np.testing.assert_allclose(meixner_monic(1, x, params), x - p * a / (1 - p), atol=1e-13)
    # mean zero under the negative binomial law
    assert stats.nbinom.expect(lambda k: meixner_monic(1, k, params), args=(a, 1 - p)) == pytest.approx(0, abs=1e-10)


@pytest.mark.parametrize("a, p", PARAMS)
def test_symmetry_is_exact(a, p):
    params = MeixnerParams(a, p)
    for n in range(11):
        for x in range(11):
            assert meixner_M(n, x, params) == meixner_M(x, n, params)


@pytest.mark.parametrize("a, p", [(Fraction(1), Fraction(1, 2)), (Fraction(3, 2), Fraction(3, 10)), (Fraction(1, 2), Fraction(9, 10))])
def test_both_evaluation_paths_match_exact_rationals(a, p):
    params = MeixnerParams(float(a), float(p))
    xs = np.arange(50.0)
    for n in (2, 7, HYPERGEOMETRIC_MAX_DEGREE, 18, 40):
        exact = np.array([float(meixner_monic_exact(n, int(x), a, p)) for x in xs])
        scale = np.max(np.abs(exact))
        assert np.max(np.abs(meixner_monic(n, xs, params) - exact)) <= 1e-12 * scale
        assert np.max(np.abs(monic_by_recurrence(n, xs, params) - exact)) <= 1e-12 * scale
    exact = float(meixner_M_exact(6, 4, a, p))
    assert meixner_M(6, 4.0, params) == pytest.approx(exact, rel=1e-13)


def test_recurrence_coefficients_reproduce_generating_function():
    # the recurrence is only trusted after matching the series of (1+s)^x (1+ps)^(-x-a)
    a, p = Fraction(3, 2), Fraction(3, 10)
    params = MeixnerParams(float(a), float(p))
    for x in (0, 1, 3, 8):
        coeffs = generating_coefficients(x, a, p, 25)
        for n, c in enumerate(coeffs):
            via_recurrence = (1 - float(p)) ** n / math.factorial(n) * monic_by_recurrence(n, float(x), params)
            assert via_recurrence == pytest.approx(float(c), rel=1e-11, abs=1e-14)
    b, g = monic_recurrence_coefficients(3, params)
    assert b[0] == pytest.approx(float(p * a / (1 - p))) and g[0] == 0


def test_generating_function_partial_sums_converge():
    params = MeixnerParams(1.5, 0.3)
    value, terms = generating_partial_sum(0.4, 3, params)
    exact = generating_function(0.4, 3, params)
    assert exact == pytest.approx(1.6477943333619338, rel=1e-15)
    assert terms < 200
    assert abs(value - exact) <= 1e-14
    previous = np.inf
    for cap in (4, 8, 12, 16):
        partial, _ = generating_partial_sum(0.4, 3, params, max_terms=cap)
        assert abs(partial - exact) < previous
        previous = abs(partial - exact)


def test_orthogonality_by_truncated_summation():
    a, p = 1.0, 0.5
    params = MeixnerParams(a, p)
    xs = np.arange(201.0)
    # (1-p)^a w(x) is the negative binomial pmf; the dual weight w(n) = p^n (a)_n / n!
    pmf = stats.nbinom.pmf(xs, a, 1 - p)
    for n in range(7):
        for k in range(7):
            got = np.sum(pmf * meixner_M(n, xs, params) * meixner_M(k, xs, params))
            want = (math.factorial(n) / (math.prod(a + j for j in range(n)) * p**n)) if n == k else 0.0
            assert got == pytest.approx(want, abs=1e-10)


@pytest.mark.parametrize("a, p", PARAMS)
def test_monic_norm(a, p):
    params = MeixnerParams(a, p)
    xs = np.arange(max(200, int(80 / -math.log(p))) + 1.0)
    pmf = stats.nbinom.pmf(xs, a, 1 - p)
    for n in range(8):
        exact = math.factorial(n) * math.prod(a + j for j in range(n)) * p**n / (1 - p) ** (2 * n)
        assert np.sum(pmf * meixner_monic(n, xs, params) ** 2) == pytest.approx(exact, rel=1e-9)


@pytest.fixture(scope="module")
def ts():
    return TruncatedSpace(SiteSpace([1.0, 0.5, 2.0], 0.3), 6)


def test_single_site_indicator_gives_degree_one_polynomial(ts):
    for j in range(3):
        f = np.zeros(3)
        f[ts.sectors[1].position(np.eye(3, dtype=int)[j])] = 1.0
        exp = build_I_n(ts, 1, f)
        assert len(exp.terms) == 1 and exp.terms[0][1] == 1.0
        alpha = ts.space.alpha[j]
        np.testing.assert_allclose(evaluate_expansion(exp, ts.configs), ts.configs[:, j] - ts.p * alpha / (1 - ts.p), atol=1e-13)


def test_zero_and_constant_expansions(ts):
    zero = build_I_n(ts, 2, np.zeros(len(ts.sectors[2])))
    assert zero.terms == [] and np.all(evaluate_expansion(zero, ts.configs) == 0)
    one = build_I_n(ts, 0, np.ones(1))
    np.testing.assert_array_equal(evaluate_expansion(one, ts.configs), np.ones(ts.dim))
    with pytest.raises(ValueError):
        build_I_n(ts, 2, np.ones(4))
    with pytest.raises(ValueError):
        PolynomialExpansion(2, np.array([[1, 0, 0]]), np.ones(1), ts.space.alpha, ts.p)


def test_single_site_degree_two_is_monic_meixner():
    ts = TruncatedSpace(SiteSpace([1.7], 0.4), 12)
    exp = build_I_n(ts, 2, np.ones(1))
    xs = ts.configs[:, 0].astype(float)
    np.testing.assert_allclose(evaluate_expansion(exp, ts.configs), meixner_monic(2, xs, MeixnerParams(1.7, 0.4)), rtol=1e-13)


def test_coefficients_are_multinomials(ts):
    rng = np.random.default_rng(3)
    f = rng.normal(size=len(ts.sectors[3])) + 1j * rng.normal(size=len(ts.sectors[3]))
    exp = build_I_n(ts, 3, f)
    for (kappa, coef), value in zip(exp.terms, f):
        assert coef == pytest.approx(multinomial(kappa) * value)
    assert np.iscomplexobj(evaluate_expansion(exp, ts.configs[:5]))
    assert evaluate_expansion(exp, ts.configs[4]) == pytest.approx(evaluate_expansion(exp, ts.configs[4:5])[0])


def test_product_formula_for_indicator_tensors(ts):
    # f = indicator of the multiset with multiplicities kappa gives prod Mm_{kappa_j}(eta_j)
    for kappa in ((2, 1, 0), (1, 1, 1), (0, 0, 3)):
        n = sum(kappa)
        f = np.zeros(len(ts.sectors[n]))
        f[ts.sectors[n].position(kappa)] = 1.0 / multinomial(kappa)
        got = evaluate_expansion(build_I_n(ts, n, f), ts.configs)
        want = np.ones(ts.dim)
        for j, k in enumerate(kappa):
            want *= meixner_monic(k, ts.configs[:, j].astype(float), MeixnerParams(ts.space.alpha[j], ts.p))
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12)


def test_merged_block_follows_from_linearity():
    # summing I_2 over both sites' multisets equals Mm_2 of the merged count with summed mass
    ts = TruncatedSpace(SiteSpace([0.7, 1.1], 0.35), 10)
    f = np.ones(len(ts.sectors[2]))
    got = evaluate_expansion(build_I_n(ts, 2, f), ts.configs)
    merged = meixner_monic(2, ts.configs.sum(axis=1).astype(float), MeixnerParams(1.8, 0.35))
    np.testing.assert_allclose(got, merged, rtol=1e-11, atol=1e-11)


@given(st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_orthogonal_to_lower_degree_monomials(n, seed):
    space = SiteSpace([1.0, 0.6], 0.3)
    ts = TruncatedSpace(space, n + 45)
    rng = np.random.default_rng(seed)
    I = evaluate_expansion(build_I_n(ts, n, rng.normal(size=len(ts.sectors[n]))), ts.configs)
    norm_I = np.sqrt(inner_product(ts, I, I).real)
    for m0 in range(n):
        for m1 in range(n - m0):
            g = ts.configs[:, 0] ** m0 * ts.configs[:, 1] ** m1
            norm_g = np.sqrt(inner_product(ts, g, g).real)
            assert abs(inner_product(ts, g, I)) <= 1e-8 * norm_g * norm_I


def test_zero_mass_site_expansion_is_finite():
    ts = TruncatedSpace(SiteSpace([1.0, 0.0], 0.3), 4)
    f = np.ones(len(ts.sectors[2]))
    values = evaluate_expansion(build_I_n(ts, 2, f), ts.configs)
    assert np.all(np.isfinite(values))
