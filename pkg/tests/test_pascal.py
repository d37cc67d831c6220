import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from sipduality.fock import SiteSpace
from sipduality.pascal import (
    BLOCK,
    McEstimate,
    _log_table,
    RngStream,
    check_laplace,
    check_papangelou,
    goodness_of_fit,
    laplace_closed_form,
    papangelou_battery,
    pool_bins,
    sample_logarithmic,
    sample_pascal_compound,
    sample_pascal_direct,
    two_sample_chisquare,
)

SPACE = SiteSpace([1.0, 0.5, 2.0], 0.3)
N = 100_000


def test_streams_are_reproducible_and_distinct():
    a = sample_pascal_direct(SPACE, RngStream(7, 1), 1000)
    b = sample_pascal_direct(SPACE, RngStream(7, 1), 1000)
    c = sample_pascal_direct(SPACE, RngStream(7, 2), 1000)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert RngStream(7, 1).child(0) != RngStream(7, 1).child(1)
    one = sample_pascal_direct(SPACE, RngStream(7, 1))
    assert one.shape == (3,) and np.array_equal(one, a[0])


@pytest.mark.parametrize("sampler", [sample_pascal_direct, sample_pascal_compound])
def test_samples_do_not_depend_on_batch_size(sampler):
    big = sampler(SPACE, RngStream(3, 4), BLOCK + 500)
    assert np.array_equal(big[:700], sampler(SPACE, RngStream(3, 4), 700))
    assert np.array_equal(big[: BLOCK + 10], sampler(SPACE, RngStream(3, 4), BLOCK + 10))


def test_mc_estimate():
    est = McEstimate.from_samples([1.0, 2.0, 3.0, 4.0])
    assert est.mean == 2.5 and est.n_samples == 4
    assert est.std_error == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)
    assert est.z_score(2.5) == 0
    assert McEstimate(1.0, 0.0, 5).z_score(2.0) == math.inf
    with pytest.raises(ValueError):
        McEstimate.from_samples([1.0])


@pytest.mark.parametrize("sampler", [sample_pascal_direct, sample_pascal_compound])
def test_zero_mass_site_stays_empty(sampler):
    draws = sampler(SiteSpace([0.0, 1.0], 0.5), RngStream(1), 5000)
    assert np.all(draws[:, 0] == 0) and draws[:, 1].sum() > 0


def test_direct_sampler_moments():
    draws = sample_pascal_direct(SPACE, RngStream(11), N)
    for i, a in enumerate(SPACE.alpha):
        est = McEstimate.from_samples(draws[:, i])
        assert est.z_score(SPACE.p * a / (1 - SPACE.p)) <= 4
    zero = sample_pascal_direct(SiteSpace([1.0], 0.5), RngStream(12), N)[:, 0] == 0
    assert McEstimate.from_samples(zero).z_score(0.5) <= 4


def test_compound_sampler_small_p_is_nearly_poisson():
    space = SiteSpace([2.0], 0.01)
    draws = sample_pascal_compound(space, RngStream(13), N)[:, 0]
    assert McEstimate.from_samples(draws).z_score(space.p * 2.0 / (1 - space.p)) <= 4
    assert np.mean(draws > 1) < 1e-3


def test_logarithmic_distribution():
    gen = np.random.default_rng(5)
    p = 0.6
    draws = sample_logarithmic(p, N, gen)
    top = int(draws.max())
    k = np.arange(1, top + 1)
    pmf = p**k / (k * -math.log1p(-p))
    pmf[-1] += 1 - pmf.sum()
    assert goodness_of_fit(np.bincount(draws, minlength=top + 1)[1:], pmf) > 1e-3


def test_logarithmic_rejection_tail():
    # p this close to one pushes about 2% of the mass past the cumulative table
    p = 1 - 1e-5
    gen = np.random.default_rng(9)
    draws = sample_logarithmic(p, 20_000, gen)
    beyond = draws > _log_table(p).size
    assert 0.005 < beyond.mean() < 0.05
    mean = p / ((1 - p) * -math.log1p(-p))
    assert McEstimate.from_samples(draws).z_score(mean) <= 4


def test_samplers_agree_in_distribution():
    direct = sample_pascal_direct(SPACE, RngStream(21), N)
    compound = sample_pascal_compound(SPACE, RngStream(22), N)
    for i in range(SPACE.m):
        assert two_sample_chisquare(direct[:, i], compound[:, i]) > 1e-3


def test_pooled_sites_are_negative_binomial_with_summed_mass():
    totals = sample_pascal_direct(SPACE, RngStream(23), N).sum(axis=1)
    top = int(totals.max())
    pmf = stats.nbinom.pmf(np.arange(top + 1), SPACE.total_mass, 1 - SPACE.p)
    pmf[-1] += stats.nbinom.sf(top, SPACE.total_mass, 1 - SPACE.p)
    assert goodness_of_fit(np.bincount(totals, minlength=top + 1), pmf) > 1e-3


def test_papangelou_exact_values():
    lhs, rhs = check_papangelou(SPACE, lambda x, eta: np.zeros(len(eta)), 1000, RngStream(3))
    assert lhs.mean == rhs.mean == 0
    mean_total = SPACE.p * SPACE.total_mass / (1 - SPACE.p)
    lhs, rhs = check_papangelou(SPACE, lambda x, eta: np.ones(len(eta)), N, RngStream(4))
    assert lhs.z_score(mean_total) <= 4 and rhs.z_score(mean_total) <= 4
    site = lambda x, eta: np.full(len(eta), float(x == 0))
    lhs, rhs = check_papangelou(SPACE, site, N, RngStream(5))
    assert lhs.z_score(SPACE.p * SPACE.alpha[0] / (1 - SPACE.p)) <= 4


def test_papangelou_battery():
    battery = papangelou_battery(SPACE)
    assert len(battery) == 5
    for k, F in enumerate(battery.values()):
        lhs, rhs = check_papangelou(SPACE, F, N, RngStream(40 + k))
        assert lhs.z_score(rhs) <= 4


def test_papangelou_detects_a_wrong_kernel():
    # with kappa = p eta instead of p (alpha + eta) the two sides separate
    space = SiteSpace([1.0], 0.3)
    eta_l = sample_pascal_direct(space, RngStream(50), N)
    eta_r = sample_pascal_direct(space, RngStream(51), N)
    lhs = McEstimate.from_samples(eta_l[:, 0])
    rhs = McEstimate.from_samples(space.p * eta_r[:, 0])
    assert lhs.z_score(rhs) > 10


def test_laplace_closed_form_values():
    assert laplace_closed_form(SPACE, 0.0) == pytest.approx(1.0)
    vacuum = np.prod((1 - SPACE.p) ** SPACE.alpha)
    assert laplace_closed_form(SPACE, 60.0) == pytest.approx(vacuum, rel=1e-12)
    one = SiteSpace([1.0], 0.5)
    assert laplace_closed_form(one, 1.0) == pytest.approx(0.5 / (1 - 0.5 * math.exp(-1)))


def test_laplace_monte_carlo():
    one = SiteSpace([1.0], 0.5)
    est, exact = check_laplace(one, 1.0, N, RngStream(60))
    assert est.z_score(exact) <= 4
    est, exact = check_laplace(SPACE, [0.2, 1.0, 0.5], N, RngStream(61))
    assert est.z_score(exact) <= 4
    with pytest.raises(ValueError):
        check_laplace(SPACE, -1.0, 10, RngStream(0))


@given(st.lists(st.floats(0, 20), min_size=1, max_size=30), st.floats(1, 10))
def test_pool_bins_partitions_in_order(expected, min_expected):
    groups = pool_bins(expected, min_expected)
    flat = np.concatenate(groups)
    assert np.array_equal(flat, np.arange(len(expected)))
    for g in groups[:-1]:
        assert np.sum(np.asarray(expected)[g]) >= min_expected


def test_goodness_of_fit_rejects_wrong_law():
    gen = np.random.default_rng(0)
    draws = gen.poisson(2.0, size=20_000)
    pmf = stats.poisson.pmf(np.arange(draws.max() + 1), 2.4)
    pmf[-1] += 1 - pmf.sum()
    assert goodness_of_fit(np.bincount(draws), pmf) < 1e-6
