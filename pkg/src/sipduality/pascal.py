"""Sampling the Pascal point process and Monte Carlo checks of its identities.

Two independent samplers are provided:

* :func:`sample_pascal_direct` draws every site count from the negative
  binomial law through the Gamma-Poisson mixture;
* :func:`sample_pascal_compound` builds the process as a marked Poisson
  process of clusters with logarithmically distributed sizes.

Randomness is organised in streams: an :class:`RngStream` is identified by
``(seed, stream)``.  Replicas are cut into fixed blocks of ``BLOCK``; each
(site, block) pair owns separate generators for each kind of draw, so a
sample of size ``n`` is a prefix of any larger sample and never depends on
how replicas are batched.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import stats

from .fock import SiteSpace

__all__ = [
    "RngStream",
    "McEstimate",
    "sample_pascal_direct",
    "sample_pascal_compound",
    "sample_logarithmic",
    "check_papangelou",
    "check_laplace",
    "laplace_closed_form",
    "papangelou_battery",
    "pool_bins",
    "two_sample_chisquare",
    "goodness_of_fit",
    "BLOCK",
]

BLOCK = 1 << 16


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream keyed by ``(seed, stream)``."""

    seed: int
    stream: int = 0

    def generator(self, *key: int) -> np.random.Generator:
        """Independent generator for the sub-key ``key`` (e.g. a site index)."""
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,) + tuple(int(k) for k in key))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, stream: int) -> "RngStream":
        return RngStream(self.seed, self.stream * 1_000_003 + stream + 1)


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_samples: int

    @classmethod
    def from_samples(cls, values) -> "McEstimate":
        values = np.asarray(values, dtype=float)
        n = values.size
        if n < 2:
            raise ValueError("need at least two samples")
        return cls(float(values.mean()), float(values.std(ddof=1) / np.sqrt(n)), int(n))

    def z_score(self, other: "McEstimate | float") -> float:
        """Standardized difference to another estimate or to an exact value."""
        if isinstance(other, McEstimate):
            diff = self.mean - other.mean
            se = np.hypot(self.std_error, other.std_error)
        else:
            diff = self.mean - float(other)
            se = self.std_error
        if se == 0:
            return 0.0 if diff == 0 else float("inf")
        return float(abs(diff) / se)


def _blocks(n: int):
    for b, start in enumerate(range(0, n, BLOCK)):
        yield b, slice(start, min(start + BLOCK, n))


def sample_pascal_direct(space: SiteSpace, rng: RngStream, size: int | None = None) -> np.ndarray:
    """Draw configurations with independent negative binomial site counts.

    Each count is Poisson with a Gamma(``alpha_i``, ``p/(1-p)``) distributed
    rate.  Returns an ``(size, m)`` integer array, or one configuration when
    ``size`` is None.
    """
    n = 1 if size is None else int(size)
    out = np.zeros((n, space.m), dtype=np.int64)
    scale = space.p / (1.0 - space.p)
    for i, a in enumerate(space.alpha):
        if a == 0:
            continue
        for b, sl in _blocks(n):
            k = sl.stop - sl.start
            rate = rng.generator(i, b, 0).gamma(a, scale, size=k)
            out[sl, i] = rng.generator(i, b, 1).poisson(rate)
    return out[0] if size is None else out


@lru_cache(maxsize=32)
def _log_table(p: float, tail: float = 1e-12):
    # cumulative distribution of P(N = k) = p^k / (k L), L = -log(1 - p)
    norm = -np.log1p(-p)
    pmf = []
    cdf = 0.0
    k = 1
    while cdf < 1.0 - tail and k < 100_000:
        q = np.exp(k * np.log(p) - np.log(k)) / norm
        pmf.append(q)
        cdf += q
        k += 1
    table = np.cumsum(pmf)
    table.setflags(write=False)
    return table


def sample_logarithmic(
    p: float, size: int, gen: np.random.Generator, tail_gen: np.random.Generator | None = None
) -> np.ndarray:
    """Logarithmic distribution ``P(N = k) ∝ p^k / k`` on ``k >= 1``.

    Inversion against a cached cumulative table up to the ``1 - 1e-12``
    quantile.  Draws falling beyond the table go to a rejection sampler with
    a geometric proposal on ``k > K``, accepted with probability ``(K+1)/k``;
    it uses ``tail_gen`` when given, else ``gen``.
    """
    table = _log_table(float(p))
    u = gen.random(size)
    out = np.searchsorted(table, u, side="right").astype(np.int64) + 1
    k_top = table.size
    tail = gen if tail_gen is None else tail_gen
    for j in np.flatnonzero(out > k_top):
        while True:
            k = k_top + tail.geometric(1.0 - p)
            if tail.random() * k <= k_top + 1:
                out[j] = k
                break
    return out


def sample_pascal_compound(space: SiteSpace, rng: RngStream, size: int | None = None) -> np.ndarray:
    """Draw configurations as sums of Poisson-many logarithmic clusters.

    Per site the number of clusters is Poisson with mean ``-alpha_i log(1-p)``;
    the site count is the total size of its clusters.
    """
    n = 1 if size is None else int(size)
    out = np.zeros((n, space.m), dtype=np.int64)
    lam = -np.log1p(-space.p)
    for i, a in enumerate(space.alpha):
        if a == 0:
            continue
        for b, sl in _blocks(n):
            k = sl.stop - sl.start
            clusters = rng.generator(i, b, 0).poisson(a * lam, size=k)
            sizes = sample_logarithmic(space.p, int(clusters.sum()), rng.generator(i, b, 1), rng.generator(i, b, 2))
            owner = np.repeat(np.arange(k), clusters)
            out[sl, i] = np.bincount(owner, weights=sizes, minlength=k).astype(np.int64)
    return out[0] if size is None else out


Functional = Callable[[int, np.ndarray], np.ndarray]


def check_papangelou(space: SiteSpace, F: Functional, n_samples: int, rng: RngStream):
    """Monte Carlo estimates of both sides of the Papangelou identity.

    ``F(x, eta)`` takes a site and an ``(N, m)`` batch of configurations and
    returns ``N`` values.  The left side averages ``sum_x F(x, eta) eta_x``,
    the right side ``sum_x F(x, eta + e_x) p (alpha_x + eta_x)``; the two
    sides use independent samples.
    """
    left = sample_pascal_direct(space, rng.child(0), n_samples)
    right = sample_pascal_direct(space, rng.child(1), n_samples)
    lhs = np.zeros(n_samples)
    rhs = np.zeros(n_samples)
    for x in range(space.m):
        lhs += np.asarray(F(x, left), dtype=float) * left[:, x]
        bumped = right.copy()
        bumped[:, x] += 1
        rhs += np.asarray(F(x, bumped), dtype=float) * space.p * (space.alpha[x] + right[:, x])
    return McEstimate.from_samples(lhs), McEstimate.from_samples(rhs)


def papangelou_battery(space: SiteSpace) -> dict[str, Functional]:
    """Five bounded test functionals used by the acceptance checks."""
    last = space.m - 1

    def constant(x, eta):
        return np.ones(len(eta))

    def first_site(x, eta):
        return np.full(len(eta), float(x == 0))

    def total_cutoff(x, eta):
        return (eta.sum(axis=1) <= 3).astype(float)

    def local_cutoff(x, eta):
        return float(x == last) * (eta[:, x] <= 2)

    def cross_product(x, eta):
        return (x + 1.0) * np.minimum(eta[:, 0], 3) * (eta.sum(axis=1) <= 6)

    return {
        "constant": constant,
        "first_site": first_site,
        "total_cutoff": total_cutoff,
        "local_cutoff": local_cutoff,
        "cross_product": cross_product,
    }


def laplace_closed_form(space: SiteSpace, f) -> float:
    """``exp(-sum_x alpha_x log((1 - p e^{-f(x)}) / (1 - p)))``."""
    f = np.broadcast_to(np.asarray(f, dtype=float), (space.m,))
    p = space.p
    return float(np.exp(-np.sum(space.alpha * (np.log1p(-p * np.exp(-f)) - np.log1p(-p)))))


def check_laplace(space: SiteSpace, f, n_samples: int, rng: RngStream):
    """Empirical Laplace functional ``E exp(-sum f(x) eta_x)`` and its closed form."""
    f = np.broadcast_to(np.asarray(f, dtype=float), (space.m,))
    if np.any(f < 0) or np.any(np.isnan(f)):
        raise ValueError("Laplace functional needs a non-negative test function")
    eta = sample_pascal_direct(space, rng, n_samples)
    with np.errstate(invalid="ignore"):
        exponent = np.where(eta > 0, eta * f, 0.0).sum(axis=1)
    return McEstimate.from_samples(np.exp(-exponent)), laplace_closed_form(space, f)


def pool_bins(expected, min_expected: float = 5.0):
    """Group consecutive categories so each group expects ``min_expected`` counts.

    Returns a list of index arrays.  The last group absorbs any remainder.
    """
    expected = np.asarray(expected, dtype=float)
    groups, current, acc = [], [], 0.0
    for i, e in enumerate(expected):
        current.append(i)
        acc += e
        if acc >= min_expected:
            groups.append(np.array(current))
            current, acc = [], 0.0
    if current:
        if groups:
            groups[-1] = np.concatenate([groups[-1], current])
        else:
            groups.append(np.array(current))
    return groups


def two_sample_chisquare(a, b) -> float:
    """p-value of a chi-square homogeneity test between two integer samples."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    top = int(max(a.max(initial=0), b.max(initial=0)))
    ca = np.bincount(a, minlength=top + 1)
    cb = np.bincount(b, minlength=top + 1)
    groups = pool_bins((ca + cb) / 2.0)
    if len(groups) < 2:
        return 1.0
    table = np.array([[ca[g].sum() for g in groups], [cb[g].sum() for g in groups]])
    return float(stats.chi2_contingency(table, correction=False).pvalue)


def goodness_of_fit(observed_counts, probabilities) -> float:
    """p-value of a chi-square goodness-of-fit test with pooled sparse bins.

    ``probabilities`` must sum to one over the listed categories (put any
    tail mass into the last entry).
    """
    observed = np.asarray(observed_counts, dtype=float)
    prob = np.asarray(probabilities, dtype=float)
    n = observed.sum()
    groups = pool_bins(prob * n)
    obs = np.array([observed[g].sum() for g in groups])
    exp = np.array([prob[g].sum() * n for g in groups])
    if len(groups) < 2:
        return 1.0
    exp *= obs.sum() / exp.sum()
    return float(stats.chisquare(obs, exp).pvalue)
