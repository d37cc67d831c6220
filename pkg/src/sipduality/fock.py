"""Occupation-number bases, Pascal weights and the weighted inner product.

A finite site space ``{0, ..., m-1}`` carries masses ``alpha`` and the
parameter ``p``.  Configurations are occupation vectors, grouped into
sectors of fixed total particle number.  Within a sector configurations are
listed in descending lexicographic order, e.g. for ``m=3, n=2``::

    (2,0,0) (1,1,0) (1,0,1) (0,2,0) (0,1,1) (0,0,2)

and sectors are concatenated by increasing ``n`` in a :class:`TruncatedSpace`.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb
from typing import Sequence

import numpy as np
from scipy.special import gammaln

__all__ = [
    "CapacityError",
    "DegenerateWeightError",
    "SiteSpace",
    "SectorBasis",
    "TruncatedSpace",
    "MAX_BASIS_SIZE",
    "sector_size",
    "enumerate_sector",
    "rising_factorial",
    "log_rising_factorial",
    "pascal_weight",
    "inner_product",
    "weighted_norm",
]

#: default guard on the number of configurations a basis may hold
MAX_BASIS_SIZE = 2_000_000

# above this value of a + n the rising factorial is evaluated through lgamma
_LOG_SWITCH = 30.0


class CapacityError(RuntimeError):
    """Raised when a requested basis exceeds the configured size limit."""


class DegenerateWeightError(ValueError):
    """Raised when an operation needs weights that vanish on its support."""


@dataclass(frozen=True)
class SiteSpace:
    """A finite measured site space with Pascal parameter ``p``."""

    alpha: np.ndarray
    p: float

    def __init__(self, alpha: Sequence[float], p: float):
        a = np.array(alpha, dtype=float).reshape(-1)
        if a.size < 1:
            raise ValueError("need at least one site")
        if not np.all(np.isfinite(a)) or np.any(a < 0):
            raise ValueError(f"site masses must be finite and non-negative, got {a}")
        if a.sum() <= 0:
            raise ValueError("total mass must be positive")
        p = float(p)
        if not 0.0 < p < 1.0:
            raise ValueError(f"p must lie in (0, 1), got {p}")
        a.setflags(write=False)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "p", p)

    @property
    def m(self) -> int:
        return int(self.alpha.size)

    @property
    def total_mass(self) -> float:
        return float(self.alpha.sum())

    def __eq__(self, other):
        if not isinstance(other, SiteSpace):
            return NotImplemented
        return self.p == other.p and np.array_equal(self.alpha, other.alpha)

    def __hash__(self):
        return hash((self.p, self.alpha.tobytes()))


def sector_size(m: int, n: int) -> int:
    """Number of weak compositions of ``n`` into ``m`` parts."""
    return comb(n + m - 1, m - 1)


@dataclass(frozen=True)
class SectorBasis:
    """All configurations with ``n`` particles, in descending lex order."""

    n: int
    configs: np.ndarray
    index: dict = field(repr=False, compare=False)

    def __len__(self):
        return len(self.configs)

    def position(self, eta) -> int:
        return self.index[tuple(int(v) for v in eta)]


def enumerate_sector(space: SiteSpace | int, n: int, max_basis: int = MAX_BASIS_SIZE) -> SectorBasis:
    """Enumerate the ``n``-particle sector over ``space`` (or ``m`` sites).

    Uses stars and bars: the lexicographic stream of bar positions yields
    compositions in ascending lex order, which is then reversed.
    """
    m = space if isinstance(space, int) else space.m
    if n < 0:
        raise ValueError("particle number must be non-negative")
    size = sector_size(m, n)
    if size > max_basis:
        raise CapacityError(f"sector n={n} over m={m} sites has {size} configurations (limit {max_basis})")
    if m == 1:
        configs = np.array([[n]], dtype=np.int64)
    else:
        bars = np.array(list(itertools.combinations(range(n + m - 1), m - 1)), dtype=np.int64)
        bars = bars.reshape(size, m - 1)
        edges = np.hstack([np.full((size, 1), -1), bars, np.full((size, 1), n + m - 1)])
        configs = np.diff(edges, axis=1) - 1
        configs = configs[::-1].copy()
    configs.setflags(write=False)
    index = {tuple(row): i for i, row in enumerate(configs.tolist())}
    return SectorBasis(n=n, configs=configs, index=index)


def log_rising_factorial(a, n):
    """``log((a)_n)``; ``-inf`` where ``a == 0`` and ``n >= 1``."""
    a = np.asarray(a, dtype=float)
    n = np.asarray(n)
    a, n = np.broadcast_arrays(a, n)
    out = np.zeros(a.shape)
    big = (a + n) > _LOG_SWITCH
    with np.errstate(divide="ignore"):
        pos = big & (a > 0)
        out[pos] = gammaln(a[pos] + n[pos]) - gammaln(a[pos])
        small = ~big
        out[small] = np.log(np.abs(rising_factorial(a[small], n[small])))
        out[(a == 0) & (n >= 1)] = -np.inf
    return out if out.ndim else float(out)


def rising_factorial(a, n):
    """Pochhammer symbol ``(a)_n = a (a+1) ... (a+n-1)`` by direct product."""
    a = np.asarray(a, dtype=float)
    n = np.asarray(n, dtype=np.int64)
    a, n = np.broadcast_arrays(a, n)
    out = np.ones(a.shape)
    top = int(n.max()) if n.size else 0
    for k in range(top):
        live = n > k
        out[live] *= a[live] + k
    return out if out.ndim else float(out)


def _log_site_table(space: SiteSpace, n_max: int) -> np.ndarray:
    """``table[i, k] = log((1-p)^a_i p^k (a_i)_k / k!)`` for ``k <= n_max``."""
    k = np.arange(n_max + 1)
    a = space.alpha[:, None]
    with np.errstate(divide="ignore"):
        return (
            a * np.log1p(-space.p)
            + k * np.log(space.p)
            + log_rising_factorial(a, k[None, :])
            - gammaln(k + 1.0)
        )


def pascal_weight(space: SiteSpace, eta) -> float | np.ndarray:
    """Probability of configuration(s) ``eta`` under the Pascal law.

    ``eta`` may be a single occupation vector or an array of shape ``(N, m)``.
    """
    eta = np.asarray(eta, dtype=np.int64)
    if eta.shape[-1] != space.m:
        raise ValueError(f"configuration length {eta.shape[-1]} != m = {space.m}")
    if np.any(eta < 0):
        raise ValueError("occupations must be non-negative")
    table = _log_site_table(space, int(eta.max(initial=0)))
    logw = table[np.arange(space.m), eta].sum(axis=-1)
    w = np.exp(logw)
    return w if w.ndim else float(w)


class TruncatedSpace:
    """Sectors ``0..n_max`` of a site space, with their Pascal weights.

    Global indices run over the concatenation of sectors; ``offsets[n]`` is the
    first global index of sector ``n``.
    """

    def __init__(self, space: SiteSpace, n_max: int, max_basis: int = MAX_BASIS_SIZE):
        if n_max < 0:
            raise ValueError("n_max must be non-negative")
        total = comb(n_max + space.m, space.m)
        if total > max_basis:
            raise CapacityError(f"truncated space has {total} configurations (limit {max_basis})")
        self.space = space
        self.n_max = int(n_max)
        self.sectors = [enumerate_sector(space, n, max_basis) for n in range(n_max + 1)]
        sizes = [len(s) for s in self.sectors]
        self.offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        self.configs = np.vstack([s.configs for s in self.sectors])
        self.configs.setflags(write=False)
        self.totals = np.repeat(np.arange(n_max + 1), sizes)
        self.totals.setflags(write=False)
        table = _log_site_table(space, n_max)
        self.weights = np.exp(table[np.arange(space.m), self.configs].sum(axis=1))
        self.weights.setflags(write=False)
        self._ladder = None

    @property
    def dim(self) -> int:
        return int(self.offsets[-1])

    @property
    def m(self) -> int:
        return self.space.m

    @property
    def p(self) -> float:
        return self.space.p

    @property
    def coverage(self) -> float:
        """Pascal mass captured by the truncation."""
        return float(self.weights.sum())

    def sector_slice(self, n: int) -> slice:
        return slice(int(self.offsets[n]), int(self.offsets[n + 1]))

    def below(self, n: int) -> slice:
        """Global slice of sectors ``0..n`` inclusive."""
        return slice(0, int(self.offsets[n + 1]))

    def global_index(self, eta) -> int:
        eta = tuple(int(v) for v in eta)
        n = sum(eta)
        return int(self.offsets[n]) + self.sectors[n].index[eta]

    def indicator(self, eta) -> np.ndarray:
        f = np.zeros(self.dim)
        f[self.global_index(eta)] = 1.0
        return f

    def embed(self, n: int, f_sector) -> np.ndarray:
        """Lift a function on sector ``n`` to the whole truncated space."""
        f_sector = np.asarray(f_sector)
        if f_sector.shape != (len(self.sectors[n]),):
            raise ValueError(f"expected {len(self.sectors[n])} sector values, got shape {f_sector.shape}")
        f = np.zeros(self.dim, dtype=np.result_type(f_sector, float))
        f[self.sector_slice(n)] = f_sector
        return f

    def ladder(self):
        """Pairs ``(upper, lower, site)`` with ``configs[lower] = configs[upper] - e_site``.

        Also returns the occupation of ``site`` in the upper configuration.
        This is the sparsity pattern shared by all raising and lowering
        operators, cached on first use.
        """
        if self._ladder is None:
            upper, lower, site = [], [], []
            for n in range(1, self.n_max + 1):
                off_hi = int(self.offsets[n])
                off_lo = int(self.offsets[n - 1])
                index_lo = self.sectors[n - 1].index
                for i, eta in enumerate(self.sectors[n].configs.tolist()):
                    for x, nx in enumerate(eta):
                        if nx:
                            eta[x] -= 1
                            upper.append(off_hi + i)
                            lower.append(off_lo + index_lo[tuple(eta)])
                            site.append(x)
                            eta[x] += 1
            upper = np.array(upper, dtype=np.int64)
            lower = np.array(lower, dtype=np.int64)
            site = np.array(site, dtype=np.int64)
            occ = self.configs[upper, site] if upper.size else np.zeros(0, dtype=np.int64)
            self._ladder = (upper, lower, site, occ)
        return self._ladder

    def __repr__(self):
        return f"TruncatedSpace(m={self.m}, n_max={self.n_max}, dim={self.dim}, p={self.p})"


def inner_product(ts: TruncatedSpace, f, g) -> complex:
    """``sum_eta w(eta) conj(f(eta)) g(eta)`` over the truncated basis."""
    f = np.asarray(f)
    g = np.asarray(g)
    if f.shape != (ts.dim,) or g.shape != (ts.dim,):
        raise ValueError(f"state vectors must have shape ({ts.dim},), got {f.shape} and {g.shape}")
    return complex(np.sum(ts.weights * np.conj(f) * g))


def weighted_norm(ts: TruncatedSpace, f) -> float:
    f = np.asarray(f)
    if f.shape != (ts.dim,):
        raise ValueError(f"state vector must have shape ({ts.dim},), got {f.shape}")
    return float(np.sqrt(np.sum(ts.weights * np.abs(f) ** 2)))
