"""Symmetric inclusion process on a finite site space.

A particle at ``x`` jumps to ``y != x`` at rate ``c(x, y) n_x (alpha_y + n_y)``.
The dynamics conserves the particle number, so the generator is assembled
sector by sector.  Generators act on functions: ``(L f)(eta) = sum_eta'
rate(eta -> eta') (f(eta') - f(eta))``, i.e. ``L[eta, eta'] = rate`` and
the diagonal holds minus the total exit rate.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .fock import SectorBasis, SiteSpace, TruncatedSpace, enumerate_sector, pascal_weight
from .operators import WeightedOperator, build_k_minus, build_k_plus, build_k_zero, identity
from .pascal import RngStream

__all__ = [
    "RateKernel",
    "SectorGenerator",
    "TrajectoryEvent",
    "build_generator",
    "build_generator_algebraic",
    "sector_generators",
    "semigroup_matrix",
    "semigroup_apply",
    "expected_jumps",
    "gillespie_simulate",
    "gillespie_final_states",
    "check_detailed_balance",
    "removal_operator",
    "removal_matrix",
    "check_consistency",
    "removal_power_one",
    "check_conservative_factorials",
]


@dataclass(frozen=True)
class RateKernel:
    """Symmetric non-negative jump kernel ``c(x, y)``."""

    c: np.ndarray

    def __init__(self, c):
        c = np.array(c, dtype=float)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError(f"rate kernel must be square, got shape {c.shape}")
        if not np.all(np.isfinite(c)) or np.any(c < 0):
            raise ValueError("rates must be finite and non-negative")
        if not np.array_equal(c, c.T):
            raise ValueError("rate kernel must be symmetric")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    @classmethod
    def constant(cls, m: int, value: float = 1.0) -> "RateKernel":
        return cls(np.full((m, m), float(value)))

    @classmethod
    def product_form(cls, phi) -> "RateKernel":
        """``c(x, y) = 2 phi(x) phi(y)`` for a non-negative real ``phi``."""
        phi = np.asarray(phi, dtype=float)
        return cls(2.0 * np.outer(phi, phi))

    @property
    def m(self) -> int:
        return self.c.shape[0]


@dataclass(frozen=True)
class SectorGenerator:
    n: int
    basis: SectorBasis = field(repr=False)
    matrix: sp.csr_array = field(repr=False)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


class TrajectoryEvent(NamedTuple):
    time: float
    from_site: int
    to_site: int


def _kernel(space: SiteSpace, c) -> np.ndarray:
    kern = c.c if isinstance(c, RateKernel) else RateKernel(c).c
    if kern.shape[0] != space.m:
        raise ValueError(f"kernel is {kern.shape[0]}x{kern.shape[0]} but space has {space.m} sites")
    return kern


def build_generator(space: SiteSpace, c, n: int, basis: SectorBasis | None = None) -> SectorGenerator:
    """Generator of the ``n``-particle sector as a sparse matrix."""
    kern = _kernel(space, c)
    basis = basis if basis is not None else enumerate_sector(space, n)
    alpha = space.alpha
    rows, cols, vals = [], [], []
    exit_rate = np.zeros(len(basis))
    for i, eta in enumerate(basis.configs.tolist()):
        for x, nx in enumerate(eta):
            if not nx:
                continue
            for y in range(space.m):
                if y == x:
                    continue
                rate = kern[x, y] * nx * (alpha[y] + eta[y])
                if rate == 0:
                    continue
                eta[x] -= 1
                eta[y] += 1
                rows.append(i)
                cols.append(basis.index[tuple(eta)])
                vals.append(rate)
                eta[x] += 1
                eta[y] -= 1
                exit_rate[i] += rate
    size = len(basis)
    off = sp.csr_array((vals, (rows, cols)), shape=(size, size))
    return SectorGenerator(n=n, basis=basis, matrix=sp.csr_array(off - sp.diags_array(exit_rate)))


def sector_generators(ts: TruncatedSpace, c) -> dict[int, SectorGenerator]:
    return {n: build_generator(ts.space, c, n, ts.sectors[n]) for n in range(ts.n_max + 1)}


def build_generator_algebraic(ts: TruncatedSpace, phi) -> WeightedOperator:
    """Generator for ``c(x, y) = 2 phi(x) phi(y)`` written in raising/lowering form.

    ``k+ k- + k- k+ - 2 (k0)^2 + (1/2 (sum phi alpha)^2 - sum phi^2 alpha) I``,
    all operators indexed by the same real ``phi``.  Exact on sectors below
    ``n_max``; the top sector sees the compression.
    """
    phi = np.asarray(phi)
    if np.iscomplexobj(phi) and np.any(np.imag(phi) != 0):
        raise ValueError("the generator rewrite needs a real test function")
    phi = np.real(phi).astype(float)
    kp = build_k_plus(ts, phi)
    km = build_k_minus(ts, phi)
    k0 = build_k_zero(ts, phi)
    alpha = ts.space.alpha
    const = 0.5 * np.dot(phi, alpha) ** 2 - np.dot(phi**2, alpha)
    total = kp @ km + km @ kp - 2.0 * (k0 @ k0) + const * identity(ts)
    return WeightedOperator(total.matrix, 0)


def semigroup_matrix(gen: SectorGenerator, t: float) -> np.ndarray:
    """Dense ``exp(t L)`` on one sector (scaling and squaring with Padé)."""
    if t < 0:
        raise ValueError("time must be non-negative")
    if t == 0:
        return np.eye(gen.matrix.shape[0])
    return scipy.linalg.expm(t * gen.dense())


def semigroup_apply(gen: SectorGenerator, t: float, f) -> np.ndarray:
    """``exp(t L) f`` for a function ``f`` on the generator's sector."""
    f = np.asarray(f)
    if f.shape[0] != gen.matrix.shape[0]:
        raise ValueError(f"function has {f.shape[0]} entries, sector has {gen.matrix.shape[0]}")
    return semigroup_matrix(gen, t) @ f


def expected_jumps(gen: SectorGenerator, t: float) -> np.ndarray:
    """Expected number of jumps in ``[0, t]`` from every starting configuration.

    Equals ``int_0^t exp(s L) r ds`` with ``r`` the total exit rate, obtained
    from the exponential of the augmented matrix ``[[L, r], [0, 0]]``.
    """
    L = gen.dense()
    size = L.shape[0]
    aug = np.zeros((size + 1, size + 1))
    aug[:size, :size] = L
    aug[:size, size] = -np.diag(L)
    return scipy.linalg.expm(t * aug)[:size, size]


def gillespie_simulate(space: SiteSpace, c, eta0, t_end: float, rng: RngStream | np.random.Generator):
    """Exact jump-chain simulation up to ``t_end``.

    Returns ``(events, final_configuration)``.  Only the rows and columns of
    the pair-rate table touched by the last jump are recomputed.
    """
    if t_end < 0:
        raise ValueError("t_end must be non-negative")
    kern = _kernel(space, c)
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    eta = np.array(eta0, dtype=np.int64)
    if eta.shape != (space.m,) or np.any(eta < 0):
        raise ValueError("initial configuration must be a non-negative vector of length m")
    alpha = space.alpha
    rates = kern * eta[:, None] * (alpha + eta)[None, :]
    np.fill_diagonal(rates, 0.0)
    events: list[TrajectoryEvent] = []
    t = 0.0
    while True:
        total = rates.sum()
        if total <= 0:
            break
        t += gen.exponential(1.0 / total)
        if t > t_end:
            break
        flat = np.cumsum(rates.ravel())
        k = min(int(np.searchsorted(flat, gen.random() * flat[-1], side="right")), flat.size - 1)
        x, y = divmod(k, space.m)
        eta[x] -= 1
        eta[y] += 1
        events.append(TrajectoryEvent(t, x, y))
        for s in (x, y):
            rates[s, :] = kern[s, :] * eta[s] * (alpha + eta)
            rates[:, s] = kern[:, s] * eta * (alpha[s] + eta[s])
            rates[s, s] = 0.0
    return events, eta


def gillespie_final_states(space: SiteSpace, c, eta0, t_end: float, n_replicas: int, rng: RngStream):
    """Final configurations and jump counts of independent replicas.

    Replica ``r`` draws from its own generator ``rng.generator(r)``.
    """
    finals = np.empty((n_replicas, space.m), dtype=np.int64)
    jumps = np.empty(n_replicas, dtype=np.int64)
    for r in range(n_replicas):
        events, eta = gillespie_simulate(space, c, eta0, t_end, rng.generator(r))
        finals[r] = eta
        jumps[r] = len(events)
    return finals, jumps


def check_detailed_balance(space: SiteSpace, c, n: int, relative: bool = False) -> float:
    """Largest ``|w(eta) rate(eta -> eta') - w(eta') rate(eta' -> eta)|`` in sector ``n``.

    With ``relative=True`` the result is divided by the largest probability flux.
    """
    gen = build_generator(space, c, n)
    w = pascal_weight(space, gen.basis.configs)
    flux = sp.diags_array(w) @ gen.matrix
    flux = flux - sp.diags_array(flux.diagonal())
    viol = abs(flux - flux.T)
    worst = float(viol.max()) if viol.nnz else 0.0
    if relative:
        scale = float(abs(flux).max()) if flux.nnz else 0.0
        return worst / scale if scale > 0 else worst
    return worst


def removal_operator(ts: TruncatedSpace, n: int) -> sp.csr_array:
    """``(A f)(eta) = sum_x n_x f(eta - e_x)`` from sector ``n-1`` to sector ``n``."""
    upper, lower, site, occ = ts.ladder()
    lo, hi = ts.sector_slice(n - 1), ts.sector_slice(n)
    sel = (upper >= hi.start) & (upper < hi.stop)
    shape = (hi.stop - hi.start, lo.stop - lo.start)
    return sp.csr_array((occ[sel].astype(float), (upper[sel] - hi.start, lower[sel] - lo.start)), shape=shape)


def check_consistency(ts: TruncatedSpace, c=None, generators: Mapping[int, object] | None = None) -> float:
    """Largest entry of ``A L_{n-1} - L_n A`` over sectors ``1..n_max``.

    Pass ``generators`` (sector -> generator or matrix) to test a process
    other than the inclusion process built from ``c``.
    """
    if generators is None:
        if c is None:
            raise ValueError("need a rate kernel or explicit generators")
        generators = sector_generators(ts, c)
    worst = 0.0
    for n in range(1, ts.n_max + 1):
        A = removal_operator(ts, n)
        lo = _as_sparse(generators[n - 1])
        hi = _as_sparse(generators[n])
        diff = A @ lo - hi @ A
        if diff.nnz:
            worst = max(worst, float(abs(diff).max()))
    return worst


def _as_sparse(gen) -> sp.csr_array:
    return gen.matrix if isinstance(gen, SectorGenerator) else sp.csr_array(gen)


def removal_matrix(ts: TruncatedSpace) -> sp.csr_array:
    """``A = sqrt(p) k+(1)`` on the whole truncated space, assembled from integer counts.

    Entries are the occupations ``n_x`` themselves, so powers of ``A`` applied
    to integer vectors stay exact in floating point.
    """
    upper, lower, _, occ = ts.ladder()
    return sp.csr_array((occ.astype(float), (upper, lower)), shape=(ts.dim, ts.dim))


def removal_power_one(ts: TruncatedSpace, k: int) -> np.ndarray:
    """``A^k 1`` on the whole truncated space."""
    A = removal_matrix(ts)
    f = np.ones(ts.dim)
    for _ in range(k):
        f = A @ f
    return f


def check_conservative_factorials(ts: TruncatedSpace, c, t: float, k: int, generators=None) -> float:
    """Check ``A^k 1 = (falling factorial of the total)`` and ``P_t A^k 1 = A^k 1``.

    Returns the larger of the two violations.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    ak = removal_power_one(ts, k)
    falling = np.ones(ts.dim)
    for j in range(k):
        falling *= ts.totals - j
    exact = float(np.max(np.abs(ak - falling)))
    if generators is None:
        generators = sector_generators(ts, c)
    drift = 0.0
    for n in range(ts.n_max + 1):
        block = ak[ts.sector_slice(n)]
        evolved = semigroup_apply(generators[n], t, block)
        drift = max(drift, float(np.max(np.abs(evolved - block))))
    return max(exact, drift)
