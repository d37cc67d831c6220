"""Meixner polynomials and the multivariate orthogonalization ``I_n``.

``meixner_M`` is the terminating hypergeometric sum

    M_n(x; a, p) = sum_k (-x)_k (-n)_k / ((a)_k k!) (1 - 1/p)^k

and ``meixner_monic`` rescales it to leading coefficient one,
``Mm_n = (a)_n (1 - 1/p)^{-n} M_n``.  Orthogonality is with respect to the
negative binomial law ``(1-p)^a p^x (a)_x / x!``.

For degree above ``HYPERGEOMETRIC_MAX_DEGREE`` the monic polynomials come
from the three-term recurrence

    Mm_{n+1}(x) = (x - b_n) Mm_n(x) - g_n Mm_{n-1}(x),
    b_n = (n + (n + a) p) / (1 - p),   g_n = n (n + a - 1) p / (1 - p)^2,

which the test-suite checks against the generating function before trusting.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from .fock import TruncatedSpace, rising_factorial

__all__ = [
    "MeixnerParams",
    "PolynomialExpansion",
    "HYPERGEOMETRIC_MAX_DEGREE",
    "meixner_M",
    "meixner_monic",
    "monic_recurrence_coefficients",
    "monic_by_recurrence",
    "generating_function",
    "generating_partial_sum",
    "build_I_n",
    "evaluate_expansion",
]

# the alternating hypergeometric sum loses digits quickly beyond this degree
# when p is large; the recurrence stays at a few ulp
HYPERGEOMETRIC_MAX_DEGREE = 10


@dataclass(frozen=True)
class MeixnerParams:
    a: float
    p: float

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"Meixner parameter a must be positive, got {self.a}")
        if not 0 < self.p < 1:
            raise ValueError(f"p must lie in (0, 1), got {self.p}")


def _hypergeometric(n: int, x: np.ndarray, a: float, p: float) -> np.ndarray:
    # Kahan summation over k; exact-zero terms are skipped so that the
    # compensation never leaks into an already terminated sum
    q = 1.0 - 1.0 / p
    total = np.ones_like(x)
    comp = np.zeros_like(x)
    term = np.ones_like(x)
    for k in range(n):
        term = term * ((k - x) * (k - n)) / ((a + k) * (k + 1)) * q
        live = term != 0
        if not live.any():
            break
        y = np.where(live, term - comp, 0.0)
        t = total + y
        comp = np.where(live, (t - total) - y, comp)
        total = np.where(live, t, total)
    return total


def meixner_M(n: int, x, params: MeixnerParams):
    """Meixner polynomial ``M_n(x; a, p)`` in hypergeometric normalization."""
    if n < 0:
        raise ValueError("degree must be non-negative")
    x_arr = np.asarray(x, dtype=float)
    if n <= HYPERGEOMETRIC_MAX_DEGREE:
        out = _hypergeometric(n, np.atleast_1d(x_arr).astype(float), params.a, params.p)
    else:
        scale = rising_factorial(params.a, n) * (1.0 - 1.0 / params.p) ** (-n)
        out = monic_by_recurrence(n, np.atleast_1d(x_arr), params) / scale
    return out.reshape(x_arr.shape) if x_arr.ndim else float(out[0])


def meixner_monic(n: int, x, params: MeixnerParams):
    """Monic Meixner polynomial ``Mm_n(x; a, p)``."""
    if n < 0:
        raise ValueError("degree must be non-negative")
    x_arr = np.asarray(x, dtype=float)
    if n <= HYPERGEOMETRIC_MAX_DEGREE:
        scale = rising_factorial(params.a, n) * (1.0 - 1.0 / params.p) ** (-n)
        out = scale * _hypergeometric(n, np.atleast_1d(x_arr).astype(float), params.a, params.p)
    else:
        out = monic_by_recurrence(n, np.atleast_1d(x_arr), params)
    return out.reshape(x_arr.shape) if x_arr.ndim else float(out[0])


def monic_recurrence_coefficients(n: int, params: MeixnerParams):
    """``(b_k, g_k)`` for ``k = 0..n-1`` of the monic three-term recurrence."""
    return _coefficients(n, params.a, params.p)


def _coefficients(n, a, p):
    k = np.arange(n, dtype=float)
    b = (k + (k + a) * p) / (1.0 - p)
    g = k * (k + a - 1.0) * p / (1.0 - p) ** 2
    return b, g


def monic_by_recurrence(n: int, x, params: MeixnerParams, all_degrees: bool = False):
    """Monic Meixner polynomials via the recurrence.

    Returns ``Mm_n(x)``, or the stack ``Mm_0..Mm_n`` if ``all_degrees``.
    """
    return _recurrence(n, x, params.a, params.p, all_degrees)


def _recurrence(n, x, a, p, all_degrees=False):
    x = np.asarray(x, dtype=float)
    b, g = _coefficients(n, a, p)
    out = np.empty((n + 1,) + x.shape)
    out[0] = 1.0
    if n >= 1:
        out[1] = x - b[0]
    for k in range(1, n):
        out[k + 1] = (x - b[k]) * out[k] - g[k] * out[k - 1]
    return out if all_degrees else out[n]


def _monic_table(n: int, x: np.ndarray, params: MeixnerParams) -> np.ndarray:
    """Stack ``Mm_0(x)..Mm_n(x)``, each through :func:`meixner_monic`."""
    return np.stack([meixner_monic(k, x, params) for k in range(n + 1)])


def generating_function(s, x, params: MeixnerParams):
    """Closed form ``(1 + s)^x (1 + p s)^{-x-a}``."""
    a, p = params.a, params.p
    return (1.0 + s) ** x * (1.0 + p * s) ** (-x - a)


def generating_partial_sum(s, x, params: MeixnerParams, max_terms: int = 200, rtol: float = 1e-16):
    """``sum_n s^n/n! (1-p)^n Mm_n(x)`` until a term drops below ``rtol`` times the sum.

    Returns ``(value, number_of_terms)``.
    """
    total = 0.0
    coef = 1.0
    for n in range(max_terms):
        term = coef * meixner_monic(n, x, params)
        total += term
        if n > 0 and abs(term) < rtol * abs(total):
            return total, n + 1
        coef *= s * (1.0 - params.p) / (n + 1)
    return total, max_terms


@dataclass(frozen=True)
class PolynomialExpansion:
    """``sum_kappa c_kappa prod_i Mm_{kappa_i}(eta_i; alpha_i, p)``.

    ``kappas`` is an integer array of shape ``(K, m)`` whose rows all sum to ``n``.
    """

    n: int
    kappas: np.ndarray
    coeffs: np.ndarray
    alpha: np.ndarray
    p: float

    def __post_init__(self):
        if self.kappas.shape[0] != self.coeffs.shape[0]:
            raise ValueError("one coefficient per multiset required")
        if self.kappas.size and np.any(self.kappas.sum(axis=1) != self.n):
            raise ValueError(f"every multiset must have total {self.n}")

    @property
    def terms(self):
        return [(tuple(k), c) for k, c in zip(self.kappas.tolist(), self.coeffs)]

    def __call__(self, eta):
        return evaluate_expansion(self, eta)


def build_I_n(ts: TruncatedSpace, n: int, f_sector) -> PolynomialExpansion:
    """Orthogonalized multilinear statistic ``I_n(f_n)`` as a Meixner expansion.

    ``f_sector[j]`` is the value of ``f`` on the ``j``-th configuration of
    sector ``n``; the coefficient of multiset ``kappa`` is
    ``n! / prod(kappa_i!) * f(kappa)``.  Terms with zero coefficient are kept
    out of the expansion.
    """
    f_sector = np.asarray(f_sector)
    if n > ts.n_max:
        raise ValueError(f"sector {n} exceeds n_max = {ts.n_max}")
    basis = ts.sectors[n]
    if f_sector.shape != (len(basis),):
        raise ValueError(f"expected {len(basis)} sector values, got shape {f_sector.shape}")
    kappas = np.asarray(basis.configs)
    multinom = np.array([factorial(n) // int(np.prod([factorial(k) for k in row])) for row in kappas.tolist()], dtype=float)
    dtype = float if np.isrealobj(f_sector) else complex
    coeffs = (multinom * f_sector).astype(dtype)
    keep = coeffs != 0
    return PolynomialExpansion(n=n, kappas=kappas[keep], coeffs=coeffs[keep], alpha=ts.space.alpha, p=ts.p)


def evaluate_expansion(expansion: PolynomialExpansion, eta):
    """Evaluate at one configuration or at an ``(N, m)`` array of them."""
    eta = np.asarray(eta, dtype=np.int64)
    single = eta.ndim == 1
    eta = np.atleast_2d(eta)
    n = expansion.n
    out = np.zeros(eta.shape[0], dtype=expansion.coeffs.dtype if expansion.coeffs.size else float)
    if expansion.coeffs.size:
        m = eta.shape[1]
        # tables[i][k, j] = Mm_k(eta[j, i]; alpha_i, p), computed once per distinct count
        tables = []
        for i in range(m):
            a = expansion.alpha[i]
            counts, inverse = np.unique(eta[:, i], return_inverse=True)
            if a > 0:
                tab = _monic_table(n, counts.astype(float), MeixnerParams(a, expansion.p))
            else:
                # zero-mass site: only the empty count carries weight; use the
                # recurrence, whose coefficients extend continuously to a = 0
                tab = _recurrence(n, counts.astype(float), 0.0, expansion.p, all_degrees=True)
            tables.append(tab[:, inverse.reshape(-1)])
        for kappa, c in zip(expansion.kappas, expansion.coeffs):
            prod = np.full(eta.shape[0], c)
            for i, k in enumerate(kappa):
                if k:
                    prod = prod * tables[i][k]
            out = out + prod
    return out[0] if single else out
