"""Independent reference implementations used by the tests.

Nothing here imports the package: configurations are enumerated with
``itertools.product``, operators are filled entry by entry from their
defining formulas, exponentials go through eigendecompositions, and Meixner
polynomials are summed in exact rational arithmetic.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np


def configurations(m: int, n_max: int):
    """All occupation vectors of total at most ``n_max``, grouped by total."""
    out = []
    for n in range(n_max + 1):
        sector = [c for c in itertools.product(range(n + 1), repeat=m) if sum(c) == n]
        out.extend(sorted(sector, reverse=True))
    return out


def pascal_weight(alpha, p, eta) -> float:
    w = 1.0
    for a, k in zip(alpha, eta):
        rising = math.prod(a + j for j in range(k))
        w *= (1 - p) ** a * p**k * rising / math.factorial(k)
    return w


def ladder_matrices(alpha, p, n_max, phi):
    """Dense ``k+``, ``k-``, ``k0`` on the truncated space from the defining sums."""
    configs = configurations(len(alpha), n_max)
    index = {c: i for i, c in enumerate(configs)}
    dim = len(configs)
    kp = np.zeros((dim, dim), dtype=complex)
    km = np.zeros((dim, dim), dtype=complex)
    k0 = np.zeros((dim, dim), dtype=complex)
    for i, eta in enumerate(configs):
        k0[i, i] = sum(phi[x] * eta[x] for x in range(len(alpha))) + 0.5 * sum(phi[x] * alpha[x] for x in range(len(alpha)))
        for x in range(len(alpha)):
            if eta[x] > 0:
                lower = list(eta)
                lower[x] -= 1
                kp[i, index[tuple(lower)]] += phi[x] * eta[x] / math.sqrt(p)
            upper = list(eta)
            upper[x] += 1
            if tuple(upper) in index:
                km[i, index[tuple(upper)]] += math.sqrt(p) * np.conj(phi[x]) * (alpha[x] + eta[x])
    return configs, kp, km, k0


def generator(alpha, c, configs):
    """Dense inclusion-process generator on the listed configurations."""
    index = {cfg: i for i, cfg in enumerate(configs)}
    m = len(alpha)
    L = np.zeros((len(configs), len(configs)))
    for i, eta in enumerate(configs):
        for x in range(m):
            for y in range(m):
                if x == y or eta[x] == 0:
                    continue
                rate = c[x][y] * eta[x] * (alpha[y] + eta[y])
                target = list(eta)
                target[x] -= 1
                target[y] += 1
                L[i, index[tuple(target)]] += rate
                L[i, i] -= rate
    return L


def reversible_expm(L, weights, t):
    """``exp(t L)`` for an ``L`` reversible w.r.t. ``weights``, by symmetric eigendecomposition."""
    d = np.sqrt(np.asarray(weights, dtype=float))
    S = (d[:, None] * L) / d[None, :]
    S = 0.5 * (S + S.T)
    vals, vecs = np.linalg.eigh(S)
    E = (vecs * np.exp(t * vals)) @ vecs.T
    return (E / d[:, None]) * d[None, :]


def skew_expm(A):
    """``exp(A)`` for skew-Hermitian ``A`` through the Hermitian ``iA``."""
    vals, vecs = np.linalg.eigh(1j * A)
    return (vecs * np.exp(-1j * vals)) @ vecs.conj().T


def meixner_M_exact(n: int, x: int, a: Fraction, p: Fraction) -> Fraction:
    q = 1 - 1 / p
    total = Fraction(0)
    term = Fraction(1)
    for k in range(n + 1):
        if k:
            term *= Fraction(k - 1 - x) * Fraction(k - 1 - n) / ((a + k - 1) * k) * q
        total += term
    return total


def meixner_monic_exact(n: int, x: int, a: Fraction, p: Fraction) -> Fraction:
    rising = Fraction(1)
    for j in range(n):
        rising *= a + j
    return rising * (1 - 1 / p) ** (-n) * meixner_M_exact(n, x, a, p)


def generating_coefficients(x: int, a: Fraction, p: Fraction, n_terms: int) -> list[Fraction]:
    """Taylor coefficients in ``s`` of ``(1 + s)^x (1 + p s)^{-x-a}`` for integer ``x >= 0``."""
    first = [Fraction(math.comb(x, k)) for k in range(n_terms)]
    second = []
    coef = Fraction(1)
    for k in range(n_terms):
        second.append(coef)
        coef = coef * (-x - a - k) / (k + 1) * p
    return [sum(first[j] * second[k - j] for j in range(k + 1)) for k in range(n_terms)]


def multinomial(kappa) -> int:
    return math.factorial(sum(kappa)) // math.prod(math.factorial(k) for k in kappa)
