"""Raising, lowering and neutral operators as sparse matrices.

All operators act on functions of configurations and are compressions onto
the span of sectors ``0..n_max``: a raising operator applied to a function
on the top sector produces nothing, a lowering operator reads zeros above
the top sector.  The ``1/sqrt(p)`` and ``sqrt(p)`` factors live inside the
stored entries so the adjointness ``<f, k+ g> = <k- f, g>`` holds for the
matrices themselves.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
import scipy.sparse as sp

from .fock import DegenerateWeightError, TruncatedSpace

__all__ = [
    "WeightedOperator",
    "test_function",
    "build_k_plus",
    "build_k_minus",
    "build_k_zero",
    "identity",
    "commutator",
    "weighted_adjoint",
    "respects_shift",
    "frame_ladder",
    "PRUNE_TOL",
]

PRUNE_TOL = 1e-15

Shift = Union[int, str]


def test_function(values, m: int) -> np.ndarray:
    """Coerce ``values`` (scalar or length-``m`` sequence) to a complex test function."""
    phi = np.asarray(values, dtype=complex)
    if phi.ndim == 0:
        phi = np.full(m, phi)
    if phi.shape != (m,):
        raise ValueError(f"test function needs {m} values, got shape {phi.shape}")
    if not np.all(np.isfinite(phi)):
        raise ValueError("test function values must be finite")
    return phi


# keep pytest from collecting the helper above
test_function.__test__ = False


def _prune(mat, tol: float) -> sp.csr_array:
    mat = sp.csr_array(mat, dtype=complex)
    if tol > 0:
        mat.data[np.abs(mat.data) < tol] = 0
    mat.eliminate_zeros()
    mat.sort_indices()
    return mat


def _combine(a: Shift, b: Shift, how) -> Shift:
    if a == "mixed" or b == "mixed":
        return "mixed"
    return how(a, b)


@dataclass(frozen=True)
class WeightedOperator:
    """Sparse matrix over a truncated basis plus its sector displacement.

    Entries below ``prune_tol`` in magnitude are dropped on construction;
    pass ``prune_tol=0`` for operators whose small entries carry meaning
    (e.g. a unitary written in function coordinates).
    """

    matrix: sp.csr_array
    shift: Shift
    prune_tol: float = PRUNE_TOL

    def __post_init__(self):
        object.__setattr__(self, "matrix", _prune(self.matrix, self.prune_tol))

    @property
    def shape(self):
        return self.matrix.shape

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def _check(self, other):
        if self.shape != other.shape:
            raise ValueError(f"dimension mismatch: {self.shape} vs {other.shape}")

    def __matmul__(self, other):
        if isinstance(other, WeightedOperator):
            self._check(other)
            return WeightedOperator(
                self.matrix @ other.matrix,
                _combine(self.shift, other.shift, int.__add__),
                min(self.prune_tol, other.prune_tol),
            )
        return self.matrix @ np.asarray(other)

    def _sum(self, other, sign):
        self._check(other)
        if self.matrix.nnz == 0:
            shift = other.shift
        elif other.matrix.nnz == 0:
            shift = self.shift
        else:
            shift = self.shift if self.shift == other.shift else "mixed"
        return WeightedOperator(self.matrix + sign * other.matrix, shift, min(self.prune_tol, other.prune_tol))

    def __add__(self, other):
        return self._sum(other, 1)

    def __sub__(self, other):
        return self._sum(other, -1)

    def __mul__(self, scalar):
        return WeightedOperator(self.matrix * complex(scalar), self.shift, self.prune_tol)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def block(self, ts: TruncatedSpace, n: int) -> np.ndarray:
        """Dense restriction to sectors ``0..n`` (rows and columns)."""
        cut = ts.below(n)
        return self.matrix[cut, cut].toarray()


def build_k_plus(ts: TruncatedSpace, phi) -> WeightedOperator:
    """``(k+ f)(eta) = p^{-1/2} sum_x phi(x) n_x f(eta - e_x)``."""
    phi = test_function(phi, ts.m)
    upper, lower, site, occ = ts.ladder()
    data = phi[site] * occ / np.sqrt(ts.p)
    return WeightedOperator(sp.csr_array((data, (upper, lower)), shape=(ts.dim, ts.dim)), 1)


def build_k_minus(ts: TruncatedSpace, phi) -> WeightedOperator:
    """``(k- f)(eta) = p^{1/2} sum_x conj(phi(x)) (alpha_x + n_x) f(eta + e_x)``."""
    phi = test_function(phi, ts.m)
    upper, lower, site, occ = ts.ladder()
    # eta = configs[lower] has n_x = occ - 1 at the touched site
    data = np.sqrt(ts.p) * np.conj(phi[site]) * (ts.space.alpha[site] + occ - 1)
    return WeightedOperator(sp.csr_array((data, (lower, upper)), shape=(ts.dim, ts.dim)), -1)


def build_k_zero(ts: TruncatedSpace, phi) -> WeightedOperator:
    """Diagonal ``sum_x phi(x) n_x + 1/2 sum_x phi(x) alpha_x``."""
    phi = test_function(phi, ts.m)
    diag = ts.configs @ phi + 0.5 * np.dot(phi, ts.space.alpha)
    return WeightedOperator(sp.diags_array(diag, format="csr"), 0)


def identity(ts: TruncatedSpace) -> WeightedOperator:
    return WeightedOperator(sp.eye_array(ts.dim, format="csr"), 0)


def commutator(a: WeightedOperator, b: WeightedOperator) -> WeightedOperator:
    """``[A, B] = AB - BA``."""
    a._check(b)
    shift = _combine(a.shift, b.shift, int.__add__)
    return WeightedOperator(a.matrix @ b.matrix - b.matrix @ a.matrix, shift, min(a.prune_tol, b.prune_tol))


def weighted_adjoint(ts: TruncatedSpace, a: WeightedOperator) -> WeightedOperator:
    """Adjoint in the Pascal-weighted inner product, ``W^{-1} A^H W``.

    Raises :class:`DegenerateWeightError` if a configuration of zero weight
    carries a nonzero entry of ``A``.
    """
    if a.shape != (ts.dim, ts.dim):
        raise ValueError(f"operator shape {a.shape} does not match dim {ts.dim}")
    coo = a.matrix.tocoo()
    w = ts.weights
    if np.any(w[coo.row] == 0) or np.any(w[coo.col] == 0):
        raise DegenerateWeightError("operator touches configurations of zero Pascal weight")
    # (A*)[j, i] = w_i conj(A[i, j]) / w_j
    data = w[coo.row] * np.conj(coo.data) / w[coo.col]
    adj = sp.csr_array((data, (coo.col, coo.row)), shape=a.shape)
    shift = -a.shift if isinstance(a.shift, int) else a.shift
    return WeightedOperator(adj, shift, a.prune_tol)


def respects_shift(ts: TruncatedSpace, a: WeightedOperator) -> bool:
    """True if every nonzero entry moves exactly ``a.shift`` particles."""
    if a.shift == "mixed":
        return True
    coo = a.matrix.tocoo()
    return bool(np.all(ts.totals[coo.row] == ts.totals[coo.col] + a.shift))


def frame_ladder(ts: TruncatedSpace, phi) -> sp.csr_array:
    """Raising operator ``k+(phi)`` in the orthonormal frame ``W^{1/2} . W^{-1/2}``.

    The entry for ``eta - e_x -> eta`` is ``phi(x) sqrt(n_x (alpha_x + n_x - 1))``,
    which follows from the weight ratio ``w(eta)/w(eta - e_x) = p (alpha_x + n_x - 1) / n_x``.
    The lowering operator in this frame is the conjugate transpose.
    """
    phi = test_function(phi, ts.m)
    upper, lower, site, occ = ts.ladder()
    data = phi[site] * np.sqrt(occ * (ts.space.alpha[site] + occ - 1))
    return sp.csr_array((data, (upper, lower)), shape=(ts.dim, ts.dim))
