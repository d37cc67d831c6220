"""Unitaries generated by the raising/lowering pair, exponential states, Möbius maps.

Exponentials are taken in the orthonormal frame ``D = W^{1/2}``: there the
generator ``xi k+(1) - conj(xi) k-(1)`` is an honest skew-Hermitian matrix
with entries ``sqrt(n_x (alpha_x + n_x - 1))`` and the function-space operator
is ``D^{-1} exp(.) D``.  Weighted norms of residuals are Euclidean norms in
that frame, which keeps every check well conditioned even though the Pascal
weights span many orders of magnitude.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import NamedTuple

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .fock import DegenerateWeightError, SiteSpace, TruncatedSpace
from .meixner import build_I_n, evaluate_expansion
from .operators import WeightedOperator, frame_ladder, test_function
from .sip import removal_matrix, sector_generators, semigroup_matrix

__all__ = [
    "UnitaryParams",
    "MobiusAction",
    "TruncationResidual",
    "frame_generator",
    "frame_unitary",
    "build_unitary",
    "apply_unitary",
    "weighted_unitarity_defect",
    "exponential_state",
    "exponential_state_norm_sq",
    "mobius_transform",
    "multiplier",
    "apply_theorem_check",
    "check_exponential_transform",
    "check_symmetry",
    "check_intertwining",
    "k_transform",
    "block_semigroup",
    "apply_blocks",
]

# dense exponentials up to this dimension, Krylov-free expm_multiply beyond
DENSE_LIMIT = 4000


@dataclass(frozen=True)
class UnitaryParams:
    xi: complex = 0.0
    theta: float = 0.0

    @classmethod
    def meixner_point(cls, p: float) -> "UnitaryParams":
        """``xi = artanh(sqrt(p))``, ``theta = 0``."""
        return cls(complex(np.arctanh(np.sqrt(p))), 0.0)


class TruncationResidual(NamedTuple):
    residual: float
    coverage: float
    n_max: int


def _frame(ts: TruncatedSpace) -> np.ndarray:
    if np.any(ts.weights <= 0):
        raise DegenerateWeightError("the unitary needs strictly positive weights (all alpha_i > 0)")
    return np.sqrt(ts.weights)


def frame_generator(ts: TruncatedSpace, xi: complex) -> sp.csr_array:
    """``D (xi k+(1) - conj(xi) k-(1)) D^{-1}``, skew-Hermitian by construction."""
    raise_ = frame_ladder(ts, 1.0)
    return sp.csr_array(xi * raise_ - np.conj(xi) * raise_.conj().T)


def _phase(ts: TruncatedSpace, theta: float) -> np.ndarray:
    return np.exp(1j * theta * (ts.space.total_mass + 2.0 * ts.totals))


def frame_unitary(ts: TruncatedSpace, params: UnitaryParams) -> np.ndarray:
    """Dense unitary ``D U(xi, theta) D^{-1}``."""
    _frame(ts)
    if ts.dim > DENSE_LIMIT:
        raise MemoryError(f"dense unitary of dimension {ts.dim}; use apply_unitary instead")
    gen = frame_generator(ts, params.xi).toarray()
    U = scipy.linalg.expm(gen) if params.xi != 0 else np.eye(ts.dim, dtype=complex)
    return U * _phase(ts, params.theta)[None, :]


def build_unitary(ts: TruncatedSpace, params: UnitaryParams) -> WeightedOperator:
    """``U(xi, theta) = exp(xi k+(1) - conj(xi) k-(1)) exp(2 i theta k0(1))`` compressed."""
    D = _frame(ts)
    Us = frame_unitary(ts, params)
    U = Us / D[:, None] * D[None, :]
    return WeightedOperator(sp.csr_array(U), 0 if params.xi == 0 else "mixed", prune_tol=0.0)


def apply_unitary(ts: TruncatedSpace, params: UnitaryParams, f, frame: bool = False) -> np.ndarray:
    """``U f`` without forming the matrix when the space is large.

    With ``frame=True`` both input and output are in the orthonormal frame.
    """
    D = _frame(ts)
    g = np.asarray(f, dtype=complex)
    if not frame:
        g = D * g
    g = _phase(ts, params.theta) * g
    if params.xi != 0:
        if ts.dim <= DENSE_LIMIT:
            g = scipy.linalg.expm(frame_generator(ts, params.xi).toarray()) @ g
        else:
            g = expm_multiply(frame_generator(ts, params.xi).tocsc(), g)
    return g if frame else g / D


def weighted_unitarity_defect(ts: TruncatedSpace, U: WeightedOperator) -> float:
    """``max |D^{-1} (U^H W U - W) D^{-1}|``, i.e. ``S^H S - I`` for ``S = D U D^{-1}``."""
    D = _frame(ts)
    S = U.toarray() * D[:, None] / D[None, :]
    return float(np.max(np.abs(S.conj().T @ S - np.eye(ts.dim))))


def exponential_state(ts: TruncatedSpace, z) -> np.ndarray:
    """Truncated ``E_z(eta) = prod_x (z(x)/sqrt(p))^{n_x}``."""
    z = test_function(z, ts.m)
    if np.max(np.abs(z)) >= 1:
        raise ValueError("exponential states need sup|z| < 1")
    return np.prod((z / np.sqrt(ts.p))[None, :] ** ts.configs, axis=1)


def exponential_state_norm_sq(space: SiteSpace, z) -> float:
    """Untruncated ``||E_z||^2 = (1-p)^{alpha(E)} exp(-sum alpha log(1 - |z|^2))``."""
    z = test_function(z, space.m)
    return float(np.exp(space.total_mass * np.log1p(-space.p) - np.sum(space.alpha * np.log1p(-np.abs(z) ** 2))))


@dataclass(frozen=True)
class MobiusAction:
    """The SU(1,1) element ``exp([[0, i xi], [-i conj(xi), 0]])`` and its disk action."""

    xi: complex

    @property
    def direction(self) -> complex:
        """``xi/|xi|``; taken as 1 at ``xi = 0`` where every formula is the identity."""
        r = abs(self.xi)
        return complex(self.xi) / r if r > 0 else 1.0 + 0j

    @property
    def a(self) -> complex:
        return complex(np.cosh(abs(self.xi)))

    @property
    def b(self) -> complex:
        return 1j * self.direction * np.sinh(abs(self.xi))

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [np.conj(self.b), np.conj(self.a)]])

    def act(self, w):
        """``phi_A(w) = (a w + b) / (conj(b) w + conj(a))``."""
        a, b = self.a, self.b
        return (a * w + b) / (np.conj(b) * w + np.conj(a))


def mobius_transform(ma: MobiusAction, z) -> np.ndarray:
    """``z_xi = (z + u tanh|xi|) / (1 + z conj(u) tanh|xi|)``, ``u = xi/|xi|``."""
    z = np.asarray(z, dtype=complex)
    if np.max(np.abs(z), initial=0.0) >= 1:
        raise ValueError("Möbius action is defined on the open unit disk, got |z| >= 1")
    u = ma.direction
    r = np.tanh(abs(ma.xi))
    return (z + u * r) / (1.0 + z * np.conj(u) * r)


def multiplier(ma: MobiusAction, space: SiteSpace, z) -> complex:
    """``C(xi) = exp(-sum_y alpha_y log(cosh|xi| + z(y) conj(u) sinh|xi|))``.

    The principal logarithm is split as ``log cosh|xi| + log1p(z conj(u) tanh|xi|)``,
    which stays on the principal branch because ``|z tanh|xi|| < 1``.
    """
    z = test_function(z, space.m)
    if np.max(np.abs(z)) >= 1:
        raise ValueError("multiplier needs sup|z| < 1")
    r = abs(ma.xi)
    logs = np.log(np.cosh(r)) + np.log1p(z * np.conj(ma.direction) * np.tanh(r))
    return complex(np.exp(-np.sum(space.alpha * logs)))


def apply_theorem_check(ts: TruncatedSpace, n: int, f_sector) -> TruncationResidual:
    """Weighted-norm distance between ``U f`` and the scaled Meixner expansion.

    ``U`` is taken at ``xi = artanh(sqrt(p))``, ``theta = 0``, ``f`` is supported
    on sector ``n`` and the target is
    ``(1-p)^{alpha(E)/2} (1-p)^n / n! * I_n(f_n)`` evaluated on the truncated basis.
    """
    p = ts.p
    f = ts.embed(n, f_sector)
    lhs = apply_unitary(ts, UnitaryParams.meixner_point(p), f, frame=False)
    expansion = build_I_n(ts, n, f_sector)
    scale = (1.0 - p) ** (ts.space.total_mass / 2.0) * (1.0 - p) ** n / factorial(n)
    rhs = scale * evaluate_expansion(expansion, ts.configs)
    D = _frame(ts)
    return TruncationResidual(float(np.linalg.norm(D * (lhs - rhs))), ts.coverage, ts.n_max)


def check_exponential_transform(ts: TruncatedSpace, xi: complex, z) -> TruncationResidual:
    """Weighted-norm distance between ``U(xi, 0) E_z`` and ``C(xi) E_{z_xi}``."""
    z = test_function(z, ts.m)
    ma = MobiusAction(xi)
    lhs = apply_unitary(ts, UnitaryParams(xi, 0.0), exponential_state(ts, z))
    rhs = multiplier(ma, ts.space, z) * exponential_state(ts, mobius_transform(ma, z))
    D = _frame(ts)
    return TruncationResidual(float(np.linalg.norm(D * (lhs - rhs))), ts.coverage, ts.n_max)


def block_semigroup(ts: TruncatedSpace, c, t: float, generators=None) -> list[np.ndarray]:
    """Per-sector dense ``exp(t L_n)`` for ``n = 0..n_max``."""
    generators = generators if generators is not None else sector_generators(ts, c)
    return [semigroup_matrix(generators[n], t) for n in range(ts.n_max + 1)]


def apply_blocks(ts: TruncatedSpace, blocks, f) -> np.ndarray:
    """Apply per-sector matrices ``blocks[n]`` to the matching slices of ``f``."""
    out = np.empty_like(f)
    for n, P in enumerate(blocks):
        sl = ts.sector_slice(n)
        out[sl] = P @ f[sl]
    return out


def check_symmetry(
    ts: TruncatedSpace,
    c,
    params: UnitaryParams,
    t: float,
    n_probe: int = 3,
    n_probes: int = 8,
    seed: int = 0,
    blocks=None,
) -> TruncationResidual:
    """Largest weighted norm of ``(P_t U - U P_t) g`` over random low-sector probes.

    Probes are complex Gaussian vectors on sectors ``0..n_probe``, normalized
    in the weighted norm.  Pass precomputed ``blocks`` from
    :func:`block_semigroup` to reuse sector exponentials.
    """
    if t < 0:
        raise ValueError("time must be non-negative")
    if n_probe > ts.n_max:
        raise ValueError("probe sectors exceed the truncation")
    D = _frame(ts)
    blocks = blocks if blocks is not None else block_semigroup(ts, c, t)
    rng = np.random.default_rng(seed)
    cut = ts.below(n_probe)
    worst = 0.0
    Us = frame_unitary(ts, params) if ts.dim <= DENSE_LIMIT else None
    for _ in range(n_probes):
        g = np.zeros(ts.dim, dtype=complex)
        g[cut] = rng.normal(size=cut.stop) + 1j * rng.normal(size=cut.stop)
        g /= np.linalg.norm(D * g)
        if Us is not None:
            Ug = (Us @ (D * g)) / D
            UPg = (Us @ (D * apply_blocks(ts, blocks, g))) / D
        else:
            Ug = apply_unitary(ts, params, g)
            UPg = apply_unitary(ts, params, apply_blocks(ts, blocks, g))
        PUg = apply_blocks(ts, blocks, Ug)
        worst = max(worst, float(np.linalg.norm(D * (PUg - UPg))))
    return TruncationResidual(worst, ts.coverage, ts.n_max)


def check_intertwining(ts: TruncatedSpace, c, n: int, f_sector, t: float, generators=None) -> float:
    """``max |P_t I_n(f_n) - I_n(p_t f_n)|`` over all sectors of ``ts``.

    Both sides are evaluated sector by sector, so no truncation enters.
    """
    if t < 0:
        raise ValueError("time must be non-negative")
    generators = generators if generators is not None else sector_generators(ts, c)
    f_sector = np.asarray(f_sector)
    evolved = semigroup_matrix(generators[n], t) @ f_sector
    before = build_I_n(ts, n, f_sector)
    after = build_I_n(ts, n, evolved)
    worst = 0.0
    for k in range(ts.n_max + 1):
        configs = ts.sectors[k].configs
        lhs = semigroup_matrix(generators[k], t) @ evaluate_expansion(before, configs)
        rhs = evaluate_expansion(after, configs)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def k_transform(ts: TruncatedSpace, f) -> np.ndarray:
    """``sum_j (sqrt(p) k+(1))^j / j! f``; the series is finite on the truncated space."""
    A = removal_matrix(ts)
    term = np.asarray(f, dtype=complex)
    if term.shape != (ts.dim,):
        raise ValueError(f"expected a vector of length {ts.dim}")
    out = term.copy()
    for j in range(1, ts.n_max + 1):
        term = A @ term / j
        out = out + term
    return out if np.iscomplexobj(f) else np.real(out)
