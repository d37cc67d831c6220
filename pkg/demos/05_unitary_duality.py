# # Unitaries from the raising/lowering pair
#
# U(xi, theta) is unitary in the Pascal-weighted inner product. At
# xi = artanh(sqrt p) it sends indicators of n-particle configurations to
# multivariate Meixner polynomials, and it commutes with the inclusion
# semigroup. Everything here is a finite truncation, so the printed residuals
# show how fast the truncation error disappears.

import numpy as np

from sipduality import SiteSpace, TruncatedSpace, UnitaryParams
from sipduality.unitary import (
    MobiusAction,
    apply_theorem_check,
    build_unitary,
    check_exponential_transform,
    check_intertwining,
    check_symmetry,
    k_transform,
    mobius_transform,
    weighted_unitarity_defect,
)

space = SiteSpace(alpha=[1.0, 1.0], p=0.3)

for n_max in (10, 20, 40):
    ts = TruncatedSpace(space, n_max)
    f = np.zeros(len(ts.sectors[2]))
    f[ts.sectors[2].position((1, 1))] = 1.0
    res = apply_theorem_check(ts, 2, f)
    ex = check_exponential_transform(ts, 0.4, 0.3)
    print(f"n_max = {n_max:2d}: coverage {res.coverage:.12f}, pair residual {res.residual:.2e}, exponential state residual {ex.residual:.2e}")

ts = TruncatedSpace(space, 40)
print("unitarity defect:", weighted_unitarity_defect(ts, build_unitary(ts, UnitaryParams(0.3 - 0.2j, 0.7))))

# Exponential states are carried to exponential states along the Moebius
# action of the same element on the unit disk.

print("z = 0.3 moves to", complex(mobius_transform(MobiusAction(0.4), 0.3)))

for t in (0.1, 1.0, 5.0):
    sym = check_symmetry(ts, np.ones((2, 2)), UnitaryParams.meixner_point(space.p), t)
    print(f"commutator with the semigroup at t = {t}: {sym.residual:.2e}")

# The semigroup maps I_n(f) to I_n of the n-particle evolution of f, exactly.

small = TruncatedSpace(space, 6)
f = np.array([0.5, -1.0, 0.25])
print("intertwining residual:", check_intertwining(small, np.ones((2, 2)), 2, f, 1.0))
print("K-transform of the vacuum:", k_transform(small, small.indicator((0, 0)))[:6])
