# # Raising and lowering operators on a truncated configuration space
#
# Configurations of particles on a few sites are stored as rows of an integer
# array, grouped by total particle number. Functions on configurations are
# plain vectors, and the raising/lowering operators are sparse matrices acting
# on them.

import numpy as np

from sipduality import SiteSpace, TruncatedSpace, build_k_minus, build_k_plus, build_k_zero, inner_product
from sipduality.operators import commutator

space = SiteSpace(alpha=[1.0, 0.5, 2.0], p=0.3)
ts = TruncatedSpace(space, n_max=6)
print(ts)
print("first configurations:\n", ts.configs[:7])

# The Pascal weights of each sector add up to a negative binomial probability
# of the total count, so the coverage of the truncation approaches one.

print("coverage at n_max = 6:", ts.coverage)
print("coverage at n_max = 30:", TruncatedSpace(space, 30).coverage)

# Raising by a test function adds a particle, lowering removes one.

phi = np.array([0.7 - 0.2j, 1.1 + 0.4j, -0.3j])
theta = np.array([0.2, -1.0 + 0.5j, 0.9])
kp, km, k0 = build_k_plus(ts, phi), build_k_minus(ts, phi), build_k_zero(ts, theta)
print("shifts:", kp.shift, km.shift, k0.shift)

# The commutation relations hold exactly away from the top sector, where the
# truncation cuts off the particle that a raising operator would add.

low = ts.n_max - 1
lhs = commutator(build_k_minus(ts, phi), build_k_plus(ts, theta))
rhs = 2 * build_k_zero(ts, np.conj(phi) * theta)
print("[k-(phi), k+(theta)] - 2 k0(conj(phi) theta), below the top:", np.abs((lhs - rhs).block(ts, low)).max())
lhs = commutator(build_k_zero(ts, theta), build_k_minus(ts, phi))
print("[k0(theta), k-(phi)] + k-(phi conj(theta)):", np.abs((lhs + build_k_minus(ts, phi * np.conj(theta))).block(ts, low)).max())

# In the Pascal-weighted inner product the lowering operator is the adjoint of
# the raising operator.

rng = np.random.default_rng(0)
f = rng.normal(size=ts.dim) + 1j * rng.normal(size=ts.dim)
g = rng.normal(size=ts.dim) + 1j * rng.normal(size=ts.dim)
print("<f, k+ g> =", inner_product(ts, f, kp @ g))
print("<k- f, g> =", inner_product(ts, km @ f, g))
