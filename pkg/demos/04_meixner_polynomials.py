# # Meixner polynomials and their multivariate lift
#
# Low degrees use the terminating hypergeometric sum, higher degrees the
# three-term recurrence of the monic family.

import numpy as np

from sipduality import MeixnerParams, SiteSpace, TruncatedSpace
from sipduality.meixner import (
    build_I_n,
    evaluate_expansion,
    generating_function,
    generating_partial_sum,
    meixner_M,
    meixner_monic,
)

params = MeixnerParams(a=1.5, p=0.3)
x = np.arange(6.0)
print("M_2(x):", meixner_M(2, x, params))
print("monic degree 2:", meixner_monic(2, x, params))

# Self-duality in degree and argument is exact at small arguments.

print("M_4(7) == M_7(4):", meixner_M(4, 7, params) == meixner_M(7, 4, params))

value, terms = generating_partial_sum(0.4, 3, params)
print(f"generating function: partial sum {value:.15f} after {terms} terms, closed form {generating_function(0.4, 3, params):.15f}")

# On several sites, a symmetric function f of n particle positions defines a
# polynomial I_n(f) in the occupations. For an indicator of a multiset it
# factorizes into monic Meixner polynomials, one per site.

ts = TruncatedSpace(SiteSpace([1.0, 0.6], 0.3), 8)
f = np.zeros(len(ts.sectors[3]))
f[ts.sectors[3].position((2, 1))] = 1.0 / 3
values = evaluate_expansion(build_I_n(ts, 3, f), ts.configs)
product = meixner_monic(2, ts.configs[:, 0], MeixnerParams(1.0, 0.3)) * meixner_monic(1, ts.configs[:, 1], MeixnerParams(0.6, 0.3))
print("largest difference from the product form:", np.abs(values - product).max())
