"""
Truncated Fock space and bosonic codes
======================================

A ``FockSpace`` keeps ``dim`` levels and marks the top ``guard`` of them as a
band that physical states should not touch.
"""

import numpy as np

from bosupp.codes import binomial_code, cat_code, gkp_code, parity_class, squeezed_cat
from bosupp.fock import FockSpace, displacement, guard_weight, squeeze, db_to_r, fock_ket

space = FockSpace(40, 8)
print(space, "valid levels:", space.n_valid)

# Displacement and squeezing are exact unitaries on the truncated space.
D = displacement(space, 1.0 + 0.5j)
S = squeeze(space, db_to_r(6.0))
vac = fock_ket(space, 0)
print("<0|D|0> =", np.round(vac @ D @ vac, 6))
print("<0|S|0> at 6 dB =", np.round((vac @ S @ vac).real, 4))

###############################################################################
# Codes carry their logical kets, the normalized codespace identity and the
# photon-number moments used by the closed forms.

codes = [
    cat_code(2, 2.0, space),
    binomial_code(2, 4, space),
    squeezed_cat(2, 2.0, 6.0, FockSpace(60, 8)),
    gkp_code(0.3, FockSpace(120, 8)),
]
for code in codes:
    m = code.moments
    worst = guard_weight(code.identity, code.space)
    print(f"{code.name:16s} <n>={m.n_mean:7.3f}  <n^2>={m.n2:8.3f}  parity={parity_class(code).kind:10s} guard={worst:.1e}")
