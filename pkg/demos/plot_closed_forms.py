"""
Closed-form success probability and fidelity
============================================

The heralded success probability has an exact sum over roots of unity, a
large-K limit, and a computable gap between the two. The average fidelity has
a perturbative expansion that starts at second order in the noise.
"""

from bosupp.analytics.closed_form import (
    avg_fidelity_suppressed,
    avg_fidelity_unsuppressed,
    delta_p_bound,
    psucc_asymptotic,
    psucc_closed,
)
from bosupp.channels import CvNoiseParams
from bosupp.codes import binomial_code, cat_code
from bosupp.fock import FockSpace

space = FockSpace(40, 8)
p = CvNoiseParams.thermal(0.05, 0.5)
for code in (cat_code(2, 2.0, space), binomial_code(2, 4, space)):
    rho = code.identity
    row = [psucc_closed(rho, p.mu, p.G, K) for K in (1, 2, 3)]
    gap = delta_p_bound(rho, p.mu, p.G, 2)
    print(code.name, "p(K=1..3) =", [round(x, 6) for x in row], "p(inf) =", round(psucc_asymptotic(rho, p.mu, p.G), 6))
    print("   K=2 gap exact", f"{gap.exact:.2e}", "leading-order", f"{gap.bound:.2e}")

###############################################################################
# Binomial codes have finite support, so four ancillas already reach the
# large-K limit under pure loss.

rho = binomial_code(2, 4, space).identity
print("bin(2,4) K=4 gap:", psucc_closed(rho, 0.1, 1.0, 4) - psucc_asymptotic(rho, 0.1, 1.0))

for eta in (0.01, 0.05):
    m = cat_code(2, 2.0, space).moments
    print(f"eta={eta}: F_supp~{avg_fidelity_suppressed(m, eta, 0.5):.6f}  F_bare~{avg_fidelity_unsuppressed(m, eta, 0.5):.6f}")
