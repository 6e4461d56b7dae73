"""
Heralded noise suppression
==========================

One ancilla qubit and two controlled rotations filter out odd numbers of
photon jumps. The output is post-selected on the ancilla returning to its
initial state.
"""

import numpy as np

from bosupp.analytics.haar import LogicalResponse
from bosupp.channels import apply, loss_channel
from bosupp.codes import cat_code
from bosupp.fock import FockSpace, State
from bosupp.protocols import ProtocolSpec, logical_response, suppress_analytic, suppress_cf

space = FockSpace(40, 8)
code = cat_code(2, 2.0, space)

print(" eta    F_bare    F_supp    p_succ")
for eta in (0.005, 0.01, 0.02, 0.05):
    ch = loss_channel(eta, space)
    bare = LogicalResponse.from_runner(code, lambda op: apply(ch, State(op), check_leakage=False).op)
    supp = logical_response(code, lambda op: suppress_cf(op, ch, None, ProtocolSpec(), space, check=False))
    print(f"{eta:5.3f}  {bare.mean_unnormalized_fidelity():.6f}  {supp.mean_fidelity():.6f}  {supp.mean_success():.4f}")

###############################################################################
# With K ancillas at angles pi/2, pi/4, ... the filter rejects every jump
# count that is not a multiple of 2^K. The paired-Kraus engine gives the
# same output as the full circuit and is much faster.

ch = loss_channel(0.1, space)
rho = State.from_ket((code.zero + code.one) / np.sqrt(2))
for K in (1, 2, 3):
    joint = suppress_cf(rho, ch, spec=ProtocolSpec("cf_multi", K=K), space=space)
    fast = suppress_analytic(rho, 0.1, 1.0, K, space)
    print(f"K={K}: p_succ={joint.p_succ:.6f}  |joint - analytic|={abs(joint.p_succ - fast.p_succ):.1e}")
