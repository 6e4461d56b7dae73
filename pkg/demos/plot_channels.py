"""
Bosonic and ancilla noise channels
==================================

Every bosonic channel here is loss followed by amplification, fixed by a loss
rate ``mu`` and a gain ``G``. Qubit ancillas get amplitude, phase or composite
damping.
"""

import numpy as np

from bosupp.channels import apply, gdn_channel, loss_channel, qubit_damping, thermal_channel
from bosupp.codes import cat_code
from bosupp.fock import FockSpace, State

space = FockSpace(40, 8)
code = cat_code(2, 2.0, space)
ket = (code.zero + code.one) / np.sqrt(2)
plus = State.from_ket(ket)

for ch in (loss_channel(0.05, space), thermal_channel(0.05, 0.5, space), gdn_channel(0.03, space)):
    out = apply(ch, plus)
    fid = np.real(ket.conj() @ out.op @ ket)
    print(f"{ch.name:8s} mu={ch.params['mu']:.4f} G={ch.params['G']:.4f}  kraus={len(ch.kraus):3d}  F={fid:.5f}")

###############################################################################
# Qubit damping acts on the ancilla. The composite kind is amplitude damping
# followed by phase damping at the same strength.

rho = np.full((2, 2), 0.5, dtype=complex)
for kind in ("amplitude", "phase", "composite"):
    ch = qubit_damping(0.2, kind)
    print(f"{kind:9s}", np.round(apply(ch, State(rho)).op, 4).tolist())
