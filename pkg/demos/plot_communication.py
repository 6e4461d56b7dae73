"""
Remote suppression and teleportation
====================================

Two parties share a noisy Bell pair and run the filter across the channel.
Teleporting a bare qubit through the same pair is the baseline.
"""

import numpy as np

from bosupp.analytics.closed_form import comm_psucc_closed, teleportation_fidelity
from bosupp.channels import loss_channel
from bosupp.codes import binomial_code
from bosupp.fock import FockSpace
from bosupp.protocols import comm_protocol, logical_response

space = FockSpace(40, 8)
code = binomial_code(2, 4, space)
ch = loss_channel(0.05, space)

print("  p   F(00)     F(00,11)  F_teleport  p(00,11) closed")
for p in (0.0, 0.1, 0.2, 0.3):
    only = logical_response(code, lambda op: comm_protocol(op, ch, p, "00", space, check=False))
    both = logical_response(code, lambda op: comm_protocol(op, ch, p, "00_11", space, check=False))
    closed = comm_psucc_closed(code.identity, 0.05, 1.0, p, "00_11")
    print(f"{p:4.1f}  {only.mean_fidelity():.6f}  {both.mean_fidelity():.6f}  {teleportation_fidelity(p):.6f}    {closed:.6f}")
