"""Heralded suppression protocols on the joint mode-ancilla register."""

from .engine import Circuit, Gate, HeraldedResult, Register, run_circuit
from .suppression import (
    PqpFit,
    ProtocolSpec,
    comm_protocol,
    conditional_rotation,
    logical_response,
    noisy_bell_state,
    optimize_pqp,
    paired_kraus,
    parity_shortcut,
    pqp_condrot,
    pqp_unitary,
    protect_hybrid,
    qutrit_protocol,
    qutrit_unitary_blocks,
    rotation_blocks,
    suppress_analytic,
    suppress_cf,
)
