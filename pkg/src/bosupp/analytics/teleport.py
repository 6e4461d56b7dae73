"""Brute-force teleportation through a damped Bell pair."""

from __future__ import annotations

import numpy as np

from ..fock import PAULI_X, PAULI_Z
from .haar import haar_average_tensor

__all__ = ["teleportation_channel", "simulate_teleportation_fidelity"]

_PAULIS = (np.eye(2, dtype=complex), PAULI_X, PAULI_Z, PAULI_X @ PAULI_Z)


def _bell_basis():
    kets = []
    for px, pz in ((0, 0), (1, 0), (0, 1), (1, 1)):
        # (I ⊗ X^px Z^pz)|Φ+⟩
        phi = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
        op = np.linalg.matrix_power(PAULI_X, px) @ np.linalg.matrix_power(PAULI_Z, pz)
        kets.append(np.kron(np.eye(2), op) @ phi)
    return kets


def teleportation_channel(resource: np.ndarray):
    """Map ``ρ_in -> ρ_out`` of standard teleportation with a two-qubit resource.

    The input qubit and the sender's half are measured in the Bell basis and
    the receiver applies the matching Pauli correction.
    """
    resource = np.asarray(resource, dtype=complex)
    bells = _bell_basis()
    corrections = (_PAULIS[0], _PAULIS[1], _PAULIS[2], _PAULIS[3])

    def channel(rho_in):
        joint = np.kron(rho_in, resource).reshape(4, 2, 4, 2)
        out = np.zeros((2, 2), dtype=complex)
        for bell, corr in zip(bells, corrections):
            bob = np.einsum("i,iajb,j->ab", bell.conj(), joint, bell)
            fix = corr.conj().T
            out += fix @ bob @ fix.conj().T
        return out

    return channel


def simulate_teleportation_fidelity(resource: np.ndarray) -> float:
    """Exact Haar-averaged fidelity of :func:`teleportation_channel`."""
    channel = teleportation_channel(resource)
    fid = np.empty((2, 2, 2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            e = np.zeros((2, 2), dtype=complex)
            e[i, j] = 1
            fid[:, :, i, j] = channel(e)
    # ⟨ψ|Λ(ψψ†)|ψ⟩ = Σ ψ*_k ψ_l ψ_i ψ*_j Λ_ij[k,l]
    tensor = np.einsum("klij->likj", fid)
    return float(np.real(haar_average_tensor(tensor, 2)))
