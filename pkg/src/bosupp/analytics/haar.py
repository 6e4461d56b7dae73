"""Averages over Haar-random logical qubit states.

Polynomials of degree ``t <= 3`` in the logical density matrix are averaged
exactly through the symmetric-subspace moments. The normalized heralded
fidelity is a ratio of such polynomials, so it is averaged with a product
Gauss-Legendre rule over the Bloch sphere instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from itertools import permutations
from math import prod

import numpy as np

__all__ = [
    "haar_moment_trace",
    "haar_average_tensor",
    "bloch_quadrature",
    "LogicalResponse",
]


def _cycles(perm):
    seen, out = set(), []
    for start in range(len(perm)):
        if start in seen:
            continue
        cyc, i = [], start
        while i not in seen:
            seen.add(i)
            cyc.append(i)
            i = perm[i]
        out.append(cyc)
    return out


def haar_moment_trace(t: int, ms) -> complex:
    """``E[Π_j ⟨ψ|M_j|ψ⟩]`` over Haar-random ``ψ`` (equivalently ``E[tr(ρM₁ρM₂…)]``)."""
    if t not in (1, 2, 3):
        raise ValueError(f"only moments t = 1, 2, 3 are supported, got {t}")
    ms = [np.asarray(m, dtype=complex) for m in ms]
    if len(ms) != t:
        raise ValueError(f"expected {t} matrices, got {len(ms)}")
    d = ms[0].shape[0]
    total = 0j
    for perm in permutations(range(t)):
        term = 1 + 0j
        for cyc in _cycles(perm):
            term *= np.trace(reduce(np.matmul, (ms[i] for i in cyc)))
        total += term
    return total / prod(d + k for k in range(t))


def haar_average_tensor(tensor: np.ndarray, t: int) -> complex:
    """Average of ``Σ T[i₁..i_t, j₁..j_t] ψ_{i₁}…ψ_{i_t} ψ*_{j₁}…ψ*_{j_t}``."""
    if t not in (1, 2, 3):
        raise ValueError(f"only moments t = 1, 2, 3 are supported, got {t}")
    tensor = np.asarray(tensor)
    d = tensor.shape[0]
    total = 0j
    for perm in permutations(range(t)):
        # contract i_k with j_perm(k)
        letters = "abcdef"[:t]
        sub = letters + "".join(letters[perm.index(k)] for k in range(t))
        total += np.einsum(f"{sub}->", tensor)
    return total / prod(d + k for k in range(t))


def bloch_quadrature(n_theta: int = 32):
    """Nodes ``(c0, c1)`` and weights (summing to 1) covering the Bloch sphere."""
    x, w = np.polynomial.legendre.leggauss(n_theta)
    n_phi = 2 * n_theta
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    theta = np.arccos(x)
    c0 = np.repeat(np.cos(theta / 2), n_phi)
    c1 = np.outer(np.sin(theta / 2), np.exp(1j * phi)).ravel()
    weights = np.repeat(w / 2, n_phi) / n_phi
    return c0, c1, weights


@dataclass(frozen=True, eq=False)
class LogicalResponse:
    """Action of a (trace-decreasing) map on the logical operator basis.

    ``fid[k, l, i, j] = ⟨k_L|E(|i_L⟩⟨j_L|)|l_L⟩`` and ``prob[i, j] = tr E(|i_L⟩⟨j_L|)``.
    """

    fid: np.ndarray
    prob: np.ndarray

    @classmethod
    def from_runner(cls, code, runner):
        """Build from ``runner(input_matrix) -> unnormalized output matrix``."""
        v = code.basis
        outs = {}
        for i, j in ((0, 0), (1, 1), (0, 1)):
            op = np.outer(v[:, i], v[:, j].conj())
            outs[i, j] = np.asarray(runner(op))
        outs[1, 0] = outs[0, 1].conj().T
        fid = np.empty((2, 2, 2, 2), dtype=complex)
        prob = np.empty((2, 2), dtype=complex)
        for (i, j), e in outs.items():
            fid[:, :, i, j] = v.conj().T @ e @ v
            prob[i, j] = np.trace(e)
        return cls(fid, prob)

    def probability(self, c0, c1):
        c0, c1 = np.asarray(c0), np.asarray(c1)
        psi = np.stack([c0, c1], axis=-1)
        return np.real(np.einsum("...i,...j,ij->...", psi, psi.conj(), self.prob))

    def numerator(self, c0, c1):
        """``⟨ψ|E(|ψ⟩⟨ψ|)|ψ⟩`` without normalization."""
        psi = np.stack([np.asarray(c0), np.asarray(c1)], axis=-1)
        return np.real(np.einsum("...k,...l,...i,...j,klij->...", psi.conj(), psi, psi, psi.conj(), self.fid))

    def fidelity(self, c0, c1):
        return self.numerator(c0, c1) / self.probability(c0, c1)

    def mean_success(self) -> float:
        """Exact Haar average of the success probability."""
        return float(np.real(haar_average_tensor(self.prob, 1)))

    def mean_unnormalized_fidelity(self) -> float:
        """Exact Haar average of ``⟨ψ|E(ψ)|ψ⟩``."""
        # numerator = Σ ψ_l ψ_i ψ*_k ψ*_j fid[k,l,i,j]
        tensor = np.einsum("klij->likj", self.fid)
        return float(np.real(haar_average_tensor(tensor, 2)))

    def mean_fidelity(self, n_theta: int = 32) -> float:
        """Haar average of the normalized heralded fidelity."""
        c0, c1, w = bloch_quadrature(n_theta)
        return float(np.sum(w * self.fidelity(c0, c1)))
