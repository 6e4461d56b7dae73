"""Closed-form success probabilities, fidelities and perturbative states.

Formulas take a density matrix on the truncated Fock space (or the codespace
identity ``C``, which gives Haar averages because every expression here is
linear in the input) and the amplifier-after-loss parameters ``(mu, G)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np
from scipy.special import gammaln

from ..channels import CvNoiseParams
from ..codes import MomentSet
from ..fock import State

__all__ = [
    "psucc_closed",
    "psucc_k1",
    "psucc_asymptotic",
    "legendre_upward",
    "DeltaP",
    "delta_p_bound",
    "avg_fidelity_suppressed",
    "avg_fidelity_unsuppressed",
    "PerturbativeTables",
    "perturbative_tables",
    "perturbative_state",
    "teleportation_fidelity",
    "comm_psucc_closed",
    "qutrit_dq",
    "qutrit_psucc_closed",
]


def _diag(rho):
    op = rho.op if isinstance(rho, State) else np.asarray(rho)
    return np.real(np.diagonal(op)), op


def psucc_closed(rho, mu: float, G: float, K: int) -> float:
    """Heralded success probability of the ``K``-ancilla filter with ideal ancillas.

    Sums the roots-of-unity series ``ω = exp(iπ/2^{K−1})``; the imaginary
    residue is checked and dropped.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    p = CvNoiseParams(mu, G)
    diag, _ = _diag(rho)
    n = np.arange(diag.size)
    x, y, z = p.x, p.y, p.z
    m = 2**K
    omega = np.exp(2j * np.pi * np.arange(m) / m)
    w = 1 - z / omega
    base = 1 + y * omega + (z / omega) / w
    terms = np.power.outer(base, n) / w[:, None]
    total = (1 - z) / m * np.sum(terms, axis=0)
    val = np.sum(diag * x**n * total)
    if abs(val.imag) > 1e-10:
        raise ArithmeticError(f"success probability has imaginary residue {val.imag:.2e}")
    return float(val.real)


def psucc_k1(rho, mu: float, G: float) -> float:
    """Single-ancilla form ``½ + tr{ρ q^{a†a}}/(2(2G−1))`` with ``q = (1−2μG)/(2G−1)``."""
    CvNoiseParams(mu, G)
    diag, _ = _diag(rho)
    n = np.arange(diag.size)
    q = (1 - 2 * mu * G) / (2 * G - 1)
    return float(0.5 + np.sum(diag * q**n) / (2 * (2 * G - 1)))


def legendre_upward(nmax: int, x: float) -> np.ndarray:
    """``P_0(x) .. P_{nmax}(x)`` by the three-term recurrence."""
    out = np.empty(nmax + 1)
    out[0] = 1.0
    if nmax >= 1:
        out[1] = x
    for k in range(1, nmax):
        out[k + 1] = ((2 * k + 1) * x * out[k] - k * out[k - 1]) / (k + 1)
    return out


def psucc_asymptotic(rho, mu: float, G: float) -> float:
    """Infinite-ancilla limit ``(1/G) Σ ρ_nn (1/G − μ)^n P_n((1−μ(2−G))/(1−μG))``."""
    if 1 - mu * G <= 0:
        raise ValueError("asymptotic form requires mu*G < 1")
    CvNoiseParams(mu, G)
    diag, _ = _diag(rho)
    n = np.arange(diag.size)
    arg = (1 - mu * (2 - G)) / (1 - mu * G)
    return float(np.sum(diag * (1 / G - mu) ** n * legendre_upward(diag.size - 1, arg)) / G)


@dataclass(frozen=True)
class DeltaP:
    bound: float
    exact: float


def delta_p_bound(rho, mu: float, G: float, K: int) -> DeltaP:
    """Leading-order estimate of ``p(K) − p(∞)`` next to the exact gap.

    Pure loss keeps only the ``y^M :n^M:`` term (``M = 2^K``); with gain the
    antinormal ``z^M ⋮n^M⋮`` term is added and both are divided by ``G``.
    """
    p = CvNoiseParams(mu, G)
    diag, _ = _diag(rho)
    n = np.arange(diag.size)
    m = 2**K
    normal = np.where(n >= m, np.exp(gammaln(n + 1) - gammaln(np.maximum(n - m, 0) + 1)), 0.0)
    weight = diag * p.x**n
    if G == 1:
        bound = p.y**m / factorial(m) * np.sum(weight * normal)
    else:
        anti = np.exp(gammaln(n + m + 1) - gammaln(n + 1))
        bound = np.sum(weight / G * (p.y**m * normal + p.z**m * anti)) / factorial(m)
    exact = psucc_closed(rho, mu, G, K) - psucc_asymptotic(rho, mu, G)
    return DeltaP(float(bound), float(exact))


def avg_fidelity_suppressed(m: MomentSet, eta: float, nbar: float) -> float:
    """Second-order Haar-averaged heralded fidelity under thermal noise."""
    nb = nbar
    coeff = (
        nb**2
        + 3 * (nb + 0.5) ** 2 * m.n2
        + (nb**2 - nb - 0.5) * m.n_mean
        - (1 / 6 + 4 / 3 * (nb**2 + nb)) * m.g_n
        - (1 / 3 + 2 / 3 * (nb**2 + nb)) * m.g_a2
    )
    return 1 - eta**2 * coeff


def avg_fidelity_unsuppressed(m: MomentSet, eta: float, nbar: float) -> float:
    """First-order Haar-averaged fidelity of the bare thermal channel."""
    coeff = (
        nbar
        + (1 + 2 * nbar) * m.n_mean
        - 2 * nbar / 3 * (m.c_adag_c_a + m.abs_a_sq)
        - 2 * (1 + nbar) / 3 * (m.c_a_c_adag + m.abs_a_sq)
    )
    return 1 - eta * coeff


@dataclass(frozen=True, eq=False)
class PerturbativeTables:
    """Second-order coefficients in ``z^j μ^k`` of the filtered state (``P``),
    its trace (``C``), the inverse trace (``Q``) and the normalized state (``R``)."""

    P: dict
    C: dict
    Q: dict
    R: dict


_ORDERS = ((0, 0), (1, 0), (0, 1), (1, 1), (2, 0), (0, 2))


def perturbative_tables(rho) -> PerturbativeTables:
    """Coefficient tables for the single-ancilla filter with an ideal ancilla.

    Expanding ``(1−z) x^{a†a/2} ρ x^{a†a/2}`` with
    ``x^{a†a/2} ≈ 1 − (μ+z)T₁ + μz T₂₁ + (μ²+z²) T₂₂`` and adding the
    two-jump branches ``μz a†aρa†a``, ``z²/2 a†²ρa²`` and ``μ²/2 a²ρa†²``.
    """
    op = rho.op if isinstance(rho, State) else np.asarray(rho, dtype=complex)
    d = op.shape[0]
    n = np.arange(d, dtype=float)
    t1 = np.diag(n / 2)
    t21 = np.diag(n**2 / 4)
    t22 = np.diag(n * (n - 2) / 8)
    num = np.diag(n)
    a = np.diag(np.sqrt(n[1:]), 1)
    a2 = a @ a

    def ac(x, y):
        return x @ y + y @ x

    sandwich = t1 @ op @ t1
    P = {
        (0, 0): op,
        (1, 0): -(op + ac(t1, op)),
        (0, 1): -ac(t1, op),
        (1, 1): ac(t1, op) + ac(t21, op) + 2 * sandwich + num @ op @ num,
        (2, 0): ac(t1, op) + ac(t22, op) + sandwich + 0.5 * a2.T @ op @ a2,
        (0, 2): ac(t22, op) + sandwich + 0.5 * a2 @ op @ a2.T,
    }
    C = {key: complex(np.trace(val)).real for key, val in P.items()}
    c00 = C[0, 0]
    Q = {
        (0, 0): 1 / c00,
        (1, 0): -C[1, 0] / c00**2,
        (0, 1): -C[0, 1] / c00**2,
        (1, 1): (2 * C[0, 1] * C[1, 0] - c00 * C[1, 1]) / c00**3,
        (2, 0): (C[1, 0] ** 2 - c00 * C[2, 0]) / c00**3,
        (0, 2): (C[0, 1] ** 2 - c00 * C[0, 2]) / c00**3,
    }
    R = {}
    for j, k in _ORDERS:
        R[j, k] = sum(
            P[a_, b_] * Q[j - a_, k - b_]
            for a_, b_ in _ORDERS
            if (j - a_, k - b_) in Q
        )
    return PerturbativeTables(P, C, Q, R)


def perturbative_state(rho, mu: float, z: float) -> State:
    """Second-order normalized heralded state ``Σ R_jk z^j μ^k``."""
    tables = perturbative_tables(rho)
    op = sum(tables.R[j, k] * z**j * mu**k for j, k in _ORDERS)
    dims = rho.dims if isinstance(rho, State) else None
    return State(op, dims)


def teleportation_fidelity(p: float) -> float:
    """Average fidelity of teleportation through the damped Bell pair."""
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    return 1 - p + 2 * p**2 / 3


def comm_psucc_closed(C, mu: float, G: float, p: float, herald: str = "00_11") -> float:
    """Success probability of the two-node filter for heralds ``00``, ``11`` or both."""
    CvNoiseParams(mu, G)
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    diag, _ = _diag(C)
    n = np.arange(diag.size)
    q = (1 - 2 * mu * G) / (2 * G - 1)
    tq = np.sum(diag * q**n)
    if herald in ("00_11", "00|11"):
        return float(0.5 + (1 - 2 * p * (1 - p)) / (2 * (2 * G - 1)) * tq)
    if herald == "00":
        par = np.sin(np.pi * n / 2) ** 2
    elif herald == "11":
        par = np.cos(np.pi * n / 2) ** 2
    else:
        raise ValueError(f"unknown herald {herald!r}")
    t_par = np.sum(diag * par)
    t_par_q = np.sum(diag * par * q**n)
    g = 2 * G - 1
    return float(0.25 * (1 + p + (1 - p + 2 * p**2) / g * tq - 2 * p * (t_par + t_par_q / g)))


def qutrit_dq(p: float, parity: int) -> np.ndarray:
    """Ancilla factor multiplying a jump pair with ``(−1)^{l−k} = parity``."""
    s = parity * np.sqrt(1 - p)
    return 0.5 * np.array(
        [[1 - p / 2 + s, p / 2, 0], [p / 2, 1 - p / 2 - s, 0], [0, 0, p]], dtype=complex
    )


def qutrit_psucc_closed(rho, mu: float, G: float, p: float, j: int, space) -> float:
    """Herald probability of qutrit outcome ``j`` from the filtered-jump traces."""
    from ..protocols.suppression import paired_kraus

    op = rho.op if isinstance(rho, State) else np.asarray(rho)
    even = odd = 0.0
    for l, k, L in paired_kraus(mu, G, space):
        t = float(np.real(np.trace(L @ op @ L.conj().T)))
        if (l - k) % 2:
            odd += t
        else:
            even += t
    if j == 2:
        return p / 2 * (even + odd)
    delta = even - odd
    return (1 - p / 2) / 2 * (even + odd) + (-1) ** j * np.sqrt(1 - p) * delta / 2
