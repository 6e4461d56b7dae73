"""Truncated Fock-space linear algebra.

Operators are plain complex ``numpy`` arrays. A :class:`FockSpace` fixes the
cutoff (levels ``0 .. dim-1``) and a guard band of top levels that is kept as
truncation headroom: probability weight found there is reported as leakage.

Joint spaces always put the Fock factor first, followed by any spectator
system and then the ancillas in the order they are applied.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import TruncationError

__all__ = [
    "FockSpace",
    "CompositeSpace",
    "State",
    "ladder",
    "number_operator",
    "number_function",
    "parity",
    "displacement",
    "squeeze",
    "db_to_r",
    "tensor",
    "partial_trace",
    "fidelity",
    "trace_distance",
    "ordered_power_identity",
    "fock_ket",
    "coherent_ket",
    "guard_weight",
]

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class FockSpace:
    """Fock levels ``0 .. dim-1`` with ``guard`` top levels reserved as headroom."""

    dim: int = 40
    guard: int = 8

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise ValueError(f"dim must be an integer >= 2, got {self.dim}")
        if int(self.guard) != self.guard or not 0 <= self.guard < self.dim:
            raise ValueError(f"guard must satisfy 0 <= guard < dim, got {self.guard}")

    @property
    def n_max(self) -> int:
        return self.dim - 1

    @property
    def n_valid(self) -> int:
        """Highest level outside the guard band."""
        return self.dim - 1 - self.guard

    @property
    def levels(self) -> np.ndarray:
        return np.arange(self.dim)


@dataclass(frozen=True)
class CompositeSpace:
    """Fock mode joined with finite ancillas (dimension 2 or 3 each)."""

    fock: FockSpace
    ancillas: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "ancillas", tuple(int(d) for d in self.ancillas))
        for d in self.ancillas:
            if d not in (2, 3):
                raise ValueError(f"ancilla dimension must be 2 or 3, got {d}")

    @property
    def dims(self) -> tuple:
        return (self.fock.dim, *self.ancillas)

    @property
    def size(self) -> int:
        return int(np.prod(self.dims))


@dataclass(frozen=True)
class State:
    """Density matrix of a (possibly unnormalized) branch.

    ``dims`` lists the tensor factors, Fock factor first. The weight is the
    trace, so a heralded branch carries its own success probability.
    """

    op: np.ndarray
    dims: tuple = field(default=None)

    def __post_init__(self):
        op = np.array(self.op, dtype=complex)
        if op.ndim != 2 or op.shape[0] != op.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {op.shape}")
        if not np.all(np.isfinite(op)):
            raise ValueError("density matrix has non-finite entries")
        dims = (op.shape[0],) if self.dims is None else tuple(int(d) for d in self.dims)
        if int(np.prod(dims)) != op.shape[0]:
            raise ValueError(f"dims {dims} do not match matrix size {op.shape[0]}")
        op.flags.writeable = False
        object.__setattr__(self, "op", op)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def from_ket(cls, ket, dims=None) -> "State":
        ket = np.asarray(ket, dtype=complex).ravel()
        return cls(np.outer(ket, ket.conj()), dims)

    @property
    def weight(self) -> float:
        return float(np.real(np.trace(self.op)))

    def normalized(self) -> "State":
        w = self.weight
        if w <= 0:
            raise ValueError("cannot normalize a state with non-positive weight")
        return State(self.op / w, self.dims)

    def validate(self, herm_tol=1e-12, psd_tol=1e-10) -> "State":
        """Check hermiticity, positivity and trace against the weight."""
        w = max(self.weight, 0.0)
        scale = max(w, np.finfo(float).tiny)
        herm = np.max(np.abs(self.op - self.op.conj().T))
        if herm > herm_tol * max(scale, 1.0):
            raise ValueError(f"state is not Hermitian (deviation {herm:.2e})")
        lo = np.linalg.eigvalsh((self.op + self.op.conj().T) / 2)[0]
        if lo < -psd_tol * max(scale, 1.0):
            raise ValueError(f"state is not positive semidefinite (min eigenvalue {lo:.2e})")
        if abs(np.imag(np.trace(self.op))) > 1e-12 * max(scale, 1.0):
            raise ValueError("trace has an imaginary part")
        return self

    def purity(self) -> float:
        w = self.weight
        return float(np.real(np.trace(self.op @ self.op))) / (w * w)


def ladder(space: FockSpace):
    """Annihilation and creation operators; ``a_dag`` maps the top level to zero."""
    a = np.diag(np.sqrt(np.arange(1, space.dim, dtype=float)), 1).astype(complex)
    return a, a.conj().T.copy()


def number_operator(space: FockSpace) -> np.ndarray:
    return np.diag(space.levels.astype(complex))


def number_function(space: FockSpace, f: Callable) -> np.ndarray:
    """Diagonal operator ``F(a†a)`` with entries ``f(n)``."""
    n = space.levels
    try:
        values = np.asarray(f(n), dtype=complex)
        if values.shape != n.shape:
            raise ValueError
    except (TypeError, ValueError):
        values = np.array([f(int(k)) for k in n], dtype=complex)
    if not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        raise ValueError(f"f(n) is not finite at n={bad}")
    return np.diag(values)


def parity(space: FockSpace) -> np.ndarray:
    return number_function(space, lambda n: (-1.0) ** n)


def db_to_r(db: float) -> float:
    """Squeezing parameter from a variance ratio in dB, ``r = ln(10**(dB/20))``."""
    return float(np.log(10.0 ** (db / 20.0)))


def _expm_antihermitian(gen: np.ndarray) -> np.ndarray:
    # gen is anti-Hermitian: gen = -iH with H Hermitian
    w, v = np.linalg.eigh(1j * gen)
    return (v * np.exp(-1j * w)) @ v.conj().T


def _check_guarded_unitarity(op: np.ndarray, space: FockSpace, what: str, tol=1e-6):
    g = space.n_valid + 1
    block = (op.conj().T @ op)[:g, :g]
    deficit = float(np.max(np.abs(block - np.eye(g))))
    if deficit > tol:
        raise TruncationError(
            f"{what} is not unitary on the guarded subspace (deficit {deficit:.2e}); "
            "increase the Fock dimension",
            leakage=deficit,
        )
    return deficit


def displacement(space: FockSpace, beta: complex) -> np.ndarray:
    """``D(β) = exp(β a† − β* a)``.

    The generator is truncated first, so the result is exactly unitary on the
    truncated space; matrix elements near the cutoff are distorted, which the
    leakage checks downstream are there to catch.
    """
    beta = complex(beta)
    if beta == 0:
        return np.eye(space.dim, dtype=complex)
    a, ad = ladder(space)
    op = _expm_antihermitian(beta * ad - np.conj(beta) * a)
    _check_guarded_unitarity(op, space, f"D({beta:.3g})")
    return op


def squeeze(space: FockSpace, r: float, phi: float = 0.0) -> np.ndarray:
    """``S(r, φ) = exp((r/2)(e^{-2iφ} a² − e^{2iφ} a†²))``; φ=0 squeezes x."""
    if r < 0:
        raise ValueError("squeezing parameter r must be non-negative")
    if r == 0:
        return np.eye(space.dim, dtype=complex)
    a, ad = ladder(space)
    gen = 0.5 * r * (np.exp(-2j * phi) * (a @ a) - np.exp(2j * phi) * (ad @ ad))
    op = _expm_antihermitian(gen)
    _check_guarded_unitarity(op, space, f"S({r:.3g})")
    return op


def tensor(ops: Sequence[np.ndarray]) -> np.ndarray:
    """Kronecker product in the fixed factor order."""
    ops = [np.asarray(o) for o in ops]
    if not ops:
        raise ValueError("tensor of an empty list")
    for o in ops:
        if o.ndim == 2 and o.shape[0] != o.shape[1]:
            raise ValueError(f"operator is not square: {o.shape}")
    return reduce(np.kron, ops)


def partial_trace(state: State, keep: Iterable[int]) -> State:
    """Reduced state on the factors listed in ``keep`` (original order kept)."""
    dims = state.dims
    keep = sorted(set(int(k) for k in keep))
    if not keep or any(k < 0 or k >= len(dims) for k in keep):
        raise ValueError(f"invalid factor selection {keep} for dims {dims}")
    n = len(dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n])
    col = [letters[n + i] if i in keep else row[i] for i in range(n)]
    out = [row[i] for i in keep] + [col[i] for i in keep]
    sub = "".join(row) + "".join(col) + "->" + "".join(out)
    t = np.einsum(sub, state.op.reshape(dims + dims))
    kd = tuple(dims[i] for i in keep)
    size = int(np.prod(kd))
    return State(t.reshape(size, size), kd)


def fidelity(reference, rho) -> float:
    """``⟨ψ|ρ|ψ⟩`` for a pure normalized reference (ket or rank-one State)."""
    if isinstance(reference, State):
        if abs(reference.weight - 1) > 1e-10 or reference.purity() < 1 - 1e-10:
            raise ValueError("reference state must be pure and normalized")
        w, v = np.linalg.eigh(reference.op)
        psi = v[:, -1]
    else:
        psi = np.asarray(reference, dtype=complex).ravel()
        if abs(np.vdot(psi, psi) - 1) > 1e-10:
            raise ValueError("reference ket must be normalized")
    op = rho.op if isinstance(rho, State) else np.asarray(rho)
    return float(np.real(np.vdot(psi, op @ psi)))


def trace_distance(rho, sigma) -> float:
    a = rho.op if isinstance(rho, State) else np.asarray(rho)
    b = sigma.op if isinstance(sigma, State) else np.asarray(sigma)
    d = a - b
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh((d + d.conj().T) / 2))))


def ordered_power_identity(lam: float, ordering: str, space: FockSpace) -> np.ndarray:
    """Closed forms of the ordered exponentials of the number operator.

    ``:exp(λ a†a):`` (normal) equals ``(1+λ)^{a†a}``; the antinormal
    ``⋮exp(λ a†a)⋮`` equals ``(1−λ)^{−a†a−1}`` and needs ``|λ| < 1``.
    """
    if ordering == "normal":
        return number_function(space, lambda n: (1.0 + lam) ** n)
    if ordering == "antinormal":
        if abs(lam) >= 1:
            raise ValueError("antinormal form requires |lambda| < 1")
        return number_function(space, lambda n: (1.0 - lam) ** (-n - 1.0))
    raise ValueError(f"ordering must be 'normal' or 'antinormal', got {ordering!r}")


def fock_ket(space: FockSpace, n: int) -> np.ndarray:
    ket = np.zeros(space.dim, dtype=complex)
    ket[n] = 1.0
    return ket


def coherent_ket(space: FockSpace, alpha: complex) -> np.ndarray:
    """Analytic coherent-state amplitudes on the truncated basis (not renormalized)."""
    from scipy.special import gammaln

    n = space.levels
    alpha = complex(alpha)
    if alpha == 0:
        return fock_ket(space, 0)
    logmag = n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1) - abs(alpha) ** 2 / 2
    return np.exp(logmag) * np.exp(1j * n * np.angle(alpha))


def guard_weight(rho: np.ndarray, space: FockSpace, dims=None) -> float:
    """Population of the guard band of the Fock factor (first factor of ``dims``)."""
    rho = np.asarray(rho)
    dims = (rho.shape[0],) if dims is None else tuple(dims)
    rest = rho.shape[0] // dims[0]
    diag = np.real(np.diagonal(rho)).reshape(dims[0], rest)
    return float(np.sum(np.abs(diag[space.n_valid + 1 :])))
