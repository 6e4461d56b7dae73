"""Joint bosonic-mode and ancilla density-matrix simulation.

The joint register is ``fock ⊗ spectator ⊗ ancilla_1 ⊗ … ⊗ ancilla_K`` with
the Fock index slowest. A circuit is a list of gates before the noise, the
noise itself (bosonic channel on the mode, qudit channels on the ancillas),
a list of gates after the noise, and an ancilla projection.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..channels import LEAKAGE_TOL, KrausChannel, fock_leakage
from ..errors import HeraldStarvationError, TruncationError
from ..fock import FockSpace, State, fidelity

STARVATION_THRESHOLD = 1e-12


@dataclass(frozen=True)
class HeraldedResult:
    """Accepted branch of a heralded protocol.

    ``unnormalized`` carries the success probability as its trace.
    """

    unnormalized: State
    p_succ: float
    normalized: State
    fidelity: float | None = None
    leakage: float = 0.0
    deficit: float = 0.0


@dataclass(frozen=True, eq=False)
class Gate:
    """Either Fock-diagonal blocks ``blocks[n]`` acting on the non-Fock factors,
    or a dense matrix on the whole register. ``ancillas`` lists the ancilla
    indices the gate entangles with the mode (used by per-gate noise)."""

    blocks: np.ndarray | None = None
    dense: np.ndarray | None = None
    ancillas: tuple = ()

    def dagger(self) -> "Gate":
        if self.blocks is not None:
            return Gate(blocks=np.conj(np.swapaxes(self.blocks, 1, 2)), ancillas=self.ancillas)
        return Gate(dense=self.dense.conj().T, ancillas=self.ancillas)


@dataclass(frozen=True, eq=False)
class Register:
    space: FockSpace
    spectator: int = 1
    ancillas: tuple = ()

    @property
    def rest(self) -> int:
        return self.spectator * int(np.prod(self.ancillas, dtype=int))

    @property
    def dims(self) -> tuple:
        return (self.space.dim, self.spectator, *self.ancillas)

    @property
    def size(self) -> int:
        return self.space.dim * self.rest

    def ancilla_factor(self, j) -> int:
        return 2 + j


def _apply_gate(gate: Gate, rho: np.ndarray, reg: Register) -> np.ndarray:
    d, r = reg.space.dim, reg.rest
    if gate.dense is not None:
        return gate.dense @ rho @ gate.dense.conj().T
    t = rho.reshape(d, r, d, r)
    v = gate.blocks
    t = np.einsum("nij,njmk->nimk", v, t)
    t = np.einsum("nimk,mlk->niml", t, v.conj())
    return t.reshape(d * r, d * r)


def _apply_fock_kraus(ops, rho: np.ndarray, reg: Register) -> np.ndarray:
    d, r = reg.space.dim, reg.rest
    t = rho.reshape(d, r * d * r)
    out = np.zeros((d, r, d, r), dtype=complex)
    for k in ops:
        left = (k @ t).reshape(d, r, d, r)
        out += np.moveaxis(np.tensordot(left, k.conj(), axes=([2], [1])), 3, 2)
    return out.reshape(d * r, d * r)


def _apply_factor_kraus(ops, rho: np.ndarray, dims: tuple, factor: int) -> np.ndarray:
    n = len(dims)
    t = rho.reshape(dims + dims)
    out = 0
    for k in ops:
        x = np.moveaxis(np.tensordot(k, t, axes=([1], [factor])), 0, factor)
        x = np.moveaxis(np.tensordot(x, k.conj(), axes=([n + factor], [1])), -1, n + factor)
        out = out + x
    size = int(np.prod(dims))
    return out.reshape(size, size)


def _cv_noise(channel: KrausChannel | None, rho, reg):
    if channel is None:
        return rho
    for stage in channel.stages or (channel,):
        rho = _apply_fock_kraus(stage.operators, rho, reg)
    return rho


def _dv_noise(channels, rho, reg, which=None):
    if channels is None:
        return rho
    if isinstance(channels, KrausChannel):
        channels = [channels] * len(reg.ancillas)
    for j, ch in enumerate(channels):
        if ch is None or (which is not None and j not in which):
            continue
        for stage in ch.stages or (ch,):
            rho = _apply_factor_kraus(stage.operators, rho, reg.dims, reg.ancilla_factor(j))
    return rho


@dataclass(frozen=True, eq=False)
class Circuit:
    """Gates around a single noise window, followed by ancilla heralding.

    ``ancilla_state`` is the initial joint ancilla density matrix.
    ``herald`` is a list of accepted joint-ancilla kets (``None`` keeps the
    full register). ``gate_noise`` is an optional ``(cv, dv)`` pair applied
    after every entangling gate.
    """

    register: Register
    ancilla_state: np.ndarray
    before: tuple = ()
    after: tuple = ()
    herald: tuple | None = None
    gate_noise: tuple | None = None
    extra: dict = field(default_factory=dict)


def _noisy_gate(gate, rho, circ):
    rho = _apply_gate(gate, rho, circ.register)
    if circ.gate_noise is not None and gate.ancillas:
        cv, dv = circ.gate_noise
        rho = _cv_noise(cv, rho, circ.register)
        rho = _dv_noise(dv, rho, circ.register, which=set(gate.ancillas))
    return rho


def run_circuit(
    circ: Circuit,
    rho_in: np.ndarray,
    cv_channel: KrausChannel | None,
    dv_channel=None,
    reference=None,
    check=True,
):
    """Simulate ``circ`` on a mode(+spectator) input ``rho_in``.

    Returns a :class:`HeraldedResult` or, when ``circ.herald`` is ``None``,
    the full joint :class:`State`. Leakage is checked only for Hermitian
    inputs, so operator-basis (dyad) inputs pass through unchecked.
    """
    reg = circ.register
    rho_in = np.asarray(rho_in, dtype=complex)
    base = reg.space.dim * reg.spectator
    if rho_in.shape != (base, base):
        raise ValueError(f"input has shape {rho_in.shape}, expected ({base}, {base})")
    rho = np.kron(rho_in, circ.ancilla_state)
    for gate in circ.before:
        rho = _noisy_gate(gate, rho, circ)
    hermitian = np.allclose(rho_in, rho_in.conj().T, atol=1e-13)
    weight_in = float(np.real(np.trace(rho_in)))
    rho = _cv_noise(cv_channel, rho, reg)
    rho = _dv_noise(dv_channel, rho, reg)
    leak = 0.0
    if hermitian:
        leak = fock_leakage(rho, weight_in, reg.space, (reg.space.dim, reg.rest))
        if check and leak > LEAKAGE_TOL:
            raise TruncationError(f"leakage {leak:.2e} beyond the guarded subspace", leakage=leak)
    for gate in circ.after:
        rho = _noisy_gate(gate, rho, circ)
    deficit = 0.0 if cv_channel is None else cv_channel.deficit

    if circ.herald is None:
        return State(rho, tuple(d for d in reg.dims if d > 1 or d == reg.dims[0]))

    a_size = int(np.prod(reg.ancillas, dtype=int))
    t = rho.reshape(base, a_size, base, a_size)
    out = np.zeros((base, base), dtype=complex)
    for h in circ.herald:
        h = np.asarray(h, dtype=complex)
        out += np.einsum("i,aibj,j->ab", h.conj(), t, h)
    dims = (reg.space.dim,) if reg.spectator == 1 else (reg.space.dim, reg.spectator)
    return _result(out, dims, reference, leak, deficit, hermitian)


def _result(out, dims, reference, leak, deficit, hermitian=True):
    p = float(np.real(np.trace(out)))
    unnorm = State(out, dims)
    if not hermitian:
        return HeraldedResult(unnorm, p, unnorm, None, leak, deficit)
    if p < STARVATION_THRESHOLD:
        raise HeraldStarvationError(f"success probability {p:.2e} below threshold", p_succ=p)
    norm = State(out / p, dims)
    f = None if reference is None else fidelity(reference, norm)
    return HeraldedResult(unnorm, p, norm, f, leak, deficit)
