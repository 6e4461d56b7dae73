"""Heralded noise-suppression interferometers.

Every protocol entangles the bosonic mode with one or more ancillas through
photon-number-conditional gates, lets noise act, undoes the gates, and keeps
the branch in which the ancillas return to their initial state.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize
from scipy.special import gammaln

from ..channels import KrausChannel, CvNoiseParams, amp_depth, loss_depth, qubit_damping, qutrit_damping
from ..codes import BosonicCode
from ..errors import BosuppError
from ..fock import PAULI_X, PAULI_Y, PAULI_Z, FockSpace, State, displacement
from ..analytics.haar import LogicalResponse
from .engine import Circuit, Gate, HeraldedResult, Register, _result, run_circuit

__all__ = [
    "ProtocolSpec",
    "conditional_rotation",
    "rotation_blocks",
    "suppress_cf",
    "suppress_analytic",
    "paired_kraus",
    "parity_shortcut",
    "protect_hybrid",
    "pqp_unitary",
    "pqp_condrot",
    "optimize_pqp",
    "PqpFit",
    "comm_protocol",
    "noisy_bell_state",
    "qutrit_protocol",
    "qutrit_unitary_blocks",
    "logical_response",
]

X_AXIS = (1.0, 0.0, 0.0)
VARIANTS = ("cf_single", "cf_multi", "pqp_condrot", "qutrit", "comm", "none")


def _check_axis(axis):
    axis = np.asarray(axis, dtype=float)
    if axis.shape != (3,) or abs(np.linalg.norm(axis) - 1) > 1e-12:
        raise ValueError(f"axis must be a unit 3-vector, got {axis}")
    return axis


def _axis_pauli(axis):
    nx, ny, nz = _check_axis(axis)
    return nx * PAULI_X + ny * PAULI_Y + nz * PAULI_Z


@dataclass(frozen=True)
class ProtocolSpec:
    """Which interferometer to run and how.

    ``local_first[j]`` replaces ancilla ``j``'s first conditional rotation by
    the local rotation ``exp(iθ_j a†a)``; ``flip_init`` starts (and heralds)
    the first ancilla in ``n̂·σ|0⟩``.
    """

    variant: str = "cf_single"
    K: int = 1
    thetas: tuple = ()
    axis: tuple = X_AXIS
    herald: str = "0"
    L: int = 0
    params: tuple = ()
    local_first: tuple = ()
    flip_init: bool = False
    gate_noise: tuple | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown protocol variant {self.variant!r}")
        if self.K < 0:
            raise ValueError("K must be non-negative")
        _check_axis(self.axis)
        thetas = tuple(self.thetas) or tuple(np.pi / 2 ** (j + 1) for j in range(self.K))
        if self.variant in ("cf_single", "cf_multi") and len(thetas) != self.K:
            raise ValueError(f"need {self.K} angles, got {len(thetas)}")
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "axis", tuple(float(a) for a in self.axis))
        local = tuple(self.local_first) or (False,) * self.K
        object.__setattr__(self, "local_first", local)


def rotation_blocks(theta: float, axis, dim: int) -> np.ndarray:
    """Blocks ``V(n) = cos(θn) I + i sin(θn) n̂·σ`` of ``exp(iθ a†a n̂·σ)``."""
    s = _axis_pauli(axis)
    n = np.arange(dim)
    return np.cos(theta * n)[:, None, None] * np.eye(2) + 1j * np.sin(theta * n)[:, None, None] * s


def conditional_rotation(theta: float, axis, space: FockSpace) -> np.ndarray:
    """Joint unitary ``exp(iθ a†a n̂·σ)`` on ``fock ⊗ qubit`` (Fock index slowest)."""
    blocks = rotation_blocks(theta, axis, space.dim)
    d = space.dim
    u = np.zeros((2 * d, 2 * d), dtype=complex)
    for n in range(d):
        u[2 * n : 2 * n + 2, 2 * n : 2 * n + 2] = blocks[n]
    return u


def _embed_blocks(blocks, reg: Register, ancilla: int):
    """Lift per-level blocks on one ancilla to the non-Fock register."""
    d = reg.space.dim
    left = reg.spectator * int(np.prod(reg.ancillas[:ancilla], dtype=int))
    right = int(np.prod(reg.ancillas[ancilla + 1 :], dtype=int))
    eye_l, eye_r = np.eye(left), np.eye(right)
    return np.stack([np.kron(np.kron(eye_l, blocks[n]), eye_r) for n in range(d)])


def _local_rotation_blocks(theta, reg: Register):
    phases = np.exp(1j * theta * np.arange(reg.space.dim))
    return phases[:, None, None] * np.eye(reg.rest)


def _cf_circuit(reg: Register, spec: ProtocolSpec, ancilla_offset=0):
    before = []
    for j, theta in enumerate(spec.thetas):
        a = j + ancilla_offset
        if spec.local_first[j]:
            before.append(Gate(blocks=_local_rotation_blocks(theta, reg)))
        else:
            before.append(Gate(blocks=_embed_blocks(rotation_blocks(theta, spec.axis, reg.space.dim), reg, a), ancillas=(a,)))
    after = []
    for j, theta in reversed(list(enumerate(spec.thetas))):
        a = j + ancilla_offset
        after.append(Gate(blocks=_embed_blocks(rotation_blocks(theta, spec.axis, reg.space.dim), reg, a), ancillas=(a,)).dagger())
    return tuple(before), tuple(after)


def _ancilla_kets(spec: ProtocolSpec):
    zero = np.array([1.0, 0.0], dtype=complex)
    kets = [zero] * spec.K
    if spec.flip_init:
        kets[0] = _axis_pauli(spec.axis) @ zero
    joint = kets[0]
    for k in kets[1:]:
        joint = np.kron(joint, k)
    return joint


def _as_matrix(rho):
    return rho.op if isinstance(rho, State) else np.asarray(rho, dtype=complex)


def _cf_setup(space, spec, spectator=1):
    reg = Register(space, spectator, (2,) * spec.K)
    before, after = _cf_circuit(reg, spec)
    ket = _ancilla_kets(spec)
    return Circuit(reg, np.outer(ket, ket.conj()), before, after, (ket,), spec.gate_noise)


def suppress_cf(
    rho_B,
    cv_channel: KrausChannel | None,
    dv_channel=None,
    spec: ProtocolSpec | None = None,
    space: FockSpace | None = None,
    reference=None,
    check=True,
) -> HeraldedResult:
    """Controlled-rotation filter with ``spec.K`` qubit ancillas heralded on their initial state."""
    spec = spec or ProtocolSpec()
    if spec.K < 1:
        raise ValueError("suppress_cf needs at least one ancilla")
    space = space or (cv_channel.space if cv_channel is not None and cv_channel.space else FockSpace(_as_matrix(rho_B).shape[0], 0))
    circ = _cf_setup(space, spec)
    return run_circuit(circ, _as_matrix(rho_B), cv_channel, dv_channel, reference, check)


def paired_kraus(mu: float, G: float, space: FockSpace, l_max=None, k_max=None):
    """``[(l, k, L_lk)]`` with ``L_lk = c_lk √x^{a†a} a†^k a^l``."""
    p = CvNoiseParams(mu, G)
    l_max = loss_depth(mu, space) if l_max is None else l_max
    k_max = amp_depth(G, space) if k_max is None else k_max
    n = space.levels.astype(float)
    out = []
    for l in range(l_max + 1):
        for k in range(k_max + 1):
            if (mu == 0 and l) or (G == 1 and k):
                continue
            src = n[l:]
            dst = src - l + k
            keep = dst <= space.n_max
            src, dst = src[keep], dst[keep]
            if src.size == 0:
                continue
            # log of c_lk * sqrt(x)^m * sqrt(n!/(n-l)!) * sqrt(m!/(n-l)!)
            log_c2 = -gammaln(k + 1) - gammaln(l + 1) - np.log(G)
            if k:
                log_c2 += k * np.log((G - 1) / (1 - mu))
            if l:
                log_c2 += l * np.log(mu)
            logv = (
                0.5 * log_c2
                + 0.5 * dst * np.log(p.x)
                + 0.5 * (gammaln(src + 1) - gammaln(src - l + 1))
                + 0.5 * (gammaln(dst + 1) - gammaln(src - l + 1))
            )
            op = np.zeros((space.dim, space.dim), dtype=complex)
            op[dst.astype(int), src.astype(int)] = np.exp(logv)
            out.append((l, k, op))
    return out


def suppress_analytic(rho_B, mu: float, G: float, K: int, space: FockSpace | None = None, reference=None) -> HeraldedResult:
    """Filtered output ``Σ_{(l−k) ≡ 0 mod 2^K} L_lk ρ L_lk†`` for ideal ancillas."""
    if K < 1:
        raise ValueError("K must be >= 1")
    rho = _as_matrix(rho_B)
    space = space or FockSpace(rho.shape[0], 0)
    period = 2**K
    out = np.zeros_like(rho)
    for l, k, op in paired_kraus(mu, G, space):
        if (l - k) % period == 0:
            out += op @ rho @ op.conj().T
    hermitian = np.allclose(rho, rho.conj().T, atol=1e-13)
    return _result(out, (space.dim,), reference, 0.0, 0.0, hermitian)


def parity_shortcut(code: BosonicCode, spec: ProtocolSpec | None = None) -> ProtocolSpec:
    """Cheaper equivalent circuit for codes with a shared photon-number parity."""
    spec = spec or ProtocolSpec()
    kind = code.parity.kind
    if kind == "like-even":
        support = np.flatnonzero((np.abs(code.zero) > 1e-10) | (np.abs(code.one) > 1e-10))
        local = tuple(bool(np.all(np.abs(np.sin(t * support)) < 1e-12)) for t in spec.thetas)
        if not local[0]:
            raise BosuppError(f"{code.name}: first rotation is not local on the code support")
        return replace(spec, local_first=local)
    if kind == "like-odd":
        return replace(spec, flip_init=True)
    raise BosuppError(f"{code.name} has parity class {kind!r}; the shortcut needs like parity")


def protect_hybrid(rho_BX, x_dim: int, cv_channel, spec: ProtocolSpec | None = None, space=None, reference=None, check=True):
    """Filter the mode of a mode-plus-system state ``ρ`` on ``fock ⊗ X``."""
    spec = spec or ProtocolSpec()
    rho = _as_matrix(rho_BX)
    space = space or cv_channel.space
    circ = _cf_setup(space, spec, spectator=x_dim)
    return run_circuit(circ, rho, cv_channel, None, reference, check)


def _cd_blocks_dense(beta, axis, space):
    """Dense ``exp(n̂·σ ⊗ (βa† − β*a)) = D(β)⊗P₊ + D(−β)⊗P₋`` in Fock-slow order."""
    s = _axis_pauli(axis)
    p_plus, p_minus = (np.eye(2) + s) / 2, (np.eye(2) - s) / 2
    return np.kron(displacement(space, beta), p_plus) + np.kron(displacement(space, -beta), p_minus)


def pqp_unitary(params, L: int, space: FockSpace, axis=X_AXIS, cd_axis=None) -> np.ndarray:
    """Product of ``L`` layers ``CR(θ)·CD(β_P2)·CD(iβ_Q)·CD(β_P1)``; ``L=0`` is the CF gate.

    ``cd_axis`` sets the Pauli axis of the conditional displacements (default: ``axis``).
    """
    if L == 0:
        return conditional_rotation(np.pi / 2, axis, space)
    cd_axis = axis if cd_axis is None else cd_axis
    params = np.asarray(params, dtype=float).reshape(L, 4)
    u = np.eye(2 * space.dim, dtype=complex)
    for bp1, bq, bp2, theta in params:
        layer = (
            conditional_rotation(theta, axis, space)
            @ _cd_blocks_dense(bp2, cd_axis, space)
            @ _cd_blocks_dense(1j * bq, cd_axis, space)
            @ _cd_blocks_dense(bp1, cd_axis, space)
        )
        u = layer @ u
    return u


def pqp_condrot(
    rho_B, cv_channel, dv_channel=None, L: int = 0, params=(), space=None, axis=X_AXIS, reference=None, check=True, cd_axis=None
):
    """PQP-condrot interferometer; ``L=0`` runs :func:`suppress_cf` unchanged."""
    if L == 0:
        return suppress_cf(rho_B, cv_channel, dv_channel, ProtocolSpec(axis=axis), space, reference, check)
    space = space or cv_channel.space
    reg = Register(space, 1, (2,))
    u = pqp_unitary(params, L, space, axis, cd_axis)
    gate = Gate(dense=u, ancillas=(0,))
    zero = np.array([1.0, 0.0], dtype=complex)
    circ = Circuit(reg, np.outer(zero, zero), (gate,), (gate.dagger(),), (zero,))
    return run_circuit(circ, _as_matrix(rho_B), cv_channel, dv_channel, reference, check)


@dataclass(frozen=True)
class PqpFit:
    params: np.ndarray
    fidelity: float
    converged: bool
    restarts: int
    history: tuple = field(default=())


def logical_response(code: BosonicCode, runner) -> LogicalResponse:
    return LogicalResponse.from_runner(code, lambda op: runner(op).unnormalized.op)


def optimize_pqp(code: BosonicCode, cv_channel, L: int = 1, seed=0, dv_channel=None, restarts=5, maxiter=400, n_theta=24, axis=X_AXIS) -> PqpFit:
    """Maximize the Haar-averaged heralded fidelity over PQP-condrot parameters.

    The first simplex starts at the CF point (zero displacements, total angle
    π/2), so the result never falls below the CF-only protocol.
    """
    if L < 1:
        raise ValueError("optimize_pqp needs L >= 1")
    bounds = [(-2.0, 2.0)] * 3 + [(0.0, np.pi)]
    bounds = bounds * L

    def objective(x):
        resp = logical_response(
            code, lambda op: pqp_condrot(op, cv_channel, dv_channel, L, x, code.space, axis, check=False)
        )
        return -resp.mean_fidelity(n_theta)

    start = np.zeros((L, 4))
    start[:, 3] = np.pi / (2 * L)
    rng = np.random.default_rng(seed)
    best_x, best_f = start.ravel(), objective(start.ravel())
    history = [float(-best_f)]
    converged = False
    for r in range(restarts):
        x0 = start.ravel() if r == 0 else np.array([rng.uniform(lo, hi) for lo, hi in bounds])
        res = optimize.minimize(
            objective, x0, method="Nelder-Mead", bounds=bounds, options={"maxiter": maxiter, "xatol": 1e-6, "fatol": 1e-12}
        )
        history.append(float(-res.fun))
        if res.fun < best_f:
            best_x, best_f = res.x, res.fun
        converged = converged or bool(res.success)
    return PqpFit(np.asarray(best_x).reshape(L, 4), float(-best_f), converged, restarts, tuple(history))


def noisy_bell_state(p: float) -> np.ndarray:
    """``|Φ+⟩`` after composite damping of strength ``p`` on each qubit."""
    phi = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
    rho = np.outer(phi, phi.conj())
    ch = qubit_damping(p, "composite")
    for factor in (0, 1):
        ops = [np.kron(k, np.eye(2)) if factor == 0 else np.kron(np.eye(2), k) for k in ch.operators]
        rho = sum(k @ rho @ k.conj().T for k in ops)
    return rho


def comm_protocol(rho_B, cv_channel, bell_p: float, herald: str = "00", space=None, reference=None, check=True) -> HeraldedResult:
    """Two-node filter sharing a damped Bell pair.

    The sender applies ``exp(iπ/2 a†a σx)`` on its half before the channel,
    the receiver ``exp(−iπ/2 a†a σx)`` on its half afterwards; the pair is
    heralded on ``|00⟩`` (``herald="00"``) or on ``|00⟩`` and ``|11⟩``
    (``herald="00_11"``).
    """
    if not 0 <= bell_p <= 1:
        raise ValueError("bell_p must lie in [0, 1]")
    space = space or cv_channel.space
    reg = Register(space, 1, (2, 2))
    blocks = rotation_blocks(np.pi / 2, X_AXIS, space.dim)
    sender = Gate(blocks=_embed_blocks(blocks, reg, 0), ancillas=(0,))
    receiver = Gate(blocks=_embed_blocks(blocks, reg, 1), ancillas=(1,)).dagger()
    k00 = np.array([1, 0, 0, 0], dtype=complex)
    k11 = np.array([0, 0, 0, 1], dtype=complex)
    if herald == "00":
        kets = (k00,)
    elif herald in ("00_11", "00|11"):
        kets = (k00, k11)
    elif herald == "11":
        kets = (k11,)
    else:
        raise ValueError(f"unknown herald {herald!r}")
    circ = Circuit(reg, noisy_bell_state(bell_p), (sender,), (receiver,), kets)
    return run_circuit(circ, _as_matrix(rho_B), cv_channel, None, reference, check)


def qutrit_unitary_blocks(dim: int) -> np.ndarray:
    """Per-level qutrit blocks of the three-level suppression unitary."""
    n = np.arange(dim)
    ph = np.exp(-1j * np.pi * n)
    r = 1 / np.sqrt(2)
    u = np.zeros((dim, 3, 3), dtype=complex)
    u[:, 0, 0] = r
    u[:, 0, 1] = r
    u[:, 1, 2] = ph
    u[:, 2, 0] = ph * r
    u[:, 2, 1] = -ph * r
    return u


def qutrit_protocol(rho_B, cv_channel, p: float, herald_j: int | None = 0, space=None, reference=None, check=True):
    """Qutrit-ancilla filter with composite qutrit damping during the noise window.

    ``herald_j=None`` returns the joint mode-qutrit state instead.
    """
    if herald_j not in (0, 1, 2, None):
        raise ValueError("herald_j must be 0, 1 or 2")
    space = space or cv_channel.space
    reg = Register(space, 1, (3,))
    gate = Gate(blocks=qutrit_unitary_blocks(space.dim), ancillas=(0,))
    zero = np.array([1.0, 0, 0], dtype=complex)
    herald = None if herald_j is None else (np.eye(3, dtype=complex)[herald_j],)
    circ = Circuit(reg, np.outer(zero, zero), (gate,), (gate.dagger(),), herald)
    return run_circuit(circ, _as_matrix(rho_B), cv_channel, qutrit_damping(p, "composite"), reference, check)
