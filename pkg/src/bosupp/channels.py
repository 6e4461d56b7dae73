"""Kraus-operator noise channels for the bosonic mode and its ancillas.

Bosonic channels are built from pure loss and quantum-limited amplification;
thermal and Gaussian displacement noise are amplifier-after-loss composites.
Each Kraus operator carries a label such as ``(("l", 2), ("k", 1))`` so that
jump counts survive composition.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy import stats
from scipy.special import gammaln, xlog1py, xlogy

from .errors import ConfigError, TruncationError
from .fock import PAULI_X, PAULI_Y, PAULI_Z, FockSpace, State

__all__ = [
    "CvNoiseParams",
    "KrausChannel",
    "identity_channel",
    "loss_channel",
    "loss_depth",
    "amp_depth",
    "amp_channel",
    "loss_amp_channel",
    "thermal_channel",
    "gdn_channel",
    "qubit_damping",
    "qutrit_damping",
    "depolarizing",
    "apply",
    "apply_on_factor",
    "compose",
    "fock_leakage",
    "parse_channel",
    "LEAKAGE_TOL",
]

LEAKAGE_TOL = 1e-6


@dataclass(frozen=True)
class CvNoiseParams:
    """Loss rate ``mu`` and gain ``G`` of an amplifier-after-loss channel."""

    mu: float
    G: float = 1.0

    def __post_init__(self):
        if not 0 <= self.mu < 1:
            raise ValueError(f"loss rate must lie in [0, 1), got {self.mu}")
        if self.G < 1:
            raise ValueError(f"gain must be >= 1, got {self.G}")
        if self.mu * self.G > 1 + 1e-12:
            raise ValueError(f"unphysical parameters: mu*G = {self.mu * self.G} > 1")

    @classmethod
    def thermal(cls, eta, nbar):
        G = 1.0 + eta * nbar
        return cls(1.0 - (1.0 - eta) / G, G)

    @classmethod
    def gdn(cls, eta):
        return cls(eta, 1.0 / (1.0 - eta))

    @classmethod
    def from_mu_z(cls, mu, z):
        return cls(mu, 1.0 / (1.0 - z))

    @property
    def x(self) -> float:
        return (1 - self.mu) / self.G

    @property
    def y(self) -> float:
        return self.mu * self.G / (1 - self.mu)

    @property
    def z(self) -> float:
        return 1 - 1 / self.G


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Ordered labeled Kraus operators.

    ``deficit`` bounds ``‖I − Σ K†K‖`` on the guarded subspace. ``stages``
    keeps the factors of a composite so it can be applied one stage at a
    time; the flattened ``kraus`` list holds the paired products.
    """

    name: str
    kraus: tuple
    deficit: float = 0.0
    space: FockSpace | None = None
    params: dict = field(default_factory=dict)
    stages: tuple = ()

    def __post_init__(self):
        ops = []
        dim = None
        for label, op in self.kraus:
            op = np.array(op, dtype=complex)
            if op.ndim != 2 or op.shape[0] != op.shape[1]:
                raise ValueError(f"Kraus operator {label} is not square")
            if dim is None:
                dim = op.shape[0]
            elif op.shape[0] != dim:
                raise ValueError("Kraus operators have mismatched dimensions")
            op.flags.writeable = False
            ops.append((tuple(label), op))
        labels = [lab for lab, _ in ops]
        if len(set(labels)) != len(labels):
            raise ValueError("Kraus labels must be unique")
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        object.__setattr__(self, "kraus", tuple(ops))

    @property
    def dim(self) -> int:
        return self.kraus[0][1].shape[0]

    @property
    def labels(self):
        return [lab for lab, _ in self.kraus]

    @property
    def operators(self):
        return [op for _, op in self.kraus]

    @property
    def cv(self) -> CvNoiseParams | None:
        if "mu" in self.params:
            return CvNoiseParams(self.params["mu"], self.params.get("G", 1.0))
        return None

    def completeness(self) -> np.ndarray:
        return sum(op.conj().T @ op for op in self.operators)

    def jump(self, label, name):
        """Index carried under ``name`` in a label (0 if absent)."""
        return dict(label).get(name, 0)


def identity_channel(dim: int, name="identity") -> KrausChannel:
    return KrausChannel(name, (((("j", 0),), np.eye(dim)),))


def _dv_deficit(ops):
    total = sum(op.conj().T @ op for op in ops)
    return float(np.max(np.abs(total - np.eye(total.shape[0]))))


def _binom_pmf(k, n, p):
    # log space; scipy's boost backend overflows for denormal p
    n = np.asarray(n, dtype=float)
    return np.exp(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1) + xlogy(k, p) + xlog1py(n - k, -p))


def _nbinom_pmf(k, r, p):
    r = np.asarray(r, dtype=float)
    return np.exp(gammaln(r + k) - gammaln(k + 1) - gammaln(r) + xlogy(r, p) + xlog1py(k, -p))


def loss_depth(mu: float, space: FockSpace, tol=1e-10) -> int:
    """Smallest jump count whose binomial tail on guarded levels is below ``tol``."""
    if mu == 0:
        return 0
    tails = stats.binom.sf(np.arange(space.dim), space.n_valid, mu)
    hits = np.flatnonzero(tails <= tol)
    return int(hits[0]) if hits.size else space.n_max


def amp_depth(G: float, space: FockSpace, tol=1e-8) -> int:
    """Smallest gain jump count whose negative-binomial tail is below ``tol``."""
    if G == 1:
        return 0
    tails = stats.nbinom.sf(np.arange(space.dim), space.n_valid + 1, 1 / G)
    hits = np.flatnonzero(tails <= tol)
    return int(hits[0]) if hits.size else space.n_max


def loss_channel(mu: float, space: FockSpace, l_max: int | None = None) -> KrausChannel:
    """Pure loss: ``A_l = √(μ^l/l!) (1−μ)^{a†a/2} a^l``."""
    if not 0 <= mu < 1:
        raise ValueError(f"loss rate must lie in [0, 1), got {mu}")
    n = space.levels
    if mu == 0:
        return KrausChannel("loss", (((("l", 0),), np.eye(space.dim)),), 0.0, space, {"mu": 0.0, "G": 1.0})
    l_max = loss_depth(mu, space) if l_max is None else min(l_max, space.n_max)
    ops = []
    for l in range(l_max + 1):
        # A_l |n> = sqrt(C(n,l) mu^l (1-mu)^(n-l)) |n-l>
        amp = np.sqrt(_binom_pmf(l, n[l:], mu))
        op = np.zeros((space.dim, space.dim), dtype=complex)
        op[n[l:] - l, n[l:]] = amp
        ops.append(((("l", l),), op))
    deficit = float(stats.binom.sf(l_max, space.n_valid, mu))
    return KrausChannel("loss", tuple(ops), deficit, space, {"mu": mu, "G": 1.0})


def amp_channel(G: float, space: FockSpace, k_max: int | None = None) -> KrausChannel:
    """Quantum-limited amplifier: ``B_k = √(z^k/(k!G)) a†^k G^{−a†a/2}``, ``z = 1−1/G``.

    Gain pushes weight past the cutoff; that loss of trace is reported by
    :func:`fock_leakage` on the output rather than hidden in the deficit.
    """
    if G < 1:
        raise ValueError(f"gain must be >= 1, got {G}")
    n = space.levels
    if G == 1:
        return KrausChannel("amp", (((("k", 0),), np.eye(space.dim)),), 0.0, space, {"mu": 0.0, "G": 1.0})
    z = 1 - 1 / G
    k_max = amp_depth(G, space) if k_max is None else min(k_max, space.n_max)
    ops = []
    for k in range(k_max + 1):
        src = n[: space.dim - k]
        # B_k |n> = sqrt(C(n+k,k) z^k (1-z)^(n+1)) |n+k>
        amp = np.sqrt(_nbinom_pmf(k, src + 1, 1 - z))
        op = np.zeros((space.dim, space.dim), dtype=complex)
        op[src + k, src] = amp
        ops.append(((("k", k),), op))
    deficit = float(stats.nbinom.sf(k_max, space.n_valid + 1, 1 - z))
    return KrausChannel("amp", tuple(ops), deficit, space, {"mu": 0.0, "G": G})


def compose(c2: KrausChannel, c1: KrausChannel, name=None) -> KrausChannel:
    """Channel ``c2 ∘ c1`` (``c1`` acts first) with paired labels."""
    if c1.dim != c2.dim:
        raise ValueError(f"cannot compose channels of dimension {c1.dim} and {c2.dim}")
    ops = []
    for (lab1, k1), (lab2, k2) in product(c1.kraus, c2.kraus):
        op = k2 @ k1
        if np.any(op):
            ops.append((lab1 + lab2, op))
    stages = (c1.stages or (c1,)) + (c2.stages or (c2,))
    params = {}
    if "mu" in c1.params and "G" in c2.params and c1.params.get("G", 1.0) == 1.0:
        params = {"mu": c1.params["mu"], "G": c2.params["G"]}
    return KrausChannel(
        name or f"{c2.name}*{c1.name}",
        tuple(ops),
        c1.deficit + c2.deficit,
        c1.space or c2.space,
        params,
        stages,
    )


def loss_amp_channel(mu: float, G: float, space: FockSpace, name="lossamp", **extra) -> KrausChannel:
    """Amplifier after loss, the common form of all bosonic noise used here."""
    CvNoiseParams(mu, G)
    ch = compose(amp_channel(G, space), loss_channel(mu, space), name=name)
    return KrausChannel(ch.name, ch.kraus, ch.deficit, space, {"mu": mu, "G": G, **extra}, ch.stages)


def thermal_channel(eta: float, nbar: float, space: FockSpace) -> KrausChannel:
    """Thermal noise with ``G = 1 + η n̄`` and ``μ = 1 − (1−η)/G``."""
    if not 0 <= eta < 1:
        raise ValueError(f"eta must lie in [0, 1), got {eta}")
    if nbar < 0:
        raise ValueError("nbar must be non-negative")
    p = CvNoiseParams.thermal(eta, nbar)
    return loss_amp_channel(p.mu, p.G, space, name="thermal", eta=eta, nbar=nbar)


def gdn_channel(eta: float, space: FockSpace) -> KrausChannel:
    """Gaussian displacement noise of variance ``η/(1−η)``: ``G = 1/(1−η)``, ``μ = η``."""
    if not 0 <= eta < 1:
        raise ValueError(f"eta must lie in [0, 1), got {eta}")
    p = CvNoiseParams.gdn(eta)
    return loss_amp_channel(p.mu, p.G, space, name="gdn", eta=eta, sigma2=eta / (1 - eta))


def _check_prob(p, what="p"):
    if not 0 <= p <= 1:
        raise ValueError(f"{what} must lie in [0, 1], got {p}")


def qubit_damping(p: float, kind: str = "composite") -> KrausChannel:
    """Qubit amplitude, phase, or composite (phase after amplitude) damping."""
    _check_prob(p)
    k0 = np.diag([1.0, np.sqrt(1 - p)]).astype(complex)
    if kind == "amplitude":
        k1 = np.sqrt(p) * np.array([[0, 1], [0, 0]], dtype=complex)
    elif kind == "phase":
        k1 = np.sqrt(p) * np.array([[0, 0], [0, 1]], dtype=complex)
    elif kind == "composite":
        ch = compose(qubit_damping(p, "phase"), qubit_damping(p, "amplitude"), name="qdamp")
        return KrausChannel("qdamp", ch.kraus, _dv_deficit(ch.operators), None, {"p": p, "kind": kind})
    else:
        raise ValueError(f"unknown qubit damping kind {kind!r}")
    ops = [k0, k1]
    return KrausChannel(
        f"qdamp_{kind}", tuple(((("j", i),), op) for i, op in enumerate(ops)), _dv_deficit(ops), None, {"p": p, "kind": kind}
    )


def qutrit_damping(p: float, kind: str = "composite") -> KrausChannel:
    """Cascaded amplitude damping, mid-level phase damping, or their composite."""
    _check_prob(p)
    s, c = np.sqrt(p), np.sqrt(1 - p)
    if kind == "cascaded_ad":
        ops = [
            np.diag([1.0, c, c]).astype(complex),
            s * np.outer([0, 1, 0], [0, 0, 1]).astype(complex),
            s * np.outer([1, 0, 0], [0, 1, 0]).astype(complex),
        ]
    elif kind == "mid_pd":
        ops = [np.diag([1.0, c, 1.0]).astype(complex), s * np.diag([0, 1.0, 0]).astype(complex)]
    elif kind == "composite":
        ch = compose(qutrit_damping(p, "mid_pd"), qutrit_damping(p, "cascaded_ad"), name="qutrit_damp")
        return KrausChannel("qutrit_damp", ch.kraus, _dv_deficit(ch.operators), None, {"p": p, "kind": kind})
    else:
        raise ValueError(f"unknown qutrit damping kind {kind!r}")
    return KrausChannel(
        f"qutrit_{kind}",
        tuple(((("j", i),), op) for i, op in enumerate(ops)),
        _dv_deficit(ops),
        None,
        {"p": p, "kind": kind},
    )


def depolarizing(eta_prime: float) -> KrausChannel:
    """``(1−η′)ρ + (η′/3) Σ σ_j ρ σ_j``."""
    _check_prob(eta_prime, "eta_prime")
    ops = [np.sqrt(1 - eta_prime) * np.eye(2, dtype=complex)]
    ops += [np.sqrt(eta_prime / 3) * s for s in (PAULI_X, PAULI_Y, PAULI_Z)]
    return KrausChannel(
        "depol", tuple(((("j", i),), op) for i, op in enumerate(ops)), _dv_deficit(ops), None, {"eta": eta_prime}
    )


def _kraus_sum(ops, rho):
    return sum(k @ rho @ k.conj().T for k in ops)


def fock_leakage(rho: np.ndarray, weight_in: float, space: FockSpace, dims=None) -> float:
    """Guard-band population plus trace lost past the cutoff."""
    rho = np.asarray(rho)
    dims = (rho.shape[0],) if dims is None else tuple(dims)
    diag = np.real(np.diagonal(rho)).reshape(dims[0], -1)
    guard = float(np.sum(diag[space.n_valid + 1 :]))
    lost = max(weight_in - float(np.sum(diag)), 0.0)
    return guard + lost


def apply(channel: KrausChannel, state: State, check_leakage=True) -> State:
    """``Σ K ρ K†``; composites are applied stage by stage."""
    if channel.dim != state.op.shape[0]:
        raise ValueError(f"channel dimension {channel.dim} does not match state dimension {state.op.shape[0]}")
    rho = state.op
    for stage in channel.stages or (channel,):
        rho = _kraus_sum(stage.operators, rho)
    if check_leakage and channel.space is not None:
        leak = fock_leakage(rho, state.weight, channel.space)
        if leak > LEAKAGE_TOL:
            raise TruncationError(f"{channel.name}: leakage {leak:.2e} beyond the guarded subspace", leakage=leak)
    return State(rho, state.dims)


def _on_factor(ops, rho, dims, factor):
    n = len(dims)
    t = rho.reshape(dims + dims)
    out = 0
    for k in ops:
        r = np.moveaxis(np.tensordot(k, t, axes=([1], [factor])), 0, factor)
        r = np.moveaxis(np.tensordot(r, k.conj(), axes=([n + factor], [1])), -1, n + factor)
        out = out + r
    size = int(np.prod(dims))
    return out.reshape(size, size)


def apply_on_factor(channel: KrausChannel, state: State, factor: int, check_leakage=True) -> State:
    """Apply ``channel`` to one tensor factor, identity elsewhere."""
    dims = state.dims
    if not 0 <= factor < len(dims):
        raise ValueError(f"factor {factor} out of range for dims {dims}")
    if channel.dim != dims[factor]:
        raise ValueError(f"channel dimension {channel.dim} does not match factor dimension {dims[factor]}")
    rho = state.op
    for stage in channel.stages or (channel,):
        rho = _on_factor(stage.operators, rho, dims, factor)
    if check_leakage and channel.space is not None and factor == 0:
        leak = fock_leakage(rho, state.weight, channel.space, dims)
        if leak > LEAKAGE_TOL:
            raise TruncationError(f"{channel.name}: leakage {leak:.2e} beyond the guarded subspace", leakage=leak)
    return State(rho, dims)


_DESCRIPTOR = re.compile(r"^\s*([A-Za-z_]\w*)\s*(?:\((.*)\))?\s*$")


def parse_args(descriptor: str):
    """Split ``name(k=v, ...)`` into a name and a dict of raw string values."""
    m = _DESCRIPTOR.match(descriptor)
    if not m:
        raise ConfigError(f"malformed descriptor {descriptor!r}")
    name, body = m.group(1), m.group(2)
    args = {}
    if body and body.strip():
        for i, part in enumerate(body.split(",")):
            if "=" in part:
                key, val = part.split("=", 1)
                args[key.strip()] = val.strip()
            else:
                args[f"_{i}"] = part.strip()
    return name, args


def _float(args, key, descriptor):
    if key not in args:
        raise ConfigError(f"descriptor {descriptor!r} is missing {key!r}")
    try:
        return float(args[key])
    except ValueError:
        raise ConfigError(f"descriptor {descriptor!r}: {key}={args[key]!r} is not a number") from None


def parse_channel(descriptor: str, space: FockSpace | None = None) -> KrausChannel | None:
    """Channel from ``loss(mu=..)``, ``thermal(eta=..,nbar=..)``, ``gdn(eta=..)``,
    ``lossamp(mu=..,z=..)``, ``qdamp(p=..,kind=..)``, ``qutrit_damp(p=..,kind=..)``,
    ``depol(eta=..)`` or ``none`` (returns ``None``)."""
    name, args = parse_args(descriptor)
    try:
        if name == "none":
            return None
        if name == "loss":
            return loss_channel(_float(args, "mu", descriptor), space)
        if name == "thermal":
            return thermal_channel(_float(args, "eta", descriptor), _float(args, "nbar", descriptor), space)
        if name == "gdn":
            return gdn_channel(_float(args, "eta", descriptor), space)
        if name == "lossamp":
            p = CvNoiseParams.from_mu_z(_float(args, "mu", descriptor), _float(args, "z", descriptor))
            return loss_amp_channel(p.mu, p.G, space)
        if name == "qdamp":
            return qubit_damping(_float(args, "p", descriptor), args.get("kind", "composite"))
        if name == "qutrit_damp":
            return qutrit_damping(_float(args, "p", descriptor), args.get("kind", "composite"))
        if name == "depol":
            return depolarizing(_float(args, "eta", descriptor))
    except ValueError as exc:
        raise ConfigError(f"invalid channel {descriptor!r}: {exc}") from exc
    raise ConfigError(f"unknown channel {name!r} in {descriptor!r}")
