"""Bosonic qubit codes on a truncated Fock space.

Each constructor returns a :class:`BosonicCode` holding two orthonormal
codewords. Derived objects (codespace identity, photon-number moments,
parity classification) are computed on demand and cached.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property, reduce
from math import comb, gcd

import numpy as np
from scipy.special import gammaln

from .errors import ConfigError, TruncationError
from .fock import FockSpace, State, db_to_r, displacement, ladder, squeeze

__all__ = [
    "BosonicCode",
    "MomentSet",
    "ParityClass",
    "cat_code",
    "binomial_code",
    "gkp_code",
    "squeezed_cat",
    "codespace_identity",
    "moments",
    "parity_class",
    "logical_state",
    "haar_sample",
    "haar_coefficients",
    "parse_code",
]

AMPLITUDE_THRESHOLD = 1e-10


@dataclass(frozen=True)
class MomentSet:
    """Photon-number moments of the codespace identity ``C``.

    ``g_n`` and ``g_a2`` use ``g(Y) = tr(C Y C Y†) + |tr(C Y)|²``. The last
    three fields feed the first-order (unfiltered) fidelity.
    """

    n_mean: float
    n2: float
    a2: complex
    g_n: float
    g_a2: float
    c_adag_c_a: float = 0.0
    c_a_c_adag: float = 0.0
    abs_a_sq: float = 0.0


@dataclass(frozen=True)
class ParityClass:
    kind: str
    rotation_order: int


@dataclass(frozen=True, eq=False)
class BosonicCode:
    """Two orthonormal logical codewords on ``space``."""

    name: str
    zero: np.ndarray
    one: np.ndarray
    space: FockSpace
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        zero = np.array(self.zero, dtype=complex)
        one = np.array(self.one, dtype=complex)
        for label, v in (("0_L", zero), ("1_L", one)):
            if v.shape != (self.space.dim,):
                raise ValueError(f"codeword {label} has shape {v.shape}, expected ({self.space.dim},)")
            if abs(np.linalg.norm(v) - 1) > 1e-12:
                raise ValueError(f"codeword {label} is not normalized")
            tail = float(np.sum(np.abs(v[self.space.n_valid + 1 :]) ** 2))
            if tail > 1e-8:
                raise TruncationError(
                    f"{self.name}: codeword {label} has weight {tail:.2e} in the guard band",
                    leakage=tail,
                )
        if abs(np.vdot(zero, one)) > 1e-10:
            raise ValueError(f"{self.name}: codewords are not orthogonal")
        zero.flags.writeable = False
        one.flags.writeable = False
        object.__setattr__(self, "zero", zero)
        object.__setattr__(self, "one", one)

    @cached_property
    def basis(self) -> np.ndarray:
        """Encoder isometry with columns ``|0_L⟩, |1_L⟩``."""
        v = np.stack([self.zero, self.one], axis=1)
        v.flags.writeable = False
        return v

    @cached_property
    def identity(self) -> np.ndarray:
        c = 0.5 * (self.basis @ self.basis.conj().T)
        c.flags.writeable = False
        return c

    @cached_property
    def moments(self) -> MomentSet:
        return moments(self)

    @cached_property
    def parity(self) -> ParityClass:
        return parity_class(self)


def _normalize(v, what):
    norm = np.linalg.norm(v)
    if not np.isfinite(norm) or norm < 1e-150:
        raise ValueError(f"{what}: codeword normalization underflow")
    return v / norm


def _lowdin(u, v):
    """Symmetric orthonormalization of two vectors."""
    basis = np.stack([u, v], axis=1)
    gram = basis.conj().T @ basis
    w, q = np.linalg.eigh(gram)
    if w[0] < 1e-14:
        raise ValueError("codewords are linearly dependent")
    out = basis @ (q * w ** -0.5) @ q.conj().T
    return out[:, 0], out[:, 1]


def cat_code(n: int, alpha: float, space: FockSpace) -> BosonicCode:
    """``n``-component cat code; codewords live on residues 0 and n/2 mod n."""
    if n < 2 or n % 2:
        raise ValueError(f"cat code needs an even component count >= 2, got {n}")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    m = space.levels
    # log|α^m/√m!|, exact Fock amplitudes of a coherent state up to a common factor
    logamp = m * np.log(alpha) - 0.5 * gammaln(m + 1)
    amp = np.exp(logamp - logamp.max())
    zero = np.where(m % n == 0, amp, 0.0).astype(complex)
    one = np.where(m % n == n // 2, amp, 0.0).astype(complex)
    return BosonicCode(
        f"cat({n},{alpha:g})",
        _normalize(zero, "cat"),
        _normalize(one, "cat"),
        space,
        {"n": n, "alpha": alpha},
    )


def binomial_code(n: int, kappa: int, space: FockSpace) -> BosonicCode:
    """Binomial code with spacing ``n`` and top index ``kappa``."""
    if n < 1 or kappa < 1:
        raise ValueError("binomial code needs n >= 1 and kappa >= 1")
    if n * kappa > space.n_valid:
        raise TruncationError(
            f"bin({n},{kappa}) support reaches level {n * kappa}, beyond the guarded cutoff {space.n_valid}"
        )
    zero = np.zeros(space.dim, dtype=complex)
    one = np.zeros(space.dim, dtype=complex)
    for j in range(kappa + 1):
        (zero if j % 2 == 0 else one)[j * n] = np.sqrt(comb(kappa, j))
    return BosonicCode(
        f"bin({n},{kappa})",
        _normalize(zero, "bin"),
        _normalize(one, "bin"),
        space,
        {"n": n, "kappa": kappa},
    )


def _hermite_functions(nmax, x):
    """Oscillator eigenfunctions ``⟨x|k⟩`` for k = 0..nmax-1 by upward recurrence."""
    psi = np.empty((nmax, x.size))
    psi[0] = np.pi ** -0.25 * np.exp(-0.5 * x**2)
    if nmax > 1:
        psi[1] = np.sqrt(2.0) * x * psi[0]
    for k in range(1, nmax - 1):
        psi[k + 1] = np.sqrt(2.0 / (k + 1)) * x * psi[k] - np.sqrt(k / (k + 1)) * psi[k - 1]
    return psi


def _gkp_raw(delta: float, space: FockSpace):
    """Damped lattice codewords before orthogonalization."""
    width = delta / 4  # std of each peak's probability density
    reach = np.sqrt(2.0 * space.dim) + 12 * width + 8
    m_cut = int(np.ceil(reach / (2 * np.sqrt(np.pi)))) + 1
    step = width / 12
    x = np.arange(-reach - 2, reach + 2 + step, step)
    psi = _hermite_functions(space.dim, x)
    damp = np.exp(-delta**2 * space.levels)
    words = []
    for mu in (0, 1):
        centres = np.sqrt(np.pi) * (2 * np.arange(-m_cut - 1, m_cut + 1) + mu)
        # keep the lattice symmetric about x=0
        centres = centres[np.abs(centres) <= np.sqrt(np.pi) * (2 * m_cut + 1)]
        comb_wave = np.exp(-((x[:, None] - centres[None, :]) ** 2) / (4 * width**2)).sum(axis=1)
        coeff = psi @ comb_wave * step
        words.append(_normalize((damp * coeff).astype(complex), "gkp"))
    return words[0], words[1]


def gkp_code(delta: float, space: FockSpace) -> BosonicCode:
    """Finite-energy square-lattice GKP code with envelope ``exp(-Δ² a†a)``.

    Narrow position peaks at ``√π(2s+μ)`` are projected onto the Fock basis,
    damped, and symmetrically orthogonalized.
    """
    if not 0 < delta < 1:
        raise ValueError("GKP delta must lie in (0, 1)")
    z, o = _gkp_raw(delta, space)
    tail = max(float(np.sum(np.abs(v[space.n_valid + 1 :]) ** 2)) for v in (z, o))
    if tail > 1e-8:
        raise TruncationError(
            f"gkp({delta:g}) needs a larger Fock dimension (guard weight {tail:.2e})", leakage=tail
        )
    z, o = _lowdin(z, o)
    return BosonicCode(f"gkp({delta:g})", z, o, space, {"delta": delta})


def squeezed_cat(n: int, alpha: float, db: float, space: FockSpace) -> BosonicCode:
    """Cat code whose coherent components are each squeezed along the real axis.

    Codewords are built from ``D(α e^{2πik/n}) S(r) |0⟩`` with ``r`` from ``db``
    and then symmetrically orthonormalized. ``db=0`` returns :func:`cat_code`.
    """
    if db < 0:
        raise ValueError("squeezing in dB must be non-negative")
    if db == 0:
        return cat_code(n, alpha, space)
    base = cat_code(n, alpha, space)  # validates n and alpha
    sq_vac = squeeze(space, db_to_r(db))[:, 0]
    comps = [displacement(space, alpha * np.exp(2j * np.pi * k / n)) @ sq_vac for k in range(n)]
    words = []
    for mu in (0, 1):
        v = sum(np.exp(-1j * np.pi * mu * k) * c for k, c in enumerate(comps))
        words.append(_normalize(v, "sqcat"))
    z, o = _lowdin(*words)
    return BosonicCode(
        f"sqcat({n},{alpha:g},{db:g}dB)", z, o, space, {"n": n, "alpha": alpha, "db": db, "base": base.name}
    )


def codespace_identity(code: BosonicCode) -> np.ndarray:
    """``C = (|0_L⟩⟨0_L| + |1_L⟩⟨1_L|)/2``."""
    return code.identity


def moments(code: BosonicCode) -> MomentSet:
    c = code.identity
    a, ad = ladder(code.space)
    num = ad @ a
    a2 = a @ a

    def g(y):
        return np.trace(c @ y @ c @ y.conj().T) + abs(np.trace(c @ y)) ** 2

    tr_a = np.trace(c @ a)
    return MomentSet(
        n_mean=float(np.real(np.trace(c @ num))),
        n2=float(np.real(np.trace(c @ num @ num))),
        a2=complex(np.trace(c @ a2)),
        g_n=float(np.real(g(num))),
        g_a2=float(np.real(g(a2))),
        c_adag_c_a=float(np.real(np.trace(c @ ad @ c @ a))),
        c_a_c_adag=float(np.real(np.trace(c @ a @ c @ ad))),
        abs_a_sq=float(abs(tr_a) ** 2),
    )


def _support(v):
    return np.flatnonzero(np.abs(v) > AMPLITUDE_THRESHOLD)


def parity_class(code: BosonicCode) -> ParityClass:
    """Classify codeword photon-number parities and the joint rotation order."""
    s0, s1 = _support(code.zero), _support(code.one)
    par0, par1 = set(s0 % 2), set(s1 % 2)
    if len(par0) == 1 and len(par1) == 1:
        if par0 == par1:
            kind = "like-even" if par0 == {0} else "like-odd"
        else:
            kind = "opposite"
    else:
        kind = "none"
    joint = np.concatenate([s0, s1])
    diffs = (joint - joint[0]).tolist()
    order = reduce(gcd, diffs, 0)
    return ParityClass(kind, order if order > 1 else 0)


def logical_state(code: BosonicCode, c0, c1) -> State:
    """Encoded pure state ``c0|0_L⟩ + c1|1_L⟩``."""
    c0, c1 = complex(c0), complex(c1)
    if abs(abs(c0) ** 2 + abs(c1) ** 2 - 1) > 1e-12:
        raise ValueError("logical coefficients are not normalized")
    return State.from_ket(c0 * code.zero + c1 * code.one)


def haar_coefficients(rng_seed, size=None):
    """Uniform Bloch-sphere coefficients ``(c0, c1)`` from a seeded generator."""
    rng = np.random.default_rng(rng_seed)
    g = rng.standard_normal((2, 2) if size is None else (size, 2, 2))
    v = g[..., 0] + 1j * g[..., 1]
    v = v / np.linalg.norm(v, axis=-1, keepdims=True)
    # fix the global phase so c0 is real and non-negative
    v = v * np.exp(-1j * np.angle(v[..., :1]))
    return np.real(v[..., 0]), v[..., 1]


def haar_sample(code: BosonicCode, rng_seed) -> State:
    c0, c1 = haar_coefficients(rng_seed)
    norm = np.sqrt(c0**2 + abs(c1) ** 2)
    return logical_state(code, c0 / norm, c1 / norm)


_NUM = r"([-+]?\d*\.?\d+(?:[eE][-+]?\d+)?)"
_CODE_PATTERNS = {
    "cat": re.compile(rf"^cat\(\s*(\d+)\s*,\s*{_NUM}\s*\)$"),
    "sqcat": re.compile(rf"^sqcat\(\s*(\d+)\s*,\s*{_NUM}\s*,\s*{_NUM}\s*(?:dB)?\s*\)$", re.IGNORECASE),
    "bin": re.compile(r"^bin\(\s*(\d+)\s*,\s*(\d+)\s*\)$"),
    "gkp": re.compile(rf"^gkp\(\s*{_NUM}\s*\)$"),
}


def parse_code(descriptor: str, space: FockSpace) -> BosonicCode:
    """Build a code from ``cat(2,2)``, ``sqcat(2,2,6dB)``, ``bin(2,4)`` or ``gkp(0.3)``."""
    text = descriptor.strip()
    for kind, pattern in _CODE_PATTERNS.items():
        m = pattern.match(text)
        if not m:
            continue
        g = m.groups()
        try:
            if kind == "cat":
                return cat_code(int(g[0]), float(g[1]), space)
            if kind == "sqcat":
                return squeezed_cat(int(g[0]), float(g[1]), float(g[2]), space)
            if kind == "bin":
                return binomial_code(int(g[0]), int(g[1]), space)
            return gkp_code(float(g[0]), space)
        except ValueError as exc:
            raise ConfigError(f"invalid code {descriptor!r}: {exc}") from exc
    raise ConfigError(f"unrecognized code descriptor {descriptor!r}")
