"""Fast invariant checks runnable from an installed package."""

from __future__ import annotations

from math import factorial

import numpy as np

from ..analytics.closed_form import psucc_asymptotic, psucc_closed, teleportation_fidelity
from ..analytics.haar import LogicalResponse
from ..analytics.teleport import simulate_teleportation_fidelity
from ..channels import loss_channel, qubit_damping, qutrit_damping, thermal_channel
from ..codes import binomial_code, cat_code
from ..fock import FockSpace, displacement, ladder, ordered_power_identity, squeeze, trace_distance
from ..protocols import ProtocolSpec, noisy_bell_state, suppress_analytic, suppress_cf

__all__ = ["CHECKS", "run_selftest"]


def _unitarity(space):
    for op in (displacement(space, 0.7 + 0.3j), squeeze(space, 0.4)):
        err = np.abs(op.conj().T @ op - np.eye(space.dim)).max()
        if err > 1e-10:
            return f"unitarity error {err:.2e}"
    return None


def _completeness(space):
    for ch in (loss_channel(0.1, space), qubit_damping(0.2), qutrit_damping(0.2)):
        m = ch.completeness()
        keep = space.n_valid + 1 if m.shape[0] == space.dim else m.shape[0]
        err = np.abs(m[:keep, :keep] - np.eye(keep)).max()
        if err > max(ch.deficit, 1e-12) + 1e-14:
            return f"{ch.name}: completeness error {err:.2e}"
    return None


def _ordering(space):
    # :exp(λ a†a): as the series Σ λ^k a†^k a^k / k!
    lam = -0.3
    a, _ = ladder(space)
    term = np.eye(space.dim, dtype=complex)
    series = term.copy()
    ak = np.eye(space.dim, dtype=complex)
    for k in range(1, space.dim):
        ak = ak @ a
        term = ak.conj().T @ ak * lam**k / factorial(k)
        series += term
    err = np.abs(series - ordered_power_identity(lam, "normal", space)).max()
    return None if err < 1e-10 else f"normal-ordering identity error {err:.2e}"


def _analytic_vs_joint(space):
    code = cat_code(2, 2, space)
    ch = thermal_channel(0.05, 0.5, space)
    mu, G = ch.params["mu"], ch.params["G"]
    for K in (1, 2):
        spec = ProtocolSpec("cf_multi" if K > 1 else "cf_single", K=K)
        joint = suppress_cf(code.identity / 2, ch, None, spec, space)
        ana = suppress_analytic(code.identity / 2, mu, G, K, space)
        td = trace_distance(joint.unnormalized, ana.unnormalized)
        if td > 1e-10 or abs(joint.p_succ - psucc_closed(code.identity / 2, mu, G, K)) > 1e-10:
            return f"K={K}: joint and analytic outputs differ ({td:.2e})"
    return None


def _finite_support(space):
    code = binomial_code(2, 4, space)
    gap = psucc_closed(code.identity / 2, 0.1, 1.0, 4) - psucc_asymptotic(code.identity / 2, 0.1, 1.0)
    return None if abs(gap) < 1e-12 else f"finite-support gap {gap:.2e}"


def _teleport(space):
    for p in (0.0, 0.25, 0.5, 0.75, 1.0):
        err = abs(simulate_teleportation_fidelity(noisy_bell_state(p)) - teleportation_fidelity(p))
        if err > 1e-12:
            return f"teleportation p={p}: error {err:.2e}"
    return None


def _psucc_floor(space):
    code = binomial_code(2, 4, space)
    ch = loss_channel(0.3, space)
    resp = LogicalResponse.from_runner(
        code, lambda op: suppress_cf(op, ch, None, ProtocolSpec(), space, check=False).unnormalized.op
    )
    p = resp.mean_success()
    return None if p >= 0.5 else f"mean success {p} below 1/2"


CHECKS = (
    ("unitarity of displacement and squeezing", _unitarity),
    ("Kraus completeness within the recorded deficit", _completeness),
    ("normal-ordered power identity", _ordering),
    ("joint simulation matches analytic filter", _analytic_vs_joint),
    ("finite-support success gap vanishes", _finite_support),
    ("teleportation fidelity closed form", _teleport),
    ("success probability floor", _psucc_floor),
)


def run_selftest(space: FockSpace | None = None, echo=print) -> bool:
    space = space or FockSpace()
    ok = True
    for label, fn in CHECKS:
        try:
            msg = fn(space)
        except Exception as exc:  # report and continue with the rest of the suite
            msg = f"{type(exc).__name__}: {exc}"
        echo(f"{'PASS' if msg is None else 'FAIL'}  {label}" + ("" if msg is None else f"  ({msg})"))
        ok = ok and msg is None
    return ok
