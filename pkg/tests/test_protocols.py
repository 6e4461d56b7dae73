from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bosupp.analytics.closed_form import comm_psucc_closed, psucc_closed, qutrit_dq
from bosupp.channels import apply, apply_on_factor, gdn_channel, loss_amp_channel, loss_channel, qubit_damping, thermal_channel
from bosupp.codes import BosonicCode, binomial_code, cat_code
from bosupp.errors import BosuppError, HeraldStarvationError, TruncationError
from bosupp.fock import FockSpace, State, coherent_ket, fidelity, fock_ket, trace_distance
from bosupp.protocols import (
    ProtocolSpec,
    comm_protocol,
    conditional_rotation,
    logical_response,
    noisy_bell_state,
    optimize_pqp,
    paired_kraus,
    parity_shortcut,
    pqp_condrot,
    protect_hybrid,
    qutrit_protocol,
    run_circuit,
    suppress_analytic,
    suppress_cf,
)
from bosupp.protocols.suppression import _cf_setup


def _ket_state(space, *levels):
    v = sum(fock_ket(space, n) for n in levels)
    return State.from_ket(v / np.linalg.norm(v))


def _mean_fidelity(code, runner):
    return logical_response(code, runner).mean_fidelity()


def test_conditional_rotation_examples(space):
    assert np.allclose(conditional_rotation(0.0, (1, 0, 0), space), np.eye(2 * space.dim))
    u = conditional_rotation(np.pi / 2, (1, 0, 0), space)
    two = np.kron(fock_ket(space, 2), [1, 0])
    assert np.allclose(u @ two, -two, atol=1e-15)
    one = np.kron(fock_ket(space, 1), [1, 0])
    assert np.allclose(u @ one, 1j * np.kron(fock_ket(space, 1), [0, 1]), atol=1e-15)
    assert np.abs(u.conj().T @ u - np.eye(2 * space.dim)).max() <= 1e-12
    with pytest.raises(ValueError):
        conditional_rotation(0.3, (1, 1, 0), space)


def test_protocol_spec_validation():
    assert ProtocolSpec("cf_multi", K=3).thetas == (np.pi / 2, np.pi / 4, np.pi / 8)
    with pytest.raises(ValueError):
        ProtocolSpec("cf_multi", K=2, thetas=(0.1,))
    with pytest.raises(ValueError):
        ProtocolSpec(axis=(0.0, 0.0, 0.5))
    with pytest.raises(ValueError):
        ProtocolSpec("magic")


def test_single_photon_loss_rejected(space):
    mu = 0.2
    res = suppress_cf(_ket_state(space, 1), loss_channel(mu, space), space=space)
    assert res.p_succ == pytest.approx(1 - mu, abs=1e-14)
    assert np.abs(res.normalized.op - _ket_state(space, 1).op).max() <= 1e-14


def test_noiseless_channel_is_transparent(space):
    code = cat_code(2, 2.0, space)
    rho = State.from_ket((code.zero + 1j * code.one) / np.sqrt(2))
    res = suppress_cf(rho, None, space=space, reference=(code.zero + 1j * code.one) / np.sqrt(2))
    assert res.p_succ == pytest.approx(1, abs=1e-13)
    assert res.fidelity == pytest.approx(1, abs=1e-13)


@pytest.mark.parametrize("eps", [0.05, 0.1, 0.2])
def test_miscalibrated_angle_leaks_quadratically(space, eps):
    mu = 0.1
    spec = ProtocolSpec(thetas=(np.pi / 2 + eps,))
    res = suppress_cf(_ket_state(space, 1), loss_channel(mu, space), spec=spec, space=space)
    assert res.unnormalized.op[0, 0].real == pytest.approx(mu * np.sin(eps) ** 2, abs=1e-14)


def test_analytic_residue_rules(space):
    ks = {(l, k) for l, k, _ in paired_kraus(0.1, 1.0, space)}
    assert (1, 0) in ks and (4, 0) in ks
    out = suppress_analytic(_ket_state(space, 1).op, 0.1, 1.0, 1, space)
    assert abs(out.unnormalized.op[0, 0]) == 0
    out = suppress_analytic(_ket_state(space, 4).op, 0.1, 1.0, 2, space)
    assert out.unnormalized.op[0, 0].real == pytest.approx(0.1**4, rel=1e-12)
    out = suppress_analytic(_ket_state(space, 0).op, 0.3, 1.0, 1, space)
    assert out.p_succ == pytest.approx(1, abs=1e-14)


def test_paired_kraus_reproduce_channel(space):
    ch = thermal_channel(0.05, 0.5, space)
    rho = _ket_state(space, 0, 3, 5).op
    total = sum(op @ rho @ op.conj().T for _, _, op in paired_kraus(ch.params["mu"], ch.params["G"], space))
    assert np.abs(total - apply(ch, State(rho)).op).max() <= 1e-12


@pytest.mark.parametrize("K", [1, 2, 3])
@pytest.mark.parametrize("make", [lambda s: loss_channel(0.08, s), lambda s: thermal_channel(0.05, 0.5, s), lambda s: gdn_channel(0.04, s)])
def test_analytic_equals_joint_simulation(space, K, make):
    ch = make(space)
    code = binomial_code(2, 4, space)
    rho = State.from_ket((code.zero + code.one) / np.sqrt(2))
    joint = suppress_cf(rho, ch, spec=ProtocolSpec("cf_multi", K=K), space=space)
    fast = suppress_analytic(rho, ch.params["mu"], ch.params["G"], K, space)
    assert trace_distance(joint.unnormalized, fast.unnormalized) <= 1e-10
    assert abs(joint.p_succ - fast.p_succ) <= 1e-10


@pytest.mark.parametrize("n", [0, 3, 6])
@pytest.mark.parametrize("K", [1, 2])
def test_filter_support(space, n, K):
    res = suppress_cf(_ket_state(space, n), thermal_channel(0.1, 0.5, space), spec=ProtocolSpec("cf_multi", K=K), space=space)
    pops = np.real(np.diagonal(res.unnormalized.op))
    m = np.arange(space.dim)
    assert pops[(m - n) % 2**K != 0].max() <= 1e-12


def test_parity_shortcut_like_even(space):
    code = binomial_code(2, 4, space)
    spec = parity_shortcut(code)
    assert spec.local_first == (True,)
    ch = loss_channel(0.05, space)
    rho = State.from_ket((code.zero + 1j * code.one) / np.sqrt(2))
    full = suppress_cf(rho, ch, qubit_damping(0.0), ProtocolSpec(), space)
    short = suppress_cf(rho, ch, qubit_damping(0.0), spec, space)
    assert np.abs(full.unnormalized.op - short.unnormalized.op).max() <= 1e-12


def test_parity_shortcut_like_odd(space):
    code = BosonicCode("odd", fock_ket(space, 1), (fock_ket(space, 3) + fock_ket(space, 5)) / np.sqrt(2), space)
    assert code.parity.kind == "like-odd"
    spec = parity_shortcut(code)
    assert spec.flip_init
    ch = thermal_channel(0.05, 0.5, space)
    rho = State.from_ket((code.zero + code.one) / np.sqrt(2))
    full = suppress_cf(rho, ch, None, ProtocolSpec(), space)
    short = suppress_cf(rho, ch, None, spec, space)
    assert np.abs(full.unnormalized.op - short.unnormalized.op).max() <= 1e-12


def test_parity_shortcut_rejects_opposite(space):
    with pytest.raises(BosuppError):
        parity_shortcut(cat_code(2, 2.0, space))


def test_like_parity_flatness_under_damping(space):
    code = binomial_code(2, 4, space)
    ch = loss_channel(0.05, space)
    fids = [
        _mean_fidelity(code, lambda op, p=p: suppress_cf(op, ch, qubit_damping(p), ProtocolSpec(), space, check=False))
        for p in (0.0, 0.1, 0.2, 0.3)
    ]
    assert np.ptp(fids) <= 1e-10


def test_opposite_parity_degrades_under_damping(space):
    code = cat_code(2, 2.0, space)
    ch = loss_channel(0.05, space)
    fids = [
        _mean_fidelity(code, lambda op, p=p: suppress_cf(op, ch, qubit_damping(p), ProtocolSpec(), space, check=False))
        for p in (0.0, 0.1, 0.3)
    ]
    assert fids[0] > fids[1] > fids[2]


def test_psucc_floor_single_ancilla(space):
    for mu, G in ((0.3, 1.0), (0.2, 1.5), (0.4, 1.25)):
        ch = loss_amp_channel(mu, G, space)
        code = cat_code(2, 2.0, space)
        resp = logical_response(code, lambda op: suppress_cf(op, ch, None, ProtocolSpec(), space, check=False))
        assert resp.mean_success() >= 0.5


def test_herald_partition_sums_to_one(space):
    ch = thermal_channel(0.05, 0.5, space)
    circ = _cf_setup(space, ProtocolSpec("cf_multi", K=2))
    circ = replace(circ, herald=tuple(np.eye(4, dtype=complex)))
    rho = _ket_state(space, 2, 4).op
    res = run_circuit(circ, rho, ch, qubit_damping(0.2))
    assert res.p_succ == pytest.approx(1, abs=max(ch.deficit, 1e-12))
    total = sum(qutrit_protocol(rho, ch, 0.3, j, space).p_succ for j in (0, 1, 2))
    assert total == pytest.approx(1, abs=max(ch.deficit, 1e-12))


def test_leakage_raises():
    small = FockSpace(12, 3)
    ch = loss_amp_channel(0.0, 2.0, small)
    with pytest.raises(TruncationError):
        suppress_cf(_ket_state(small, 7), ch, space=small)


def test_herald_starvation_raises(space):
    with pytest.raises(HeraldStarvationError):
        qutrit_protocol(_ket_state(space, 2), loss_channel(0.1, space), 0.0, 2, space)


def test_pqp_zero_layers_is_cf(space):
    ch = loss_channel(0.05, space)
    rho = _ket_state(space, 0, 2, 3)
    a = pqp_condrot(rho, ch, qubit_damping(0.1), 0, (), space)
    b = suppress_cf(rho, ch, qubit_damping(0.1), ProtocolSpec(), space)
    assert np.array_equal(a.unnormalized.op, b.unnormalized.op)


def test_pqp_at_cf_point_matches_cf(space):
    ch = loss_channel(0.05, space)
    rho = _ket_state(space, 0, 1, 4)
    a = pqp_condrot(rho, ch, None, 1, (0.0, 0.0, 0.0, np.pi / 2), space)
    b = suppress_cf(rho, ch, None, ProtocolSpec(), space)
    assert np.abs(a.unnormalized.op - b.unnormalized.op).max() <= 1e-12


def test_pqp_optimizer_never_below_cf(space):
    code = cat_code(2, 2.0, space)
    ch = loss_channel(0.05, space)
    fit = optimize_pqp(code, ch, 1, seed=1, restarts=1, maxiter=40, n_theta=16)
    cf = logical_response(code, lambda op: suppress_cf(op, ch, None, ProtocolSpec(), space, check=False)).mean_fidelity(16)
    assert fit.fidelity >= cf - 1e-9
    with pytest.raises(ValueError):
        optimize_pqp(code, ch, 0)


def _hybrid_oracle(alphas, coeffs, mu, dim):
    big = FockSpace(dim + 40, 0)
    kets = [coherent_ket(big, np.sqrt(1 - mu) * a)[:dim] for a in alphas]
    out = np.zeros((2 * dim, 2 * dim), dtype=complex)
    for i, (ai, ci) in enumerate(zip(alphas, coeffs)):
        for j, (aj, cj) in enumerate(zip(alphas, coeffs)):
            amp = ci * np.conj(cj) * np.cosh(mu * ai * np.conj(aj)) * np.exp(-mu * (abs(ai) ** 2 + abs(aj) ** 2) / 2)
            out += amp * np.kron(np.outer(kets[i], kets[j].conj()), np.outer(np.eye(2)[i], np.eye(2)[j]))
    return out


def test_protect_hybrid_even_loss_dyads(space):
    alphas, coeffs, mu = (1.5, -1.5), (1 / np.sqrt(2), 1 / np.sqrt(2)), 0.05
    kets = [coherent_ket(space, a) for a in alphas]
    psi = sum(c * np.kron(k, e) for c, k, e in zip(coeffs, kets, np.eye(2)))
    rho = np.outer(psi, psi.conj())
    res = protect_hybrid(rho, 2, loss_channel(mu, space), space=space)
    assert np.abs(res.unnormalized.op - _hybrid_oracle(alphas, coeffs, mu, space.dim)).max() <= 1e-10
    clean = protect_hybrid(rho, 2, None, space=space)
    assert clean.p_succ == pytest.approx(1, abs=1e-12)
    assert np.abs(clean.normalized.op - rho).max() <= 1e-12


def test_protect_hybrid_beats_unsuppressed(space):
    alphas, mu = (1.5, -1.5), 0.05
    psi = sum(np.kron(coherent_ket(space, a), e) for a, e in zip(alphas, np.eye(2))) / np.sqrt(2)
    rho = np.outer(psi, psi.conj())
    res = protect_hybrid(rho, 2, loss_channel(mu, space), space=space, reference=psi)
    bare = apply_on_factor(loss_channel(mu, space), State(rho, (space.dim, 2)), 0)
    assert res.fidelity > fidelity(psi, bare)


def test_comm_reduces_to_local_at_zero_damping(space):
    code = cat_code(2, 2.0, space)
    ch = thermal_channel(0.05, 0.5, space)
    rho = State.from_ket((code.zero + code.one) / np.sqrt(2))
    local = suppress_cf(rho, ch, None, ProtocolSpec(), space)
    for herald in ("00", "00_11"):
        remote = comm_protocol(rho, ch, 0.0, herald, space)
        scale = 2 if herald == "00" else 1
        assert abs(scale * remote.p_succ - local.p_succ) <= 1e-12
        assert np.abs(remote.normalized.op - local.normalized.op).max() <= 1e-12


def test_noisy_bell_state_is_valid():
    for p in (0.0, 0.3, 1.0):
        State(noisy_bell_state(p), (2, 2)).validate()
    assert np.allclose(noisy_bell_state(0.0), np.outer([1, 0, 0, 1], [1, 0, 0, 1]) / 2)
    with pytest.raises(ValueError):
        noisy_bell_state(1.2)


def test_comm_psucc_matches_closed_form(space):
    code = cat_code(2, 2.0, space)
    for mu, G, p in ((0.05, 1.0, 0.1), (0.07, 1.025, 0.25), (0.1, 1.1, 0.4)):
        ch = loss_amp_channel(mu, G, space)
        for herald in ("00", "00_11"):
            resp = logical_response(code, lambda op: comm_protocol(op, ch, p, herald, space, check=False))
            assert abs(resp.mean_success() - comm_psucc_closed(code.identity, mu, G, p, herald)) <= 1e-10


def test_comm_herald_ordering_for_even_code(space):
    code = binomial_code(2, 4, space)
    ch = loss_channel(0.05, space)
    p = 0.2
    only = logical_response(code, lambda op: comm_protocol(op, ch, p, "00", space, check=False))
    both = logical_response(code, lambda op: comm_protocol(op, ch, p, "00_11", space, check=False))
    assert only.mean_fidelity() >= both.mean_fidelity()
    assert only.mean_success() < both.mean_success()


def test_qutrit_matches_qubit_at_zero_damping(space):
    code = cat_code(2, 2.0, space)
    ch = thermal_channel(0.05, 0.5, space)
    rho = State.from_ket((code.zero + 1j * code.one) / np.sqrt(2))
    qubit = suppress_cf(rho, ch, None, ProtocolSpec(), space)
    qutrit = qutrit_protocol(rho, ch, 0.0, 0, space)
    assert trace_distance(qubit.unnormalized, qutrit.unnormalized) <= 1e-10


def test_qutrit_failure_branch_is_unsuppressed(space):
    code = cat_code(2, 2.0, space)
    ch = loss_channel(0.05, space)
    rho = State.from_ket((code.zero + code.one) / np.sqrt(2))
    p = 0.3
    fail = qutrit_protocol(rho, ch, p, 2, space)
    bare = apply(ch, rho).op
    assert np.abs(fail.unnormalized.op - p / 2 * bare).max() <= 1e-12


def test_qutrit_joint_output_matches_dq(space):
    ch = thermal_channel(0.05, 0.5, space)
    rho = _ket_state(space, 1, 2).op
    p = 0.25
    joint = qutrit_protocol(rho, ch, p, None, space)
    expect = np.zeros_like(joint.op)
    for l, k, op in paired_kraus(ch.params["mu"], ch.params["G"], space):
        par = 1 if (l - k) % 2 == 0 else -1
        expect += np.kron(op @ rho @ op.conj().T, qutrit_dq(p, par))
    assert np.abs(joint.op - expect).max() <= 1e-12


def test_qutrit_no_linear_term(space):
    code = cat_code(2, 2.0, space)
    ch = thermal_channel(0.05, 0.5, space)
    rho = State.from_ket((code.zero + code.one) / np.sqrt(2))
    ref = qutrit_protocol(rho, ch, 0.0, 0, space).normalized
    ps = np.array([1e-3, 2e-3, 5e-3, 1e-2])
    dev = [trace_distance(qutrit_protocol(rho, ch, p, 0, space).normalized, ref) for p in ps]
    slope = np.polyfit(np.log(ps), np.log(dev), 1)[0]
    assert slope >= 1.8


@settings(max_examples=15, deadline=None)
@given(st.floats(0.0, 0.3), st.integers(0, 12))
def test_psucc_matches_closed_form_for_fock_inputs(mu, n):
    space = FockSpace(40, 8)
    res = suppress_cf(_ket_state(space, n), loss_channel(mu, space), space=space)
    assert res.p_succ == pytest.approx(psucc_closed(_ket_state(space, n), mu, 1.0, 1), abs=1e-10)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 0.3))
def test_heralded_output_is_a_valid_state(seed, p):
    space = FockSpace(24, 6)
    rng = np.random.default_rng(seed)
    v = np.zeros(space.dim, dtype=complex)
    v[:8] = rng.normal(size=8) + 1j * rng.normal(size=8)
    res = suppress_cf(State.from_ket(v / np.linalg.norm(v)), loss_channel(0.1, space), qubit_damping(p), ProtocolSpec(), space)
    res.unnormalized.validate()
    assert 0 <= res.p_succ <= 1 + 1e-10
    assert res.normalized.weight == pytest.approx(1, abs=1e-12)
