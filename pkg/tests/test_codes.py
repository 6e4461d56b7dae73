from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bosupp.codes import (
    _gkp_raw,
    binomial_code,
    cat_code,
    codespace_identity,
    gkp_code,
    haar_coefficients,
    haar_sample,
    logical_state,
    moments,
    parity_class,
    parse_code,
    squeezed_cat,
)
from bosupp.errors import ConfigError, TruncationError
from bosupp.fock import FockSpace, coherent_ket, fidelity, fock_ket, ladder, number_function, parity


def _check_invariants(code):
    s = code.space
    assert abs(np.linalg.norm(code.zero) - 1) <= 1e-12
    assert abs(np.linalg.norm(code.one) - 1) <= 1e-12
    assert abs(np.vdot(code.zero, code.one)) <= 1e-10
    for v in (code.zero, code.one):
        assert np.sum(np.abs(v[s.n_valid + 1 :]) ** 2) <= 1e-8
    c = codespace_identity(code)
    assert np.trace(c).real == pytest.approx(1, abs=1e-12)
    assert np.linalg.matrix_rank(c, tol=1e-9) == 2


def test_cat2_is_even_and_odd_cat(space):
    alpha = 1.3
    code = cat_code(2, alpha, space)
    big = FockSpace(80, 0)
    plus = coherent_ket(big, alpha) + coherent_ket(big, -alpha)
    minus = coherent_ket(big, alpha) - coherent_ket(big, -alpha)
    plus, minus = plus[: space.dim] / np.linalg.norm(plus), minus[: space.dim] / np.linalg.norm(minus)
    assert abs(abs(np.vdot(plus, code.zero)) - 1) < 1e-12
    assert abs(abs(np.vdot(minus, code.one)) - 1) < 1e-12
    assert parity_class(code).kind == "opposite"
    _check_invariants(code)


def test_cat_phase_sum_convention(space):
    # |μ_L⟩ ∝ Σ_k e^{-iπμk} |α ω^k⟩
    n, alpha = 4, 2.0
    code = cat_code(n, alpha, space)
    big = FockSpace(90, 0)
    for mu, word in ((0, code.zero), (1, code.one)):
        v = sum(np.exp(-1j * np.pi * mu * k) * coherent_ket(big, alpha * np.exp(2j * np.pi * k / n)) for k in range(n))
        v = v[: space.dim] / np.linalg.norm(v)
        assert abs(abs(np.vdot(v, word)) - 1) < 1e-12


def test_cat_parity_classes(space):
    assert parity_class(cat_code(4, 2.0, space)).kind == "like-even"
    assert parity_class(cat_code(2, 2.0, space)).kind == "opposite"
    assert parity_class(cat_code(6, 1.916, space)).kind == "opposite"
    assert parity_class(cat_code(8, 2.0, space)).rotation_order == 4
    assert parity_class(cat_code(4, 2.0, space)).rotation_order == 2


def test_cat_errors(space):
    with pytest.raises(ValueError):
        cat_code(3, 2.0, space)
    with pytest.raises(ValueError):
        cat_code(2, 0.0, space)


@pytest.mark.parametrize("n", [2, 4, 6, 8])
def test_cat_rotation_eigenvectors(space, n):
    code = cat_code(n, 2.0, space)
    rot = number_function(space, lambda m: np.exp(2j * np.pi * m / n))
    g = space.n_valid + 1
    assert np.abs((rot @ code.zero - code.zero)[:g]).max() <= 1e-12
    assert np.abs((rot @ code.one + code.one)[:g]).max() <= 1e-12


def test_binomial_code_definition(space):
    code = binomial_code(2, 4, space)
    zero = np.zeros(space.dim)
    one = np.zeros(space.dim)
    for j in range(5):
        (zero if j % 2 == 0 else one)[2 * j] = np.sqrt(comb(4, j))
    assert np.allclose(code.zero, zero / np.linalg.norm(zero), atol=1e-15)
    assert np.allclose(code.one, one / np.linalg.norm(one), atol=1e-15)
    assert set(np.flatnonzero(np.abs(code.zero) + np.abs(code.one))) == {0, 2, 4, 6, 8}
    assert parity_class(code).kind == "like-even"
    _check_invariants(code)


def test_binomial_trivial_encoding(space):
    code = binomial_code(1, 1, space)
    assert np.allclose(code.zero, fock_ket(space, 0))
    assert np.allclose(code.one, fock_ket(space, 1))
    assert parity_class(code).kind == "opposite"


def test_binomial_support_must_fit(space):
    with pytest.raises((ValueError, TruncationError)):
        binomial_code(8, 4, space)


def test_binomial_moments_exact(space):
    # direct oracle: C has weights C(4,j)/16 on |2j⟩
    m = moments(binomial_code(2, 4, space))
    w = np.array([comb(4, j) for j in range(5)]) / 16
    n = 2 * np.arange(5)
    assert m.n_mean == pytest.approx(float(w @ n), abs=1e-12) and m.n_mean == pytest.approx(4, abs=1e-12)
    assert m.n2 == pytest.approx(float(w @ n**2), abs=1e-12) and m.n2 == pytest.approx(20, abs=1e-12)


def test_binomial_g_a2_matches_direct_matrix(space):
    code = binomial_code(2, 4, space)
    c = code.identity
    a, _ = ladder(space)
    y = a @ a
    tr = np.trace(c @ y)
    assert abs(tr) <= 1e-12
    ref = np.trace(c @ y @ c @ y.conj().T).real + abs(tr) ** 2
    assert moments(code).g_a2 == pytest.approx(ref, abs=1e-12)


def test_cat6_moments_near_binomial(space):
    m = moments(cat_code(6, 1.916, space))
    assert m.n_mean == pytest.approx(4, rel=0.02)
    assert m.n2 == pytest.approx(20, rel=0.02)
    assert abs(m.a2) <= 1e-10


def test_moment_invariants(space):
    for code in (cat_code(2, 2.0, space), binomial_code(2, 4, space), cat_code(4, 1.5, space)):
        m = moments(code)
        assert m.n_mean >= 0
        assert m.n2 >= m.n_mean**2 - 1e-12


def test_like_even_codes_have_unit_parity(space):
    for code in (binomial_code(2, 4, space), cat_code(4, 2.0, space), cat_code(8, 2.0, space)):
        p = parity(space)
        assert np.vdot(code.zero, p @ code.zero).real == pytest.approx(1, abs=1e-10)
        assert np.vdot(code.one, p @ code.one).real == pytest.approx(1, abs=1e-10)


def test_gkp_large_delta_is_vacuum_dominated(space):
    z, _ = _gkp_raw(0.9, space)
    assert abs(z[0]) ** 2 > 0.9


def test_gkp_raw_overlap_and_orthogonalized_code():
    space = FockSpace(120, 8)
    z, o = _gkp_raw(0.3, space)
    assert abs(np.vdot(z, o)) <= 1e-3
    code = gkp_code(0.3, space)
    assert abs(np.vdot(code.zero, code.one)) <= 1e-10
    _check_invariants(code)


def test_gkp_needs_room():
    with pytest.raises(TruncationError):
        gkp_code(0.3, FockSpace(40, 8))
    with pytest.raises(ValueError):
        gkp_code(1.5, FockSpace(40, 8))


def test_gkp_peaks_sit_on_the_lattice():
    space = FockSpace(120, 8)
    code = gkp_code(0.3, space)
    from bosupp.codes import _hermite_functions

    x = np.linspace(-6, 6, 2401)
    psi = _hermite_functions(space.dim, x)
    wave0 = np.abs(code.zero.conj() @ psi) ** 2
    wave1 = np.abs(code.one.conj() @ psi) ** 2
    near = lambda c: np.abs(x - c) < 0.2
    assert wave0[near(0.0)].max() > 10 * wave0[near(np.sqrt(np.pi))].max()
    assert wave1[near(np.sqrt(np.pi))].max() > 10 * wave1[near(0.0)].max()


def test_squeezed_cat_zero_db_is_cat(space):
    a, b = squeezed_cat(2, 2.0, 0.0, space), cat_code(2, 2.0, space)
    assert np.array_equal(a.zero, b.zero) and np.array_equal(a.one, b.one)


def test_squeezed_cat_properties():
    space = FockSpace(60, 8)
    sq = squeezed_cat(2, 2.0, 6.0, space)
    assert abs(np.vdot(sq.zero, sq.one)) <= 1e-10
    assert moments(sq).n_mean > moments(cat_code(2, 2.0, space)).n_mean
    _check_invariants(sq)
    with pytest.raises(ValueError):
        squeezed_cat(2, 2.0, -1.0, space)


def test_logical_state_examples(space):
    code = cat_code(2, 2.0, space)
    s = logical_state(code, 1, 0)
    assert np.allclose(s.op, np.outer(code.zero, code.zero.conj()))
    plus = logical_state(code, 1 / np.sqrt(2), 1 / np.sqrt(2))
    assert fidelity(code.zero, plus) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        logical_state(code, 1, 1)


def test_haar_sample_deterministic(space):
    code = binomial_code(2, 4, space)
    assert np.array_equal(haar_sample(code, 7).op, haar_sample(code, 7).op)
    assert not np.array_equal(haar_sample(code, 7).op, haar_sample(code, 8).op)


def test_haar_first_moment_matches_codespace_identity(space):
    # E[ρ_L] = C; logical Bloch components average to zero within 3 standard errors
    c0, c1 = haar_coefficients(2024, 100_000)
    rho00 = np.abs(c0) ** 2
    rho01 = c0 * np.conj(c1)
    for sample, target in ((rho00, 0.5), (rho01.real, 0.0), (rho01.imag, 0.0)):
        se = sample.std() / np.sqrt(sample.size)
        assert abs(sample.mean() - target) <= 3 * se


def test_haar_second_moment_identity():
    rng = np.random.default_rng(5)
    c0, c1 = haar_coefficients(11, 100_000)
    psi = np.stack([c0, c1], axis=-1)
    for _ in range(3):
        m1 = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        m2 = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        m1, m2 = m1 + m1.conj().T, m2 + m2.conj().T
        t1 = np.einsum("si,ij,sj->s", psi.conj(), m1, psi)
        t2 = np.einsum("si,ij,sj->s", psi.conj(), m2, psi)
        sample = np.real(t1 * t2)
        target = (np.trace(m1 @ m2) + np.trace(m1) * np.trace(m2)).real / 6
        assert abs(sample.mean() - target) <= 4 * sample.std() / np.sqrt(sample.size)


def test_parse_code_descriptors(space):
    assert parse_code("cat(2,2)", space).name == cat_code(2, 2.0, space).name
    assert parse_code("bin(2,4)", space).params == binomial_code(2, 4, space).params
    assert "sqcat" in parse_code("sqcat(2,2,6dB)", FockSpace(60, 8)).name
    assert "gkp" in parse_code("gkp(0.3)", FockSpace(120, 8)).name
    with pytest.raises(ConfigError):
        parse_code("cat(2)", space)
    with pytest.raises(ConfigError):
        parse_code("surface(3)", space)


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([2, 4, 6, 8]), st.floats(1.0, 2.5))
def test_cat_codes_satisfy_invariants(n, alpha):
    space = FockSpace(40, 8)
    code = cat_code(n, alpha, space)
    _check_invariants(code)
    expected = "opposite" if (n // 2) % 2 else "like-even"
    assert parity_class(code).kind == expected


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 4), st.integers(1, 6))
def test_binomial_codes_satisfy_invariants(n, kappa):
    space = FockSpace(40, 8)
    if n * kappa > space.n_valid:
        return
    code = binomial_code(n, kappa, space)
    _check_invariants(code)
    assert moments(code).n_mean == pytest.approx(n * kappa / 2, abs=1e-12)
