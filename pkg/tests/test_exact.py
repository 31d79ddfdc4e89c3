import cmath
import math

import numpy as np
import pytest

from semiclassical_jc.errors import TruncationWarning
from semiclassical_jc.exact import (
    basis_ket,
    block_c_propagator,
    build_hamiltonian,
    closed_form_unitary,
    dense_oracle,
    full_propagator_element,
    index_down,
    index_up,
    product_coherent_vector,
    rabi_frequency,
    survival_up_vacuum,
)
from semiclassical_jc.model import (
    CanonicalCoherentState,
    ModelParams,
    SpinCoherentState,
    canonical_overlap,
    spin_overlap,
)


def test_rabi_frequency_examples():
    assert rabi_frequency(1, ModelParams(0.5, 0.0)) == pytest.approx(0.5)
    assert rabi_frequency(1, ModelParams(0.0, 0.6)) == pytest.approx(0.3)
    assert rabi_frequency(4, ModelParams(0.3, 0.4)) == pytest.approx(math.sqrt(0.4))
    with pytest.raises(ValueError):
        rabi_frequency(0, ModelParams(0.5, 0.0))


def test_block_identity_at_zero_time():
    blk = block_c_propagator(3, 0.0, ModelParams(0.7, -0.2))
    assert blk.a_t == pytest.approx(1.0)
    assert blk.b_t == pytest.approx(0.0)


def test_block_full_transfer():
    blk = block_c_propagator(1, math.pi, ModelParams(0.5, 0.0))
    assert blk.a_t == pytest.approx(0.0, abs=1e-15)
    assert blk.b_t == pytest.approx(-1j, abs=1e-15)


def test_block_matches_two_level_exponential():
    rng = np.random.default_rng(13)
    for _ in range(30):
        n = int(rng.integers(1, 12))
        params = ModelParams(rng.uniform(0, 1.2), rng.uniform(-1, 1))
        T = rng.uniform(0, 15)
        c_block = np.array(
            [
                [params.delta / 2, params.lam * math.sqrt(n)],
                [params.lam * math.sqrt(n), -params.delta / 2],
            ]
        )
        evals, vecs = np.linalg.eigh(c_block)
        ref = (vecs * np.exp(-1j * evals * T)) @ vecs.T
        got = block_c_propagator(n, T, params).matrix
        assert np.max(np.abs(got - ref)) < 1e-13


def test_block_unitarity_property():
    rng = np.random.default_rng(29)
    for _ in range(200):
        n = int(rng.integers(1, 40))
        params = ModelParams(rng.uniform(0, 2), rng.uniform(-2, 2))
        blk = block_c_propagator(n, rng.uniform(0, 30), params)
        assert abs(abs(blk.a_t) ** 2 + abs(blk.b_t) ** 2 - 1.0) < 1e-12


def test_hamiltonian_hermitian_and_layout():
    params = ModelParams(0.4, 0.3)
    h = build_hamiltonian(params, 8).matrix
    assert np.max(np.abs(h - h.conjugate().T)) < 1e-14
    assert h[index_up(0), index_up(0)] == pytest.approx(0.5 * 1.3)
    assert h[index_up(0), index_down(1)] == pytest.approx(0.4)


def test_dense_oracle_identity_and_unitarity():
    params = ModelParams(0.6, -0.1)
    assert np.max(np.abs(dense_oracle(0.0, params, 16) - np.eye(34))) < 1e-13
    u = dense_oracle(7.3, params, 16)
    assert np.max(np.abs(u @ u.conjugate().T - np.eye(34))) < 1e-10


def test_dense_oracle_commutes_with_excitation_number():
    params = ModelParams(0.8, 0.4)
    n_max = 12
    dim = 2 * (n_max + 1)
    n_op = np.zeros((dim, dim))
    for n in range(n_max + 1):
        n_op[index_up(n), index_up(n)] = n + 0.5
        n_op[index_down(n), index_down(n)] = n - 0.5
    u = dense_oracle(3.1, params, n_max)
    assert np.max(np.abs(u @ n_op - n_op @ u)) < 1e-10


def test_closed_form_matches_dense_oracle():
    for lam, delta in [(0.1, 0.0), (0.5, 0.2), (1.0, -0.3)]:
        params = ModelParams(lam, delta)
        for T in (0.1, 1.0, 5.0, 20.0):
            dev = np.max(
                np.abs(closed_form_unitary(T, params, 24) - dense_oracle(T, params, 24))
            )
            assert dev < 1e-9


def test_up_vacuum_survival_resonant():
    params = ModelParams(0.5, 0.0)
    for T in (0.3, 2.0, 7.7):
        expected = cmath.exp(-0.5j * T) * math.cos(0.5 * T)
        assert survival_up_vacuum(T, params) == pytest.approx(expected, abs=1e-14)
        ket = basis_ket(True, 0, 16)
        el = full_propagator_element(ket, ket, T, params, 16)
        assert el.value == pytest.approx(expected, abs=1e-12)


def test_survival_periodicity():
    for lam, delta in [(0.3, 0.0), (0.7, 0.5), (1.0, -0.8)]:
        params = ModelParams(lam, delta)
        period = math.pi / rabi_frequency(1, params)
        for T in np.linspace(0.1, 6.0, 7):
            s1 = abs(survival_up_vacuum(T, params)) ** 2
            s2 = abs(survival_up_vacuum(T + period, params)) ** 2
            assert s1 == pytest.approx(s2, abs=1e-12)


def test_free_evolution_is_product_of_phases():
    params = ModelParams(0.0, 0.35)
    spin_i = SpinCoherentState(0.9, 0.4)
    spin_f = SpinCoherentState(1.2, 1.1)
    osc_i = CanonicalCoherentState(0.5, -0.2)
    osc_f = CanonicalCoherentState(-0.3, 0.6)
    T = 4.2
    vi = product_coherent_vector(osc_i, spin_i, 32)
    vf = product_coherent_vector(osc_f, spin_f, 32)
    got = full_propagator_element(vf, vi, T, params, 32).value

    a_i, b_f = osc_i.alpha, osc_f.alpha.conjugate()
    osc_part = cmath.exp(-0.5 * abs(a_i) ** 2 - 0.5 * abs(b_f) ** 2 + b_f * a_i * cmath.exp(-1j * T))
    ci, si = math.cos(spin_i.theta / 2), math.sin(spin_i.theta / 2)
    cf, sf = math.cos(spin_f.theta / 2), math.sin(spin_f.theta / 2)
    dphi = spin_f.phi - spin_i.phi
    om = 1.0 + params.delta
    spin_part = cf * ci * cmath.exp(0.5j * dphi) * cmath.exp(-0.5j * om * T) + sf * si * cmath.exp(
        -0.5j * dphi
    ) * cmath.exp(0.5j * om * T)
    assert got == pytest.approx(osc_part * spin_part, abs=1e-12)


def test_coherent_sandwich_matches_oracle():
    params = ModelParams(0.4, 0.15)
    spin_i = SpinCoherentState(0.8, 0.3)
    spin_f = SpinCoherentState(1.1, 0.9)
    osc_i = CanonicalCoherentState(0.4, -0.3)
    osc_f = CanonicalCoherentState(-0.2, 0.5)
    vi = product_coherent_vector(osc_i, spin_i, 32)
    vf = product_coherent_vector(osc_f, spin_f, 32)
    el = full_propagator_element(vf, vi, 3.7, params, 32)
    ref = vf.conjugate() @ dense_oracle(3.7, params, 32) @ vi
    assert abs(el.value - ref) < 1e-9
    el0 = full_propagator_element(vf, vi, 0.0, params, 32)
    overlap = spin_overlap(spin_f, spin_i) * canonical_overlap(osc_f, osc_i)
    assert el0.value == pytest.approx(overlap, abs=1e-12)


def test_truncation_warning():
    osc = CanonicalCoherentState.from_alpha(3.0)
    spin = SpinCoherentState(0.3, 0.0)
    with pytest.warns(TruncationWarning):
        product_coherent_vector(osc, spin, 10)
