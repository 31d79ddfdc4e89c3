import cmath
import math

import numpy as np
import pytest

from semiclassical_jc.errors import ChartDegeneracyError
from semiclassical_jc.model import (
    CanonicalCoherentState,
    ModelParams,
    PhasePoint,
    SpinCoherentState,
    angles_from_stereographic,
    canonical_overlap,
    conserved_c,
    conserved_c_reciprocal,
    conserved_n,
    conserved_n_reciprocal,
    hamiltonian,
    hamiltonian_angles,
    spin_overlap,
    stereographic_from_angles,
)


def random_point(rng, scale=0.8):
    vals = rng.normal(size=8) * scale
    return PhasePoint(
        alpha=complex(vals[0], vals[1]),
        beta=complex(vals[2], vals[3]),
        zeta=complex(vals[4], vals[5]),
        eta=complex(vals[6], vals[7]),
    )


def test_hamiltonian_north_pole():
    origin = PhasePoint(0, 0, 0, 0)
    for lam, delta in [(0.1, 0.0), (0.7, -0.4), (1.3, 2.0)]:
        assert hamiltonian(origin, ModelParams(lam, delta)) == pytest.approx(
            (1 + delta) / 2
        )


def test_hamiltonian_south_pole_limit():
    params = ModelParams(0.5, 0.0)
    # reciprocal-chart value at the pole itself
    assert conserved_n_reciprocal(0, 0, 0, 0) == pytest.approx(-0.5)
    # large-|zeta| limit of the primary chart approaches -1/2
    big = PhasePoint(0, 0, 1e7, 1e7)
    assert hamiltonian(big, params) == pytest.approx(-0.5, abs=1e-10)


def test_hamiltonian_matches_real_coordinate_form():
    rng = np.random.default_rng(3)
    params = ModelParams(0.5, 0.2)
    for _ in range(50):
        theta = rng.uniform(0.05, math.pi - 0.05)
        phi = rng.uniform(0, 2 * math.pi)
        p, q = rng.normal(size=2)
        zeta = math.tan(theta / 2) * cmath.exp(1j * phi)
        point = PhasePoint(
            alpha=(q + 1j * p) / math.sqrt(2),
            beta=(q - 1j * p) / math.sqrt(2),
            zeta=zeta,
            eta=zeta.conjugate(),
        )
        h_complex = hamiltonian(point, params)
        h_real = hamiltonian_angles(theta, phi, p, q, params)
        assert h_complex.imag == pytest.approx(0.0, abs=1e-12)
        assert h_complex.real == pytest.approx(h_real, abs=1e-12)


def test_conserved_values_at_poles():
    params = ModelParams(0.3, 0.7)
    origin = PhasePoint(0, 0, 0, 0)
    assert conserved_n(origin) == pytest.approx(0.5)
    assert conserved_c(origin, params) == pytest.approx(params.delta / 2)
    assert conserved_c_reciprocal(0, 0, 0, 0, params) == pytest.approx(-params.delta / 2)


def test_h_equals_n_plus_c_property():
    rng = np.random.default_rng(11)
    params = ModelParams(0.8, -0.6)
    checked = 0
    while checked < 10_000:
        pt = random_point(rng)
        if abs(pt.chart_factor) <= 0.1:
            continue
        h = hamiltonian(pt, params)
        n = conserved_n(pt)
        c = conserved_c(pt, params)
        assert abs(h - n - c) < 1e-12 * max(1.0, abs(h))
        checked += 1


def test_chart_degeneracy_raises():
    pt = PhasePoint(0.1, 0.2, 1.0, -1.0 + 1e-12)
    with pytest.raises(ChartDegeneracyError):
        hamiltonian(pt, ModelParams(0.5, 0.0))


def test_stereographic_examples_and_round_trip():
    z, e = stereographic_from_angles(SpinCoherentState(0.0, 1.234))
    assert z == 0 and e == 0
    z, e = stereographic_from_angles(SpinCoherentState(math.pi / 2, 0.0))
    assert z == pytest.approx(1.0) and e == pytest.approx(1.0)
    z, e = stereographic_from_angles(SpinCoherentState(math.pi / 2, math.pi / 2))
    assert z == pytest.approx(1j, abs=1e-15) and e == pytest.approx(-1j, abs=1e-15)

    rng = np.random.default_rng(7)
    for _ in range(200):
        state = SpinCoherentState(rng.uniform(0.05, math.pi - 0.05), rng.uniform(0, 2 * math.pi))
        zeta, eta = stereographic_from_angles(state)
        back = angles_from_stereographic(zeta)
        assert back.theta == pytest.approx(state.theta, abs=1e-12)
        assert back.phi == pytest.approx(state.phi, abs=1e-12)
        assert eta == pytest.approx(zeta.conjugate())
    with pytest.raises(ChartDegeneracyError):
        stereographic_from_angles(SpinCoherentState(math.pi, 0.0))


def test_spin_overlap_examples():
    s = SpinCoherentState(0.7, 1.1)
    assert abs(spin_overlap(s, s)) == pytest.approx(1.0)
    up = SpinCoherentState(0.0, 0.0)
    down = SpinCoherentState(math.pi, 0.0)
    assert abs(spin_overlap(down, up)) == pytest.approx(0.0, abs=1e-15)


def test_spin_overlap_is_zero_time_block_combination():
    # the closed-form propagator at T = 0 has a = 1, b = 0; the remaining
    # combination of half-angle factors must equal the overlap
    rng = np.random.default_rng(2)
    for _ in range(40):
        si = SpinCoherentState(rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi))
        sf = SpinCoherentState(rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi))
        a, b = 1.0, 0.0
        ci, s_i = math.cos(si.theta / 2), math.sin(si.theta / 2)
        cf, s_f = math.cos(sf.theta / 2), math.sin(sf.theta / 2)
        dphi = sf.phi - si.phi
        sphi = sf.phi + si.phi
        combo = (
            a * cf * ci * cmath.exp(0.5j * dphi)
            + b * cf * s_i * cmath.exp(0.5j * sphi)
            - b.conjugate() * s_f * ci * cmath.exp(-0.5j * sphi)
            + a.conjugate() * s_f * s_i * cmath.exp(-0.5j * dphi)
        )
        assert combo == pytest.approx(spin_overlap(sf, si), abs=1e-14)


def test_overlap_modulus_bounds():
    rng = np.random.default_rng(9)
    for _ in range(100):
        si = SpinCoherentState(rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi))
        sf = SpinCoherentState(rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi))
        assert abs(spin_overlap(sf, si)) <= 1.0 + 1e-12
        oi = CanonicalCoherentState(*rng.normal(size=2))
        of = CanonicalCoherentState(*rng.normal(size=2))
        assert abs(canonical_overlap(of, oi)) <= 1.0 + 1e-12


def test_canonical_overlap_examples():
    o = CanonicalCoherentState(0.4, -0.9)
    assert abs(canonical_overlap(o, o)) == pytest.approx(1.0)
    unit = CanonicalCoherentState.from_alpha(1.0)
    vac = CanonicalCoherentState(0.0, 0.0)
    assert abs(canonical_overlap(vac, unit)) == pytest.approx(math.exp(-0.5))
    rng = np.random.default_rng(4)
    for _ in range(50):
        oi = CanonicalCoherentState(*rng.normal(size=2))
        of = CanonicalCoherentState(*rng.normal(size=2))
        gauss = math.exp(-abs(of.alpha - oi.alpha) ** 2)
        assert abs(canonical_overlap(of, oi)) ** 2 == pytest.approx(gauss, rel=1e-12)


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(float("inf"), 0.0)
    with pytest.raises(ValueError):
        ModelParams(0.5, 0.0, spin_s=0.0)
    with pytest.raises(ValueError):
        SpinCoherentState(-0.1, 0.0)
