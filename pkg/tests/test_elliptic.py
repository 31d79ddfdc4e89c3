import cmath
import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from semiclassical_jc.elliptic import (
    CubicPotential,
    WeierstrassInvariants,
    cubic_from_constants,
    invariants_from_cubic,
    log_sigma_path,
    w_sigma,
    w_zeta,
    wp,
    wp_inverse,
    wp_prime,
)
from semiclassical_jc.errors import PoleEvaluationError, ZeroCouplingError
from semiclassical_jc.model import ModelParams, PhasePoint, conserved_c, conserved_n
from semiclassical_jc.dopa import vector_field


def random_invariants(rng, scale=10.0):
    g2 = complex(rng.uniform(-scale, scale), rng.uniform(-scale, scale))
    g3 = complex(rng.uniform(-scale, scale), rng.uniform(-scale, scale))
    return WeierstrassInvariants.from_g2g3(g2, g3)


# ---------------------------------------------------------------------------
# cubic and invariants


def test_cubic_north_pole_constants():
    c = cubic_from_constants(0.5, 0.0, ModelParams(0.5, 0.0))
    assert (c.a0, c.a1, c.a2) == (pytest.approx(-1.0), pytest.approx(1.0), pytest.approx(1.0))


def test_cubic_south_pole_constants():
    c = cubic_from_constants(-0.5, 0.0, ModelParams(1.0, 0.0))
    assert (c.a0, c.a1, c.a2) == (pytest.approx(1.0), pytest.approx(1.0), pytest.approx(-1.0))


def test_cubic_zero_coupling_raises():
    with pytest.raises(ZeroCouplingError):
        cubic_from_constants(0.5, 0.0, ModelParams(0.0, 0.3))


def test_cubic_energy_identity_along_flow():
    # V(u) + u'^2/2 = 0 with u' taken from the equations of motion
    rng = np.random.default_rng(17)
    params = ModelParams(0.45, 0.3)
    for _ in range(50):
        vals = rng.normal(size=8) * 0.6
        pt = PhasePoint(
            complex(vals[0], vals[1]), complex(vals[2], vals[3]),
            complex(vals[4], vals[5]), complex(vals[6], vals[7]),
        )
        if abs(pt.chart_factor) < 0.2:
            continue
        n_val = conserved_n(pt)
        c_val = conserved_c(pt, params)
        cubic = cubic_from_constants(n_val, c_val, params)
        d = pt.chart_factor
        u = (1 - pt.zeta * pt.eta) / d
        rates = vector_field(pt, params)
        udot = (
            -2.0
            * (rates.zeta * pt.eta + pt.zeta * rates.eta)
            / d**2
        )
        v_u = params.lam**2 * (cubic.a0 + cubic.a1 * u + cubic.a2 * u**2 - u**3)
        assert abs(0.5 * udot**2 + v_u) < 1e-10 * max(1.0, abs(v_u))


def test_invariants_trivial_zero():
    inv = invariants_from_cubic(CubicPotential(0, 0, 0))
    assert inv.g2 == 0 and inv.g3 == 0 and inv.degenerate


def test_invariants_shifted_cubic_identity():
    # 4(u^3 + a2 u^2 + a1 u + a0) must equal 4v^3 - g2 v - g3 at v = u + a2/3
    rng = np.random.default_rng(23)
    for _ in range(100):
        a0, a1, a2 = (complex(x, y) for x, y in rng.normal(size=(3, 2)))
        inv = invariants_from_cubic(CubicPotential(a0, a1, a2))
        for u in rng.normal(size=(5, 2)) @ np.array([1, 1j]):
            lhs = 4 * (u**3 + a2 * u**2 + a1 * u + a0)
            v = u + a2 / 3
            rhs = 4 * v**3 - inv.g2 * v - inv.g3
            assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(lhs))


def test_invariants_example_value():
    inv = invariants_from_cubic(CubicPotential(-1.0, 1.0, 1.0))
    assert inv.g2 == pytest.approx(-8 / 3)
    assert inv.g3 == pytest.approx(136 / 27)  # -(4/3)(2/9 - 1) + 4 = 28/27 + 4


def test_discriminant_consistency_and_flag():
    rng = np.random.default_rng(5)
    for _ in range(50):
        inv = random_invariants(rng)
        assert inv.discriminant == pytest.approx(inv.g2**3 - 27 * inv.g3**2, rel=1e-12)
    assert WeierstrassInvariants.from_g2g3(12.0, -8.0).degenerate  # double root at e=1
    assert not WeierstrassInvariants.from_g2g3(4.0, 0.0).degenerate


# ---------------------------------------------------------------------------
# wp and friends


def test_wp_degenerate_inverse_square():
    inv = WeierstrassInvariants.from_g2g3(0.0, 0.0)
    assert wp(0.1, inv) == pytest.approx(100.0, rel=1e-14)
    assert w_zeta(0.25 + 0.5j, inv) == pytest.approx(1 / (0.25 + 0.5j), rel=1e-14)
    assert w_sigma(0.25 + 0.5j, inv) == (0.25 + 0.5j)


def test_wp_laurent_expansion_small_z():
    g2, g3 = 3.0 + 1.0j, -2.0 + 0.5j
    inv = WeierstrassInvariants.from_g2g3(g2, g3)
    for z in (0.03, 0.02 + 0.04j, -0.05j):
        head = 1 / z**2 + g2 * z**2 / 20 + g3 * z**4 / 28
        val = wp(z, inv)
        # next Laurent order is O(z^6); allow float noise on the ~1/z^2 scale
        assert abs(val - head) < abs(z) ** 6 + 1e-12 * abs(val)


def _laurent_seed(z, g2, g3, kmax=40):
    """Long Laurent sums for (wp, wp'), valid well inside the nearest pole."""
    c = np.zeros(kmax + 1, dtype=complex)
    c[2], c[3] = g2 / 20.0, g3 / 28.0
    for k in range(4, kmax + 1):
        c[k] = 3.0 * sum(c[m] * c[k - m] for m in range(2, k - 1)) / ((2 * k + 1) * (k - 3))
    p = 1 / z**2 + sum(c[k] * z ** (2 * k - 2) for k in range(2, kmax + 1))
    dp = -2 / z**3 + sum((2 * k - 2) * c[k] * z ** (2 * k - 3) for k in range(2, kmax + 1))
    return p, dp


def test_wp_against_ode_continuation_oracle():
    # continue wp'' = 6 wp^2 - g2/2 from a Laurent seed towards z = 1 and
    # compare with the duplication-based evaluator
    g2, g3 = 4.0, 0.0
    inv = WeierstrassInvariants.from_g2g3(g2, g3)
    z0 = 0.3
    p0, dp0 = _laurent_seed(z0, g2, g3)
    sol = solve_ivp(
        lambda s, y: [y[1], 6 * y[0] ** 2 - g2 / 2],
        (z0, 1.0),
        [p0, dp0],
        method="DOP853",
        rtol=1e-13,
        atol=1e-13,
    )
    assert abs(wp(1.0, inv) - sol.y[0, -1]) < 1e-8


def test_wp_defining_ode_residual_sample():
    rng = np.random.default_rng(31)
    for _ in range(100):
        inv = random_invariants(rng)
        if inv.degenerate:
            continue
        z = rng.uniform(0.05, 3.0) * cmath.exp(1j * rng.uniform(0, 2 * math.pi))
        p = wp(z, inv)
        dp = wp_prime(z, inv)
        res = abs(dp**2 - (4 * p**3 - inv.g2 * p - inv.g3))
        assert res < 1e-9 * (1 + abs(p) ** 3)


def test_double_periodicity():
    rng = np.random.default_rng(41)
    for _ in range(20):
        inv = random_invariants(rng, scale=5.0)
        if inv.degenerate:
            continue
        w1, w3 = inv.half_periods
        z = 0.31 + 0.17j
        assert abs(wp(z + 2 * w1, inv) - wp(z, inv)) < 1e-8 * max(1.0, abs(wp(z, inv)))
        assert abs(wp(z + 2 * w3, inv) - wp(z, inv)) < 1e-8 * max(1.0, abs(wp(z, inv)))


def test_homogeneity():
    rng = np.random.default_rng(43)
    inv = WeierstrassInvariants.from_g2g3(2.0 - 1.0j, 0.7 + 0.4j)
    for _ in range(20):
        c = complex(rng.uniform(0.5, 1.5), rng.uniform(-0.8, 0.8))
        scaled = WeierstrassInvariants.from_g2g3(inv.g2 / c**4, inv.g3 / c**6)
        z = complex(rng.uniform(0.2, 0.8), rng.uniform(-0.5, 0.5))
        assert abs(wp(c * z, scaled) - wp(z, inv) / c**2) < 1e-9 * max(
            1.0, abs(wp(z, inv) / c**2)
        )


def test_zeta_sigma_derivative_relations():
    rng = np.random.default_rng(47)
    inv = WeierstrassInvariants.from_g2g3(3.2 + 0.9j, -1.1 + 2.2j)
    h = 1e-5
    checked = 0
    while checked < 100:
        z = complex(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5))
        if abs(z) < 0.2:
            continue
        try:
            dz = (w_zeta(z + h, inv) - w_zeta(z - h, inv)) / (2 * h)
            p = wp(z, inv)
            ds = (w_sigma(z + h, inv) - w_sigma(z - h, inv)) / (2 * h)
            s = w_sigma(z, inv)
            zt = w_zeta(z, inv)
        except PoleEvaluationError:
            continue
        assert abs(dz + p) < 1e-8 * (1 + abs(p))
        assert abs(ds / s - zt) < 1e-8 * (1 + abs(zt))
        checked += 1


def test_sigma_odd_and_near_zero():
    inv = WeierstrassInvariants.from_g2g3(1.5 - 0.5j, 0.3 + 0.8j)
    rng = np.random.default_rng(53)
    for _ in range(20):
        z = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
        assert w_sigma(-z, inv) == pytest.approx(-w_sigma(z, inv), rel=1e-12, abs=1e-12)
    z = 0.01 + 0.005j
    assert w_sigma(z, inv) == pytest.approx(z, rel=1e-8)
    assert w_zeta(z, inv) == pytest.approx(1 / z, rel=1e-7)


def test_wp_pole_error():
    inv = WeierstrassInvariants.from_g2g3(4.0, 0.0)
    with pytest.raises(PoleEvaluationError):
        wp(1e-12, inv)
    w1, _ = inv.half_periods
    with pytest.raises(PoleEvaluationError):
        wp(2 * w1 + 1e-12, inv)


def test_wp_inverse_round_trip():
    rng = np.random.default_rng(59)
    inv = WeierstrassInvariants.from_g2g3(2.4 + 1.1j, -0.9 + 0.3j)
    for _ in range(40):
        z0 = complex(rng.uniform(0.15, 1.2), rng.uniform(-1.0, 1.0))
        target = wp(z0, inv)
        a = wp_inverse(target, inv, branch_hint=z0)
        assert abs(a - z0) < 1e-10 * max(1.0, abs(z0))


def test_wp_inverse_principal_degenerate():
    inv = WeierstrassInvariants.from_g2g3(0.0, 0.0)
    assert wp_inverse(100.0, inv) == pytest.approx(0.1)


def test_log_sigma_path_matches_direct_log():
    inv = WeierstrassInvariants.from_g2g3(3.0 + 1.0j, -2.0 + 0.5j)
    zs = 0.3 + np.linspace(0.0, 1.0, 33) * (1.2 + 1.7j)
    path = log_sigma_path(zs, inv)
    direct = np.log(w_sigma(zs[-1], inv) / w_sigma(zs[0], inv))
    winding = (path[-1] - direct) / (2j * np.pi)
    assert abs(winding - round(winding.real)) < 1e-9
