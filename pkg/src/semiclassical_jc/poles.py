"""Linearized dynamics about the two fixed points of the complexified flow.

North pole (|up,0>): expansion in (delta_zeta, beta, delta_eta, alpha) with
hyperbolic time dependence at rate Omega_N = sqrt(lam^2 - delta^2/4); the
same closed forms remain valid for delta^2 > 4 lam^2 through complex
cosh/sinh, where they turn oscillatory.

South pole (|down,0>): the reciprocal variables rho = 1/zeta, sigma = 1/eta
live only in this module; the expansion in (delta_rho, alpha, delta_sigma,
beta) is always oscillatory with Omega_S = sqrt(lam^2 + delta^2/4), which
coincides with the n = 1 Rabi frequency of the exact block.

The closed forms are written so their time derivative matches the linear
generator identically for every detuning; the detuning corrections multiply
sinh/Omega (respectively sin/Omega) terms.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .dopa import BoundaryData, integrate_ivp, shoot
from .model import ModelParams, PhasePoint

__all__ = [
    "PoleLinearization",
    "ReciprocalBoundaryData",
    "north_matrix",
    "south_matrix",
    "north_bvp_solution",
    "south_bvp_solution",
    "nonlinear_vs_linear_error",
]


@dataclass(frozen=True)
class PoleLinearization:
    """4x4 generator of the linearized flow with its frequency data.

    ``variables`` names the coordinate ordering of ``system_matrix``; the
    matrix is block diagonal in two invariant 2x2 subspaces and traceless
    (conservative flow, no attractors).
    """

    pole: str
    system_matrix: np.ndarray
    omega_m: float
    omega_pole: complex
    variables: tuple[str, str, str, str]


@dataclass(frozen=True)
class ReciprocalBoundaryData:
    """South-pole boundary data in the reciprocal chart.

    rho(0) = 1/zeta(0) and sigma(T) = 1/eta(T) are the given spin values;
    alpha(0) and beta(T) are the oscillator values, as in the primary chart.
    """

    alpha_initial: complex
    rho_initial: complex
    beta_final: complex
    sigma_final: complex
    horizon: float


def north_matrix(params: ModelParams) -> PoleLinearization:
    """Generator of the flow linearized about the north pole.

    d/dt (dzeta, beta, deta, alpha) = i M (dzeta, beta, deta, alpha) with
    invariant pairs (dzeta, beta) and (deta, alpha); frequencies
    omega_m = 1 + delta/2 and Omega_N = sqrt(lam^2 - delta^2/4).
    """
    lam, delta = params.lam, params.delta
    m = 1j * np.array(
        [
            [1.0 + delta, -lam, 0.0, 0.0],
            [lam, 1.0, 0.0, 0.0],
            [0.0, 0.0, -1.0 - delta, lam],
            [0.0, 0.0, -lam, -1.0],
        ],
        dtype=complex,
    )
    omega_n = cmath.sqrt(complex(lam**2 - delta**2 / 4.0))
    return PoleLinearization(
        pole="north",
        system_matrix=m,
        omega_m=1.0 + delta / 2.0,
        omega_pole=omega_n,
        variables=("delta_zeta", "beta", "delta_eta", "alpha"),
    )


def south_matrix(params: ModelParams) -> PoleLinearization:
    """Generator of the flow linearized about the south pole (reciprocal chart).

    d/dt (drho, alpha, dsigma, beta) = i M (...); Omega_S = sqrt(lam^2 +
    delta^2/4) is real for all parameters, so the motion stays oscillatory.
    """
    lam, delta = params.lam, params.delta
    m = 1j * np.array(
        [
            [-1.0 - delta, -lam, 0.0, 0.0],
            [-lam, -1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0 + delta, lam],
            [0.0, 0.0, lam, 1.0],
        ],
        dtype=complex,
    )
    omega_s = math.sqrt(lam**2 + delta**2 / 4.0)
    return PoleLinearization(
        pole="south",
        system_matrix=m,
        omega_m=1.0 + delta / 2.0,
        omega_pole=omega_s,
        variables=("delta_rho", "alpha", "delta_sigma", "beta"),
    )


def _cosh_sinc(x: complex) -> tuple[complex, complex]:
    """(cosh x, sinh x / x) with the x -> 0 limit."""
    if abs(x) < 1e-8:
        return 1.0 + x * x / 2.0, 1.0 + x * x / 6.0
    return cmath.cosh(x), cmath.sinh(x) / x


def north_bvp_solution(boundary: BoundaryData, params: ModelParams, t: float) -> PhasePoint:
    """Linearized solution about the north pole meeting the boundary data.

    Satisfies d/dt per :func:`north_matrix` exactly; zeta(0), alpha(0) and
    eta(T), beta(T) reproduce the boundary values identically.  The returned
    PhasePoint holds (alpha, beta, delta_zeta, delta_eta).
    """
    lam, delta = params.lam, params.delta
    T = boundary.horizon
    om = 1.0 + delta / 2.0
    on = cmath.sqrt(complex(lam**2 - delta**2 / 4.0))
    zp, ap = boundary.zeta_initial, boundary.alpha_initial
    bpp, epp = boundary.beta_final, boundary.eta_final

    ch_t, sc_t = _cosh_sinc(on * T)
    dn = ch_t - 0.5j * delta * T * sc_t  # cosh(On T) - i (delta/2On) sinh(On T)
    # unknown initial values of the two 2x2 boundary problems
    b0 = (bpp * cmath.exp(-1j * om * T) - 1j * lam * T * sc_t * zp) / dn
    e0 = (epp * cmath.exp(1j * om * T) - 1j * lam * T * sc_t * ap) / dn

    ch, sc = _cosh_sinc(on * t)
    s = t * sc  # sinh(On t)/On
    dzeta = cmath.exp(1j * om * t) * (zp * ch + 1j * s * (0.5 * delta * zp - lam * b0))
    beta = cmath.exp(1j * om * t) * (b0 * ch + 1j * s * (lam * zp - 0.5 * delta * b0))
    deta = cmath.exp(-1j * om * t) * (e0 * ch + 1j * s * (-0.5 * delta * e0 + lam * ap))
    alpha = cmath.exp(-1j * om * t) * (ap * ch + 1j * s * (-lam * e0 + 0.5 * delta * ap))
    return PhasePoint(alpha=alpha, beta=beta, zeta=dzeta, eta=deta)


def south_bvp_solution(
    boundary: ReciprocalBoundaryData, params: ModelParams, t: float
) -> PhasePoint:
    """Linearized solution about the south pole in reciprocal variables.

    The (drho, alpha) pair is a forward initial-value problem, the
    (dsigma, beta) pair a backward one anchored at T.  The returned
    PhasePoint holds (alpha, beta, delta_rho, delta_sigma) in the zeta/eta
    slots.
    """
    lam, delta = params.lam, params.delta
    T = boundary.horizon
    om = 1.0 + delta / 2.0
    os_ = math.sqrt(lam**2 + delta**2 / 4.0)
    rp, ap = boundary.rho_initial, boundary.alpha_initial
    bpp, spp = boundary.beta_final, boundary.sigma_final

    c, s = math.cos(os_ * t), (math.sin(os_ * t) / os_ if os_ else t)
    drho = cmath.exp(-1j * om * t) * (rp * c + 1j * s * (-0.5 * delta * rp - lam * ap))
    alpha = cmath.exp(-1j * om * t) * (ap * c + 1j * s * (-lam * rp + 0.5 * delta * ap))
    tb = T - t
    cb, sb = math.cos(os_ * tb), (math.sin(os_ * tb) / os_ if os_ else tb)
    dsigma = cmath.exp(-1j * om * tb) * (spp * cb - 1j * sb * (0.5 * delta * spp + lam * bpp))
    beta = cmath.exp(-1j * om * tb) * (bpp * cb - 1j * sb * (lam * spp - 0.5 * delta * bpp))
    return PhasePoint(alpha=alpha, beta=beta, zeta=drho, eta=dsigma)


# fixed generic directions used by the convergence measurement
_NORTH_DIRECTION = (0.9 + 0.2j, 0.7 - 0.5j, -0.4 + 0.8j, 0.6 + 0.6j)
_SOUTH_DIRECTION = (0.8 - 0.3j, 0.5 + 0.7j, 0.9 + 0.1j, -0.3 - 0.6j)


def nonlinear_vs_linear_error(
    epsilon: float,
    params: ModelParams,
    T: float,
    pole: str = "north",
    n_samples: int = 41,
) -> float:
    """Scaled sup-norm deviation between the shot trajectory and the
    linearized one for boundary data of magnitude epsilon.

    The deviation is divided by epsilon, so the returned quantity is the
    relative linearization error and scales as O(epsilon^2): the cubic flow
    corrections produce an absolute deviation O(epsilon^3).
    """
    if epsilon == 0.0:
        return 0.0
    if pole == "north":
        da, db, dz, de = _NORTH_DIRECTION
        boundary = BoundaryData(
            alpha_initial=epsilon * da,
            zeta_initial=epsilon * dz,
            beta_final=epsilon * db,
            eta_final=epsilon * de,
            horizon=T,
        )
        sol = shoot(boundary, params, chart="primary", n_samples=n_samples)
        traj = sol.trajectory
        dev = 0.0
        for k, t in enumerate(traj.times):
            lin = north_bvp_solution(boundary, params, float(t))
            dev = max(
                dev,
                abs(traj.alpha[k] - lin.alpha),
                abs(traj.beta[k] - lin.beta),
                abs(traj.zeta[k] - lin.zeta),
                abs(traj.eta[k] - lin.eta),
            )
        return dev / epsilon
    if pole == "south":
        da, db, dr, ds = _SOUTH_DIRECTION
        rec = ReciprocalBoundaryData(
            alpha_initial=epsilon * da,
            rho_initial=epsilon * dr,
            beta_final=epsilon * db,
            sigma_final=epsilon * ds,
            horizon=T,
        )
        boundary = BoundaryData(
            alpha_initial=rec.alpha_initial,
            zeta_initial=rec.rho_initial,
            beta_final=rec.beta_final,
            eta_final=rec.sigma_final,
            horizon=T,
        )
        sol = shoot(boundary, params, chart="reciprocal", n_samples=n_samples)
        traj = sol.trajectory
        dev = 0.0
        for k, t in enumerate(traj.times):
            lin = south_bvp_solution(rec, params, float(t))
            dev = max(
                dev,
                abs(traj.alpha[k] - lin.alpha),
                abs(traj.beta[k] - lin.beta),
                abs(traj.zeta[k] - lin.zeta),
                abs(traj.eta[k] - lin.eta),
            )
        return dev / epsilon
    raise ValueError(f"unknown pole {pole!r}")
