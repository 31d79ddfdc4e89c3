"""Dominant-path solver: the complexified two-point boundary-value problem,
its Weierstrass closed form, and the two propagator representations.

Normative order: the flow of the equations of motion (integrated to local
tolerance 1e-11) is ground truth; the elliptic closed form is validated
against it, and the boundary-term representation of the propagator is
cross-checked against the endpoint-energy representation.

The boundary data prescribe alpha(0), zeta(0), beta(T), eta(T); shooting is
done on the unknown initial pair (beta(0), eta(0)) with a complex 2x2 Newton
iteration whose Jacobian comes from the variational flow (the right-hand side
is holomorphic, so the complex derivative is well defined).  The remaining
unknowns alpha(T), zeta(T) fall out of the final integration and are
cross-checkable through the two conserved quantities.
"""

from __future__ import annotations

import cmath
import json
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import quad, solve_ivp

from . import elliptic
from .elliptic import CubicPotential, WeierstrassInvariants, cubic_from_constants
from .errors import (
    BranchResolutionError,
    ChartDegeneracyError,
    MultipleSolutionWarning,
    NonConvergenceError,
    RepresentationMismatchError,
)
from .model import (
    CHART_SWITCH_THRESHOLD,
    DEGENERACY_TOL,
    CanonicalCoherentState,
    ConservedPair,
    ModelParams,
    PhasePoint,
    PropagatorElement,
    SpinCoherentState,
    conserved_c,
    conserved_c_reciprocal,
    conserved_n,
    conserved_n_reciprocal,
    stereographic_from_angles,
)

__all__ = [
    "SCHEMA_HEADER",
    "T_MAX",
    "BoundaryData",
    "ComplexTrajectory",
    "DopaSolution",
    "EllipticProfile",
    "vector_field",
    "integrate_ivp",
    "shoot",
    "elliptic_profile",
    "elliptic_trajectory",
    "dopa_propagator",
    "schrodinger_residual",
]

SCHEMA_HEADER = "# semiclassical-jc schema v1"

#: horizons beyond this are refused: the dominant path parks at the saddle of
#: the cubic potential and the approximation is known to degrade long before
T_MAX = 50.0


# ---------------------------------------------------------------------------
# boundary data


@dataclass(frozen=True)
class BoundaryData:
    """Mixed boundary conditions alpha(0), zeta(0), beta(T), eta(T).

    When built :meth:`from_states`, the generating product coherent states are
    kept; they are required by the propagator (its overlap prefactors involve
    the state parameters, not only the four boundary values).
    """

    alpha_initial: complex
    zeta_initial: complex
    beta_final: complex
    eta_final: complex
    horizon: float
    initial_spin: SpinCoherentState | None = None
    final_spin: SpinCoherentState | None = None
    initial_osc: CanonicalCoherentState | None = None
    final_osc: CanonicalCoherentState | None = None

    def __post_init__(self):
        if not 0.0 <= self.horizon <= T_MAX:
            raise ValueError(
                f"horizon must lie in [0, {T_MAX}] (long-horizon dominant paths park "
                "at the potential saddle and the approximation degrades)"
            )

    @classmethod
    def from_states(
        cls,
        initial_spin: SpinCoherentState,
        initial_osc: CanonicalCoherentState,
        final_spin: SpinCoherentState,
        final_osc: CanonicalCoherentState,
        horizon: float,
    ) -> "BoundaryData":
        zeta_i, _ = stereographic_from_angles(initial_spin)
        _, eta_f = stereographic_from_angles(final_spin)
        return cls(
            alpha_initial=initial_osc.alpha,
            zeta_initial=zeta_i,
            beta_final=final_osc.alpha.conjugate(),
            eta_final=eta_f,
            horizon=horizon,
            initial_spin=initial_spin,
            final_spin=final_spin,
            initial_osc=initial_osc,
            final_osc=final_osc,
        )

    def transform_gauge(self, lam_angle: float) -> "BoundaryData":
        """Phase transformation zeta' -> zeta' e^{iL}, eta'' -> eta'' e^{-iL},
        alpha' -> alpha' e^{-iL}, beta'' -> beta'' e^{iL} (real L)."""
        phase = cmath.exp(1j * lam_angle)
        kw = dict(
            alpha_initial=self.alpha_initial / phase,
            zeta_initial=self.zeta_initial * phase,
            beta_final=self.beta_final * phase,
            eta_final=self.eta_final / phase,
            horizon=self.horizon,
        )
        if self.has_states:
            two_pi = 2 * math.pi
            kw["initial_spin"] = SpinCoherentState(
                self.initial_spin.theta, (self.initial_spin.phi + lam_angle) % two_pi
            )
            kw["final_spin"] = SpinCoherentState(
                self.final_spin.theta, (self.final_spin.phi + lam_angle) % two_pi
            )
            kw["initial_osc"] = CanonicalCoherentState.from_alpha(
                self.initial_osc.alpha / phase
            )
            kw["final_osc"] = CanonicalCoherentState.from_alpha(
                self.final_osc.alpha / phase
            )
        return BoundaryData(**kw)

    @property
    def has_states(self) -> bool:
        return self.initial_spin is not None

    @property
    def is_north_fixed_point(self) -> bool:
        return (
            max(
                abs(self.alpha_initial),
                abs(self.zeta_initial),
                abs(self.beta_final),
                abs(self.eta_final),
            )
            < 1e-14
        )


# ---------------------------------------------------------------------------
# flow


def _rhs4(y: np.ndarray, lam: float, dlt: float, chart: str) -> np.ndarray:
    a, b, z, e = y
    d = 1.0 + z * e
    if chart == "primary":
        return np.array(
            [
                -1j * (a + lam * e / d),
                1j * (b + lam * z / d),
                1j * ((1.0 + dlt) * z - lam * (b - a * z * z)),
                -1j * ((1.0 + dlt) * e - lam * (a - b * e * e)),
            ]
        )
    return np.array(
        [
            -1j * (a + lam * z / d),
            1j * (b + lam * e / d),
            -1j * ((1.0 + dlt) * z + lam * (a - b * z * z)),
            1j * ((1.0 + dlt) * e + lam * (b - a * e * e)),
        ]
    )


def _jac4(y: np.ndarray, lam: float, dlt: float, chart: str) -> np.ndarray:
    a, b, z, e = y
    d = 1.0 + z * e
    d2 = d * d
    if chart == "primary":
        return np.array(
            [
                [-1j, 0.0, 1j * lam * e * e / d2, -1j * lam / d2],
                [0.0, 1j, 1j * lam / d2, -1j * lam * z * z / d2],
                [1j * lam * z * z, -1j * lam, 1j * ((1 + dlt) + 2 * lam * a * z), 0.0],
                [1j * lam, -1j * lam * e * e, 0.0, -1j * ((1 + dlt) + 2 * lam * b * e)],
            ]
        )
    return np.array(
        [
            [-1j, 0.0, -1j * lam / d2, 1j * lam * z * z / d2],
            [0.0, 1j, -1j * lam * e * e / d2, 1j * lam / d2],
            [-1j * lam, 1j * lam * z * z, -1j * ((1 + dlt) - 2 * lam * b * z), 0.0],
            [-1j * lam * e * e, 1j * lam, 0.0, 1j * ((1 + dlt) - 2 * lam * a * e)],
        ]
    )


def vector_field(point: PhasePoint, params: ModelParams, chart: str = "primary") -> PhasePoint:
    """Time derivatives of (alpha, beta, zeta, eta) under the classical flow."""
    point.require_regular()
    rates = _rhs4(point.as_array(), params.lam, params.delta, chart)
    return PhasePoint.from_array(rates)


def _flip_chart(y: np.ndarray) -> np.ndarray:
    return np.array([y[0], y[1], 1.0 / y[2], 1.0 / y[3]])


@dataclass
class ComplexTrajectory:
    """Sampled solution of the flow with conserved-quantity audit.

    ``chart`` names the chart of the stored component arrays.  ``segments``
    keeps the dense integrator output as (t0, t1, chart, interpolant) tuples
    for quadrature; closed-form trajectories carry no segments.
    """

    times: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    zeta: np.ndarray
    eta: np.ndarray
    n_drift: float
    c_drift: float
    chart: str = "primary"
    segments: list = field(default_factory=list, repr=False)

    def eval(self, t: float) -> np.ndarray:
        """Dense state at time t (in ``self.chart`` variables)."""
        if not self.segments:
            raise ValueError("trajectory carries no dense segments")
        for t0, t1, seg_chart, interp in self.segments:
            if t <= t1 or (t0, t1, seg_chart, interp) is self.segments[-1]:
                y = interp(t)
                if seg_chart != self.chart:
                    y = _flip_chart(y)
                return y
        raise ValueError(f"time {t} outside trajectory range")

    def to_csv(self, path) -> None:
        """RFC-4180-style CSV with the schema header comment line."""
        import csv

        with open(path, "w", newline="") as fh:
            fh.write(SCHEMA_HEADER + "\n")
            writer = csv.writer(fh)
            writer.writerow(
                [
                    "t",
                    "re_alpha", "im_alpha", "re_beta", "im_beta",
                    "re_zeta", "im_zeta", "re_eta", "im_eta",
                    "n_drift", "c_drift",
                ]
            )
            for k, t in enumerate(self.times):
                writer.writerow(
                    [
                        _fmt(t),
                        _fmt(self.alpha[k].real), _fmt(self.alpha[k].imag),
                        _fmt(self.beta[k].real), _fmt(self.beta[k].imag),
                        _fmt(self.zeta[k].real), _fmt(self.zeta[k].imag),
                        _fmt(self.eta[k].real), _fmt(self.eta[k].imag),
                        _fmt(self.n_drift), _fmt(self.c_drift),
                    ]
                )

    def to_json(self, path) -> None:
        payload = {
            "schema_version": SCHEMA_HEADER.lstrip("# "),
            "chart": self.chart,
            "n_drift": self.n_drift,
            "c_drift": self.c_drift,
            "rows": [
                {
                    "t": float(t),
                    "alpha": [self.alpha[k].real, self.alpha[k].imag],
                    "beta": [self.beta[k].real, self.beta[k].imag],
                    "zeta": [self.zeta[k].real, self.zeta[k].imag],
                    "eta": [self.eta[k].real, self.eta[k].imag],
                }
                for k, t in enumerate(self.times)
            ],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def integrate_ivp(
    initial: PhasePoint,
    T: float,
    params: ModelParams,
    t_eval: np.ndarray | None = None,
    rtol: float = 1e-11,
    atol: float = 1e-11,
    chart: str = "primary",
    allow_chart_switch: bool = True,
    max_switches: int = 64,
) -> ComplexTrajectory:
    """Adaptive integration of the flow with automatic chart hand-off.

    Whenever |zeta| or |eta| exceeds the switch threshold the state is mapped
    to the reciprocal chart and integration continues there (and back).  The
    output arrays are reported in the chart of the initial point.
    """
    if t_eval is None:
        t_eval = np.linspace(0.0, T, 201)
    t_eval = np.asarray(t_eval, dtype=float)

    lam, dlt = params.lam, params.delta
    segments = []
    cur_chart = chart
    y = initial.as_array()
    t0 = 0.0

    def switch_event(t, y):
        return max(abs(y[2]), abs(y[3])) - CHART_SWITCH_THRESHOLD

    switch_event.terminal = True
    switch_event.direction = 1.0

    def degeneracy_event(t, y):
        return abs(1.0 + y[2] * y[3]) - 100.0 * DEGENERACY_TOL

    degeneracy_event.terminal = True
    degeneracy_event.direction = -1.0

    if allow_chart_switch and max(abs(y[2]), abs(y[3])) > CHART_SWITCH_THRESHOLD:
        y = _flip_chart(y)
        cur_chart = "reciprocal" if cur_chart == "primary" else "primary"

    for _ in range(max_switches):
        events = [degeneracy_event] + ([switch_event] if allow_chart_switch else [])
        sol = solve_ivp(
            lambda t, y: _rhs4(y, lam, dlt, cur_chart),
            (t0, T),
            y,
            method="DOP853",
            rtol=rtol,
            atol=atol,
            dense_output=True,
            events=events,
        )
        if not sol.success:
            raise NonConvergenceError(f"flow integration failed at t ~ {sol.t[-1]:.4f}")
        t_end = sol.t[-1]
        segments.append((t0, t_end, cur_chart, sol.sol))
        if sol.status == 1:  # event fired
            if len(sol.t_events[0]):
                raise ChartDegeneracyError(
                    f"trajectory hit the chart singularity 1 + zeta*eta = 0 near t = {t_end:.4f}"
                )
            y = _flip_chart(sol.y[:, -1])
            cur_chart = "reciprocal" if cur_chart == "primary" else "primary"
            t0 = t_end
            continue
        break
    else:
        raise NonConvergenceError("too many chart switches")

    traj = ComplexTrajectory(
        times=t_eval,
        alpha=np.empty(len(t_eval), complex),
        beta=np.empty(len(t_eval), complex),
        zeta=np.empty(len(t_eval), complex),
        eta=np.empty(len(t_eval), complex),
        n_drift=0.0,
        c_drift=0.0,
        chart=chart,
        segments=segments,
    )
    for k, t in enumerate(t_eval):
        yk = traj.eval(float(t))
        traj.alpha[k], traj.beta[k], traj.zeta[k], traj.eta[k] = yk

    n_vals, c_vals = _conserved_series(traj, params)
    traj.n_drift = float(np.max(np.abs(n_vals - n_vals[0])))
    traj.c_drift = float(np.max(np.abs(c_vals - c_vals[0])))
    return traj


def _conserved_series(traj: ComplexTrajectory, params: ModelParams):
    if traj.chart == "primary":
        d = 1.0 + traj.zeta * traj.eta
        u = (1.0 - traj.zeta * traj.eta) / d
        w = (traj.alpha * traj.zeta + traj.beta * traj.eta) / d
    else:
        d = 1.0 + traj.zeta * traj.eta
        u = (traj.zeta * traj.eta - 1.0) / d
        w = (traj.alpha * traj.eta + traj.beta * traj.zeta) / d
    n_vals = traj.alpha * traj.beta + 0.5 * u
    c_vals = params.lam * w + 0.5 * params.delta * u
    return n_vals, c_vals


# ---------------------------------------------------------------------------
# shooting


@dataclass(frozen=True)
class DopaSolution:
    """Solved boundary-value problem with its audit data."""

    trajectory: ComplexTrajectory
    beta_initial: complex
    eta_initial: complex
    alpha_final: complex
    zeta_final: complex
    constants: ConservedPair
    residual: float
    boundary: BoundaryData
    params: ModelParams
    chart: str = "primary"

    @property
    def unknowns(self) -> tuple[complex, complex, complex, complex]:
        return (self.beta_initial, self.eta_initial, self.alpha_final, self.zeta_final)

    @property
    def hamiltonian_value(self) -> complex:
        return self.constants.n_value + self.constants.c_value


_V0 = np.array([[0, 0], [1, 0], [0, 0], [0, 1]], dtype=complex)


def _integrate_with_jacobian(y0: np.ndarray, T: float, params: ModelParams, chart: str,
                             rtol: float):
    """Final state and d(final)/d(beta0, eta0) from the variational flow."""
    lam, dlt = params.lam, params.delta

    def rhs(t, yy):
        x = yy[:4]
        v = yy[4:].reshape(4, 2)
        fx = _rhs4(x, lam, dlt, chart)
        jv = _jac4(x, lam, dlt, chart) @ v
        return np.concatenate([fx, jv.ravel()])

    y_aug = np.concatenate([y0, _V0.ravel()])
    sol = solve_ivp(rhs, (0.0, T), y_aug, method="DOP853", rtol=rtol, atol=rtol)
    if not sol.success:
        raise NonConvergenceError("variational integration failed")
    yf = sol.y[:, -1]
    return yf[:4], yf[4:].reshape(4, 2)


def _free_guess(boundary: BoundaryData, params: ModelParams, chart: str):
    """Analytic lam = 0 solution of the boundary problem."""
    T = boundary.horizon
    b0 = boundary.beta_final * cmath.exp(-1j * T)
    if chart == "primary":
        e0 = boundary.eta_final * cmath.exp(1j * (1.0 + params.delta) * T)
    else:
        e0 = boundary.eta_final * cmath.exp(-1j * (1.0 + params.delta) * T)
    return np.array([b0, e0])


def _newton_shoot(
    boundary: BoundaryData,
    params: ModelParams,
    guess: np.ndarray,
    chart: str,
    tol: float,
    rtol: float,
    max_iter: int = 30,
):
    """Damped complex Newton on (beta0, eta0); returns (unknowns, final_state, residual)."""
    T = boundary.horizon
    target = np.array([boundary.beta_final, boundary.eta_final])
    u = np.asarray(guess, dtype=complex)
    best = (u.copy(), None, math.inf)
    res_norm = math.inf
    for _ in range(max_iter):
        y0 = np.array([boundary.alpha_initial, u[0], boundary.zeta_initial, u[1]])
        yf, v = _integrate_with_jacobian(y0, T, params, chart, rtol)
        f = np.array([yf[1], yf[3]]) - target
        res_norm = float(np.max(np.abs(f)))
        if res_norm < best[2]:
            best = (u.copy(), yf, res_norm)
        if res_norm < tol:
            return u, yf, res_norm
        jac = np.array([[v[1, 0], v[1, 1]], [v[3, 0], v[3, 1]]])
        try:
            step = np.linalg.solve(jac, f)
        except np.linalg.LinAlgError:
            break
        # damped update
        scale = 1.0
        for _ in range(8):
            u_try = u - scale * step
            y0 = np.array(
                [boundary.alpha_initial, u_try[0], boundary.zeta_initial, u_try[1]]
            )
            sol = solve_ivp(
                lambda t, y: _rhs4(y, params.lam, params.delta, chart),
                (0.0, T),
                y0,
                method="DOP853",
                rtol=rtol,
                atol=rtol,
            )
            if sol.success:
                f_try = np.array([sol.y[1, -1], sol.y[3, -1]]) - target
                if np.max(np.abs(f_try)) < res_norm:
                    u = u_try
                    break
            scale *= 0.5
        else:
            break
    return best[0], best[1], best[2]


def shoot(
    boundary: BoundaryData,
    params: ModelParams,
    guess: tuple[complex, complex] | None = None,
    tol: float = 1e-10,
    rtol: float = 1e-11,
    chart: str = "primary",
    n_samples: int = 201,
    multi_start: int = 0,
    continuation_step: float = 0.05,
) -> DopaSolution:
    """Solve the two-point boundary-value problem by shooting.

    The first attempt starts from the analytic lam = 0 solution (or the
    caller's guess); on failure the coupling is continued from 0 in steps of
    ``continuation_step`` with warm starts.  With ``multi_start`` > 0 the
    converged solution is perturbed that many times to probe for distinct
    basins; finding one triggers a :class:`MultipleSolutionWarning`.
    """
    T = boundary.horizon
    if boundary.is_north_fixed_point:
        times = np.linspace(0.0, T, n_samples)
        zeros = np.zeros(n_samples, complex)
        traj = ComplexTrajectory(
            times=times, alpha=zeros, beta=zeros.copy(), zeta=zeros.copy(),
            eta=zeros.copy(), n_drift=0.0, c_drift=0.0, chart=chart,
        )
        n0 = 0.5 if chart == "primary" else -0.5
        c0 = 0.5 * params.delta if chart == "primary" else -0.5 * params.delta
        return DopaSolution(
            trajectory=traj, beta_initial=0.0, eta_initial=0.0,
            alpha_final=0.0, zeta_final=0.0,
            constants=ConservedPair(n_value=n0, c_value=c0),
            residual=0.0, boundary=boundary, params=params, chart=chart,
        )

    start = np.asarray(guess, dtype=complex) if guess is not None else _free_guess(
        boundary, params, chart
    )
    u, yf, res = _newton_shoot(boundary, params, start, chart, tol, rtol)

    if res > tol:
        # homotopy in the coupling from the exactly solvable lam = 0 problem
        lam_target = params.lam
        n_steps = max(1, int(math.ceil(abs(lam_target) / continuation_step)))
        u_cont = _free_guess(boundary, replace(params, lam=0.0), chart)
        res_k = math.inf
        yf_k = None
        for k in range(1, n_steps + 1):
            p_k = replace(params, lam=lam_target * k / n_steps)
            u_cont, yf_k, res_k = _newton_shoot(boundary, p_k, u_cont, chart, tol, rtol)
        if res_k < res:
            u, yf, res = u_cont, yf_k, res_k
    if res > tol:
        raise NonConvergenceError(
            f"shooting did not converge: best residual {res:.3e} (tol {tol:.1e})",
            best_residual=res,
        )

    if multi_start > 0:
        rng = np.random.default_rng(20240 + multi_start)
        scale = 0.4 * (1.0 + float(np.max(np.abs(u))))
        distinct = [u]
        for _ in range(multi_start):
            pert = u + scale * (rng.normal(size=2) + 1j * rng.normal(size=2))
            u2, _, res2 = _newton_shoot(boundary, params, pert, chart, tol, rtol)
            if res2 < tol and np.max(np.abs(u2 - u)) > 1e-6 * (1.0 + np.max(np.abs(u))):
                if all(np.max(np.abs(u2 - d)) > 1e-6 for d in distinct):
                    distinct.append(u2)
        if len(distinct) > 1:
            warnings.warn(
                f"shooting found {len(distinct)} distinct solution basins; "
                "returning the continuation branch",
                MultipleSolutionWarning,
                stacklevel=2,
            )

    y0 = np.array([boundary.alpha_initial, u[0], boundary.zeta_initial, u[1]])
    traj = integrate_ivp(
        PhasePoint.from_array(y0), T, params,
        t_eval=np.linspace(0.0, T, n_samples), rtol=rtol, atol=rtol, chart=chart,
    )
    if chart == "primary":
        n0 = conserved_n(PhasePoint.from_array(y0))
        c0 = conserved_c(PhasePoint.from_array(y0), params)
    else:
        n0 = conserved_n_reciprocal(y0[0], y0[1], y0[2], y0[3])
        c0 = conserved_c_reciprocal(y0[0], y0[1], y0[2], y0[3], params)
    return DopaSolution(
        trajectory=traj,
        beta_initial=complex(u[0]),
        eta_initial=complex(u[1]),
        alpha_final=complex(traj.alpha[-1]),
        zeta_final=complex(traj.zeta[-1]),
        constants=ConservedPair(n_value=n0, c_value=c0),
        residual=res,
        boundary=boundary,
        params=params,
        chart=chart,
    )


# ---------------------------------------------------------------------------
# Weierstrass closed form


@dataclass(frozen=True)
class EllipticProfile:
    """Weierstrass data of one solved instance.

    ``cubic`` is the monic cubic W(u) = u^3 + a2 u^2 + a1 u + a0 with
    u'^2 = 2 lam^2 W(u); the anchors satisfy wp(A1) = a2/3 + u(0),
    wp(A2) = a2/3 + 2N, wp(A3) = a2/3 - 1, wp(A4) = a2/3 + 1.
    """

    cubic: CubicPotential
    invariants: WeierstrassInvariants
    a1_anchor: complex
    a2_anchor: complex
    a3_anchor: complex
    a4_anchor: complex

    @property
    def anchors(self) -> tuple[complex, complex, complex, complex]:
        return (self.a1_anchor, self.a2_anchor, self.a3_anchor, self.a4_anchor)


def _initial_u_and_rate(solution: DopaSolution):
    b = solution.boundary
    a0, b0 = b.alpha_initial, solution.beta_initial
    z0, e0 = b.zeta_initial, solution.eta_initial
    d = 1.0 + z0 * e0
    u0 = (1.0 - z0 * e0) / d
    udot0 = -2j * solution.params.lam * (a0 * z0 - b0 * e0) / d
    return u0, udot0


def elliptic_profile(solution: DopaSolution, params: ModelParams) -> EllipticProfile:
    """Cubic, invariants and inverse-wp anchors for a solved instance.

    The monic cubic is the negative of the descent polynomial of
    :func:`~semiclassical_jc.elliptic.cubic_from_constants`; its depressed
    form feeds the printed invariant formulas, and u(t) = -a2/3 + wp(A1 +
    lam t/sqrt2) with the A1 branch matched to the sign of u'(0).
    """
    if solution.chart != "primary":
        raise BranchResolutionError("elliptic closed form requires the primary chart")
    n_val, c_val = solution.constants.n_value, solution.constants.c_value
    descent = cubic_from_constants(n_val, c_val, params)
    monic = CubicPotential(a0=-descent.a0, a1=-descent.a1, a2=-descent.a2)
    inv = elliptic.invariants_from_cubic(monic)
    u0, udot0 = _initial_u_and_rate(solution)
    shift = monic.a2 / 3.0
    c = params.lam / math.sqrt(2.0)

    a1 = elliptic.wp_inverse(shift + u0, inv)
    dp = elliptic.wp_prime(a1, inv)
    target_rate = udot0 / c
    if abs(dp - target_rate) > abs(dp + target_rate):
        a1 = -a1
    a2 = elliptic.wp_inverse(shift + 2.0 * n_val, inv)
    a3 = elliptic.wp_inverse(shift - 1.0, inv)
    a4 = elliptic.wp_inverse(shift + 1.0, inv)
    prof = EllipticProfile(
        cubic=monic, invariants=inv,
        a1_anchor=a1, a2_anchor=a2, a3_anchor=a3, a4_anchor=a4,
    )
    targets = (shift + u0, shift + 2.0 * n_val, shift - 1.0, shift + 1.0)
    for anchor, target in zip(prof.anchors, targets):
        err = abs(complex(elliptic.wp(anchor, inv)) - target)
        if err > 1e-9 * max(1.0, abs(target)):
            raise BranchResolutionError(f"anchor residual {err:.2e} exceeds 1e-9")
    return prof


def _unwrapped_log(values: np.ndarray, label: str) -> np.ndarray:
    """log of a nonvanishing series with the branch continued along the samples."""
    mags = np.abs(values)
    if np.any(mags < 1e-13):
        raise BranchResolutionError(f"{label} vanishes along the path")
    steps = np.angle(values[1:] / values[:-1])
    if np.any(np.abs(steps) > 2.5):
        raise BranchResolutionError(f"{label} winds too fast for branch tracking")
    args = np.concatenate([[np.angle(values[0])], np.angle(values[0]) + np.cumsum(steps)])
    return np.log(mags) + 1j * args


def elliptic_trajectory(
    solution: DopaSolution,
    params: ModelParams,
    t_eval: np.ndarray | None = None,
) -> ComplexTrajectory:
    """Closed-form trajectory from the Weierstrass solution.

    alpha and zeta are reconstructed from sigma/zeta_w quotient formulas with
    all logarithm branches continued along the time path; beta and eta follow
    from the conserved quantities (2 alpha beta = 2N - u and zeta eta =
    (1-u)/(1+u)).  Branch failures raise; the flow trajectory then remains
    normative.
    """
    if params.lam == 0.0:
        raise BranchResolutionError("elliptic trajectory undefined at lam = 0")
    if t_eval is None:
        t_eval = solution.trajectory.times
    t_eval = np.asarray(t_eval, dtype=float)
    prof = elliptic_profile(solution, params)
    inv = prof.invariants
    n_val, c_val = solution.constants.n_value, solution.constants.c_value
    delta = params.delta
    c = params.lam / math.sqrt(2.0)
    shift = prof.cubic.a2 / 3.0

    boundary = solution.boundary
    alpha0 = boundary.alpha_initial
    zeta0 = boundary.zeta_initial
    if min(abs(alpha0), abs(zeta0)) < 1e-12:
        raise BranchResolutionError(
            "closed-form reconstruction needs nonzero alpha(0) and zeta(0)"
        )

    # refine the sample grid so branch tracking is safe, keeping t_eval points
    lat_scale = getattr(elliptic._lattice_for(inv.g2, inv.g3), "min_period", 1.0)
    max_step = 0.1 * min(lat_scale, 1.0) / max(c, 1e-12)
    fine = [t_eval[0]]
    idx = [0]
    for t_prev, t_next in zip(t_eval[:-1], t_eval[1:]):
        m = max(1, min(400, int(math.ceil((t_next - t_prev) / max_step))))
        seg = np.linspace(t_prev, t_next, m + 1)[1:]
        fine.extend(seg.tolist())
        idx.append(len(fine) - 1)
    fine = np.array(fine)
    if len(fine) > 200_000:
        raise BranchResolutionError("closed-form sampling grid too fine to continue branches")
    zs = prof.a1_anchor + c * fine

    p_vals = elliptic.wp(zs, inv)
    u = -shift + p_vals
    zeta_eta = (1.0 - u) / (1.0 + u)

    log_f = _unwrapped_log(2.0 * n_val - u, "2N - u")  # = 2 alpha beta
    log_ze = _unwrapped_log(zeta_eta, "zeta*eta")

    def coefficient_term(anchor: complex, coeff: complex, label: str) -> np.ndarray:
        """K * [L(z(t)) - L(z0)] for L = log sigma(z-A) - log sigma(z+A) + 2 zeta_w(A) z."""
        if abs(coeff) < 1e-14 * max(1.0, abs(n_val), abs(c_val)):
            return np.zeros(len(zs), dtype=complex)
        dp_a = complex(elliptic.wp_prime(anchor, inv))
        if abs(dp_a) < 1e-12:
            raise BranchResolutionError(f"degenerate anchor for {label} (wp' ~ 0)")
        k = 1j * coeff / (c * dp_a)
        ls_minus = elliptic.log_sigma_path(zs - anchor, inv)
        ls_plus = elliptic.log_sigma_path(zs + anchor, inv)
        zw = complex(elliptic.w_zeta(anchor, inv))
        return k * (ls_minus - ls_plus + 2.0 * zw * (zs - zs[0]))

    term2 = coefficient_term(prof.a2_anchor, c_val - delta * n_val, "A2")
    term3 = coefficient_term(prof.a3_anchor, c_val + 0.5 * delta, "A3")
    term4 = coefficient_term(prof.a4_anchor, c_val - 0.5 * delta, "A4")

    log_alpha = (
        cmath.log(alpha0)
        + 0.5 * (log_f - log_f[0])
        - 1j * (1.0 + 0.5 * delta) * fine
        + term2
    )
    log_zeta = (
        cmath.log(zeta0)
        + 1j * fine
        + term3
        + term4
        + 0.5 * (log_ze - log_ze[0])
    )
    alpha = np.exp(log_alpha)
    zeta = np.exp(log_zeta)
    beta = (n_val - 0.5 * u) / alpha
    eta = zeta_eta / zeta

    sel = np.array(idx)
    traj = ComplexTrajectory(
        times=t_eval,
        alpha=alpha[sel], beta=beta[sel], zeta=zeta[sel], eta=eta[sel],
        n_drift=0.0, c_drift=0.0, chart="primary",
    )
    n_vals, c_vals = _conserved_series(traj, params)
    traj.n_drift = float(np.max(np.abs(n_vals - n_val)))
    traj.c_drift = float(np.max(np.abs(c_vals - c_val)))
    end_err = max(
        abs(traj.beta[-1] - boundary.beta_final),
        abs(traj.eta[-1] - boundary.eta_final),
    )
    if end_err > 1e-5 * (1.0 + abs(boundary.beta_final) + abs(boundary.eta_final)):
        raise BranchResolutionError(
            f"closed form misses the final data by {end_err:.2e}; flow trajectory is normative"
        )
    return traj


# ---------------------------------------------------------------------------
# propagator representations


def _action_integral(solution: DopaSolution, params: ModelParams, quad_tol: float) -> complex:
    """Integral of the boundary-term Lagrangian along the shot trajectory."""
    lam, dlt = params.lam, params.delta
    traj = solution.trajectory
    if traj.chart != "primary":
        raise BranchResolutionError("propagator evaluation requires the primary chart")

    def integrand(t: float) -> complex:
        y = traj.eval(t)
        a, b, z, e = y
        f = _rhs4(y, lam, dlt, "primary")
        d = 1.0 + z * e
        kin_osc = 0.5j * (f[0] * b - a * f[1])
        kin_spin = 0.5j * (f[2] * e - z * f[3]) / d
        u = (1.0 - z * e) / d
        w = (a * z + b * e) / d
        h = a * b + 0.5 * (1.0 + dlt) * u + lam * w
        return kin_osc + kin_spin - h

    T = solution.boundary.horizon
    pts = sorted({seg[0] for seg in traj.segments} | {T})
    re = quad(lambda t: integrand(t).real, 0.0, T, epsabs=quad_tol, epsrel=quad_tol,
              limit=400, points=pts)[0]
    im = quad(lambda t: integrand(t).imag, 0.0, T, epsabs=quad_tol, epsrel=quad_tol,
              limit=400, points=pts)[0]
    return re + 1j * im


def _data_overlap_product(boundary: BoundaryData) -> complex:
    """Free overlap product expressed through the complex boundary data.

    The spin phase enters as the principal quartic root of
    (zeta'' eta')/(zeta' eta'') with eta' = conj(zeta'), zeta'' = conj(eta'')
    on the physical section; that ratio is invariant under the phase
    transformation of the action, so the propagator built from it is exactly
    gauge invariant.  It equals the product-state overlap
    <theta''phi''|theta'phi'><p''q''|p'q'> whenever |arg(zeta' eta'')| < pi.
    """
    b = boundary
    zp, epp = b.zeta_initial, b.eta_final
    ap, bpp = b.alpha_initial, b.beta_final
    osc = cmath.exp(-0.5 * abs(ap) ** 2 - 0.5 * abs(bpp) ** 2 + bpp * ap)
    norm = math.sqrt((1.0 + abs(zp) ** 2) * (1.0 + abs(epp) ** 2))
    cross = zp * epp
    if abs(cross) < 1e-28:
        quartic = 1.0 + 0.0j  # polar state: azimuth is pure gauge
    else:
        quartic = (cross.conjugate() / cross) ** 0.25
    return osc * (1.0 + cross) / norm * quartic


def _boundary_prefactor(solution: DopaSolution) -> complex:
    """Overlap-factored boundary terms of the boundary-term representation.

    The raw formula's square and quartic roots are combined with
    :func:`_data_overlap_product`; the leftover correction below is a
    single-valued function of the boundary data and the solved unknowns, so
    the branch choice is pinned and regular at the poles for mild data.
    """
    b = solution.boundary
    ov = _data_overlap_product(b)
    expo = cmath.exp(
        0.5 * solution.alpha_final * b.beta_final
        + 0.5 * b.alpha_initial * solution.beta_initial
        - b.alpha_initial * b.beta_final
    )
    num = (1.0 + b.zeta_initial * solution.eta_initial) * (
        1.0 + solution.zeta_final * b.eta_final
    )
    den = 1.0 + b.zeta_initial * b.eta_final
    if abs(den) < 1e-14:
        raise BranchResolutionError("boundary states orthogonal in the spin sector")
    return ov * expo * cmath.sqrt(num) / den


def _clenshaw_curtis(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes (descending) and weights on [-1, 1] for an even panel count n."""
    k = np.arange(n + 1)
    x = np.cos(np.pi * k / n)
    w = np.empty(n + 1)
    for j in range(n + 1):
        acc = 0.0
        for m in range(1, n // 2 + 1):
            b = 0.5 if m == n // 2 else 1.0
            acc += b * math.cos(2.0 * m * math.pi * j / n) / (4.0 * m * m - 1.0)
        w[j] = (2.0 / n) * (1.0 - 2.0 * acc)
    w[0] *= 0.5
    w[-1] *= 0.5
    return x, w


def horizon_energies(
    boundary: BoundaryData,
    params: ModelParams,
    taus: np.ndarray,
    tol: float = 1e-10,
    rtol: float = 1e-11,
    chart: str = "primary",
) -> np.ndarray:
    """Endpoint Hamiltonian H(alpha(tau,tau), beta'', zeta(tau,tau), eta'')
    for the family of boundary problems with horizons ``taus`` (ascending).

    Because beta and eta meet their boundary values at the endpoint, this is
    the conserved energy of each horizon's solution, available from the
    solved initial data alone.  Solutions are continued in the horizon with
    warm starts.
    """
    taus = np.asarray(taus, dtype=float)
    out = np.empty(len(taus), dtype=complex)
    prev: list[tuple[float, np.ndarray]] = []
    for i, tau in enumerate(taus):
        if tau == 0.0:
            u = np.array([boundary.beta_final, boundary.eta_final])
            res = 0.0
        else:
            if len(prev) >= 2:
                (t1, u1), (t2, u2) = prev[-2], prev[-1]
                guess = u2 + (u2 - u1) * (tau - t2) / max(t2 - t1, 1e-12)
            elif prev:
                guess = prev[-1][1]
            else:
                guess = _free_guess(replace(boundary, horizon=tau), params, chart)
            bdry = replace(boundary, horizon=tau)
            u, _, res = _newton_shoot(bdry, params, guess, chart, tol, rtol)
            if res > tol:
                u, _, res = _newton_shoot(
                    bdry, params, _free_guess(bdry, params, chart), chart, tol, rtol
                )
            if res > tol:
                raise NonConvergenceError(
                    f"horizon continuation stalled at tau = {tau:.4f}",
                    best_residual=res,
                )
        prev.append((float(tau), np.asarray(u)))
        y0 = PhasePoint(
            alpha=boundary.alpha_initial, beta=complex(u[0]),
            zeta=boundary.zeta_initial, eta=complex(u[1]),
        )
        if chart == "primary":
            out[i] = conserved_n(y0) + conserved_c(y0, params)
        else:
            out[i] = conserved_n_reciprocal(*y0.as_array()) + conserved_c_reciprocal(
                *y0.as_array(), params
            )
    return out


def _endpoint_energy_integral(
    boundary: BoundaryData, params: ModelParams, tol_quad: float = 1e-8
) -> complex:
    """integral_0^T H(alpha(tau,tau), beta'', zeta(tau,tau), eta'') d tau via
    nested Clenshaw-Curtis quadrature over the horizon."""
    T = boundary.horizon
    n = 32
    x, w = _clenshaw_curtis(n)
    taus = 0.5 * T * (1.0 - x)  # ascending
    vals = horizon_energies(boundary, params, taus)
    coarse = 0.5 * T * np.dot(w, vals)
    for n2 in (64, 128):
        x2, w2 = _clenshaw_curtis(n2)
        taus2 = 0.5 * T * (1.0 - x2)
        vals2 = np.empty(len(taus2), dtype=complex)
        vals2[::2] = vals  # nested nodes
        new_taus = taus2[1::2]
        vals2[1::2] = horizon_energies(boundary, params, new_taus)
        fine = 0.5 * T * np.dot(w2, vals2)
        if abs(fine - coarse) < tol_quad * (1.0 + abs(fine)):
            return fine
        coarse, vals, taus = fine, vals2, taus2
    return coarse


def dopa_propagator(
    solution: DopaSolution,
    boundary: BoundaryData,
    params: ModelParams,
    quad_tol: float = 1e-9,
    rep_tol: float = 1e-6,
) -> PropagatorElement:
    """Dominant-path amplitude computed by both representations.

    The boundary-term form (prefactors times the action integral along the
    shot trajectory) and the endpoint-energy form (time-ordered phase of
    H(alpha(t), beta'', zeta(t), eta'') over the horizon family times the
    free overlaps) must agree to ``rep_tol``; the endpoint-energy value is
    returned with the discrepancy recorded.
    """
    if not boundary.has_states:
        raise ValueError("dopa_propagator requires boundary data built from_states")
    T = boundary.horizon
    if boundary.is_north_fixed_point:
        value = cmath.exp(-0.5j * (1.0 + params.delta) * T)
        return PropagatorElement(
            value=value, method="dopa", time=T,
            info={"eq_boundary": value, "discrepancy": 0.0, "residual": 0.0},
        )

    action = _action_integral(solution, params, quad_tol)
    eq_boundary = _boundary_prefactor(solution) * cmath.exp(1j * action)

    energy_int = _endpoint_energy_integral(boundary, params)
    eq_endpoint = cmath.exp(-1j * energy_int) * _data_overlap_product(boundary)

    disc = abs(eq_boundary - eq_endpoint)
    if disc > rep_tol * max(1.0, abs(eq_endpoint)):
        raise RepresentationMismatchError(
            f"propagator representations disagree by {disc:.3e}", discrepancy=disc
        )
    return PropagatorElement(
        value=eq_endpoint,
        method="dopa",
        time=T,
        info={
            "eq_boundary": eq_boundary,
            "discrepancy": disc,
            "residual": solution.residual,
        },
    )


def schrodinger_residual(
    boundary: BoundaryData,
    params: ModelParams,
    dT: float = 0.02,
    quad_tol: float = 1e-9,
) -> float:
    """Relative residual of the horizon derivative equation
    d/dT K = -i H(endpoint) K, Richardson-extrapolated from steps dT, dT/2.

    K is the boundary-term amplitude; the endpoint Hamiltonian equals the
    conserved energy of the horizon-T solution.
    """
    if not boundary.has_states:
        raise ValueError("schrodinger_residual requires boundary data built from_states")
    T = boundary.horizon

    def amplitude(horizon: float) -> complex:
        bdry = replace(boundary, horizon=horizon)
        if bdry.is_north_fixed_point:
            return cmath.exp(-0.5j * (1.0 + params.delta) * horizon)
        sol = shoot(bdry, params, n_samples=41)
        return _boundary_prefactor(sol) * cmath.exp(
            1j * _action_integral(sol, params, quad_tol)
        )

    if boundary.is_north_fixed_point:
        h_end = 0.5 * (1.0 + params.delta)
        k_mid = amplitude(T)
    else:
        sol_mid = shoot(boundary, params, n_samples=41)
        h_end = sol_mid.hamiltonian_value
        k_mid = _boundary_prefactor(sol_mid) * cmath.exp(
            1j * _action_integral(sol_mid, params, quad_tol)
        )

    fd_coarse = (amplitude(T + dT) - amplitude(T - dT)) / (2.0 * dT)
    fd_fine = (amplitude(T + 0.5 * dT) - amplitude(T - 0.5 * dT)) / dT
    deriv = (4.0 * fd_fine - fd_coarse) / 3.0
    target = -1j * h_end * k_mid
    scale = max(abs(deriv), abs(target), 1e-30)
    return abs(deriv - target) / scale
