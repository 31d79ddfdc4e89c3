"""Model core: Hamiltonian, coherent-state charts, conserved quantities, overlaps.

Everything here is a pure function of its inputs.  The dimensionless
conventions are fixed once and for all: the cavity frequency is the unit of
energy (omega = hbar = 1), ``lam`` is the coupling g/omega and ``delta`` the
detuning (omega_o - omega)/omega.

The complexified classical state is a 4-tuple (alpha, beta, zeta, eta).  On
the physical section beta = conj(alpha) and eta = conj(zeta), but boundary
value problems treat all four as independent, so none of the operations below
assume conjugacy.
"""

from __future__ import annotations

import math
import cmath
from dataclasses import dataclass, field

import numpy as np

from .errors import ChartDegeneracyError

__all__ = [
    "DEGENERACY_TOL",
    "CHART_SWITCH_THRESHOLD",
    "ModelParams",
    "SpinCoherentState",
    "CanonicalCoherentState",
    "PhasePoint",
    "ConservedPair",
    "PropagatorElement",
    "hamiltonian",
    "hamiltonian_angles",
    "conserved_n",
    "conserved_c",
    "conserved_n_reciprocal",
    "conserved_c_reciprocal",
    "stereographic_from_angles",
    "angles_from_stereographic",
    "spin_overlap",
    "canonical_overlap",
]

#: below this value of |1 + zeta*eta| the stereographic chart is considered
#: degenerate and evaluation raises instead of returning huge numbers
DEGENERACY_TOL = 1e-10

#: when |zeta| or |eta| exceeds this, integrators switch to the reciprocal
#: chart rho = 1/zeta, sigma = 1/eta to avoid overflow near the south pole
CHART_SWITCH_THRESHOLD = 10.0


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless Jaynes-Cummings parameters.

    Attributes
    ----------
    lam : float
        Coupling strength g/omega.
    delta : float
        Detuning (omega_o - omega)/omega.
    spin_s : float
        Formal expansion parameter of the spin sector.  All propagator
        formulas hard-code s = 1/2; this only enters the quadratic
        fluctuation coefficients.
    """

    lam: float
    delta: float
    spin_s: float = 0.5

    def __post_init__(self):
        if not (math.isfinite(self.lam) and math.isfinite(self.delta)):
            raise ValueError("lam and delta must be finite")
        if not (self.spin_s > 0):
            raise ValueError("spin_s must be positive")


@dataclass(frozen=True)
class SpinCoherentState:
    """Spin coherent state |theta, phi> = exp(-i phi S_z) exp(-i theta S_y)|up>."""

    theta: float
    phi: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError(f"theta must lie in [0, pi], got {self.theta}")
        if not 0.0 <= self.phi < 2 * math.pi:
            raise ValueError(f"phi must lie in [0, 2*pi), got {self.phi}")

    @property
    def chart_singular(self) -> bool:
        """True at the poles, where the azimuthal angle is undefined."""
        return self.theta < 1e-12 or math.pi - self.theta < 1e-12

    @property
    def amplitudes(self) -> tuple[complex, complex]:
        """Coefficients (c_up, c_down) in the S_z eigenbasis."""
        c, s = math.cos(self.theta / 2), math.sin(self.theta / 2)
        return (c * cmath.exp(-0.5j * self.phi), s * cmath.exp(0.5j * self.phi))


@dataclass(frozen=True)
class CanonicalCoherentState:
    """Canonical coherent state exp(i(pQ - qP))|0> with amplitude (q+ip)/sqrt(2)."""

    p: float
    q: float

    def __post_init__(self):
        if not (math.isfinite(self.p) and math.isfinite(self.q)):
            raise ValueError("p and q must be finite")

    @property
    def alpha(self) -> complex:
        return (self.q + 1j * self.p) / math.sqrt(2)

    @classmethod
    def from_alpha(cls, alpha: complex) -> "CanonicalCoherentState":
        root2 = math.sqrt(2)
        return cls(p=root2 * alpha.imag, q=root2 * alpha.real)


@dataclass(frozen=True)
class PhasePoint:
    """Complexified classical state (alpha, beta, zeta, eta).

    beta and eta are independent of alpha, zeta: the boundary-value problem
    complexifies the dynamics and conjugacy only holds on the real section.
    """

    alpha: complex
    beta: complex
    zeta: complex
    eta: complex

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.zeta, self.eta], dtype=complex)

    @classmethod
    def from_array(cls, y) -> "PhasePoint":
        return cls(complex(y[0]), complex(y[1]), complex(y[2]), complex(y[3]))

    @property
    def chart_factor(self) -> complex:
        """1 + zeta*eta, the denominator of every spin-sector expression."""
        return 1.0 + self.zeta * self.eta

    def require_regular(self, tol: float = DEGENERACY_TOL) -> complex:
        d = self.chart_factor
        if abs(d) < tol:
            raise ChartDegeneracyError(
                f"|1 + zeta*eta| = {abs(d):.3e} below tolerance {tol:.1e}"
            )
        return d


@dataclass(frozen=True)
class ConservedPair:
    """Values of the excitation integral N and interaction integral C.

    Constancy along a trajectory is an audited property (see
    ``ComplexTrajectory.n_drift``), not something guaranteed at construction.
    """

    n_value: complex
    c_value: complex


@dataclass(frozen=True)
class PropagatorElement:
    """One amplitude <final| U(T) |initial> with its method tag.

    ``info`` carries method-specific diagnostics (residuals, representation
    discrepancies, truncation data) keyed by short strings.
    """

    value: complex
    method: str  # exact | dopa | linearized | fluctuation-corrected
    time: float
    info: dict = field(default_factory=dict)


def hamiltonian(point: PhasePoint, params: ModelParams, tol: float = DEGENERACY_TOL) -> complex:
    """Classical Hamiltonian H(alpha, beta, zeta, eta).

    H = alpha*beta + (1+delta)/2 * (1-zeta*eta)/(1+zeta*eta)
        + lam * (alpha*zeta + beta*eta)/(1+zeta*eta)
    """
    d = point.require_regular(tol)
    u = (1.0 - point.zeta * point.eta) / d
    w = (point.alpha * point.zeta + point.beta * point.eta) / d
    return point.alpha * point.beta + 0.5 * (1.0 + params.delta) * u + params.lam * w


def hamiltonian_angles(theta: float, phi: float, p: float, q: float, params: ModelParams) -> float:
    """Hamiltonian in real coordinates (theta, phi, p, q).

    This is the coherent-state expectation value of H over the product state;
    it maps to :func:`hamiltonian` under alpha=(q+ip)/sqrt2, beta=conj(alpha),
    zeta=tan(theta/2)e^{i phi}, eta=conj(zeta).
    """
    coupling = params.lam / math.sqrt(2) * math.sin(theta) * (q * math.cos(phi) - p * math.sin(phi))
    return 0.5 * (p * p + q * q) + 0.5 * (1.0 + params.delta) * math.cos(theta) + coupling


def conserved_n(point: PhasePoint, tol: float = DEGENERACY_TOL) -> complex:
    """Excitation integral N = alpha*beta + (1/2)(1-zeta*eta)/(1+zeta*eta)."""
    d = point.require_regular(tol)
    return point.alpha * point.beta + 0.5 * (1.0 - point.zeta * point.eta) / d


def conserved_c(point: PhasePoint, params: ModelParams, tol: float = DEGENERACY_TOL) -> complex:
    """Interaction integral C = lam*(alpha*zeta+beta*eta)/(1+zeta*eta) + (delta/2)u.

    Satisfies H = N + C identically.
    """
    d = point.require_regular(tol)
    u = (1.0 - point.zeta * point.eta) / d
    w = (point.alpha * point.zeta + point.beta * point.eta) / d
    return params.lam * w + 0.5 * params.delta * u


def conserved_n_reciprocal(alpha: complex, beta: complex, rho: complex, sigma: complex) -> complex:
    """N evaluated in the reciprocal chart rho = 1/zeta, sigma = 1/eta."""
    d = rho * sigma + 1.0
    if abs(d) < DEGENERACY_TOL:
        raise ChartDegeneracyError("reciprocal chart degenerate: |1 + rho*sigma| ~ 0")
    return alpha * beta + 0.5 * (rho * sigma - 1.0) / d


def conserved_c_reciprocal(
    alpha: complex, beta: complex, rho: complex, sigma: complex, params: ModelParams
) -> complex:
    """C evaluated in the reciprocal chart rho = 1/zeta, sigma = 1/eta."""
    d = rho * sigma + 1.0
    if abs(d) < DEGENERACY_TOL:
        raise ChartDegeneracyError("reciprocal chart degenerate: |1 + rho*sigma| ~ 0")
    u = (rho * sigma - 1.0) / d
    w = (alpha * sigma + beta * rho) / d
    return params.lam * w + 0.5 * params.delta * u


def stereographic_from_angles(state: SpinCoherentState) -> tuple[complex, complex]:
    """North-chart stereographic pair zeta = tan(theta/2)e^{i phi}, eta = conj on the real section.

    Raises at theta = pi where the chart is singular.
    """
    if math.pi - state.theta < 1e-12:
        raise ChartDegeneracyError("north stereographic chart is singular at theta = pi")
    t = math.tan(state.theta / 2)
    return t * cmath.exp(1j * state.phi), t * cmath.exp(-1j * state.phi)


def angles_from_stereographic(zeta: complex) -> SpinCoherentState:
    """Inverse of :func:`stereographic_from_angles` on the physical section."""
    theta = 2.0 * math.atan(abs(zeta))
    phi = cmath.phase(zeta) % (2 * math.pi) if abs(zeta) > 0 else 0.0
    return SpinCoherentState(theta=theta, phi=phi)


def spin_overlap(final: SpinCoherentState, initial: SpinCoherentState) -> complex:
    """<theta'' phi'' | theta' phi'> for spin-1/2 coherent states."""
    ci, si = math.cos(initial.theta / 2), math.sin(initial.theta / 2)
    cf, sf = math.cos(final.theta / 2), math.sin(final.theta / 2)
    dphi = final.phi - initial.phi
    return cf * ci * cmath.exp(0.5j * dphi) + sf * si * cmath.exp(-0.5j * dphi)


def canonical_overlap(final: CanonicalCoherentState, initial: CanonicalCoherentState) -> complex:
    """<p'' q'' | p' q'> = exp(-|a'|^2/2 - |b''|^2/2 + b'' a') with b'' = conj(alpha'')."""
    a = initial.alpha
    b = final.alpha.conjugate()
    return cmath.exp(-0.5 * abs(a) ** 2 - 0.5 * abs(b) ** 2 + b * a)
