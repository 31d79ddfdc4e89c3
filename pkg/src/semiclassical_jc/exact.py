"""Exact Jaynes-Cummings propagator: invariant-subspace closed form plus a
truncated-Fock-space matrix-exponential oracle.

Basis layout on the truncated space: states are interleaved by photon number
as (|up, n>, |down, n>) for n = 0..n_max, i.e. index(up, n) = 2n and
index(down, n) = 2n + 1, giving dimension 2(n_max + 1).  Within that
truncation the closed form and the dense exponential agree exactly: the
dangling top state |up, n_max> (whose partner |down, n_max+1> is cut off)
evolves with the diagonal phase of the truncated Hamiltonian in both.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import TruncationWarning
from .model import (
    CanonicalCoherentState,
    ModelParams,
    PropagatorElement,
    SpinCoherentState,
)

__all__ = [
    "BlockPropagator",
    "FockTruncation",
    "rabi_frequency",
    "block_c_propagator",
    "build_hamiltonian",
    "dense_oracle",
    "closed_form_unitary",
    "basis_ket",
    "product_coherent_vector",
    "full_propagator_element",
    "index_up",
    "index_down",
]


def index_up(n: int) -> int:
    """Index of |up, n> in the interleaved layout."""
    return 2 * n


def index_down(n: int) -> int:
    """Index of |down, n> in the interleaved layout."""
    return 2 * n + 1


@dataclass(frozen=True)
class BlockPropagator:
    """exp(-iCT) restricted to the n-quantum block {|up, n-1>, |down, n>}."""

    n: int
    a_t: complex
    b_t: complex
    time: float

    @property
    def matrix(self) -> np.ndarray:
        a, b = self.a_t, self.b_t
        return np.array([[a, b], [-b.conjugate(), a.conjugate()]], dtype=complex)


@dataclass(frozen=True)
class FockTruncation:
    """Truncated-space Hamiltonian with its cut-off photon number."""

    n_max: int
    matrix: np.ndarray


def rabi_frequency(n: int, params: ModelParams) -> float:
    """Rabi frequency Omega_n = sqrt(lam^2 n + delta^2/4) of the n-quantum block."""
    if n < 1:
        raise ValueError("block index n must be >= 1")
    return math.sqrt(params.lam**2 * n + params.delta**2 / 4.0)


def block_c_propagator(n: int, T: float, params: ModelParams) -> BlockPropagator:
    """Closed-form exp(-iCT) on the n-quantum block.

    a(T) = cos(Omega_n T) - i (delta / 2 Omega_n) sin(Omega_n T),
    b(T) = -i (lam sqrt(n) / Omega_n) sin(Omega_n T),
    with the sinc limit at Omega_n = 0.
    """
    om = rabi_frequency(n, params)
    x = om * T
    if om == 0.0:
        sinc = T
    else:
        sinc = math.sin(x) / om
    a = math.cos(x) - 0.5j * params.delta * sinc
    b = -1j * params.lam * math.sqrt(n) * sinc
    return BlockPropagator(n=n, a_t=a, b_t=b, time=T)


def build_hamiltonian(params: ModelParams, n_max: int) -> FockTruncation:
    """Hermitian JC Hamiltonian on photon numbers 0..n_max (dimension 2(n_max+1))."""
    dim = 2 * (n_max + 1)
    h = np.zeros((dim, dim), dtype=complex)
    for n in range(n_max + 1):
        h[index_up(n), index_up(n)] = n + 0.5 * (1.0 + params.delta)
        h[index_down(n), index_down(n)] = n - 0.5 * (1.0 + params.delta)
    for n in range(1, n_max + 1):
        g = params.lam * math.sqrt(n)
        h[index_up(n - 1), index_down(n)] = g
        h[index_down(n), index_up(n - 1)] = g
    return FockTruncation(n_max=n_max, matrix=h)


def dense_oracle(T: float, params: ModelParams, n_max: int) -> np.ndarray:
    """exp(-iHT) on the truncated space by eigendecomposition of the Hermitian H."""
    h = build_hamiltonian(params, n_max).matrix
    evals, vecs = np.linalg.eigh(h)
    return (vecs * np.exp(-1j * evals * T)) @ vecs.conjugate().T


def closed_form_unitary(T: float, params: ModelParams, n_max: int) -> np.ndarray:
    """Block-diagonal closed form of exp(-iHT) = exp(-iNT) exp(-iCT).

    The n-quantum block carries the phase exp(-i(n - 1/2)T) times the SU(2)
    block of :func:`block_c_propagator`; |down, 0> carries exp(+i(1+delta)T/2)
    and the dangling |up, n_max> the diagonal phase of the truncated H.
    """
    dim = 2 * (n_max + 1)
    u = np.zeros((dim, dim), dtype=complex)
    u[index_down(0), index_down(0)] = cmath.exp(0.5j * (1.0 + params.delta) * T)
    for n in range(1, n_max + 1):
        blk = block_c_propagator(n, T, params).matrix
        phase = cmath.exp(-1j * (n - 0.5) * T)
        ii = [index_up(n - 1), index_down(n)]
        u[np.ix_(ii, ii)] = phase * blk
    e_top = n_max + 0.5 * (1.0 + params.delta)
    u[index_up(n_max), index_up(n_max)] = cmath.exp(-1j * e_top * T)
    return u


def basis_ket(spin_up: bool, n: int, n_max: int) -> np.ndarray:
    """Unit vector for |up/down, n> in the truncated layout."""
    if not 0 <= n <= n_max:
        raise ValueError(f"photon number {n} outside truncation 0..{n_max}")
    v = np.zeros(2 * (n_max + 1), dtype=complex)
    v[index_up(n) if spin_up else index_down(n)] = 1.0
    return v


def product_coherent_vector(
    osc: CanonicalCoherentState,
    spin: SpinCoherentState,
    n_max: int,
    tail_tol: float = 1e-12,
) -> np.ndarray:
    """Coefficient vector of |theta phi p q> on the truncated space.

    Warns when the Poisson tail above n_max carries more weight than
    ``tail_tol``.
    """
    alpha = osc.alpha
    ns = np.arange(n_max + 1)
    log_fact = np.concatenate([[0.0], np.cumsum(np.log(np.arange(1, n_max + 1)))])
    if alpha == 0:
        fock = np.zeros(n_max + 1, dtype=complex)
        fock[0] = 1.0
    else:
        fock = np.exp(
            -0.5 * abs(alpha) ** 2 + ns * np.log(complex(alpha)) - 0.5 * log_fact
        )
    tail = 1.0 - float(np.sum(np.abs(fock) ** 2))
    if tail > tail_tol:
        warnings.warn(
            f"coherent-state tail weight {tail:.2e} above n_max={n_max} exceeds {tail_tol:.1e}",
            TruncationWarning,
            stacklevel=2,
        )
    c_up, c_down = spin.amplitudes
    v = np.zeros(2 * (n_max + 1), dtype=complex)
    v[0::2] = c_up * fock
    v[1::2] = c_down * fock
    return v


def full_propagator_element(
    final: np.ndarray,
    initial: np.ndarray,
    T: float,
    params: ModelParams,
    n_max: int = 32,
) -> PropagatorElement:
    """<final| U(T) |initial> from the block closed form.

    ``final`` and ``initial`` are coefficient vectors on the truncated space
    (see :func:`basis_ket` and :func:`product_coherent_vector`).
    """
    u = closed_form_unitary(T, params, n_max)
    value = complex(final.conjugate() @ (u @ initial))
    return PropagatorElement(value=value, method="exact", time=T, info={"n_max": n_max})


def survival_up_vacuum(T: float, params: ModelParams) -> complex:
    """Exact <up,0| U(T) |up,0> = e^{-iT/2} a_1(T); used as the oracle for the
    fluctuation-corrected amplitude."""
    blk = block_c_propagator(1, T, params)
    return cmath.exp(-0.5j * T) * blk.a_t
