"""Weierstrass elliptic functions for complex invariants (g2, g3).

Evaluation strategy: Laurent series inside a convergence disk around the
origin, extended by repeated duplication, with arguments first reduced to a
centered fundamental cell once the period lattice is known.  This stays valid
for arbitrary complex invariants; no real-lattice structure is assumed.

The half-periods come from the arithmetic-geometric mean applied to square
roots of root differences of 4t^3 - g2 t - g3, with the branch of each AGM
step chosen optimally; the resulting candidate lattice is accepted only after
the evaluator itself confirms that the half-periods map onto cubic roots.

sigma is never evaluated through its own (branched) logarithm when continuity
matters: :func:`log_sigma_path` integrates zeta_w along the user's path and
accumulates the branch explicitly.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .errors import NonConvergenceError, PoleEvaluationError, ZeroCouplingError
from .model import ModelParams

__all__ = [
    "CubicPotential",
    "WeierstrassInvariants",
    "cubic_from_constants",
    "invariants_from_cubic",
    "wp",
    "wp_prime",
    "w_zeta",
    "w_sigma",
    "wp_inverse",
    "log_sigma_path",
]

_SERIES_KMAX = 20
_SERIES_FILL = 0.36  # fraction of the nearest-pole distance used by the raw series
_POLE_TOL = 1e-9
_DEGENERATE_REL_TOL = 1e-12


@dataclass(frozen=True)
class CubicPotential:
    """Coefficients (a0, a1, a2) of a cubic in u; the leading u^3 sign is
    owned by the caller's convention (see :func:`cubic_from_constants`)."""

    a0: complex
    a1: complex
    a2: complex

    def __post_init__(self):
        for name in ("a0", "a1", "a2"):
            v = getattr(self, name)
            if not (math.isfinite(v.real) and math.isfinite(v.imag)):
                raise ValueError(f"{name} must be finite")


@dataclass(frozen=True)
class WeierstrassInvariants:
    """Invariant pair with derived lattice data.

    ``half_periods`` is (omega1, omega3) with periods (2*omega1, 2*omega3)
    and Im(omega3/omega1) > 0, or None in degenerate cases.
    """

    g2: complex
    g3: complex
    discriminant: complex
    degenerate: bool
    half_periods: tuple[complex, complex] | None

    @classmethod
    def from_g2g3(cls, g2: complex, g3: complex, tol: float = _DEGENERATE_REL_TOL) -> "WeierstrassInvariants":
        g2, g3 = complex(g2), complex(g3)
        disc = g2**3 - 27 * g3**2
        scale = max(abs(g2) ** 3, abs(g3) ** 2)
        degenerate = abs(disc) < tol * scale or scale == 0.0
        half_periods = None
        if not degenerate:
            half_periods = _lattice_for(g2, g3).half_periods
        return cls(g2=g2, g3=g3, discriminant=disc, degenerate=degenerate, half_periods=half_periods)


def cubic_from_constants(n_value: complex, c_value: complex, params: ModelParams) -> CubicPotential:
    """Coefficients of the descent polynomial governing u = (1-zeta*eta)/(1+zeta*eta).

    Along any solution of the equations of motion,

        (1/2) u'^2 + V(u) = 0,   V(u) = lam^2 (a0 + a1 u + a2 u^2 - u^3),

    with a0 = -2N + 2C^2/lam^2, a1 = 1 - 2*delta*C/lam^2,
    a2 = 2N + delta^2/(2 lam^2).  The sign of the coupling term in a1 and the
    negative leading coefficient are fixed by this energy identity (the cubic
    has double roots at u = +-1 exactly at the two fixed points).
    """
    if params.lam == 0.0:
        raise ZeroCouplingError("cubic reduction undefined at lam = 0; use the decoupled flow")
    lam2 = params.lam**2
    a0 = -2.0 * n_value + 2.0 * c_value**2 / lam2
    a1 = 1.0 - 2.0 * params.delta * c_value / lam2
    a2 = 2.0 * n_value + params.delta**2 / (2.0 * lam2)
    return CubicPotential(a0=a0, a1=a1, a2=a2)


def invariants_from_cubic(cubic: CubicPotential) -> WeierstrassInvariants:
    """Invariants of the depressed form of the monic cubic u^3 + a2 u^2 + a1 u + a0.

    Under v = u + a2/3 one has 4(u^3 + a2 u^2 + a1 u + a0) = 4v^3 - g2 v - g3
    with g2 = -4(a1 - a2^2/3) and g3 = -(4/3)(2 a2^2/9 - a1) a2 - 4 a0.
    """
    a0, a1, a2 = cubic.a0, cubic.a1, cubic.a2
    g2 = -4.0 * (a1 - a2**2 / 3.0)
    g3 = -(4.0 / 3.0) * (2.0 * a2**2 / 9.0 - a1) * a2 - 4.0 * a0
    return WeierstrassInvariants.from_g2g3(g2, g3)


# ---------------------------------------------------------------------------
# lattice machinery


def _series_coeffs(g2: complex, g3: complex, kmax: int = _SERIES_KMAX) -> np.ndarray:
    """Laurent coefficients c_k of wp(z) = 1/z^2 + sum c_k z^(2k-2), k >= 2."""
    c = np.zeros(kmax + 1, dtype=complex)
    c[2] = g2 / 20.0
    c[3] = g3 / 28.0
    for k in range(4, kmax + 1):
        acc = 0.0 + 0.0j
        for m in range(2, k - 1):
            acc += c[m] * c[k - m]
        c[k] = 3.0 * acc / ((2 * k + 1) * (k - 3))
    return c


def _agm(a: complex, b: complex) -> complex:
    """Optimal arithmetic-geometric mean for complex seeds."""
    for _ in range(256):
        a1 = 0.5 * (a + b)
        b1 = cmath.sqrt(a * b)
        if abs(a1 - b1) > abs(a1 + b1):
            b1 = -b1
        a, b = a1, b1
        if abs(a - b) <= 1e-16 * max(abs(a), 1e-300):
            break
    return 0.5 * (a + b)


class _Lattice:
    """Cached evaluation context for one (g2, g3) pair."""

    def __init__(self, g2: complex, g3: complex):
        self.g2 = complex(g2)
        self.g3 = complex(g3)
        disc = g2**3 - 27 * g3**2
        scale = max(abs(g2) ** 3, abs(g3) ** 2)
        self.degenerate = scale == 0.0 or abs(disc) < _DEGENERATE_REL_TOL * scale
        self.coeffs = _series_coeffs(g2, g3)
        self.half_periods: tuple[complex, complex] | None = None
        if self.degenerate:
            self._setup_degenerate()
        else:
            self._setup_lattice()

    # -- degenerate limits --------------------------------------------------

    def _setup_degenerate(self):
        if self.g2 == 0 and self.g3 == 0:
            self.double_root = 0.0 + 0.0j
        else:
            roots = np.roots([4.0, 0.0, -self.g2, -self.g3])
            pairs = [(abs(roots[i] - roots[j]), i, j) for i in range(3) for j in range(i + 1, 3)]
            _, i, j = min(pairs)
            self.double_root = 0.5 * (roots[i] + roots[j])
        e = self.double_root
        self.h = cmath.sqrt(3.0 * e) if e != 0 else 0.0

    # -- generic lattice ----------------------------------------------------

    def _setup_lattice(self):
        roots = np.roots([4.0, 0.0, -self.g2, -self.g3])
        best = None
        best_err = math.inf
        for perm in permutations(range(3)):
            e1, e2, e3 = roots[perm[0]], roots[perm[1]], roots[perm[2]]
            m1 = _agm(cmath.sqrt(e1 - e3), cmath.sqrt(e1 - e2))
            m3 = _agm(cmath.sqrt(e1 - e3), cmath.sqrt(e2 - e3))
            if m1 == 0 or m3 == 0:
                continue
            w1 = cmath.pi / (2.0 * m1)
            w3 = 1j * cmath.pi / (2.0 * m3)
            tau = w3 / w1
            if abs(tau.imag) < 1e-12:
                continue
            if tau.imag < 0:
                w3 = -w3
            cand = (w1, w3, e1, e3)
            err = self._verify_lattice(cand)
            if err < best_err:
                best, best_err = cand, err
            if err < 1e-10:
                break
        if best is None or best_err > 1e-7:
            raise NonConvergenceError(
                f"half-period computation failed for these invariants (err={best_err:.2e})"
            )
        w1, w3 = best[0], best[1]
        self.half_periods = (w1, w3)
        self.roots = tuple(roots)
        # basis matrix for lattice reduction in (2w1, 2w3) coordinates
        self._basis = np.array(
            [[(2 * w1).real, (2 * w3).real], [(2 * w1).imag, (2 * w3).imag]]
        )
        self._basis_inv = np.linalg.inv(self._basis)
        spans = [abs(2 * w1), abs(2 * w3), abs(2 * w1 + 2 * w3), abs(2 * w1 - 2 * w3)]
        self.min_period = min(spans)
        self.series_radius = _SERIES_FILL * self.min_period
        self.eta1 = self._zeta_raw(np.array([w1]))[0]
        self.eta3 = self._zeta_raw(np.array([w3]))[0]
        legendre = self.eta1 * w3 - self.eta3 * w1 - 0.5j * cmath.pi
        if abs(legendre) > 1e-8 * max(1.0, abs(self.eta1 * w3)):
            raise NonConvergenceError(f"Legendre relation violated: |res| = {abs(legendre):.2e}")

    def _verify_lattice(self, cand) -> float:
        w1, w3, e1, e3 = cand
        spans = [abs(2 * w1), abs(2 * w3), abs(2 * w1 + 2 * w3), abs(2 * w1 - 2 * w3)]
        self.min_period = min(spans)
        self.series_radius = _SERIES_FILL * self.min_period
        scale = max(abs(e1), abs(e3), 1.0)
        try:
            p1 = self._wp_raw(np.array([w1]))[0]
            p3 = self._wp_raw(np.array([w3]))[0]
        except (FloatingPointError, ZeroDivisionError):
            return math.inf
        return max(abs(p1 - e1), abs(p3 - e3)) / scale

    # -- raw series + duplication (no lattice reduction) ---------------------

    def _series_eval(self, w: np.ndarray):
        c = self.coeffs
        w2 = w * w
        p = 1.0 / w2
        dp = -2.0 / (w2 * w)
        zt = 1.0 / w
        ls = np.zeros_like(w)  # log(sigma/w)
        wp_pow = np.ones_like(w)  # w^(2k-4) accumulating
        for k in range(2, len(c)):
            wp_pow = wp_pow * w2 if k > 2 else wp_pow
            zk = c[k] * wp_pow  # c_k w^(2k-4)
            p = p + zk * w2  # c_k w^(2k-2)
            dp = dp + (2 * k - 2) * zk * w  # c_k (2k-2) w^(2k-3)
            zt = zt - zk * w2 * w / (2 * k - 1)
            ls = ls - zk * w2 * w2 / ((2 * k) * (2 * k - 1))
        return p, dp, zt, ls

    def _dup_count(self, absz: np.ndarray) -> int:
        r0 = self.series_radius
        m = float(np.max(absz, initial=0.0))
        if m <= r0:
            return 0
        return min(24, int(math.ceil(math.log2(m / r0))))

    def _wp_raw(self, z: np.ndarray):
        n = self._dup_count(np.abs(z))
        w = z / (2.0**n)
        p, dp, _, _ = self._series_eval(w)
        g2 = self.g2
        for _ in range(n):
            a = 6.0 * p * p - 0.5 * g2
            pn = (a / (2.0 * dp)) ** 2 - 2.0 * p
            dpn = 3.0 * p * a / dp - a**3 / (4.0 * dp**3) - dp
            p, dp = pn, dpn
        return p

    def _zeta_raw(self, z: np.ndarray):
        n = self._dup_count(np.abs(z))
        w = z / (2.0**n)
        p, dp, zt, _ = self._series_eval(w)
        g2 = self.g2
        for _ in range(n):
            a = 6.0 * p * p - 0.5 * g2
            zt = 2.0 * zt + a / (2.0 * dp)
            pn = (a / (2.0 * dp)) ** 2 - 2.0 * p
            dpn = 3.0 * p * a / dp - a**3 / (4.0 * dp**3) - dp
            p, dp = pn, dpn
        return zt

    # -- reduced evaluation ---------------------------------------------------

    def _reduce(self, z: np.ndarray):
        """Translate z by the period lattice into a centered cell.

        Returns (z_red, m, n) with z = z_red + 2m*w1 + 2n*w3.
        """
        w1, w3 = self.half_periods
        coords = self._basis_inv @ np.vstack([z.real, z.imag])
        m = np.round(coords[0]).astype(np.int64)
        n = np.round(coords[1]).astype(np.int64)
        zr = z - 2.0 * m * w1 - 2.0 * n * w3
        # one neighborhood sweep to reach the centered cell
        best_abs = np.abs(zr)
        for dm in (-1, 0, 1):
            for dn in (-1, 0, 1):
                if dm == 0 and dn == 0:
                    continue
                cand = zr - 2.0 * dm * w1 - 2.0 * dn * w3
                better = np.abs(cand) < best_abs
                if np.any(better):
                    zr = np.where(better, cand, zr)
                    m = np.where(better, m + dm, m)
                    n = np.where(better, n + dn, n)
                    best_abs = np.abs(zr)
        return zr, m, n

    def _check_poles(self, zr: np.ndarray):
        if np.any(np.abs(zr) < _POLE_TOL):
            raise PoleEvaluationError("argument within tolerance of a lattice point")

    def wp_and_prime(self, z: np.ndarray):
        if self.degenerate:
            return self._wp_degenerate(z)
        zr, _, _ = self._reduce(z)
        self._check_poles(zr)
        n = self._dup_count(np.abs(zr))
        w = zr / (2.0**n)
        p, dp, _, _ = self._series_eval(w)
        g2 = self.g2
        for _ in range(n):
            a = 6.0 * p * p - 0.5 * g2
            pn = (a / (2.0 * dp)) ** 2 - 2.0 * p
            dpn = 3.0 * p * a / dp - a**3 / (4.0 * dp**3) - dp
            p, dp = pn, dpn
        return p, dp

    def zeta(self, z: np.ndarray):
        if self.degenerate:
            return self._zeta_degenerate(z)
        zr, m, n = self._reduce(z)
        self._check_poles(zr)
        return self._zeta_raw(zr) + 2.0 * m * self.eta1 + 2.0 * n * self.eta3

    def sigma(self, z: np.ndarray):
        if self.degenerate:
            return self._sigma_degenerate(z)
        zr, m, n = self._reduce(z)
        ndup = self._dup_count(np.abs(zr))
        w = zr / (2.0**ndup)
        p, dp, _, ls = self._series_eval(w)
        s = w * np.exp(ls)
        g2 = self.g2
        for _ in range(ndup):
            a = 6.0 * p * p - 0.5 * g2
            s = -(s**4) * dp
            pn = (a / (2.0 * dp)) ** 2 - 2.0 * p
            dpn = 3.0 * p * a / dp - a**3 / (4.0 * dp**3) - dp
            p, dp = pn, dpn
        # quasi-periodicity back to the original argument
        eta_shift = 2.0 * m * self.eta1 + 2.0 * n * self.eta3
        w1, w3 = self.half_periods
        phase = eta_shift * (zr + m * w1 + n * w3)
        sign = np.where((m + n + m * n) % 2 == 0, 1.0, -1.0)
        return sign * s * np.exp(phase)

    # -- degenerate evaluations ----------------------------------------------

    def _wp_degenerate(self, z: np.ndarray):
        e = self.double_root
        if e == 0:
            if np.any(np.abs(z) < _POLE_TOL):
                raise PoleEvaluationError("argument at the origin pole")
            return 1.0 / z**2, -2.0 / z**3
        h = self.h
        s = np.sinh(h * z)
        if np.any(np.abs(s) < _POLE_TOL * abs(h)):
            raise PoleEvaluationError("argument within tolerance of a lattice point")
        p = e + 3.0 * e / s**2
        dp = -6.0 * e * h * np.cosh(h * z) / s**3
        return p, dp

    def _zeta_degenerate(self, z: np.ndarray):
        e = self.double_root
        if e == 0:
            if np.any(np.abs(z) < _POLE_TOL):
                raise PoleEvaluationError("argument at the origin pole")
            return 1.0 / z
        h = self.h
        s = np.sinh(h * z)
        if np.any(np.abs(s) < _POLE_TOL * abs(h)):
            raise PoleEvaluationError("argument within tolerance of a lattice point")
        return -e * z + h * np.cosh(h * z) / s

    def _sigma_degenerate(self, z: np.ndarray):
        e = self.double_root
        if e == 0:
            return z.astype(complex)
        h = self.h
        return np.sinh(h * z) / h * np.exp(-0.5 * e * z**2)


_LATTICE_CACHE: dict[tuple[complex, complex], _Lattice] = {}


def _lattice_for(g2: complex, g3: complex) -> _Lattice:
    key = (complex(g2), complex(g3))
    lat = _LATTICE_CACHE.get(key)
    if lat is None:
        if len(_LATTICE_CACHE) > 256:
            _LATTICE_CACHE.clear()
        lat = _Lattice(*key)
        _LATTICE_CACHE[key] = lat
    return lat


def _as_lattice(inv: WeierstrassInvariants | tuple) -> _Lattice:
    if isinstance(inv, WeierstrassInvariants):
        return _lattice_for(inv.g2, inv.g3)
    g2, g3 = inv
    return _lattice_for(complex(g2), complex(g3))


def _dispatch(z, fn):
    arr = np.atleast_1d(np.asarray(z, dtype=complex))
    out = fn(arr)
    if np.isscalar(z) or np.asarray(z).ndim == 0:
        if isinstance(out, tuple):
            return tuple(complex(o[0]) for o in out)
        return complex(out[0])
    return out


def wp(z, inv) -> complex | np.ndarray:
    """Weierstrass elliptic function wp(z; g2, g3); vectorized over z."""
    lat = _as_lattice(inv)
    return _dispatch(z, lambda a: lat.wp_and_prime(a)[0])


def wp_prime(z, inv) -> complex | np.ndarray:
    """Derivative wp'(z; g2, g3), satisfying wp'^2 = 4 wp^3 - g2 wp - g3."""
    lat = _as_lattice(inv)
    return _dispatch(z, lambda a: lat.wp_and_prime(a)[1])


def w_zeta(z, inv) -> complex | np.ndarray:
    """Weierstrass zeta function; zeta_w' = -wp, zeta_w(z) = 1/z + O(z^3)."""
    lat = _as_lattice(inv)
    return _dispatch(z, lat.zeta)


def w_sigma(z, inv) -> complex | np.ndarray:
    """Weierstrass sigma function; entire, odd, sigma(z) = z + O(z^5)."""
    lat = _as_lattice(inv)
    return _dispatch(z, lat.sigma)


def _carlson_rf(x: complex, y: complex, z: complex) -> complex:
    """Carlson symmetric integral R_F for complex arguments (principal branches)."""
    for _ in range(200):
        sx, sy, sz = cmath.sqrt(x), cmath.sqrt(y), cmath.sqrt(z)
        lam = sx * sy + sy * sz + sz * sx
        x, y, z = 0.25 * (x + lam), 0.25 * (y + lam), 0.25 * (z + lam)
        mu = (x + y + z) / 3.0
        if abs(mu) == 0:
            break
        eps = max(abs(x - mu), abs(y - mu), abs(z - mu)) / abs(mu)
        if eps < 1e-12:
            break
    X = (mu - x) / mu
    Y = (mu - y) / mu
    Z = -X - Y
    e2 = X * Y - Z * Z
    e3 = X * Y * Z
    series = 1.0 - e2 / 10.0 + e3 / 14.0 + e2 * e2 / 24.0 - 3.0 * e2 * e3 / 44.0
    return series / cmath.sqrt(mu)


def wp_inverse(target: complex, inv, branch_hint: complex | None = None) -> complex:
    """A value A with wp(A) = target.

    Among the two sign branches and nearby lattice translates the result
    minimizes |A - branch_hint|; with no hint the incomplete-integral
    principal value (Carlson R_F seed, Newton-polished) is returned.
    """
    lat = _as_lattice(inv)
    target = complex(target)
    if lat.degenerate:
        e = lat.double_root
        if e == 0:
            if target == 0:
                raise NonConvergenceError("cannot invert wp(z)=1/z^2 at target 0")
            seed = 1.0 / cmath.sqrt(target)
        else:
            if target == e:
                raise NonConvergenceError("target equals the double root (infinite argument)")
            seed = cmath.asinh(cmath.sqrt(3.0 * e / (target - e))) / lat.h
        candidates = [seed, -seed]
    else:
        e1, e2, e3 = lat.roots
        seed = _carlson_rf(target - e1, target - e2, target - e3)
        candidates = [seed, -seed]

    scale = max(1.0, abs(target))
    polished = []
    for cand in candidates:
        a = cand
        ok = False
        for _ in range(40):
            try:
                p, dp = lat.wp_and_prime(np.array([a]))
            except PoleEvaluationError:
                break
            err = p[0] - target
            if abs(err) < 1e-12 * scale:
                ok = True
                break
            if dp[0] == 0:
                break
            step = err / dp[0]
            if abs(step) > 0.5 * (lat.min_period if not lat.degenerate else 1e6):
                step *= 0.5 * lat.min_period / abs(step)
            a = a - step
        if ok:
            polished.append(a)
    if not polished:
        raise NonConvergenceError("wp_inverse Newton refinement did not converge",
                                  best_residual=float("nan"))

    if branch_hint is None:
        return polished[0]
    hint = complex(branch_hint)
    cands = []
    for a in polished:
        for base in (a, -a):
            if lat.degenerate or lat.half_periods is None:
                cands.append(base)
                continue
            w1, w3 = lat.half_periods
            for mm in (-1, 0, 1):
                for nn in (-1, 0, 1):
                    cands.append(base + 2 * mm * w1 + 2 * nn * w3)
    best = min(cands, key=lambda a: abs(a - hint))
    # re-polish after translation to clean up rounding
    for _ in range(8):
        p, dp = lat.wp_and_prime(np.array([best]))
        err = p[0] - target
        if abs(err) < 1e-12 * scale or dp[0] == 0:
            break
        best = best - err / dp[0]
    return best


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(7)


def _segment_integrals(lat: _Lattice, z0: np.ndarray, z1: np.ndarray) -> np.ndarray:
    """Gauss-Legendre estimate of int zeta_w dz over straight segments."""
    mid = 0.5 * (z0 + z1)
    half = 0.5 * (z1 - z0)
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    vals = lat.zeta(nodes.ravel()).reshape(nodes.shape)
    if np.any(~np.isfinite(vals)) or np.any(np.abs(vals) > 1e10):
        raise PoleEvaluationError("zeta_w blows up on the integration path")
    return half * (vals @ _GL_WEIGHTS)


def log_sigma_path(zs, inv, rtol: float = 1e-11, max_depth: int = 14) -> np.ndarray:
    """Continuous log sigma along the polyline zs, relative to its first point.

    Returns L with L[0] = 0 and L[k] = log sigma(zs[k]) - log sigma(zs[0]),
    the branch accumulated by integrating zeta_w along the path.  The path
    must stay away from lattice points (sigma zeros).
    """
    lat = _as_lattice(inv)
    zs = np.asarray(zs, dtype=complex)
    if zs.ndim != 1 or len(zs) < 1:
        raise ValueError("zs must be a 1-d array of path points")
    if len(zs) == 1:
        return np.zeros(1, dtype=complex)
    z0, z1 = zs[:-1], zs[1:]

    def refine(a: np.ndarray, b: np.ndarray, coarse: np.ndarray, depth: int) -> np.ndarray:
        midpt = 0.5 * (a + b)
        left = _segment_integrals(lat, a, midpt)
        right = _segment_integrals(lat, midpt, b)
        fine = left + right
        err = np.abs(fine - coarse)
        bad = err > rtol * (1.0 + np.abs(fine))
        if np.any(bad) and depth < max_depth:
            fine_l = left.copy()
            fine_r = right.copy()
            fine_l[bad] = refine(a[bad], midpt[bad], left[bad], depth + 1)
            fine_r[bad] = refine(midpt[bad], b[bad], right[bad], depth + 1)
            return fine_l + fine_r
        return fine

    coarse = _segment_integrals(lat, z0, z1)
    increments = refine(z0, z1, coarse, 0)
    return np.concatenate([[0.0 + 0.0j], np.cumsum(increments)])
