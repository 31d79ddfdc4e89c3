"""Command-line interface: series, comparisons and parameter scans with
deterministic CSV/JSON output.

Commands
--------
exact       amplitude <final| U(t) |initial> from the block closed form
dopa        dominant-path amplitude over a horizon grid
linearized  pole-linearized boundary-value trajectory samples
fluct       fluctuation-corrected survival amplitude (up-vacuum only)
compare     per-method amplitudes side by side with deviations from exact
scan        parameter sweep of scalar observables (worker pool)

Output starts with the schema header line and is byte-identical for a fixed
config.  Exit codes: 0 success, 2 config error, 3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import cmath
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import dopa as dopa_mod
from . import exact as exact_mod
from . import fluctuations as fluct_mod
from . import poles as poles_mod
from .dopa import SCHEMA_HEADER, BoundaryData
from .errors import NonConvergenceError
from .model import CanonicalCoherentState, ModelParams, SpinCoherentState

__all__ = ["RunConfig", "run", "main"]

_DEFAULTS = {
    "lam": "0.5",
    "delta": "0.0",
    "t_end": 10.0,
    "samples": 101,
    "state": "up-vacuum",
    "state_final": None,  # defaults to state
    "method": None,
    "format": "csv",
    "out": None,
    "n_max": 32,
    "pole": "north",
    "observable": "survival-min",
    "tol_shoot": 1e-10,
    "tol_ivp": 1e-11,
    "tol_quad": 1e-9,
}


@dataclass
class RunConfig:
    """Resolved configuration of one CLI invocation."""

    command: str
    lam: str
    delta: str
    t_end: float
    samples: int
    state: str
    state_final: str | None
    method: str | None
    format: str
    out: str | None
    n_max: int
    pole: str
    observable: str
    tol_shoot: float
    tol_ivp: float
    tol_quad: float
    dump_config: bool = False
    extra: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.t_end <= 0:
            raise ValueError("t-end must be positive")
        if self.samples < 2:
            raise ValueError("samples must be >= 2")
        if self.format not in ("csv", "json"):
            raise ValueError("format must be csv or json")

    @property
    def params(self) -> ModelParams:
        return ModelParams(lam=_scalar(self.lam), delta=_scalar(self.delta))

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in (
            "command", "lam", "delta", "t_end", "samples", "state", "state_final",
            "method", "format", "out", "n_max", "pole", "observable",
            "tol_shoot", "tol_ivp", "tol_quad",
        )}
        return d


def _scalar(spec: str) -> float:
    if ":" in str(spec):
        raise ValueError(f"range syntax {spec!r} only allowed for scan")
    return float(spec)


def _axis(spec: str) -> np.ndarray:
    """'a:b:n' -> n uniform values in [a, b]; a bare number -> length-1 axis."""
    s = str(spec)
    if ":" in s:
        a, b, n = s.split(":")
        n = int(n)
        if n < 1:
            raise ValueError("range count must be >= 1")
        return np.linspace(float(a), float(b), n)
    return np.array([float(s)])


def parse_state(spec: str) -> tuple[SpinCoherentState, CanonicalCoherentState]:
    """Named presets: up-vacuum, down-vacuum, coherent:<alpha>:<theta>:<phi>."""
    if spec == "up-vacuum":
        return SpinCoherentState(0.0, 0.0), CanonicalCoherentState(0.0, 0.0)
    if spec == "down-vacuum":
        return SpinCoherentState(math.pi, 0.0), CanonicalCoherentState(0.0, 0.0)
    if spec.startswith("coherent:"):
        try:
            _, alpha_s, theta_s, phi_s = spec.split(":")
            alpha = complex(alpha_s)
            spin = SpinCoherentState(float(theta_s), float(phi_s) % (2 * math.pi))
        except ValueError as exc:
            raise ValueError(f"bad coherent state spec {spec!r}") from exc
        return spin, CanonicalCoherentState.from_alpha(alpha)
    raise ValueError(f"unknown state preset {spec!r}")


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _emit(config: RunConfig, columns: list[str], rows: list[list], comments: list[str]) -> None:
    if config.format == "csv":
        lines = [SCHEMA_HEADER]
        lines += [f"# {c}" for c in comments]
        lines.append(",".join(columns))
        for row in rows:
            lines.append(",".join(x if isinstance(x, str) else _fmt(x) for x in row))
        text = "\n".join(lines) + "\n"
    else:
        payload = {
            "schema_version": SCHEMA_HEADER.lstrip("# "),
            "config": config.as_dict(),
            "comments": comments,
            "columns": columns,
            "rows": [
                [x if isinstance(x, str) else float(x) for x in row] for row in rows
            ],
        }
        text = json.dumps(payload, indent=1, sort_keys=True) + "\n"
    if config.out:
        with open(config.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# command implementations


def _exact_series(config: RunConfig):
    params = config.params
    spin_i, osc_i = parse_state(config.state)
    spin_f, osc_f = parse_state(config.state_final or config.state)
    vi = exact_mod.product_coherent_vector(osc_i, spin_i, config.n_max)
    vf = exact_mod.product_coherent_vector(osc_f, spin_f, config.n_max)
    h = exact_mod.build_hamiltonian(params, config.n_max).matrix
    evals, vecs = np.linalg.eigh(h)
    wi = vecs.conjugate().T @ vi
    wf = vecs.conjugate().T @ vf
    ts = np.linspace(0.0, config.t_end, config.samples)
    rows = []
    for t in ts:
        val = complex(np.sum(wf.conjugate() * np.exp(-1j * evals * t) * wi))
        rows.append([t, val.real, val.imag, abs(val) ** 2, "exact"])
    cols = ["t", "re_value", "im_value", "survival", "method"]
    return cols, rows, [f"n_max: {config.n_max}"]


def _dopa_series(config: RunConfig):
    params = config.params
    spin_i, osc_i = parse_state(config.state)
    spin_f, osc_f = parse_state(config.state_final or config.state)
    ts = np.linspace(0.0, config.t_end, config.samples)
    comments = []
    if spin_i.theta == 0.0 and spin_f.theta == 0.0 and osc_i.alpha == 0 and osc_f.alpha == 0:
        vals = [fluct_mod.dopa_north_phase(t, params) for t in ts]
        residuals = [0.0] * len(ts)
    elif (
        abs(spin_i.theta - math.pi) < 1e-12
        and abs(spin_f.theta - math.pi) < 1e-12
        and osc_i.alpha == 0
        and osc_f.alpha == 0
    ):
        vals = [cmath.exp(0.5j * (1.0 + params.delta) * t) for t in ts]
        residuals = [0.0] * len(ts)
    else:
        boundary = BoundaryData.from_states(spin_i, osc_i, spin_f, osc_f, config.t_end)
        energies = dopa_mod.horizon_energies(
            boundary, params, ts, tol=config.tol_shoot, rtol=config.tol_ivp
        )
        overlap = dopa_mod._data_overlap_product(boundary)
        phase = _cumulative_integral(ts, energies)
        vals = [overlap * cmath.exp(-1j * p) for p in phase]
        residuals = [config.tol_shoot] * len(ts)
        sol = dopa_mod.shoot(boundary, params, tol=config.tol_shoot, rtol=config.tol_ivp)
        element = dopa_mod.dopa_propagator(sol, boundary, params, quad_tol=config.tol_quad)
        comments.append(f"rep_discrepancy_at_t_end: {element.info['discrepancy']:.3e}")
        vals[-1] = element.value
        residuals[-1] = sol.residual
    rows = [
        [t, v.real, v.imag, abs(v) ** 2, r, "dopa"]
        for t, v, r in zip(ts, vals, residuals)
    ]
    cols = ["t", "re_value", "im_value", "survival", "residual", "method"]
    return cols, rows, comments


def _cumulative_integral(ts: np.ndarray, vals: np.ndarray) -> np.ndarray:
    """Cumulative trapezoid with Richardson-style midpoint refinement skipped:
    the horizon-energy samples are smooth, so plain trapezoid on the output
    grid is adequate for series emission."""
    out = np.zeros(len(ts), dtype=complex)
    out[1:] = np.cumsum(0.5 * (vals[1:] + vals[:-1]) * np.diff(ts))
    return out


def _linearized_series(config: RunConfig):
    params = config.params
    spin_i, osc_i = parse_state(config.state)
    spin_f, osc_f = parse_state(config.state_final or config.state)
    ts = np.linspace(0.0, config.t_end, config.samples)
    rows = []
    if config.pole == "north":
        boundary = BoundaryData.from_states(spin_i, osc_i, spin_f, osc_f, config.t_end)
        for t in ts:
            pt = poles_mod.north_bvp_solution(boundary, params, float(t))
            rows.append([t, pt.alpha.real, pt.alpha.imag, pt.beta.real, pt.beta.imag,
                         pt.zeta.real, pt.zeta.imag, pt.eta.real, pt.eta.imag])
        names = ("alpha", "beta", "delta_zeta", "delta_eta")
    else:
        # reciprocal data: rho(0) = 1/zeta(0), sigma(T) = 1/eta(T)
        from .model import stereographic_from_angles

        z_i, _ = stereographic_from_angles(spin_i)
        _, e_f = stereographic_from_angles(spin_f)
        if abs(z_i) < 1e-12 or abs(e_f) < 1e-12:
            raise ValueError("south linearization needs states away from the north pole")
        rec = poles_mod.ReciprocalBoundaryData(
            alpha_initial=osc_i.alpha,
            rho_initial=1.0 / z_i,
            beta_final=osc_f.alpha.conjugate(),
            sigma_final=1.0 / e_f,
            horizon=config.t_end,
        )
        for t in ts:
            pt = poles_mod.south_bvp_solution(rec, params, float(t))
            rows.append([t, pt.alpha.real, pt.alpha.imag, pt.beta.real, pt.beta.imag,
                         pt.zeta.real, pt.zeta.imag, pt.eta.real, pt.eta.imag])
        names = ("alpha", "beta", "delta_rho", "delta_sigma")
    cols = ["t"]
    for nm in names:
        cols += [f"re_{nm}", f"im_{nm}"]
    return cols, rows, [f"pole: {config.pole}", "method: linearized"]


def _fluct_series(config: RunConfig):
    params = config.params
    if config.state != "up-vacuum" or (config.state_final or config.state) != "up-vacuum":
        raise ValueError("fluct requires --state up-vacuum (north-pole fixed point)")
    ts = np.linspace(0.0, config.t_end, config.samples)
    rows = []
    for t in ts:
        el = fluct_mod.corrected_survival(float(t), params)
        rows.append([t, el.value.real, el.value.imag, abs(el.value) ** 2,
                     "fluctuation-corrected"])
    cols = ["t", "re_value", "im_value", "survival", "method"]
    return cols, rows, []


def _compare_series(config: RunConfig):
    params = config.params
    cols_e, rows_e, _ = _exact_series(config)
    cols_d, rows_d, comments = _dopa_series(config)
    is_up_vacuum = (
        config.state == "up-vacuum" and (config.state_final or config.state) == "up-vacuum"
    )
    cols = ["t", "re_exact", "im_exact", "re_dopa", "im_dopa", "abs_dev_dopa"]
    if is_up_vacuum:
        cols += ["re_fluct", "im_fluct", "abs_dev_fluct", "dopa_modulus"]
    rows = []
    for k in range(len(rows_e)):
        t = rows_e[k][0]
        ve = complex(rows_e[k][1], rows_e[k][2])
        vd = complex(rows_d[k][1], rows_d[k][2])
        row = [t, ve.real, ve.imag, vd.real, vd.imag, abs(vd - ve)]
        if is_up_vacuum:
            vf = fluct_mod.corrected_survival(float(t), params).value
            row += [vf.real, vf.imag, abs(vf - ve), abs(vd)]
        rows.append(row)
    return cols, rows, comments


def _survival_curve(params: ModelParams):
    def survival(t: float) -> float:
        return abs(exact_mod.survival_up_vacuum(t, params)) ** 2

    return survival


def _scan_point(args) -> list:
    lam, delta, observable, t_end_opt, samples = args
    params = ModelParams(lam=lam, delta=delta)
    om = fluct_mod.rabi_frequency_vacuum(params)
    t_end = t_end_opt if t_end_opt is not None else (math.pi / om if om > 0 else 10.0)
    surv = _survival_curve(params)
    ts = np.linspace(0.0, t_end, samples)
    vals = np.array([surv(t) for t in ts])
    if observable == "survival-final":
        return [lam, delta, vals[-1], t_end]
    if observable == "survival-min":
        k = int(np.argmin(vals))
        lo = ts[max(0, k - 1)]
        hi = ts[min(len(ts) - 1, k + 1)]
        res = minimize_scalar(surv, bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        t_min = float(res.x)
        v_min = float(min(res.fun, vals[k]))
        return [lam, delta, v_min, t_min]
    raise ValueError(f"unknown observable {observable!r}")


def _scan(config: RunConfig):
    lams = _axis(config.lam)
    deltas = _axis(config.delta)
    t_end_opt = config.t_end if config.extra.get("t_end_given") else None
    points = [
        (float(lam), float(delta), config.observable, t_end_opt, config.samples)
        for lam in lams
        for delta in deltas
    ]
    workers = int(os.environ.get("SCJC_NUM_WORKERS", "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_scan_point, points))
    else:
        rows = [_scan_point(p) for p in points]
    cols = ["lambda", "delta", config.observable, "t_observable"]
    return cols, rows, [f"workers: {workers}"]


def run(config: RunConfig) -> int:
    """Execute one command; returns the process exit status."""
    try:
        config.validate()
        if config.dump_config:
            sys.stdout.write(json.dumps(config.as_dict(), indent=1, sort_keys=True) + "\n")
            return 0
        if config.command == "exact":
            cols, rows, comments = _exact_series(config)
        elif config.command == "dopa":
            cols, rows, comments = _dopa_series(config)
        elif config.command == "linearized":
            cols, rows, comments = _linearized_series(config)
        elif config.command == "fluct":
            cols, rows, comments = _fluct_series(config)
        elif config.command == "compare":
            cols, rows, comments = _compare_series(config)
        elif config.command == "scan":
            cols, rows, comments = _scan(config)
        else:
            raise ValueError(f"unknown command {config.command!r}")
    except NonConvergenceError as exc:
        sys.stderr.write(f"solver non-convergence: {exc} (best residual "
                         f"{exc.best_residual:.3e})\n")
        return 3
    except (ValueError, KeyError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    _emit(config, cols, rows, comments)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="semiclassical-jc",
        description="Jaynes-Cummings propagators: exact, dominant-path, "
        "linearized and fluctuation-corrected",
    )
    ap.add_argument("command", choices=["exact", "dopa", "linearized", "fluct",
                                        "compare", "scan"])
    ap.add_argument("--config", help="JSON config file; flags override its values")
    ap.add_argument("--lambda", dest="lam", help="coupling g/omega; a:b:n for scan")
    ap.add_argument("--delta", help="detuning; a:b:n for scan")
    ap.add_argument("--t-end", dest="t_end", type=float)
    ap.add_argument("--samples", type=int)
    ap.add_argument("--state", help="up-vacuum | down-vacuum | coherent:<alpha>:<theta>:<phi>")
    ap.add_argument("--state-final", dest="state_final")
    ap.add_argument("--method", help="restrict compare output to one method tag")
    ap.add_argument("--format", choices=["csv", "json"])
    ap.add_argument("--out")
    ap.add_argument("--n-max", dest="n_max", type=int)
    ap.add_argument("--pole", choices=["north", "south"])
    ap.add_argument("--observable", choices=["survival-min", "survival-final"])
    ap.add_argument("--tol-shoot", dest="tol_shoot", type=float)
    ap.add_argument("--tol-ivp", dest="tol_ivp", type=float)
    ap.add_argument("--tol-quad", dest="tol_quad", type=float)
    ap.add_argument("--dump-config", action="store_true")
    return ap


def main(argv: list[str] | None = None) -> int:
    ns = _build_parser().parse_args(argv)
    settings = dict(_DEFAULTS)
    if ns.config:
        try:
            with open(ns.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            sys.stderr.write(f"config error: cannot read {ns.config}: {exc}\n")
            return 2
        unknown = set(file_cfg) - set(_DEFAULTS)
        if unknown:
            sys.stderr.write(f"config error: unknown keys {sorted(unknown)}\n")
            return 2
        settings.update(file_cfg)
    t_end_given = ns.t_end is not None or (ns.config and "t_end" in settings)
    for key in _DEFAULTS:
        val = getattr(ns, key, None)
        if val is not None:
            settings[key] = val
    config = RunConfig(
        command=ns.command,
        dump_config=ns.dump_config,
        extra={"t_end_given": t_end_given},
        **settings,
    )
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
