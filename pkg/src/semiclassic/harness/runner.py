"""Scenario pipelines: quantum solve, phase-space fields, particles, tables.

Every scenario writes into ``<out>/<scenario>/`` and ends with one manifest.
A failing stage is recorded in the manifest and the outputs written so far
are kept.  Independent cases (one per ``m``, ``(hbar, theta)`` pair, ...)
run on a process pool when ``jobs > 1``; each case writes its own files, and
results are collected in submission order so the output is deterministic.
"""
from __future__ import annotations

import logging
import math
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .. import __version__
from ..core.grids import SemiclassicalConfig
from ..core.potentials import abs_saddle_potential, power_saddle_potential
from ..core.splines import SplineSpace
from ..core.states import InitialDataSpec, ResolutionError, build_initial_data
from ..core.testfunc import TestFunction
from ..liouville import (
    Ensemble,
    FlowSpec,
    detect_interference,
    measure_ensemble,
    partition,
    propagate,
    sample_particles,
)
from ..observables import compare, correlation, emp, measure_position, moment_family, write_table
from ..schrodinger.adaptive import SolveTrace, solve_adaptive
from ..schrodinger.eoc import double_well_problem, nonsmooth_problem, run_eoc, trap_problem
from ..wigner import RangeError, pair, transform
from . import io
from .config import Scenario, default_tol, make_scenario

log = logging.getLogger(__name__)

EMP_HEADER = ("theta", "hbar", "emp_quantum", "emp_classical")
MAX_ENLARGE = 2


@dataclass
class RunManifest:
    scenario: str
    params: dict
    overrides: dict
    version: str
    wall_time: float
    files: list
    status: str
    failures: list
    summary: dict
    path: Path
    directory: Path


@dataclass
class CaseResult:
    """What one independent job hands back (everything picklable)."""

    files: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    data: dict = field(default_factory=dict)


class _Stages:
    """Run named stages, turning exceptions into recorded failures."""

    def __init__(self, result: CaseResult, prefix: str = ""):
        self.result = result
        self.prefix = prefix

    def __call__(self, name: str, fn: Callable, *args, **kw):
        try:
            return fn(*args, **kw)
        except Exception as exc:  # noqa: BLE001 - every stage failure is reported
            log.debug("stage %s failed:\n%s", name, traceback.format_exc())
            self.result.failures.append(f"{self.prefix}{name}: {type(exc).__name__}: {exc}")
            return None


def _pool_map(fn, items: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(*it) for it in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        futures = [pool.submit(fn, *it) for it in items]
        return [f.result() for f in futures]


def _tag(v: float) -> str:
    return f"{v:.6g}"


# -- quantum solve with domain enlargement ----------------------------------

def solve_on_domain(datum, potential, hbar: float, tol: float, domain, degree: int, T: float,
                    snapshot_times: Sequence[float] = (), cells_per_hbar: float = 0.5,
                    notes: Optional[list] = None, normalize: bool = False):
    """Adaptive solve of ``datum`` (an :class:`InitialDataSpec` or a callable).

    The initial mesh has ``cells_per_hbar / hbar`` cells per unit length.
    When the boundary-mass monitor fires the domain is enlarged by half its
    width on each side (at most twice) and the solve is repeated; every
    enlargement is appended to ``notes``.  ``normalize`` rescales the datum
    to unit norm (the tolerance is absolute).  Returns ``(trace, domain)``.
    """
    a, b = map(float, domain)
    for attempt in range(MAX_ENLARGE + 1):
        cells = max(20, int(math.ceil((b - a) * cells_per_hbar / hbar)))
        space = SplineSpace.uniform(a, b, cells, degree)
        u0 = datum
        if isinstance(datum, InitialDataSpec):
            for _ in range(3):
                try:
                    u0 = build_initial_data(datum, space, SemiclassicalConfig(hbar))
                    break
                except ResolutionError:
                    space = space.refine()
            else:
                u0 = build_initial_data(datum, space, SemiclassicalConfig(hbar))
            if normalize:
                u0 = _normalized(datum, hbar, u0.norm())
        tr = solve_adaptive(space, potential, u0, T, tol, hbar, keep="snapshots",
                            snapshot_times=snapshot_times)
        small = [w for w in tr.warnings if w.startswith("domain too small")]
        if not small or attempt == MAX_ENLARGE:
            return tr, (a, b)
        half = 0.5 * (b - a)
        a, b = a - half, b + half
        if notes is not None:
            notes.append(f"domain enlarged to [{a:g}, {b:g}] after: {small[0]}")
    return tr, (a, b)  # pragma: no cover


def _normalized(spec: InitialDataSpec, hbar: float, norm: float) -> Callable:
    f = spec.functions(hbar)[0]
    return lambda x: f(x) / norm


def _right_mass(u) -> float:
    return measure_position(u, lambda x: (x > 0).astype(float), breakpoints=(0.0,))


def _display_field(u, sigma: float, hbar: float, domain, nx: int, k_window=(-1.0, 1.0)):
    """SWT for emission; widens to the whole solve domain if the mass reaches
    the edge of the requested window."""
    lo, hi = domain
    for window in ((max(lo, -4.5), min(hi, 4.5)), (lo, hi)):
        try:
            return transform(u, sigma, sigma, hbar=hbar, domain=window, nx=nx, k_window=k_window)
        except RangeError:
            continue
    return transform(u, sigma, sigma, hbar=hbar, domain=(lo, hi), nx=nx, k_window=k_window,
                     range_tol=np.inf)


def _emit_field(f, stem: Path, title: str, res: CaseResult) -> None:
    m, b = io.dump_field(f, stem)
    res.files += [m, b, io.write_marginals(f, stem.with_name(stem.name + "_marginals.csv"))]
    res.files.append(io.gnuplot_field(stem.with_suffix(".gp"), m.name, b.name, f.x.size, f.k.size,
                                      float(f.x[0]), f.dx, float(f.k[0]), f.dk, title))


def _particles(u, sigma: float, hbar: float, domain, n_target: int,
               k_window=(-1.5, 1.5)) -> Ensemble:
    f = transform(u, sigma, sigma, hbar=hbar, domain=domain, k_window=k_window)
    return sample_particles(f, n_target=n_target, hbar=hbar)


def _support(u, frac: float = 1e-10, pad: float = 1.0):
    """Interval holding the state's mass, padded (for the particle field)."""
    x = np.linspace(u.a, u.b, 4001)
    d = np.abs(u(x)) ** 2
    live = np.nonzero(d > frac * d.max())[0]
    return max(u.a, float(x[live[0]]) - pad), min(u.b, float(x[live[-1]]) + pad)


def _check_rows(rows) -> dict:
    q = np.array([r.quantum for r in rows])
    c = np.array([r.classical for r in rows])
    b = np.array([r.bound for r in rows])
    rel = np.abs(q - c) / np.maximum(np.abs(q), 1e-300)
    ok = np.abs(q - c) <= np.maximum(0.05 * np.abs(q), b)
    return {"max_rel": float(rel.max()), "violations": int((~ok).sum()),
            "correlation": correlation(q, c)}


# -- non-interference and WKB slicing ---------------------------------------

def _comparison_case(p: dict, kind: str, m: Optional[float], outdir: str) -> CaseResult:
    """Quantum solve, emitted fields, particles, partition and measurements."""
    outdir = Path(outdir)
    res = CaseResult()
    stage = _Stages(res, f"m={_tag(m)} " if m is not None else "")
    h, T = float(p["hbar"]), float(p["T"])
    tol = p["tol"] if p["tol"] is not None else default_tol(h)
    V = abs_saddle_potential(p["cutoff"])
    if kind == "split":
        datum = InitialDataSpec("gaussian_wkb", x0=p["x0"], m=m)
        tag, snaps, meas = f"m{_tag(m)}", list(p["snapshots"]), [0.0] + list(p["snapshots"])
    else:
        datum = InitialDataSpec("wkb_slice")
        tag, snaps, meas = "wkb", list(p["snapshots"]), [0.0] + list(p["measure_times"])
    stops = sorted((set(snaps) | set(meas)) - {0.0, T})
    notes: list = []
    out = stage("solve", solve_on_domain, datum, V, h, tol, p["domain"], p["degree"], T,
                stops, notes=notes, normalize=kind == "wkb")
    if out is None:
        return res
    tr, domain = out
    res.summary.update({f"{tag}.solve_success": tr.success, f"{tag}.estimate": tr.report.total,
                        f"{tag}.domain": list(domain)})
    res.failures += [f"{tag} note: {n}" for n in notes]
    if not tr.success:
        res.failures.append(f"{tag} solve: {tr.failure}")
    res.files.append(io.write_steps(tr, outdir / f"steps_{tag}.csv"))

    times = sorted({0.0, *snaps, *meas, T})
    for t in times:
        res.files += list(io.dump_state(tr.state_at(t), outdir / f"state_{tag}_t{t:.4f}"))
    for t in sorted({0.0, *snaps, *meas}):
        f = stage(f"field t={t:g}", _display_field, tr.state_at(t), p["sigma_display"], h, domain,
                  p["field_nx"])
        if f is not None:
            _emit_field(f, outdir / f"swt_{tag}_t{t:.4f}", f"SWT {tag} t={t:g}", res)

    u0 = tr.state_at(0.0)
    ens = stage("particles", _particles, u0, p["sigma_particles"], h, _support(u0),
                p["n_particles"])
    if ens is None:
        return res
    ens, (wp, wm, wz) = partition(ens, V, 0.0)
    res.files.append(_write_ensemble(ens, outdir / f"ensemble_{tag}_t0.csv"))
    total = wp + wm + wz
    res.data["partition"] = (m if m is not None else float("nan"), wp, wm, wz,
                             _right_mass(tr.final))
    res.summary.update({f"{tag}.w_plus_fraction": wp / total, f"{tag}.w_minus_fraction": wm / total,
                        f"{tag}.quantum_right_mass": _right_mass(tr.final) / tr.final.norm() ** 2,
                        f"{tag}.truncated_mass": ens.truncated_mass})

    flow = FlowSpec(V, hbar=h)
    symbols = moment_family()
    rows, prev, t_prev = [], ens, 0.0
    mdomain = (max(domain[0], -4.5), min(domain[1], 4.5))
    for t in meas:
        cur = propagate(prev, t - t_prev, flow)
        prev, t_prev = cur, t
        r = stage(f"measure t={t:g}", compare, t, tr.state_at(t), cur, symbols, tol, h,
                  route=p["route"], domain=mdomain)
        rows += r or []
    res.files.append(write_table(rows, outdir / f"measurements_{tag}.csv"))
    res.files.append(io.gnuplot_script(
        outdir / f"measurements_{tag}.gp", f"measurements_{tag}.csv",
        f"quantum vs classical ({tag})", "quantum", ["classical"], "quantum", "classical",
        header=("t", "symbol", "alpha", "beta", "j", "quantum", "classical", "bound", "flag")))
    res.data["rows"] = rows
    after = [r for r in rows if r.t > 0]
    if after:
        chk = _check_rows(after)
        res.summary.update({f"{tag}.{k}": v for k, v in chk.items()})
    return res


def _write_ensemble(ens: Ensemble, path: Path) -> Path:
    rows = zip(ens.weights, ens.x, ens.k, ens.labels)
    return io.write_csv(path, ("weight", "x", "k", "label"),
                        ((float(w), float(x), float(k), int(l)) for w, x, k, l in rows))


def _correlation_rows(tag: str, rows: list, snaps: Sequence[float]) -> list:
    """Correlation over the early, high and late interaction stages, and all."""
    s = list(snaps)
    groups = {"early": s[:1], "high": s[1:-1], "late": s[-1:], "all": s}
    out = []
    for name, ts in groups.items():
        sel = [r for r in rows if any(abs(r.t - t) < 1e-12 for t in ts)]
        if len(sel) >= 2:
            out.append((tag, name, len(sel), correlation([r.quantum for r in sel],
                                                         [r.classical for r in sel])))
    return out


def _run_split(s: Scenario, outdir: Path, jobs: int):
    p = s.params
    results = _pool_map(_comparison_case, [(p, "split", float(m), str(outdir)) for m in p["m"]],
                        jobs)
    corr, parts = [], []
    for m, r in zip(p["m"], results):
        if "rows" in r.data:
            corr += _correlation_rows(f"m{_tag(float(m))}", r.data["rows"], p["snapshots"])
        if "partition" in r.data:
            parts.append(r.data["partition"])
    extra = []
    if corr:
        extra.append(io.write_csv(outdir / "correlation.csv", ("case", "stage", "n", "correlation"),
                                  corr))
    if parts:
        extra.append(io.write_csv(outdir / "partition.csv",
                                  ("m", "w_plus", "w_minus", "w_zero", "quantum_right_mass"), parts))
    return results, extra


def _run_wkb(s: Scenario, outdir: Path, jobs: int):
    p = s.params
    r = _comparison_case(p, "wkb", None, str(outdir))
    extra = []
    if "partition" in r.data:
        extra.append(io.write_csv(outdir / "partition.csv",
                                  ("m", "w_plus", "w_minus", "w_zero", "quantum_right_mass"),
                                  [r.data["partition"]]))
    return [r], extra


# -- collisions -------------------------------------------------------------

def _emp_value(right: float, left: float, convention: str) -> float:
    d = (right - left) / (right + left)
    return 0.5 * d if convention == "excess" else d


def _collide_quantum(p: dict, h: float, theta: float, outdir: str) -> CaseResult:
    outdir = Path(outdir)
    res = CaseResult()
    tag = f"h{_tag(h)}_theta{_tag(theta)}"
    stage = _Stages(res, tag + " ")
    tol = p["tol"] if p["tol"] is not None else default_tol(h)
    V = abs_saddle_potential(p["cutoff"])
    datum = InitialDataSpec("collision_pair", x0=p["x0"], theta=theta)
    notes: list = []
    t_star = float(p["t_star"])
    stops = [t_star] if t_star < p["T"] else []
    out = stage("solve", solve_on_domain, datum, V, h, tol, p["domain"], p["degree"], p["T"],
                stops, notes=notes)
    if out is None:
        return res
    tr, domain = out
    res.failures += [f"{tag} note: {n}" for n in notes]
    if not tr.success:
        res.failures.append(f"{tag} solve: {tr.failure}")
    res.files.append(io.write_steps(tr, outdir / f"steps_{tag}.csv"))
    u = tr.state_at(t_star)
    res.files += list(io.dump_state(u, outdir / f"state_{tag}_t{t_star:.4f}"))
    f = stage("field", _display_field, u, p["sigma_display"], h, domain, p["field_nx"])
    if f is not None:
        _emit_field(f, outdir / f"swt_{tag}_t{t_star:.4f}", f"SWT {tag} t={t_star:g}", res)
    res.data.update(emp=emp(u, t_star, p["emp_convention"]), estimate=tr.report.total,
                    success=tr.success, domain=domain, tol=tol)
    return res


def _collide_classical(p: dict, h: float, outdir: str) -> CaseResult:
    """Classical side of a collision.  It never sees ``theta``: the density is
    the smoothed transform of the left packet plus its mirror image."""
    outdir = Path(outdir)
    res = CaseResult()
    tag = f"h{_tag(h)}"
    stage = _Stages(res, tag + " classical ")
    V = abs_saddle_potential(p["cutoff"])
    x0 = float(p["x0"])
    # the closed-form packet; a coarse projection would add spurious negative lobes
    u1, _ = InitialDataSpec("gaussian_wkb", x0=x0, m=1.0).functions(h)
    a, b = p["domain"]
    reach = 1.0 + 8.0 * math.sqrt(h / math.pi)
    e1 = stage("particles", _particles, u1, p["sigma_particles"], h,
               (max(a, x0 - reach), min(b, x0 + reach)), p["n_particles"])
    if e1 is None:
        return res
    n = len(e1)
    ens = Ensemble(np.concatenate([e1.weights, e1.weights]), np.concatenate([e1.x, -e1.x]),
                   np.concatenate([e1.k, -e1.k]), np.zeros(2 * n, dtype=np.int8), h, 0.0,
                   2 * e1.truncated_mass)
    ens, (wp, wm, wz) = partition(ens, V, 0.0)
    res.files.append(_write_ensemble(ens, outdir / f"ensemble_{tag}_t0.csv"))
    flow = FlowSpec(V, hbar=h)
    t_star = float(p["t_star"])
    et = propagate(ens, t_star, flow)
    right = measure_ensemble(et, lambda x, k: (x > 0).astype(float))
    left = measure_ensemble(et, lambda x, k: (x < 0).astype(float))
    res.data.update(emp=_emp_value(right, left, p["emp_convention"]), partition=(wp, wm, wz))
    if p.get("detect_interference", True):
        rep = stage("interference", detect_interference, ens, flow, float(p["T"]))
        if rep is not None:
            path = outdir / f"interference_{tag}.csv"
            rep.to_csv(path)
            res.files.append(path)
            res.data["events"] = rep.event_times
    return res


def _run_collide(s: Scenario, outdir: Path, jobs: int):
    p = s.params
    hbars = [float(h) for h in s.hbar_list()]
    thetas = [float(t) for t in p["theta"]]
    classical = _pool_map(_collide_classical, [(p, h, str(outdir)) for h in hbars], jobs)
    cases = [(p, h, th, str(outdir)) for h in hbars for th in thetas]
    quantum = _pool_map(_collide_quantum, cases, jobs)
    emp_rows, status_rows = [], []
    cl = dict(zip(hbars, classical))
    for (_, h, th, _), q in zip(cases, quantum):
        if "emp" not in q.data:
            continue
        c = cl[h].data.get("emp", float("nan"))
        emp_rows.append((th, h, q.data["emp"], c))
        status_rows.append((th, h, q.data["tol"], q.data["estimate"], q.data["success"],
                            q.data["domain"][0], q.data["domain"][1]))
    extra = [io.write_csv(outdir / "emp_table.csv", EMP_HEADER, emp_rows),
             io.write_csv(outdir / "emp_status.csv",
                          ("theta", "hbar", "tol", "estimate", "success", "domain_a", "domain_b"),
                          status_rows),
             io.gnuplot_script(outdir / "emp_table.gp", "emp_table.csv", "excess mass at t*",
                               "theta", ["emp_quantum", "emp_classical"], "theta", "EMP",
                               header=EMP_HEADER)]
    summary = {}
    for h in hbars:
        ev = cl[h].data.get("events")
        if ev is not None:
            summary[f"h{_tag(h)}.interference_events"] = [round(t, 6) for t in ev]
        if "partition" in cl[h].data:
            wp, wm, wz = cl[h].data["partition"]
            summary[f"h{_tag(h)}.w_plus_fraction"] = wp / (wp + wm + wz)
    for th, h, eq, ec in emp_rows:
        summary[f"h{_tag(h)}_theta{_tag(th)}.emp_quantum"] = eq
    extra_res = CaseResult(summary=summary)
    return classical + quantum + [extra_res], extra


def emp_sweep(theta_list: Sequence[float], hbar_list: Sequence[float], tol: Optional[float] = None,
              out="runs", jobs: int = 1, **overrides) -> list:
    """Run the collision scenario over a theta by hbar grid; returns the EMP
    table rows ``(theta, hbar, emp_quantum, emp_classical)``."""
    s = make_scenario("collide_interference", out=out, theta=list(theta_list),
                      hbar=list(hbar_list), tol=tol, jobs=jobs, **overrides)
    man = run_scenario(s)
    return [(float(r["theta"]), float(r["hbar"]), float(r["emp_quantum"]), float(r["emp_classical"]))
            for r in io.read_csv(man.directory / "emp_table.csv")]


# -- rate experiment --------------------------------------------------------

def default_phi_set(width: float = 0.5, L: float = 2.0) -> list:
    """Bumps around the vertex, on the rest line and on the two outgoing branches."""
    centers = [(-0.5, 0.0), (0.0, 0.0), (0.5, 0.0), (-0.5, -0.15), (0.5, 0.15), (-1.0, -0.2),
               (1.0, 0.2)]
    return [TestFunction.gaussian_bump(xc, kc, width, L, n=128) for xc, kc in centers]


def rate_datum(center: float = -0.2, width: float = 0.4) -> Callable:
    """Normalized real Gaussian of fixed width, at rest next to the vertex."""
    c = (math.pi * width ** 2) ** -0.25
    return lambda x: c * np.exp(-(np.asarray(x) - center) ** 2 / (2 * width ** 2)) + 0j


def _rate_case(p: dict, h: float, phis: list, potential=None) -> CaseResult:
    res = CaseResult()
    V = potential or power_saddle_potential(p["a"], p["L"])
    t = float(p["t"])
    datum = rate_datum(p["center"], p["width"])
    stage = _Stages(res, f"h{_tag(h)} ")
    out = stage("solve", solve_on_domain, datum, V, h, p["tol"], p["domain"], p["degree"], t,
                cells_per_hbar=0.4)
    if out is None:
        return res
    tr, _ = out
    if not tr.success:
        res.failures.append(f"h{_tag(h)} solve: {tr.failure}")
    sig = float(p["sigma"])
    f0 = transform(tr.state_at(0.0), sig, sig, hbar=h, domain=_support(tr.state_at(0.0)),
                   k_window=(-1.5, 1.5))
    ft = transform(tr.state_at(t), sig, sig, hbar=h, domain=_support(tr.state_at(t)),
                   k_window=(-1.5, 1.5))
    ens = propagate(sample_particles(f0, hbar=h), t, FlowSpec(V, hbar=h))
    d = [abs(pair(ft, phi)[0] - float(np.dot(ens.weights, phi.pointwise(ens.x, ens.k))))
         for phi in phis]
    res.data.update(D=max(d), per_phi=d, estimate=tr.report.total, success=tr.success)
    return res


@dataclass
class RateResult:
    hbar: list
    D: list
    per_phi: list
    slope: Optional[float]
    monotone: bool


def rate_experiment(a_hoelder: float = 0.5, hbar_list: Sequence[float] = (0.1, 0.05, 0.025),
                    phi_set: Optional[Sequence[TestFunction]] = None, params: Optional[dict] = None,
                    potential=None, jobs: int = 1) -> RateResult:
    """``D(hbar) = max_phi |<SWT(U(t)) - rho(t), phi>|`` and the fitted slope
    of ``log D`` against ``log hbar``.  A ladder on which ``D`` does not
    decrease is reported without a fit (``slope = None``)."""
    if not 0 < a_hoelder < 1:
        raise ValueError("a_hoelder must lie in (0, 1)")
    p = make_scenario("rate_c1a", a=a_hoelder).params
    p.update(params or {})
    phis = list(phi_set) if phi_set is not None else default_phi_set(p["phi_width"], p["phi_L"])
    hs = sorted((float(h) for h in hbar_list), reverse=True)
    if potential is not None:
        jobs = 1  # potentials hold closures and do not cross process boundaries
    results = _pool_map(_rate_case, [(p, h, phis, potential) for h in hs], jobs)
    failed = [f for r in results for f in r.failures]
    if any("D" not in r.data for r in results):
        raise RuntimeError("rate experiment incomplete: " + "; ".join(failed))
    D = [r.data["D"] for r in results]
    monotone = all(d1 < d0 for d0, d1 in zip(D, D[1:]))
    slope = float(np.polyfit(np.log(hs), np.log(D), 1)[0]) if monotone else None
    return RateResult(hs, D, [r.data["per_phi"] for r in results], slope, monotone)


def _run_rate(s: Scenario, outdir: Path, jobs: int):
    p = s.params
    rr = rate_experiment(p["a"], s.hbar_list(), params=p, jobs=jobs)
    n = len(rr.per_phi[0])
    header = ("hbar", "D") + tuple(f"phi{i}" for i in range(n))
    rows = [(h, d, *pp) for h, d, pp in zip(rr.hbar, rr.D, rr.per_phi)]
    files = [io.write_csv(outdir / "rate.csv", header, rows),
             io.gnuplot_script(outdir / "rate.gp", "rate.csv", "D(hbar)", "hbar", ["D"], "hbar",
                               "D", logscale="xy", header=header)]
    summary = {"slope": rr.slope if rr.slope is not None else "none (D not monotone)",
               "monotone": rr.monotone}
    return [CaseResult(summary=summary)], files


# -- solver validation scenarios --------------------------------------------

def _run_eoc(s: Scenario, outdir: Path, jobs: int):
    p = s.params
    prob = double_well_problem() if s.name == "eoc_doublewell" else nonsmooth_problem(p["x0"])
    table = run_eoc(prob, jobs=jobs, M_ladder=p["M_ladder"], N_ladder=p["N_ladder"])
    header = ("ladder", "size", "value", "eoc")
    files = [io.write_csv(outdir / "eoc_table.csv", header, table.rows())]
    for ladder, col in (("space", "es"), ("time", "et")):
        sub = [r for r in table.rows() if r[0] == ladder]
        name = f"eoc_{ladder}.csv"
        files.append(io.write_csv(outdir / name, header, sub))
        files.append(io.gnuplot_script(outdir / f"eoc_{ladder}.gp", name, f"{ladder} estimator",
                                       "size", ["value"], "size", col, logscale="xy",
                                       header=header))
    summary = {"eoc_space_final": float(table.eoc_space[-1]),
               "eoc_time_final": float(table.eoc_time[-1])}
    return [CaseResult(summary=summary)], files


def _run_tdp(s: Scenario, outdir: Path, jobs: int):
    p = s.params
    prob = trap_problem(p["lam"])
    sp = SplineSpace.uniform(p["domain"][0], p["domain"][1], p["cells"], p["degree"])
    tr: SolveTrace = solve_adaptive(sp, prob.potential, prob.u0(), p["T"], p["tol"], p["hbar"])
    files = [io.write_steps(tr, outdir / "steps.csv"),
             io.gnuplot_script(outdir / "steps.gp", "steps.csv", "time steps", "t", ["dt"], "t",
                               "dt", logscale="y", header=io.STEP_HEADER)]
    dts = np.diff(tr.times)
    i = int(np.argmin(dts))
    res = CaseResult(summary={"success": tr.success, "estimate": tr.report.total,
                              "steps": int(dts.size), "min_dt": float(dts[i]),
                              "t_at_min_dt": float(tr.times[i]),
                              "min_dt_in_first_tenth": bool(tr.times[i] < 0.1 * p["T"])})
    if not tr.success:
        res.failures.append(f"solve: {tr.failure}")
    return [res], files


PIPELINES = {
    "eoc_doublewell": _run_eoc,
    "eoc_nonsmooth": _run_eoc,
    "adaptive_tdp": _run_tdp,
    "split_noninterference": _run_split,
    "collide_interference": _run_collide,
    "wkb_slice": _run_wkb,
    "rate_c1a": _run_rate,
}


def run_scenario(s: Scenario, jobs: Optional[int] = None) -> RunManifest:
    """Run one scenario and write its outputs plus a manifest under
    ``s.out / s.name``."""
    outdir = (Path(s.out) / s.name).resolve()
    outdir.mkdir(parents=True, exist_ok=True)
    jobs = int(jobs if jobs is not None else s.params.get("jobs", 1) or 1)
    t0 = time.perf_counter()
    files, failures, summary = [], [], {}
    try:
        results, extra = PIPELINES[s.name](s, outdir, jobs)
        for r in results:
            files += r.files
            failures += r.failures
            summary.update(r.summary)
        files += extra
    except Exception as exc:  # noqa: BLE001 - recorded, partial outputs kept
        log.debug("pipeline failed:\n%s", traceback.format_exc())
        failures.append(f"pipeline: {type(exc).__name__}: {exc}")
    wall = time.perf_counter() - t0
    files = sorted({Path(f).resolve() for f in files if Path(f).exists()})
    hard = [f for f in failures if " note: " not in f]
    status = "ok" if not hard else ("failed" if not files else "partial")
    path = io.write_manifest(outdir / "manifest.txt", s.name, __version__, s.params, s.overrides,
                             files, status, failures, summary)
    io.atomic_write_text(outdir / "timing.txt", f"wall_time = {wall!r}\n")
    return RunManifest(s.name, dict(s.params), dict(s.overrides), __version__, wall,
                       [Path(f) for f in files], status, failures, summary, path, outdir)
