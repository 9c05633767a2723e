"""Command line entry point ``semiclassic``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..schrodinger.eoc import eoc
from ..wigner import transform
from . import io
from .config import CATALOG, THETA_GRID, HBAR_GRID, ConfigError, load_config, make_scenario
from .runner import emp_sweep, rate_experiment, run_scenario


def _floats(text: str) -> list:
    return [float(v) for v in text.split(",") if v.strip()]


def _cmd_run(args) -> int:
    config = load_config(args.config) if args.config else None
    hbar = args.hbar
    if hbar is not None and len(hbar) == 1 and args.scenario not in ("collide_interference",
                                                                     "rate_c1a"):
        hbar = hbar[0]
    s = make_scenario(args.scenario, config, args.out, hbar=hbar, tol=args.tol, jobs=args.jobs)
    man = run_scenario(s)
    print(f"{man.scenario}: {man.status} ({len(man.files)} files, {man.wall_time:.1f} s)")
    for k, v in sorted(man.summary.items()):
        print(f"  {k} = {v}")
    for f in man.failures:
        print(f"  ! {f}")
    print(f"manifest: {man.path}")
    return 0 if man.status == "ok" else 1


def _cmd_eoc(args) -> int:
    rows = io.read_csv(args.table)
    if not rows or not {"size", "value"} <= set(rows[0]):
        raise ConfigError("table needs 'size' and 'value' columns")
    ladders = {}
    for r in rows:
        ladders.setdefault(r.get("ladder", "values"), []).append((float(r["size"]),
                                                                 float(r["value"])))
    for name, pairs in ladders.items():
        n, v = map(np.array, zip(*pairs))
        rates = eoc(v, n)
        print(name)
        for i, (a, b) in enumerate(pairs):
            e = "" if i == 0 else f"{rates[i - 1]:.3f}"
            print(f"  {a:>10g}  {b:.6e}  {e}")
    return 0


def _cmd_emp(args) -> int:
    rows = emp_sweep(args.theta, args.hbar, args.tol, out=args.out, jobs=args.jobs)
    print("theta,hbar,emp_quantum,emp_classical")
    for r in rows:
        print(",".join(io.fmt(v) for v in r))
    return 0


def _cmd_rate(args) -> int:
    rr = rate_experiment(args.a, args.hbar, jobs=args.jobs)
    for h, d in zip(rr.hbar, rr.D):
        print(f"hbar={h:g}  D={d:.6e}")
    if rr.slope is None:
        print("D is not monotone in hbar; no slope fitted")
        return 1
    print(f"slope={rr.slope:.4f}")
    return 0


def _cmd_transform(args) -> int:
    u = io.load_state(args.state)
    f = transform(u, args.sigma_x, args.sigma_k, hbar=u.hbar, kind=args.kind)
    out = Path(args.out) if args.out else Path(args.state).with_suffix("")
    stem = out.with_name(out.name + f"_{args.kind}")
    m, b = io.dump_field(f, stem)
    print(f"wrote {m} and {b} ({f.x.size} x {f.k.size}, mass {f.total_mass():.6g})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="semiclassic", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a catalog scenario")
    r.add_argument("scenario", choices=sorted(CATALOG))
    r.add_argument("--config", help="YAML file of parameter overrides")
    r.add_argument("--out", default="runs", help="output root (default: runs)")
    r.add_argument("--hbar", type=_floats, help="hbar value, or comma-separated list")
    r.add_argument("--tol", type=float)
    r.add_argument("--jobs", type=int)
    r.set_defaults(func=_cmd_run)

    e = sub.add_parser("eoc", help="experimental orders of convergence of a CSV table")
    e.add_argument("table")
    e.set_defaults(func=_cmd_eoc)

    s = sub.add_parser("emp-sweep", help="excess mass over a theta by hbar grid")
    s.add_argument("--theta", type=_floats, default=list(THETA_GRID))
    s.add_argument("--hbar", type=_floats, default=list(HBAR_GRID))
    s.add_argument("--tol", type=float)
    s.add_argument("--out", default="runs")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=_cmd_emp)

    a = sub.add_parser("rate", help="convergence-rate experiment for V = -|x|^(1+a) b(x)")
    a.add_argument("--a", type=float, default=0.5)
    a.add_argument("--hbar", type=_floats, default=[0.1, 0.05, 0.025])
    a.add_argument("--jobs", type=int, default=1)
    a.set_defaults(func=_cmd_rate)

    t = sub.add_parser("transform", help="phase-space transform of a state dump")
    t.add_argument("state", help="state dump (.meta/.bin prefix)")
    t.add_argument("--kind", choices=("wigner", "swt", "husimi"), default="swt")
    t.add_argument("--sigma-x", type=float, default=2 ** -0.5)
    t.add_argument("--sigma-k", type=float, default=2 ** -0.5)
    t.add_argument("--out", help="output prefix (default: next to the state)")
    t.set_defaults(func=_cmd_transform)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "transform":
        if args.kind == "wigner":
            args.sigma_x = args.sigma_k = 0.0
        elif args.kind == "husimi":
            args.sigma_x = args.sigma_k = 1.0
    try:
        return args.func(args)
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
