"""File emission: atomic writes, CSV tables, state dumps, manifests, plot scripts."""
from __future__ import annotations

import csv
import hashlib
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from ..core.grids import Grid1D
from ..core.states import Wavefunction
from ..wigner import read_meta, sample_state

STEP_HEADER = ("step", "t", "dt", "dof", "es", "et", "mass", "boundary_mass")


def atomic_write_bytes(path, data: bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def atomic_write_text(path, text: str) -> Path:
    return atomic_write_bytes(path, text.encode())


def fmt(v) -> str:
    """Deterministic text form of a table cell."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if math.isfinite(v) else str(float(v)).lower()
    return str(v)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(fmt(v) for v in r))
    return atomic_write_text(path, "\n".join(lines) + "\n")


def read_csv(path) -> list:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def sha256(path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_steps(trace, path) -> Path:
    return write_csv(path, STEP_HEADER, trace.step_rows())


# -- state dumps ------------------------------------------------------------

def dump_state(u: Wavefunction, prefix, dx: Optional[float] = None) -> tuple:
    """Uniform samples of a state: key/value sidecar plus interleaved
    little-endian float64 ``(re, im)`` pairs."""
    x, vals, hbar = sample_state(u, dx=dx)
    prefix = Path(prefix)
    meta = {"kind": "state", "nx": x.size, "x0": repr(float(x[0])),
            "dx": repr(float(x[1] - x[0])), "hbar": repr(float(hbar))}
    mpath = atomic_write_text(prefix.with_suffix(".meta"),
                              "".join(f"{k} = {v}\n" for k, v in meta.items()))
    payload = np.empty(2 * x.size, dtype="<f8")
    payload[0::2], payload[1::2] = vals.real, vals.imag
    bpath = atomic_write_bytes(prefix.with_suffix(".bin"), payload.tobytes())
    return mpath, bpath


def load_state(prefix) -> Wavefunction:
    prefix = Path(prefix)
    if prefix.suffix in (".meta", ".bin"):
        prefix = prefix.with_suffix("")
    meta = read_meta(prefix.with_suffix(".meta"))
    if meta.get("kind") != "state":
        raise ValueError(f"{prefix} is not a state dump")
    n = int(meta["nx"])
    raw = np.frombuffer(prefix.with_suffix(".bin").read_bytes(), dtype="<f8")
    if raw.size != 2 * n:
        raise ValueError("state payload size does not match the metadata")
    x = float(meta["x0"]) + float(meta["dx"]) * np.arange(n)
    return Wavefunction(Grid1D(float(x[0]), float(x[-1]), x), raw[0::2] + 1j * raw[1::2],
                        float(meta["hbar"]))


def dump_field(f, prefix) -> tuple:
    mpath, bpath = f.dump(prefix)
    return Path(mpath), Path(bpath)


def write_marginals(f, path) -> Path:
    px, pk = f.marginals()
    rows = [("x", float(x), float(v)) for x, v in zip(f.x, px)]
    rows += [("k", float(k), float(v)) for k, v in zip(f.k, pk)]
    return write_csv(path, ("axis", "coord", "density"), rows)


# -- manifests --------------------------------------------------------------

def write_manifest(path, scenario: str, version: str, params: dict, overrides: dict,
                   files: Sequence[Path], status: str = "ok", failures: Sequence[str] = (),
                   summary: Optional[dict] = None) -> Path:
    """Key/value manifest.  Wall time lives in a separate timing file so that
    identical inputs give byte-identical manifests."""
    path = Path(path)
    lines = [f"scenario = {scenario}", f"version = {version}", f"status = {status}"]
    lines += [f"param.{k} = {_kv(v)}" for k, v in sorted(params.items())]
    lines += [f"override.{k} = {_kv(v)}" for k, v in sorted(overrides.items())]
    for i, msg in enumerate(failures):
        lines.append(f"failure.{i} = {msg}")
    for k, v in sorted((summary or {}).items()):
        lines.append(f"summary.{k} = {_kv(v)}")
    for f in sorted(Path(f) for f in files):
        lines.append(f"file.{f.relative_to(path.parent).as_posix()} = sha256:{sha256(f)}")
    return atomic_write_text(path, "\n".join(lines) + "\n")


def read_manifest(path) -> dict:
    return read_meta(path)


def _kv(v) -> str:
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_kv(x) for x in v) + "]"
    if v is None:
        return "null"
    return fmt(v)


# -- plot scripts -----------------------------------------------------------

def gnuplot_script(path, data: str, title: str, xcol: str, ycols: Sequence[str],
                   xlabel: str = "", ylabel: str = "", logscale: str = "",
                   header: Sequence[str] = ()) -> Path:
    """A gnuplot script plotting columns of a CSV table (plots are never made here)."""
    idx = {name: i + 1 for i, name in enumerate(header)}
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set title '{title}'",
        f"set xlabel '{xlabel or xcol}'",
        f"set ylabel '{ylabel}'",
        "set terminal pngcairo size 900,600",
        f"set output '{Path(path).with_suffix('.png').name}'",
    ]
    if logscale:
        lines.append(f"set logscale {logscale}")
    plots = [f"'{data}' using {idx.get(xcol, xcol)}:{idx.get(c, c)} with linespoints" for c in ycols]
    lines.append("plot " + ", \\\n     ".join(plots))
    return atomic_write_text(path, "\n".join(lines) + "\n")


def gnuplot_field(path, meta_name: str, bin_name: str, nx: int, nk: int, x0: float, dx: float,
                  k0: float, dk: float, title: str) -> Path:
    """Heat map of a grid dump read straight from its binary payload."""
    lines = [
        f"set title '{title}'", "set xlabel 'k'", "set ylabel 'x'",
        "set terminal pngcairo size 900,600",
        f"set output '{Path(path).with_suffix('.png').name}'",
        f"# metadata: {meta_name}",
        "set view map",
        f"plot '{bin_name}' binary array=({nk},{nx}) format='%float64' endian=little "
        f"dx={dk!r} dy={dx!r} origin=({k0!r},{x0!r}) using 1 with image",
    ]
    return atomic_write_text(path, "\n".join(lines) + "\n")
