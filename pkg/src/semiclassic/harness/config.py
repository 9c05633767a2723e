"""Scenario catalog and strict configuration loading."""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

import yaml

SNAPSHOTS = (1.1788, 1.5717, 1.9647, 2.3577)
THETA_GRID = tuple(n / 24 for n in (2, 3, 4, 6, 8, 9, 12, 14, 17, 18, 21, 23))
HBAR_GRID = (5e-1, 1e-1, 5e-2, 1e-2, 5e-3)


class ConfigError(ValueError):
    """Unknown scenario, unknown key or invalid value."""


def default_tol(hbar: float) -> float:
    return 2e-2 if hbar < 1e-2 else 1e-2


_COMPARISON = {
    "sigma_display": 2 ** -0.5,  # SWT widths of the emitted phase-space fields
    "sigma_particles": 0.25,  # SWT widths of the classical initial density
    "route": "direct",
    "n_particles": 40000,
    "field_nx": 801,
}

CATALOG: dict = {
    "eoc_doublewell": {"M_ladder": None, "N_ladder": None, "jobs": 1},
    "eoc_nonsmooth": {"M_ladder": None, "N_ladder": None, "jobs": 1, "x0": -1.5},
    "adaptive_tdp": {"hbar": 1.0, "tol": 5e-2, "T": 1.0, "domain": [-1.0, 2.0], "degree": 3,
                     "cells": 40, "lam": 10.0},
    "split_noninterference": dict(
        _COMPARISON, hbar=1e-2, m=[0.9186], x0=-1.5, tol=None, domain=[-6.0, 6.0], degree=5,
        T=3.0, snapshots=list(SNAPSHOTS), cutoff=2.5, jobs=1),
    "collide_interference": dict(
        _COMPARISON, hbar=[1e-2], theta=[0.25], x0=-1.5, tol=None, domain=[-6.0, 6.0],
        degree=5, T=3.0, t_star=3.0, cutoff=2.5, emp_convention="excess", jobs=1,
        detect_interference=True),
    # the slice datum oscillates on scale hbar over a wide support, so narrower
    # widths leave large negative lobes in its SWT; use the Husimi transform
    "wkb_slice": dict(
        _COMPARISON, sigma_particles=1.0, hbar=1e-2, tol=None, domain=[-8.0, 8.0], degree=5, T=4.0, cutoff=4.0,
        snapshots=[1.0, 2.0, 3.0], measure_times=[4.0], jobs=1),
    "rate_c1a": {"a": 0.5, "hbar": [0.1, 0.05, 0.025], "t": 1.0, "center": -0.2, "width": 0.4,
                 "L": 1.0, "domain": [-5.0, 5.0], "degree": 5, "tol": 1e-2, "sigma": 0.5,
                 "phi_width": 0.5, "phi_L": 2.0, "jobs": 1},
}

# parameters whose value may be a scalar or a list (swept)
LIST_KEYS = {"m", "theta", "hbar"}


@dataclass
class Scenario:
    name: str
    params: dict
    overrides: dict = field(default_factory=dict)
    out: Path = Path("runs")

    def __post_init__(self):
        if self.name not in CATALOG:
            raise ConfigError(f"unknown scenario {self.name!r}; choose from {sorted(CATALOG)}")
        self.out = Path(self.out)

    def get(self, key: str, default: Any = None) -> Any:
        return self.params.get(key, default)

    def hbar_list(self) -> list:
        h = self.params.get("hbar")
        return list(h) if isinstance(h, (list, tuple)) else [h]

    def tol_for(self, hbar: float) -> float:
        tol = self.params.get("tol")
        return default_tol(hbar) if tol is None else float(tol)


def _check_keys(name: str, values: Mapping) -> None:
    allowed = CATALOG[name]
    unknown = sorted(set(values) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) for {name}: {', '.join(unknown)}")


def load_config(path) -> dict:
    """Read a YAML config: optional ``scenario`` plus parameter keys."""
    text = Path(path).read_text()
    data = yaml.safe_load(text) or {}
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping of keys to values")
    return data


def make_scenario(name: Optional[str] = None, config: Optional[Mapping] = None,
                  out="runs", **overrides) -> Scenario:
    """Catalog defaults, then config file values, then explicit overrides.

    Every value that differs from the catalog default is recorded in
    ``Scenario.overrides``.
    """
    config = dict(config or {})
    cfg_name = config.pop("scenario", None)
    if name and cfg_name and name != cfg_name:
        raise ConfigError(f"config is for {cfg_name!r}, not {name!r}")
    name = name or cfg_name
    if name not in CATALOG:
        raise ConfigError(f"unknown scenario {name!r}; choose from {sorted(CATALOG)}")
    overrides = {k: v for k, v in overrides.items() if v is not None}
    _check_keys(name, config)
    _check_keys(name, overrides)
    params = copy.deepcopy(CATALOG[name])
    params.update(config)
    params.update(overrides)
    for key in LIST_KEYS & set(params):
        if key in CATALOG[name] and isinstance(CATALOG[name][key], list) \
                and not isinstance(params[key], (list, tuple)):
            params[key] = [params[key]]
    changed = {k: v for k, v in params.items() if CATALOG[name].get(k) != v}
    return Scenario(name, params, changed, Path(out))
