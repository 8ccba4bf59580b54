"""Run configuration: a flat JSON-compatible grammar with strict validation.

Every problem with a document is reported at once, with a dotted path to
the offending key; unknown keys are rejected rather than ignored.  All
runs are deterministic, so there is no seed anywhere in the grammar.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .elliptic import Field, Grid
from .macro import ParticleMeasure, particles_from_density
from .turning import TurningModel

MODES = ("kinetic", "macro-grid", "macro-particles", "sweep", "compare")
INITIAL_KINDS = ("gaussian", "two_bumps", "bump", "atoms", "file")
REFERENCES = ("macro-grid", "smallest-eps")


class ConfigError(ValueError):
    """Carries the full list of validation problems."""

    def __init__(self, errors: list[str]):
        super().__init__("invalid configuration:\n  " + "\n  ".join(errors))
        self.errors = errors


@dataclass
class ExperimentConfig:
    mode: str
    grid: Grid
    model: TurningModel
    initial: dict[str, Any]
    t_end: float
    probes: list[float]
    output_dir: str
    eps: float | None = None
    eps_list: list[float] = field(default_factory=list)
    cfl: float = 0.5
    n_particles: int = 100
    dt: float | None = None
    merge_tol: float = 0.0
    rho_ceiling: float | None = None
    reference: str = "macro-grid"
    label: str = ""


class _Check:
    """Accumulates errors while pulling typed values out of a dict."""

    def __init__(self, data: dict, errors: list[str], prefix: str = ""):
        self.data = data
        self.errors = errors
        self.prefix = prefix
        self.seen: set[str] = set()

    def _path(self, key: str) -> str:
        return f"{self.prefix}{key}"

    def require(self, key: str, kind, desc: str):
        self.seen.add(key)
        if key not in self.data:
            self.errors.append(f"{self._path(key)}: missing ({desc})")
            return None
        return self._coerce(key, kind, desc)

    def optional(self, key: str, kind, desc: str, default=None):
        self.seen.add(key)
        if key not in self.data or self.data[key] is None:
            return default
        return self._coerce(key, kind, desc)

    def _coerce(self, key: str, kind, desc: str):
        v = self.data[key]
        if kind is float:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                self.errors.append(f"{self._path(key)}: expected a number ({desc})")
                return None
            return float(v)
        if kind is int:
            if isinstance(v, bool) or not isinstance(v, int):
                self.errors.append(f"{self._path(key)}: expected an integer ({desc})")
                return None
            return v
        if kind is str:
            if not isinstance(v, str):
                self.errors.append(f"{self._path(key)}: expected a string ({desc})")
                return None
            return v
        if kind is list:
            if not isinstance(v, list):
                self.errors.append(f"{self._path(key)}: expected a list ({desc})")
                return None
            return v
        if kind is dict:
            if not isinstance(v, dict):
                self.errors.append(f"{self._path(key)}: expected an object ({desc})")
                return None
            return v
        raise AssertionError(kind)

    def reject_unknown(self):
        for key in self.data:
            if key not in self.seen:
                self.errors.append(f"{self._path(key)}: unknown key")

    def bad(self, key: str, msg: str):
        self.errors.append(f"{self._path(key)}: {msg}")


def _positive(chk: _Check, key: str, value, desc: str):
    if value is not None and value <= 0:
        chk.bad(key, f"must be positive ({desc})")
        return None
    return value


def _number_list(chk: _Check, key: str, raw, desc: str) -> list[float] | None:
    if raw is None:
        return None
    out = []
    for i, v in enumerate(raw):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            chk.bad(key, f"entry {i} is not a number ({desc})")
            return None
        out.append(float(v))
    return out


def _validate_initial(init: dict, errors: list[str]) -> dict | None:
    chk = _Check(init, errors, "initial.")
    kind = chk.require("kind", str, "one of " + ", ".join(INITIAL_KINDS))
    if kind is not None and kind not in INITIAL_KINDS:
        chk.bad("kind", f"unknown kind {kind!r}")
        kind = None
    out: dict[str, Any] = {"kind": kind}
    if kind == "gaussian":
        out["center"] = chk.optional("center", float, "bump centre", 0.0)
        out["sigma"] = _positive(chk, "sigma", chk.require("sigma", float, "standard deviation"), "width")
        out["mass"] = _positive(chk, "mass", chk.require("mass", float, "total mass"), "mass")
    elif kind == "two_bumps":
        centers = _number_list(chk, "centers", chk.require("centers", list, "two bump centres"), "centres")
        if centers is not None and len(centers) != 2:
            chk.bad("centers", "expected exactly two centres")
            centers = None
        out["centers"] = centers
        out["sigma"] = _positive(chk, "sigma", chk.require("sigma", float, "shared width"), "width")
        out["mass"] = _positive(chk, "mass", chk.require("mass", float, "total mass"), "mass")
    elif kind == "bump":
        out["center"] = chk.optional("center", float, "bump centre", 0.0)
        out["radius"] = _positive(chk, "radius", chk.require("radius", float, "support half-width"), "radius")
        out["mass"] = _positive(chk, "mass", chk.require("mass", float, "total mass"), "mass")
    elif kind == "atoms":
        pos = _number_list(chk, "positions", chk.require("positions", list, "atom positions"), "positions")
        wts = _number_list(chk, "weights", chk.require("weights", list, "atom weights"), "weights")
        if pos is not None and wts is not None:
            if len(pos) != len(wts) or not pos:
                chk.bad("positions", "positions and weights must be nonempty and match")
            elif any(b < a for a, b in zip(pos, pos[1:])):
                chk.bad("positions", "must be sorted ascending")
            elif any(w <= 0 for w in wts):
                chk.bad("weights", "must all be positive")
        out["positions"] = pos
        out["weights"] = wts
    elif kind == "file":
        out["path"] = chk.require("path", str, "CSV with x,rho columns")
    chk.reject_unknown()
    return out


def parse_config(data: dict) -> ExperimentConfig:
    """Validate a config document, reporting every problem at once."""
    errors: list[str] = []
    if not isinstance(data, dict):
        raise ConfigError(["top level: expected an object"])
    chk = _Check(data, errors)

    mode = chk.require("mode", str, "one of " + ", ".join(MODES))
    if mode is not None and mode not in MODES:
        chk.bad("mode", f"unknown mode {mode!r}")
        mode = None

    grid_raw = chk.require("grid", dict, "grid section")
    grid = None
    if grid_raw is not None:
        g = _Check(grid_raw, errors, "grid.")
        x_min = g.require("x_min", float, "left end")
        x_max = g.require("x_max", float, "right end")
        n = g.require("n", int, "cell count")
        g.reject_unknown()
        if None not in (x_min, x_max, n):
            if x_max <= x_min:
                g.bad("x_max", "must exceed x_min")
            elif n < 8:
                g.bad("n", "need at least 8 cells")
            else:
                grid = Grid(x_min, x_max, n)

    model_raw = chk.optional("model", dict, "model constants", {})
    model = None
    m = _Check(model_raw, errors, "model.")
    phi0 = _positive(m, "phi0", m.optional("phi0", float, "base turning rate", 1.0), "rate")
    alpha = _positive(m, "alpha", m.optional("alpha", float, "saturation threshold", 1.0), "threshold")
    c = _positive(m, "c", m.optional("c", float, "cell speed", 1.0), "speed")
    m.reject_unknown()
    if None not in (phi0, alpha, c):
        model = TurningModel(phi0=phi0, alpha=alpha, c=c)

    init_raw = chk.require("initial", dict, "initial data section")
    initial = _validate_initial(init_raw, errors) if init_raw is not None else None

    t_end = _positive(chk, "t_end", chk.require("t_end", float, "final time"), "time")
    probes_raw = chk.require("probes", list, "probe times")
    probes = _number_list(chk, "probes", probes_raw, "times") if probes_raw is not None else None
    if probes is not None:
        if not probes:
            chk.bad("probes", "need at least one probe time")
            probes = None
        elif any(p < 0 for p in probes):
            chk.bad("probes", "probe times must be nonnegative")
            probes = None
        elif t_end is not None and any(p > t_end * (1 + 1e-12) for p in probes):
            chk.bad("probes", "probe times must not exceed t_end")
            probes = None
        else:
            probes = sorted(set(probes))

    eps = _positive(chk, "eps", chk.optional("eps", float, "stiffness"), "eps")
    eps_list_raw = chk.optional("eps_list", list, "stiffness sweep")
    eps_list = _number_list(chk, "eps_list", eps_list_raw, "eps values")
    if eps_list is not None:
        if not eps_list:
            chk.bad("eps_list", "must be nonempty")
            eps_list = None
        elif any(e <= 0 for e in eps_list):
            chk.bad("eps_list", "eps values must be positive")
            eps_list = None

    cfl = chk.optional("cfl", float, "CFL number", 0.5)
    if cfl is not None and not 0.0 < cfl <= 1.0:
        chk.bad("cfl", "must lie in (0, 1]")
        cfl = 0.5
    n_particles = chk.optional("n_particles", int, "particle count", 100)
    n_particles = _positive(chk, "n_particles", n_particles, "count") or 100
    dt = _positive(chk, "dt", chk.optional("dt", float, "particle step"), "dt")
    merge_tol = chk.optional("merge_tol", float, "sticky merge distance", 0.0)
    if merge_tol is not None and merge_tol < 0:
        chk.bad("merge_tol", "must be nonnegative")
    rho_ceiling = _positive(chk, "rho_ceiling", chk.optional("rho_ceiling", float, "abort ceiling"), "ceiling")
    reference = chk.optional("reference", str, "sweep reference", "macro-grid")
    if reference not in REFERENCES:
        chk.bad("reference", "must be one of " + ", ".join(REFERENCES))
        reference = "macro-grid"
    output_dir = chk.optional("output_dir", str, "artifact directory", "run")
    label = chk.optional("label", str, "free-form tag", "")

    if mode == "kinetic" and eps is None:
        chk.bad("eps", "required for kinetic mode")
    if mode in ("sweep", "compare") and eps_list is None:
        chk.bad("eps_list", "required for sweep and compare modes")
    if mode == "macro-particles" and dt is None:
        chk.bad("dt", "required for macro-particles mode")

    chk.reject_unknown()
    if errors:
        raise ConfigError(errors)

    return ExperimentConfig(
        mode=mode, grid=grid, model=model, initial=initial, t_end=t_end,
        probes=probes, output_dir=output_dir, eps=eps, eps_list=eps_list or [],
        cfl=cfl, n_particles=n_particles, dt=dt, merge_tol=merge_tol,
        rho_ceiling=rho_ceiling, reference=reference, label=label,
    )


def load_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"not valid JSON: {exc}"]) from exc
    return parse_config(data)


# ----------------------------------------------------------------------
# initial data construction
# ----------------------------------------------------------------------


def initial_field(cfg: ExperimentConfig) -> Field:
    """Grid density for the configured initial data."""
    grid = cfg.grid
    x = grid.centers()
    init = cfg.initial
    kind = init["kind"]
    if kind == "gaussian":
        v = _gaussian(x, init["center"], init["sigma"])
        return _normalised(grid, v, init["mass"])
    if kind == "two_bumps":
        v = _gaussian(x, init["centers"][0], init["sigma"]) + _gaussian(x, init["centers"][1], init["sigma"])
        return _normalised(grid, v, init["mass"])
    if kind == "bump":
        u = (x - init["center"]) / init["radius"]
        v = np.where(np.abs(u) < 1.0, np.cos(0.5 * np.pi * u) ** 2, 0.0)
        return _normalised(grid, v, init["mass"])
    if kind == "atoms":
        v = np.zeros(grid.n)
        for p, w in zip(init["positions"], init["weights"]):
            k = int(np.clip(np.floor((p - grid.x_min) / grid.dx), 0, grid.n - 1))
            v[k] += w / grid.dx
        return Field(grid, v)
    if kind == "file":
        raw = np.loadtxt(init["path"], delimiter=",", skiprows=1)
        if raw.ndim != 2 or raw.shape[1] < 2:
            raise ConfigError([f"initial.path: {init['path']} must hold x,rho columns"])
        return Field(grid, np.interp(x, raw[:, 0], raw[:, 1], left=0.0, right=0.0))
    raise AssertionError(kind)


def initial_measure(cfg: ExperimentConfig) -> ParticleMeasure:
    """Atoms for particle runs: direct for kind=atoms, quantiles otherwise."""
    if cfg.initial["kind"] == "atoms":
        return ParticleMeasure(np.asarray(cfg.initial["positions"], float),
                               np.asarray(cfg.initial["weights"], float))
    return particles_from_density(initial_field(cfg), cfg.n_particles)


def _gaussian(x: np.ndarray, center: float, sigma: float) -> np.ndarray:
    return np.exp(-0.5 * ((x - center) / sigma) ** 2)


def _normalised(grid: Grid, values: np.ndarray, mass: float) -> Field:
    total = values.sum() * grid.dx
    if total <= 0.0:
        raise ConfigError(["initial: data has no mass on the grid"])
    return Field(grid, values * (mass / total))
