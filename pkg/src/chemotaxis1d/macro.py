"""Aggregation limit of the kinetic model.

The limiting density obeys the nonlocal conservation law

    d rho/dt + d/dx ( drift_velocity(dS/dx) rho ) = 0,    -S'' + S = rho,

whose solutions concentrate in finite time.  Two solvers are provided:

* a conservative first-order upwind scheme on the cell-centred grid,
  robust through concentration (the spike is resolved at cell width);
* sticky weighted particles that follow the atoms of the measure
  solution exactly and coalesce on contact, valid past blow-up.

A characteristics integrator on a small particle cloud serves as an
independent reference while the flow map stays a diffeomorphism; it
fails loudly once trajectories cross.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .elliptic import Field, Grid, kernel_sums_at, potential_and_gradient
from .turning import TurningModel


# ======================================================================
# measures and parameters
# ======================================================================


@dataclass
class ParticleMeasure:
    """Finite sum of weighted atoms, positions sorted ascending."""

    positions: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        x = np.asarray(self.positions, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if x.ndim != 1 or x.shape != w.shape or x.size == 0:
            raise ValueError("positions and weights must be matching nonempty 1d arrays")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(w))):
            raise ValueError("atoms must be finite")
        if np.any(np.diff(x) < 0.0):
            raise ValueError("positions must be sorted ascending")
        if np.any(w <= 0.0):
            raise ValueError("weights must be positive")
        self.positions = x
        self.weights = w

    def mass(self) -> float:
        return float(self.weights.sum())


@dataclass(frozen=True)
class MacroGridParams:
    model: TurningModel
    t_end: float
    cfl: float = 0.5

    def __post_init__(self) -> None:
        if self.t_end <= 0.0:
            raise ValueError("t_end must be positive")
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError("cfl must lie in (0, 1]")


@dataclass(frozen=True)
class ParticleParams:
    model: TurningModel
    t_end: float
    dt: float
    merge_tol: float = 0.0

    def __post_init__(self) -> None:
        if self.t_end <= 0.0 or self.dt <= 0.0:
            raise ValueError("t_end and dt must be positive")
        if self.merge_tol < 0.0:
            raise ValueError("merge_tol must be nonnegative")


@dataclass
class MacroGridTrajectory:
    grid: Grid
    times: np.ndarray
    densities: list[np.ndarray]
    potentials: list[np.ndarray]
    gradients: list[np.ndarray]
    dt: float


@dataclass
class MergeEvent:
    time: float
    position: float
    count: int
    weight: float


@dataclass
class ParticleTrajectory:
    times: np.ndarray
    measures: list[ParticleMeasure]
    merge_events: list[MergeEvent]
    dt: float


class CharacteristicsBreakdown(RuntimeError):
    """Characteristic trajectories crossed; the classical solution ended."""

    def __init__(self, time: float):
        super().__init__(f"characteristics crossed near t = {time:.6g}")
        self.time = time


# ======================================================================
# grid solver
# ======================================================================


def upwind_step(rho: np.ndarray, edge_velocity: np.ndarray, dx: float, dt: float) -> np.ndarray:
    """One conservative donor-cell update.

    ``edge_velocity`` holds the n-1 interior interface velocities; the
    domain ends are walls (zero flux), so total mass is conserved exactly
    up to rounding.
    """
    vp = np.maximum(edge_velocity, 0.0)
    vm = np.minimum(edge_velocity, 0.0)
    flux = vp * rho[:-1] + vm * rho[1:]
    out = rho.copy()
    r = dt / dx
    out[:-1] -= r * flux
    out[1:] += r * flux
    return out


def interface_velocities(grad: np.ndarray, model: TurningModel) -> np.ndarray:
    """Drift at interior interfaces from the average of adjacent slopes."""
    return model.drift_velocity(0.5 * (grad[:-1] + grad[1:]))


def run_macro_grid(rho0: Field, params: MacroGridParams,
                   probe_times: Sequence[float]) -> MacroGridTrajectory:
    """March the upwind scheme to t_end under the CFL bound.

    The step satisfies dt * (3/5) c phi0 <= cfl * dx, using the global
    drift bound, so no interface can empty a cell in one step.
    """
    grid = rho0.grid
    model = params.model
    dt = params.cfl * grid.dx / model.max_drift
    n_steps = max(int(np.ceil(params.t_end / dt - 1e-12)), 1)
    dt = params.t_end / n_steps

    probe_steps = sorted({min(max(int(round(t / dt)), 0), n_steps) for t in probe_times})

    rho = rho0.values.copy()
    pot, grad = potential_and_gradient(rho, grid.dx)

    times: list[float] = []
    densities: list[np.ndarray] = []
    pots: list[np.ndarray] = []
    grads: list[np.ndarray] = []

    def record(step: int) -> None:
        times.append(step * dt)
        densities.append(rho.copy())
        pots.append(pot.copy())
        grads.append(grad.copy())

    if probe_steps and probe_steps[0] == 0:
        record(0)
        probe_steps = probe_steps[1:]

    for step in range(1, n_steps + 1):
        rho = upwind_step(rho, interface_velocities(grad, model), grid.dx, dt)
        pot, grad = potential_and_gradient(rho, grid.dx)
        if probe_steps and step == probe_steps[0]:
            record(step)
            probe_steps = probe_steps[1:]

    return MacroGridTrajectory(grid, np.asarray(times), densities, pots, grads, dt)


# ======================================================================
# particle solver
# ======================================================================


def atom_velocities(positions: np.ndarray, weights: np.ndarray,
                    model: TurningModel) -> np.ndarray:
    """Drift felt by each atom from the kernel sum over the others.

    Positions need not be sorted; coincident atoms exert no mutual pull.
    """
    order = np.argsort(positions, kind="stable")
    _, grad = kernel_sums_at(positions[order], weights[order])
    v = model.drift_velocity(grad)
    out = np.empty_like(v)
    out[order] = v
    return out


def _merge_pass(x: np.ndarray, w: np.ndarray, tol: float,
                time: float, events: list[MergeEvent]) -> tuple[np.ndarray, np.ndarray]:
    """Coalesce atoms that touched: order swaps or gaps below tol.

    Groups merge at their mass-weighted mean, preserving total weight and
    centre of mass; the pass repeats until the configuration is strictly
    sorted with all gaps above tol.
    """
    while True:
        if x.size <= 1:
            return x, w
        gaps = np.diff(x)
        if np.all(gaps > tol) and np.all(gaps > 0.0):
            return x, w
        cut = np.flatnonzero(gaps > tol)
        bounds = np.concatenate(([0], cut + 1, [x.size]))
        nx = np.empty(bounds.size - 1)
        nw = np.empty(bounds.size - 1)
        for k in range(bounds.size - 1):
            lo, hi = bounds[k], bounds[k + 1]
            ww = w[lo:hi].sum()
            xx = float(np.dot(w[lo:hi], x[lo:hi]) / ww)
            nx[k] = xx
            nw[k] = ww
            if hi - lo > 1:
                events.append(MergeEvent(time, xx, int(hi - lo), float(ww)))
        order = np.argsort(nx, kind="stable")
        x, w = nx[order], nw[order]


def particle_step(measure: ParticleMeasure, params: ParticleParams, time: float,
                  events: list[MergeEvent]) -> ParticleMeasure:
    """One sticky step: midpoint (RK2) move, then the merge pass."""
    x, w = measure.positions, measure.weights
    model = params.model
    v1 = atom_velocities(x, w, model)
    xm = x + 0.5 * params.dt * v1
    v2 = atom_velocities(xm, w, model)
    xn = x + params.dt * v2
    xn, wn = _merge_pass(xn, w.copy(), params.merge_tol, time, events)
    return ParticleMeasure(xn, wn)


def run_particles(init: ParticleMeasure, params: ParticleParams,
                  probe_times: Sequence[float]) -> ParticleTrajectory:
    """March the sticky-particle dynamics, recording at probe times."""
    dt = params.dt
    n_steps = max(int(np.ceil(params.t_end / dt - 1e-12)), 1)
    probe_steps = sorted({min(max(int(round(t / dt)), 0), n_steps) for t in probe_times})

    measure = ParticleMeasure(init.positions.copy(), init.weights.copy())
    events: list[MergeEvent] = []
    times: list[float] = []
    measures: list[ParticleMeasure] = []

    if probe_steps and probe_steps[0] == 0:
        times.append(0.0)
        measures.append(measure)
        probe_steps = probe_steps[1:]

    for step in range(1, n_steps + 1):
        measure = particle_step(measure, params, step * dt, events)
        if probe_steps and step == probe_steps[0]:
            times.append(step * dt)
            measures.append(measure)
            probe_steps = probe_steps[1:]

    return ParticleTrajectory(np.asarray(times), measures, events, dt)


def particles_from_density(rho: Field, count: int) -> ParticleMeasure:
    """Equal-weight atoms at the mass quantiles of a grid density."""
    if count < 1:
        raise ValueError("need at least one particle")
    dx = rho.grid.dx
    v = np.clip(rho.values, 0.0, None)
    total = v.sum() * dx
    if total <= 0.0:
        raise ValueError("density carries no mass")
    edges = np.concatenate(([rho.grid.x_min], rho.grid.x_min + dx * np.arange(1, rho.grid.n + 1)))
    cdf = np.concatenate(([0.0], np.cumsum(v) * dx))
    targets = (np.arange(count) + 0.5) * (total / count)
    positions = np.interp(targets, cdf, edges)
    weights = np.full(count, total / count)
    return ParticleMeasure(np.sort(positions), weights)


# ======================================================================
# references and bounds
# ======================================================================


def linf_bound(rho_max0: float, model: TurningModel, t) -> np.ndarray:
    """A priori sup bound rho_max0 / (1 - 2 Lip(drift) rho_max0 t).

    Only meaningful strictly before the horizon 1 / (2 Lip rho_max0);
    beyond it the classical solution may have blown up and the call is
    refused.
    """
    if rho_max0 <= 0.0:
        raise ValueError("rho_max0 must be positive")
    t = np.asarray(t, dtype=float)
    k = 2.0 * model.max_drift_slope * rho_max0
    if np.any(t < 0.0) or np.any(k * t >= 1.0):
        raise ValueError(f"bound only valid for 0 <= t < {1.0 / k:.6g}")
    return rho_max0 / (1.0 - k * t)


def characteristics_solution(rho0: Field, model: TurningModel, t_end: float,
                             cloud: int = 400, n_steps: int = 400) -> Field:
    """Independent reference by RK4 characteristics on a particle cloud.

    A midpoint cloud spans the support of rho0; each point carries the
    fixed weight rho0(y) dy and moves with the drift of the transported
    measure.  The density is recovered from the Jacobian of the flow map
    and interpolated back to the grid.  Raises
    :class:`CharacteristicsBreakdown` as soon as the map stops being
    increasing (trajectory crossing).
    """
    x = rho0.grid.centers()
    v = rho0.values
    support = np.flatnonzero(v > 1e-13 * v.max())
    if support.size < 2:
        raise ValueError("initial density support is too small for a cloud")
    lo = x[support[0]] - 0.5 * rho0.grid.dx
    hi = x[support[-1]] + 0.5 * rho0.grid.dx
    dy = (hi - lo) / cloud
    y = lo + (np.arange(cloud) + 0.5) * dy
    rho_y = np.interp(y, x, v)
    w = rho_y * dy

    def velocity(pos: np.ndarray) -> np.ndarray:
        return atom_velocities(pos, w, model)

    dt = t_end / n_steps
    pos = y.copy()
    for step in range(n_steps):
        k1 = velocity(pos)
        k2 = velocity(pos + 0.5 * dt * k1)
        k3 = velocity(pos + 0.5 * dt * k2)
        k4 = velocity(pos + dt * k3)
        pos = pos + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if np.any(np.diff(pos) <= 0.0):
            raise CharacteristicsBreakdown((step + 1) * dt)

    jac = np.gradient(pos, y)
    if np.any(jac <= 0.0):
        raise CharacteristicsBreakdown(t_end)
    dens = rho_y / jac
    out = np.interp(x, pos, dens, left=0.0, right=0.0)
    return Field(rho0.grid, out)
