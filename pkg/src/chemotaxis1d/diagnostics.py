"""Diagnostics for kinetic and limit runs.

Every quantity here has a second, independent route somewhere else in the
package or in the tests: the energy is computed both as a field
quadrature and as a kernel pairing, the flux identity is checked against
its closed-form antiderivative, and the one-sided Lipschitz certificate
compares a measured slope against an a priori bound.  None of the checks
share intermediate results with the solvers they certify.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .elliptic import Field, grad_potential, kernel_sums_at, solve_convolution
from .macro import ParticleMeasure
from .turning import TurningModel


# ======================================================================
# energy
# ======================================================================


def energy(arg) -> tuple[float, float]:
    """Interaction energy of a density or measure, by two routes.

    Returns (field quadrature of (|dS|^2 + S^2) / 2, kernel pairing
    sum(rho S) / 2).  On a grid the two agree to O(dx^2); for atoms the
    quadrature has the same closed form as the pairing, so the entries
    coincide exactly.
    """
    if isinstance(arg, Field):
        s = solve_convolution(arg).values
        g = grad_potential(arg).values
        dx = arg.grid.dx
        e_field = 0.5 * float(np.sum(g * g + s * s)) * dx
        e_pair = 0.5 * float(np.sum(arg.values * s)) * dx
        return e_field, e_pair
    if isinstance(arg, ParticleMeasure):
        s, _ = kernel_sums_at(arg.positions, arg.weights)
        e = 0.5 * float(np.dot(arg.weights, s))
        return e, e
    raise TypeError("energy expects a Field or ParticleMeasure")


def energy_bound(mass: float) -> float:
    """Upper bound mass^2 / 2 on the interaction energy."""
    return 0.5 * mass * mass


@dataclass
class EnergyGrowth:
    """Outcome of the probe-interval energy monitor."""

    rates: np.ndarray
    min_rate: float
    dissipation: np.ndarray
    nondecreasing: bool


def energy_growth_monitor(times: Sequence[float], energies: Sequence[float],
                          dissipation: Sequence[float], tol: float = 1e-8) -> EnergyGrowth:
    """Check dE/dt >= -tol over probe intervals.

    ``dissipation`` carries the coercive channel zeta * sum(|dS|^2 rho)
    evaluated at the probes; it is reported alongside, not asserted,
    because first-order schemes trade some of it for numerical diffusion.
    """
    t = np.asarray(times, dtype=float)
    e = np.asarray(energies, dtype=float)
    if t.size != e.size or t.size < 2:
        raise ValueError("need matching times and energies, at least two probes")
    rates = np.diff(e) / np.diff(t)
    return EnergyGrowth(rates=rates,
                        min_rate=float(rates.min()),
                        dissipation=np.asarray(dissipation, dtype=float),
                        nondecreasing=bool(rates.min() >= -tol))


def dissipation_channel(rho: Field, grad: np.ndarray, model: TurningModel) -> float:
    """Coercive growth floor zeta * sum(|dS|^2 rho) dx with zeta the
    smallest drift secant over the a priori slope range |dS| <= mass/2."""
    radius = 0.5 * rho.mass()
    if radius <= 0.0:
        return 0.0
    zeta = model.drift_secant_min(radius)
    return zeta * float(np.sum(grad * grad * rho.values)) * rho.grid.dx


# ======================================================================
# Wasserstein-1 distance
# ======================================================================


def _cdf_knots(arg) -> tuple[np.ndarray, np.ndarray, np.ndarray, bool]:
    """Breakpoints with CDF values; bool marks piecewise-linear (field)."""
    if isinstance(arg, Field):
        dx = arg.grid.dx
        edges = arg.grid.x_min + dx * np.arange(arg.grid.n + 1)
        cdf = np.concatenate(([0.0], np.cumsum(arg.values) * dx))
        return edges, cdf, cdf, True
    if isinstance(arg, ParticleMeasure):
        cum = np.cumsum(arg.weights)
        below = np.concatenate(([0.0], cum[:-1]))
        return arg.positions, below, cum, False
    raise TypeError("w1_distance expects Fields or ParticleMeasures")


def _eval_cdf(knots, below, above, linear, t, side) -> np.ndarray:
    """CDF limit values at points t; side is '+' or '-' of the limit."""
    if linear:
        return np.interp(t, knots, above)
    idx = np.searchsorted(knots, t, side="right" if side == "+" else "left")
    padded = np.concatenate(([0.0], above))
    return padded[idx]


def w1_distance(mu, nu) -> float:
    """Exact Wasserstein-1 distance between two equal-mass measures.

    Integrates |F_mu - F_nu| over the union of breakpoints; inside each
    open segment both CDFs are affine, so the integral is exact including
    sign crossings.  Measures with differing masses are rescaled to the
    first mass (with a warning); zero mass is rejected.
    """
    k1, b1, a1, lin1 = _cdf_knots(mu)
    k2, b2, a2, lin2 = _cdf_knots(nu)
    m1, m2 = a1[-1], a2[-1]
    if m1 <= 0.0 or m2 <= 0.0:
        raise ValueError("w1_distance needs positive-mass measures")
    if not math.isclose(m1, m2, rel_tol=1e-9):
        warnings.warn("masses differ; rescaling the second measure", stacklevel=2)
    scale = m1 / m2
    b2 = b2 * scale
    a2 = a2 * scale

    pts = np.union1d(k1, k2)
    hi = pts[1:]
    h = hi - pts[:-1]

    da = (_eval_cdf(k1, b1, a1, lin1, pts[:-1], "+")
          - _eval_cdf(k2, b2, a2, lin2, pts[:-1], "+"))
    db = (_eval_cdf(k1, b1, a1, lin1, hi, "-")
          - _eval_cdf(k2, b2, a2, lin2, hi, "-"))

    same = da * db >= 0.0
    seg = np.where(same,
                   0.5 * h * (np.abs(da) + np.abs(db)),
                   0.5 * h * (da * da + db * db) / np.maximum(np.abs(da) + np.abs(db), 1e-300))
    return float(seg.sum())


# ======================================================================
# structure identities and certificates
# ======================================================================


def flux_identity_residual(rho: Field, model: TurningModel) -> float:
    """L1 defect of the macroscopic flux identity.

    With S = K * rho and g = dS/dx, the flux a(g) rho equals
    -d/dx(drift_potential(g)) + a(g) S identically in the continuum.  The
    discrete defect, with a centred difference for the derivative and the
    principal-value slope, shrinks linearly with dx: the self-cell share
    of the slope jump contributes O(dx) per cell.
    """
    s = solve_convolution(rho).values
    g = grad_potential(rho).values
    dx = rho.grid.dx
    a = model.drift_velocity(g)
    pot_a = model.drift_potential(g)
    lhs = a * rho.values
    rhs = np.empty_like(lhs)
    rhs[1:-1] = -(pot_a[2:] - pot_a[:-2]) / (2.0 * dx) + a[1:-1] * s[1:-1]
    resid = np.abs(lhs[1:-1] - rhs[1:-1])
    return float(resid.sum()) * dx


@dataclass
class OSLResult:
    sup_slope: float
    bound: float
    satisfied: bool


def osl_check(rho: Field, model: TurningModel, tol: float = 1e-6) -> OSLResult:
    """One-sided Lipschitz certificate for the drift field.

    The centred slope of drift_velocity(dS/dx) must stay below
    (8/5) c max|rate'| max(S): steepening is unlimited only on the
    compressive side.  Downward jumps at concentrations are allowed.
    """
    s = solve_convolution(rho).values
    g = grad_potential(rho).values
    a = model.drift_velocity(g)
    dx = rho.grid.dx
    sup = float(np.max((a[2:] - a[:-2]) / (2.0 * dx))) if rho.grid.n > 2 else 0.0
    bound = max(1.6 * model.c * model.max_rate_slope * float(s.max()), 0.0)
    return OSLResult(sup, bound, sup <= bound + tol)


def equilibrium_residual(f_plus: np.ndarray, f_minus: np.ndarray,
                         grad: np.ndarray, model: TurningModel, dx: float) -> float:
    """L1 detailed-balance defect rate(-c g) f_minus - rate(c g) f_plus.

    Vanishes exactly at local equilibrium; along resolved kinetic
    trajectories it settles at O(eps) after the initial layer.
    """
    r = (model.rate(-model.c * grad) * f_minus
         - model.rate(model.c * grad) * f_plus)
    return float(np.abs(r).sum()) * dx


def blowup_flag(rho: Field) -> bool:
    """True once a single cell holds at least half the total mass."""
    m = rho.mass()
    return m > 0.0 and float(rho.values.max()) * rho.grid.dx >= 0.5 * m


@dataclass
class BlowupBracket:
    """Concentration-time bracket from the two a priori estimates.

    ``no_blowup_before`` is the sup-bound horizon: the classical solution
    survives at least this long.  ``blowup_by`` extrapolates the energy
    toward its mass^2/2 cap at the slowest observed growth rate; if the
    rate keeps its sign the measure must concentrate by then (infinity if
    growth ever stalls).  ``observed`` is the first probe time at which
    half the mass sat in one cell (or a merge happened), NaN-free: None
    when never observed.
    """

    no_blowup_before: float
    blowup_by: float
    observed: float | None


def blowup_bracket(times: Sequence[float], energies: Sequence[float],
                   rho_max0: float, mass: float, model: TurningModel,
                   observed: float | None = None) -> BlowupBracket:
    t = np.asarray(times, dtype=float)
    e = np.asarray(energies, dtype=float)
    horizon = 1.0 / (2.0 * model.max_drift_slope * rho_max0)
    rates = np.diff(e) / np.diff(t)
    floor = float(rates.min()) if rates.size else 0.0
    if floor > 0.0:
        by = float(t[0] + (energy_bound(mass) - e[0]) / floor)
    else:
        by = math.inf
    return BlowupBracket(no_blowup_before=horizon, blowup_by=by, observed=observed)


# ======================================================================
# per-run report
# ======================================================================


@dataclass
class DiagnosticsReport:
    """Probe-aligned diagnostic channels for one run.

    Channels present depend on the mode; values are always finite.
    """

    times: np.ndarray
    channels: dict[str, np.ndarray] = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return self.channels[name]

    def has(self, name: str) -> bool:
        return name in self.channels


def _finite(name: str, arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"diagnostic channel {name!r} is not finite")
    return arr


def build_grid_report(traj, model: TurningModel, kinetic: bool = False,
                      reference=None) -> DiagnosticsReport:
    """Assemble the standard channels from a grid trajectory.

    Works for both kinetic and macro-grid trajectories (the former adds
    the detailed-balance residual).  ``reference`` is an optional list of
    measures or fields aligned with the probes for the w1 channel.
    """
    grid = traj.grid
    dx = grid.dx
    times = traj.times
    n_probes = times.size

    mass = np.empty(n_probes)
    linf = np.empty(n_probes)
    e_field = np.empty(n_probes)
    e_pair = np.empty(n_probes)
    osl_sup = np.empty(n_probes)
    osl_bound = np.empty(n_probes)
    flux_res = np.empty(n_probes)
    dissip = np.empty(n_probes)
    eq_res = np.empty(n_probes) if kinetic else None
    w1 = np.empty(n_probes) if reference is not None else None

    for k in range(n_probes):
        if kinetic:
            rho_vals = traj.states[k].rho()
        else:
            rho_vals = traj.densities[k]
        rho = Field(grid, rho_vals)
        mass[k] = rho.mass()
        linf[k] = float(rho_vals.max())
        e_field[k], e_pair[k] = energy(rho)
        cert = osl_check(rho, model)
        osl_sup[k] = cert.sup_slope
        osl_bound[k] = cert.bound
        flux_res[k] = flux_identity_residual(rho, model)
        dissip[k] = dissipation_channel(rho, traj.gradients[k], model)
        if kinetic:
            st = traj.states[k]
            eq_res[k] = equilibrium_residual(st.f_plus, st.f_minus,
                                             traj.gradients[k], model, dx)
        if reference is not None:
            w1[k] = w1_distance(rho, reference[k])

    channels = {
        "mass": _finite("mass", mass),
        "linf": _finite("linf", linf),
        "energy_field": _finite("energy_field", e_field),
        "energy_pairing": _finite("energy_pairing", e_pair),
        "energy_bound": _finite("energy_bound", energy_bound(mass[0]) * np.ones(n_probes)),
        "osl_sup": _finite("osl_sup", osl_sup),
        "osl_bound": _finite("osl_bound", osl_bound),
        "flux_res": _finite("flux_res", flux_res),
        "dissipation": _finite("dissipation", dissip),
    }
    if eq_res is not None:
        channels["eq_res"] = _finite("eq_res", eq_res)
    if w1 is not None:
        channels["w1_ref"] = _finite("w1_ref", w1)
    return DiagnosticsReport(times=times, channels=channels)


def build_particle_report(traj, model: TurningModel, reference=None) -> DiagnosticsReport:
    """Channels computable for measure-valued runs: mass and energy
    (single closed form), plus the optional w1 channel."""
    times = traj.times
    n_probes = times.size
    mass = np.empty(n_probes)
    e_pair = np.empty(n_probes)
    w1 = np.empty(n_probes) if reference is not None else None
    for k, m in enumerate(traj.measures):
        mass[k] = m.mass()
        _, e_pair[k] = energy(m)
        if reference is not None:
            w1[k] = w1_distance(m, reference[k])
    channels = {
        "mass": _finite("mass", mass),
        "energy_field": _finite("energy_field", e_pair),
        "energy_pairing": _finite("energy_pairing", e_pair),
        "energy_bound": _finite("energy_bound", energy_bound(mass[0]) * np.ones(n_probes)),
    }
    if w1 is not None:
        channels["w1_ref"] = _finite("w1_ref", w1)
    return DiagnosticsReport(times=times, channels=channels)
