"""Named built-in configurations.

The desk-scale presets use the nondimensional model (phi0 = alpha = c = 1).
The ``ecoli`` preset carries the physical chemotaxis scaling instead: cell
speed 20 um/s on a 1 cm domain gives the time unit x0/c = 500 s, and base
turning rates of 20, 1 and 0.05 per second map to stiffness values
eps = c / (phi0 x0) of 1e-4, 2e-3 and 4e-2.  Its t_end of 0.16 scaled
units corresponds to 80 seconds of physical time.
"""

from __future__ import annotations

import copy

_GAUSS_GRID = {"x_min": -2.0, "x_max": 2.0, "n": 1000}
_GAUSS_INIT = {"kind": "gaussian", "center": 0.0, "sigma": 0.3, "mass": 1.0}
_BUMP_INIT = {"kind": "bump", "center": 0.0, "radius": 0.5, "mass": 1.0}

PRESETS: dict[str, dict] = {
    "fig1_kinetic": {
        "description": "single kinetic run at eps = 4e-2, Gaussian start, long horizon",
        "config": {
            "mode": "kinetic",
            "grid": dict(_GAUSS_GRID),
            "initial": dict(_GAUSS_INIT),
            "eps": 4e-2,
            "t_end": 80.0,
            "probes": [0.0, 4.0, 8.0, 16.0, 80.0],
            "output_dir": "fig1_kinetic",
        },
    },
    "fig2_sweep": {
        "description": "stiffness sweep 4e-2 / 2e-3 / 1e-4 against the grid limit solver",
        "config": {
            "mode": "sweep",
            "grid": dict(_GAUSS_GRID),
            "initial": dict(_GAUSS_INIT),
            "eps_list": [4e-2, 2e-3, 1e-4],
            "reference": "macro-grid",
            "t_end": 80.0,
            "probes": [0.0, 4.0, 8.0, 16.0, 80.0],
            "output_dir": "fig2_sweep",
        },
    },
    "ecoli": {
        "description": "physical E. coli scaling (20 um/s, 1 cm, 80 s) in scaled units",
        "config": {
            "mode": "sweep",
            "grid": {"x_min": -0.5, "x_max": 0.5, "n": 500},
            "initial": {"kind": "gaussian", "center": 0.0, "sigma": 0.05, "mass": 1.0},
            "eps_list": [4e-2, 2e-3, 1e-4],
            "reference": "macro-grid",
            "t_end": 0.16,
            "probes": [0.0, 0.04, 0.08, 0.12, 0.16],
            "output_dir": "ecoli",
            "label": "c=20um/s x0=1cm phi0=0.05/1/20 per s; time unit 500 s",
        },
    },
    "blowup_grid": {
        "description": "compact bump on the grid limit solver, run to just under the sup-bound horizon",
        "config": {
            "mode": "macro-grid",
            "grid": {"x_min": -2.0, "x_max": 2.0, "n": 800},
            "initial": dict(_BUMP_INIT),
            "t_end": 0.2,
            "probes": [0.0, 0.05, 0.1, 0.15, 0.2],
            "cfl": 0.5,
            "output_dir": "blowup_grid",
        },
    },
    "blowup_particles": {
        "description": "compact bump as sticky particles, run through full concentration",
        "config": {
            "mode": "macro-particles",
            "grid": {"x_min": -2.0, "x_max": 2.0, "n": 800},
            "initial": dict(_BUMP_INIT),
            "n_particles": 80,
            "dt": 2e-3,
            "merge_tol": 2e-3,
            "t_end": 5.0,
            "probes": [0.0, 1.0, 2.0, 3.0, 5.0],
            "output_dir": "blowup_particles",
        },
    },
    "two_atoms": {
        "description": "two equal atoms attract and coalesce at the origin",
        "config": {
            "mode": "macro-particles",
            "grid": {"x_min": -2.0, "x_max": 2.0, "n": 100},
            "initial": {"kind": "atoms", "positions": [-0.5, 0.5], "weights": [0.5, 0.5]},
            "dt": 2e-3,
            "merge_tol": 1e-3,
            "t_end": 6.0,
            "probes": [0.0, 1.5, 3.0, 4.5, 6.0],
            "output_dir": "two_atoms",
        },
    },
}


def preset_config(name: str) -> dict:
    """Deep copy of a preset's raw config document."""
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
    return copy.deepcopy(PRESETS[name]["config"])
