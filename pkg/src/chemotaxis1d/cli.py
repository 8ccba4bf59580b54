"""Command-line front end.

Subcommands: run, sweep, compare, validate, presets.  Artifacts land
under an output root taken from --output-root, the environment variable
CHEMOTAXIS1D_OUTPUT_ROOT, or ./runs, in that order.  Exit codes: 0 on
success, 1 for configuration problems, 2 when a solver aborted (artifacts
up to the abort are kept), 3 for filesystem trouble.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .config import (ConfigError, ExperimentConfig, initial_field, initial_measure,
                     load_config, parse_config)
from .diagnostics import build_grid_report, build_particle_report, w1_distance
from .elliptic import Field, boundary_mass_fraction
from .kinetic import KineticParams, KineticState, KineticTrajectory, SolverAbort, run_kinetic
from .macro import MacroGridParams, ParticleParams, run_macro_grid, run_particles
from .output import (ensure_dir, line_plot, write_csv, write_diagnostics,
                     write_manifest, write_particle_snapshot, write_snapshot)
from .presets import PRESETS, preset_config


def _snapshot_name(index: int, t: float) -> str:
    return f"snapshot_{index:02d}_t{t:g}.csv"


def _eps_tag(eps: float) -> str:
    return f"eps_{eps:g}"


# ----------------------------------------------------------------------
# single runs
# ----------------------------------------------------------------------


def _write_grid_run(out_dir: str, traj, report, model, kinetic: bool,
                    manifest_extra: dict, config_echo: dict, wall: float) -> None:
    x = traj.grid.centers()
    rho_series = []
    slope_series = []
    for k, t in enumerate(traj.times):
        if kinetic:
            st = traj.states[k]
            rho = st.rho()
            fp, fm = st.f_plus, st.f_minus
        else:
            rho = traj.densities[k]
            fp = fm = None
        write_snapshot(os.path.join(out_dir, _snapshot_name(k, t)),
                       x, rho, traj.potentials[k], traj.gradients[k], fp, fm)
        rho_series.append((f"t={t:g}", x, rho))
        slope_series.append((f"t={t:g}", x, traj.gradients[k]))
    write_diagnostics(os.path.join(out_dir, "diagnostics.csv"), report)
    line_plot(os.path.join(out_dir, "rho.svg"), rho_series,
              "density over time", "x", "rho")
    line_plot(os.path.join(out_dir, "slope.svg"), slope_series,
              "chemoattractant slope over time", "x", "dS/dx")
    write_manifest(os.path.join(out_dir, "manifest.json"), config_echo, wall,
                   __version__, manifest_extra)


def execute_kinetic(cfg: ExperimentConfig, out_dir: str, config_echo: dict) -> None:
    start = time.perf_counter()
    rho0 = initial_field(cfg)
    params = KineticParams(model=cfg.model, eps=cfg.eps, t_end=cfg.t_end,
                           rho_ceiling=cfg.rho_ceiling)
    traj = run_kinetic(rho0, cfg.grid, params, cfg.probes)
    report = build_grid_report(traj, cfg.model, kinetic=True)
    extra = {
        "mode": "kinetic",
        "dt": traj.dt,
        "outflow_mass": traj.outflow_mass,
        "boundary_mass_fraction": boundary_mass_fraction(rho0),
        "aborted": traj.aborted,
        "abort_time": traj.abort_time,
    }
    _write_grid_run(out_dir, traj, report, cfg.model, True, extra,
                    config_echo, time.perf_counter() - start)
    if traj.aborted:
        raise SolverAbort(f"density ceiling hit at t = {traj.abort_time:g}", traj)


def execute_macro_grid(cfg: ExperimentConfig, out_dir: str, config_echo: dict) -> None:
    start = time.perf_counter()
    rho0 = initial_field(cfg)
    params = MacroGridParams(model=cfg.model, t_end=cfg.t_end, cfl=cfg.cfl)
    traj = run_macro_grid(rho0, params, cfg.probes)
    report = build_grid_report(traj, cfg.model, kinetic=False)
    extra = {
        "mode": "macro-grid",
        "dt": traj.dt,
        "boundary_mass_fraction": boundary_mass_fraction(rho0),
    }
    _write_grid_run(out_dir, traj, report, cfg.model, False, extra,
                    config_echo, time.perf_counter() - start)


def execute_particles(cfg: ExperimentConfig, out_dir: str, config_echo: dict) -> None:
    start = time.perf_counter()
    init = initial_measure(cfg)
    params = ParticleParams(model=cfg.model, t_end=cfg.t_end, dt=cfg.dt,
                            merge_tol=cfg.merge_tol)
    traj = run_particles(init, params, cfg.probes)
    report = build_particle_report(traj, cfg.model)

    for k, t in enumerate(traj.times):
        m = traj.measures[k]
        write_particle_snapshot(os.path.join(out_dir, f"particles_{k:02d}_t{t:g}.csv"),
                                m.positions, m.weights)
    write_csv(os.path.join(out_dir, "merges.csv"), ("t", "x", "count", "weight"),
              ([e.time for e in traj.merge_events],
               [e.position for e in traj.merge_events],
               [float(e.count) for e in traj.merge_events],
               [e.weight for e in traj.merge_events]))
    write_diagnostics(os.path.join(out_dir, "diagnostics.csv"), report)
    line_plot(os.path.join(out_dir, "energy.svg"),
              [("pairing energy", traj.times, report.column("energy_pairing")),
               ("cap", traj.times, report.column("energy_bound"))],
              "interaction energy", "t", "E")
    write_manifest(os.path.join(out_dir, "manifest.json"), config_echo,
                   time.perf_counter() - start, __version__,
                   {"mode": "macro-particles",
                    "atoms_final": int(traj.measures[-1].positions.size),
                    "merge_events": len(traj.merge_events)})


# ----------------------------------------------------------------------
# sweeps
# ----------------------------------------------------------------------


def _kinetic_member(raw: dict, eps: float) -> dict:
    """Run one sweep member; returns plain arrays so it can cross processes."""
    cfg = parse_config({**raw, "mode": "kinetic", "eps": eps})
    rho0 = initial_field(cfg)
    params = KineticParams(model=cfg.model, eps=eps, t_end=cfg.t_end,
                           rho_ceiling=cfg.rho_ceiling)
    traj = run_kinetic(rho0, cfg.grid, params, cfg.probes)
    return {
        "eps": eps,
        "times": traj.times,
        "fp": [s.f_plus for s in traj.states],
        "fm": [s.f_minus for s in traj.states],
        "pot": traj.potentials,
        "grad": traj.gradients,
        "dt": traj.dt,
        "outflow": traj.outflow_mass,
        "aborted": traj.aborted,
        "abort_time": traj.abort_time,
    }


def _member_trajectory(cfg: ExperimentConfig, member: dict) -> KineticTrajectory:
    states = [KineticState(cfg.grid, fp, fm) for fp, fm in zip(member["fp"], member["fm"])]
    return KineticTrajectory(grid=cfg.grid, times=member["times"], states=states,
                             potentials=member["pot"], gradients=member["grad"],
                             dt=member["dt"], outflow_mass=member["outflow"],
                             aborted=member["aborted"], abort_time=member["abort_time"])


def execute_sweep(cfg: ExperimentConfig, raw: dict, out_dir: str, config_echo: dict,
                  print_table: bool = False) -> None:
    start = time.perf_counter()
    eps_list = sorted(cfg.eps_list, reverse=True)

    reference_fields = None
    ref_traj = None
    if cfg.reference == "macro-grid":
        ref_cfg = parse_config({**raw, "mode": "macro-grid"})
        ref_traj = run_macro_grid(initial_field(ref_cfg),
                                  MacroGridParams(model=ref_cfg.model, t_end=ref_cfg.t_end,
                                                  cfl=ref_cfg.cfl),
                                  ref_cfg.probes)
        reference_fields = [Field(cfg.grid, r) for r in ref_traj.densities]

    members = _run_members(raw, eps_list)

    if cfg.reference == "smallest-eps":
        smallest = members[-1]
        reference_fields = [Field(cfg.grid, fp + fm)
                            for fp, fm in zip(smallest["fp"], smallest["fm"])]

    if ref_traj is not None:
        ref_dir = ensure_dir(os.path.join(out_dir, "reference_macro"))
        ref_report = build_grid_report(ref_traj, cfg.model, kinetic=False)
        _write_grid_run(ref_dir, ref_traj, ref_report, cfg.model, False,
                        {"mode": "macro-grid", "dt": ref_traj.dt}, config_echo, 0.0)

    x = cfg.grid.centers()
    table_rows = []
    final_series = []
    slope_final_series = []
    aborted_any = None
    for member in members:
        traj = _member_trajectory(cfg, member)
        report = build_grid_report(traj, cfg.model, kinetic=True,
                                   reference=reference_fields)
        mdir = ensure_dir(os.path.join(out_dir, _eps_tag(member["eps"])))
        _write_grid_run(mdir, traj, report, cfg.model, True,
                        {"mode": "kinetic", "eps": member["eps"], "dt": member["dt"],
                         "outflow_mass": member["outflow"], "aborted": member["aborted"],
                         "abort_time": member["abort_time"]},
                        config_echo, 0.0)
        if member["aborted"]:
            aborted_any = member["eps"]

        rho_final = traj.states[-1].rho()
        final_series.append((f"eps={member['eps']:g}", x, rho_final))
        slope_final_series.append((f"eps={member['eps']:g}", x, traj.gradients[-1]))
        w1 = report.column("w1_ref") if report.has("w1_ref") else np.zeros(traj.times.size)
        s_inf = ds_l1 = 0.0
        if reference_fields is not None:
            ref_rho = reference_fields[-1]
            from .elliptic import grad_potential, solve_convolution
            s_ref = solve_convolution(ref_rho).values
            g_ref = grad_potential(ref_rho).values
            s_inf = float(np.max(np.abs(traj.potentials[-1] - s_ref)))
            ds_l1 = float(np.sum(np.abs(traj.gradients[-1] - g_ref))) * cfg.grid.dx
        table_rows.append((member["eps"], list(w1), s_inf, ds_l1))

    if reference_fields is not None:
        ref_rho = reference_fields[-1]
        final_series.append(("reference", x, ref_rho.values))
    line_plot(os.path.join(out_dir, "rho_final.svg"), final_series,
              "final density across stiffness", "x", "rho")
    line_plot(os.path.join(out_dir, "slope_final.svg"), slope_final_series,
              "final chemoattractant slope across stiffness", "x", "dS/dx")

    times = members[0]["times"]
    header = ["eps"] + [f"w1_t{t:g}" for t in times] + ["s_inf_final", "ds_l1_final"]
    cols: list[list[float]] = [[] for _ in header]
    for eps, w1, s_inf, ds_l1 in table_rows:
        row = [eps] + list(w1) + [s_inf, ds_l1]
        for c, v in zip(cols, row):
            c.append(v)
    write_csv(os.path.join(out_dir, "compare.csv"), header, cols)

    monotone = {}
    for j, t in enumerate(times):
        col = [row[1][j] for row in table_rows]
        monotone[f"t{t:g}"] = bool(all(b <= a * (1.0 + 1e-12) for a, b in zip(col, col[1:])))
    write_manifest(os.path.join(out_dir, "manifest.json"), config_echo,
                   time.perf_counter() - start, __version__,
                   {"mode": cfg.mode, "members": [m["eps"] for m in members],
                    "reference": cfg.reference, "w1_monotone_in_eps": monotone})

    if print_table:
        widths = [max(len(h), 12) for h in header]
        print("  ".join(h.ljust(w) for h, w in zip(header, widths)))
        for eps, w1, s_inf, ds_l1 in table_rows:
            vals = [eps] + list(w1) + [s_inf, ds_l1]
            print("  ".join(f"{v:.6g}".ljust(w) for v, w in zip(vals, widths)))
        print("w1 monotone in eps per probe:", monotone)

    if aborted_any is not None:
        raise SolverAbort(f"sweep member eps={aborted_any:g} hit its density ceiling")


def _run_members(raw: dict, eps_list: list[float]) -> list[dict]:
    """Run sweep members concurrently; fall back to sequential if the pool
    cannot start (deterministic output either way)."""
    if len(eps_list) == 1:
        return [_kinetic_member(raw, eps_list[0])]
    try:
        with concurrent.futures.ProcessPoolExecutor(
                max_workers=min(len(eps_list), os.cpu_count() or 1)) as pool:
            futures = [pool.submit(_kinetic_member, raw, eps) for eps in eps_list]
            return [f.result() for f in futures]
    except (OSError, concurrent.futures.process.BrokenProcessPool):
        return [_kinetic_member(raw, eps) for eps in eps_list]


# ----------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------


def _resolve_raw(args) -> dict:
    if args.preset:
        return preset_config(args.preset)
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            try:
                return json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError([f"not valid JSON: {exc}"]) from exc
    raise ConfigError(["give either --config FILE or --preset NAME"])


def _output_root(args) -> str:
    if args.output_root:
        return args.output_root
    return os.environ.get("CHEMOTAXIS1D_OUTPUT_ROOT", "runs")


def execute(raw: dict, out_root: str, print_table: bool = False) -> None:
    cfg = parse_config(raw)
    out_dir = ensure_dir(os.path.join(out_root, cfg.output_dir))
    echo = {"raw": raw}
    if cfg.mode == "kinetic":
        execute_kinetic(cfg, out_dir, echo)
    elif cfg.mode == "macro-grid":
        execute_macro_grid(cfg, out_dir, echo)
    elif cfg.mode == "macro-particles":
        execute_particles(cfg, out_dir, echo)
    else:
        execute_sweep(cfg, raw, out_dir, echo, print_table=print_table)


def _add_common(sub) -> None:
    sub.add_argument("--config", help="path to a JSON configuration")
    sub.add_argument("--preset", help="name of a built-in configuration")
    sub.add_argument("--output-root", help="directory for artifacts "
                     "(default: $CHEMOTAXIS1D_OUTPUT_ROOT or ./runs)")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="chemotaxis1d",
        description="1D two-speed kinetic chemotaxis model and its aggregation limit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("run", "execute one configuration"),
                            ("sweep", "execute a stiffness sweep"),
                            ("compare", "sweep plus a convergence table on stdout")):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
    pv = sub.add_parser("validate", help="check a configuration and exit")
    _add_common(pv)
    pp = sub.add_parser("presets", help="operate on built-in configurations")
    pp.add_argument("action", choices=["list"])

    args = parser.parse_args(argv)

    if args.command == "presets":
        for name in sorted(PRESETS):
            print(f"{name:20s} {PRESETS[name]['description']}")
        return 0

    try:
        raw = _resolve_raw(args)
        if args.command == "validate":
            parse_config(raw)
            print("configuration OK")
            return 0
        if args.command in ("sweep", "compare") and raw.get("mode") not in ("sweep", "compare"):
            raise ConfigError([f"mode: {args.command} needs a sweep or compare configuration"])
        execute(raw, _output_root(args), print_table=(args.command == "compare"))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SolverAbort as exc:
        print(f"solver abort: {exc} (artifacts kept)", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
