"""Scenario execution: builds initial states, drives the steppers, and writes
state snapshots, invariant series, SVG figures, and a JSON summary.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .config import ConfigError, ScenarioConfig
from .dynamics import (
    MultivaluedContourError,
    SatelliteScenario,
    SimState,
    make_perturbation_state,
    perturbation_solve,
    run_satellite,
    step_patch,
    step_system,
)
from .geometry import (
    GriddedVorticity,
    PatchContour,
    VortexSystem,
    ellipse_radius,
    gaussian_region,
    load_region,
    save_region,
    scaled_profile_region,
)
from .invariants import InvariantReport, report
from .kernels import hamiltonian
from .oracles import (
    SpectralState,
    grid_from_sampler,
    grid_from_system,
    hausdorff_distance,
    kirchhoff_rotation_rate,
    kirchhoff_state,
    marching_squares,
    region_contour_points,
    run_spectral,
    smoothed_patch_sampler,
)
from .quadrature import TWO_PI, phi_grid


class SimulationHalt(RuntimeError):
    """The simulation stopped before the horizon (diagnostics preserved)."""


def run_scenario(config: ScenarioConfig, out_dir=None) -> dict:
    """Execute one scenario; returns the summary dict written to summary.json."""
    out = Path(out_dir if out_dir is not None else config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    runner = _RUNNERS.get(config.kind)
    if runner is None:
        raise ConfigError("unknown scenario kind %r" % config.kind)
    summary = {"kind": config.kind, "schema": 1, "status": "ok"}
    try:
        summary.update(runner(config, out))
    except (MultivaluedContourError,) as exc:
        summary["status"] = "halted"
        summary["error"] = {"type": type(exc).__name__, "message": str(exc)}
        _write_json(out / "summary.json", summary)
        raise SimulationHalt(str(exc))
    _write_json(out / "summary.json", summary)
    return summary


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_invariants(path, header, rows):
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(row + "\n")


def _build_system(config: ScenarioConfig) -> VortexSystem:
    init = config.initial
    fam = init["family"]
    n_phi, n_w = config.n_phi, config.n_w
    if fam == "gaussian":
        reg = gaussian_region(
            float(init["strength"]), float(init["core"]),
            center=tuple(init.get("center", (0.0, 0.0))), n_phi=n_phi, n_w=n_w,
        )
        return VortexSystem((reg,))
    if fam == "scaled-ellipse":
        reg = scaled_profile_region(
            float(init["strength"]),
            ellipse_radius(float(init["a"]), float(init["b"])),
            float(init["eps"]),
            center=tuple(init.get("center", (0.0, 0.0))), n_phi=n_phi, n_w=n_w,
        )
        return VortexSystem((reg,))
    if fam == "elliptic-gaussian":
        # anisotropic Gaussian: the eps = 1/2 member of the scaled family
        reg = scaled_profile_region(
            float(init["strength"]),
            ellipse_radius(float(init["a"]), float(init["b"])),
            0.5,
            center=tuple(init.get("center", (0.0, 0.0))), n_phi=n_phi, n_w=n_w,
        )
        return VortexSystem((reg,))
    if fam == "gaussian-pair":
        s1, s2 = float(init["strength1"]), float(init["strength2"])
        d = float(init["separation"])
        core = float(init["core"])
        r1 = gaussian_region(s1, core, center=(-d / 2, 0.0), n_phi=n_phi, n_w=n_w)
        r2 = gaussian_region(s2, core, center=(d / 2, 0.0), n_phi=n_phi, n_w=n_w)
        regions = (r1, r2) if s1 >= s2 else (r2, r1)
        return VortexSystem(regions)
    if fam == "file":
        return VortexSystem((load_region(init["path"]),))
    raise ConfigError("unsupported initial family %r" % fam)


def _default_probes(system: VortexSystem, config: ScenarioConfig):
    if config.probe_levels:
        return np.asarray(config.probe_levels, dtype=float)
    peak = system.regions[0].peak
    return peak * np.linspace(0.1, 0.9, 8)


def _evolve_system(config: ScenarioConfig, out: Path, expect_regions=None) -> dict:
    system = _build_system(config)
    if expect_regions is not None and system.n != expect_regions:
        raise ConfigError(
            "kind %r requires %d region(s), config built %d"
            % (config.kind, expect_regions, system.n)
        )
    if config.kind == "dipole" and system.n == 2:
        peaks = [r.peak for r in system.regions]
        if peaks[0] <= 0:
            raise ConfigError("dipole requires the first region's peak to be positive")
    probes = _default_probes(system, config)
    n_steps = int(round(config.horizon / config.dt))
    out_every = max(1, n_steps // (config.outputs - 1))
    state = SimState(0.0, system)
    rows = []
    rep0 = report(system, 0.0, probes)
    rows.append(rep0.csv_row())
    _snapshot_system(out, 0, state)
    halted = None
    try:
        for i in range(n_steps):
            state = step_system(state, config.dt)
            if (i + 1) % out_every == 0 or i == n_steps - 1:
                idx = (i + 1) // out_every
                rep = report(state.system, state.t, probes)
                rows.append(rep.csv_row())
                _snapshot_system(out, idx, state)
    except MultivaluedContourError as exc:
        halted = exc
    header = InvariantReport.csv_header(system.n, probes)
    _write_invariants(out / "invariants.csv", header, rows)
    if halted is not None:
        raise halted
    rep_end = report(state.system, state.t, probes)
    drift_h = abs(rep_end.energy - rep0.energy) / max(abs(rep0.energy), 1e-300)
    drift_c = abs(
        complex(rep_end.first_moment) - complex(rep0.first_moment)
    )
    center_moves = [
        float(np.hypot(c1[0] - c0[0], c1[1] - c0[1]))
        for c0, c1 in zip(rep0.centers, rep_end.centers)
    ]
    return {
        "t_end": state.t,
        "energy_drift_rel": drift_h,
        "first_moment_drift_abs": drift_c,
        "center_displacements": center_moves,
    }


def _snapshot_system(out: Path, idx: int, state: SimState):
    for k, reg in enumerate(state.system.regions):
        save_region(out / ("state_%04d_r%d.csv" % (idx, k)), reg)
    from .plotting import plot_contours

    levels = [reg.peak * np.array([0.2, 0.5, 0.8]) for reg in state.system.regions]
    plot_contours(
        state.system, levels, out / ("contours_%04d.svg" % idx),
        title="t = %.4g" % state.t,
    )


def _run_monopole(config: ScenarioConfig, out: Path) -> dict:
    return _evolve_system(config, out, expect_regions=1)


def _run_dipole(config: ScenarioConfig, out: Path) -> dict:
    return _evolve_system(config, out, expect_regions=2)


def _run_patch(config: ScenarioConfig, out: Path) -> dict:
    init = config.initial
    if init["family"] == "kirchhoff":
        a, b, strength = float(init["a"]), float(init["b"]), float(init["strength"])
        patch = kirchhoff_state(a, b, strength, 0.0, n_phi=config.n_phi)
        want_rate = kirchhoff_rotation_rate(a, b, strength)
    else:
        patch = PatchContour(
            np.zeros(2), float(init["strength"]), np.full(config.n_phi, float(init["radius"]))
        )
        want_rate = 0.0
    n_steps = int(round(config.horizon / config.dt))
    out_every = max(1, n_steps // (config.outputs - 1))
    dphi = TWO_PI / config.n_phi
    h0 = hamiltonian(patch)
    area0 = 0.5 * dphi * float(np.sum(patch.rho**2))
    rows = ["schema=1,t,energy,area,orientation"]
    times, angles = [0.0], [_orientation(patch)]
    rows.append("0.0,%r,%r,%r" % (h0, area0, angles[0]))
    _snapshot_patch(out, 0, patch, 0.0)
    cur = patch
    for i in range(n_steps):
        cur = step_patch(cur, config.dt)
        if (i + 1) % out_every == 0 or i == n_steps - 1:
            t = (i + 1) * config.dt
            idx = (i + 1) // out_every
            times.append(t)
            angles.append(_orientation(cur))
            rows.append(
                "%r,%r,%r,%r"
                % (t, hamiltonian(cur), 0.5 * dphi * float(np.sum(cur.rho**2)), angles[-1])
            )
            _snapshot_patch(out, idx, cur, t)
    _write_invariants(out / "invariants.csv", rows[0], rows[1:])
    unwrapped = np.unwrap(np.array(angles) * 2) / 2
    slope = float(np.polyfit(times, -unwrapped, 1)[0]) if len(times) > 2 else float("nan")
    h1 = hamiltonian(cur)
    area1 = 0.5 * dphi * float(np.sum(cur.rho**2))
    summary = {
        "t_end": times[-1],
        "measured_rotation_rate": slope,
        "energy_drift_rel": abs(h1 - h0) / abs(h0),
        "area_drift_rel": abs(area1 - area0) / area0,
    }
    if want_rate:
        summary["expected_rotation_rate"] = want_rate
        summary["rotation_rate_rel_err"] = abs(slope - want_rate) / want_rate
    return summary


def _orientation(patch: PatchContour) -> float:
    c2 = np.fft.rfft(patch.rho**2)[2]
    return float(0.5 * np.angle(c2))


def _snapshot_patch(out: Path, idx: int, patch: PatchContour, t: float):
    with open(out / ("state_%04d.csv" % idx), "w") as fh:
        fh.write("format,contourdyn-patch,1\n")
        fh.write("pole,%r,%r\n" % (float(patch.pole[0]), float(patch.pole[1])))
        fh.write("strength,%r\n" % float(patch.strength))
        for i, r in enumerate(patch.rho):
            fh.write("rho,%d,%r\n" % (i, float(r)))
    from .plotting import plot_patch

    plot_patch(patch, out / ("contours_%04d.svg" % idx), title="t = %.4g" % t)


def _run_satellite(config: ScenarioConfig, out: Path) -> dict:
    init = config.initial
    scn = SatelliteScenario(
        center_distance=float(init["distance"]),
        intensity=float(init["intensity"]),
        minimum=float(init["minimum"]),
    )
    m = float(init["minimum"])
    n_levels = int(init["n_levels"])
    levels = np.linspace(0.8, 0.2, n_levels) * m
    r0_scale = float(init["r0_scale"])
    traj = run_satellite(
        scn, levels, lambda w: r0_scale * np.sqrt(w / m), config.horizon,
        n_out=config.outputs, n_pts=int(init.get("n_points", 2048)),
    )
    rows = ["schema=1,t,invariant_residual,winding_level0"]
    for it, t in enumerate(traj.times):
        res = 0.0
        for il in range(len(levels)):
            pts = traj.points[it][il]
            r = np.hypot(pts[:, 0], pts[:, 1])
            th = np.arctan2(pts[:, 1], pts[:, 0])
            c = traj.r0[il] ** 2 - scn.center_distance**2
            res = max(res, float(np.max(np.abs(
                r**2 - 2 * r * scn.center_distance * np.cos(th - scn.intensity * t / r**2) - c
            ))))
        rows.append("%r,%r,%r" % (float(t), res, float(traj.winding_numbers(it)[0])))
        with open(out / ("state_%04d.csv" % it), "w") as fh:
            fh.write("format,contourdyn-satellite,1\nt,%r\n" % float(t))
            for il, w in enumerate(levels):
                for p in traj.points[it][il]:
                    fh.write("point,%d,%r,%r\n" % (il, float(p[0]), float(p[1])))
        from .plotting import plot_point_sets

        plot_point_sets(
            [traj.points[it][il] for il in range(len(levels))],
            ["w=%.3g" % w for w in levels],
            out / ("contours_%04d.svg" % it),
            title="t = %.4g" % t,
        )
    _write_invariants(out / "invariants.csv", rows[0], rows[1:])
    omega0 = scn.intensity / scn.center_distance**2
    return {
        "t_end": float(traj.times[-1]),
        "invariant_residual_max": traj.invariant_residual(),
        "winding_final": [float(x) for x in traj.winding_numbers(len(traj.times) - 1)],
        "background_angular_rate": omega0,
    }


def _run_perturbation(config: ScenarioConfig, out: Path) -> dict:
    init = config.initial
    pst = make_perturbation_state(
        float(init["eps"]), float(init["strength"]),
        ellipse_radius(float(init["a"]), float(init["b"])),
        n_phi=config.n_phi, n_w=config.n_w,
    )
    snaps = perturbation_solve(pst, config.horizon, config.dt, n_out=config.outputs)
    rows = ["schema=1,t,central_symmetry_gap,rho0_area"]
    dphi = TWO_PI / config.n_phi
    from .plotting import plot_point_sets

    for idx, st in enumerate(snaps):
        rq = st.rho_sq()
        gap = float(np.max(np.abs(rq - np.roll(rq, config.n_phi // 2, axis=0))) / rq.max())
        area0 = 0.5 * dphi * float(np.sum(st.rho0_sq))
        rows.append("%r,%r,%r" % (st.t, gap, area0))
        with open(out / ("state_%04d.csv" % idx), "w") as fh:
            fh.write("format,contourdyn-perturbation,1\nt,%r\n" % st.t)
            for i in range(config.n_phi):
                for j in range(config.n_w):
                    fh.write("rho_sq,%d,%d,%r\n" % (i, j, float(rq[i, j])))
        phi = phi_grid(config.n_phi)
        sel = [0, config.n_w // 2, config.n_w - 1]
        curves = []
        for j in sel:
            rho = np.sqrt(np.maximum(rq[:, j], 0.0))
            pts = np.stack([rho * np.cos(phi), rho * np.sin(phi)], axis=-1)
            curves.append(np.vstack([pts, pts[:1]]))
        plot_point_sets(
            curves, ["w=%.3g" % st.levels[j] for j in sel],
            out / ("contours_%04d.svg" % idx), title="t = %.4g" % st.t,
        )
    _write_invariants(out / "invariants.csv", rows[0], rows[1:])
    end = snaps[-1]
    return {
        "t_end": end.t,
        "central_symmetry_gap": float(
            np.max(np.abs(end.rho_sq() - np.roll(end.rho_sq(), config.n_phi // 2, axis=0)))
            / end.rho_sq().max()
        ),
        "eps": end.eps,
    }


def _spectral_initial(config: ScenarioConfig):
    init = config.initial
    fam = init["family"]
    if fam == "kirchhoff-smoothed":
        a, b, strength = float(init["a"]), float(init["b"]), float(init["strength"])
        box = config.box_size or 20.0 * a
        patch = kirchhoff_state(a, b, strength, 0.0, n_phi=256)
        width = float(init.get("edge_width", 3.0 * box / config.n_grid))
        sampler = smoothed_patch_sampler(patch, width)
        return grid_from_sampler(sampler, box, config.n_grid, check_decay=False)
    system = _build_system(config)
    scale = max(
        float(np.sqrt(2.0 * r.field.zeta.max())) + float(np.hypot(*r.center))
        for r in system.regions
    )
    box = config.box_size or 20.0 * scale / 2.7
    return grid_from_system(system, box, config.n_grid)


def _run_spectral(config: ScenarioConfig, out: Path) -> dict:
    from .invariants import count_level_components, locate_critical_points

    grid = _spectral_initial(config)
    state = SpectralState(grid)
    n_steps = int(round(config.horizon / config.dt))
    out_every = max(1, n_steps // (config.outputs - 1))
    topo = np.asarray(config.topo_levels, dtype=float)
    rows = ["schema=1,t,energy,enstrophy,casimir3,peak_max,peak_min,n_crit"
            + "".join(",n_w=%r" % w for w in topo)]

    def sample(st):
        cells = [
            repr(float(st.t)), repr(st.energy()), repr(st.enstrophy()), repr(st.casimir_cubed()),
            repr(float(st.grid.omega.max())), repr(float(st.grid.omega.min())),
        ]
        crit = locate_critical_points(st.grid)
        cells.append(str(len([p for p in crit if p["type"] in ("max", "min", "saddle")])))
        for w in topo:
            cells.append(str(count_level_components(st.grid, float(w))))
        return ",".join(cells)

    rows.append(sample(state))
    e0, z0 = state.energy(), state.enstrophy()
    _save_grid(out / "state_0000.csv", state.grid)
    for i in range(n_steps):
        state = spectral_step_cached(state, config.dt)
        if (i + 1) % out_every == 0 or i == n_steps - 1:
            rows.append(sample(state))
    _write_invariants(out / "invariants.csv", rows[0], rows[1:])
    _save_grid(out / ("state_%04d.csv" % ((n_steps + out_every - 1) // out_every)), state.grid)
    _plot_grid_contours(out / "contours_final.svg", state, topo)
    return {
        "t_end": state.t,
        "energy_drift_rel": abs(state.energy() - e0) / abs(e0),
        "enstrophy_drift_rel": abs(state.enstrophy() - z0) / abs(z0),
    }


def _plot_grid_contours(path, state: SpectralState, levels):
    from .plotting import plot_point_sets

    om = state.grid.omega
    if len(levels) == 0:
        levels = [0.5 * float(om.max())]
        if om.min() < -1e-6 * om.max():
            levels.append(0.5 * float(om.min()))
    curves, labels = [], []
    for w in levels:
        pts = marching_squares(state.grid, float(w))
        if len(pts):
            order = np.argsort(np.arctan2(pts[:, 1] - pts[:, 1].mean(), pts[:, 0] - pts[:, 0].mean()))
            curves.append(pts[order])
            labels.append("w=%.3g" % w)
    if curves:
        plot_point_sets(curves, labels, path, title="t = %.4g" % state.t)


def spectral_step_cached(state, dt):
    from .oracles import spectral_euler_step

    return spectral_euler_step(state, dt)


def _save_grid(path, grid: GriddedVorticity):
    with open(path, "w") as fh:
        fh.write("format,contourdyn-grid,1\n")
        fh.write("box_size,%r\n" % float(grid.box_size))
        fh.write("n,%d\n" % grid.n)
        om = grid.omega
        for i in range(grid.n):
            row = ";".join(repr(float(v)) for v in om[i])
            fh.write("omega,%d,%s\n" % (i, row))


def load_grid(path) -> GriddedVorticity:
    box = None
    n = None
    om = None
    with open(path) as fh:
        for line in fh:
            parts = line.rstrip("\n").split(",")
            if parts[0] == "box_size":
                box = float(parts[1])
            elif parts[0] == "n":
                n = int(parts[1])
                om = np.empty((n, n))
            elif parts[0] == "omega":
                om[int(parts[1])] = [float(v) for v in parts[2].split(";")]
    return GriddedVorticity(box, om, check_decay=False)


def _run_cross_validate(config: ScenarioConfig, out: Path) -> dict:
    """Contour-field monopole evolution against the spectral reference."""
    system = _build_system(config)
    reg = system.regions[0]
    scale = float(np.sqrt(2.0 * reg.field.zeta.max()))
    box = config.box_size or 20.0 * scale / 2.7
    grid = grid_from_system(system, box, config.n_grid)
    spectral = SpectralState(grid)
    state = SimState(0.0, system)
    n_steps = int(round(config.horizon / config.dt))
    for _ in range(n_steps):
        state = step_system(state, config.dt)
    dt_spec = _spectral_dt(spectral, config.dt)
    spectral = run_spectral(spectral, config.horizon, dt_spec)

    peak = reg.peak
    levels = config.probe_levels or tuple(peak * np.linspace(0.2, 0.8, 5))
    cell = spectral.grid.cell
    rows = ["schema=1,level,hausdorff,hausdorff_cells"]
    worst = 0.0
    poly_rows = ["schema=1,source,level,x,y"]
    for w in levels:
        a = region_contour_points(state.system.regions[0], float(w), n_pts=720)
        b = marching_squares(spectral.grid, float(w))
        h = hausdorff_distance(a, b)
        worst = max(worst, h / cell)
        rows.append("%r,%r,%r" % (float(w), h, h / cell))
        for p in a:
            poly_rows.append("contour,%r,%r,%r" % (float(w), float(p[0]), float(p[1])))
        for p in b:
            poly_rows.append("grid,%r,%r,%r" % (float(w), float(p[0]), float(p[1])))
    _write_invariants(out / "invariants.csv", rows[0], rows[1:])
    _write_invariants(out / "contour_polylines.csv", poly_rows[0], poly_rows[1:])
    _save_grid(out / "state_spectral.csv", spectral.grid)
    for k, r in enumerate(state.system.regions):
        save_region(out / ("state_contour_r%d.csv" % k), r)
    from .plotting import plot_point_sets

    curves, labels = [], []
    for w in levels:
        curves.append(region_contour_points(state.system.regions[0], float(w), n_pts=256))
        labels.append("contour w=%.3g" % w)
    plot_point_sets(curves, labels, out / "contours_0000.svg", title="t = %.4g" % state.t)
    return {
        "t_end": state.t,
        "hausdorff_cells_max": worst,
        "grid_cell": cell,
        "levels": [float(w) for w in levels],
    }


def _spectral_dt(state: SpectralState, dt_hint: float) -> float:
    u, v = state.velocity()
    umax = float(np.max(np.hypot(u, v)))
    if umax == 0:
        return dt_hint
    dt_cfl = 0.4 * state.grid.cell / umax
    n = max(1, int(np.ceil(dt_hint / dt_cfl)))
    return dt_hint / n


_RUNNERS = {
    "monopole": _run_monopole,
    "dipole": _run_dipole,
    "patch": _run_patch,
    "satellite": _run_satellite,
    "perturbation": _run_perturbation,
    "spectral-reference": _run_spectral,
    "cross-validate": _run_cross_validate,
}


def compare_runs(dir_a, dir_b, out_path=None) -> dict:
    """Cross-validation report between two output directories.

    Matches state files by name; contour-field states compare level curves,
    grid states compare extracted contours at shared levels.
    """
    dir_a, dir_b = Path(dir_a), Path(dir_b)
    names = sorted(
        set(p.name for p in dir_a.glob("state_*.csv"))
        & set(p.name for p in dir_b.glob("state_*.csv"))
    )
    if not names:
        raise ConfigError("no matching state files between %s and %s" % (dir_a, dir_b))
    entries = []
    for name in names:
        pa, pb = dir_a / name, dir_b / name
        kind_a, kind_b = _state_kind(pa), _state_kind(pb)
        if "field" in (kind_a, kind_b) and kind_a == kind_b:
            ra, rb = load_region(pa), load_region(pb)
            levels = ra.field.levels[:: max(1, ra.field.n_w // 4)]
            for w in levels:
                h = hausdorff_distance(
                    region_contour_points(ra, float(w)), region_contour_points(rb, float(w))
                )
                entries.append({"state": name, "level": float(w), "hausdorff": h})
    summary = {
        "pairs": len(entries),
        "hausdorff_max": max((e["hausdorff"] for e in entries), default=float("nan")),
        "entries": entries,
    }
    if out_path is not None:
        _write_json(out_path, summary)
    return summary


def _state_kind(path) -> str:
    with open(path) as fh:
        first = fh.readline()
    if "contourdyn-field" in first:
        return "field"
    if "contourdyn-grid" in first:
        return "grid"
    if "contourdyn-patch" in first:
        return "patch"
    return "unknown"
