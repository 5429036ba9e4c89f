"""Acceptance suite: one test per criterion, each printing PASS/FAIL lines.

Run with `pytest tests/test_acceptance.py -v -s`.  Criterion 3 is executed at
its pinned resolution and is the long pole (tens of minutes).
"""

import numpy as np
import pytest

from contourdyn.dynamics import (
    SatelliteScenario,
    SimState,
    make_perturbation_state,
    monopole_rhs_operator_route,
    perturbation_solve,
    run_satellite,
    step_monopole,
    step_patch,
    step_system,
    system_rhs,
)
from contourdyn.geometry import (
    PatchContour,
    PolarContourField,
    VortexRegion,
    VortexSystem,
    area_function,
    ellipse_radius,
    gaussian_region,
    scaled_profile_region,
)
from contourdyn.invariants import count_level_components, first_moment, locate_critical_points
from contourdyn.kernels import hamiltonian
from contourdyn.oracles import (
    SpectralState,
    grid_from_sampler,
    grid_from_system,
    hausdorff_distance,
    kirchhoff_rotation_rate,
    kirchhoff_state,
    marching_squares,
    point_vortex_system,
    region_contour_points,
    run_spectral,
)
from contourdyn.quadrature import TWO_PI, phi_grid


def _clause(name, ok, detail=""):
    print("  [%s] %s %s" % ("PASS" if ok else "FAIL", name, detail))
    return ok


def _orientation(rho_sq):
    return 0.5 * np.angle(np.fft.rfft(rho_sq)[2])


def _run_patch(patch, horizon, dt):
    for _ in range(int(round(horizon / dt))):
        patch = step_patch(patch, dt)
    return patch


def test_criterion_1_kirchhoff_rotation():
    print("\ncriterion 1: Kirchhoff rotation rate and RK4 order")
    a, b, M = 1.5, 1.0, 1.0
    want = kirchhoff_rotation_rate(a, b, M)
    dt, horizon = 1e-3, 1.5
    patch = kirchhoff_state(a, b, M, 0.0, n_phi=128)
    times, angles = [0.0], [_orientation(patch.rho**2)]
    for i in range(int(horizon / dt)):
        patch = step_patch(patch, dt)
        if (i + 1) % 100 == 0:
            times.append((i + 1) * dt)
            angles.append(_orientation(patch.rho**2))
    angles = np.unwrap(np.array(angles) * 2) / 2
    slope = np.polyfit(times, -angles, 1)[0]
    ok1 = _clause(
        "Omega_rot within 1%% (measured %.5f, formula %.5f)" % (slope, want),
        abs(slope - want) < 0.01 * want,
    )
    # Fourth-order convergence of the phase error.  At dt <= 4e-3 the phase
    # error of this smooth problem sits at double-precision accumulation
    # (~1e-14), so the scaling is demonstrated at steps where it is
    # measurable; the pinned dt=1e-3 run above carries the accuracy claim.
    errs = []
    for dt_r in (0.25, 0.125, 0.0625):
        cur = kirchhoff_state(a, b, M, 0.0, n_phi=32)
        cur = _run_patch(cur, 0.5, dt_r)
        ref = kirchhoff_state(a, b, M, 0.5, n_phi=32)
        errs.append(abs(np.angle(np.exp(2j * (_orientation(cur.rho**2) - _orientation(ref.rho**2)))) / 2))
    r1, r2 = errs[0] / errs[1], errs[1] / errs[2]
    ok2 = _clause("O(dt^4) phase convergence (ratios %.1f, %.1f)" % (r1, r2),
                  r1 > 8 and r2 > 8)
    assert ok1 and ok2


def test_criterion_2_steady_states():
    print("\ncriterion 2: steady states")
    reg = gaussian_region(1.0, 1.0, n_phi=48, n_w=24)
    state = SimState(0.0, VortexSystem((reg,)))
    z0 = reg.field.zeta.copy()
    dt = 2.5e-3
    for _ in range(int(1.0 / dt)):
        state = step_monopole(state, dt)
    drift = np.max(np.abs(state.system.regions[0].field.zeta - z0)) / z0.max()
    ok1 = _clause("Gaussian monopole zeta drift < 1e-7 over T=1 (%.2e)" % drift, drift < 1e-7)

    patch = PatchContour(np.zeros(2), 1.0, np.full(64, 1.0))
    out = _run_patch(patch, 1.0, 1e-2)
    pdrift = np.max(np.abs(out.rho - 1.0))
    ok2 = _clause("circular patch drift < 1e-10 over T=1 (%.2e)" % pdrift, pdrift < 1e-10)
    assert ok1 and ok2


def test_criterion_3_conservation_suite():
    print("\ncriterion 3: conservation suite (pinned N_phi=128, N_w=48, eps=0.1)")
    probes_idx = np.linspace(3, 44, 8).astype(int)

    def drifts(dt, horizon=0.5):
        reg = scaled_profile_region(1.0, ellipse_radius(1.5, 1.0), 0.1, n_phi=128, n_w=48)
        sys0 = VortexSystem((reg,))
        probes = reg.field.levels[probes_idx]
        h0 = hamiltonian(sys0)
        c0 = first_moment(sys0)
        a0 = area_function(reg.field, probes)
        gamma_scale = np.pi  # ~ circulation of the family, for |c| normalization
        state = SimState(0.0, sys0)
        for _ in range(int(round(horizon / dt))):
            state = step_monopole(state, dt)
        sys_end = state.system
        dh = abs(hamiltonian(sys_end) - h0) / abs(h0)
        dc = abs(first_moment(sys_end) - c0) / gamma_scale
        da = np.max(np.abs(area_function(sys_end.regions[0].field, probes) - a0) / a0)
        return dh, dc, da

    dh1, dc1, da1 = drifts(1e-3)
    ok_h = _clause("H drift < 1e-6 (%.3e)" % dh1, dh1 < 1e-6)
    ok_c = _clause("first-moment drift < 1e-6 (%.3e)" % dc1, dc1 < 1e-6)
    ok_a = _clause("areas at 8 probe levels drift < 1e-6 (%.3e)" % da1, da1 < 1e-6)

    dh2, dc2, da2 = drifts(2e-3)
    dh4, dc4, da4 = drifts(4e-3)
    print("  refinement: H %.3e / %.3e / %.3e ; c %.2e / %.2e / %.2e ; A %.2e / %.2e / %.2e"
          % (dh4, dh2, dh1, dc4, dc2, dc1, da4, da2, da1))
    ok_ref = _clause(
        "drifts do not grow under dt refinement",
        dh1 <= dh2 * 1.15 + 1e-14 and dh2 <= dh4 * 1.15 + 1e-14
        and da1 <= da2 * 1.15 + 1e-13 and dc1 <= dc2 * 1.15 + 1e-13,
    )
    assert ok_h and ok_c and ok_a and ok_ref, (
        "conservation clause failed; see notes: the eps=0.1 member has a "
        "degenerate peak (outside the nondegenerate-extremum class), and its "
        "level quadrature is not converged at the pinned N_w"
    )


def test_criterion_4_monopole_symmetry():
    print("\ncriterion 4: centrally symmetric monopole")
    reg = scaled_profile_region(1.0, ellipse_radius(1.25, 0.9), 0.35, n_phi=64, n_w=24)
    state = SimState(0.0, VortexSystem((reg,)))
    dt = 5e-3
    for _ in range(int(1.0 / dt)):
        state = step_monopole(state, dt)
    out = state.system.regions[0]
    z = out.field.zeta
    rho = np.sqrt(2 * z)
    sym_gap = np.max(np.abs(rho - np.roll(rho, 32, axis=0))) / rho.max()
    disp = float(np.hypot(*out.center))
    ok1 = _clause("rho(phi+pi)=rho(phi) to 1e-8 (%.2e)" % sym_gap, sym_gap < 1e-8)
    ok2 = _clause("center displacement < 1e-8 over T=1 (%.2e)" % disp, disp < 1e-8)
    assert ok1 and ok2


def test_criterion_5_satellite_exactness():
    print("\ncriterion 5: satellite exactness and spiral limit")
    scn = SatelliteScenario(center_distance=1.0, intensity=0.5, minimum=-0.05)
    omega0 = scn.intensity / scn.center_distance**2
    levels = np.linspace(-0.04, -0.008, 5)
    r0_of_w = lambda w: 0.22 * np.sqrt(w / -0.05)
    traj = run_satellite(scn, levels, r0_of_w, 10.0 / omega0, n_out=11, n_pts=4096)
    res = traj.invariant_residual()
    ok1 = _clause("implicit-relation residual < 1e-8 (%.2e)" % res, res < 1e-8)

    long_traj = run_satellite(scn, levels[:1], r0_of_w, 40.0 / omega0, n_out=5, n_pts=8192)
    hist, edges = long_traj.radial_histogram(-1, 0, bins=48)
    centers = 0.5 * (edges[:-1] + edges[1:])
    mode = centers[np.argmax(hist)]
    r0 = long_traj.r0[0]
    ok2 = _clause(
        "radial histogram concentrates near R - r0 (mode %.3f vs %.3f)"
        % (mode, scn.center_distance - r0),
        abs(mode - (scn.center_distance - r0)) < 0.5 * r0,
    )
    n3 = long_traj.winding_numbers(3)[0]
    n4 = long_traj.winding_numbers(4)[0]
    c3 = n3 / (omega0 * long_traj.times[3])
    c4 = n4 / (omega0 * long_traj.times[4])
    ok3 = _clause("winding count ~ c(w) omega0 t within 20%% (c: %.3f vs %.3f)" % (c3, c4),
                  abs(c3 - c4) < 0.2 * abs(c4))
    assert ok1 and ok2 and ok3


def test_criterion_6_dipole_properties():
    print("\ncriterion 6: pair properties")
    d, core = 2.0, 0.25
    r1 = gaussian_region(1.0, core, center=(-d / 2, 0), n_phi=32, n_w=16)
    r2 = gaussian_region(1.0, core, center=(d / 2, 0), n_phi=32, n_w=16)
    state = SimState(0.0, VortexSystem((r1, r2)))
    dt = 0.01
    for _ in range(int(1.0 / dt)):
        state = step_system(state, dt)
    csum = state.system.regions[0].center + state.system.regions[1].center
    ok1 = _clause("identical-shape pair keeps |z1+z2| < 1e-8 over T=1 (%.2e)" % np.hypot(*csum),
                  np.hypot(*csum) < 1e-8)

    d2, core2 = 2.0, 0.1  # core/separation = 0.05
    gam = np.pi * core2**2
    p1 = gaussian_region(1.0, core2, center=(-d2 / 2, 0), n_phi=32, n_w=24)
    p2 = gaussian_region(1.0, core2, center=(d2 / 2, 0), n_phi=32, n_w=24)
    state = SimState(0.0, VortexSystem((p1, p2)))
    horizon, dt2 = 10.0, 0.05
    for _ in range(int(horizon / dt2)):
        state = step_system(state, dt2)
    angle = np.arctan2(state.system.regions[1].center[1], state.system.regions[1].center[0])
    pv = point_vortex_system([gam, gam], [[-d2 / 2, 0], [d2 / 2, 0]], horizon, dt=0.01)
    pv_angle = np.arctan2(pv[1][1], pv[1][0])
    ok2 = _clause(
        "small-core pair rotation matches point vortices within 2%% "
        "(%.5f vs %.5f rad)" % (angle, pv_angle),
        abs(angle - pv_angle) < 0.02 * abs(pv_angle),
    )
    assert ok1 and ok2


def test_criterion_7_perturbation_pipeline():
    print("\ncriterion 7: perturbation pipeline")
    eps, M = 0.05, 1.0
    radius = ellipse_radius(1.5, 1.0)
    pst = make_perturbation_state(eps, M, radius, n_phi=128, n_w=24)
    rng = np.random.default_rng(11)
    phi_s = TWO_PI * rng.random(64)
    r_s = 0.3 + 1.2 * rng.random(64)
    got = pst.omega(phi_s, r_s)
    want = M * np.exp(-((r_s / radius(phi_s)) ** (1.0 / eps)))
    t0_err = float(np.max(np.abs(got - want)))
    ok1 = _clause("t=0 reconstruction matches the scaled family to 1e-4 (%.2e)" % t0_err,
                  t0_err < 1e-4)

    snaps = perturbation_solve(pst, 1.0, 5e-3, n_out=3)
    end = snaps[-1]
    rq = end.rho_sq()
    sym = float(np.max(np.abs(rq - np.roll(rq, 64, axis=0))) / rq.max())
    ok2 = _clause("run completes T=1 with central symmetry to 1e-8 (%.2e)" % sym,
                  end.t >= 1.0 - 1e-9 and sym < 1e-8)

    patch = kirchhoff_state(1.5, 1.0, M, 0.0, n_phi=128)
    patch = _run_patch(patch, 0.3, 5e-3)
    gaps = []
    for e in (0.01, 0.02, 0.05):
        p = make_perturbation_state(e, M, radius, n_phi=128, n_w=16)
        endp = perturbation_solve(p, 0.3, 5e-3, n_out=2)[-1]
        gaps.append(float(np.max(np.abs(endp.rho_sq() - (patch.rho**2)[:, None]))))
    lin1, lin2 = gaps[1] / gaps[0], gaps[2] / gaps[1]
    ok3 = _clause(
        "first-order solution -> patch solution linearly in eps (ratios %.2f, %.2f)"
        % (lin1, lin2),
        1.5 < lin1 < 2.5 and 2.0 < lin2 < 3.1,
    )
    assert ok1 and ok2 and ok3


def test_criterion_8_cross_validation():
    print("\ncriterion 8: contour evolution vs spectral reference")
    strength, a, b = 1.0, 1.1, 1.0
    reg = scaled_profile_region(strength, ellipse_radius(a, b), 0.5, n_phi=64, n_w=32)
    sys0 = VortexSystem((reg,))
    box, n = 20.0, 512
    grid = grid_from_system(sys0, box, n)
    spec_state = SpectralState(grid)
    state = SimState(0.0, sys0)
    horizon, dt = 0.1, 2e-3
    for _ in range(int(horizon / dt)):
        state = step_system(state, dt)
    spec_state = run_spectral(spec_state, horizon, 0.01)
    cell = spec_state.grid.cell
    worst = 0.0
    for w in strength * np.linspace(0.2, 0.8, 5):
        apts = region_contour_points(state.system.regions[0], float(w), n_pts=720)
        bpts = marching_squares(spec_state.grid, float(w))
        h = hausdorff_distance(apts, bpts)
        worst = max(worst, h / cell)
    ok = _clause("Hausdorff at 5 levels < 2 grid cells (worst %.2f cells)" % worst, worst < 2.0)
    assert ok


def test_criterion_9_topology_invariants():
    print("\ncriterion 9: topology invariants along a spectral dipole run")
    from contourdyn.geometry import gaussian_sampler

    def sampler(pts):
        return gaussian_sampler(1.0, 1.0, (0.0, 1.5))(pts) + gaussian_sampler(
            -0.8, 1.0, (0.0, -1.5)
        )(pts)

    grid = grid_from_sampler(sampler, 24.0, 384, check_decay=False)
    state = SpectralState(grid)
    probe = (0.2, 0.5, 0.8, -0.2, -0.5)

    def census(st):
        pts = locate_critical_points(st.grid, amplitude_floor=1e-4)
        kinds = sorted(p["type"] for p in pts)
        # sub-cell refined extremum values (the raw grid max wobbles at
        # O(h^2) as the vortices translate across cells)
        vmax = max((p["value"] for p in pts if p["type"] == "max"), default=np.nan)
        vmin = min((p["value"] for p in pts if p["type"] == "min"), default=np.nan)
        return kinds, vmax, vmin

    counts0 = [count_level_components(state.grid, w) for w in probe]
    kinds0, vmax0, vmin0 = census(state)
    ok_counts, ok_crit = True, True
    for _ in range(8):
        state = run_spectral(state, 0.5, 0.01)
        counts = [count_level_components(state.grid, w) for w in probe]
        kinds, _, _ = census(state)
        ok_counts &= counts == counts0
        ok_crit &= kinds == kinds0
    ok1 = _clause("n(w) constant at 5 probe levels over T=4", ok_counts)
    ok2 = _clause("critical-point census constant (%s)" % kinds0, ok_crit)
    _, vmax1, vmin1 = census(state)
    dmax = abs(vmax1 - vmax0) / abs(vmax0)
    dmin = abs(vmin1 - vmin0) / abs(vmin0)
    ok3 = _clause("peak values drift < 1e-4 (%.2e, %.2e)" % (dmax, dmin),
                  dmax < 1e-4 and dmin < 1e-4)
    assert ok1 and ok2 and ok3


def test_criterion_10_two_route_consistency():
    print("\ncriterion 10: operator route vs stream-function route")
    rng = np.random.default_rng(2024)
    worst = 0.0
    for trial in range(10):
        amp = 0.04 * rng.random(3)
        phase = TWO_PI * rng.random(3)
        core = 0.8 + 0.4 * rng.random()

        def radius(phi, amp=amp, phase=phase, core=core):
            out = np.full_like(np.asarray(phi, float), core)
            for m, (a_m, p_m) in enumerate(zip(amp, phase), start=2):
                out = out * (1.0 + a_m * np.cos(m * (phi - p_m)))
            return out

        reg = scaled_profile_region(1.0, radius, 0.5, n_phi=64, n_w=32)
        route_a = monopole_rhs_operator_route(reg)
        route_b = system_rhs(VortexSystem((reg,)))[0][0]
        rel = np.max(np.abs(route_a - route_b)) / np.max(np.abs(route_b))
        worst = max(worst, rel)
    ok = _clause("10 random smooth fields agree to < 1e-5 relative (worst %.2e)" % worst,
                 worst < 1e-5)
    assert ok
