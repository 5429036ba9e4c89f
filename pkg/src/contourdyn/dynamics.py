"""Time integration of the contour-field systems and the reduced models.

The shape equations integrate, for every region k and level node (phi, w),

    d zeta_k/dt = -d/dphi [ psi(X_k(phi,w)) - rho_k(phi,w) (grad psi(z_k) . e(phi)) ],
    d z_k/dt    = (-psi_y, psi_x)(z_k),

with zeta = rho^2/2 and psi the total stream function.  This is the level-curve
advection law written in pole-centered coordinates; the peak-motion term keeps
a rigidly translating vortex exactly steady in its own frame.  The closed
operator form of the monopole equation is equivalent via
    d zeta/dt = (1/4) d/dphi N(rho^2) + 2 d/dphi [ rho (grad psi_self(z) . e) ],
which the two-route tests exercise.  All steppers are fixed-step RK4.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np
from numpy.typing import NDArray

from .geometry import (
    PatchContour,
    PolarContourField,
    VortexRegion,
    VortexSystem,
)
from .kernels import (
    DEFAULT_SPEC,
    QuadratureSpec,
    grad_stream_at_centers,
    operator_n,
    patch_stream_on_contour,
    apply_kernel_k,
    stream_region_nodes,
)
from .quadrature import TWO_PI, TrigInterpolant, fourier_diff, phi_grid

FloatArray = NDArray[np.float64]


class MultivaluedContourError(RuntimeError):
    """The contour field left the single-valued regime (zeta <= 0 or nesting lost)."""


class ThetaBranchLossError(RuntimeError):
    """Continuity tracking of the angular alignment solution failed."""


class NoConvergenceError(RuntimeError):
    """The alignment solver did not converge."""


class BranchJumpError(RuntimeError):
    """The alignment solution jumped branches between neighbouring angles."""


class AsymmetricBaseError(ValueError):
    """The perturbation pipeline requires a centrally symmetric base ellipse."""


@dataclass(frozen=True)
class SimState:
    """Snapshot of an evolving system."""

    t: float
    system: VortexSystem


def _unchecked_field(template: PolarContourField, zeta: FloatArray) -> PolarContourField:
    f = object.__new__(PolarContourField)
    object.__setattr__(f, "phi_nodes", template.phi_nodes)
    object.__setattr__(f, "levels", template.levels)
    object.__setattr__(f, "level_weights", template.level_weights)
    object.__setattr__(f, "zeta", zeta)
    return f


def _unchecked_region(template: VortexRegion, center, field: PolarContourField) -> VortexRegion:
    r = object.__new__(VortexRegion)
    object.__setattr__(r, "center", center)
    object.__setattr__(r, "peak", template.peak)
    object.__setattr__(r, "field", field)
    return r


def _assemble(template: VortexSystem, zetas, centers) -> VortexSystem:
    regions = tuple(
        _unchecked_region(reg, c, _unchecked_field(reg.field, z))
        for reg, z, c in zip(template.regions, zetas, centers)
    )
    s = object.__new__(VortexSystem)
    object.__setattr__(s, "regions", regions)
    return s


def system_rhs(system: VortexSystem, spec: QuadratureSpec = DEFAULT_SPEC):
    """Time derivatives (d zeta_k, d z_k) of the full contour system."""
    psis = stream_region_nodes(system, spec)
    grads = grad_stream_at_centers(system)
    dzetas = []
    dcenters = np.empty((system.n, 2))
    for k, (reg, psi) in enumerate(zip(system.regions, psis)):
        f = reg.field
        with np.errstate(invalid="ignore"):  # transient RK stages may dip <= 0
            rho = np.sqrt(2.0 * f.zeta)
        gx, gy = grads[k]
        ray_dot = gx * np.cos(f.phi_nodes) + gy * np.sin(f.phi_nodes)  # (n_phi,)
        operand = psi - rho * ray_dot[:, None]
        dzetas.append(-fourier_diff(operand, axis=0))
        dcenters[k] = (-gy, gx)
    return dzetas, dcenters


def _check_field_health(system: VortexSystem, zeta_floor: float):
    for reg in system.regions:
        z = reg.field.zeta
        if not np.all(np.isfinite(z)):
            raise MultivaluedContourError("contour field lost finiteness")
        if np.any(z <= zeta_floor * np.max(z)):
            raise MultivaluedContourError(
                "zeta fell below the positivity floor (contour collapsing)"
            )
        nest = np.diff(z, axis=1)
        if np.any(nest > 1e-10 * np.max(z)):
            raise MultivaluedContourError(
                "level nesting violated (multivalued contour detected)"
            )


def step_system(
    state: SimState,
    dt: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
    *,
    zeta_floor: float = 1e-8,
) -> SimState:
    """One RK4 step of the coupled shape + center equations."""
    sys0 = state.system
    z0 = [r.field.zeta for r in sys0.regions]
    c0 = np.array([r.center for r in sys0.regions])

    def rhs(zetas, centers):
        return system_rhs(_assemble(sys0, zetas, centers), spec)

    k1z, k1c = rhs(z0, c0)
    k2z, k2c = rhs([z + 0.5 * dt * dz for z, dz in zip(z0, k1z)], c0 + 0.5 * dt * k1c)
    k3z, k3c = rhs([z + 0.5 * dt * dz for z, dz in zip(z0, k2z)], c0 + 0.5 * dt * k2c)
    k4z, k4c = rhs([z + dt * dz for z, dz in zip(z0, k3z)], c0 + dt * k3c)
    z1 = [
        z + dt / 6.0 * (a + 2 * b + 2 * c + d)
        for z, a, b, c, d in zip(z0, k1z, k2z, k3z, k4z)
    ]
    c1 = c0 + dt / 6.0 * (k1c + 2 * k2c + 2 * k3c + k4c)
    new_sys = _assemble(sys0, z1, c1)
    _check_field_health(new_sys, zeta_floor)
    return SimState(state.t + dt, new_sys)


def step_monopole(state: SimState, dt: float, spec: QuadratureSpec = DEFAULT_SPEC) -> SimState:
    """RK4 step of a single-region system (closed monopole equation)."""
    if state.system.n != 1:
        raise ValueError("step_monopole expects a single-region system")
    return step_system(state, dt, spec)


def step_dipole(state: SimState, dt: float, spec: QuadratureSpec = DEFAULT_SPEC) -> SimState:
    """RK4 step of a two-region system (opposite- or same-sign pair)."""
    if state.system.n != 2:
        raise ValueError("step_dipole expects a two-region system")
    return step_system(state, dt, spec)


def monopole_rhs_operator_route(
    region: VortexRegion, spec: QuadratureSpec = DEFAULT_SPEC
) -> FloatArray:
    """d zeta/dt of a lone monopole via the closed operator form.

    (1/4) d/dphi N(rho^2) + 2 d/dphi [rho (grad psi_self(z) . e)]; agrees with
    the stream-function route to quadrature tolerance (two-route tests).
    """
    n_table = operator_n(region, spec)
    sys1 = VortexSystem((region,))
    g = grad_stream_at_centers(sys1)[0]
    f = region.field
    rho = np.sqrt(2.0 * f.zeta)
    ray_dot = g[0] * np.cos(f.phi_nodes) + g[1] * np.sin(f.phi_nodes)
    return 0.25 * fourier_diff(n_table, axis=0) + 2.0 * fourier_diff(
        rho * ray_dot[:, None], axis=0
    )


# ---------------------------------------------------------------------------
# Angular alignment between regions (theta_kj)
# ---------------------------------------------------------------------------


def solve_theta_kj(
    system: VortexSystem,
    k: int,
    j: int,
    phi: float,
    w: float,
    *,
    theta0: float | None = None,
    tol: float = 1e-12,
    max_iter: int = 100,
) -> float:
    """Angular alignment theta = theta_kj(phi) between regions k and j.

    Solves (dy + rho_j(theta, w) sin theta)/(dx + rho_j cos theta) = tan phi
    with (dx, dy) = z_j - z_k: the point of region j's level-w contour that
    lies on the ray from z_k in direction phi.  Solved by safeguarded Newton
    from the geometric initializer (the direction of region k's contour point
    seen from z_j).  Of the two ray crossings the one whose j-frame radius
    vector points along +e(phi) is returned, so theta -> phi as rho_j -> 0.
    Rays that miss region j's contour raise NoConvergenceError (the alignment
    is only defined inside the cone subtended by the contour).
    """
    regk, regj = system.regions[k], system.regions[j]
    dx, dy = regj.center - regk.center
    fj = regj.field
    interp = TrigInterpolant(fj.zeta)
    x_lev = np.log(np.abs(fj.levels))
    from .quadrature import hermite_eval, pchip_slopes

    def rho_j(theta):
        prof = interp(np.atleast_1d(theta))
        sl = pchip_slopes(x_lev, prof)
        zv = hermite_eval(x_lev, prof, sl, np.full(prof.shape[0], np.log(abs(w))))
        return np.sqrt(np.maximum(2.0 * zv, 0.0))

    def rho_j_dtheta(theta):
        dprof = interp.derivative(np.atleast_1d(theta))
        prof = interp(np.atleast_1d(theta))
        sl = pchip_slopes(x_lev, prof)
        zv = hermite_eval(x_lev, prof, sl, np.full(prof.shape[0], np.log(abs(w))))
        # d rho/d theta = (d zeta/d theta)/rho with zeta interpolated linearly
        # across the angular modes; reuse the level interpolation of dzeta
        sld = pchip_slopes(x_lev, dprof)
        dzv = hermite_eval(x_lev, dprof, sld, np.full(prof.shape[0], np.log(abs(w))))
        return dzv / np.sqrt(np.maximum(2.0 * zv, 1e-300))

    sp, cp = np.sin(phi), np.cos(phi)

    def residual(theta):
        r = rho_j(theta)[0]
        return sp * (dx + r * np.cos(theta)) - cp * (dy + r * np.sin(theta))

    def residual_prime(theta):
        r = rho_j(theta)[0]
        rd = rho_j_dtheta(theta)[0]
        return sp * (rd * np.cos(theta) - r * np.sin(theta)) - cp * (
            rd * np.sin(theta) + r * np.cos(theta)
        )

    if theta0 is None:
        fk = regk.field
        interp_k = TrigInterpolant(fk.zeta)
        slk = pchip_slopes(np.log(np.abs(fk.levels)), interp_k(np.atleast_1d(phi)))
        zk = hermite_eval(
            np.log(np.abs(fk.levels)),
            interp_k(np.atleast_1d(phi)),
            slk,
            np.array([np.log(abs(w))]),
        )[0]
        rho_k = np.sqrt(max(2.0 * zk, 0.0))
        px = regk.center[0] + rho_k * cp - regj.center[0]
        py = regk.center[1] + rho_k * sp - regj.center[1]
        theta0 = float(np.arctan2(py, px))

    # locate every admissible root by a dense scan, keep the far-side branch
    # (radius along +e(phi)), then polish the one nearest the initializer
    ts = phi + np.linspace(-np.pi, np.pi, 256, endpoint=False)
    gs = np.array([residual(t) for t in ts])
    signs = np.sign(gs)
    roots = list(ts[gs == 0.0])
    flips = np.nonzero(signs * np.roll(signs, -1) < 0)[0]
    for i in flips:
        a, b = ts[i], ts[i] + (ts[1] - ts[0])
        fa = residual(a)
        for _ in range(60):
            m = 0.5 * (a + b)
            fm = residual(m)
            if fa * fm <= 0:
                b = m
            else:
                a, fa = m, fm
        roots.append(0.5 * (a + b))
    admissible = []
    for root in roots:
        r = rho_j(root)[0]
        along_ray = (dx + r * np.cos(root)) * cp + (dy + r * np.sin(root)) * sp
        if np.cos(root - phi) > 0 and along_ray > 0:
            admissible.append(root)
    roots = admissible
    if not roots:
        raise NoConvergenceError(
            "the ray at phi=%.4f does not meet region %d's level contour" % (phi, j)
        )
    theta = min(roots, key=lambda r: abs(np.angle(np.exp(1j * (r - theta0)))))
    # Newton polish to the requested tolerance
    for _ in range(max_iter):
        g = residual(theta)
        if abs(g) < tol:
            return float(np.angle(np.exp(1j * theta)))
        gp = residual_prime(theta)
        if gp == 0:
            break
        theta = float(theta - g / gp)
    raise NoConvergenceError("alignment Newton did not converge in %d iterations" % max_iter)


def solve_theta_branch(
    system: VortexSystem, k: int, j: int, phis: FloatArray, w: float
) -> FloatArray:
    """theta_kj along an array of angles with warm-started continuity tracking."""
    out = np.empty(len(phis))
    prev = None
    for i, phi in enumerate(phis):
        out[i] = solve_theta_kj(system, k, j, float(phi), w, theta0=prev)
        if prev is not None:
            jump = np.angle(np.exp(1j * (out[i] - out[i - 1])))
            if abs(jump) > 0.5 * np.pi:
                raise BranchJumpError(
                    "theta branch jumped by %.3f rad between phi nodes" % jump
                )
        prev = out[i]
    return out


# ---------------------------------------------------------------------------
# Classical patch stepping
# ---------------------------------------------------------------------------


def patch_rhs(patch: PatchContour, spec: QuadratureSpec = DEFAULT_SPEC) -> FloatArray:
    """d(rho^2)/dt = -2 d/dphi psi(phi, rho(phi)).

    The spectral derivative acts on the composed boundary samples, so both the
    explicit angle dependence and the chain-rule term through r = rho(phi) are
    included (dropping the latter is the classical sign-of-error pitfall).
    """
    psi_b = patch_stream_on_contour(patch, spec)
    return -2.0 * fourier_diff(psi_b)


def step_patch(patch: PatchContour, dt: float, spec: QuadratureSpec = DEFAULT_SPEC) -> PatchContour:
    """One RK4 step of the patch boundary equation (pole held fixed)."""
    y0 = patch.rho**2

    def rhs(y):
        if np.any(y <= 0):
            raise MultivaluedContourError("patch rho^2 lost positivity")
        return patch_rhs(PatchContour(patch.pole, patch.strength, np.sqrt(y)), spec)

    k1 = rhs(y0)
    k2 = rhs(y0 + 0.5 * dt * k1)
    k3 = rhs(y0 + 0.5 * dt * k2)
    k4 = rhs(y0 + dt * k3)
    y1 = y0 + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    if np.any(y1 <= 0) or not np.all(np.isfinite(y1)):
        raise MultivaluedContourError("patch rho^2 lost positivity")
    return PatchContour(patch.pole, patch.strength, np.sqrt(y1))


# ---------------------------------------------------------------------------
# Weak satellite around a point vortex: exact characteristics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SatelliteScenario:
    """Weak satellite advected by a point vortex of intensity k at the origin.

    The satellite starts as circles of radius r0(w) per vorticity level,
    centered at distance R on the +x axis (the configuration in which the
    implicit invariant r^2 - 2 r R cos(theta - k t / r^2) = C(w) holds
    verbatim with C(w) = r0(w)^2 - R^2).
    """

    center_distance: float
    intensity: float
    minimum: float
    background_peak: float = np.inf

    def __post_init__(self):
        if self.center_distance <= 0 or self.intensity == 0:
            raise ValueError("center distance and intensity must be nonzero")
        if self.minimum >= 0:
            raise ValueError("the satellite minimum must be negative")
        if abs(self.minimum) > 0.1 * self.background_peak:
            warnings.warn(
                "satellite strength exceeds 10% of the background peak; the "
                "passive-scalar reduction is questionable",
                UserWarning,
            )


@dataclass(frozen=True)
class SatelliteTrajectory:
    times: FloatArray
    levels: FloatArray
    r0: FloatArray  # initial circle radius per level
    points: tuple  # points[time_idx][level_idx] -> (n_pts, 2) array
    scenario: SatelliteScenario

    def invariant_residual(self) -> float:
        """max |r^2 - 2 r R cos(theta - k t / r^2) - C(w)| over the output."""
        scn = self.scenario
        worst = 0.0
        for it, t in enumerate(self.times):
            for il in range(len(self.levels)):
                pts = self.points[it][il]
                r = np.hypot(pts[:, 0], pts[:, 1])
                th = np.arctan2(pts[:, 1], pts[:, 0])
                c = self.r0[il] ** 2 - scn.center_distance**2
                res = (
                    r**2
                    - 2.0 * r * scn.center_distance * np.cos(th - scn.intensity * t / r**2)
                    - c
                )
                worst = max(worst, float(np.max(np.abs(res))))
        return worst

    def winding_numbers(self, time_idx: int) -> FloatArray:
        """Spiral turns per level: swept range of (theta - initial theta)/2pi."""
        out = np.empty(len(self.levels))
        t = self.times[time_idx]
        for il in range(len(self.levels)):
            pts0 = self.points[0][il]
            r = np.hypot(pts0[:, 0], pts0[:, 1])
            sweep = self.scenario.intensity * t / r**2
            out[il] = (np.max(sweep) - np.min(sweep)) / TWO_PI
        return out

    def radial_histogram(self, time_idx: int, level_idx: int, bins: int = 64):
        """Arclength-weighted histogram of r along the evolved contour."""
        pts = self.points[time_idx][level_idx]
        r = np.hypot(pts[:, 0], pts[:, 1])
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        rmid = 0.5 * (r[:-1] + r[1:])
        hist, edges = np.histogram(rmid, bins=bins, weights=seg)
        return hist, edges


def run_satellite(
    scn: SatelliteScenario,
    levels: FloatArray,
    r0_of_w,
    horizon: float,
    n_out: int = 11,
    n_pts: int = 2048,
) -> SatelliteTrajectory:
    """Evolve the satellite's level contours by the exact characteristics
    theta(t) = theta(0) + k t / r^2 with r constant along each characteristic.
    """
    levels = np.asarray(levels, dtype=float)
    r0 = np.asarray(r0_of_w(levels), dtype=float)
    if np.any(r0 <= 0) or np.any(r0 >= scn.center_distance):
        raise ValueError("initial radii must satisfy 0 < r0 < R")
    beta = np.linspace(0.0, TWO_PI, n_pts, endpoint=False)
    times = np.linspace(0.0, horizon, n_out)
    all_points = []
    for t in times:
        per_level = []
        for rr in r0:
            x0 = scn.center_distance + rr * np.cos(beta)
            y0 = rr * np.sin(beta)
            r = np.hypot(x0, y0)
            th0 = np.arctan2(y0, x0)
            th = th0 + scn.intensity * t / r**2
            per_level.append(np.stack([r * np.cos(th), r * np.sin(th)], axis=-1))
        all_points.append(tuple(per_level))
    return SatelliteTrajectory(times, levels, r0, tuple(all_points), scn)


# ---------------------------------------------------------------------------
# Perturbation pipeline around the patch limit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PerturbationState:
    """First-order expansion state around the sharp-patch limit.

    rho^2(t, phi, w) = rho0^2(t, phi) + eps * rho1^2(t, phi, w) with
    rho1^2 = z(t, phi) + (p1(phi, w) - z(0, phi)); p1 is the exact initial
    increment (R^2 e^{2 eps f(w)} - R^2)/eps, which reduces to the first-order
    2 R^2 f(w) as eps -> 0 and makes the t=0 vorticity reconstruction exact.
    """

    eps: float
    strength: float
    base_radius_sq: FloatArray  # R^2(phi)
    levels: FloatArray
    level_weights: FloatArray
    f_of_w: FloatArray  # ln S^-1(w/M) at the level nodes
    p1: FloatArray  # (n_phi, n_w) exact initial increment
    z0: FloatArray  # initial aggregate (n_phi,)
    rho0_sq: FloatArray  # current patch solution (n_phi,)
    z: FloatArray  # current aggregate (n_phi,)
    t: float

    @property
    def fbar(self) -> float:
        return float(self.level_weights @ self.f_of_w / self.strength)

    def rho1_sq(self) -> FloatArray:
        return self.z[:, None] + (self.p1 - self.z0[:, None])

    def rho_sq(self) -> FloatArray:
        return self.rho0_sq[:, None] + self.eps * self.rho1_sq()

    def omega(self, phi, r) -> FloatArray:
        """First-order vorticity at polar points about the patch pole.

        Exact inversion of the expansion ansatz; at t=0 it reproduces the
        scaled family M S([r/R]^{1/eps}) identically.
        """
        phi = np.atleast_1d(np.asarray(phi, dtype=float))
        r = np.atleast_1d(np.asarray(r, dtype=float))
        interp_r0 = TrigInterpolant(self.rho0_sq)
        interp_rb = TrigInterpolant(self.base_radius_sq)
        interp_z = TrigInterpolant(self.z - self.z0)
        rho0_sq = interp_r0(phi)
        base_sq = interp_rb(phi)
        dz = interp_z(phi)
        xval = (r**2 - rho0_sq - self.eps * dz) / base_sq
        arg = 1.0 + xval
        w = np.where(
            arg <= 0.0,
            self.strength,
            self.strength * np.exp(-np.maximum(arg, 1e-300) ** (1.0 / (2.0 * self.eps))),
        )
        return w


def make_perturbation_state(
    eps: float,
    strength: float,
    radius_of_phi,
    n_phi: int = 128,
    n_w: int = 32,
    inv_profile_log=None,
) -> PerturbationState:
    """Initial perturbation state for the scaled family (default S = exp)."""
    if not (0 < eps <= 0.5):
        raise ValueError("eps must lie in (0, 0.5]")
    phi = phi_grid(n_phi)
    r_base = np.asarray(radius_of_phi(phi), dtype=float)
    sym_gap = np.max(np.abs(r_base - np.roll(r_base, n_phi // 2)))
    if sym_gap > 1e-12 * np.max(r_base):
        raise AsymmetricBaseError(
            "base radius is not centrally symmetric; the dropped peak-motion "
            "term would not vanish"
        )
    from .geometry import make_levels

    levels, weights = make_levels(strength, n_w)
    if inv_profile_log is None:
        f = np.log(np.log(strength / levels))
    else:
        f = np.asarray(inv_profile_log(levels / strength), dtype=float)
    p1 = (np.exp(2.0 * eps * f)[None, :] - 1.0) / eps * r_base[:, None] ** 2
    z0 = p1 @ weights / strength
    return PerturbationState(
        eps=eps,
        strength=strength,
        base_radius_sq=r_base**2,
        levels=levels,
        level_weights=weights,
        f_of_w=f,
        p1=p1,
        z0=z0,
        rho0_sq=r_base**2,
        z=z0.copy(),
        t=0.0,
    )


def perturbation_rhs(state: PerturbationState, spec: QuadratureSpec = DEFAULT_SPEC):
    rho0 = np.sqrt(state.rho0_sq)
    patch = PatchContour(np.zeros(2), state.strength, rho0)
    d_rho0_sq = patch_rhs(patch, spec)
    dz = -state.strength * apply_kernel_k(rho0, state.z)
    return d_rho0_sq, dz


def step_perturbation(
    state: PerturbationState, dt: float, spec: QuadratureSpec = DEFAULT_SPEC
) -> PerturbationState:
    """Coupled RK4 step of the zero-order patch and the first-order aggregate."""

    def rhs(r0sq, z):
        tmp = replace(state, rho0_sq=r0sq, z=z)
        return perturbation_rhs(tmp, spec)

    y0, z0 = state.rho0_sq, state.z
    k1y, k1z = rhs(y0, z0)
    k2y, k2z = rhs(y0 + 0.5 * dt * k1y, z0 + 0.5 * dt * k1z)
    k3y, k3z = rhs(y0 + 0.5 * dt * k2y, z0 + 0.5 * dt * k2z)
    k4y, k4z = rhs(y0 + dt * k3y, z0 + dt * k3z)
    y1 = y0 + dt / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)
    z1 = z0 + dt / 6.0 * (k1z + 2 * k2z + 2 * k3z + k4z)
    if np.any(y1 <= 0):
        raise MultivaluedContourError("zero-order patch lost positivity")
    return replace(state, rho0_sq=y1, z=z1, t=state.t + dt)


def perturbation_solve(
    state: PerturbationState,
    horizon: float,
    dt: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
    n_out: int = 6,
) -> list[PerturbationState]:
    """Integrate the perturbation pipeline; returns snapshots incl. t=0."""
    n_steps = int(round(horizon / dt))
    out_every = max(1, n_steps // max(n_out - 1, 1))
    snaps = [state]
    cur = state
    for i in range(n_steps):
        cur = step_perturbation(cur, dt, spec)
        if (i + 1) % out_every == 0 or i == n_steps - 1:
            if cur.t > snaps[-1].t:
                snaps.append(cur)
    return snaps
