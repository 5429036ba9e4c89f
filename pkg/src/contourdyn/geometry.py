"""Contour-field data types and conversions between vorticity samplers and fields.

A vortex region stores the squared polar radius of its level curves,
zeta(phi, w) = rho^2/2, on a uniform angle grid times Gauss-Legendre level
nodes strictly inside (0, peak).  zeta is the well-conditioned variable near a
nondegenerate peak (linear in peak - w, where rho itself has square-root
behaviour).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .quadrature import (
    TrigInterpolant,
    gauss_legendre_levels,
    hermite_invert,
    pchip_slopes,
    phi_grid,
)

FloatArray = NDArray[np.float64]

TWO_PI = 2.0 * np.pi


class NoCrossingError(RuntimeError):
    """A sampling ray never exited the level set within the horizon."""


class OutsideSupportWarning(UserWarning):
    """Reconstruction was asked for points beyond the outermost contour."""


class NonMonotoneRayWarning(UserWarning):
    """Rays crossed a level set more than once; generalized distance used."""


@dataclass(frozen=True)
class PolarContourField:
    """Tensor grid of zeta = rho^2/2 over (phi, w).

    ``levels`` are ordered outermost first (increasing |w| toward the peak)
    and carry their quadrature weights; ``zeta`` has shape (n_phi, n_w).
    """

    phi_nodes: FloatArray
    levels: FloatArray
    level_weights: FloatArray
    zeta: FloatArray

    def __post_init__(self):
        phi = np.asarray(self.phi_nodes, dtype=float)
        lev = np.asarray(self.levels, dtype=float)
        wts = np.asarray(self.level_weights, dtype=float)
        z = np.asarray(self.zeta, dtype=float)
        object.__setattr__(self, "phi_nodes", phi)
        object.__setattr__(self, "levels", lev)
        object.__setattr__(self, "level_weights", wts)
        object.__setattr__(self, "zeta", z)
        n_phi = phi.shape[0]
        if n_phi % 2 != 0 or n_phi < 4:
            raise ValueError("n_phi must be even and >= 4")
        if z.shape != (n_phi, lev.shape[0]):
            raise ValueError("zeta must have shape (n_phi, n_w)")
        if wts.shape != lev.shape:
            raise ValueError("level_weights must match levels")
        if not np.all(np.isfinite(z)) or np.any(z <= 0):
            raise ValueError("zeta must be finite and strictly positive")
        dlev = np.diff(np.abs(lev))
        if lev.shape[0] > 1 and not np.all(dlev > 0):
            raise ValueError("levels must increase in magnitude toward the peak")
        # Nesting: contours closer to the peak never enclose outer ones.
        nest = np.diff(z, axis=1)
        if np.any(nest > 1e-12 * z.max()):
            raise ValueError("zeta must be non-increasing toward the peak (nested contours)")

    @property
    def n_phi(self) -> int:
        return self.phi_nodes.shape[0]

    @property
    def n_w(self) -> int:
        return self.levels.shape[0]

    @property
    def rho(self) -> FloatArray:
        return np.sqrt(2.0 * self.zeta)

    def zeta_level_slopes(self) -> FloatArray:
        """d zeta/d w at the level nodes via the monotone cubic interpolant.

        The interpolant runs in x = ln|w|, where profiles with algebraic or
        exponential decay are polynomial-like; zeta is typically log-singular
        in w itself near w -> 0, which would ruin the outermost slope.
        """
        x = np.log(np.abs(self.levels))
        d = pchip_slopes(x, self.zeta)
        return d / self.levels


@dataclass(frozen=True)
class VortexRegion:
    """One extremum: center, peak vorticity, and its contour field."""

    center: FloatArray
    peak: float
    field: PolarContourField

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        if c.shape != (2,):
            raise ValueError("center must be a point (2,)")
        object.__setattr__(self, "center", c)
        if not np.isfinite(self.peak) or self.peak == 0.0:
            raise ValueError("peak vorticity must be finite and nonzero")
        lev = self.field.levels
        if self.peak > 0:
            ok = np.all((lev > 0) & (lev < self.peak))
        else:
            ok = np.all((lev < 0) & (lev > self.peak))
        if not ok:
            raise ValueError("field levels must lie strictly between 0 and the peak")

    @property
    def sign(self) -> int:
        return 1 if self.peak > 0 else -1


@dataclass(frozen=True)
class VortexSystem:
    """Ordered collection of vortex regions (descending peak vorticity)."""

    regions: tuple[VortexRegion, ...]

    def __post_init__(self):
        regs = tuple(self.regions)
        object.__setattr__(self, "regions", regs)
        if not regs:
            raise ValueError("a vortex system needs at least one region")
        peaks = [r.peak for r in regs]
        if any(p2 > p1 for p1, p2 in zip(peaks, peaks[1:])):
            raise ValueError("regions must be ordered by descending peak vorticity")
        for i, a in enumerate(regs):
            for b in regs[i + 1 :]:
                if np.allclose(a.center, b.center):
                    raise ValueError("distinct regions must have distinct centers")

    @property
    def n(self) -> int:
        return len(self.regions)


@dataclass(frozen=True)
class PatchContour:
    """Closed curve rho(phi) bounding a uniform-vorticity patch."""

    pole: FloatArray
    strength: float
    rho: FloatArray

    def __post_init__(self):
        p = np.asarray(self.pole, dtype=float)
        r = np.asarray(self.rho, dtype=float)
        object.__setattr__(self, "pole", p)
        object.__setattr__(self, "rho", r)
        if p.shape != (2,):
            raise ValueError("pole must be a point (2,)")
        if r.ndim != 1 or r.shape[0] % 2 != 0 or r.shape[0] < 4:
            raise ValueError("rho must be sampled on an even periodic grid")
        if not np.all(np.isfinite(r)) or np.any(r <= 0):
            raise ValueError("rho must be finite and positive")

    @property
    def n_phi(self) -> int:
        return self.rho.shape[0]

    @property
    def phi_nodes(self) -> FloatArray:
        return phi_grid(self.n_phi)


@dataclass(frozen=True)
class GriddedVorticity:
    """Vorticity sampled on a square [-L/2, L/2]^2 grid (cell centers)."""

    box_size: float
    omega: FloatArray
    check_decay: bool = True

    def __post_init__(self):
        om = np.asarray(self.omega, dtype=float)
        object.__setattr__(self, "omega", om)
        if om.ndim != 2 or om.shape[0] != om.shape[1]:
            raise ValueError("omega must be a square array")
        if self.box_size <= 0:
            raise ValueError("box_size must be positive")
        if self.check_decay:
            peak = np.max(np.abs(om))
            ring = max(
                np.max(np.abs(om[0, :])),
                np.max(np.abs(om[-1, :])),
                np.max(np.abs(om[:, 0])),
                np.max(np.abs(om[:, -1])),
            )
            if peak > 0 and ring >= 1e-6 * peak:
                raise ValueError(
                    "boundary vorticity is not negligible: |omega|_ring/|omega|_max = %.3e"
                    % (ring / peak)
                )

    @property
    def n(self) -> int:
        return self.omega.shape[0]

    @property
    def cell(self) -> float:
        return self.box_size / self.n

    def axes(self) -> tuple[FloatArray, FloatArray]:
        x = (np.arange(self.n) + 0.5) * self.cell - 0.5 * self.box_size
        return x, x.copy()


def make_levels(peak: float, n_w: int) -> tuple[FloatArray, FloatArray]:
    """Level nodes/weights used throughout: Gauss-Legendre inside (0, peak)."""
    return gauss_legendre_levels(peak, n_w)


# ---------------------------------------------------------------------------
# Sampling: generalized distance along rays
# ---------------------------------------------------------------------------


def contour_field_from_sampler(
    sampler,
    center,
    peak: float,
    grid: tuple[int, int],
    *,
    horizon: float | None = None,
    scan_points: int = 800,
    rtol: float = 1e-12,
    diagnostics: dict | None = None,
) -> PolarContourField:
    """Build a contour field by measuring, along each ray, the set where the
    vorticity still exceeds the level (the pseudo-inverse of the profile).

    Rays that cross a level set more than once contribute the sum of their
    inside segments and are counted in ``diagnostics['non_monotone_rays']``.
    """
    n_phi, n_w = grid
    center = np.asarray(center, dtype=float)
    phi = phi_grid(n_phi)
    levels, weights = make_levels(peak, n_w)
    s = 1.0 if peak > 0 else -1.0
    e = np.stack([np.cos(phi), np.sin(phi)], axis=-1)  # (n_phi, 2)

    def omega_at(r):  # r: (n_phi, nr) radii
        pts = center + r[..., None] * e[:, None, :]
        return np.asarray(sampler(pts.reshape(-1, 2)), dtype=float).reshape(r.shape)

    if horizon is None:
        horizon = _auto_horizon(omega_at, levels[0], s, n_phi)

    r = np.linspace(0.0, horizon, scan_points)
    rr = np.broadcast_to(r, (n_phi, scan_points))
    om = omega_at(rr)  # (n_phi, scan)

    zeta = np.empty((n_phi, n_w))
    non_monotone = 0
    max_crossings = 1
    for j, w in enumerate(levels):
        inside = s * (om - w) > 0.0  # (n_phi, scan)
        if np.any(inside[:, -1]):
            raise NoCrossingError(
                "level %.6g still inside the contour at horizon %.6g" % (w, horizon)
            )
        # sign changes between consecutive scan samples
        flips = inside[:, :-1] & ~inside[:, 1:]
        rises = ~inside[:, :-1] & inside[:, 1:]
        n_cross = flips.sum(axis=1) + rises.sum(axis=1)
        bad = n_cross > 1
        if np.any(bad):
            non_monotone += int(bad.sum())
            max_crossings = max(max_crossings, int(n_cross.max()))
        rho_j = _refine_crossings(omega_at, r, inside, flips, rises, w, s, rtol * horizon)
        zeta[:, j] = 0.5 * rho_j**2
    if non_monotone:
        warnings.warn(
            "%d rays crossed their level set more than once" % non_monotone,
            NonMonotoneRayWarning,
        )
    if diagnostics is not None:
        diagnostics["non_monotone_rays"] = non_monotone
        diagnostics["max_crossings"] = max_crossings
        diagnostics["horizon"] = horizon
    # Guard against tiny quadrature-level nesting violations from ray solves.
    zeta = np.minimum.accumulate(zeta, axis=1)
    return PolarContourField(phi, levels, weights, zeta)


def _auto_horizon(omega_at, w_outer: float, s: float, n_phi: int) -> float:
    h = 1.0
    for _ in range(60):
        probe = np.full((n_phi, 1), h)
        if np.all(s * (omega_at(probe)[:, 0] - w_outer) < 0):
            return 1.5 * h
        h *= 2.0
    raise NoCrossingError("could not find a horizon where the outermost level closes")


def _refine_crossings(omega_at, r, inside, flips, rises, w, s, atol) -> FloatArray:
    """Bisect every bracketed crossing; rho = sum of inside segment lengths."""
    n_phi, scan = inside.shape
    rho = np.zeros(n_phi)
    # Collect brackets per ray: exits (inside->out) add +r_cross, entries add -r_cross.
    for kind, mask in (("exit", flips), ("entry", rises)):
        ray_idx, seg_idx = np.nonzero(mask)
        if ray_idx.size == 0:
            continue
        lo = r[seg_idx].copy()
        hi = r[seg_idx + 1].copy()
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            vals = _omega_rays(omega_at, ray_idx, mid, n_phi)
            is_in = s * (vals - w) > 0
            if kind == "exit":
                lo = np.where(is_in, mid, lo)
                hi = np.where(is_in, hi, mid)
            else:
                lo = np.where(is_in, lo, mid)
                hi = np.where(is_in, mid, hi)
            if np.max(hi - lo) < atol:
                break
        cross = 0.5 * (lo + hi)
        signcontrib = 1.0 if kind == "exit" else -1.0
        np.add.at(rho, ray_idx, signcontrib * cross)
    return rho


def _omega_rays(omega_at, ray_idx, radii, n_phi):
    # Evaluate omega on selected rays at per-ray radii using one batched call.
    rr = np.zeros((n_phi, radii.size))
    cols = np.arange(radii.size)
    rr[ray_idx, cols] = radii
    return omega_at(rr)[ray_idx, cols]


# ---------------------------------------------------------------------------
# Reconstruction and areas
# ---------------------------------------------------------------------------


def reconstruct_vorticity(
    region: VortexRegion, points, *, flags: dict | None = None
) -> FloatArray:
    """Vorticity at arbitrary points from the stored contour field.

    Points beyond the outermost stored contour return 0; points inside the
    innermost contour extrapolate linearly in (peak - w), clamped at the peak.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    rel = pts - region.center
    r2 = np.einsum("ij,ij->i", rel, rel)
    phi_p = np.arctan2(rel[:, 1], rel[:, 0])
    f = region.field
    prof = TrigInterpolant(f.zeta)(phi_p)  # (npts, n_w)
    target = 0.5 * r2

    s = float(region.sign)
    x = np.log(np.abs(f.levels))  # ascending with |w|
    slopes = pchip_slopes(x, prof)

    outside = target > prof[:, 0]
    innermost = prof[:, -1]
    inner = target < innermost
    mid = ~(outside | inner)

    out = np.empty(pts.shape[0])
    out[outside] = 0.0
    # linear zeta ~ a*(peak - w) near the peak
    gap = abs(region.peak) - np.abs(f.levels[-1])
    wa = abs(region.peak) - gap * (target[inner] / innermost[inner])
    out[inner] = s * wa
    if np.any(mid):
        xm = hermite_invert(x, prof[mid], slopes[mid], target[mid])
        out[mid] = s * np.exp(xm)
    if flags is not None:
        flags["outside"] = int(outside.sum())
        flags["extrapolated_at_peak"] = int(inner.sum())
    if np.any(outside) and flags is None:
        warnings.warn(
            "%d points fell outside the stored support" % int(outside.sum()),
            OutsideSupportWarning,
        )
    return out if np.asarray(points).ndim > 1 else out[0]


def reconstruct_system(system: VortexSystem, points) -> FloatArray:
    """Total vorticity of all regions at the given points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    total = np.zeros(pts.shape[0])
    for reg in system.regions:
        total += reconstruct_vorticity(reg, pts, flags={})
    return total if np.asarray(points).ndim > 1 else total[0]


def area_function(field: PolarContourField, w) -> FloatArray:
    """Area enclosed by the level-w contour: (1/2) int rho^2 dphi."""
    w_arr = np.atleast_1d(np.asarray(w, dtype=float))
    if np.any(np.sign(w_arr) != np.sign(field.levels[0])):
        raise ValueError("level sign does not match the stored field")
    x = np.log(np.abs(field.levels))
    tq = np.log(np.abs(w_arr))
    if np.any(tq < x[0]) or np.any(tq > x[-1]):
        lo, hi = x[0], x[-1]
        clipped = np.clip(tq, lo, hi)
        if np.max(np.abs(clipped - tq)) > 1e-9 * (hi - lo):
            warnings.warn("area_function level outside stored range; clamped", UserWarning)
        tq = clipped
    slopes = pchip_slopes(x, field.zeta)
    dphi = TWO_PI / field.n_phi
    vals = np.empty(tq.shape[0])
    for i, t in enumerate(tq):
        zrow = _eval_levels(x, field.zeta, slopes, t)
        vals[i] = dphi * zrow.sum()
    return vals if np.asarray(w).ndim else vals[0]


def _eval_levels(x, zeta, slopes, t) -> FloatArray:
    from .quadrature import hermite_eval

    tq = np.full(zeta.shape[0], t)
    return hermite_eval(x, zeta, slopes, tq)


# ---------------------------------------------------------------------------
# Analytic families
# ---------------------------------------------------------------------------


def ellipse_radius(a: float, b: float):
    """Polar radius of an origin-centered axis-aligned ellipse."""
    if not (a > 0 and b > 0):
        raise ValueError("semi-axes must be positive")

    def radius(phi):
        phi = np.asarray(phi, dtype=float)
        return a * b / np.sqrt((b * np.cos(phi)) ** 2 + (a * np.sin(phi)) ** 2)

    return radius


def gaussian_region(
    peak: float, core: float, center=(0.0, 0.0), n_phi: int = 64, n_w: int = 32
) -> VortexRegion:
    """Gaussian vortex M exp(-r^2/R^2): zeta = (R^2/2) ln(M/w) exactly."""
    phi = phi_grid(n_phi)
    levels, weights = make_levels(peak, n_w)
    zeta = np.broadcast_to(
        0.5 * core**2 * np.log(abs(peak) / np.abs(levels)), (n_phi, n_w)
    ).copy()
    return VortexRegion(np.asarray(center, float), peak, PolarContourField(phi, levels, weights, zeta))


def scaled_profile_region(
    peak: float,
    radius_of_phi,
    eps: float,
    center=(0.0, 0.0),
    n_phi: int = 64,
    n_w: int = 32,
    inv_profile=None,
) -> VortexRegion:
    """Family rho(phi, w) = R(phi) * [S^-1(w/M)]^eps bridging patches and
    smooth vortices; the default profile is S(x) = exp(-x).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    phi = phi_grid(n_phi)
    levels, weights = make_levels(peak, n_w)
    if inv_profile is None:
        inv_profile = lambda y: np.log(1.0 / y)
    r_base = np.asarray(radius_of_phi(phi), dtype=float)
    shape_w = np.asarray(inv_profile(np.abs(levels) / abs(peak)), dtype=float) ** (2.0 * eps)
    zeta = 0.5 * np.outer(r_base**2, shape_w)
    return VortexRegion(np.asarray(center, float), peak, PolarContourField(phi, levels, weights, zeta))


def gaussian_sampler(peak: float, core: float, center=(0.0, 0.0)):
    """Pointwise Gaussian vorticity sampler for tests and gridding."""
    c = np.asarray(center, dtype=float)

    def sampler(points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        rel = pts - c
        r2 = np.einsum("ij,ij->i", rel, rel)
        return peak * np.exp(-r2 / core**2)

    return sampler


# ---------------------------------------------------------------------------
# Serialization (columnar CSV, exact round trip via repr)
# ---------------------------------------------------------------------------

FIELD_FORMAT_VERSION = 1


def save_region(path, region: VortexRegion) -> None:
    f = region.field
    lines = ["format,contourdyn-field,%d" % FIELD_FORMAT_VERSION]
    lines.append("center,%r,%r" % (float(region.center[0]), float(region.center[1])))
    lines.append("peak,%r" % float(region.peak))
    lines.append("grid,%d,%d" % (f.n_phi, f.n_w))
    for j, (w, wt) in enumerate(zip(f.levels, f.level_weights)):
        lines.append("level,%d,%r,%r" % (j, float(w), float(wt)))
    for i in range(f.n_phi):
        for j in range(f.n_w):
            lines.append("zeta,%d,%d,%r" % (i, j, float(f.zeta[i, j])))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_region(path) -> VortexRegion:
    center = None
    peak = None
    n_phi = n_w = None
    levels = weights = zeta = None
    with open(path) as fh:
        for line in fh:
            parts = line.strip().split(",")
            if not parts or not parts[0]:
                continue
            tag = parts[0]
            if tag == "format":
                if parts[1] != "contourdyn-field" or int(parts[2]) != FIELD_FORMAT_VERSION:
                    raise ValueError("unrecognized field file format: %s" % line.strip())
            elif tag == "center":
                center = np.array([float(parts[1]), float(parts[2])])
            elif tag == "peak":
                peak = float(parts[1])
            elif tag == "grid":
                n_phi, n_w = int(parts[1]), int(parts[2])
                levels = np.empty(n_w)
                weights = np.empty(n_w)
                zeta = np.empty((n_phi, n_w))
            elif tag == "level":
                levels[int(parts[1])] = float(parts[2])
                weights[int(parts[1])] = float(parts[3])
            elif tag == "zeta":
                zeta[int(parts[1]), int(parts[2])] = float(parts[3])
            else:
                raise ValueError("unknown row tag %r" % tag)
    if center is None or peak is None or zeta is None:
        raise ValueError("incomplete field file")
    fieldobj = PolarContourField(phi_grid(n_phi), levels, weights, zeta)
    return VortexRegion(center, peak, fieldobj)
