"""Conserved-quantity monitors and topology checks on gridded reconstructions.

Peak values are conserved exactly by the contour-field representation itself
(levels are fixed labels), so the monitored quantities are the energy, the
vorticity first moment, Casimir functionals, level-set areas, and on grids
the critical-point census and the component counts n(w).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy import ndimage

from .geometry import GriddedVorticity, VortexSystem, area_function
from .kernels import QuadratureSpec, DEFAULT_SPEC, hamiltonian
from .quadrature import TWO_PI

FloatArray = NDArray[np.float64]

REPORT_SCHEMA_VERSION = 1


class DegenerateHessianWarning(UserWarning):
    """A critical point could not be classified (|det H| below tolerance)."""


def first_moment(system: VortexSystem) -> complex:
    """Vorticity first moment int (x + i y) Omega dA in contour variables."""
    total = 0.0 + 0.0j
    for reg in system.regions:
        f = reg.field
        s = float(reg.sign)
        rho = np.sqrt(2.0 * f.zeta)
        dphi = TWO_PI / f.n_phi
        zc = complex(reg.center[0], reg.center[1])
        phase = np.exp(1j * f.phi_nodes)
        inner = 0.5 * zc * (2.0 * f.zeta) + (rho**3 / 3.0) * phase[:, None]
        total += s * dphi * complex((inner @ f.level_weights).sum())
    return total


def casimir(system: VortexSystem, k_func, k_prime=None) -> float:
    """Casimir functional int K(Omega) dA (support-regularized).

    Computed as sum_j s_j [ K(0) A_j(outermost) + (1/2) intint K'(w) rho^2 dphi dw ],
    the integrated-by-parts form that stays exact for patch-like fields where
    the printed d/dw form loses its boundary terms.  K' is taken analytically
    when supplied, else by 4th-order central differences.
    """
    total = 0.0
    for reg in system.regions:
        f = reg.field
        s = float(reg.sign)
        if k_prime is None:
            h = 1e-4 * abs(reg.peak)
            kp = (
                -k_func(f.levels + 2 * h)
                + 8 * k_func(f.levels + h)
                - 8 * k_func(f.levels - h)
                + k_func(f.levels - 2 * h)
            ) / (12 * h)
        else:
            kp = np.asarray(k_prime(f.levels), dtype=float)
        dphi = TWO_PI / f.n_phi
        rho_sq_int = dphi * (2.0 * f.zeta).sum(axis=0)  # int rho^2 dphi per level
        total += s * 0.5 * float(kp @ (rho_sq_int * f.level_weights))
        k0 = float(np.asarray(k_func(np.zeros(1))).ravel()[0])
        if k0 != 0.0:
            total += s * k0 * float(area_function(f, f.levels[0]))
    return total


def locate_critical_points(
    grid: GriddedVorticity,
    *,
    amplitude_floor: float = 1e-3,
    det_floor: float = 1e-10,
) -> list[dict]:
    """Zero-gradient points with sub-cell quadratic refinement and Hessian type.

    Cells whose |Omega| is below ``amplitude_floor`` times the global maximum
    are skipped (the far field is numerically flat).  Returns dicts with
    position, value, and type in {max, min, saddle, degenerate}.
    """
    om = grid.omega
    h = grid.cell
    x, y = grid.axes()
    gx = np.gradient(om, h, axis=0)
    gy = np.gradient(om, h, axis=1)
    peak = np.max(np.abs(om))
    found: list[dict] = []
    sx = np.sign(gx)
    sy = np.sign(gy)
    flip_x = (sx[:-1, :-1] * sx[1:, :-1] <= 0) | (sx[:-1, :-1] * sx[:-1, 1:] <= 0)
    flip_y = (sy[:-1, :-1] * sy[1:, :-1] <= 0) | (sy[:-1, :-1] * sy[:-1, 1:] <= 0)
    # the far field is numerically flat; filter on the local neighbourhood
    # amplitude (saddles of opposite-sign systems sit near Omega = 0, so the
    # cell's own value cannot be the criterion)
    local = np.abs(om)
    local = np.maximum(local[:-1, :-1], np.maximum(local[1:, :-1], local[:-1, 1:]))
    grad_mag = np.hypot(gx, gy)[:-1, :-1] * h
    cand = flip_x & flip_y & ((local > amplitude_floor * peak) | (grad_mag > amplitude_floor * peak))
    ii, jj = np.nonzero(cand)
    taken: list[tuple[float, float]] = []
    for i, j in zip(ii, jj):
        if i < 1 or j < 1 or i > grid.n - 3 or j > grid.n - 3:
            continue
        patch = om[i - 1 : i + 2, j - 1 : j + 2]
        gxc = (patch[2, 1] - patch[0, 1]) / (2 * h)
        gyc = (patch[1, 2] - patch[1, 0]) / (2 * h)
        hxx = (patch[2, 1] - 2 * patch[1, 1] + patch[0, 1]) / h**2
        hyy = (patch[1, 2] - 2 * patch[1, 1] + patch[1, 0]) / h**2
        hxy = (patch[2, 2] - patch[2, 0] - patch[0, 2] + patch[0, 0]) / (4 * h**2)
        det = hxx * hyy - hxy**2
        if abs(det) < det_floor * (peak / max(h, 1e-300) ** 2) ** 2:
            found.append(
                {"position": (x[i], y[j]), "value": om[i, j], "type": "degenerate"}
            )
            continue
        dx_ = -(hyy * gxc - hxy * gyc) / det
        dy_ = -(-hxy * gxc + hxx * gyc) / det
        if abs(dx_) > h or abs(dy_) > h:
            continue  # Newton points outside the cell: not a real zero here
        px, py = x[i] + dx_, y[j] + dy_
        if any((px - qx) ** 2 + (py - qy) ** 2 < (1.5 * h) ** 2 for qx, qy in taken):
            continue
        taken.append((px, py))
        val = (
            om[i, j]
            + gxc * dx_
            + gyc * dy_
            + 0.5 * (hxx * dx_**2 + 2 * hxy * dx_ * dy_ + hyy * dy_**2)
        )
        if det < 0:
            kind = "saddle"
        elif hxx + hyy < 0:
            kind = "max"
        else:
            kind = "min"
        found.append({"position": (px, py), "value": float(val), "type": kind})
    return found


def count_level_components(grid: GriddedVorticity, w: float) -> int:
    """Number of 4-connected components of {Omega > w} (or {Omega < w} for w < 0)."""
    if w == 0:
        raise ValueError("component counting requires a nonzero level")
    mask = grid.omega > w if w > 0 else grid.omega < w
    _, count = ndimage.label(mask)  # default structure = 4-connectivity
    return int(count)


@dataclass
class InvariantReport:
    """One monitoring sample along a trajectory."""

    t: float
    energy: float
    first_moment: complex
    peaks: tuple[float, ...]
    centers: tuple[tuple[float, float], ...]
    areas: tuple[tuple[float, float], ...]  # (level, area)
    casimirs: tuple[tuple[str, float], ...] = ()
    n_of_w: tuple[tuple[float, int], ...] = ()
    critical_count: int | None = None

    @staticmethod
    def csv_header(n_regions: int, probe_levels, casimir_ids=(), topo_levels=()) -> str:
        cols = ["t", "energy", "c_re", "c_im"]
        for k in range(n_regions):
            cols += ["peak_%d" % k, "center_%d_x" % k, "center_%d_y" % k]
        for w in probe_levels:
            cols.append("area_w=%r" % float(w))
        for cid in casimir_ids:
            cols.append("casimir_%s" % cid)
        for w in topo_levels:
            cols.append("n_w=%r" % float(w))
        cols.append("critical_count")
        return "schema=%d," % REPORT_SCHEMA_VERSION + ",".join(cols)

    def csv_row(self) -> str:
        cells = [repr(float(self.t)), repr(float(self.energy))]
        cells += [repr(self.first_moment.real), repr(self.first_moment.imag)]
        for pk, (cx, cy) in zip(self.peaks, self.centers):
            cells += [repr(float(pk)), repr(float(cx)), repr(float(cy))]
        for _, a in self.areas:
            cells.append(repr(float(a)))
        for _, v in self.casimirs:
            cells.append(repr(float(v)))
        for _, n in self.n_of_w:
            cells.append(str(int(n)))
        cells.append("" if self.critical_count is None else str(self.critical_count))
        return ",".join(cells)


def report(
    system: VortexSystem,
    t: float,
    probe_levels,
    spec: QuadratureSpec = DEFAULT_SPEC,
    *,
    casimir_funcs: dict | None = None,
    grid: GriddedVorticity | None = None,
    topo_levels=(),
) -> InvariantReport:
    """Assemble all monitors for one snapshot."""
    peaks = tuple(float(r.peak) for r in system.regions)
    centers = tuple((float(r.center[0]), float(r.center[1])) for r in system.regions)
    areas = []
    for w in probe_levels:
        reg = _region_containing_level(system, w)
        areas.append((float(w), float(area_function(reg.field, w))))
    cas = ()
    if casimir_funcs:
        cas = tuple((name, casimir(system, fn)) for name, fn in casimir_funcs.items())
    now = ()
    ncrit = None
    if grid is not None:
        now = tuple((float(w), count_level_components(grid, w)) for w in topo_levels)
        ncrit = len(
            [p for p in locate_critical_points(grid) if p["type"] in ("max", "min", "saddle")]
        )
    return InvariantReport(
        t=t,
        energy=hamiltonian(system, spec),
        first_moment=first_moment(system),
        peaks=peaks,
        centers=centers,
        areas=tuple(areas),
        casimirs=cas,
        n_of_w=now,
        critical_count=ncrit,
    )


def _region_containing_level(system: VortexSystem, w: float):
    for reg in system.regions:
        if reg.sign > 0 and 0 < w < reg.peak:
            return reg
        if reg.sign < 0 and reg.peak < w < 0:
            return reg
    raise ValueError("no region contains level %r" % w)
