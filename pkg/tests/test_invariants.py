import numpy as np
import pytest
from scipy.integrate import quad

from contourdyn.geometry import (
    GriddedVorticity,
    VortexRegion,
    VortexSystem,
    ellipse_radius,
    gaussian_region,
    gaussian_sampler,
    scaled_profile_region,
    contour_field_from_sampler,
)
from contourdyn.invariants import (
    InvariantReport,
    casimir,
    count_level_components,
    first_moment,
    locate_critical_points,
    report,
)
from contourdyn.oracles import grid_from_sampler

from conftest import rankine_sampler


class TestFirstMoment:
    def test_centered_symmetric_monopole_zero(self):
        reg = scaled_profile_region(1.0, ellipse_radius(1.3, 0.8), 0.4, n_phi=32, n_w=16)
        assert abs(first_moment(VortexSystem((reg,)))) < 1e-14

    def test_rankine_disk_moment(self):
        z0 = 0.7 + 0.4j
        M, R = 2.0, 0.8
        field = contour_field_from_sampler(
            rankine_sampler(M, R, (z0.real, z0.imag)), (z0.real, z0.imag), M, (32, 16)
        )
        reg = VortexRegion(np.array([z0.real, z0.imag]), M, field)
        c = first_moment(VortexSystem((reg,)))
        want = z0 * M * np.pi * R**2
        assert abs(c - want) < 1e-8 * abs(want)

    def test_translation_shifts_by_circulation(self):
        reg = gaussian_region(1.0, 0.6, center=(0.0, 0.0), n_phi=32, n_w=32)
        sys0 = VortexSystem((reg,))
        c0 = first_moment(sys0)
        a = np.array([1.5, -2.0])
        moved = VortexRegion(reg.center + a, reg.peak, reg.field)
        c1 = first_moment(VortexSystem((moved,)))
        # the shift couples to the moment rule's own circulation measure
        f = reg.field
        gamma_mom = (
            float(reg.sign)
            * (2 * np.pi / f.n_phi)
            * float(np.sum(f.zeta @ f.level_weights))
        )
        want = c0 + complex(a[0], a[1]) * gamma_mom
        assert abs(c1 - want) < 1e-12 * max(abs(want), 1.0)
        # and that measure approximates the true circulation
        assert abs(gamma_mom - np.pi * 0.36) < 2e-3 * np.pi * 0.36


class TestCasimir:
    def test_zero_functional(self):
        reg = gaussian_region(1.0, 1.0, n_phi=16, n_w=16)
        assert casimir(VortexSystem((reg,)), lambda w: np.zeros_like(w)) == 0.0

    def test_constant_gives_support_area(self):
        from contourdyn.geometry import area_function

        reg = gaussian_region(1.0, 1.0, n_phi=16, n_w=24)
        got = casimir(VortexSystem((reg,)), lambda w: np.ones_like(w))
        want = area_function(reg.field, reg.field.levels[0])
        assert abs(got - want) < 1e-10 * want

    def test_identity_on_rankine_gives_circulation(self):
        M, R = 1.0, 1.2
        field = contour_field_from_sampler(rankine_sampler(M, R), (0, 0), M, (16, 12))
        reg = VortexRegion(np.zeros(2), M, field)
        got = casimir(VortexSystem((reg,)), lambda w: w, k_prime=lambda w: np.ones_like(w))
        assert abs(got - M * np.pi * R**2) < 1e-8

    def test_quadratic_on_gaussian(self):
        # int Omega^2 dA for M exp(-r^2/R^2) = pi M^2 R^2 / 2
        M, R = 1.3, 0.9
        reg = gaussian_region(M, R, n_phi=16, n_w=48)
        got = casimir(VortexSystem((reg,)), lambda w: w**2)
        want = np.pi * M**2 * R**2 / 2
        assert abs(got - want) < 1e-6 * want


class TestTopology:
    def test_gridded_gaussian_single_max(self):
        z0 = (0.3, -0.2)
        grid = grid_from_sampler(gaussian_sampler(1.0, 1.0, z0), 16.0, 256)
        pts = locate_critical_points(grid)
        assert len(pts) == 1
        p = pts[0]
        assert p["type"] == "max"
        h = grid.cell
        assert np.hypot(p["position"][0] - z0[0], p["position"][1] - z0[1]) < h
        assert abs(p["value"] - 1.0) < 1e-4

    def test_two_gaussian_dipole_census(self):
        # opposite signs: one max and one min, no saddle (the gradient never
        # vanishes between a hill and a pit that meet at the zero line)
        def dipole(pts):
            up = gaussian_sampler(1.0, 1.0, (0.0, 1.5))(pts)
            dn = gaussian_sampler(-1.0, 1.0, (0.0, -1.5))(pts)
            return up + dn

        grid = grid_from_sampler(dipole, 24.0, 384, check_decay=False)
        pts = locate_critical_points(grid, amplitude_floor=1e-4)
        kinds = sorted(p["type"] for p in pts)
        assert kinds == ["max", "min"]

    def test_same_sign_pair_has_saddle(self):
        def pair(pts):
            return gaussian_sampler(1.0, 1.0, (0.0, 1.5))(pts) + gaussian_sampler(
                1.0, 1.0, (0.0, -1.5)
            )(pts)

        grid = grid_from_sampler(pair, 24.0, 384, check_decay=False)
        pts = locate_critical_points(grid, amplitude_floor=1e-4)
        kinds = sorted(p["type"] for p in pts)
        assert kinds == ["max", "max", "saddle"]
        saddle = [p for p in pts if p["type"] == "saddle"][0]
        assert np.hypot(*saddle["position"]) < grid.cell

    def test_flat_field_empty(self):
        grid = GriddedVorticity(4.0, np.zeros((64, 64)), check_decay=False)
        assert locate_critical_points(grid) == []

    def test_component_counts(self):
        single = grid_from_sampler(gaussian_sampler(1.0, 1.0), 16.0, 128)
        assert count_level_components(single, 0.5) == 1
        assert count_level_components(single, 1.5) == 0

        def two(pts):
            return gaussian_sampler(1.0, 0.6, (-2.5, 0))(pts) + gaussian_sampler(
                1.0, 0.6, (2.5, 0)
            )(pts)

        double = grid_from_sampler(two, 20.0, 256, check_decay=False)
        assert count_level_components(double, 0.5) == 2

    def test_component_count_monotone_in_level(self):
        grid = grid_from_sampler(gaussian_sampler(1.0, 1.0), 16.0, 128)
        counts = [count_level_components(grid, w) for w in (0.1, 0.3, 0.5, 0.7, 0.9)]
        assert all(a >= b for a, b in zip(counts, counts[1:]))


class TestReport:
    def test_smoke_monopole(self):
        reg = gaussian_region(1.0, 1.0, n_phi=32, n_w=24)
        rep = report(VortexSystem((reg,)), 0.0, probe_levels=(0.2, 0.5))
        assert rep.peaks == (1.0,)
        assert np.isfinite(rep.energy)
        assert len(rep.areas) == 2

    def test_smoke_with_grid_and_casimirs(self):
        reg = gaussian_region(1.0, 1.0, n_phi=16, n_w=16)
        grid = grid_from_sampler(gaussian_sampler(1.0, 1.0), 16.0, 128)
        rep = report(
            VortexSystem((reg,)), 1.0, probe_levels=(0.5,),
            casimir_funcs={"w2": lambda w: w**2}, grid=grid, topo_levels=(0.5,),
        )
        assert rep.n_of_w == ((0.5, 1),)
        assert rep.critical_count == 1
        header = InvariantReport.csv_header(1, (0.5,), ("w2",), (0.5,))
        row = rep.csv_row()
        assert len(header.split(",")) - 1 == len(row.split(","))

    def test_csv_row_roundtrip_floats(self):
        reg = gaussian_region(1.0, 1.0, n_phi=16, n_w=16)
        rep = report(VortexSystem((reg,)), 0.25, probe_levels=(0.3,))
        row = rep.csv_row()
        vals = row.split(",")
        assert float(vals[0]) == 0.25
        assert float(vals[1]) == rep.energy
