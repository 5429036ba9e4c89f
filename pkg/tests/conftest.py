import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def rankine_sampler(peak, radius, center=(0.0, 0.0)):
    c = np.asarray(center, float)

    def sampler(points):
        pts = np.atleast_2d(np.asarray(points, float))
        rel = pts - c
        r2 = np.einsum("ij,ij->i", rel, rel)
        return np.where(r2 < radius**2, peak, 0.0)

    return sampler


def elliptic_gaussian_sampler(peak, a, b, center=(0.0, 0.0)):
    """Smooth anisotropic Gaussian M exp(-(r/R(phi))^2)."""
    c = np.asarray(center, float)

    def sampler(points):
        pts = np.atleast_2d(np.asarray(points, float))
        rel = pts - c
        r2 = np.einsum("ij,ij->i", rel, rel)
        phi = np.arctan2(rel[:, 1], rel[:, 0])
        r_ell = a * b / np.sqrt((b * np.cos(phi)) ** 2 + (a * np.sin(phi)) ** 2)
        return peak * np.exp(-r2 / r_ell**2)

    return sampler
