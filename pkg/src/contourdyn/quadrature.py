"""Quadrature and spectral helpers shared by the kernel and dynamics modules.

Everything here operates on the two fixed grids of the solver: a uniform
periodic angle grid (N even) and Gauss-Legendre level nodes mapped to the
open interval between vorticity 0 and the peak value.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.typing import NDArray

FloatArray = NDArray[np.float64]

TWO_PI = 2.0 * np.pi


def phi_grid(n_phi: int) -> FloatArray:
    """Uniform angles on [0, 2pi), endpoint excluded."""
    if n_phi < 4 or n_phi % 2 != 0:
        raise ValueError("n_phi must be an even integer >= 4")
    return np.arange(n_phi) * (TWO_PI / n_phi)


def gauss_legendre_levels(peak: float, n_w: int) -> tuple[FloatArray, FloatArray]:
    """Gauss-Legendre nodes/weights on the open level interval (0, peak).

    Nodes are ordered with increasing |w| (outermost contour first).  For a
    negative peak the nodes are negative and the weights still sum to |peak|.
    """
    if n_w < 2:
        raise ValueError("n_w must be >= 2")
    if peak == 0.0 or not np.isfinite(peak):
        raise ValueError("peak must be finite and nonzero")
    x, w = np.polynomial.legendre.leggauss(n_w)
    a = abs(peak)
    nodes = 0.5 * a * (x + 1.0)
    weights = 0.5 * a * w
    if peak < 0:
        nodes = -nodes
    return nodes, weights


@lru_cache(maxsize=32)
def _kress_row(n_phi: int) -> FloatArray:
    # First row of the circulant Kress matrix for the periodic log kernel
    # ln(4 sin^2((t - tau)/2)); exact for trigonometric polynomials of
    # degree < n_phi/2.
    n = n_phi // 2
    k = np.arange(n_phi)
    x = k * (np.pi / n)
    m = np.arange(1, n)
    row = -(TWO_PI / n) * np.cos(np.outer(x, m) * 1.0) @ (1.0 / m)
    row -= (np.pi / n**2) * np.cos(n * x)
    return row


def kress_log_matrix(n_phi: int) -> FloatArray:
    """Quadrature matrix R with sum_j R[i,j] f(t_j) ~ int f ln(4 sin^2((t_i-t)/2)) dt."""
    row = _kress_row(n_phi)
    idx = (np.arange(n_phi)[:, None] - np.arange(n_phi)[None, :]) % n_phi
    return row[idx]


def fourier_diff(values: FloatArray, axis: int = 0) -> FloatArray:
    """Spectral derivative of periodic samples along ``axis``."""
    n = values.shape[axis]
    fk = np.fft.rfft(values, axis=axis)
    k = np.arange(fk.shape[axis], dtype=float)
    if n % 2 == 0:
        k[-1] = 0.0  # Nyquist mode has no well-defined odd derivative
    shape = [1] * values.ndim
    shape[axis] = -1
    fk *= 1j * k.reshape(shape)
    return np.fft.irfft(fk, n=n, axis=axis)


def hilbert_periodic(values: FloatArray, axis: int = 0) -> FloatArray:
    """Periodic Hilbert transform: e^{im t} -> -i sgn(m) e^{im t}."""
    n = values.shape[axis]
    fk = np.fft.rfft(values, axis=axis)
    mult = np.full(fk.shape[axis], -1j)
    mult[0] = 0.0
    shape = [1] * values.ndim
    shape[axis] = -1
    fk *= mult.reshape(shape)
    return np.fft.irfft(fk, n=n, axis=axis)


class TrigInterpolant:
    """Trigonometric interpolant of real periodic samples on the phi grid.

    ``values`` has the angle along axis 0 and may carry one trailing axis
    (e.g. levels).  Evaluation accepts arbitrary angle arrays; the Nyquist
    mode is treated as a pure cosine so real data stay real.
    """

    def __init__(self, values: FloatArray):
        values = np.asarray(values, dtype=float)
        self.n = values.shape[0]
        self._coef = np.fft.rfft(values, axis=0) / self.n  # (nmodes, ...)
        scale = np.full(self._coef.shape[0], 2.0)
        scale[0] = 1.0
        if self.n % 2 == 0:
            scale[-1] = 1.0  # cosine-only Nyquist
        self._scaled = self._coef * scale.reshape((-1,) + (1,) * (values.ndim - 1))

    def __call__(self, theta: FloatArray) -> FloatArray:
        theta = np.asarray(theta, dtype=float)
        flat = np.atleast_1d(theta).ravel()
        m = np.arange(self._coef.shape[0])
        phase = np.exp(1j * np.outer(flat, m))  # (npts, nmodes)
        out = np.real(phase @ self._scaled.reshape(self._scaled.shape[0], -1))
        out = out.reshape(flat.shape + self._scaled.shape[1:])
        if theta.ndim == 0:
            return out[0]
        return out.reshape(theta.shape + self._scaled.shape[1:])

    def derivative(self, theta: FloatArray) -> FloatArray:
        theta = np.asarray(theta, dtype=float)
        flat = np.atleast_1d(theta).ravel()
        m = np.arange(self._coef.shape[0], dtype=float)
        dmult = 1j * m
        if self.n % 2 == 0:
            dmult[-1] = 0.0
        phase = np.exp(1j * np.outer(flat, m)) * dmult
        out = np.real(phase @ self._scaled.reshape(self._scaled.shape[0], -1))
        out = out.reshape(flat.shape + self._scaled.shape[1:])
        if theta.ndim == 0:
            return out[0]
        return out.reshape(theta.shape + self._scaled.shape[1:])


def spectral_upsample(values: FloatArray, factor: int, axis: int = 0) -> FloatArray:
    """Exact trigonometric upsampling of periodic samples by an integer factor."""
    if factor == 1:
        return np.asarray(values, dtype=float)
    n = values.shape[axis]
    fk = np.fft.rfft(values, axis=axis)
    shape = list(fk.shape)
    shape[axis] = (n * factor) // 2 + 1
    out = np.zeros(shape, dtype=complex)
    sl_src = [slice(None)] * fk.ndim
    sl_src[axis] = slice(0, fk.shape[axis])
    out[tuple(sl_src)] = fk
    if n % 2 == 0:
        # the old Nyquist bin becomes an interior mode: split its amplitude
        sl_nyq = [slice(None)] * fk.ndim
        sl_nyq[axis] = slice(n // 2, n // 2 + 1)
        out[tuple(sl_nyq)] *= 0.5
    return np.fft.irfft(out * factor, n=n * factor, axis=axis)


def pchip_slopes(x: FloatArray, y: FloatArray) -> FloatArray:
    """Fritsch-Carlson monotone cubic slopes at the nodes.

    ``y`` may have leading dimensions; interpolation runs along the last axis,
    which must match ``len(x)``.  Matches SciPy's PchipInterpolator.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.shape[0]
    if y.shape[-1] != n:
        raise ValueError("y last axis must match x")
    h = np.diff(x)
    if np.any(h <= 0):
        raise ValueError("x must be strictly increasing")
    delta = np.diff(y, axis=-1) / h
    d = np.zeros_like(y)

    dk0 = delta[..., :-1]
    dk1 = delta[..., 1:]
    w1 = 2.0 * h[1:] + h[:-1]
    w2 = h[1:] + 2.0 * h[:-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        interior = (w1 + w2) / (w1 / dk0 + w2 / dk1)
    interior = np.where(dk0 * dk1 > 0, interior, 0.0)
    d[..., 1:-1] = interior

    d[..., 0] = _pchip_edge(h[0], h[1], delta[..., 0], delta[..., 1])
    d[..., -1] = _pchip_edge(h[-1], h[-2], delta[..., -1], delta[..., -2])
    return d


def _pchip_edge(h0: float, h1: float, d0: FloatArray, d1: FloatArray) -> FloatArray:
    d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1)
    sign_mismatch = np.sign(d) != np.sign(d0)
    d = np.where(sign_mismatch, 0.0, d)
    overshoot = (np.sign(d0) != np.sign(d1)) & (np.abs(d) > 3.0 * np.abs(d0))
    return np.where(overshoot, 3.0 * d0, d)


def hermite_eval(
    x: FloatArray,
    y: FloatArray,
    d: FloatArray,
    xq: FloatArray,
    dydx: FloatArray | None = None,
) -> FloatArray:
    """Evaluate the cubic Hermite defined by nodes/values/slopes at ``xq``.

    ``y`` and ``d`` may carry leading dims broadcastable to ``xq``; the query
    points are clamped to the node range (extrapolation handled by callers).
    """
    x = np.asarray(x, dtype=float)
    xq = np.asarray(xq, dtype=float)
    idx = np.clip(np.searchsorted(x, xq) - 1, 0, len(x) - 2)
    h = x[idx + 1] - x[idx]
    t = (xq - x[idx]) / h
    if y.ndim == 1:
        y0, y1 = y[idx], y[idx + 1]
        d0, d1 = d[idx], d[idx + 1]
    else:
        nseg = y.shape[-1]
        yb = np.broadcast_to(y, xq.shape + (nseg,))
        db = np.broadcast_to(d, xq.shape + (nseg,))
        sel = np.broadcast_to(idx[..., None], xq.shape + (1,))
        y0 = np.take_along_axis(yb, sel, -1)[..., 0]
        y1 = np.take_along_axis(yb, sel + 1, -1)[..., 0]
        d0 = np.take_along_axis(db, sel, -1)[..., 0]
        d1 = np.take_along_axis(db, sel + 1, -1)[..., 0]
    t2 = t * t
    t3 = t2 * t
    val = (
        y0 * (2 * t3 - 3 * t2 + 1)
        + h * d0 * (t3 - 2 * t2 + t)
        + y1 * (-2 * t3 + 3 * t2)
        + h * d1 * (t3 - t2)
    )
    if dydx is not None:
        dydx[...] = (
            y0 * (6 * t2 - 6 * t) / h
            + d0 * (3 * t2 - 4 * t + 1)
            + y1 * (6 * t - 6 * t2) / h
            + d1 * (3 * t2 - 2 * t)
        )
    return val


def hermite_invert(
    x: FloatArray, y: FloatArray, d: FloatArray, target: FloatArray, n_bisect: int = 60
) -> FloatArray:
    """Solve the monotone Hermite y(x) = target per sample by bisection.

    ``y``/``d`` have shape (..., n) matching targets' leading shape; y must be
    monotone along the last axis.  Targets outside the data range return the
    clamped endpoint abscissa.
    """
    x = np.asarray(x, dtype=float)
    lo = np.full(target.shape, x[0])
    hi = np.full(target.shape, x[-1])
    decreasing = y[..., -1] < y[..., 0]
    for _ in range(n_bisect):
        mid = 0.5 * (lo + hi)
        val = hermite_eval(x, y, d, mid)
        go_right = np.where(decreasing, val > target, val < target)
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_right, hi, mid)
    return 0.5 * (lo + hi)
