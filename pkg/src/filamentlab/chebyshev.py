"""Chebyshev grids, transforms and coefficient-space calculus.

Collocation nodes on [-L, L] are s_i = L*cos(i*pi/N), i = 0..N, ordered
decreasing: index 0 is s = +L, index N is s = -L, and for even N the
midpoint i = N/2 is s = 0.  A sample vector v_i corresponds to the
interpolating polynomial

    v(s) = sum_{k=0..N} a_k T_k(s/L),

and values <-> coefficients are a scaled DCT-I pair (computed with the
FFT).  Derivatives, antiderivatives and point evaluation all act on the
coefficient vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft

from .errors import BadLength, OutOfDomain


@dataclass(frozen=True)
class ChebyshevGrid:
    """Chebyshev collocation grid of polynomial degree N on [-L, L]."""

    L: float
    N: int

    def __post_init__(self):
        if self.N < 4 or self.N % 2 != 0:
            raise BadLength(f"N must be even and >= 4, got {self.N}")
        if self.L <= 0:
            raise ValueError(f"L must be positive, got {self.L}")

    @property
    def nodes(self) -> np.ndarray:
        """Nodes L*cos(i*pi/N), decreasing from +L to -L."""
        return self.L * np.cos(np.arange(self.N + 1) * np.pi / self.N)

    @property
    def origin_index(self) -> int:
        return self.N // 2


def cheb_transform(values) -> np.ndarray:
    """Nodal samples -> Chebyshev coefficients of the interpolant."""
    values = np.asarray(values)
    n = values.shape[-1] - 1
    if n < 1:
        raise BadLength("need at least 2 samples")
    coeffs = scipy.fft.dct(values, type=1, axis=-1) / n
    coeffs[..., 0] *= 0.5
    coeffs[..., -1] *= 0.5
    return coeffs


def cheb_inverse(coeffs) -> np.ndarray:
    """Chebyshev coefficients -> nodal samples (exact inverse transform)."""
    coeffs = np.asarray(coeffs)
    if coeffs.shape[-1] < 2:
        raise BadLength("need at least 2 coefficients")
    half = coeffs.copy()
    half[..., 1:-1] *= 0.5
    return scipy.fft.dct(half, type=1, axis=-1)


def cheb_derivative(coeffs, L: float) -> np.ndarray:
    """Coefficients of d/ds of the series, including the 1/L chain factor.

    Standard recurrence c_{k-1} b_{k-1} = b_{k+1} + 2k a_k (c_0 = 2),
    evaluated as parity-split suffix sums so it vectorizes.
    """
    a = np.asarray(coeffs)
    n = a.shape[-1] - 1
    b = np.zeros_like(a)
    if n == 0:
        return b
    k = np.arange(n + 1)
    d = (2.0 / L) * k * a  # d_k = 2 k a_k / L; b_{k-1} = sum of d over k, k+2, ...
    for top in (n, n - 1):  # one suffix-cumsum per parity class
        if top < 1:
            continue
        np.cumsum(d[..., top:0:-2], axis=-1, out=b[..., top - 1::-2])
    b[..., 0] *= 0.5
    return b


def cheb_antiderivative(coeffs, L: float) -> np.ndarray:
    """Coefficients of the s-antiderivative vanishing at s = 0.

    G_k = L*(a_{k-1} - a_{k+1})/(2k) for k >= 1 (a_{-1} read as 2*a_1's
    partner via c_0: the k=1 term is L*(2*a_0 - a_2)/2); G_0 fixed so the
    series evaluates to zero at the origin.  One degree is gained and
    dropped: exact for the integrand's interpolant.
    """
    a = np.asarray(coeffs)
    n = a.shape[-1] - 1
    g = np.zeros(a.shape[:-1] + (n + 2,), dtype=a.dtype)
    k = np.arange(1, n + 2)
    a_km1 = a[..., 0:n + 1]
    a_kp1 = np.zeros_like(g[..., :n + 1])
    a_kp1[..., : max(n - 1, 0)] = a[..., 2:]
    g[..., 1:] = L * (a_km1 - a_kp1) / (2.0 * k)
    g[..., 1] += L * a[..., 0] / 2.0  # c_0 = 2 on the a_0 feed-in
    g[..., 0] = -cheb_eval(g, 0.0)
    return g


def cheb_eval(coeffs, x):
    """Evaluate sum a_k T_k(x) at scaled points x in [-1, 1] (Clenshaw)."""
    a = np.asarray(coeffs)
    x = np.asarray(x, dtype=float)
    b1 = np.zeros(np.broadcast_shapes(a.shape[:-1], x.shape), dtype=a.dtype)
    b2 = np.zeros_like(b1)
    for k in range(a.shape[-1] - 1, 0, -1):
        b1, b2 = a[..., k] + 2.0 * x * b1 - b2, b1
    return a[..., 0] + x * b1 - b2


def spectral_interpolate(coeffs, source_L: float, target_nodes) -> np.ndarray:
    """Evaluate the series at arbitrary points of [-source_L, source_L]."""
    s = np.asarray(target_nodes, dtype=float)
    if np.any(np.abs(s) > source_L * (1.0 + 1e-12)):
        raise OutOfDomain("target node outside the source domain")
    x = np.clip(s / source_L, -1.0, 1.0)
    return cheb_eval(coeffs, x)


def spectral_filter(coeffs, eps: float = 1e-14) -> np.ndarray:
    """Zero every coefficient of modulus below eps (idempotent)."""
    a = np.asarray(coeffs).copy()
    a[np.abs(a) < eps] = 0.0
    return a


def boundary_values(coeffs):
    """(value at -L, value at +L) from coefficient sums T_k(-+1) = (-+1)^k."""
    a = np.asarray(coeffs)
    alt = np.ones(a.shape[-1])
    alt[1::2] = -1.0
    return (a * alt).sum(axis=-1), a.sum(axis=-1)


def boundary_derivatives(coeffs, L: float):
    """(z_s at -L, z_s at +L) via T_k'(-+1) = (-+1)^(k+1) k^2, scaled by 1/L."""
    a = np.asarray(coeffs)
    k2 = np.arange(a.shape[-1], dtype=float) ** 2
    alt = np.ones(a.shape[-1])
    alt[0::2] = -1.0
    return (a * alt * k2).sum(axis=-1) / L, (a * k2).sum(axis=-1) / L
