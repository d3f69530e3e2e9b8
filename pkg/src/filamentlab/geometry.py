"""Signed-metric linear algebra on R^3 and the stereographic bijection.

Every operation takes a :class:`Metric` selecting the Euclidean (+) or
hyperbolic (-) signature.  The signed products are

    a o b  =  a1*b1 + a2*b2 +- a3*b3
    a ^ b  =  (a2*b3 - a3*b2,  a3*b1 - a1*b3,  +-(a1*b2 - a2*b1))

so the Euclidean case reduces to the ordinary dot and cross products.
Unit tangents live on the sphere S^2 (T o+ T = +1) or on the upper
hyperboloid (T o- T = -1, T3 > 0); normal-frame vectors are spacelike
(e o e = +1) in both signatures.

Frame wedge relations (verified in the test suite from the definitions):
T ^ e1 = e2 in both signatures, while e1 ^ e2 = +T Euclidean and
e1 ^ e2 = -T hyperbolic, i.e. e1 ^ e2 carries the metric sign.

Stereographic projection is taken from (0,0,-1): it maps the sphere
minus that pole onto the plane, and the hyperboloid onto the open unit
(Poincare) disc.

Vectors are numpy arrays with a trailing axis of length 3; all
operations broadcast over leading axes and are pure functions.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .errors import DiscBoundary, NonNormalizable, ProjectionPole

# double-precision scale tolerances (see package docs)
NORMALIZE_TOL = 1e-14
POLE_TOL = 1e-12
DISC_TOL = 1e-12


class Metric(Enum):
    """Target-geometry selector: Euclidean sphere or hyperbolic plane."""

    EUCLIDEAN = 1
    HYPERBOLIC = -1

    @property
    def sign(self) -> float:
        """+1.0 for the Euclidean case, -1.0 for the hyperbolic one."""
        return float(self.value)


class NormTarget(Enum):
    """Which signed length :func:`normalize` should enforce."""

    PLUS_ONE = "plus_one"      # spacelike frame vectors e1, e2
    METRIC_SIGN = "metric"     # tangent T: +1 Euclidean, -1 hyperbolic


def dot_pm(a, b, metric: Metric):
    """Signed scalar product a1*b1 + a2*b2 +- a3*b3 (bilinear, not
    sesquilinear: complex inputs are not conjugated)."""
    a = np.asarray(a)
    b = np.asarray(b)
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + metric.sign * a[..., 2] * b[..., 2]


def wedge_pm(a, b, metric: Metric):
    """Signed cross product; the third component carries the metric sign."""
    a = np.asarray(a)
    b = np.asarray(b)
    out = np.empty(np.broadcast_shapes(a.shape, b.shape),
                   dtype=np.result_type(a.dtype, b.dtype, float))
    out[..., 0] = a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1]
    out[..., 1] = a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2]
    out[..., 2] = metric.sign * (a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0])
    return out


def normalize(v, target: NormTarget, metric: Metric, tol: float = NORMALIZE_TOL):
    """Rescale v so its signed length matches `target`, preserving direction.

    For METRIC_SIGN the radicand is sign * (v o v), which is positive on
    the correct branch in both signatures; for PLUS_ONE it is v o v
    itself.  Raises :class:`NonNormalizable` if any radicand falls below
    `tol` (frame degeneration) or is not finite.
    """
    v = np.asarray(v, dtype=float)
    q = dot_pm(v, v, metric)
    radicand = metric.sign * q if target is NormTarget.METRIC_SIGN else q
    bad = ~np.isfinite(radicand) | (radicand <= tol)
    if np.any(bad):
        finite = radicand[np.isfinite(radicand)]
        detail = f"min {finite.min():.3e}" if finite.size else "non-finite"
        raise NonNormalizable(
            f"radicand <= {tol} ({detail}) at {int(np.count_nonzero(bad))} node(s)"
        )
    return v / np.sqrt(radicand)[..., np.newaxis]


def stereo_project(t_vec, metric: Metric):
    """Project a unit tangent from (0,0,-1) to z = (T1 + i*T2)/(1 + T3).

    Returns complex values.  Raises :class:`ProjectionPole` when 1 + T3
    is not safely positive (Euclidean south pole; unreachable in
    hyperbolic mode where T3 > 0).
    """
    t_vec = np.asarray(t_vec, dtype=float)
    denom = 1.0 + t_vec[..., 2]
    if np.any(~np.isfinite(denom) | (denom <= POLE_TOL)):
        raise ProjectionPole("tangent at or beyond the projection pole T3 = -1")
    return (t_vec[..., 0] + 1j * t_vec[..., 1]) / denom


def stereo_inverse(z, metric: Metric):
    """Map complex z back to the unit tangent on S^2 or H^2.

    T = (2x, 2y, 1 -+ x^2 -+ y^2) / (1 +- x^2 +- y^2).  In hyperbolic
    mode z must lie strictly inside the unit disc
    (raises :class:`DiscBoundary` otherwise).
    """
    z = np.asarray(z, dtype=complex)
    x, y = z.real, z.imag
    r2 = x * x + y * y
    if metric is Metric.HYPERBOLIC and np.any(r2 >= 1.0 - DISC_TOL):
        raise DiscBoundary("value at or outside the Poincare disc boundary")
    denom = 1.0 + metric.sign * r2
    out = np.empty(z.shape + (3,), dtype=float)
    out[..., 0] = 2.0 * x / denom
    out[..., 1] = 2.0 * y / denom
    out[..., 2] = (1.0 - metric.sign * r2) / denom
    return out
