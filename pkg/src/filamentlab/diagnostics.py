"""Geometric observables and run reporting.

Curvature is c = sqrt(T_s o T_s) on tangent fields, or equivalently
c = 2|z_s| / (1 +- |z|^2) on stereographic fields; the generalized
torsion and the normal frame are likewise recoverable from (z, z_s,
z_ss).  The self-similar law c(s,t) = c0/sqrt(t), tau(s,t) = s/2t is the
reference for all error metrics.

:class:`RunReport` is the solvers' common output record: a parameter
block, probe records and an event log, serializable to JSON, plus CSV
emitters for the individual observables.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FrameDegenerate
from .geometry import Metric, stereo_inverse, wedge_pm

ZS_TINY = 1e-12  # below this |z_s| the frame/torsion are undefined


@dataclass
class CurvatureProfile:
    """Nonnegative generalized curvature samples c(s) at one time."""

    s: np.ndarray
    c: np.ndarray
    t: float
    clamped: int = 0  # nodes where a rounding-negative radicand was clamped


def curvature_from_T(T, ds: float, metric: Metric, t: float = 0.0) -> CurvatureProfile:
    """Curvature of a uniform-grid tangent field by finite differences.

    Centered second-order differences inside, one-sided second-order at
    the two ends.  A hyperbolic radicand that rounds negative is clamped
    to zero and counted in `clamped`.
    """
    T = np.asarray(T, dtype=float)
    n = T.shape[0]
    if n < 3:
        raise ValueError("need at least 3 nodes")
    Ts = np.empty_like(T)
    Ts[1:-1] = (T[2:] - T[:-2]) / (2.0 * ds)
    Ts[0] = (-3.0 * T[0] + 4.0 * T[1] - T[2]) / (2.0 * ds)
    Ts[-1] = (3.0 * T[-1] - 4.0 * T[-2] + T[-3]) / (2.0 * ds)
    q = Ts[:, 0] ** 2 + Ts[:, 1] ** 2 + metric.sign * Ts[:, 2] ** 2
    clamped = int(np.count_nonzero(q < 0))
    s = (np.arange(n) - (n - 1) // 2) * ds
    return CurvatureProfile(s=s, c=np.sqrt(np.maximum(q, 0.0)), t=t, clamped=clamped)


def curvature_from_z(z, z_s, metric: Metric, s=None, t: float = 0.0) -> CurvatureProfile:
    """Curvature 2|z_s| / (1 +- |z|^2) pointwise."""
    z = np.asarray(z)
    z_s = np.asarray(z_s)
    c = 2.0 * np.abs(z_s) / (1.0 + metric.sign * np.abs(z) ** 2)
    if s is None:
        s = np.arange(z.shape[-1], dtype=float)
    return CurvatureProfile(s=np.asarray(s, dtype=float), c=c, t=t)


def torsion_from_z(z, z_s, z_ss, metric: Metric) -> np.ndarray:
    """Generalized torsion 2 Im(z conj(z_s))/(|z|^2 +- 1) + Im(conj(z_s) z_ss)/|z_s|^2.

    Nodes with |z_s| <= 1e-12 get a NaN sentinel (torsion undefined at
    zero curvature).
    """
    z = np.asarray(z)
    z_s = np.asarray(z_s)
    z_ss = np.asarray(z_ss)
    mod2 = np.abs(z_s) ** 2
    ok = mod2 > ZS_TINY ** 2
    tau = np.full(z.shape, np.nan)
    first = 2.0 * np.imag(z * np.conj(z_s)) / (np.abs(z) ** 2 + metric.sign)
    with np.errstate(invalid="ignore", divide="ignore"):
        second = np.imag(np.conj(z_s) * z_ss) / mod2
    tau[ok] = first[ok] + second[ok]
    return tau


def frame_from_z(z, z_s, metric: Metric):
    """Normal frame (e1, e2) from the stereographic field.

    e1 = T_s / c in closed form; e2 = T ^ e1 with T the inverse
    projection.  Raises :class:`FrameDegenerate` if |z_s| vanishes at
    any requested node.
    """
    z = np.asarray(z)
    z_s = np.asarray(z_s)
    if np.any(np.abs(z_s) <= ZS_TINY):
        raise FrameDegenerate("|z_s| ~ 0: normal direction undefined")
    sg = metric.sign
    x, y = z.real, z.imag
    xs, ys = z_s.real, z_s.imag
    rho = 1.0 + sg * (x * x + y * y)
    mod = np.abs(z_s)
    e1 = np.empty(z.shape + (3,))
    e1[..., 0] = (xs * (1.0 - sg * x * x + sg * y * y) - sg * 2.0 * x * y * ys) / (rho * mod)
    e1[..., 1] = (ys * (1.0 + sg * x * x - sg * y * y) - sg * 2.0 * x * y * xs) / (rho * mod)
    e1[..., 2] = (-sg * 2.0 * (x * xs + y * ys)) / (rho * mod)
    e2 = wedge_pm(stereo_inverse(z, metric), e1, metric)
    return e1, e2


def energy_trapezoid(profile: CurvatureProfile) -> float:
    """Trapezoidal integral of c^2 over the profile's node set.

    Uses the actual node spacings, so it applies to uniform and
    Chebyshev grids alike (nodes may be in decreasing order).
    """
    s = profile.s
    if s[0] > s[-1]:
        return float(np.trapezoid(profile.c[::-1] ** 2, s[::-1]))
    return float(np.trapezoid(profile.c ** 2, s))


def staggered_dirichlet_energy(T, ds: float, metric: Metric) -> float:
    """Discrete Dirichlet energy sum |T_{i+1} - T_i|^2 / ds.

    This staggered form is the invariant the explicit tangent-flow
    discretization conserves exactly in the semi-discrete limit, so it
    is the quantity the solver reports for conservation checks.
    """
    d = np.diff(np.asarray(T, dtype=float), axis=0)
    q = d[:, 0] ** 2 + d[:, 1] ** 2 + metric.sign * d[:, 2] ** 2
    return float(q.sum() / ds)


def plateau_front(profile: CurvatureProfile, c_ref: float) -> float:
    """Edge of the contiguous curvature plateau around s = 0.

    Scanning outward from the center, the front is the last |s| before
    the curvature first drops below half of `c_ref`; dispersive
    precursors beyond that crossing are ignored.  Works on uniform and
    Chebyshev node sets.
    """
    order = np.argsort(profile.s)
    s = profile.s[order]
    below = profile.c[order] < 0.5 * c_ref
    ic = int(np.argmin(np.abs(s)))

    def edge(mask, coords):
        if not mask.any():
            return abs(coords[-1])
        k = int(np.argmax(mask))  # first node below half the reference
        return abs(coords[k - 1]) if k > 0 else 0.0

    return min(edge(below[ic:], s[ic:]), edge(below[ic::-1], s[ic::-1]))


@dataclass
class CurvatureErrors:
    max_abs: float
    l2: float
    at_origin: float


def curvature_error(profile: CurvatureProfile, c0: float, t: float,
                    window: float | None = None) -> CurvatureErrors:
    """Errors of a curvature profile against the exact law c0/sqrt(t).

    `window` restricts to |s| <= window; the l2 value is the RMS error
    over the window; at_origin is the error at the s = 0 node.
    """
    c_exact = c0 / math.sqrt(t)
    s, c = profile.s, profile.c
    if window is not None:
        mask = np.abs(s) <= window + 1e-12
        s, c = s[mask], c[mask]
    err = c - c_exact
    order = np.argsort(s)
    l2 = math.sqrt(np.trapezoid(err[order] ** 2, s[order]) / (s.max() - s.min()))
    i0 = int(np.argmin(np.abs(s)))
    return CurvatureErrors(max_abs=float(np.max(np.abs(err))), l2=l2,
                           at_origin=float(abs(err[i0])))


# ---------------------------------------------------------------------------
# Run reporting
# ---------------------------------------------------------------------------

@dataclass
class ProbeRecord:
    """One observation of a run: curvature profile plus scalar summaries."""

    t: float
    c: np.ndarray
    c_origin: float
    energy: float
    max_c: float
    N: int | None = None
    dt: float | None = None
    spectrum: np.ndarray | None = None  # |a_k| snapshot (spectral runs)

    def to_dict(self):
        d = {
            "t": self.t,
            "c": [float(v) for v in self.c],
            "c_origin": self.c_origin,
            "energy": self.energy,
            "max_c": self.max_c,
        }
        if self.N is not None:
            d["N"] = self.N
        if self.dt is not None:
            d["dt"] = self.dt
        if self.spectrum is not None:
            d["spectrum"] = [float(v) for v in self.spectrum]
        return d


@dataclass
class RunReport:
    """Parameters, probe records and events of one solver run."""

    params: dict
    probes: list = field(default_factory=list)
    events: list = field(default_factory=list)
    final_state: object = None  # not serialized

    def add_event(self, kind: str, **info):
        self.events.append({"kind": kind, **info})

    def event_times(self, kind: str):
        return [e["t"] for e in self.events if e["kind"] == kind and "t" in e]

    def has_event(self, kind: str) -> bool:
        return any(e["kind"] == kind for e in self.events)

    def to_dict(self):
        return {
            "params": self.params,
            "probes": [p.to_dict() for p in self.probes],
            "events": self.events,
        }

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")


def write_columns_csv(path, header: str, *columns):
    """CSV emitter with 17 significant digits per column."""
    np.savetxt(path, np.column_stack(columns), delimiter=",",
               header=header, comments="", fmt="%.17g")
