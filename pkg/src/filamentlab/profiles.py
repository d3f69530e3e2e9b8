"""Exact self-similar initial data.

The family is parametrized by c0 >= 0 (the curvature at unit time).  At
time t the generalized Frenet frame of the profile solves the linear
system

    T'  =  (c0/sqrt(t)) e1
    e1' = -+(c0/sqrt(t)) T + (s/2t) e2
    e2' = -(s/2t) e1

with T(0) = (0,0,1), e1(0) = (1,0,0), e2(0) = (0,1,0), where -+ is minus
in the Euclidean case and plus in the hyperbolic one.  The curve itself
is anchored at X(0,t) = 2*c0*sqrt(t)*(0,1,0).  The stereographic image
g(s) = z(s,t) solves

    g'' = i (s/2t) g' +- 2 conj(g) / (1 +- |g|^2) * g'^2,
    g(0) = 0,  g'(0) = c0 / (2 sqrt(t)),

with g antisymmetric in s.  Both systems are integrated outward from
s = 0 with classical RK4 (frame vectors renormalized after every step),
either on a uniform grid or to an arbitrary node set with a fine
internal step.

As |s| -> oo the tangent approaches limit directions A(+-) with
third component exp(-+ c0^2 pi / 2), and the rotating normal frame
approaches (e1 - i e2) ~ B(+-) e^{i s^2/4t} e^{+- i c0^2 log(|s|/sqrt t)};
:func:`extract_asymptotics` recovers these constants from an integrated
profile, and :func:`asymptotic_bc_constants` packages the boundary-value
form used by the solvers' second-order boundary conditions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DiscBoundary, InsufficientDomain, NonNormalizable, TooFewNodes
from .geometry import Metric, NormTarget, dot_pm, normalize

DS_INTERNAL = 1e-3  # fine marching step for datum generation at arbitrary nodes


@dataclass(frozen=True)
class SelfSimilarParams:
    """Family parameter c0 >= 0, profile time t > 0 and target metric."""

    c0: float
    t: float = 1.0
    metric: Metric = Metric.EUCLIDEAN

    def __post_init__(self):
        if self.c0 < 0:
            raise ValueError("c0 must be >= 0")
        if self.t <= 0:
            raise ValueError("t must be > 0")

    @property
    def curvature(self) -> float:
        """The profile's constant generalized curvature c0/sqrt(t)."""
        return self.c0 / math.sqrt(self.t)


@dataclass
class FrameProfile:
    """Frenet frames of the self-similar profile on a uniform grid."""

    s: np.ndarray
    T: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    c0: float
    t: float
    metric: Metric

    def frenet_curvature(self) -> np.ndarray:
        """Curvature sqrt(T_s o T_s) with T_s taken from the frame system.

        T_s = (c0/sqrt t) e1 along the profile, so this measures the
        integrated normal's signed length; it is the profile's own
        curvature, free of any differencing bias.
        """
        ee = dot_pm(self.e1, self.e1, self.metric)
        return (self.c0 / math.sqrt(self.t)) * np.sqrt(ee)

    def to_csv(self, path):
        header = "s,T1,T2,T3,e11,e12,e13,e21,e22,e23"
        data = np.column_stack([self.s, self.T, self.e1, self.e2])
        np.savetxt(path, data, delimiter=",", header=header, comments="",
                   fmt="%.17g")


@dataclass
class ZProfile:
    """Stereographic profile samples g(s) = z(s, t) plus g' on a node set."""

    s: np.ndarray
    values: np.ndarray
    deriv: np.ndarray
    c0: float
    t: float
    metric: Metric

    def to_csv(self, path):
        data = np.column_stack([self.s, self.values.real, self.values.imag])
        np.savetxt(path, data, delimiter=",", header="s,Re z,Im z",
                   comments="", fmt="%.17g")


@dataclass
class AsymptoticConstants:
    """Limit directions A(+-) and frame constants B(+-) of a profile."""

    A_plus: np.ndarray
    A_minus: np.ndarray
    B_plus: np.ndarray
    B_minus: np.ndarray


@dataclass
class CurveSamples:
    """Reconstructed filament positions X(s, t) on a uniform grid."""

    s: np.ndarray
    points: np.ndarray
    t: float

    def to_csv(self, path):
        data = np.column_stack([self.s, self.points])
        np.savetxt(path, data, delimiter=",", header="s,X1,X2,X3",
                   comments="", fmt="%.17g")


# ---------------------------------------------------------------------------
# Frenet frame integration
# ---------------------------------------------------------------------------

def _frame_march(p: SelfSimilarParams, targets, ds_int):
    """March the frame system from s = 0 to each target (same-sign, sorted
    by increasing |s|, first target may be 0).  Scalar arithmetic: the
    loop is sequential and dominates datum generation cost."""
    c = p.c0 / math.sqrt(p.t)
    mu = -p.metric.sign * c          # e1' coefficient on T
    inv2t = 0.5 / p.t
    sgn3 = p.metric.sign

    tx, ty, tz = 0.0, 0.0, 1.0
    ax, ay, az = 1.0, 0.0, 0.0
    bx, by, bz = 0.0, 1.0, 0.0
    out = np.empty((len(targets), 9))
    s = 0.0
    for m, target in enumerate(targets):
        gap = target - s
        nsub = max(1, math.ceil(abs(gap) / ds_int)) if gap != 0.0 else 0
        h = gap / nsub if nsub else 0.0
        for _ in range(nsub):
            # RK4 on the 9-component linear system
            w1 = (s + 0.5 * h) * inv2t
            w0 = s * inv2t
            w2 = (s + h) * inv2t

            k1t_x, k1t_y, k1t_z = c * ax, c * ay, c * az
            k1a_x = mu * tx + w0 * bx
            k1a_y = mu * ty + w0 * by
            k1a_z = mu * tz + w0 * bz
            k1b_x, k1b_y, k1b_z = -w0 * ax, -w0 * ay, -w0 * az

            t2x, t2y, t2z = tx + 0.5 * h * k1t_x, ty + 0.5 * h * k1t_y, tz + 0.5 * h * k1t_z
            a2x, a2y, a2z = ax + 0.5 * h * k1a_x, ay + 0.5 * h * k1a_y, az + 0.5 * h * k1a_z
            b2x, b2y, b2z = bx + 0.5 * h * k1b_x, by + 0.5 * h * k1b_y, bz + 0.5 * h * k1b_z
            k2t_x, k2t_y, k2t_z = c * a2x, c * a2y, c * a2z
            k2a_x = mu * t2x + w1 * b2x
            k2a_y = mu * t2y + w1 * b2y
            k2a_z = mu * t2z + w1 * b2z
            k2b_x, k2b_y, k2b_z = -w1 * a2x, -w1 * a2y, -w1 * a2z

            t3x, t3y, t3z = tx + 0.5 * h * k2t_x, ty + 0.5 * h * k2t_y, tz + 0.5 * h * k2t_z
            a3x, a3y, a3z = ax + 0.5 * h * k2a_x, ay + 0.5 * h * k2a_y, az + 0.5 * h * k2a_z
            b3x, b3y, b3z = bx + 0.5 * h * k2b_x, by + 0.5 * h * k2b_y, bz + 0.5 * h * k2b_z
            k3t_x, k3t_y, k3t_z = c * a3x, c * a3y, c * a3z
            k3a_x = mu * t3x + w1 * b3x
            k3a_y = mu * t3y + w1 * b3y
            k3a_z = mu * t3z + w1 * b3z
            k3b_x, k3b_y, k3b_z = -w1 * a3x, -w1 * a3y, -w1 * a3z

            t4x, t4y, t4z = tx + h * k3t_x, ty + h * k3t_y, tz + h * k3t_z
            a4x, a4y, a4z = ax + h * k3a_x, ay + h * k3a_y, az + h * k3a_z
            b4x, b4y, b4z = bx + h * k3b_x, by + h * k3b_y, bz + h * k3b_z
            k4t_x, k4t_y, k4t_z = c * a4x, c * a4y, c * a4z
            k4a_x = mu * t4x + w2 * b4x
            k4a_y = mu * t4y + w2 * b4y
            k4a_z = mu * t4z + w2 * b4z
            k4b_x, k4b_y, k4b_z = -w2 * a4x, -w2 * a4y, -w2 * a4z

            h6 = h / 6.0
            tx += h6 * (k1t_x + 2 * (k2t_x + k3t_x) + k4t_x)
            ty += h6 * (k1t_y + 2 * (k2t_y + k3t_y) + k4t_y)
            tz += h6 * (k1t_z + 2 * (k2t_z + k3t_z) + k4t_z)
            ax += h6 * (k1a_x + 2 * (k2a_x + k3a_x) + k4a_x)
            ay += h6 * (k1a_y + 2 * (k2a_y + k3a_y) + k4a_y)
            az += h6 * (k1a_z + 2 * (k2a_z + k3a_z) + k4a_z)
            bx += h6 * (k1b_x + 2 * (k2b_x + k3b_x) + k4b_x)
            by += h6 * (k1b_y + 2 * (k2b_y + k3b_y) + k4b_y)
            bz += h6 * (k1b_z + 2 * (k2b_z + k3b_z) + k4b_z)
            s += h

            # renormalize: T to the metric sign, e1/e2 to +1
            qt = sgn3 * (tx * tx + ty * ty + sgn3 * tz * tz)
            qa = ax * ax + ay * ay + sgn3 * az * az
            qb = bx * bx + by * by + sgn3 * bz * bz
            if not (qt > 0.0 and qa > 0.0 and qb > 0.0):
                raise NonNormalizable(f"frame degenerated near s = {s:.6g}")
            rt, ra, rb = qt ** -0.5, qa ** -0.5, qb ** -0.5
            tx, ty, tz = tx * rt, ty * rt, tz * rt
            ax, ay, az = ax * ra, ay * ra, az * ra
            bx, by, bz = bx * rb, by * rb, bz * rb
        s = target
        out[m] = (tx, ty, tz, ax, ay, az, bx, by, bz)
    return out


def frenet_frames_at(p: SelfSimilarParams, nodes, ds_int: float = DS_INTERNAL):
    """Frame triads of the profile at arbitrary nodes (any order)."""
    nodes = np.asarray(nodes, dtype=float)
    order = np.argsort(np.abs(nodes), kind="stable")
    frames = np.empty((nodes.size, 9))
    for sign in (1.0, -1.0):
        sel = order[(nodes[order] >= 0) if sign > 0 else (nodes[order] < 0)]
        if sel.size:
            frames[sel] = _frame_march(p, nodes[sel], ds_int)
    T = frames[:, 0:3]
    e1 = frames[:, 3:6]
    e2 = frames[:, 6:9]
    return T, e1, e2


def integrate_frenet_profile(p: SelfSimilarParams, L: float, ds: float) -> FrameProfile:
    """Profile frames on the uniform grid s = -L..L; RK4 step equals ds."""
    if not (0 < ds <= L):
        raise ValueError("need 0 < ds <= L")
    half = L / ds
    if abs(half - round(half)) > 1e-9:
        raise ValueError("ds must divide L")
    n_half = int(round(half))
    s = np.arange(-n_half, n_half + 1) * ds
    T, e1, e2 = frenet_frames_at(p, s, ds_int=ds)
    return FrameProfile(s=s, T=T, e1=e1, e2=e2, c0=p.c0, t=p.t, metric=p.metric)


def closed_form_A3(c0: float, metric: Metric) -> float:
    """Third component of the limit tangents: exp(-+ c0^2 pi / 2)."""
    return math.exp(-metric.sign * 0.5 * c0 * c0 * math.pi)


def extract_asymptotics(fp: FrameProfile) -> AsymptoticConstants:
    """Read the limit constants off an integrated profile.

    A(+-) is the boundary tangent with the known first-order term
    2 c0 sqrt(t) e2 / s removed and then renormalized; B(+-) is the
    rotating frame with the quadratic and logarithmic phases stripped,
    projected orthogonal to A (the raw limit has an O(1/L) defect).
    """
    L = float(fp.s[-1])
    if L < 20:
        raise InsufficientDomain(f"need L >= 20 for asymptotics, got L = {L}")
    m = fp.metric
    sqrt_t = math.sqrt(fp.t)
    out = {}
    for which, idx, s_end in (("plus", -1, L), ("minus", 0, -L)):
        A_raw = fp.T[idx] + 2.0 * fp.c0 * sqrt_t * fp.e2[idx] / s_end
        A = normalize(A_raw, NormTarget.METRIC_SIGN, m)
        sigma = abs(s_end) / sqrt_t
        phase = np.exp(-1j * sigma * sigma / 4.0 - 1j * m.sign * fp.c0 ** 2 * math.log(sigma))
        B_raw = (fp.e1[idx] - 1j * fp.e2[idx]) * phase
        B = B_raw - (dot_pm(A, B_raw, m) / dot_pm(A, A, m)) * A
        out[which] = (A, B)
    return AsymptoticConstants(A_plus=out["plus"][0], A_minus=out["minus"][0],
                               B_plus=out["plus"][1], B_minus=out["minus"][1])


def asymptotic_bc_constants(T_pm, e1_pm, e2_pm, c0: float, t0: float, L: float) -> AsymptoticConstants:
    """Boundary-condition constants from the frames at s = -L and +L.

    A~(+-) = T(+-L) +- 2 c0 sqrt(t0) e2(+-L) / L  (plus at +L, minus at -L),
    B~(+-) = (e1 - i e2)(+-L) e^{-i L^2 / 4 t0};
    the logarithmic phase stays absorbed in B~, which is computed once at
    the start time.  `T_pm` etc. are (minus, plus) pairs of vectors.
    """
    corr = 2.0 * c0 * math.sqrt(t0) / L
    A_minus = T_pm[0] - corr * e2_pm[0]
    A_plus = T_pm[1] + corr * e2_pm[1]
    phase = np.exp(-1j * L * L / (4.0 * t0))
    B_minus = (e1_pm[0] - 1j * e2_pm[0]) * phase
    B_plus = (e1_pm[1] - 1j * e2_pm[1]) * phase
    return AsymptoticConstants(A_plus=A_plus, A_minus=A_minus,
                               B_plus=B_plus, B_minus=B_minus)


def second_order_tangents(cst: AsymptoticConstants, c0: float, L: float,
                          t: float, metric: Metric):
    """Second-order boundary tangents at time t, signed unit length.

    T~(+L) = A+ + 2 c0 sqrt(t) Im[B+ e^{i L^2/4t}] / L and the mirrored
    sign at -L; Im[B e^{i L^2/4t}] reconstructs -e2 at the boundary, so
    at t = t0 these reproduce the profile's own boundary tangents
    exactly.  Returns (T at -L, T at +L).
    """
    phase = complex(np.exp(1j * L * L / (4.0 * t)))
    corr = 2.0 * c0 * math.sqrt(t) / L
    t_plus = cst.A_plus + corr * np.imag(cst.B_plus * phase)
    t_minus = cst.A_minus - corr * np.imag(cst.B_minus * phase)
    t_plus = normalize(t_plus, NormTarget.METRIC_SIGN, metric)
    t_minus = normalize(t_minus, NormTarget.METRIC_SIGN, metric)
    return t_minus, t_plus


# ---------------------------------------------------------------------------
# Stereographic profile integration
# ---------------------------------------------------------------------------

def _z_march(p: SelfSimilarParams, targets, ds_int):
    """March (g, g') from s = 0 to nonnegative sorted targets."""
    sgn = p.metric.sign
    inv2t = 0.5 / p.t

    def rhs(s, g, gp):
        denom = 1.0 + sgn * (g.real * g.real + g.imag * g.imag)
        if sgn < 0 and denom <= 1e-12:
            raise DiscBoundary(f"profile reached the disc boundary near s = {s:.6g}")
        return gp, (1j * s * inv2t) * gp + (sgn * 2.0 * g.conjugate() / denom) * gp * gp

    g = 0.0 + 0.0j
    gp = complex(p.c0 / (2.0 * math.sqrt(p.t)))
    out = np.empty((len(targets), 2), dtype=complex)
    s = 0.0
    for m, target in enumerate(targets):
        gap = target - s
        nsub = max(1, math.ceil(abs(gap) / ds_int)) if gap != 0.0 else 0
        h = gap / nsub if nsub else 0.0
        for _ in range(nsub):
            k1g, k1p = rhs(s, g, gp)
            k2g, k2p = rhs(s + 0.5 * h, g + 0.5 * h * k1g, gp + 0.5 * h * k1p)
            k3g, k3p = rhs(s + 0.5 * h, g + 0.5 * h * k2g, gp + 0.5 * h * k2p)
            k4g, k4p = rhs(s + h, g + h * k3g, gp + h * k3p)
            g = g + (h / 6.0) * (k1g + 2.0 * (k2g + k3g) + k4g)
            gp = gp + (h / 6.0) * (k1p + 2.0 * (k2p + k3p) + k4p)
            s += h
        s = target
        out[m, 0] = g
        out[m, 1] = gp
    return out


def z_profile_at(p: SelfSimilarParams, nodes, ds_int: float = DS_INTERNAL) -> ZProfile:
    """Profile g(s) = z(s, t) at arbitrary nodes; g(-s) = -g(s) by symmetry."""
    nodes = np.asarray(nodes, dtype=float)
    flat_abs = np.abs(nodes)
    order = np.argsort(flat_abs, kind="stable")
    res = _z_march(p, flat_abs[order], ds_int)
    values = np.empty(nodes.size, dtype=complex)
    deriv = np.empty(nodes.size, dtype=complex)
    values[order] = res[:, 0]
    deriv[order] = res[:, 1]
    neg = nodes < 0
    values[neg] = -values[neg]          # g antisymmetric, g' even
    values[nodes == 0] = 0.0
    return ZProfile(s=nodes, values=values, deriv=deriv,
                    c0=p.c0, t=p.t, metric=p.metric)


def integrate_profile_z(p: SelfSimilarParams, L: float, ds: float) -> ZProfile:
    """Profile on the uniform grid -L..L; RK4 step equals ds."""
    half = L / ds
    if abs(half - round(half)) > 1e-9:
        raise ValueError("ds must divide L")
    n_half = int(round(half))
    s = np.arange(-n_half, n_half + 1) * ds
    return z_profile_at(p, s, ds_int=ds)


def z_second_derivative(prof: ZProfile) -> np.ndarray:
    """g'' evaluated from the profile system (exact on the trajectory)."""
    sgn = prof.metric.sign
    g, gp = prof.values, prof.deriv
    denom = 1.0 + sgn * np.abs(g) ** 2
    return (1j * prof.s / (2.0 * prof.t)) * gp + sgn * 2.0 * np.conj(g) / denom * gp * gp


# ---------------------------------------------------------------------------
# Curve reconstruction
# ---------------------------------------------------------------------------

# 4-point quadrature of the interpolant over one spacing, offsets relative
# to the step's start node: preferred stencil, then the inward-shifted ones
# used where the preferred one would overrun the grid.
_QUAD = (
    (np.array([0, 1, 2, 3]), np.array([9.0, 19.0, -5.0, 1.0]) / 24.0),
    (np.array([-1, 0, 1, 2]), np.array([-1.0, 13.0, 13.0, -1.0]) / 24.0),
    (np.array([-2, -1, 0, 1]), np.array([1.0, -5.0, 19.0, 9.0]) / 24.0),
)


def reconstruct_X(T, p: SelfSimilarParams, ds: float) -> CurveSamples:
    """Integrate X_s = T outward from the anchor X(0) = 2 c0 sqrt(t) (0,1,0).

    Marching quadrature is 4th order; near the far ends the stencil is
    shifted inward to keep the order.  The node count must be odd with
    the center node at s = 0.
    """
    T = np.asarray(T, dtype=float)
    n = T.shape[0]
    if n < 4:
        raise TooFewNodes("reconstruction needs at least 4 nodes")
    ic = (n - 1) // 2
    X = np.empty_like(T)
    X[ic] = 2.0 * p.c0 * math.sqrt(p.t) * np.array([0.0, 1.0, 0.0])
    for direction in (+1, -1):
        i = ic
        while 0 <= i + direction < n:
            for offsets, w in _QUAD:
                idx = i + direction * offsets
                if idx.min() >= 0 and idx.max() < n:
                    break
            else:
                raise TooFewNodes("no valid quadrature stencil")
            X[i + direction] = X[i] + direction * ds * (w[:, None] * T[idx]).sum(axis=0)
            i += direction
    s = (np.arange(n) - ic) * ds
    return CurveSamples(s=s, points=X, t=p.t)
