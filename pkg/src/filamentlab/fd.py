"""Explicit finite-difference solver for the tangent flow T_t = T ^ T_ss.

Space is discretized on a uniform grid with the standard centered second
difference, time with classical RK4; every accepted step renormalizes
the tangents to their signed unit length.  Empirically the scheme needs
|dt| <~ 0.7 ds^2; a larger step raises :class:`StabilityViolation` as a
warning so the instability is reproducible on purpose.

Two boundary treatments: freezing the initial boundary tangents, or the
second-order asymptotic values

    T(+L, t) = A+ + 2 c0 sqrt(t) Im[B+ e^{i L^2/4t}] / L
    T(-L, t) = A- - 2 c0 sqrt(t) Im[B- e^{i L^2/4t}] / L

renormalized to signed unit length (Im[B e^{...}] equals -e2 at the
boundary, so these are the leading corrections of the profile's tangent
asymptotics).  Boundary nodes hold their start-of-step values during
RK4 substages and are overwritten at t + dt.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .diagnostics import (ProbeRecord, RunReport, curvature_from_T,
                          plateau_front, staggered_dirichlet_energy)
from .errors import NonNormalizable, StabilityViolation
from .geometry import Metric, NormTarget, normalize, wedge_pm
from .profiles import (AsymptoticConstants, SelfSimilarParams,
                       asymptotic_bc_constants, closed_form_A3,
                       frenet_frames_at, second_order_tangents)

STABILITY_FACTOR = 0.7  # empirical |dt| / ds^2 bound


@dataclass(frozen=True)
class UniformGrid:
    """N equal subintervals of [-L, L]; N even so s = 0 is a node."""

    L: float
    N: int

    def __post_init__(self):
        if self.N < 4 or self.N % 2 != 0:
            raise ValueError(f"N must be even and >= 4, got {self.N}")

    @property
    def ds(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def nodes(self) -> np.ndarray:
        return -self.L + np.arange(self.N + 1) * self.ds

    @classmethod
    def from_spacing(cls, L: float, ds: float) -> "UniformGrid":
        n = int(round(2.0 * L / ds))
        if abs(n * ds - 2.0 * L) > 1e-9 * L or n % 2 != 0:
            raise ValueError("ds must divide 2L into an even node count")
        return cls(L=L, N=n)


@dataclass
class TFieldState:
    """Tangent field on a uniform grid at one instant."""

    grid: UniformGrid
    T: np.ndarray
    t: float
    metric: Metric


class FdBcKind(Enum):
    FIXED_FIRST_ORDER = "fixed"
    ASYMPTOTIC_SECOND_ORDER = "asymptotic"


@dataclass
class FdBoundaryCondition:
    kind: FdBcKind
    constants: AsymptoticConstants
    c0: float = 0.0


def fd_rhs(state: TFieldState) -> np.ndarray:
    """T ^ D+- T at interior nodes; zero rows at the two boundary nodes
    (their values are imposed by the boundary condition after the step)."""
    T = state.T
    inv_ds2 = 1.0 / state.grid.ds ** 2
    out = np.zeros_like(T)
    lap = (T[2:] - 2.0 * T[1:-1] + T[:-2]) * inv_ds2
    out[1:-1] = wedge_pm(T[1:-1], lap, state.metric)
    return out


def fd_apply_bc(state: TFieldState, bc: FdBoundaryCondition, t_new: float):
    """Boundary tangents (at -L, at +L) for time t_new."""
    cst = bc.constants
    if bc.kind is FdBcKind.FIXED_FIRST_ORDER:
        return cst.A_minus.copy(), cst.A_plus.copy()
    return second_order_tangents(cst, bc.c0, state.grid.L, t_new, state.metric)


def fd_step(state: TFieldState, dt: float, bc: FdBoundaryCondition) -> TFieldState:
    """One RK4 step; boundary overwrite at t + dt; renormalize everywhere."""
    ds = state.grid.ds
    if abs(dt) > STABILITY_FACTOR * ds * ds * (1.0 + 1e-12):
        warnings.warn(f"|dt| = {abs(dt):.3e} exceeds {STABILITY_FACTOR}*ds^2 "
                      f"= {STABILITY_FACTOR * ds * ds:.3e}", StabilityViolation,
                      stacklevel=2)
    inv_ds2 = 1.0 / (ds * ds)
    metric = state.metric

    def rhs(T):
        out = np.zeros_like(T)
        out[1:-1] = wedge_pm(T[1:-1], (T[2:] - 2.0 * T[1:-1] + T[:-2]) * inv_ds2, metric)
        return out

    T = state.T
    with np.errstate(over="ignore", invalid="ignore"):
        k1 = rhs(T)
        k2 = rhs(T + (0.5 * dt) * k1)
        k3 = rhs(T + (0.5 * dt) * k2)
        k4 = rhs(T + dt * k3)
        T_new = T + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
    t_new = state.t + dt
    b_minus, b_plus = fd_apply_bc(state, bc, t_new)
    T_new[0] = b_minus
    T_new[-1] = b_plus
    T_new = normalize(T_new, NormTarget.METRIC_SIGN, metric)
    return TFieldState(grid=state.grid, T=T_new, t=t_new, metric=metric)


def corner_tangents(c0: float, metric: Metric):
    """The corner datum's limit tangents (A1 for s > 0, A2 for s < 0):
    A1 = (sqrt(+-(1 - e^{-+c0^2 pi})), 0, e^{-+c0^2 pi/2}), A2 mirrors the
    first component."""
    sg = metric.sign
    a3 = closed_form_A3(c0, metric)
    a1 = math.sqrt(max(sg * (1.0 - a3 * a3), 0.0))
    return (np.array([a1, 0.0, a3]), np.array([-a1, 0.0, a3]))


# ---------------------------------------------------------------------------
# Runs
# ---------------------------------------------------------------------------

def _probe(state: TFieldState, report: RunReport):
    prof = curvature_from_T(state.T, state.grid.ds, state.metric, t=state.t)
    energy = staggered_dirichlet_energy(state.T, state.grid.ds, state.metric)
    i0 = state.grid.N // 2
    report.probes.append(ProbeRecord(
        t=state.t, c=prof.c, c_origin=float(prof.c[i0]), energy=energy,
        max_c=float(prof.c.max()), N=state.grid.N))
    return prof




class _ProbeSchedule:
    """Snap probe times to the nearest completed step, in run direction."""

    def __init__(self, probe_times, direction: int):
        self.pending = sorted(probe_times or [], reverse=(direction < 0))
        self.direction = direction

    def due(self, t_prev: float, t_new: float):
        hits = []
        while self.pending:
            tp = self.pending[0]
            passed = t_new <= tp + 1e-12 if self.direction < 0 else t_new >= tp - 1e-12
            if not passed:
                break
            hits.append((tp, abs(t_prev - tp) < abs(t_new - tp)))
            self.pending.pop(0)
        return hits


def _run_loop(state: TFieldState, dt: float, bc: FdBoundaryCondition,
              t_end: float, probe_times, report: RunReport,
              watch_front: bool = False, c0: float = 0.0):
    direction = -1 if dt < 0 else 1
    sched = _ProbeSchedule(probe_times, direction)
    for tp, _ in sched.due(state.t, state.t):
        _probe(state, report)
    n_steps = max(0, int(round((t_end - state.t) / dt)))
    t0 = state.t
    touched = report.has_event("boundary_touch")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("once", StabilityViolation)
        for k in range(1, n_steps + 1):
            prev = state
            try:
                state = fd_step(state, dt, bc)
            except NonNormalizable:
                report.add_event("blow_up", t=prev.t)
                state = prev
                break
            state.t = t0 + k * dt  # suppress accumulation drift
            if not np.isfinite(state.T).all():
                report.add_event("blow_up", t=state.t)
                break
            hits = sched.due(prev.t, state.t)
            if hits:
                use_prev = all(h[1] for h in hits)
                prof = _probe(prev if use_prev else state, report)
                if watch_front and not touched:
                    tt = (prev if use_prev else state).t
                    front = plateau_front(prof, c0 / math.sqrt(tt))
                    if front >= 0.95 * state.grid.L:
                        report.add_event("boundary_touch", t=tt)
                        touched = True
    if caught:
        report.add_event("stability_warning", t=state.t,
                         count=len(caught), message=str(caught[0].message))
    if not report.probes or abs(report.probes[-1].t - state.t) > 1e-12:
        _probe(state, report)
    report.final_state = state
    return report


def fd_run_backward(p: SelfSimilarParams, grid: UniformGrid, dt: float,
                    bc_kind: FdBcKind, t_end: float,
                    probe_times=None) -> RunReport:
    """Evolve the exact profile datum from t = p.t toward t_end < p.t."""
    if dt >= 0:
        raise ValueError("backward run needs dt < 0")
    if not (0 < t_end <= p.t):
        raise ValueError("need 0 < t_end <= start time")
    T0, e1, e2 = frenet_frames_at(p, grid.nodes,
                                  ds_int=min(grid.ds, 1e-3))
    if bc_kind is FdBcKind.FIXED_FIRST_ORDER:
        constants = AsymptoticConstants(A_plus=T0[-1].copy(), A_minus=T0[0].copy(),
                                        B_plus=np.zeros(3, complex),
                                        B_minus=np.zeros(3, complex))
    else:
        constants = asymptotic_bc_constants(
            (T0[0], T0[-1]), (e1[0], e1[-1]), (e2[0], e2[-1]),
            p.c0, p.t, grid.L)
    bc = FdBoundaryCondition(kind=bc_kind, constants=constants, c0=p.c0)
    state = TFieldState(grid=grid, T=T0, t=p.t, metric=p.metric)
    report = RunReport(params={
        "solver": "fd", "direction": "backward", "bc": bc_kind.value,
        "metric": p.metric.name.lower(), "c0": p.c0, "t_start": p.t,
        "t_end": t_end, "L": grid.L, "N": grid.N, "ds": grid.ds, "dt": dt,
    })
    return _run_loop(state, dt, bc, t_end, probe_times, report)


def fd_run_forward(p: SelfSimilarParams, grid: UniformGrid, dt: float,
                   t_end: float, probe_times=None) -> RunReport:
    """Evolve the corner datum from t = 0 forward with frozen boundaries.

    The datum is A2 for s < 0, A1 for s > 0 and (0,0,1) at the midpoint
    node; the report tracks the curvature front and flags the time the
    front reaches the boundary (after which reflections make the profile
    non-self-similar).
    """
    if dt <= 0:
        raise ValueError("forward run needs dt > 0")
    a1, a2 = corner_tangents(p.c0, p.metric)
    T0 = np.empty((grid.N + 1, 3))
    T0[: grid.N // 2] = a2
    T0[grid.N // 2] = np.array([0.0, 0.0, 1.0])
    T0[grid.N // 2 + 1:] = a1
    constants = AsymptoticConstants(A_plus=a1, A_minus=a2,
                                    B_plus=np.zeros(3, complex),
                                    B_minus=np.zeros(3, complex))
    bc = FdBoundaryCondition(kind=FdBcKind.FIXED_FIRST_ORDER,
                             constants=constants, c0=p.c0)
    state = TFieldState(grid=grid, T=T0, t=0.0, metric=p.metric)
    report = RunReport(params={
        "solver": "fd", "direction": "forward", "bc": "fixed",
        "metric": p.metric.name.lower(), "c0": p.c0, "t_start": 0.0,
        "t_end": t_end, "L": grid.L, "N": grid.N, "ds": grid.ds, "dt": dt,
    })
    report = _run_loop(state, dt, bc, t_end, probe_times, report,
                       watch_front=True, c0=p.c0)
    touch = report.event_times("boundary_touch")
    if touch and t_end > 2.0 * touch[0]:
        report.add_event("fractal_regime", t=t_end, touch_time=touch[0])
    return report
