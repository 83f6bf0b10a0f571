"""
Numerical verification tools: reference flows, DEL defects along smooth
curves, observed orders, extraction of parasitic oscillations and drift
diagnostics.
"""
from dataclasses import dataclass

import numpy as np

from .core import Trajectory, as_state
from .errors import GridMismatch, NonFiniteState, TooShort
from .integrators import MethodId, del_residual
from .modified import TruncationOrder, principal_field

#: fits with a lower coefficient of determination are flagged invalid
MIN_R_SQUARED = 0.98


def _grid(t_end, dt):
    if not dt > 0:
        raise ValueError("dt must be positive")
    if t_end < 0:
        raise ValueError("t_end must be non-negative")
    n = int(np.ceil(t_end / dt - 1e-9))
    return n, (t_end / n if n else dt)


def reference_solve(field, q0, t_end, dt, t0=0.0):
    """Classical fourth-order Runge-Kutta with a fixed step.

    The step is shrunk to ``t_end / ceil(t_end / dt)`` so that the grid ends
    exactly at ``t_end``.
    """
    q = as_state(q0).copy()
    n, dt = _grid(t_end, dt)
    out = np.empty((n + 1, q.size))
    out[0] = q
    for i in range(n):
        k1 = field(q)
        k2 = field(q + 0.5 * dt * k1)
        k3 = field(q + 0.5 * dt * k2)
        k4 = field(q + dt * k3)
        q = q + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(q)):
            raise NonFiniteState(f"state became non-finite at t = {t0 + (i + 1) * dt:g}")
        out[i + 1] = q
    return Trajectory(t0, dt, out)


def defect_on_curve(method, system, smooth, h):
    """Largest DEL residual (infinity norm) on ``h``-spaced triples of a smooth curve.

    The curve must be sampled with a spacing that divides ``h``. Triples whose
    outer points fall within the first or last ``h``-window are skipped.
    """
    ratio = h / smooth.h
    m = int(round(ratio))
    if m < 1 or abs(ratio - m) > 1e-8 * max(1.0, ratio):
        raise GridMismatch(f"h = {h:g} is not a multiple of the sampling step {smooth.h:g}")
    pts = smooth.points
    centers = range(2 * m, len(pts) - 2 * m)
    if len(centers) == 0:
        raise GridMismatch("curve too short for interior h-spaced triples")
    worst = 0.0
    for c in centers:
        r = del_residual(method, system, pts[c - m], pts[c], pts[c + m], h)
        worst = max(worst, float(np.max(np.abs(r))))
    return worst


@dataclass(frozen=True)
class DefectReport:
    h_values: np.ndarray
    defect_norms: np.ndarray
    slope: float
    r_squared: float

    @property
    def degenerate(self):
        """True when every defect vanishes and no slope can be fitted."""
        return bool(np.all(self.defect_norms == 0))

    @property
    def valid(self):
        return (not self.degenerate) and np.isfinite(self.slope) and self.r_squared >= MIN_R_SQUARED


def fit_loglog(x, y):
    """Least-squares slope of ``log y`` against ``log x`` and its ``r^2``."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(r2)


def defect_order(method, system, order, q0, t_end, h_values, dt_divisor=100):
    """Measure how the DEL defect along truncated modified flows scales with ``h``."""
    method = MethodId.parse(method)
    order = TruncationOrder.parse(order)
    hs = np.asarray(sorted(h_values, reverse=True), float)
    if hs.size < 3:
        raise ValueError("need at least three h values")
    if np.any(np.diff(hs) >= 0):
        raise ValueError("h values must be distinct")
    defects = []
    for h in hs:
        curve = reference_solve(lambda q, h=h: principal_field(method, system, q, h, order),
                                q0, t_end, h / dt_divisor)
        defects.append(defect_on_curve(method, system, curve, h))
    defects = np.asarray(defects)
    if np.any(defects <= 0):
        return DefectReport(hs, defects, float("nan"), float("nan"))
    slope, r2 = fit_loglog(hs, defects)
    return DefectReport(hs, defects, slope, r2)


@dataclass(frozen=True)
class ParasiteDecomposition:
    times: np.ndarray
    x: np.ndarray
    y: np.ndarray
    amplitude: np.ndarray

    def __sub__(self, other):
        """Remove a baseline's parasitic part; the smooth part of ``self`` is kept."""
        if self.times.shape != other.times.shape or not np.allclose(self.times, other.times):
            raise ValueError("decompositions live on different time grids")
        y = self.y - other.y
        return ParasiteDecomposition(self.times, self.x, y, np.linalg.norm(y, axis=1))


def decompose_parasites(traj):
    """Split interior points into smooth and alternating parts.

    ``x_j = (q_{j-1} + 2 q_j + q_{j+1}) / 4`` and ``y_j = (-1)^j (q_j - x_j)``
    so that ``q_j = x_j + (-1)^j y_j``. Endpoints are dropped.
    """
    q = traj.points
    if len(q) < 3:
        raise TooShort("need at least three points")
    x = 0.25 * (q[:-2] + 2 * q[1:-1] + q[2:])
    j = np.arange(1, len(q) - 1)
    sign = np.where(j % 2 == 0, 1.0, -1.0)[:, None]
    y = sign * (q[1:-1] - x)
    return ParasiteDecomposition(traj.times[1:-1], x, y, np.linalg.norm(y, axis=1))


def parasite_envelope(dec, window):
    """Rolling maximum of the amplitude; stamped with the time of each window's last point."""
    if window < 1:
        raise ValueError("window must be at least 1")
    a = np.asarray(dec.amplitude, float)
    if a.size < window:
        raise TooShort(f"need at least {window} amplitudes, got {a.size}")
    env = np.lib.stride_tricks.sliding_window_view(a, window).max(axis=1)
    return np.asarray(dec.times)[window - 1:], env


def invariant_drift(traj, functional):
    """``max_j |F(q_j) - F(q_0)| / (1 + |F(q_0)|)``."""
    vals = np.array([functional(q) for q in traj.points], float)
    return float(np.max(np.abs(vals - vals[0])) / (1.0 + abs(vals[0])))


def sample_reference(traj, field, dt_ref):
    """Reference flow from ``traj``'s first point, sampled at its times."""
    m = max(1, int(np.ceil(traj.h / dt_ref - 1e-9)))
    ref = reference_solve(field, traj.points[0], traj.t_end - traj.t0, traj.h / m, t0=traj.t0)
    return ref.points[::m]


def error_vs_reference(traj, field, dt_ref):
    """Largest Euclidean distance between ``traj`` and the flow of ``field``."""
    if len(traj) == 1:
        return 0.0
    ref = sample_reference(traj, field, dt_ref)
    return float(np.max(np.linalg.norm(traj.points - ref, axis=1)))
