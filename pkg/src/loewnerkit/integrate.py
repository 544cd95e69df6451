"""Embedded Dormand-Prince 5(4) integrator with boundary-escape detection.

States are complex arrays of shape (..., q); a batch of independent initial
points shares one step-size sequence (the error norm is the max over the
batch). Near the boundary of the domain the step cap shrinks with the
distance to it, and a step that crosses ``norm = 1 - margin`` is bisected to
locate the crossing time.

The near-boundary cap is ``max_step * min(1, T)`` where T is the time the
current velocity needs to carry a point to the boundary, ``(1 - |z|)``
divided by the outward radial speed. For unit outward speed this is
``max_step * (1 - |z|)``; orbits that slide along or converge slowly to the
boundary are not throttled.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import IntegratorStallError

# Dormand & Prince (1980), 5th order propagation, 4th order error estimate
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B - _B4

NEAR_BOUNDARY = 0.9
ESCAPE_TIME_RESOLUTION = 1e-10


@dataclass
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = 0.1
    escape_margin: Optional[float] = None  # None: use the domain's boundary_margin
    min_step: float = 1e-14
    max_steps: int = 2_000_000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0 and self.max_step > 0):
            raise ValueError("tolerances and max_step must be positive")


@dataclass
class RKResult:
    times: np.ndarray
    states: np.ndarray
    escaped: bool = False
    escape_time: Optional[float] = None
    escape_state: Optional[np.ndarray] = None
    eval_times: list = field(default_factory=list)
    eval_states: list = field(default_factory=list)
    steps: int = 0
    rejected: int = 0


def _step(rhs, t, y, h, k1):
    ks = [k1]
    for i in range(1, 7):
        yi = y + h * sum(a * k for a, k in zip(_A[i], ks))
        ks.append(rhs(t + _C[i] * h, yi))
    y_new = y + h * sum(b * k for b, k in zip(_B, ks) if b != 0.0)
    err = h * sum(e * k for e, k in zip(_E, ks) if e != 0.0)
    return y_new, err, ks[-1]


def _initial_step(rhs, t0, y0, f0, cfg, cap):
    """Starting step of Hairer, Norsett and Wanner (II.4), with the probe step floored at 1e-6.

    The floor matters for batches mixing points near 0 with others: the
    ratio |y0| / |f0| alone can then be ~1e-16.
    """
    scale = cfg.abs_tol + cfg.rel_tol * np.abs(y0)
    d0 = np.max(np.abs(y0) / scale)
    d1 = np.max(np.abs(f0) / scale)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else max(1e-6, 0.01 * d0 / d1)
    h0 = min(h0, cap)
    with np.errstate(all="ignore"):
        f1 = rhs(t0 + h0, y0 + h0 * f0)
        d2 = np.max(np.abs(f1 - f0) / scale) / h0
    big = max(d1, d2)
    h1 = max(1e-6, h0 * 1e-3) if not (big > 1e-15) or not np.isfinite(big) else (0.01 / big) ** 0.2
    return min(100 * h0, h1, cap)


def dopri5(rhs, t0, y0, t_end, cfg, norm, margin, t_eval=(), record=True, time_to_boundary=None):
    """Integrate y' = rhs(t, y) from t0 to t_end.

    ``norm`` maps states to the domain norm per point. Integration stops at
    the first crossing of ``1 - margin`` by any point of the batch; the
    crossing time is located by bisection on the crossing step.
    """
    t = float(t0)
    y = np.array(y0, dtype=complex)
    limit = 1.0 - margin
    times, states = [t], [y.copy()]
    out = RKResult(np.array([]), np.array([]))
    evals = sorted(float(s) for s in t_eval if t0 <= s <= t_end)
    ei = 0
    while ei < len(evals) and evals[ei] <= t:
        out.eval_times.append(evals[ei])
        out.eval_states.append(y.copy())
        ei += 1

    f = rhs(t, y)
    if t_end <= t:
        out.times, out.states = np.array(times), np.array(states)
        return out

    def cap_at(state, vel):
        if time_to_boundary is None:
            r = float(np.max(norm(state)))
            return cfg.max_step * (1.0 - r) if r > NEAR_BOUNDARY else cfg.max_step
        return cfg.max_step * min(1.0, float(np.min(time_to_boundary(state, vel))))

    h_try = _initial_step(rhs, t, y, f, cfg, cap_at(y, f))
    while t < t_end:
        if out.steps + out.rejected > cfg.max_steps:
            raise IntegratorStallError("step budget exhausted", np.array(times), np.array(states))
        target = evals[ei] if ei < len(evals) else t_end
        h = min(h_try, cap_at(y, f))
        clipped = t + h >= target
        if clipped:
            h = target - t
        if h < cfg.min_step and not clipped:
            raise IntegratorStallError(f"step size underflow at t={t:.12g}", np.array(times), np.array(states))

        with np.errstate(all="ignore"):
            y_new, err, f_new = _step(rhs, t, y, h, f)
            scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            e = float(np.max(np.abs(err) / scale))
        if not np.isfinite(e) or not np.all(np.isfinite(y_new)):
            e = np.inf

        if e <= 1.0:
            t_new = target if clipped else t + h
            out.steps += 1
            if np.any(norm(y_new) >= limit):
                lo, hi = 0.0, 1.0
                y_hi = y_new
                while (hi - lo) * h > ESCAPE_TIME_RESOLUTION:
                    mid = 0.5 * (lo + hi)
                    y_mid, _, _ = _step(rhs, t, y, mid * h, f)
                    if np.any(norm(y_mid) >= limit):
                        hi, y_hi = mid, y_mid
                    else:
                        lo = mid
                out.escaped = True
                out.escape_time = t + hi * h
                out.escape_state = y_hi
                times.append(out.escape_time)
                states.append(y_hi.copy())
                break
            t, y, f = t_new, y_new, f_new
            if record:
                times.append(t)
                states.append(y.copy())
            while ei < len(evals) and evals[ei] <= t:
                out.eval_times.append(evals[ei])
                out.eval_states.append(y.copy())
                ei += 1
            fac = 5.0 if e == 0 else min(5.0, max(0.2, 0.9 * e ** -0.2))
            # a step shortened to hit an output time says little about the next one
            h_try = max(h_try, h * fac) if clipped else h * fac
        else:
            out.rejected += 1
            h_try = h * (0.2 if not np.isfinite(e) else max(0.2, 0.9 * e ** -0.2))
            if h_try < cfg.min_step:
                raise IntegratorStallError(f"step size underflow at t={t:.12g}", np.array(times), np.array(states))

    if not record and not out.escaped and times[-1] != t:
        times.append(t)
        states.append(y.copy())
    out.times, out.states = np.array(times), np.array(states)
    return out
