"""Semigroups of autonomous generators, product formula and Trotter sums."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .domains import _distance_unchecked, kobayashi_metric, sample_pairs
from .errors import (
    BoundaryResolutionError,
    InputError,
    InternalInconsistencyError,
    IterationEscapeError,
)
from .fields import cone_combine, require_generator
from .integrate import IntegratorConfig, dopri5
from .report import Report

SPEED_GROWTH_TOL = 1e-3
# tight tolerances for audits whose slack is 1e-9 in Kobayashi distance
AUDIT_CONFIG = IntegratorConfig(rel_tol=1e-13, abs_tol=1e-15)


@dataclass
class Trajectory:
    times: np.ndarray
    points: np.ndarray
    escaped: bool = False
    escape_time_estimate: Optional[float] = None
    # Kobayashi speed F(z; H(z)) at the last point over the one at the start
    speed_ratio: float = math.nan

    @property
    def endpoint(self):
        return self.points[-1]


def _margin(domain, config):
    return domain.boundary_margin if config.escape_margin is None else config.escape_margin


def integrate_autonomous(domain, field, z0, t_end, config=None):
    """Solve z' = H(z), z(0) = z0 on [0, t_end] (t_end >= 0)."""
    config = config or IntegratorConfig()
    if t_end < 0:
        raise InputError("backward flows are not supported")
    z0 = domain.point(z0).reshape(domain.dim)
    res = dopri5(lambda t, y: field(y), 0.0, z0, float(t_end), config, domain.norm, _margin(domain, config),
                 time_to_boundary=domain.time_to_boundary)
    traj = Trajectory(res.times, res.states, res.escaped, res.escape_time)
    if res.escaped:
        traj.speed_ratio = _speed_ratio(domain, field, z0, res.states[-1])
    return traj


def _speed_ratio(domain, field, start, end):
    with np.errstate(all="ignore"):
        s0 = float(kobayashi_metric(domain, start, field(start)))
        s1 = float(kobayashi_metric(domain, end, field(end)))
    if s0 == 0.0:
        return math.inf if s1 > 0 else 1.0
    return s1 / s0


def flow_points(domain, field, t, points, config=None, t_eval=()):
    """Batched semigroup: phi_t applied to every row of ``points``.

    Raises InternalInconsistencyError when an orbit escapes with growing
    Kobayashi speed, BoundaryResolutionError when an orbit only hugs the
    boundary closer than the margin.
    """
    config = config or IntegratorConfig()
    pts = domain.point(points)
    res = dopri5(lambda s, y: field(y), 0.0, pts, float(t), config, domain.norm,
                 _margin(domain, config), t_eval=t_eval, record=False,
                 time_to_boundary=domain.time_to_boundary)
    if res.escaped:
        bad = np.nonzero(domain.norm(res.escape_state) >= 1.0 - _margin(domain, config))
        idx = tuple(a[0] for a in bad)
        ratio = _speed_ratio(domain, field, pts[idx], res.escape_state[idx])
        if ratio > 1.0 + SPEED_GROWTH_TOL:
            raise InternalInconsistencyError(
                f"orbit of {pts[idx]} escaped at t~{res.escape_time:.6g} (speed ratio {ratio:.3g})")
        raise BoundaryResolutionError(
            f"orbit of {pts[idx]} is within the boundary margin at t~{res.escape_time:.6g}")
    if t_eval:
        return np.array(res.eval_states)
    return res.states[-1]


def semigroup_map(domain, field, t, z, config=None, check=True):
    """phi_t(z) for a certified generator (z may hold many points)."""
    if t < 0:
        raise InputError("t must be nonnegative")
    if check:
        require_generator(domain, field)
    return flow_points(domain, field, t, z, config)


# ---------------------------------------------------------------------------
# product formula


@dataclass
class DiscreteFamily:
    """Family f_t defined for 0 <= t < lam, with f_0 = id."""

    evaluator: Callable  # (t, z) -> points
    lam: float
    name: str = "family"

    def __call__(self, t, z):
        return self.evaluator(t, z)


def linear_contraction_family():
    """f_t(z) = (1 - t) z, whose product limit is e^{-t} z."""
    return DiscreteFamily(lambda t, z: (1.0 - t) * z, 1.0, "linear-contraction")


def euler_family(field, lam=0.5):
    """f_t(z) = z + t H(z): one explicit Euler step of the field."""
    return DiscreteFamily(lambda t, z: z + t * field(z), lam, "euler")


def semigroup_family(domain, field, config=None):
    return DiscreteFamily(lambda t, z: flow_points(domain, field, t, z, config), math.inf, "semigroup")


def product_formula(domain, family, t, m, grid):
    """(f_{t/m})^{o m} on the grid, checking containment after every step."""
    if m < 1:
        raise InputError("m must be >= 1")
    if t < 0:
        raise InputError("t must be nonnegative")
    tau = t / m
    if not tau < family.lam:
        raise InputError(f"t/m = {tau} is outside the family's range [0, {family.lam})")
    z = domain.point(grid)
    for k in range(1, m + 1):
        z = family(tau, z)
        inside = domain.norm(z) < 1.0
        if not np.all(inside):
            raise IterationEscapeError(k, z[~inside][0] if z.ndim > 1 else z)
    return z


def halving_report(name, ms, errors, window=(0.35, 0.65), m_min=64, floor=1e-9):
    """Check error(2m) / error(m) within ``window`` for consecutive doublings m >= m_min.

    Errors below ``floor`` are integrator noise (the composition is exact, as
    for commuting fields); their ratios are recorded but not checked.
    """
    rep = Report(name, metrics={"m": list(ms), "error": [float(e) for e in errors]})
    ratios = []
    for (m1, e1), (m2, e2) in zip(zip(ms, errors), zip(ms[1:], errors[1:])):
        if m2 != 2 * m1 or m1 < m_min:
            continue
        if e1 < floor:
            rep.notes.append(f"error at m={m1} is below {floor:g}; composition exact to integrator tolerance")
            continue
        r = e2 / e1 if e1 > 0 else math.nan
        ratios.append({"m": m1, "ratio": r})
        if not (window[0] <= r <= window[1]):
            rep.violate("error(2m)/error(m) in window", m=m1, ratio=r, window=list(window))
    rep.metrics["ratios"] = ratios
    return rep


def product_formula_convergence(domain, family, t, m_ladder, grid, reference):
    """Sup-grid error of the product formula against ``reference`` (the limit on the grid)."""
    ref = np.asarray(reference)
    errors = []
    for m in m_ladder:
        approx = product_formula(domain, family, t, m, grid)
        errors.append(float(np.max(np.linalg.norm(approx - ref, axis=-1))))
    return halving_report("product-formula", list(m_ladder), errors)


def trotter_sum(domain, field1, field2, t, m, grid, config=None, check=True):
    """(phi_{t/m} o psi_{t/m})^{o m} with phi, psi the semigroups of field1, field2."""
    if m < 1:
        raise InputError("m must be >= 1")
    if t < 0:
        raise InputError("t must be nonnegative")
    if check:
        require_generator(domain, field1)
        require_generator(domain, field2)
    z = domain.point(grid)
    tau = t / m
    if tau == 0:
        return z
    for k in range(1, m + 1):
        z = flow_points(domain, field2, tau, z, config)
        z = flow_points(domain, field1, tau, z, config)
        inside = domain.norm(z) < 1.0
        if not np.all(inside):
            raise IterationEscapeError(k, z[~inside][0] if z.ndim > 1 else z)
    return z


def trotter_convergence(domain, field1, field2, t, m_ladder, grid, config=None):
    """Trotter sums against the directly integrated semigroup of field1 + field2."""
    total = cone_combine([field1, field2], [1.0, 1.0])
    ref = semigroup_map(domain, total, t, grid, config)
    errors = []
    for m in m_ladder:
        approx = trotter_sum(domain, field1, field2, t, m, grid, config)
        errors.append(float(np.max(np.linalg.norm(approx - ref, axis=-1))))
    return halving_report("trotter", list(m_ladder), errors)


# ---------------------------------------------------------------------------
# contraction


def contraction_audit(domain, field, t_grid, pair_samples, seed, radius=0.9,
                      config=AUDIT_CONFIG, slack=1e-9):
    """Check k(phi_t z, phi_t w) <= k(z, w) and monotonicity in t on sampled pairs."""
    t_grid = sorted(float(t) for t in t_grid)
    if t_grid and t_grid[0] < 0:
        raise InputError("times must be nonnegative")
    require_generator(domain, field)
    rng = np.random.default_rng(seed)
    z, w = sample_pairs(domain, rng, pair_samples, radius)
    pts = np.concatenate([z, w])
    images = flow_points(domain, field, t_grid[-1], pts, config, t_eval=t_grid)
    n = len(z)
    dist = np.array([_distance_unchecked(domain, im[:n], im[n:]) for im in images])  # (len(t), n)
    d0 = _distance_unchecked(domain, z, w)
    rep = Report("contraction", metrics={
        "pairs": n,
        "t_grid": t_grid,
        "max_excess_over_initial": float(np.max(dist - d0)),
        "max_increase_along_grid": float(np.max(np.diff(dist, axis=0))) if len(t_grid) > 1 else 0.0,
    })
    for ti, t in enumerate(t_grid):
        bad = np.nonzero(dist[ti] > d0 + slack)[0]
        for i in bad[:5]:
            rep.violate("k(phi_t z, phi_t w) <= k(z, w)", t=t, z=z[i], w=w[i],
                        initial=float(d0[i]), value=float(dist[ti, i]))
    inc = np.diff(dist, axis=0)
    for ti, i in zip(*np.nonzero(inc > slack)):
        rep.violate("t -> k(phi_t z, phi_t w) non-increasing", t=t_grid[ti + 1], z=z[i], w=w[i],
                    increase=float(inc[ti, i]))
        if len(rep.violations) > 20:
            break
    return rep
