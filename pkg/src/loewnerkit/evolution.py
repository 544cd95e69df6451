"""Evolution families from Herglotz fields, their axioms, and field recovery.

phi_{s,t} solves  d/dt phi_{s,t}(z) = G(phi_{s,t}(z), t),  phi_{s,s}(z) = z.
The integrated distance in the absolute-continuity axiom is the Euclidean
distance of C^q, which is the flat Hermitian metric of the model domains.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional, Sequence

import numpy as np

from .domains import _distance_unchecked, sample_pairs, sample_points
from .errors import InputError, NonGeneratorPieceError, RegularityPointError
from .fields import HerglotzField, PiecewiseConstant
from .integrate import IntegratorConfig, dopri5
from .report import Report

EF3_INFLATION = 1.1
EF3_SLACK = 1e-6
ROUNDTRIP_TOL = 1e-4


def solve_loewner_ode(domain, G: HerglotzField, s, t, z, config=None, t_eval=()):
    """phi_{s,t}(z) for every row of ``z``, restarting the integrator at each break.

    With ``t_eval`` the states at those times (clipped to [s, t]) are returned
    instead, with shape (len(t_eval), n, q).
    """
    config = config or IntegratorConfig()
    s, t = float(s), float(t)
    if not (0.0 <= s <= t):
        raise InputError(f"need 0 <= s <= t, got s={s}, t={t}")
    y = domain.point(z)
    margin = domain.boundary_margin if config.escape_margin is None else config.escape_margin
    evals = sorted(float(x) for x in t_eval)
    if any(x < s or x > t for x in evals):
        raise InputError("evaluation times must lie in [s, t]")
    out = {}
    for x in evals:
        if x == s:
            out[x] = y.copy()

    cuts = [s] + [b for b in G.breaks if s < b < t] + [t]
    for a, b in zip(cuts[:-1], cuts[1:]):
        k = G.piece_index(a)
        piece = G.pieces[k]
        inner = [x for x in evals if a < x <= b]
        res = dopri5(piece.rhs(), a, y, b, config, domain.norm, margin, t_eval=inner, record=False,
                     time_to_boundary=domain.time_to_boundary)
        if res.escaped:
            bad = domain.norm(res.escape_state) >= 1.0 - margin
            raise NonGeneratorPieceError(k, piece.start, res.escape_time, res.escape_state[bad][0])
        for x, state in zip(res.eval_times, res.eval_states):
            out[x] = state
        y = res.states[-1]
    if evals:
        return np.array([out[x] for x in evals])
    return y


# ---------------------------------------------------------------------------
# evolution families


@dataclass(frozen=True)
class Integrated:
    field: HerglotzField
    config: IntegratorConfig = dc_field(default_factory=IntegratorConfig)


@dataclass(frozen=True)
class ClosedForm:
    evaluator: Callable  # (s, t, z) -> points
    breaks: tuple = (0.0,)
    name: str = "closed-form"


class EvolutionFamily:
    """phi_{s,t} from an Integrated or ClosedForm source, with a trajectory cache.

    The cache maps (s, z) to the values phi_{s,t}(z) computed so far. Reads
    take no lock; insertions are serialised.
    """

    def __init__(self, domain, source, use_cache=True):
        self.domain = domain
        self.source = source
        self.use_cache = use_cache
        self._cache = {}
        self._lock = threading.Lock()

    @classmethod
    def from_field(cls, domain, G, config=None, use_cache=True):
        return cls(domain, Integrated(G, config or IntegratorConfig()), use_cache)

    @classmethod
    def closed_form(cls, domain, evaluator, breaks=(0.0,), name="closed-form", use_cache=True):
        return cls(domain, ClosedForm(evaluator, tuple(breaks), name), use_cache)

    @property
    def integrated(self):
        return isinstance(self.source, Integrated)

    @property
    def breaks(self):
        return self.source.field.breaks if self.integrated else self.source.breaks

    @property
    def name(self):
        return self.source.field.name if self.integrated else self.source.name

    def _compute(self, s, t, z):
        if s == t:
            return z.copy()
        if self.integrated:
            return solve_loewner_ode(self.domain, self.source.field, s, t, z, self.source.config)
        out = np.asarray(self.source.evaluator(s, t, z), dtype=complex).reshape(z.shape)
        return self.domain.point(out)

    def __call__(self, s, t, z, use_cache=None):
        s, t = float(s), float(t)
        if not (0.0 <= s <= t):
            raise InputError(f"need 0 <= s <= t, got s={s}, t={t}")
        z = self.domain.point(z)
        cached = self.use_cache if use_cache is None else use_cache
        if not cached:
            return self._compute(s, t, z)
        keys = [(s, row.tobytes()) for row in z]
        out = np.empty_like(z)
        missing = []
        for i, key in enumerate(keys):
            hit = self._cache.get(key, {}).get(t)
            if hit is None:
                missing.append(i)
            else:
                out[i] = hit
        if missing:
            fresh = self._compute(s, t, z[missing])
            with self._lock:
                for i, value in zip(missing, fresh):
                    self._cache.setdefault(keys[i], {})[t] = value.copy()
                    out[i] = value
        return out

    def clear_cache(self):
        with self._lock:
            self._cache.clear()


# ---------------------------------------------------------------------------
# audit


@dataclass
class EFReport(Report):
    ef1_max_residual: float = 0.0
    ef2_max_residual: float = 0.0
    ef3_bound: dict = dc_field(default_factory=dict)
    order_d_verdict: str = "consistent"

    def to_dict(self):
        d = super().to_dict()
        d.update({
            "ef1_max_residual": self.ef1_max_residual,
            "ef2_max_residual": self.ef2_max_residual,
            "ef3_bound": self.ef3_bound,
            "order_d_verdict": self.order_d_verdict,
        })
        from .report import jsonable
        return jsonable(d)


def _cell_edges(T, breaks, cells_per_unit):
    n = max(1, int(math.ceil(T * cells_per_unit)))
    return np.union1d(np.linspace(0.0, T, n + 1), [b for b in breaks if 0 < b < T])


def _cell_samples(a, b, per_cell):
    # interior nodes plus a point just left of b, so one-sided limits at breaks are seen
    return list(a + (b - a) * np.arange(per_cell) / per_cell) + [b - (b - a) * 1e-9]


def _sampled_majorant(ef, s_grid, points, T, cells_per_unit, per_cell):
    """Per-cell sup of the sampled speeds of t -> phi_{s,t}(z), inflated by EF3_INFLATION."""
    edges = _cell_edges(T, ef.breaks, cells_per_unit)
    values = np.zeros(len(edges) - 1)
    for s in s_grid:
        for c, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
            if b <= s:
                continue
            times = [x for x in _cell_samples(max(a, s), b, per_cell)]
            if ef.integrated:
                G = ef.source.field
                states = solve_loewner_ode(ef.domain, G, s, times[-1], points, ef.source.config, t_eval=times)
                speeds = [np.linalg.norm(G(st, x), axis=-1) for st, x in zip(states, times)]
            else:
                h = (b - max(a, s)) / (4 * per_cell)
                speeds = []
                for x in times:
                    lo = max(s, x - h)
                    hi = lo + h
                    diff = ef(s, hi, points, use_cache=False) - ef(s, lo, points, use_cache=False)
                    speeds.append(np.linalg.norm(diff, axis=-1) / h)
            values[c] = max(values[c], float(np.max(speeds)))
    return PiecewiseConstant(edges, EF3_INFLATION * values)


def audit_evolution_family(domain, ef, s_grid, t_grid, K_radius=0.5, samples=8, d=math.inf, seed=0,
                           u_grid=None, cells_per_unit=8, per_cell=8, ef2_tol=1e-8, contraction_slack=1e-8):
    """Check EF1, EF2 and EF3 on sampled points of K = {norm <= K_radius}.

    EF2 triples are (s, u, t) with s in s_grid, t in t_grid and u in ``u_grid``
    (default: all grid times) between them. EF3 uses a majorant estimated
    from sampled speeds and is checked on fresh points. For Integrated
    families the monotone contraction of k along t_grid is also checked.
    """
    s_grid = sorted(float(x) for x in s_grid)
    t_grid = sorted(float(x) for x in t_grid)
    if not s_grid or not t_grid or s_grid[0] < 0:
        raise InputError("grids must be nonempty and nonnegative")
    if not (0 < K_radius < 1):
        raise InputError("K_radius must lie in (0, 1)")
    if not d >= 1:
        raise InputError("order d must lie in [1, inf]")
    u_grid = sorted(set(s_grid) | set(t_grid)) if u_grid is None else sorted(float(x) for x in u_grid)
    T = max(t_grid)
    rng = np.random.default_rng(seed)
    pts = sample_points(domain, rng, samples, K_radius)
    fresh = sample_points(domain, rng, samples, K_radius)
    rep = EFReport(f"evolution-family:{ef.name}")

    # EF1
    ef1 = max(float(np.max(np.linalg.norm(ef(s, s, pts, use_cache=False) - pts, axis=-1))) for s in s_grid)
    rep.ef1_max_residual = ef1
    if ef1 > 0.0:
        rep.violate("EF1: phi_{s,s} = id", residual=ef1)

    # EF2, every composition computed afresh
    ef2 = 0.0
    triples = 0
    for s in s_grid:
        for t in t_grid:
            if t < s:
                continue
            direct = ef(s, t, pts, use_cache=False)
            for u in u_grid:
                if not (s <= u <= t):
                    continue
                comp = ef(u, t, ef(s, u, pts, use_cache=False), use_cache=False)
                res = _distance_unchecked(domain, direct, comp)
                triples += 1
                i = int(np.argmax(res))
                if res[i] > ef2:
                    ef2 = float(res[i])
                if res[i] > ef2_tol:
                    rep.violate("EF2: phi_{s,t} = phi_{u,t} o phi_{s,u}", s=s, u=u, t=t, z=pts[i],
                                residual=float(res[i]))
    rep.ef2_max_residual = ef2

    # EF3
    maj = _sampled_majorant(ef, s_grid, pts, T, cells_per_unit, per_cell)
    norm_d = maj.lp_norm(d)
    worst = -math.inf
    witness = None
    for s in s_grid:
        times = [x for x in u_grid if x >= s]
        vals = [ef(s, x, fresh, use_cache=False) for x in times]
        for i, u in enumerate(times):
            for j in range(i + 1, len(times)):
                lhs = np.linalg.norm(vals[j] - vals[i], axis=-1)
                rhs = maj.integral(u, times[j])
                k = int(np.argmax(lhs))
                excess = float(lhs[k] - rhs)
                if excess > worst:
                    worst = excess
                if excess > EF3_SLACK and witness is None:
                    witness = dict(s=s, u=u, t=times[j], z=fresh[k], distance=float(lhs[k]), integral=rhs)
    rep.ef3_bound = {"edges": maj.edges, "values": maj.values, "order": d, "lp_norm": norm_d,
                     "max_excess": worst}
    if witness is not None:
        rep.violate("EF3: |phi_{s,u} - phi_{s,t}| <= int_u^t k", **witness)
    if not math.isfinite(norm_d):
        rep.violate("EF3 majorant has finite L^d norm", lp_norm=norm_d)
    if ef.integrated:
        try:
            declared = ef.source.field.majorant(K_radius, T, cells_per_unit).lp_norm(d)
        except NotImplementedError:
            declared = None
        rep.metrics["declared_lp_norm"] = declared
        if declared is not None and norm_d > 2.0 * declared + 1e-12:
            rep.violate("EF3 majorant within 2x the declared bound", lp_norm=norm_d, declared=declared)
    rep.order_d_verdict = "consistent" if not any(v["check"].startswith("EF3") for v in rep.violations) \
        else "violated"

    # monotone contraction along t_grid
    if ef.integrated and samples >= 1:
        z, w = sample_pairs(domain, rng, samples, K_radius)
        worst_inc = -math.inf
        for s in s_grid:
            times = [x for x in t_grid if x >= s]
            if len(times) < 2:
                continue
            both = np.concatenate([z, w])
            states = solve_loewner_ode(domain, ef.source.field, s, times[-1], both, ef.source.config, t_eval=times)
            dist = np.array([_distance_unchecked(domain, st[:samples], st[samples:]) for st in states])
            inc = np.diff(dist, axis=0)
            worst_inc = max(worst_inc, float(np.max(inc)))
            for ti, i in zip(*np.nonzero(inc > contraction_slack)):
                rep.violate("t -> k(phi_{s,t} z, phi_{s,t} w) non-increasing", s=s, t=times[ti + 1],
                            z=z[i], w=w[i], increase=float(inc[ti, i]))
                break
        rep.metrics["max_distance_increase"] = worst_inc

    rep.metrics.update({"ef2_triples": triples, "samples": samples, "K_radius": K_radius, "seed": seed})
    return rep


# ---------------------------------------------------------------------------
# recovery


@dataclass
class Recovery:
    s: float
    n_ladder: list
    quotients: np.ndarray  # (len(n_ladder), n, q)
    extrapolated: np.ndarray  # (n, q)
    cauchy_increments: list
    dropped_levels: list = dc_field(default_factory=list)


def recover_field(domain, ef, s, z_grid, n_ladder):
    """G_{n,s}(z) = n (phi_{s,s+1/n}(z) - z) along the ladder, Richardson-extrapolated.

    Extrapolation assumes an error expansion c/n and uses the last two
    levels. Levels whose window [s, s + 1/n] straddles a break are dropped.
    """
    s = float(s)
    ladder = sorted(int(n) for n in n_ladder)
    if len(ladder) < 2 or ladder[0] < 1 or len(set(ladder)) != len(ladder):
        raise InputError("n_ladder needs at least two distinct positive integers")
    if s < 0:
        raise InputError("s must be nonnegative")
    h_min = 1.0 / ladder[-1]
    for b in ef.breaks:
        if b > 0 and abs(s - b) < h_min:
            raise RegularityPointError(f"s={s} is within 1/{ladder[-1]} of the break t={b}")
    z = domain.point(z_grid)
    kept, dropped = [], []
    for n in ladder:
        if any(s < b < s + 1.0 / n for b in ef.breaks):
            dropped.append(n)
        else:
            kept.append(n)
    if len(kept) < 2:
        raise RegularityPointError(f"fewer than two ladder levels avoid the breaks near s={s}")
    quotients = np.array([n * (ef(s, s + 1.0 / n, z) - z) for n in kept])
    n1, n2 = kept[-2], kept[-1]
    extrap = (n2 * quotients[-1] - n1 * quotients[-2]) / (n2 - n1)
    inc = [float(np.max(np.linalg.norm(b - a, axis=-1))) for a, b in zip(quotients[:-1], quotients[1:])]
    return Recovery(s, kept, quotients, extrap, inc, dropped)


def regular_times(G_or_ef, count, horizon, rng, clearance):
    """``count`` sorted times in (0, horizon) at distance >= clearance from every positive break."""
    breaks = [b for b in G_or_ef.breaks if b > 0]
    out = []
    for _ in range(1000 * count):
        x = float(rng.uniform(clearance, horizon - clearance))
        if all(abs(x - b) >= clearance for b in breaks):
            out.append(x)
            if len(out) == count:
                return sorted(out)
    raise InputError("could not draw regular times away from the breaks")


def roundtrip_check(domain, G: HerglotzField, s_samples, z_grid, n_ladder, seed=0, horizon=2.0,
                    grid_radius=0.5, tol=ROUNDTRIP_TOL, config=None):
    """Build the integrated family of G, recover it at regular times and compare with G.

    ``s_samples`` is a count (times drawn with ``seed``) or explicit times;
    ``z_grid`` is a count (points of norm <= grid_radius) or explicit points.
    """
    rng = np.random.default_rng(seed)
    ef = EvolutionFamily.from_field(domain, G, config)
    ladder = sorted(int(n) for n in n_ladder)
    if isinstance(s_samples, (int, np.integer)):
        times = regular_times(G, int(s_samples), horizon, rng, 2.0 / ladder[0])
    else:
        times = sorted(float(x) for x in s_samples)
    if isinstance(z_grid, (int, np.integer)):
        z = sample_points(domain, rng, int(z_grid), grid_radius)
    else:
        z = domain.point(z_grid)
    rep = Report("roundtrip", metrics={"times": times, "n_ladder": ladder, "points": len(z), "tolerance": tol})
    errors = []
    for s in times:
        rec = recover_field(domain, ef, s, z, ladder)
        err = np.linalg.norm(rec.extrapolated - G(z, s), axis=-1)
        i = int(np.argmax(err))
        errors.append({"s": s, "sup_error": float(err[i]), "cauchy_increments": rec.cauchy_increments,
                       "dropped_levels": rec.dropped_levels})
        if err[i] > tol:
            rep.violate("recovered field matches G", s=s, z=z[i], recovered=rec.extrapolated[i],
                        expected=G(z[i:i + 1], s)[0], error=float(err[i]))
    rep.metrics["per_time"] = errors
    rep.metrics["max_error"] = max((e["sup_error"] for e in errors), default=0.0)
    return rep
