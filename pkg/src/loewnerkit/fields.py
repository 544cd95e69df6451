"""Holomorphic vector fields, Herglotz fields and generator certification.

Autonomous fields are small frozen dataclasses (hashable, so certificates can
be cached) that are callable on arrays of points with trailing axis q.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional, Sequence

import numpy as np

from .domains import Domain, dini_directional_derivative, sample_pairs, sample_points
from .errors import InputError, InvalidWeightError, PreconditionError
from .report import Report

DISSIPATIVITY_TOL = 1e-8
HERGLOTZ_TOL = 1e-12
HERGLOTZ_RADII = (0.9, 0.99, 0.999)


def _complex_tuple(values):
    return tuple(complex(v) for v in values)


class HolomorphicField:
    """Base class. Subclasses implement ``__call__(z)`` for z of shape (..., q)."""

    dim: int
    kind: str = "abstract"

    def __call__(self, z):
        raise NotImplementedError

    def to_polynomial(self) -> Optional["Polynomial"]:
        return None

    def sup_bound(self, radius: float) -> float:
        """An upper bound of ``|H(z)|`` over ``{max_j |z_j| <= radius}``."""
        raise NotImplementedError


@dataclass(frozen=True)
class Linear(HolomorphicField):
    matrix: tuple
    kind = "linear"

    @classmethod
    def from_matrix(cls, A):
        A = np.atleast_2d(np.asarray(A, dtype=complex))
        if A.shape[0] != A.shape[1]:
            raise InputError(f"linear field needs a square matrix, got {A.shape}")
        return cls(tuple(_complex_tuple(row) for row in A))

    @property
    def dim(self):
        return len(self.matrix)

    @functools.cached_property
    def A(self):
        return np.array(self.matrix, dtype=complex)

    def __call__(self, z):
        return np.asarray(z, dtype=complex) @ self.A.T

    def to_polynomial(self):
        q = self.dim
        terms = {}
        for j in range(q):
            exp = tuple(int(i == j) for i in range(q))
            terms[exp] = self.A[:, j]
        return Polynomial.from_terms(q, terms)

    def sup_bound(self, radius):
        return float(np.linalg.norm(self.A, 2) * radius * math.sqrt(self.dim))


@dataclass(frozen=True)
class Polynomial(HolomorphicField):
    """Sum of monomials z^alpha with vector coefficients.

    ``exponents[k]`` is a multi-index, ``coefficients[k]`` the q-vector it
    multiplies.
    """

    dim_: int
    exponents: tuple = ()
    coefficients: tuple = ()
    kind = "polynomial"

    @classmethod
    def from_terms(cls, dim, terms, drop_tol=0.0):
        """Build from a mapping ``{exponent tuple: coefficient vector}``."""
        merged = {}
        for exp, coef in terms.items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != dim or min(exp, default=0) < 0:
                raise InputError(f"bad exponent {exp} for dimension {dim}")
            coef = np.broadcast_to(np.asarray(coef, dtype=complex), (dim,))
            merged[exp] = merged.get(exp, np.zeros(dim, complex)) + coef
        keys = sorted(k for k, c in merged.items() if np.max(np.abs(c)) > drop_tol)
        return cls(dim, tuple(keys), tuple(_complex_tuple(merged[k]) for k in keys))

    @classmethod
    def from_coordinates(cls, dim, coordinate_terms):
        """Build from one ``{exponent: scalar}`` table per output coordinate."""
        if len(coordinate_terms) != dim:
            raise InputError("need one coefficient table per coordinate")
        terms = {}
        for i, table in enumerate(coordinate_terms):
            for exp, c in table.items():
                vec = np.zeros(dim, complex)
                vec[i] = c
                terms[tuple(exp)] = terms.get(tuple(exp), np.zeros(dim, complex)) + vec
        return cls.from_terms(dim, terms)

    @property
    def dim(self):
        return self.dim_

    @functools.cached_property
    def _arrays(self):
        E = np.array(self.exponents, dtype=int).reshape(-1, self.dim)
        C = np.array(self.coefficients, dtype=complex).reshape(-1, self.dim)
        return E, C

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        E, C = self._arrays
        if len(E) == 0:
            return np.zeros_like(z)
        mono = np.prod(z[..., None, :] ** E, axis=-1)
        return mono @ C

    def to_polynomial(self):
        return self

    def degree(self):
        E, _ = self._arrays
        return int(E.sum(axis=1).max()) if len(E) else 0

    def sup_bound(self, radius):
        E, C = self._arrays
        return float(sum(np.linalg.norm(c) * radius ** int(e.sum()) for e, c in zip(E, C)))


@dataclass(frozen=True)
class RationalFunction:
    """p(zeta) = num(zeta) / den(zeta), coefficients in ascending powers."""

    num: tuple
    den: tuple = (1 + 0j,)

    def __call__(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        n = np.polynomial.polynomial.polyval(zeta, np.array(self.num))
        d = np.polynomial.polynomial.polyval(zeta, np.array(self.den))
        return n / d


def rational(num, den=(1,)):
    return RationalFunction(_complex_tuple(num), _complex_tuple(den))


@dataclass(frozen=True)
class BerksonPorta(HolomorphicField):
    """Disc field H(z) = (tau - z)(1 - conj(tau) z) p(z)."""

    tau: complex
    p: RationalFunction
    kind = "berkson_porta"

    def __post_init__(self):
        if abs(self.tau) > 1.0 + 1e-15:
            raise InputError(f"Berkson-Porta point must satisfy |tau| <= 1, got {self.tau}")

    @property
    def dim(self):
        return 1

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        zeta = z[..., 0]
        t = complex(self.tau)
        return ((t - zeta) * (1 - np.conj(t) * zeta) * self.p(zeta))[..., None]

    def to_polynomial(self):
        t = complex(self.tau)
        pre = np.polynomial.polynomial.polymul([t, -1.0], [1.0, -np.conj(t)])
        top = np.polynomial.polynomial.polymul(pre, np.array(self.p.num))
        quo, rem = np.polynomial.polynomial.polydiv(top, np.array(self.p.den))
        scale = max(1.0, float(np.max(np.abs(top))))
        if np.max(np.abs(rem)) > 1e-12 * scale:
            return None
        return Polynomial.from_terms(1, {(k,): c for k, c in enumerate(quo)})

    def sup_bound(self, radius):
        theta = np.linspace(0, 2 * np.pi, 4096, endpoint=False)
        vals = np.abs(self(radius * np.exp(1j * theta)[:, None]))
        return float(1.01 * vals.max())


@dataclass(frozen=True)
class Combination(HolomorphicField):
    """Nonnegative combination kept symbolic when some summand is not polynomial."""

    fields: tuple
    weights: tuple
    kind = "combination"

    @property
    def dim(self):
        return self.fields[0].dim

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, complex)
        for f, w in zip(self.fields, self.weights):
            out = out + w * f(z)
        return out

    def sup_bound(self, radius):
        return float(sum(w * f.sup_bound(radius) for f, w in zip(self.fields, self.weights)))


def evaluate(field, z, domain=None):
    """Value of ``field`` at z (any leading shape); checks containment when a domain is given."""
    if domain is not None:
        z = domain.point(z)
        if field.dim != domain.dim:
            raise InputError(f"field dimension {field.dim} does not match domain dimension {domain.dim}")
    else:
        z = np.asarray(z, dtype=complex)
        if field.dim == 1 and (z.ndim == 0 or z.shape[-1] != 1):
            z = z[..., None]
    return field(z)


def cone_combine(fields: Sequence[HolomorphicField], weights: Sequence[float]):
    """Nonnegative combination of fields.

    Returns a Polynomial when every summand has a polynomial form, and a
    Combination otherwise.
    """
    if len(fields) == 0 or len(fields) != len(weights):
        raise InputError("need as many weights as fields (and at least one)")
    weights = [float(w) for w in weights]
    if any(w < 0 or not math.isfinite(w) for w in weights):
        raise InvalidWeightError(f"weights must be finite and nonnegative, got {weights}")
    dim = fields[0].dim
    if any(f.dim != dim for f in fields):
        raise InputError("all fields must share one dimension")
    polys = [f.to_polynomial() for f in fields]
    if all(p is not None for p in polys):
        terms = {}
        for p, w in zip(polys, weights):
            for exp, coef in zip(p.exponents, p.coefficients):
                terms[exp] = terms.get(exp, np.zeros(dim, complex)) + w * np.array(coef)
        return Polynomial.from_terms(dim, terms)
    return Combination(tuple(fields), tuple(weights))


# ---------------------------------------------------------------------------
# time-dependent fields


@dataclass(frozen=True)
class TimePolynomialField:
    """G(z, t) = sum_k t^k H_k(z)."""

    terms: tuple

    @property
    def dim(self):
        return self.terms[0].dim

    def __call__(self, z, t):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, complex)
        for k, f in enumerate(self.terms):
            out = out + t**k * f(z)
        return out

    def at(self, t):
        """The autonomous field z -> G(z, t)."""
        return _frozen(self, t)

    def sup_bound(self, radius, t0, t1):
        tmax = max(abs(t0), abs(t1))
        return float(sum(tmax**k * f.sup_bound(radius) for k, f in enumerate(self.terms)))


def _frozen(tf, t):
    polys = [f.to_polynomial() for f in tf.terms]
    if all(p is not None for p in polys):
        dim = tf.dim
        terms = {}
        for k, p in enumerate(polys):
            for exp, coef in zip(p.exponents, p.coefficients):
                terms[exp] = terms.get(exp, np.zeros(dim, complex)) + t**k * np.array(coef)
        return Polynomial.from_terms(dim, terms)
    return Combination(tuple(tf.terms), tuple(float(t) ** k for k in range(len(tf.terms))))


@dataclass(frozen=True)
class CallableTimeField:
    """Escape hatch for an arbitrary evaluator G(z, t)."""

    func: Callable
    dim: int
    name: str = "callable"
    bound: Optional[Callable] = None  # (radius, t0, t1) -> sup |G|

    def __call__(self, z, t):
        return self.func(np.asarray(z, dtype=complex), t)

    def sup_bound(self, radius, t0, t1):
        if self.bound is None:
            raise NotImplementedError
        return float(self.bound(radius, t0, t1))


@dataclass
class PiecewiseConstant:
    """Right-continuous step function on [edges[0], edges[-1])."""

    edges: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if len(self.edges) != len(self.values) + 1 or np.any(np.diff(self.edges) <= 0):
            raise InputError("need strictly increasing edges, one more than values")

    def __call__(self, t):
        i = np.clip(np.searchsorted(self.edges, t, side="right") - 1, 0, len(self.values) - 1)
        return self.values[i]

    def integral(self, a, b):
        lo = np.clip(self.edges[:-1], a, b)
        hi = np.clip(self.edges[1:], a, b)
        return float(np.sum(self.values * (hi - lo)))

    def lp_norm(self, d):
        widths = np.diff(self.edges)
        if math.isinf(d):
            return float(np.max(np.abs(self.values))) if len(self.values) else 0.0
        return float(np.sum(np.abs(self.values) ** d * widths) ** (1.0 / d))


@dataclass(frozen=True)
class Piece:
    start: float
    field: object  # HolomorphicField or a time field

    @property
    def autonomous(self):
        return isinstance(self.field, HolomorphicField)

    def rhs(self):
        f = self.field
        if self.autonomous:
            return lambda t, z: f(z)
        return lambda t, z: f(z, t)

    def sup_bound(self, radius, t0, t1):
        if self.autonomous:
            return self.field.sup_bound(radius)
        return self.field.sup_bound(radius, t0, t1)


@dataclass
class HerglotzField:
    """Piecewise-in-time field G(z, t); piece i covers [start_i, start_{i+1})."""

    pieces: tuple
    order: float = math.inf
    name: str = "herglotz"
    _bounds: dict = dc_field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.pieces = tuple(p if isinstance(p, Piece) else Piece(float(p[0]), p[1]) for p in self.pieces)
        starts = [p.start for p in self.pieces]
        if not starts or starts[0] != 0.0 or any(b <= a for a, b in zip(starts, starts[1:])):
            raise InputError(f"piece starts must increase strictly from 0, got {starts}")
        if not (self.order >= 1):
            raise InputError("order d must lie in [1, inf]")
        dims = {p.field.dim for p in self.pieces}
        if len(dims) != 1:
            raise InputError("all pieces must share one dimension")

    @classmethod
    def autonomous(cls, field, name=None):
        return cls(((0.0, field),), math.inf, name or "autonomous")

    @property
    def dim(self):
        return self.pieces[0].field.dim

    @property
    def breaks(self):
        return tuple(p.start for p in self.pieces)

    def piece_index(self, t):
        return int(np.searchsorted(self.breaks, t, side="right") - 1)

    def __call__(self, z, t):
        return self.pieces[self.piece_index(t)].rhs()(t, np.asarray(z, dtype=complex))

    def majorant(self, radius, T, cells_per_unit=8):
        """Piecewise-constant c_{K,T} on [0, T] with K = {max |z_j| <= radius}.

        Cell values are suprema bounds per piece; cells are refined to the
        piece breaks. Cached per (radius, T, cells_per_unit).
        """
        key = (float(radius), float(T), int(cells_per_unit))
        if key not in self._bounds:
            n = max(1, int(math.ceil(T * cells_per_unit)))
            edges = np.union1d(np.linspace(0.0, T, n + 1), [b for b in self.breaks if 0 < b < T])
            vals = []
            for a, b in zip(edges[:-1], edges[1:]):
                piece = self.pieces[self.piece_index(a)]
                vals.append(piece.sup_bound(radius, a, b))
            self._bounds[key] = PiecewiseConstant(edges, np.array(vals))
        return self._bounds[key]

    def bound_table(self, radii, T, cells_per_unit=8):
        return {float(r): self.majorant(r, T, cells_per_unit) for r in radii}


# ---------------------------------------------------------------------------
# certificates


@dataclass
class GeneratorCertificate:
    verdict: str  # "Generator" | "NotGenerator" | "Inconclusive"
    method: str
    dissipativity_pairs_tested: int = 0
    worst_dini: float = -math.inf
    witness_pair: Optional[tuple] = None
    escape_witness: Optional[tuple] = None  # (point, escape time estimate)
    escape_witnesses: list = dc_field(default_factory=list)
    notes: list = dc_field(default_factory=list)
    orbit_ends: list = dc_field(default_factory=list)  # (time reached, point) per grid point

    @property
    def is_generator(self):
        return self.verdict == "Generator"


def certify_generator_dissipative(domain: Domain, field, pairs=1000, seed=0,
                                  tol=DISSIPATIVITY_TOL, radius=0.999):
    """Sampled dissipativity test: Dini derivative of k along (H(z), H(w)) <= tol.

    Pairs are uniform in {norm <= radius} with separation at least 1e-6; the
    same seed gives the same pairs for every field.
    """
    if field.dim != domain.dim:
        raise InputError(f"field dimension {field.dim} does not match domain dimension {domain.dim}")
    rng = np.random.default_rng(seed)
    z, w = sample_pairs(domain, rng, pairs, radius)
    dini = dini_directional_derivative(domain, z, w, field(z), field(w))
    i = int(np.argmax(dini))
    worst = float(dini[i])
    verdict = "Generator" if worst <= tol else "NotGenerator"
    if not np.isfinite(worst):
        verdict = "Inconclusive"
    return GeneratorCertificate(
        verdict=verdict,
        method="dissipative",
        dissipativity_pairs_tested=pairs,
        worst_dini=worst,
        witness_pair=(z[i], w[i]),
    )


@functools.lru_cache(maxsize=256)
def _cached_certificate(domain, field):
    return certify_generator_dissipative(domain, field, pairs=200, seed=0)


def require_generator(domain, field):
    """Raise PreconditionError unless the field passes a (cached) 200-pair dissipativity test."""
    try:
        cert = _cached_certificate(domain, field)
    except TypeError:  # unhashable field
        cert = certify_generator_dissipative(domain, field, pairs=200, seed=0)
    if not cert.is_generator:
        raise PreconditionError(f"field is not a certified generator (worst Dini {cert.worst_dini:.3g})")
    return cert


def default_grid(domain, n=25, seed=0):
    """Deterministic grid of ``n`` points including the origin.

    On the disc: rings of radii 0.5, 0.9, 0.99. Elsewhere: seeded uniform
    samples of norm-radius 0.99.
    """
    if domain.kind == "disc" and n == 25:
        pts = [0j]
        for k, r in enumerate((0.5, 0.9, 0.99)):
            pts += [r * np.exp(1j * (2 * np.pi * j / 8 + k * np.pi / 8)) for j in range(8)]
        return np.array(pts)[:, None]
    rng = np.random.default_rng(seed)
    rest = sample_points(domain, rng, n - 1, 0.99)
    return np.vstack([np.zeros((1, domain.dim), complex), rest])


def certify_generator_flow(domain, field, horizon=50.0, grid=None, config=None,
                           speed_growth_tol=1e-3):
    """Flow test: integrate from every grid point up to ``horizon``.

    An orbit that reaches the boundary margin counts as an escape when its
    Kobayashi speed F(z(t); H(z(t))) has grown. Orbits of a generator only
    approach the boundary asymptotically, with non-increasing speed.
    """
    from .flows import integrate_autonomous
    from .errors import IntegratorStallError

    if horizon <= 0:
        raise InputError("horizon must be positive")
    grid = default_grid(domain) if grid is None else domain.point(grid)
    grid = grid.reshape(-1, domain.dim)
    cert = GeneratorCertificate(verdict="Generator", method="flow")
    stalled = False
    for z0 in grid:
        try:
            traj = integrate_autonomous(domain, field, z0, horizon, config)
        except IntegratorStallError as exc:
            stalled = True
            cert.notes.append(f"integrator stalled from {complex(z0[0]) if domain.dim == 1 else z0.tolist()}: {exc}")
            continue
        cert.orbit_ends.append((float(traj.times[-1]), traj.points[-1]))
        if traj.escaped:
            if traj.speed_ratio > 1.0 + speed_growth_tol:
                cert.escape_witnesses.append((z0, traj.escape_time_estimate))
            else:
                cert.notes.append(
                    f"orbit reached the boundary margin at t~{traj.escape_time_estimate:.4g} "
                    f"with non-increasing Kobayashi speed (ratio {traj.speed_ratio:.6f}); treated as asymptotic"
                )
    if cert.escape_witnesses:
        cert.verdict = "NotGenerator"
        cert.escape_witness = cert.escape_witnesses[0]
    elif stalled:
        cert.verdict = "Inconclusive"
    return cert


def check_herglotz_numerator(p, boundary_samples=256, radii=HERGLOTZ_RADII, tol=HERGLOTZ_TOL):
    """Sampled check that Re p >= -tol on circles of the given radii and at 0."""
    theta = 2 * np.pi * np.arange(boundary_samples) / boundary_samples
    pts = np.concatenate([[0j]] + [r * np.exp(1j * theta) for r in radii])
    re = np.real(p(pts))
    i = int(np.argmin(re))
    ok = bool(re[i] >= -tol)
    rep = Report("herglotz-numerator", metrics={
        "min_real_part": float(re[i]),
        "samples": int(len(pts)),
        "radii": list(radii),
    })
    if not ok:
        rep.violate("Re p >= 0", point=complex(pts[i]), value=float(re[i]))
    return rep


# ---------------------------------------------------------------------------
# linear part and the growth estimate


@dataclass
class LinearPartAnalysis:
    value_at_zero: np.ndarray
    jacobian_at_zero: np.ndarray
    numerical_radius: float


def _jacobian_at_zero(field):
    q = field.dim
    poly = field.to_polynomial()
    if poly is not None:
        J = np.zeros((q, q), complex)
        for exp, coef in zip(poly.exponents, poly.coefficients):
            if sum(exp) == 1:
                J[:, exp.index(1)] += np.array(coef)
        return J
    # Cauchy integral on a circle of radius 1/2 in each coordinate direction
    n, rho = 64, 0.5
    omega = np.exp(2j * np.pi * np.arange(n) / n)
    J = np.zeros((q, q), complex)
    for j in range(q):
        pts = np.zeros((n, q), complex)
        pts[:, j] = rho * omega
        vals = field(pts)
        J[:, j] = np.mean(vals * np.conj(omega)[:, None], axis=0) / rho
    return J


def numerical_radius(A, samples=4096, seed=0, refine=8, iterations=200):
    """V(A) = sup |<Av, v>| over unit vectors v.

    Dense random sampling of the unit sphere, then local ascent from the best
    samples: alternately fix the phase of <Av, v> and move v to the top
    eigenvector of the Hermitian part of the rotated matrix. Each move does
    not decrease |<Av, v>|.
    """
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    q = A.shape[0]
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((samples, q)) + 1j * rng.standard_normal((samples, q))
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    eye = np.eye(q)
    V = np.vstack([eye.astype(complex), V])
    vals = np.abs(np.einsum("ni,ij,nj->n", V.conj(), A, V))
    best = float(vals.max())
    for idx in np.argsort(vals)[::-1][:refine]:
        v = V[idx]
        cur = vals[idx]
        for _ in range(iterations):
            phase = np.vdot(v, A @ v)
            rot = A * np.exp(-1j * np.angle(phase)) if phase != 0 else A
            H = 0.5 * (rot + rot.conj().T)
            _, vecs = np.linalg.eigh(H)
            v = vecs[:, -1]
            new = abs(np.vdot(v, A @ v))
            if new <= cur * (1 + 1e-15):
                cur = max(cur, new)
                break
            cur = new
        best = max(best, float(cur))
    return best


def analyze_linear_part(field, samples=4096, seed=0):
    q = field.dim
    g0 = np.asarray(field(np.zeros((1, q), complex))[0])
    T = _jacobian_at_zero(field)
    return LinearPartAnalysis(g0, T, numerical_radius(T, samples=samples, seed=seed))


def check_norm_bound(domain, field, samples=2000, seed=0, certificate=None):
    """Check |G(z)| <= 5|G(0)| + 4|z| V(T) / (1 - |z|)^2 at random points of a disc or ball."""
    if domain.kind not in ("disc", "ball"):
        raise PreconditionError("the growth estimate is checked on the disc and the ball only")
    if certificate is None:
        certificate = certify_generator_dissipative(domain, field, pairs=500, seed=seed)
    if not certificate.is_generator:
        raise PreconditionError("field must be a certified generator")
    lin = analyze_linear_part(field)
    g0 = float(np.linalg.norm(lin.value_at_zero))
    rng = np.random.default_rng(seed)
    z = sample_points(domain, rng, samples, 0.999)
    r = np.linalg.norm(z, axis=1)
    lhs = np.linalg.norm(field(z), axis=1)
    rhs = 5 * g0 + 4 * r / (1 - r) ** 2 * lin.numerical_radius
    slack = 1e-12 * np.maximum(1.0, rhs)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rhs > 0, lhs / rhs, np.where(lhs > slack, np.inf, 0.0))
    rep = Report("norm-bound", metrics={
        "samples": samples,
        "max_ratio": float(np.max(ratio)),
        "norm_G0": g0,
        "numerical_radius": lin.numerical_radius,
    })
    bad = np.nonzero(lhs > rhs + slack)[0]
    for i in bad[:10]:
        rep.violate("|G(z)| <= 5|G(0)| + 4|z|V(T)/(1-|z|)^2", point=z[i], lhs=float(lhs[i]), rhs=float(rhs[i]))
    if len(bad) > 10:
        rep.notes.append(f"{len(bad) - 10} further violations omitted")
    return rep
