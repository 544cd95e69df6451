"""Model hyperbolic domains and their Kobayashi geometry.

Three complete hyperbolic models are supported: the unit disc, the unit ball
of C^q and the polydisc of C^q. Distances are normalised so that
k(0, r) = arctanh(r) on the disc, which makes the ball formula restrict to the
disc one for q = 1.

Points are complex arrays whose last axis has length q. Every function here is
vectorised over leading axes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegeneratePairError,
    DomainViolationError,
    InputError,
    InvalidCompactError,
    SamplingError,
    StepSizeError,
)

KINDS = ("disc", "ball", "polydisc")

# h = 2^-k * 1e-2, k = 0..20
DINI_LADDER = tuple(1e-2 * 2.0 ** -k for k in range(21))
# window of the ladder trusted for forward differences (truncation vs roundoff)
_LADDER_WINDOW = (1e-7, 1e-4)

TIE_TOL = 1e-12


@dataclass(frozen=True)
class Domain:
    kind: str = "disc"
    dim: int = 1
    boundary_margin: float = 1e-9

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown domain kind {self.kind!r}; expected one of {KINDS}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise InputError(f"dim must be a positive integer, got {self.dim!r}")
        if self.kind == "disc" and self.dim != 1:
            raise InputError("the unit disc has dim 1")
        if not 0.0 < self.boundary_margin < 1.0:
            raise InputError("boundary_margin must lie in (0, 1)")

    @classmethod
    def disc(cls, boundary_margin=1e-9):
        return cls("disc", 1, boundary_margin)

    @classmethod
    def ball(cls, dim, boundary_margin=1e-9):
        return cls("ball", dim, boundary_margin)

    @classmethod
    def polydisc(cls, dim, boundary_margin=1e-9):
        return cls("polydisc", dim, boundary_margin)

    # -- points ---------------------------------------------------------------

    def as_points(self, z):
        """Coerce ``z`` to a complex array with trailing axis q (no containment check)."""
        z = np.asarray(z, dtype=complex)
        if self.dim == 1 and (z.ndim == 0 or z.shape[-1] != 1):
            z = z[..., None]
        if z.shape[-1] != self.dim:
            raise InputError(f"expected points with {self.dim} coordinates, got shape {z.shape}")
        return z

    def norm(self, z):
        """Minkowski functional of the domain: Euclidean norm, or max modulus for the polydisc."""
        z = np.asarray(z)
        if self.kind == "polydisc":
            return np.max(np.abs(z), axis=-1)
        return np.sqrt(np.sum(np.abs(z) ** 2, axis=-1))

    def contains(self, z):
        return self.norm(self.as_points(z)) < 1.0

    def point(self, z):
        """Validated point(s); raises DomainViolationError when any lies outside."""
        z = self.as_points(z)
        inside = self.norm(z) < 1.0
        if not np.all(inside):
            bad = z[~inside][0] if z.ndim > 1 else z
            raise DomainViolationError(bad)
        return z

    def time_to_boundary(self, z, v, near=0.9):
        """(1 - radius) / outward radial speed, per point; inf when not near or not outward.

        On the polydisc every coordinate with modulus above ``near`` counts.
        """
        z = np.asarray(z)
        v = np.asarray(v)
        if self.kind == "polydisc":
            r = np.abs(z)
            out = np.real(v * np.conj(z)) / np.where(r > 0, r, 1.0)
        else:
            r = np.sqrt(np.sum(np.abs(z) ** 2, axis=-1))
            out = np.real(np.sum(v * np.conj(z), axis=-1)) / np.where(r > 0, r, 1.0)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            ttb = np.where((r > near) & (out > 0), (1.0 - r) / out, np.inf)
        if self.kind == "polydisc":
            ttb = np.min(ttb, axis=-1)
        return ttb

    def escaped(self, z):
        return self.norm(z) >= 1.0 - self.boundary_margin

    # -- geometry -------------------------------------------------------------

    def distance(self, z, w):
        return kobayashi_distance(self, z, w)

    def metric(self, z, v):
        return kobayashi_metric(self, z, v)

    def dini(self, z, w, u, v, method="analytic"):
        return dini_directional_derivative(self, z, w, u, v, method=method)

    def sample(self, rng, n, radius=0.999):
        return sample_points(self, rng, n, radius)


# ---------------------------------------------------------------------------
# closed-form distances


def _inner(a, b):
    # <a, b> = sum a_i conj(b_i)
    return np.sum(a * np.conj(b), axis=-1)


def _ball_parts(z, w):
    """Return (N, D, P) with s^2 = N / D and 1 - s^2 = P / D.

    N is assembled through the Lagrange identity so that it stays accurate
    when z and w are close.
    """
    zz = np.sum(np.abs(z) ** 2, axis=-1)
    ww = np.sum(np.abs(w) ** 2, axis=-1)
    c = 1.0 - _inner(z, w)
    D = np.abs(c) ** 2
    P = (1.0 - zz) * (1.0 - ww)
    N = np.sum(np.abs(z - w) ** 2, axis=-1)
    q = z.shape[-1]
    for i in range(q):
        for j in range(i + 1, q):
            N = N - np.abs(z[..., i] * w[..., j] - z[..., j] * w[..., i]) ** 2
    N = np.maximum(N, 0.0)
    return N, D, P, c


def _arctanh_from_parts(N, D, P):
    s = np.sqrt(N / D)
    with np.errstate(divide="ignore", invalid="ignore"):
        # log form keeps precision when s is close to 1
        far = np.log1p(s) - 0.5 * np.log(P / D)
    return np.where(s < 0.5, np.arctanh(np.minimum(s, 0.5)), far)


def _disc_coordinate_distances(z, w):
    """Per-coordinate Poincare distances, shape (..., q)."""
    diff = np.abs(z - w) ** 2
    D = np.abs(1.0 - z * np.conj(w)) ** 2
    P = (1.0 - np.abs(z) ** 2) * (1.0 - np.abs(w) ** 2)
    return _arctanh_from_parts(diff, D, P)


def kobayashi_distance(domain, z, w):
    """Kobayashi distance between ``z`` and ``w``.

    Disc: arctanh of the pseudo-hyperbolic distance. Ball: arctanh of the norm
    of the automorphism moving w to 0, evaluated at z. Polydisc: maximum of the
    coordinate disc distances.
    """
    z = domain.point(z)
    w = domain.point(w)
    return _distance_unchecked(domain, z, w)


def _distance_unchecked(domain, z, w):
    if domain.kind == "polydisc":
        return np.max(_disc_coordinate_distances(z, w), axis=-1)
    N, D, P, _ = _ball_parts(z, w)
    return _arctanh_from_parts(N, D, P)


def kobayashi_metric(domain, z, v):
    """Infinitesimal Kobayashi metric F(z; v)."""
    z = domain.point(z)
    v = domain.as_points(v)
    if domain.kind == "polydisc":
        return np.max(np.abs(v) / (1.0 - np.abs(z) ** 2), axis=-1)
    a = 1.0 - np.sum(np.abs(z) ** 2, axis=-1)
    vv = np.sum(np.abs(v) ** 2, axis=-1)
    vz = np.abs(_inner(v, z)) ** 2
    return np.sqrt(vv / a + vz / a**2)


# ---------------------------------------------------------------------------
# Dini derivatives


def _ball_dini(z, w, u, v):
    N, D, P, c = _ball_parts(z, w)
    s = np.sqrt(N / D)
    dc = -(_inner(u, w) + _inner(z, v))
    dD_over_D = 2.0 * np.real(dc / c)

    # far form: (D'/D - P'/P) / (2 s)
    zz = np.sum(np.abs(z) ** 2, axis=-1)
    ww = np.sum(np.abs(w) ** 2, axis=-1)
    dP_over_P = -2.0 * np.real(_inner(u, z)) / (1.0 - zz) - 2.0 * np.real(_inner(v, w)) / (1.0 - ww)

    # near form: (N' / (2 sqrt(N D)) - s D' / (2 D)) / (1 - s^2)
    dN = 2.0 * np.real(_inner(u - v, z - w))
    q = z.shape[-1]
    for i in range(q):
        for j in range(i + 1, q):
            m = z[..., i] * w[..., j] - z[..., j] * w[..., i]
            dm = u[..., i] * w[..., j] + z[..., i] * v[..., j] - u[..., j] * w[..., i] - z[..., j] * v[..., i]
            dN = dN - 2.0 * np.real(np.conj(m) * dm)

    with np.errstate(divide="ignore", invalid="ignore"):
        far = (dD_over_D - dP_over_P) / (2.0 * s)
        near = (dN / (2.0 * np.sqrt(N * D)) - 0.5 * s * dD_over_D) / (P / D)
    return np.where(s < 0.5, near, far)


def tied_coordinates(domain, z, w, tol=TIE_TOL):
    """Boolean mask of coordinates attaining the polydisc maximum.

    More than one True entry marks a point where the polydisc distance is not
    differentiable. For the disc and the ball every entry is True.
    """
    z = domain.point(z)
    w = domain.point(w)
    if domain.kind != "polydisc":
        return np.ones(z.shape, dtype=bool)
    d = _disc_coordinate_distances(z, w)
    dmax = np.max(d, axis=-1, keepdims=True)
    return d >= dmax - tol * np.maximum(1.0, dmax)


def is_nonsmooth_locus(domain, z, w, tol=TIE_TOL):
    return np.sum(tied_coordinates(domain, z, w, tol), axis=-1) > 1 if domain.kind == "polydisc" else False


def _check_pair(domain, z, w, u, v):
    z = domain.point(z)
    w = domain.point(w)
    u = np.broadcast_to(domain.as_points(u), np.broadcast_shapes(z.shape, w.shape))
    v = np.broadcast_to(domain.as_points(v), u.shape)
    if np.any(np.sqrt(np.sum(np.abs(z - w) ** 2, axis=-1)) <= 1e-14):
        raise DegeneratePairError("Dini derivative of the distance needs z != w")
    return z, w, u, v


def dini_directional_derivative(domain, z, w, u, v, method="analytic"):
    """Lower Dini derivative of k at (z, w) in the direction (u, v).

    ``method="analytic"`` differentiates the closed form. On the polydisc the
    one-sided derivative of the maximum is the largest derivative among the
    coordinates attaining it. ``method="numeric"`` uses forward differences on
    the fixed ladder ``DINI_LADDER`` with first-order Richardson extrapolation
    and takes the minimum over the trusted window (single pair only).
    """
    z, w, u, v = _check_pair(domain, z, w, u, v)
    if method == "numeric":
        return dini_numeric(domain, z, w, u, v)
    if method != "analytic":
        raise InputError(f"unknown method {method!r}")
    if domain.kind != "polydisc":
        return _ball_dini(z, w, u, v)

    d = _disc_coordinate_distances(z, w)
    dmax = np.max(d, axis=-1, keepdims=True)
    active = (d >= dmax - TIE_TOL * np.maximum(1.0, dmax)) & (d > 0)
    per = _ball_dini(z[..., None], w[..., None], u[..., None], v[..., None])
    per = np.where(active, per, -np.inf)
    return np.max(per, axis=-1)


def dini_numeric(domain, z, w, u, v, ladder=DINI_LADDER):
    z, w, u, v = _check_pair(domain, z, w, u, v)
    if z.ndim != 1:
        raise InputError("numeric Dini derivative takes a single pair")
    k0 = _distance_unchecked(domain, z, w)
    hs, qs = [], []
    for h in ladder:
        a, b = z + h * u, w + h * v
        if domain.norm(a) < 1.0 and domain.norm(b) < 1.0:
            hs.append(h)
            qs.append((_distance_unchecked(domain, a, b) - k0) / h)
    if not hs:
        raise StepSizeError("every step of the ladder leaves the domain")
    lo, hi = _LADDER_WINDOW
    cands = []
    for i in range(len(hs) - 1):
        h1, h2 = hs[i], hs[i + 1]
        if lo <= h2 and h1 <= hi:
            # first-order extrapolation for a general ratio h1/h2
            r = h1 / h2
            cands.append((r * qs[i + 1] - qs[i]) / (r - 1.0))
    if not cands:
        # too close to the boundary for the window: fall back to the smallest step
        return float(qs[-1])
    return float(min(cands))


# ---------------------------------------------------------------------------
# sampling and Lipschitz certificate


def sample_points(domain, rng, n, radius=0.999):
    """Uniform samples in {norm <= radius} (Euclidean ball, or polydisc)."""
    q = domain.dim
    if domain.kind == "polydisc":
        r = radius * np.sqrt(rng.random((n, q)))
        theta = 2 * np.pi * rng.random((n, q))
        return r * np.exp(1j * theta)
    g = rng.standard_normal((n, 2 * q))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.random(n) ** (1.0 / (2 * q))
    x = g * r[:, None]
    return x[:, :q] + 1j * x[:, q:]


def sample_pairs(domain, rng, n, radius=0.999, min_sep=1e-6, max_rounds=50):
    """``n`` pairs (z, w) with Euclidean separation at least ``min_sep``, by rejection."""
    zs, ws = [], []
    have = 0
    for _ in range(max_rounds):
        z = sample_points(domain, rng, n, radius)
        w = sample_points(domain, rng, n, radius)
        ok = np.linalg.norm(z - w, axis=1) >= min_sep
        zs.append(z[ok])
        ws.append(w[ok])
        have += int(ok.sum())
        if have >= n:
            return np.concatenate(zs)[:n], np.concatenate(ws)[:n]
    raise SamplingError(f"could only draw {have} of {n} separated pairs")


@dataclass
class LipschitzEstimate:
    compact_radius: float
    constant: float
    max_ratio: float
    samples: int
    verified: bool


def lipschitz_certificate(domain, compact_radius, samples, seed):
    """Local Lipschitz constant of k on K x K, K = {norm <= compact_radius}.

    The constant is the supremum of the infinitesimal Kobayashi metric over K
    (per unit Euclidean length), 1 / (1 - r^2) for all three models, and is
    checked against ``samples`` random quadruples. Half of the quadruples are
    small perturbations, where the ratio approaches the constant.
    """
    r = float(compact_radius)
    if not 0.0 < r < 1.0:
        raise InvalidCompactError(f"compact_radius must lie in (0, 1), got {compact_radius}")
    if samples < 1:
        raise InputError("samples must be >= 1")
    constant = 1.0 / (1.0 - r * r)
    rng = np.random.default_rng(seed)
    z, w, z2, w2 = (sample_points(domain, rng, samples, r) for _ in range(4))
    near = np.arange(samples) % 2 == 1
    for a, b in ((z, z2), (w, w2)):
        b[near] = a[near] + 1e-3 * r * sample_points(domain, rng, int(near.sum()), 1.0)
        nb = domain.norm(b)
        over = nb > r
        b[over] *= (r / nb[over])[:, None]
    num = np.abs(_distance_unchecked(domain, z, w) - _distance_unchecked(domain, z2, w2))
    den = np.linalg.norm(z - z2, axis=1) + np.linalg.norm(w - w2, axis=1)
    ratio = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    max_ratio = float(np.max(ratio))
    return LipschitzEstimate(r, constant, max_ratio, samples, max_ratio <= constant + 1e-12)
