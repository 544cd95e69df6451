import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from loewnerkit import Domain, dini_directional_derivative, kobayashi_distance, kobayashi_metric, lipschitz_certificate
from loewnerkit.domains import dini_numeric, is_nonsmooth_locus, tied_coordinates
from loewnerkit.errors import (
    DegeneratePairError,
    DomainViolationError,
    InputError,
    InvalidCompactError,
    StepSizeError,
)
from oracles import polyline_distance, richardson_forward

DISC = Domain.disc()


def points_in(domain, radius=0.95):
    """Hypothesis strategy for points of ``domain`` with norm <= radius."""
    q = domain.dim
    coord = st.floats(-1, 1, allow_nan=False)

    def build(xs):
        z = np.array(xs[:q]) + 1j * np.array(xs[q:])
        n = float(domain.norm(z))
        if n > radius:
            z = z * (radius / n)
        return z

    return st.lists(coord, min_size=2 * q, max_size=2 * q).map(build)


def mobius(a, z):
    return (z - a) / (1 - np.conj(a) * z)


def random_unitary(rng, q):
    m = rng.standard_normal((q, q)) + 1j * rng.standard_normal((q, q))
    qq, r = np.linalg.qr(m)
    return qq * (np.diag(r) / np.abs(np.diag(r)))


# --- construction and containment


def test_domain_validation():
    with pytest.raises(InputError):
        Domain("disc", 2)
    with pytest.raises(InputError):
        Domain("ball", 0)
    with pytest.raises(InputError):
        Domain("disc", 1, boundary_margin=1.0)
    with pytest.raises(InputError):
        Domain("annulus", 1)


def test_containment_per_kind():
    assert DISC.contains(0.99)
    assert not DISC.contains(1.0)
    ball = Domain.ball(2)
    poly = Domain.polydisc(2)
    z = np.array([0.8, 0.8])
    assert not ball.contains(z)
    assert poly.contains(z)


def test_outside_point_raises_with_point():
    with pytest.raises(DomainViolationError) as info:
        kobayashi_distance(DISC, 0, 1.2)
    assert info.value.point == pytest.approx(1.2)


# --- closed-form anchors


def test_disc_anchors():
    assert kobayashi_distance(DISC, 0, 0) == 0
    assert kobayashi_distance(DISC, 0, 0.5) == pytest.approx(0.549306144334055, abs=1e-12)
    for r in (0.1, 0.9, 0.999999):
        assert kobayashi_distance(DISC, 0, r) == pytest.approx(math.atanh(r), rel=1e-12)


def test_polydisc_anchor():
    poly = Domain.polydisc(2)
    d = kobayashi_distance(poly, [0, 0], [0.5, 0.3])
    assert d == pytest.approx(max(math.atanh(0.5), math.atanh(0.3)), abs=1e-12)


def test_ball_reduces_to_disc_on_a_line():
    ball = Domain.ball(3)
    e = np.array([1, 1j, -1]) / math.sqrt(3)
    for a, b in [(0.1, 0.7), (-0.3 + 0.2j, 0.5j), (0.95, -0.95)]:
        assert kobayashi_distance(ball, a * e, b * e) == pytest.approx(
            float(kobayashi_distance(DISC, a, b)), rel=1e-12)


def test_near_boundary_precision():
    # arctanh z = 0.5 log((2 - e) / e) with e = 1 - z, which is exact in floating point here
    z = 1 - 1e-12
    e = 1 - z
    assert kobayashi_distance(DISC, 0, z) == pytest.approx(0.5 * math.log((2 - e) / e), rel=1e-12)


@pytest.mark.parametrize("seed", [0, 1])
def test_oracle_agreement_sample(seed):
    rng = np.random.default_rng(seed)
    for _ in range(5):
        z, w = DISC.sample(rng, 2, 0.9)
        assert polyline_distance(z[0], w[0]) == pytest.approx(float(kobayashi_distance(DISC, z, w)), abs=1e-5)


# --- properties


@given(points_in(DISC), points_in(DISC))
def test_disc_symmetry(z, w):
    # symmetric up to the last bits of the complex products
    assert abs(kobayashi_distance(DISC, z, w) - kobayashi_distance(DISC, w, z)) <= 1e-12


@pytest.mark.parametrize("domain", [DISC, Domain.ball(2), Domain.ball(3), Domain.polydisc(2)], ids=str)
def test_symmetry_and_triangle(domain):
    rng = np.random.default_rng(11)
    z, w, x = (domain.sample(rng, 400, 0.99) for _ in range(3))
    dzw = kobayashi_distance(domain, z, w)
    assert np.allclose(dzw, kobayashi_distance(domain, w, z), rtol=0, atol=1e-12)
    assert np.all(dzw <= kobayashi_distance(domain, z, x) + kobayashi_distance(domain, x, w) + 1e-10)
    assert np.all(dzw >= 0)


@given(points_in(DISC), points_in(DISC), points_in(DISC, 0.9))
def test_mobius_invariance(z, w, a):
    a = complex(a[0])
    d0 = kobayashi_distance(DISC, z, w)
    d1 = kobayashi_distance(DISC, mobius(a, z), mobius(a, w))
    assert abs(d0 - d1) <= 1e-10 * max(1.0, float(d0))


@given(st.integers(0, 2**32 - 1), st.integers(2, 4))
def test_unitary_invariance(seed, q):
    rng = np.random.default_rng(seed)
    ball = Domain.ball(q)
    z, w = ball.sample(rng, 2, 0.99)
    U = random_unitary(rng, q)
    d0 = float(kobayashi_distance(ball, z, w))
    d1 = float(kobayashi_distance(ball, U @ z, U @ w))
    assert abs(d0 - d1) <= 1e-10 * max(1.0, d0)


@given(points_in(DISC), points_in(DISC))
def test_distance_zero_iff_equal(z, w):
    d = float(kobayashi_distance(DISC, z, w))
    sep = float(np.max(np.abs(z - w)))
    if sep == 0:
        assert d == 0
    elif sep > 1e-150:  # below this the squared separation underflows
        assert d > 0


def test_metric_matches_distance_derivative():
    rng = np.random.default_rng(4)
    for domain in (DISC, Domain.ball(2), Domain.polydisc(2)):
        z = domain.sample(rng, 1, 0.8)[0]
        v = domain.sample(rng, 1, 1.0)[0]
        h = 1e-7
        fd = float(kobayashi_distance(domain, z, z + h * v)) / h
        assert float(kobayashi_metric(domain, z, v)) == pytest.approx(fd, rel=1e-5)


# --- Dini derivatives


def test_dini_example_from_contraction():
    # k(e^{-t} 0.3, -e^{-t} 0.3) = arctanh(0.6 e^{-t} / (1 + 0.09 e^{-2t}))
    def r(t):
        return 0.6 * math.exp(-t) / (1 + 0.09 * math.exp(-2 * t))

    expected = (-0.6 / (1 + 0.09) + 0.6 * 0.18 / (1 + 0.09) ** 2) / (1 - r(0) ** 2)
    got = float(dini_directional_derivative(DISC, 0.3, -0.3, -0.3, 0.3))
    assert got == pytest.approx(expected, abs=1e-12)
    assert got == pytest.approx(-0.659, abs=1e-3)


def test_dini_zero_direction_and_rotation():
    rng = np.random.default_rng(2)
    z, w = DISC.sample(rng, 2, 0.99)
    assert float(dini_directional_derivative(DISC, z, w, 0, 0)) == 0
    assert abs(float(dini_directional_derivative(DISC, z, w, 1j * z, 1j * w))) < 1e-9


def test_dini_degenerate_pair():
    with pytest.raises(DegeneratePairError):
        dini_directional_derivative(DISC, 0.3, 0.3, 1, 1)


def test_dini_step_size_error():
    # both points on the margin, directions pointing out: every ladder step leaves the disc
    z = 1 - 1e-15
    with pytest.raises(StepSizeError):
        dini_numeric(DISC, z, -z, 1, -1)


@pytest.mark.parametrize("domain", [DISC, Domain.ball(2), Domain.ball(3)], ids=str)
def test_dini_vs_richardson_finite_differences(domain):
    rng = np.random.default_rng(5)
    for _ in range(20):
        z, w = domain.sample(rng, 2, 0.9)
        u, v = domain.sample(rng, 2, 1.0)
        assume_ok = float(np.linalg.norm(z - w)) > 0.05
        if not assume_ok:
            continue
        est, _ = richardson_forward(lambda h: float(kobayashi_distance(domain, z + h * u, w + h * v)), 0.0)
        assert float(dini_directional_derivative(domain, z, w, u, v)) == pytest.approx(est, abs=1e-6)


def test_dini_numeric_agrees_on_separated_pairs():
    rng = np.random.default_rng(6)
    for domain in (DISC, Domain.ball(2)):
        for _ in range(10):
            z, w = domain.sample(rng, 2, 0.9)
            u, v = domain.sample(rng, 2, 1.0)
            if np.linalg.norm(z - w) < 0.1:
                continue
            a = float(dini_directional_derivative(domain, z, w, u, v))
            n = dini_directional_derivative(domain, z, w, u, v, method="numeric")
            assert n == pytest.approx(a, abs=1e-6)


def test_polydisc_tie_locus():
    poly = Domain.polydisc(2)
    z, w = np.array([0, 0]), np.array([0.5, -0.5])
    assert is_nonsmooth_locus(poly, z, w)
    assert tied_coordinates(poly, z, w).tolist() == [True, True]
    # coordinate 1 grows faster than coordinate 2 shrinks: derivative of the max is the larger one
    u = np.array([0, 0])
    v = np.array([0.1, 0.2])
    per = [float(dini_directional_derivative(DISC, 0, b, 0, c)) for b, c in zip(w, v)]
    got = float(dini_directional_derivative(poly, z, w, u, v))
    assert got == pytest.approx(max(per), abs=1e-12)
    assert dini_directional_derivative(poly, z, w, u, v, method="numeric") == pytest.approx(got, abs=1e-6)


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100))
def test_dini_positive_homogeneity(seed, lam):
    rng = np.random.default_rng(seed)
    ball = Domain.ball(2)
    z, w = ball.sample(rng, 2, 0.99)
    assume(np.linalg.norm(z - w) > 1e-6)
    u, v = ball.sample(rng, 2, 1.0)
    d1 = float(dini_directional_derivative(ball, z, w, u, v))
    d2 = float(dini_directional_derivative(ball, z, w, lam * u, lam * v))
    assert d2 == pytest.approx(lam * d1, rel=1e-9, abs=1e-12)


# --- Lipschitz certificate


@pytest.mark.parametrize("domain", [DISC, Domain.polydisc(2), Domain.ball(2)], ids=str)
def test_lipschitz_certificate(domain):
    est = lipschitz_certificate(domain, 0.5, 1000, seed=0)
    assert est.constant == pytest.approx(4 / 3)
    assert est.verified
    assert est.max_ratio <= est.constant + 1e-12


def test_lipschitz_small_radius_ratio_near_one():
    est = lipschitz_certificate(DISC, 1e-3, 500, seed=1)
    # density 1 at the origin; random quadruples approach it from below
    assert 0.95 <= est.max_ratio <= est.constant + 1e-12


def test_lipschitz_invalid_compact():
    with pytest.raises(InvalidCompactError):
        lipschitz_certificate(DISC, 1.0, 10, 0)


@given(st.integers(0, 2**32 - 1))
def test_lipschitz_deterministic(seed):
    a = lipschitz_certificate(DISC, 0.7, 50, seed)
    b = lipschitz_certificate(DISC, 0.7, 50, seed)
    assert a == b
