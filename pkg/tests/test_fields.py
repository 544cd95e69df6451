import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from loewnerkit import (
    BerksonPorta,
    Domain,
    Linear,
    Polynomial,
    analyze_linear_part,
    certify_generator_dissipative,
    certify_generator_flow,
    check_herglotz_numerator,
    check_norm_bound,
    cone_combine,
    evaluate,
    numerical_radius,
)
from loewnerkit import builtins as B
from loewnerkit.errors import DomainViolationError, InputError, InvalidWeightError, PreconditionError
from loewnerkit.fields import Combination, HerglotzField, TimePolynomialField, rational
from oracles import dense_sphere_radius, numerical_radius_oracle

DISC = Domain.disc()


# --- construction and evaluation


def test_evaluate_builtins():
    z = np.array([0.3, -0.2j, 0.5 + 0.1j])
    assert np.allclose(evaluate(B.contraction(), z)[:, 0], -z)
    assert np.allclose(evaluate(B.rotation(), z)[:, 0], 1j * z)
    assert np.allclose(evaluate(B.tanh_field(), z)[:, 0], 1 - z**2)
    assert np.allclose(evaluate(B.constant(), z)[:, 0], 1)
    assert np.allclose(evaluate(B.cone_demo(), z)[:, 0], 0.3 * (-z) + 0.7 * (1 - z**2))


def test_evaluate_checks_domain():
    with pytest.raises(DomainViolationError):
        evaluate(B.contraction(), 1.5, DISC)
    with pytest.raises(InputError):
        evaluate(B.contraction(2), [0.1], DISC)


def test_ball_translation_formula():
    a = np.array([0.5, 0.2j])
    H = B.ball_translation(a)
    z = np.array([0.1 + 0.2j, -0.3])
    assert np.allclose(H(z[None])[0], a - np.vdot(a, z) * z)


def test_berkson_porta_demo_is_tanh_field():
    z = DISC.sample(np.random.default_rng(0), 50, 0.99)
    assert np.allclose(B.berkson_porta_demo()(z), B.tanh_field()(z), atol=1e-14)
    poly = B.berkson_porta_demo().to_polynomial()
    assert poly is not None and poly.degree() == 2


def test_berkson_porta_rejects_tau_outside():
    with pytest.raises(InputError):
        BerksonPorta(1.5, rational((1,)))


def test_polynomial_rejects_bad_exponent():
    with pytest.raises(InputError):
        Polynomial.from_terms(2, {(1,): [1, 0]})
    with pytest.raises(InputError):
        Linear.from_matrix(np.ones((2, 3)))


# --- Herglotz numerator


@pytest.mark.parametrize("num,den", [((1,), (1,)), ((1, 1), (1, -1)), ((2, 0.5j), (1,))])
def test_herglotz_numerator_pass(num, den):
    assert check_herglotz_numerator(rational(num, den)).passed


@pytest.mark.parametrize("num", [(-1,), (0, 1), (0.2, 1)])
def test_herglotz_numerator_fail(num):
    rep = check_herglotz_numerator(rational(num))
    assert not rep.passed
    assert rep.metrics["min_real_part"] < 0


# --- certificates


GENERATORS = ["contraction", "rotation", "tanh", "cone_demo", "berkson_porta_demo", "ball_translation"]


@pytest.mark.parametrize("name", GENERATORS)
def test_dissipative_certificate_disc(name):
    cert = certify_generator_dissipative(DISC, B.build_field(name, 1), pairs=500, seed=3)
    assert cert.verdict == "Generator"
    assert cert.dissipativity_pairs_tested == 500


def test_constant_not_generator_with_witness():
    cert = certify_generator_dissipative(DISC, B.constant(), pairs=500, seed=3)
    assert cert.verdict == "NotGenerator"
    z, w = cert.witness_pair
    assert DISC.contains(z) and DISC.contains(w)
    assert cert.worst_dini > 0


@pytest.mark.parametrize("domain", [Domain.ball(2), Domain.polydisc(2)], ids=str)
def test_dissipative_certificate_higher_dim(domain):
    for name in ("contraction", "rotation"):
        assert certify_generator_dissipative(domain, B.build_field(name, 2), pairs=300).is_generator
    assert not certify_generator_dissipative(domain, B.constant(2), pairs=300).is_generator


def test_tanh_is_polydisc_generator_but_not_ball_generator():
    assert certify_generator_dissipative(Domain.polydisc(2), B.tanh_field(2), pairs=500).is_generator
    assert not certify_generator_dissipative(Domain.ball(2), B.tanh_field(2), pairs=500).is_generator
    assert certify_generator_dissipative(Domain.ball(2), B.ball_translation(dim=2), pairs=500).is_generator


def test_flow_certificate_small_grid():
    grid = np.array([0, 0.5, -0.9j])
    cert = certify_generator_flow(DISC, B.tanh_field(), horizon=5, grid=grid)
    assert cert.verdict == "Generator"
    assert len(cert.orbit_ends) == 3
    # orbits of 1 - z^2 tend to +1
    for _, p in cert.orbit_ends:
        assert abs(p[0] - 1) < 1e-3


def test_flow_certificate_constant_escapes_at_one():
    cert = certify_generator_flow(DISC, B.constant(), horizon=5, grid=np.array([0.0]))
    assert cert.verdict == "NotGenerator"
    z0, t_esc = cert.escape_witness
    # the escape margin is 1e-9 below the unit circle
    assert t_esc == pytest.approx(1.0, abs=1e-6)


def test_flow_certificate_rejects_bad_horizon():
    with pytest.raises(InputError):
        certify_generator_flow(DISC, B.contraction(), horizon=0)


@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
def test_positive_scaling_keeps_verdict(seed, lam):
    for name in ("contraction", "tanh", "constant"):
        H = B.build_field(name)
        scaled = cone_combine([H], [lam])
        a = certify_generator_dissipative(DISC, H, pairs=100, seed=seed).verdict
        b = certify_generator_dissipative(DISC, scaled, pairs=100, seed=seed).verdict
        assert a == b


@given(st.floats(1e-6, 1e3), st.floats(0, 1e3), st.complex_numbers(max_magnitude=1.0))
def test_berkson_porta_fields_certify(a, b, tau):
    # p = a + b (1 + z)/(1 - z) has Re p >= 0 on the disc
    p = rational((a + b, a - b), (1, -1)) if b else rational((a,))
    cert = certify_generator_dissipative(DISC, BerksonPorta(tau, p), pairs=200, seed=0)
    assert cert.verdict == "Generator"


@pytest.mark.parametrize("tau,num,den", [(0.5j, (1, 0.5), (1,)), (1.0, (2, 1), (1, -0.5)),
                                         (-0.3 + 0.3j, (1j + 1,), (1,)), (1j, (1, 1), (1, -1))])
def test_berkson_porta_both_methods(tau, num, den):
    p = rational(num, den)
    assert check_herglotz_numerator(p).passed
    H = BerksonPorta(tau, p)
    assert certify_generator_dissipative(DISC, H, pairs=500).is_generator
    grid = np.array([0, 0.9, -0.9, 0.99j, 0.5 - 0.5j])
    assert certify_generator_flow(DISC, H, horizon=20, grid=grid).is_generator


def test_bad_numerator_gives_non_generator():
    H = BerksonPorta(0.0, rational((-1,)))  # H = z pushes everything outward
    assert not certify_generator_dissipative(DISC, H, pairs=300).is_generator


# --- cone


def test_cone_combine_polynomial_and_fallback():
    c = cone_combine([B.contraction(), B.tanh_field()], [0.3, 0.7])
    assert isinstance(c, Polynomial)
    H = B.berkson_porta(0.5, (1,), (1, 0.1))  # rational, no polynomial form
    mixed = cone_combine([H, B.contraction()], [1.0, 2.0])
    assert isinstance(mixed, Combination)
    z = np.array([[0.2 + 0.1j]])
    assert np.allclose(mixed(z), H(z) - 2 * z)


def test_cone_zero_weight_is_zero_field():
    c = cone_combine([B.contraction(), B.rotation()], [0, 0])
    assert np.allclose(c(DISC.sample(np.random.default_rng(0), 10, 0.9)), 0)
    assert certify_generator_dissipative(DISC, c, pairs=100).is_generator


@pytest.mark.parametrize("w", [-1.0, math.nan, math.inf])
def test_cone_rejects_invalid_weights(w):
    with pytest.raises(InvalidWeightError):
        cone_combine([B.contraction(), B.rotation()], [1.0, w])


def test_cone_rejects_mismatch():
    with pytest.raises(InputError):
        cone_combine([B.contraction()], [1.0, 2.0])
    with pytest.raises(InputError):
        cone_combine([B.contraction(1), B.contraction(2)], [1.0, 1.0])


# --- linear part and growth bound


def test_numerical_radius_anchors():
    assert numerical_radius(np.diag([1, -2])) == pytest.approx(2.0, abs=1e-6)
    assert numerical_radius([[0, 1], [0, 0]]) == pytest.approx(0.5, abs=1e-3)


@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_numerical_radius_vs_oracles(seed, q):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((q, q)) + 1j * rng.standard_normal((q, q))
    v = numerical_radius(A)
    exact = numerical_radius_oracle(A, thetas=720)
    # the theta sweep is itself a lower bound with O(step^2) error
    assert v == pytest.approx(exact, rel=1e-4)
    assert v >= dense_sphere_radius(A, n=20_000, seed=seed) - 1e-12
    # bounds: spectral radius <= V <= operator norm
    assert v <= np.linalg.norm(A, 2) + 1e-12
    assert v >= np.max(np.abs(np.linalg.eigvals(A))) - 1e-9


@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_linear_part_of_linear_field_is_exact(seed, q):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((q, q)) + 1j * rng.standard_normal((q, q))
    lin = analyze_linear_part(Linear.from_matrix(A))
    assert np.array_equal(lin.jacobian_at_zero, A)
    assert np.all(lin.value_at_zero == 0)
    assert lin.numerical_radius >= np.max(np.abs(np.diag(A))) - 1e-12


def test_linear_part_polynomial_and_cauchy_agree():
    H = B.berkson_porta(0.5, (1,), (1, 0.1))
    lin = analyze_linear_part(H)
    # H = (0.5 - z)(1 - 0.5 z) / (1 + 0.1 z); derivative at 0 by hand
    expected = -1.25 - 0.5 * 0.1
    assert lin.jacobian_at_zero[0, 0] == pytest.approx(expected, abs=1e-12)
    assert lin.value_at_zero[0] == pytest.approx(0.5)
    lin_t = analyze_linear_part(B.tanh_field(2))
    assert np.allclose(lin_t.jacobian_at_zero, 0)
    assert np.allclose(lin_t.value_at_zero, 1)


@pytest.mark.parametrize("name", GENERATORS)
def test_norm_bound_disc(name):
    assert check_norm_bound(DISC, B.build_field(name, 1), samples=500).passed


def test_norm_bound_preconditions():
    with pytest.raises(PreconditionError):
        check_norm_bound(Domain.polydisc(2), B.contraction(2))
    with pytest.raises(PreconditionError):
        check_norm_bound(DISC, B.constant())


# --- Herglotz fields


def test_herglotz_field_validation():
    with pytest.raises(InputError):
        HerglotzField(((0.5, B.contraction()),))
    with pytest.raises(InputError):
        HerglotzField(((0.0, B.contraction()), (0.0, B.rotation())))
    with pytest.raises(InputError):
        HerglotzField(((0.0, B.contraction()),), order=0.5)
    with pytest.raises(InputError):
        HerglotzField(((0.0, B.contraction(1)), (1.0, B.contraction(2))))


def test_herglotz_pieces_and_majorant():
    G = B.piecewise_demo()
    z = np.array([[0.4]])
    assert np.allclose(G(z, 0.5), -z)
    assert np.allclose(G(z, 1.0), 1j * z)
    maj = G.majorant(0.5, 2.0)
    assert 1.0 in maj.edges
    assert np.all(maj.values >= 0.5 - 1e-12)
    D = B.decay_1pt()
    assert np.allclose(D(z, 2.0), -3 * z)
    assert isinstance(D.pieces[0].field, TimePolynomialField)
    # |G| <= (1 + t) r on the cell [1, 1.125]
    m = D.majorant(0.5, 2.0)
    assert m(1.0) == pytest.approx((1 + 1.125) * 0.5)
