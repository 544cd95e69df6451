"""Built-in fields, Herglotz fields and closed-form evolution families."""
from __future__ import annotations

import numpy as np

from .fields import (
    BerksonPorta,
    HerglotzField,
    Linear,
    Polynomial,
    TimePolynomialField,
    cone_combine,
    rational,
)


def contraction(dim=1):
    """H(z) = -z."""
    return Linear.from_matrix(-np.eye(dim))


def rotation(dim=1):
    """H(z) = iz."""
    return Linear.from_matrix(1j * np.eye(dim))


def tanh_field(dim=1):
    """H(z)_j = 1 - z_j^2, the generator of the hyperbolic automorphisms fixing +-1."""
    tables = []
    for j in range(dim):
        two = tuple(2 if i == j else 0 for i in range(dim))
        tables.append({(0,) * dim: 1.0, two: -1.0})
    return Polynomial.from_coordinates(dim, tables)


def constant(dim=1):
    """H(z) = (1, ..., 1); not a generator on any bounded domain."""
    return Polynomial.from_terms(dim, {(0,) * dim: np.ones(dim)})


def cone_demo():
    """0.3(-z) + 0.7(1 - z^2)."""
    return cone_combine([contraction(), tanh_field()], [0.3, 0.7])


def berkson_porta(tau, num, den=(1,)):
    return BerksonPorta(complex(tau), rational(num, den))


def berkson_porta_demo():
    """tau = 1, p(z) = (1 + z) / (1 - z); equals 1 - z^2."""
    return berkson_porta(1.0, (1, 1), (1, -1))


def ball_translation(a=None, dim=2):
    """H(z) = a - <z, a> z, generator of hyperbolic automorphisms of the ball."""
    if a is None:
        a = np.zeros(dim, complex)
        a[0] = 0.5
    a = np.atleast_1d(np.asarray(a, dtype=complex))
    q = len(a)
    terms = {(0,) * q: a}
    for k in range(q):
        for i in range(q):
            exp = [0] * q
            exp[k] += 1
            exp[i] += 1
            vec = np.zeros(q, complex)
            vec[i] = -np.conj(a[k])
            terms[tuple(exp)] = terms.get(tuple(exp), np.zeros(q, complex)) + vec
    return Polynomial.from_terms(q, terms)


# closed-form semigroups, used as oracles

def contraction_flow(t, z):
    return np.exp(-t) * np.asarray(z)


def rotation_flow(t, z):
    return np.exp(1j * t) * np.asarray(z)


def tanh_flow(t, z):
    th = np.tanh(t)
    z = np.asarray(z)
    return (z + th) / (1 + z * th)


def constant_flow(t, z):
    return np.asarray(z) + t


# Herglotz fields


def decay_1pt(dim=1):
    """G(z, t) = -(1 + t) z."""
    return HerglotzField(((0.0, TimePolynomialField((contraction(dim), contraction(dim)))),), name="decay_1pt")


def piecewise_demo(dim=1):
    """G = -z on [0, 1), iz on [1, inf)."""
    return HerglotzField(((0.0, contraction(dim)), (1.0, rotation(dim))), name="piecewise_demo")


# closed-form evolution families phi(s, t, z)


def identity_family(s, t, z):
    return np.asarray(z, dtype=complex)


def exp_decay_family(s, t, z):
    return np.exp(-(t - s)) * np.asarray(z)


def decay_1pt_family(s, t, z):
    return np.asarray(z) * np.exp(-(t - s) - (t * t - s * s) / 2)


def tanh_family(s, t, z):
    return tanh_flow(t - s, z)


def piecewise_demo_family(s, t, z):
    a = max(0.0, min(t, 1.0) - min(s, 1.0))
    b = max(0.0, t - max(s, 1.0))
    return np.exp(-a + 1j * b) * np.asarray(z)


FIELDS = {
    "contraction": dict(build=contraction, formula="−z", dims="any", domains=("disc", "ball", "polydisc"),
                        generator=True, flow=contraction_flow, flow_note="closed-form flow e^{−t}z",
                        note="linear contraction toward the origin"),
    "rotation": dict(build=rotation, formula="iz", dims="any", domains=("disc", "ball", "polydisc"),
                     generator=True, flow=rotation_flow, flow_note="closed-form flow e^{it}z (isometries)",
                     note="rigid rotation; Kobayashi distances are preserved"),
    "tanh": dict(build=tanh_field, formula="1−z²", dims="any (coordinatewise)", domains=("disc", "polydisc"),
                 generator=True, flow=tanh_flow, flow_note="closed-form flow (z+tanh t)/(1+z tanh t)",
                 note="hyperbolic automorphisms with fixed points ±1; coordinatewise it is not a ball generator for q ≥ 2"),
    "constant": dict(build=constant, formula="1", dims="any", domains=(),
                     generator=False, flow=constant_flow, flow_note="closed-form flow z+t; leaves the disc at t=1 from 0",
                     note="non-generator used as a negative control"),
    "cone_demo": dict(build=lambda dim=1: cone_demo(), formula="0.3(−z)+0.7(1−z²)", dims="1", domains=("disc",),
                      generator=True, flow=None, flow_note="no closed form; integrated",
                      note="nonnegative combination of two generators"),
    "berkson_porta_demo": dict(build=lambda dim=1: berkson_porta_demo(), formula="(1−z)(1−z)(1+z)/(1−z) = 1−z²",
                               dims="1", domains=("disc",), generator=True, flow=tanh_flow,
                               flow_note="same closed-form flow as 1−z²",
                               note="Berkson–Porta constructor with τ=1, p=(1+z)/(1−z)"),
    "ball_translation": dict(build=lambda dim=2: ball_translation(dim=dim), formula="a−⟨z,a⟩z, a=(0.5,0,…)",
                             dims="any", domains=("disc", "ball"), generator=True, flow=None,
                             flow_note="no closed form here; integrated",
                             note="hyperbolic automorphism generator of the ball (1−z² for q=1, a=1)"),
}

HERGLOTZ = {
    "decay_1pt": dict(build=decay_1pt, formula="−(1+t)z", family="decay_1pt",
                      note="separable; φ_{s,t}(z)=z·exp(−(t−s)−(t²−s²)/2)"),
    "piecewise_demo": dict(build=piecewise_demo, formula="−z on [0,1), iz on [1,∞)", family="piecewise_demo",
                           note="piecewise demo field; φ_{0,2}(z)=e^{i}e^{−1}z"),
}

FAMILIES = {
    "identity": dict(evaluator=identity_family, formula="φ_{s,t}(z)=z", dims="any", note="trivial family; field 0"),
    "exp_decay": dict(evaluator=exp_decay_family, formula="φ_{s,t}(z)=e^{−(t−s)}z", dims="any",
                      note="semigroup of −z"),
    "decay_1pt": dict(evaluator=decay_1pt_family, formula="φ_{s,t}(z)=z·exp(−(t−s)−(t²−s²)/2)", dims="any",
                      note="closed form of the Loewner ODE for −(1+t)z"),
    "tanh_flow": dict(evaluator=tanh_family, formula="φ_{s,t}(z)=(z+tanh(t−s))/(1+z tanh(t−s))", dims="1",
                      note="semigroup of 1−z²"),
    "piecewise_demo": dict(evaluator=piecewise_demo_family, formula="e^{−a+ib}z (a,b times spent in each piece)",
                           dims="any", note="closed form of the piecewise demo field", breaks=(1.0,)),
}


def build_field(name, dim=1):
    return FIELDS[name]["build"](dim)


def catalog():
    """Rows describing every built-in, for ``list-builtins``."""
    rows = []
    for name, info in FIELDS.items():
        rows.append({
            "name": name, "type": "field", "formula": info["formula"], "dims": info["dims"],
            "generator_on": list(info["domains"]), "flow": info["flow_note"], "note": info["note"],
        })
    for name, info in HERGLOTZ.items():
        rows.append({
            "name": name, "type": "herglotz", "formula": info["formula"],
            "closed_form_family": info["family"], "note": info["note"],
        })
    for name, info in FAMILIES.items():
        rows.append({"name": name, "type": "family", "formula": info["formula"], "dims": info["dims"],
                     "note": info["note"]})
    return rows
