"""Loewner theory on model hyperbolic domains.

Kobayashi geometry of the disc, ball and polydisc; generator certification
for holomorphic vector fields; semigroups, product formulas and Trotter
sums; evolution families of Herglotz fields and their recovery.
"""
__version__ = "0.1.0"

from .domains import (
    Domain,
    LipschitzEstimate,
    dini_directional_derivative,
    kobayashi_distance,
    kobayashi_metric,
    lipschitz_certificate,
)
from .evolution import (
    EFReport,
    EvolutionFamily,
    audit_evolution_family,
    recover_field,
    roundtrip_check,
    solve_loewner_ode,
)
from .fields import (
    BerksonPorta,
    GeneratorCertificate,
    HerglotzField,
    Linear,
    LinearPartAnalysis,
    Polynomial,
    TimePolynomialField,
    analyze_linear_part,
    certify_generator_dissipative,
    certify_generator_flow,
    check_herglotz_numerator,
    check_norm_bound,
    cone_combine,
    evaluate,
    numerical_radius,
)
from .flows import (
    DiscreteFamily,
    Trajectory,
    contraction_audit,
    integrate_autonomous,
    product_formula,
    semigroup_map,
    trotter_sum,
)
from .integrate import IntegratorConfig
from .report import Report
