"""Batch front end: ``loewnerkit run <scenario.json> --out <dir>`` and ``loewnerkit list-builtins``.

Exit codes: 0 all checks pass, 1 a violation was found (witnesses are in
report.json), 2 input or schema error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import copy
import json
import math
import sys
import time
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from . import builtins as B
from .domains import Domain, lipschitz_certificate
from .errors import (
    InputError,
    InternalInconsistencyError,
    IterationEscapeError,
    NonGeneratorPieceError,
    NumericalError,
)
from .evolution import EvolutionFamily, audit_evolution_family, recover_field, roundtrip_check, solve_loewner_ode
from .fields import (
    DISSIPATIVITY_TOL,
    BerksonPorta,
    HerglotzField,
    Linear,
    Polynomial,
    TimePolynomialField,
    certify_generator_dissipative,
    certify_generator_flow,
    cone_combine,
    default_grid,
    rational,
)
from .flows import (
    AUDIT_CONFIG,
    contraction_audit,
    euler_family,
    integrate_autonomous,
    linear_contraction_family,
    product_formula,
    product_formula_convergence,
    semigroup_map,
    trotter_convergence,
    trotter_sum,
)
from .integrate import IntegratorConfig
from .report import Report, jsonable
from .schema import SCHEMA

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2, 3

_LADDER = [2**k for k in range(4, 13)]
_M_LADDER = [64, 128, 256, 512]

DEFAULT_PARAMS = {
    "check-generator": {"method": "both", "pairs": 1000, "horizon": 50.0, "grid_size": 25},
    "flow": {"samples": 0},
    "evolve": {"s": 0.0, "samples": 10},
    "recover": {"s": 5, "z_grid": 20, "n_ladder": _LADDER, "horizon": 2.0, "grid_radius": 0.5},
    "product-formula": {"family": "linear_contraction", "t": 1.0, "m_ladder": _M_LADDER, "lam": 0.5},
    "trotter": {"t": 0.5, "m_ladder": _M_LADDER},
    "audit-ef": {"s_grid": [0.0, 0.25, 0.5, 0.75], "t_grid": [0.25, 0.5, 0.75, 1.0], "K_radius": 0.5,
                 "samples": 8, "d": "inf"},
    "audit-distance": {"compact_radius": 0.5, "samples": 1000, "t_grid": [0.25 * k for k in range(9)],
                       "pairs": 500},
}


# ---------------------------------------------------------------------------
# scenario parsing


def _complex(x):
    return complex(x[0], x[1]) if isinstance(x, list) else complex(x)


def _point(x, dim):
    if not isinstance(x, list) or (len(x) == 2 and dim == 1 and not isinstance(x[0], list)
                                   and all(isinstance(v, (int, float)) for v in x)):
        coords = [_complex(x)]
    else:
        coords = [_complex(v) for v in x]
    if len(coords) != dim:
        raise InputError(f"point {x!r} has {len(coords)} coordinates, the domain has {dim}")
    return np.array(coords)


def _points(xs, dim):
    return np.array([_point(x, dim) for x in xs])


def build_domain(spec):
    kind = spec["kind"]
    dim = spec.get("dim", 1)
    margin = spec.get("boundary_margin", 1e-9)
    return Domain(kind, dim, margin)


def build_field(spec, dim):
    if "builtin" in spec:
        try:
            f = B.build_field(spec["builtin"], dim)
        except Exception as exc:  # builtins with a fixed dimension reject others
            raise InputError(f"builtin {spec['builtin']!r} is not available in dimension {dim}: {exc}") from exc
        if "scale" in spec:
            f = cone_combine([f], [spec["scale"]])
    elif "linear" in spec:
        f = Linear.from_matrix(np.array([[_complex(v) for v in row] for row in spec["linear"]]))
    elif "polynomial" in spec:
        terms = {}
        for term in spec["polynomial"]:
            exp = tuple(term["exponent"])
            coef = np.array([_complex(c) for c in term["coefficient"]])
            if len(exp) != dim or len(coef) != dim:
                raise InputError(f"polynomial term {term!r} does not match dimension {dim}")
            terms[exp] = terms.get(exp, np.zeros(dim, complex)) + coef
        f = Polynomial.from_terms(dim, terms)
    elif "berkson_porta" in spec:
        bp = spec["berkson_porta"]
        f = BerksonPorta(_complex(bp["tau"]), rational([_complex(c) for c in bp["numerator"]],
                                                       [_complex(c) for c in bp.get("denominator", [1])]))
    else:
        comb = spec["combination"]
        if len(comb["fields"]) != len(comb["weights"]):
            raise InputError("combination needs one weight per field")
        f = cone_combine([build_field(s, dim) for s in comb["fields"]], comb["weights"])
    if f.dim != dim:
        raise InputError(f"field has dimension {f.dim}, the domain has {dim}")
    return f


def build_herglotz(spec, dim):
    if "builtin" in spec:
        return B.HERGLOTZ[spec["builtin"]]["build"](dim)
    pieces = []
    for p in spec["pieces"]:
        if "field" in p:
            pieces.append((float(p["start"]), build_field(p["field"], dim)))
        else:
            pieces.append((float(p["start"]), TimePolynomialField(tuple(build_field(s, dim)
                                                                          for s in p["time_polynomial"]))))
    order = spec.get("order", "inf")
    return HerglotzField(tuple(pieces), math.inf if order == "inf" else float(order), spec.get("name", "scenario"))


def build_family(scenario, domain, config):
    if "herglotz" in scenario:
        return EvolutionFamily.from_field(domain, build_herglotz(scenario["herglotz"], domain.dim), config)
    name = scenario["family"]["builtin"]
    info = B.FAMILIES[name]
    if info["dims"] == "1" and domain.dim != 1:
        raise InputError(f"family {name!r} is one-dimensional")
    return EvolutionFamily.closed_form(domain, info["evaluator"], (0.0,) + tuple(info.get("breaks", ())), name)


def resolve(scenario, seed_override=None):
    """Validate and fill in defaults; the result is echoed in report.json."""
    err = jsonschema.exceptions.best_match(_VALIDATOR.iter_errors(scenario))
    if err is not None:
        raise err
    out = copy.deepcopy(scenario)
    out.setdefault("seed", 0)
    if seed_override is not None:
        out["seed"] = int(seed_override)
    out["domain"].setdefault("dim", 1)
    out["domain"].setdefault("boundary_margin", 1e-9)
    params = copy.deepcopy(DEFAULT_PARAMS[out["command"]])
    params.update(out.get("params", {}))
    out["params"] = params
    tol = {"rel_tol": 1e-10, "abs_tol": 1e-12, "max_step": 0.1, "dissipativity_tol": DISSIPATIVITY_TOL,
           "ef2_tol": 1e-8, "roundtrip_tol": 1e-4, "contraction_slack": 1e-9}
    tol.update(out.get("tolerances", {}))
    out["tolerances"] = tol
    return out


def _config(tol):
    return IntegratorConfig(rel_tol=tol["rel_tol"], abs_tol=tol["abs_tol"], max_step=tol["max_step"],
                            escape_margin=tol.get("escape_margin"))


# ---------------------------------------------------------------------------
# commands; each returns (reports, verdicts, rows) with rows = [(t, point)]


def _default_small_grid(domain, seed):
    rng = np.random.default_rng(seed)
    return np.vstack([np.zeros((1, domain.dim), complex), domain.sample(rng, 9, 0.5)])


def cmd_check_generator(sc, domain, config):
    p, tol = sc["params"], sc["tolerances"]
    field = build_field(sc["field"], domain.dim)
    reports, verdicts, rows = [], {}, []
    if p["method"] in ("both", "dissipative"):
        cert = certify_generator_dissipative(domain, field, p["pairs"], sc["seed"], tol["dissipativity_tol"])
        rep = Report("dissipativity", metrics={"pairs": cert.dissipativity_pairs_tested,
                                               "worst_dini": cert.worst_dini})
        if not cert.is_generator:
            z, w = cert.witness_pair
            rep.violate("Dini derivative of k along (H(z), H(w)) <= tol", z=z, w=w, dini=cert.worst_dini,
                        tolerance=tol["dissipativity_tol"])
        verdicts["dissipative"] = cert.verdict
        reports.append(rep)
    if p["method"] in ("both", "flow"):
        grid = _points(p["grid"], domain.dim) if "grid" in p else default_grid(domain, p["grid_size"], sc["seed"])
        cert = certify_generator_flow(domain, field, p["horizon"], grid, config)
        rep = Report("flow", metrics={"horizon": p["horizon"], "grid_points": len(grid)}, notes=list(cert.notes))
        for z0, t_esc in cert.escape_witnesses:
            rep.violate("orbit stays in the domain up to the horizon", z0=z0, escape_time=t_esc)
        verdicts["flow"] = cert.verdict
        reports.append(rep)
        # one row per grid point: time reached and the point there
        rows.extend(cert.orbit_ends)
    verdicts["verdict"] = _combine(verdicts.values())
    return reports, verdicts, rows


def _combine(values):
    values = list(values)
    if "NotGenerator" in values:
        return "NotGenerator"
    if "Inconclusive" in values:
        return "Inconclusive"
    return "Generator"


def cmd_flow(sc, domain, config):
    p = sc["params"]
    field = build_field(sc["field"], domain.dim)
    z0 = _point(p["z0"], domain.dim)
    traj = integrate_autonomous(domain, field, z0, p["t_end"], config)
    rep = Report("flow", metrics={"endpoint": traj.endpoint, "final_time": float(traj.times[-1]),
                                  "escaped": traj.escaped, "escape_time_estimate": traj.escape_time_estimate,
                                  "nodes": len(traj.times)})
    if traj.escaped:
        rep.metrics["speed_ratio"] = traj.speed_ratio
        if traj.speed_ratio > 1.0 + 1e-3:
            rep.violate("orbit stays in the domain", z0=z0, escape_time=traj.escape_time_estimate,
                        speed_ratio=traj.speed_ratio)
        else:
            rep.notes.append("orbit reached the boundary margin with non-increasing Kobayashi speed")
    if p["samples"] > 0 and not traj.escaped:
        ts = np.linspace(0.0, p["t_end"], p["samples"] + 1)
        from .integrate import dopri5
        res = dopri5(lambda t, y: field(y), 0.0, z0, float(p["t_end"]), config, domain.norm,
                     domain.boundary_margin if config.escape_margin is None else config.escape_margin,
                     t_eval=ts, record=False, time_to_boundary=domain.time_to_boundary)
        rows = list(zip(res.eval_times, res.eval_states))
    else:
        rows = list(zip(traj.times, traj.points))
    return [rep], {"escaped": traj.escaped}, rows


def cmd_evolve(sc, domain, config):
    p = sc["params"]
    ef = build_family(sc, domain, config)
    z = _point(p["z"], domain.dim)[None]
    s, t = float(p["s"]), float(p["t"])
    if t < s:
        raise InputError("need s <= t")
    ts = list(np.linspace(s, t, p["samples"] + 1))
    rep = Report("evolve", metrics={"family": ef.name, "s": s, "t": t})
    try:
        if ef.integrated:
            states = solve_loewner_ode(domain, ef.source.field, s, t, z, config, t_eval=ts)[:, 0]
        else:
            states = np.array([ef(s, x, z)[0] for x in ts])
    except NonGeneratorPieceError as exc:
        rep.violate("trajectory stays in the domain", piece=exc.piece, piece_start=exc.start, time=exc.time,
                    point=exc.point)
        return [rep], {"escaped": True}, []
    rep.metrics["endpoint"] = states[-1]
    return [rep], {"escaped": False}, list(zip(ts, states))


def cmd_recover(sc, domain, config):
    p, tol = sc["params"], sc["tolerances"]
    ladder = p["n_ladder"]
    rng = np.random.default_rng(sc["seed"])
    z = (domain.sample(rng, p["z_grid"], p["grid_radius"]) if isinstance(p["z_grid"], int)
         else _points(p["z_grid"], domain.dim))
    rows = []
    if "herglotz" in sc:
        G = build_herglotz(sc["herglotz"], domain.dim)
        rep = roundtrip_check(domain, G, p["s"], z, ladder, sc["seed"], p["horizon"], p["grid_radius"],
                              tol["roundtrip_tol"], config)
        ef = EvolutionFamily.from_field(domain, G, config)
        times = rep.metrics["times"]
    else:
        ef = build_family(sc, domain, config)
        from .evolution import regular_times
        times = (regular_times(ef, p["s"], p["horizon"], rng, 2.0 / min(ladder)) if isinstance(p["s"], int)
                 else sorted(p["s"]))
        rep = Report("recover", metrics={"times": times, "n_ladder": ladder, "points": len(z)})
    per = []
    for s in times:
        rec = recover_field(domain, ef, s, z, ladder)
        per.append({"s": s, "cauchy_increments": rec.cauchy_increments, "dropped_levels": rec.dropped_levels})
        rows.extend((s, g) for g in rec.extrapolated)
    rep.metrics["ladders"] = per
    return [rep], {}, rows


def cmd_product_formula(sc, domain, config):
    p = sc["params"]
    grid = _points(p["grid"], domain.dim) if "grid" in p else _default_small_grid(domain, sc["seed"])
    t = float(p["t"])
    if p["family"] == "linear_contraction":
        fam = linear_contraction_family()
        ref = np.exp(-t) * grid
    else:
        if "field" not in sc:
            raise InputError("the euler family needs a field")
        field = build_field(sc["field"], domain.dim)
        fam = euler_family(field, p["lam"])
        ref = semigroup_map(domain, field, t, grid, config)
    try:
        rep = product_formula_convergence(domain, fam, t, p["m_ladder"], grid, ref)
        final = product_formula(domain, fam, t, max(p["m_ladder"]), grid)
    except IterationEscapeError as exc:
        rep = Report("product-formula")
        rep.violate("iterates stay in the domain", step=exc.step, point=exc.point)
        return [rep], {}, []
    rep.metrics["family"] = fam.name
    return [rep], {}, [(t, z) for z in final]


def cmd_trotter(sc, domain, config):
    p = sc["params"]
    f1, f2 = (build_field(s, domain.dim) for s in sc["fields"])
    grid = _points(p["grid"], domain.dim) if "grid" in p else _default_small_grid(domain, sc["seed"])
    t = float(p["t"])
    try:
        rep = trotter_convergence(domain, f1, f2, t, p["m_ladder"], grid, config)
        final = trotter_sum(domain, f1, f2, t, max(p["m_ladder"]), grid, config)
    except IterationEscapeError as exc:
        rep = Report("trotter")
        rep.violate("iterates stay in the domain", step=exc.step, point=exc.point)
        return [rep], {}, []
    return [rep], {}, [(t, z) for z in final]


def cmd_audit_ef(sc, domain, config):
    p, tol = sc["params"], sc["tolerances"]
    ef = build_family(sc, domain, config)
    d = math.inf if p["d"] == "inf" else float(p["d"])
    rep = audit_evolution_family(domain, ef, p["s_grid"], p["t_grid"], p["K_radius"], p["samples"], d, sc["seed"],
                                 ef2_tol=tol["ef2_tol"])
    return [rep], {"order_d_verdict": rep.order_d_verdict}, []


def cmd_audit_distance(sc, domain, config):
    p, tol = sc["params"], sc["tolerances"]
    est = lipschitz_certificate(domain, p["compact_radius"], p["samples"], sc["seed"])
    rep = Report("lipschitz", metrics={"compact_radius": est.compact_radius, "constant": est.constant,
                                       "max_ratio": est.max_ratio, "samples": est.samples})
    if not est.verified:
        rep.violate("sampled Lipschitz ratio <= C_K", constant=est.constant, max_ratio=est.max_ratio)
    reports = [rep]
    if "field" in sc:
        field = build_field(sc["field"], domain.dim)
        # the 1e-9 slack needs tighter integration than the scenario default
        audit_cfg = IntegratorConfig(rel_tol=min(config.rel_tol, AUDIT_CONFIG.rel_tol),
                                     abs_tol=min(config.abs_tol, AUDIT_CONFIG.abs_tol),
                                     max_step=config.max_step, escape_margin=config.escape_margin)
        reports.append(contraction_audit(domain, field, p["t_grid"], p["pairs"], sc["seed"], config=audit_cfg,
                                         slack=tol["contraction_slack"]))
    return reports, {}, []


COMMANDS = {
    "check-generator": cmd_check_generator,
    "flow": cmd_flow,
    "evolve": cmd_evolve,
    "recover": cmd_recover,
    "product-formula": cmd_product_formula,
    "trotter": cmd_trotter,
    "audit-ef": cmd_audit_ef,
    "audit-distance": cmd_audit_distance,
}


# ---------------------------------------------------------------------------
# output


def write_csv(path, rows, dim):
    header = ["t"] + [f"{part}_z_{j}" for j in range(1, dim + 1) for part in ("re", "im")]
    lines = [",".join(header)]
    for t, z in rows:
        vals = [float(t)]
        for c in np.asarray(z).reshape(-1):
            vals += [float(c.real), float(c.imag)]
        lines.append(",".join("%.17g" % v for v in vals))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_report(out_dir, report):
    with open(out_dir / "report.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(jsonable(report), fh, indent=2, sort_keys=True)
        fh.write("\n")


def run(scenario_path, out_dir, seed=None, quiet=False):
    """Execute one scenario and return the exit code."""
    out_dir = Path(out_dir)
    start = time.perf_counter()
    report = {"tool": "loewnerkit", "version": __version__, "scenario_file": str(scenario_path)}

    def finish(code, status, message=None):
        report["status"] = status
        report["exit_code"] = code
        report["timing"] = {"wall_seconds": time.perf_counter() - start}
        if message:
            report["error"] = message
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            _write_report(out_dir, report)
        except OSError as exc:
            print(f"cannot write report: {exc}", file=sys.stderr)
        if message and not quiet:
            print(f"{status}: {message}", file=sys.stderr)
        return code

    try:
        with open(scenario_path, encoding="utf-8") as fh:
            raw = json.load(fh)
        sc = resolve(raw, seed)
        report["scenario"] = sc
        domain = build_domain(sc["domain"])
        config = _config(sc["tolerances"])
        reports, verdicts, rows = COMMANDS[sc["command"]](sc, domain, config)
    except (OSError, json.JSONDecodeError) as exc:
        return finish(EXIT_INPUT, "input-error", f"cannot read scenario: {exc}")
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        detail = sorted({c.message for c in exc.context if c.validator == "additionalProperties"})
        msg = f"schema violation at {where}: {exc.message}"
        if detail:
            msg += "; " + "; ".join(detail)
        return finish(EXIT_INPUT, "input-error", msg)
    except InputError as exc:
        return finish(EXIT_INPUT, "input-error", str(exc))
    except (NumericalError, InternalInconsistencyError) as exc:
        return finish(EXIT_NUMERICAL, "numerical-failure", f"{type(exc).__name__}: {exc}")

    report["verdicts"] = verdicts
    report["reports"] = [r.to_dict() for r in reports]
    violations = [dict(v, report=r.name) for r in reports for v in r.violations]
    report["violations"] = violations
    out_dir.mkdir(parents=True, exist_ok=True)
    if rows:
        write_csv(out_dir / "data.csv", rows, domain.dim)
    if verdicts.get("verdict") == "Inconclusive" and not violations:
        code = finish(EXIT_NUMERICAL, "numerical-failure", "flow certification was inconclusive")
    elif violations:
        code = finish(EXIT_VIOLATION, "violations")
    else:
        code = finish(EXIT_OK, "ok")
    if not quiet:
        summary = ", ".join(f"{k}={v}" for k, v in verdicts.items())
        print(f"{sc['command']}: {report['status']} ({len(violations)} violations){'; ' + summary if summary else ''}")
    return code


def list_builtins(as_json=False):
    rows = B.catalog()
    if as_json:
        print(json.dumps(rows, indent=2, ensure_ascii=False))
        return EXIT_OK
    for kind in ("field", "herglotz", "family"):
        print({"field": "Fields", "herglotz": "Herglotz fields", "family": "Closed-form evolution families"}[kind])
        for row in rows:
            if row["type"] != kind:
                continue
            extra = row.get("flow") or row.get("closed_form_family") or ""
            print(f"  {row['name']:<20} {row['formula']:<34} {row['note']}" + (f" [{extra}]" if extra else ""))
    print("Berkson-Porta constructor: {\"berkson_porta\": {\"tau\": ..., \"numerator\": [...], \"denominator\": [...]}}")
    return EXIT_OK


def main(argv=None):
    parser = argparse.ArgumentParser(prog="loewnerkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="cmd", required=True)
    p_run = sub.add_parser("run", help="execute a scenario file")
    p_run.add_argument("scenario")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--seed", type=int, default=None, help="override the scenario seed (unsigned 64-bit)")
    p_run.add_argument("--quiet", action="store_true")
    p_list = sub.add_parser("list-builtins", help="print the built-in catalog")
    p_list.add_argument("--json", action="store_true")
    args = parser.parse_args(argv)
    if args.cmd == "list-builtins":
        return list_builtins(args.json)
    if args.seed is not None and not (0 <= args.seed < 2**64):
        print("--seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_INPUT
    return run(args.scenario, args.out, args.seed, args.quiet)


if __name__ == "__main__":
    sys.exit(main())
