"""JSON Schema for scenario files.

Built-in names are taken from the catalog so that every listed name is
accepted. ``docs/scenario.schema.json`` is a rendered copy of ``SCHEMA``
(regenerate with ``scripts/export_schema.py``).
"""
from __future__ import annotations

from .builtins import FAMILIES, FIELDS, HERGLOTZ

COMMANDS = ("check-generator", "flow", "evolve", "recover", "product-formula", "trotter",
            "audit-ef", "audit-distance")

_complex = {
    "description": "a real number or [re, im]",
    "oneOf": [
        {"type": "number"},
        {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    ],
}
_point = {
    "description": "a list of q complex coordinates; a bare complex value is accepted when q = 1",
    "oneOf": [
        {"$ref": "#/$defs/complex"},
        {"type": "array", "items": {"$ref": "#/$defs/complex"}, "minItems": 1},
    ],
}
_points = {"type": "array", "items": {"$ref": "#/$defs/point"}, "minItems": 1}
_times = {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1}
_ladder = {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 2}
_positive = {"type": "number", "exclusiveMinimum": 0}
_radius = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}
_order = {"oneOf": [{"type": "number", "minimum": 1}, {"const": "inf"}]}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


_field = {
    "oneOf": [
        _obj({"builtin": {"enum": sorted(FIELDS)}, "scale": {"type": "number", "minimum": 0}}, ["builtin"]),
        _obj({"linear": {"type": "array", "minItems": 1,
                         "items": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/complex"}}}},
             ["linear"]),
        _obj({"polynomial": {"type": "array", "minItems": 1, "items": _obj({
            "exponent": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
            "coefficient": {"type": "array", "items": {"$ref": "#/$defs/complex"}, "minItems": 1},
        }, ["exponent", "coefficient"])}}, ["polynomial"]),
        _obj({"berkson_porta": _obj({
            "tau": {"$ref": "#/$defs/complex"},
            "numerator": {"type": "array", "items": {"$ref": "#/$defs/complex"}, "minItems": 1},
            "denominator": {"type": "array", "items": {"$ref": "#/$defs/complex"}, "minItems": 1},
        }, ["tau", "numerator"])}, ["berkson_porta"]),
        _obj({"combination": _obj({
            "fields": {"type": "array", "items": {"$ref": "#/$defs/field"}, "minItems": 1},
            "weights": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        }, ["fields", "weights"])}, ["combination"]),
    ]
}

_piece = {
    "oneOf": [
        _obj({"start": {"type": "number", "minimum": 0}, "field": {"$ref": "#/$defs/field"}}, ["start", "field"]),
        _obj({"start": {"type": "number", "minimum": 0},
              "time_polynomial": {"type": "array", "items": {"$ref": "#/$defs/field"}, "minItems": 1}},
             ["start", "time_polynomial"]),
    ]
}

_herglotz = {
    "oneOf": [
        _obj({"builtin": {"enum": sorted(HERGLOTZ)}}, ["builtin"]),
        _obj({"pieces": {"type": "array", "items": _piece, "minItems": 1}, "order": _order,
              "name": {"type": "string"}}, ["pieces"]),
    ]
}

_family = _obj({"builtin": {"enum": sorted(FAMILIES)}}, ["builtin"])

PARAMS = {
    "check-generator": _obj({
        "method": {"enum": ["both", "dissipative", "flow"]},
        "pairs": {"type": "integer", "minimum": 1},
        "horizon": _positive,
        "grid": {"$ref": "#/$defs/points"},
        "grid_size": {"type": "integer", "minimum": 1},
    }),
    "flow": _obj({"z0": {"$ref": "#/$defs/point"}, "t_end": {"type": "number", "minimum": 0},
                  "samples": {"type": "integer", "minimum": 0}}, ["z0", "t_end"]),
    "evolve": _obj({"s": {"type": "number", "minimum": 0}, "t": {"type": "number", "minimum": 0},
                    "z": {"$ref": "#/$defs/point"}, "samples": {"type": "integer", "minimum": 1}}, ["t", "z"]),
    "recover": _obj({
        "s": {"oneOf": [{"type": "integer", "minimum": 1}, _times]},
        "z_grid": {"oneOf": [{"type": "integer", "minimum": 1}, {"$ref": "#/$defs/points"}]},
        "n_ladder": _ladder,
        "horizon": _positive,
        "grid_radius": _radius,
    }),
    "product-formula": _obj({
        "family": {"enum": ["linear_contraction", "euler"]},
        "t": {"type": "number", "minimum": 0},
        "m_ladder": _ladder,
        "grid": {"$ref": "#/$defs/points"},
        "lam": _positive,
    }),
    "trotter": _obj({"t": {"type": "number", "minimum": 0}, "m_ladder": _ladder,
                     "grid": {"$ref": "#/$defs/points"}}),
    "audit-ef": _obj({"s_grid": _times, "t_grid": _times, "K_radius": _radius,
                      "samples": {"type": "integer", "minimum": 1}, "d": _order}),
    "audit-distance": _obj({"compact_radius": _radius, "samples": {"type": "integer", "minimum": 1},
                            "t_grid": _times, "pairs": {"type": "integer", "minimum": 1}}),
}

TOLERANCES = _obj({
    "rel_tol": _positive, "abs_tol": _positive, "max_step": _positive, "escape_margin": _radius,
    "dissipativity_tol": {"type": "number", "minimum": 0},
    "ef2_tol": {"type": "number", "minimum": 0},
    "roundtrip_tol": {"type": "number", "minimum": 0},
    "contraction_slack": {"type": "number", "minimum": 0},
})

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "loewnerkit scenario",
    "type": "object",
    "additionalProperties": False,
    "required": ["domain", "command"],
    "properties": {
        "domain": _obj({"kind": {"enum": ["disc", "ball", "polydisc"]}, "dim": {"type": "integer", "minimum": 1},
                        "boundary_margin": _radius}, ["kind"]),
        "command": {"enum": list(COMMANDS)},
        "field": {"$ref": "#/$defs/field"},
        "fields": {"type": "array", "items": {"$ref": "#/$defs/field"}, "minItems": 2, "maxItems": 2},
        "herglotz": {"$ref": "#/$defs/herglotz"},
        "family": {"$ref": "#/$defs/family"},
        "params": {"type": "object"},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "tolerances": TOLERANCES,
    },
    "allOf": [
        {"if": {"properties": {"command": {"const": cmd}}, "required": ["command"]},
         "then": {"properties": {"params": PARAMS[cmd]}}}
        for cmd in COMMANDS
    ] + [
        {"if": {"properties": {"command": {"enum": ["check-generator", "flow"]}}, "required": ["command"]},
         "then": {"required": ["field"]}},
        {"if": {"properties": {"command": {"const": "trotter"}}, "required": ["command"]},
         "then": {"required": ["fields"]}},
        {"if": {"properties": {"command": {"enum": ["evolve", "recover", "audit-ef"]}}, "required": ["command"]},
         "then": {"oneOf": [{"required": ["herglotz"]}, {"required": ["family"]}]}},
    ],
    "$defs": {
        "complex": _complex,
        "point": _point,
        "points": _points,
        "field": _field,
        "herglotz": _herglotz,
        "family": _family,
    },
}
