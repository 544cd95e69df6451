"""Structured verification output shared by the audits and the CLI."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict, is_dataclass

import numpy as np


def jsonable(obj):
    """Recursively convert numpy / complex values into JSON-friendly objects.

    Complex numbers become ``[re, im]``; non-finite floats become strings.
    """
    if is_dataclass(obj) and not isinstance(obj, type):
        return jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [jsonable(float(obj.real)), jsonable(float(obj.imag))]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


@dataclass
class Report:
    name: str
    metrics: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.violations

    def violate(self, what, **witness):
        self.violations.append({"check": what, **witness})

    def to_dict(self):
        return jsonable({
            "name": self.name,
            "passed": self.passed,
            "metrics": self.metrics,
            "violations": self.violations,
            "notes": self.notes,
        })
