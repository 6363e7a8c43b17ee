"""CSV and JSON serialization with deterministic formatting."""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from typing import Sequence

import numpy as np
from flint import arb

from .arith import FieldElement


def fmt_float(x: float) -> str:
    """12 significant digits, with -0 folded to 0."""
    if x == 0:
        return "0"
    return f"{x:.12g}"


def rational(x) -> dict:
    x = Fraction(x)
    return {"num": str(x.numerator), "den": str(x.denominator)}


def element_json(x: FieldElement) -> list:
    return [rational(c) for c in x.coords]


def ball_json(b: arb) -> dict:
    return {"mid": fmt_float(float(b.mid())), "rad": fmt_float(float(b.rad()))}


def to_jsonable(obj):
    if isinstance(obj, Fraction):
        return rational(obj)
    if isinstance(obj, FieldElement):
        return element_json(obj)
    if isinstance(obj, arb):
        return ball_json(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return fmt_float(float(obj))
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n"


def csv_header(d: int) -> list:
    return (["q"] + [f"p{i}" for i in range(1, d + 1)] + [f"v{i}" for i in range(1, d + 1)]
            + ["gamma", "norm_level", "sign_class", "source", "err"])


def approximations_csv(rows: Sequence, annotations: Sequence, d: int) -> str:
    """One line per approximation; rows and annotations are parallel."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(csv_header(d))
    for a, ann in zip(rows, annotations):
        w.writerow([a.q, *a.p, *(fmt_float(v) for v in a.value), fmt_float(ann.gamma),
                    str(ann.norm_level), ann.sign_class, a.source, fmt_float(a.err)])
    return buf.getvalue()


def approximations_json(rows: Sequence, annotations: Sequence, d: int) -> str:
    """Same content as the CSV, as a list of objects with the same keys."""
    keys = csv_header(d)
    out = []
    for a, ann in zip(rows, annotations):
        vals = [a.q, *a.p, *(fmt_float(v) for v in a.value), fmt_float(ann.gamma),
                str(ann.norm_level), ann.sign_class, a.source, fmt_float(a.err)]
        out.append(dict(zip(keys, vals)))
    return dumps(out)
