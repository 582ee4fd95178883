"""JSON literal encoding shared by every file format.

Exact values travel as strings ('p/q' for rationals, coordinate pairs of
decimal strings for number-field elements); numeric values as
{"re", "im", "prec"} triples. All encoders are deterministic so identical
invocations produce byte-identical output.
"""

from __future__ import annotations

import json
from fractions import Fraction

import mpmath
from mpmath.libmp import prec_to_dps

from .errors import ParseError
from .exactnum import (
    BigComplex,
    NumberField,
    NumberFieldElement,
    format_rational,
    parse_rational,
)


def value_to_json(value):
    if isinstance(value, (int, Fraction)):
        return format_rational(Fraction(value))
    if isinstance(value, NumberFieldElement):
        return {
            "coords": [
                [str(c.numerator), str(c.denominator)] for c in value.coords
            ]
        }
    if isinstance(value, BigComplex):
        dps = prec_to_dps(value.precision_bits) + 3
        return {
            "re": mpmath.nstr(value.real, dps),
            "im": mpmath.nstr(value.imag, dps),
            "prec": value.precision_bits,
        }
    raise ParseError(f"cannot serialize value of type {type(value).__name__}")


def value_from_json(obj, field: NumberField | None = None):
    if isinstance(obj, (str, int)):
        return parse_rational(obj)
    if isinstance(obj, dict):
        if "coords" in obj:
            fld = field
            if "minpoly" in obj:
                fld = NumberField(obj["minpoly"])
            if fld is None:
                raise ParseError("number-field literal without an ambient minpoly")
            coords = []
            for pair in obj["coords"]:
                if isinstance(pair, (list, tuple)):
                    num, den = pair
                    coords.append(Fraction(int(str(num)), int(str(den))))
                else:
                    coords.append(parse_rational(pair))
            return NumberFieldElement(fld, coords)
        if "re" in obj:
            prec = int(obj.get("prec", 53))
            with mpmath.mp.workprec(prec):
                return BigComplex(
                    mpmath.mpf(str(obj["re"])), mpmath.mpf(str(obj.get("im", 0))), prec
                )
    raise ParseError(f"unrecognized value literal: {obj!r}")


def dump_json(obj, path=None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=False) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def load_json(source):
    """Parse JSON from bytes/str/path-like, with line/column info on error."""
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str) and "\n" not in source and source.strip().endswith(".json"):
        with open(source) as fh:
            text = fh.read()
    elif hasattr(source, "read"):
        text = source.read()
    else:
        text = source
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"JSON syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
