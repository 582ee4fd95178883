"""Exact arithmetic substrate: rationals, number fields Q(theta), and
arbitrary-precision complex values with explicit per-value precision.

Rationals are `fractions.Fraction` (already normalized: gcd 1, positive
denominator). Number fields are dense coordinate vectors modulo a monic
integer minimal polynomial; degrees beyond 4 are accepted but flagged as
unverified-irreducible. Numeric embeddings go through `BigComplex`, a thin
wrapper over mpmath that records the precision every value was computed at.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import mpmath
from mpmath import mp

from .errors import FieldMismatchError, NumericalFailure, ParseError, PreconditionError

Rational = Fraction

#: extra working bits beyond the requested precision (documented guard g = 10;
#: internally we carry more headroom than the guarantee needs)
GUARD_BITS = 10
_WORK_EXTRA = 30

MIN_PRECISION_BITS = 53


def parse_rational(text) -> Fraction:
    """Parse 'p/q' or 'p' (also plain ints) into a Fraction."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"invalid rational literal {text!r}: {exc}") from None


def format_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


# ---------------------------------------------------------------------------
# BigComplex
# ---------------------------------------------------------------------------

def _fraction_to_mpf(q: Fraction):
    return mpmath.mpf(q.numerator) / mpmath.mpf(q.denominator)


class BigComplex:
    """Immutable complex value with recorded precision.

    Binary operations evaluate at the minimum precision of their operands;
    exact operands (int, Fraction) adopt the other side's precision.
    """

    __slots__ = ("real", "imag", "precision_bits")

    def __init__(self, real, imag=0, precision_bits: int | None = None):
        if precision_bits is None:
            raise PreconditionError("BigComplex requires explicit precision_bits")
        if precision_bits < MIN_PRECISION_BITS:
            raise PreconditionError(
                f"precision_bits must be >= {MIN_PRECISION_BITS}, got {precision_bits}"
            )
        with mp.workprec(precision_bits):
            object.__setattr__(self, "real", _as_mpf(real))
            object.__setattr__(self, "imag", _as_mpf(imag))
        object.__setattr__(self, "precision_bits", precision_bits)

    def __setattr__(self, *_):
        raise AttributeError("BigComplex is immutable")

    # -- construction helpers ------------------------------------------------

    @classmethod
    def from_mpc(cls, z, precision_bits: int) -> "BigComplex":
        z = mpmath.mpc(z)
        return cls(z.real, z.imag, precision_bits)

    @classmethod
    def zero(cls, precision_bits: int) -> "BigComplex":
        return cls(0, 0, precision_bits)

    # -- numeric views ---------------------------------------------------------

    def to_mpc(self):
        return mpmath.mpc(self.real, self.imag)

    def __complex__(self) -> complex:
        return complex(float(self.real), float(self.imag))

    @property
    def is_real_zero_imag(self) -> bool:
        return self.imag == 0

    # -- arithmetic ------------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, BigComplex):
            return other
        if isinstance(other, (int, Fraction)) or isinstance(
            other, (mpmath.mpf, float)
        ):
            return BigComplex(other, 0, self.precision_bits)
        if isinstance(other, mpmath.mpc):
            return BigComplex.from_mpc(other, self.precision_bits)
        if isinstance(other, complex):
            return BigComplex(other.real, other.imag, self.precision_bits)
        return None

    def _binop(self, other, fn):
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        prec = min(self.precision_bits, rhs.precision_bits)
        with mp.workprec(prec):
            z = fn(self.to_mpc(), rhs.to_mpc())
        return BigComplex.from_mpc(z, prec)

    def __add__(self, other):
        return self._binop(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binop(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._binop(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binop(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binop(other, lambda a, b: a / b)

    def __rtruediv__(self, other):
        return self._binop(other, lambda a, b: b / a)

    def __neg__(self):
        return BigComplex(-self.real, -self.imag, self.precision_bits)

    def __pow__(self, exponent: int):
        if not isinstance(exponent, int):
            return NotImplemented
        with mp.workprec(self.precision_bits):
            z = self.to_mpc() ** exponent
        return BigComplex.from_mpc(z, self.precision_bits)

    def conjugate(self) -> "BigComplex":
        return BigComplex(self.real, -self.imag, self.precision_bits)

    def __abs__(self) -> "BigComplex":
        with mp.workprec(self.precision_bits):
            value = mpmath.hypot(self.real, self.imag)
        return BigComplex(value, 0, self.precision_bits)

    def abs_mpf(self):
        with mp.workprec(self.precision_bits):
            return mpmath.hypot(self.real, self.imag)

    # -- comparisons -------------------------------------------------------------

    def __eq__(self, other):
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        return self.real == rhs.real and self.imag == rhs.imag

    def __hash__(self):
        return hash((self.real, self.imag))

    def almost_equal(self, other, rel_tol=None) -> bool:
        rhs = self._coerce(other)
        prec = min(self.precision_bits, rhs.precision_bits)
        if rel_tol is None:
            rel_tol = mpmath.mpf(2) ** (-(prec - GUARD_BITS))
        with mp.workprec(prec + _WORK_EXTRA):
            diff = abs(self.to_mpc() - rhs.to_mpc())
            scale = max(abs(self.to_mpc()), abs(rhs.to_mpc()), mpmath.mpf(1))
            return diff <= rel_tol * scale

    def __repr__(self):
        return (
            f"BigComplex({mpmath.nstr(self.real, 12)}, {mpmath.nstr(self.imag, 12)}, "
            f"precision_bits={self.precision_bits})"
        )


def _as_mpf(value):
    if isinstance(value, Fraction):
        return _fraction_to_mpf(value)
    if isinstance(value, str):
        return mpmath.mpf(value)
    return mpmath.mpf(value)


# ---------------------------------------------------------------------------
# polynomial helpers over Fraction (dense, ascending)
# ---------------------------------------------------------------------------

def poly_degree(coeffs) -> int:
    d = len(coeffs) - 1
    while d >= 0 and coeffs[d] == 0:
        d -= 1
    return d


def poly_eval(coeffs, x):
    acc = 0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def _poly_divmod(num, den):
    """Quotient and remainder in Q[x]; inputs dense ascending Fractions."""
    num = list(num)
    dd = poly_degree(den)
    if dd < 0:
        raise ZeroDivisionError("polynomial division by zero")
    inv_lead = Fraction(1) / den[dd]
    quot = [Fraction(0)] * max(len(num) - dd, 1)
    for i in range(len(num) - 1, dd - 1, -1):
        if num[i] == 0:
            continue
        q = num[i] * inv_lead
        quot[i - dd] = q
        for j in range(dd + 1):
            num[i - dd + j] -= q * den[j]
    while len(num) > 1 and num[-1] == 0:
        num.pop()
    return quot, num


def _poly_xgcd(a, b):
    """Extended gcd in Q[x]: returns (g, s, t) with s*a + t*b = g."""
    r0, r1 = list(a), list(b)
    s0, s1 = [Fraction(1)], [Fraction(0)]
    t0, t1 = [Fraction(0)], [Fraction(1)]

    def sub_scaled(p, q, quot):
        # p - quot*q
        prod = [Fraction(0)] * (len(quot) + len(q) - 1)
        for i, qc in enumerate(quot):
            if qc == 0:
                continue
            for j, c in enumerate(q):
                prod[i + j] += qc * c
        out = [Fraction(0)] * max(len(p), len(prod))
        for i, c in enumerate(p):
            out[i] += c
        for i, c in enumerate(prod):
            out[i] -= c
        while len(out) > 1 and out[-1] == 0:
            out.pop()
        return out

    while poly_degree(r1) >= 0 and any(c != 0 for c in r1):
        quot, rem = _poly_divmod(r0, r1)
        r0, r1 = r1, rem
        s0, s1 = s1, sub_scaled(s0, s1, quot)
        t0, t1 = t1, sub_scaled(t0, t1, quot)
        if poly_degree(r1) < 0 or all(c == 0 for c in r1):
            break
    return r0, s0, t0


def poly_roots(coeffs, precision_bits: int) -> list[BigComplex]:
    """All complex roots (with multiplicity) of a rational-coefficient
    polynomial, ordered lexicographically by (real, imag).

    Backend: mpmath's simultaneous-iteration root finder at elevated working
    precision, rounded back to the requested precision.
    """
    if precision_bits < MIN_PRECISION_BITS:
        raise PreconditionError(f"precision_bits must be >= {MIN_PRECISION_BITS}")
    coeffs = [parse_rational(c) if not isinstance(c, (int, Fraction)) else Fraction(c) for c in coeffs]
    deg = poly_degree(coeffs)
    if deg < 0:
        raise PreconditionError("zero polynomial has no well-defined roots")
    if deg == 0:
        raise PreconditionError("constant polynomial: degree must be >= 1")
    work = precision_bits + _WORK_EXTRA
    with mp.workprec(work):
        desc = [_fraction_to_mpf(coeffs[i]) for i in range(deg, -1, -1)]
        try:
            roots = mpmath.polyroots(desc, maxsteps=200, extraprec=work)
        except mpmath.libmp.libhyper.NoConvergence as exc:  # pragma: no cover
            raise NumericalFailure(f"root finding did not converge: {exc}") from None
        roots = sorted(roots, key=lambda z: (z.real, z.imag))
    return [BigComplex.from_mpc(z, precision_bits) for z in roots]


# ---------------------------------------------------------------------------
# number fields
# ---------------------------------------------------------------------------

def _integer_divisors(n: int) -> list[int]:
    n = abs(n)
    out = []
    i = 1
    while i * i <= n:
        if n % i == 0:
            out.append(i)
            if i != n // i:
                out.append(n // i)
        i += 1
    return sorted(out)


def _is_perfect_square(n: int) -> bool:
    if n < 0:
        return False
    r = math.isqrt(n)
    return r * r == n


def _irreducible_over_q(minpoly: tuple[int, ...]) -> bool | None:
    """Exact irreducibility for monic integer polynomials of degree <= 4.

    Returns None when the degree (or constant-term size) is beyond what we
    verify; callers record an 'unverified irreducibility' flag in that case.
    """
    deg = len(minpoly) - 1
    c0 = minpoly[0]
    if deg == 1:
        return True
    if c0 == 0:
        return False  # x divides
    if deg > 4 or abs(c0) > 10**12:
        return None
    # rational-root test: monic integer polynomial, rational roots are integers
    # dividing the constant term
    for d in _integer_divisors(c0):
        for cand in (d, -d):
            if poly_eval(minpoly, cand) == 0:
                return False
    if deg <= 3:
        return True
    # degree 4: also exclude factorization into two monic integer quadratics
    c3, c2, c1 = minpoly[3], minpoly[2], minpoly[1]
    for b0 in _integer_divisors(c0):
        for b in (b0, -b0):
            if b == 0 or c0 % b != 0:
                continue
            d = c0 // b
            if d == b:
                # (x^2+ax+b)(x^2+cx+b): need c1 == c3*b and a+c=c3, ac=c2-2b
                if c1 != c3 * b:
                    continue
                disc = c3 * c3 - 4 * (c2 - 2 * b)
                if _is_perfect_square(disc) and (c3 + math.isqrt(disc)) % 2 == 0:
                    return False
            else:
                num = c1 - c3 * b
                if num % (d - b) != 0:
                    continue
                a = num // (d - b)
                c = c3 - a
                if b + d + a * c == c2:
                    return False
    return True


class NumberField:
    """Q(theta) for theta a root of a monic irreducible integer polynomial."""

    __slots__ = ("minpoly", "degree", "irreducibility_verified")

    def __init__(self, minpoly):
        coeffs = tuple(int(c) for c in minpoly)
        if len(coeffs) < 2:
            raise PreconditionError("minimal polynomial must have degree >= 1")
        if coeffs[-1] != 1:
            raise PreconditionError("minimal polynomial must be monic")
        verdict = _irreducible_over_q(coeffs)
        if verdict is False:
            raise PreconditionError(
                f"polynomial {list(coeffs)} is reducible over Q; not a minimal polynomial"
            )
        object.__setattr__(self, "minpoly", coeffs)
        object.__setattr__(self, "degree", len(coeffs) - 1)
        object.__setattr__(self, "irreducibility_verified", verdict is True)

    def __setattr__(self, *_):
        raise AttributeError("NumberField is immutable")

    def __eq__(self, other):
        return isinstance(other, NumberField) and self.minpoly == other.minpoly

    def __hash__(self):
        return hash(self.minpoly)

    def __repr__(self):
        return f"NumberField({list(self.minpoly)})"

    def embeddings(self, precision_bits: int) -> list[BigComplex]:
        """Complex roots of the minimal polynomial, sorted by (real, imag)."""
        return _field_embeddings(self.minpoly, precision_bits)

    def discriminant_sign(self) -> int:
        """Sign of c1^2 - 4*c0 for quadratic fields (negative = imaginary)."""
        if self.degree != 2:
            raise PreconditionError("discriminant_sign is defined for degree 2 only")
        c0, c1 = self.minpoly[0], self.minpoly[1]
        disc = c1 * c1 - 4 * c0
        return (disc > 0) - (disc < 0)

    def element(self, coords) -> "NumberFieldElement":
        return NumberFieldElement(self, coords)

    def theta(self) -> "NumberFieldElement":
        coords = [Fraction(0)] * self.degree
        if self.degree == 1:
            # Q(theta) with theta rational: theta = -c0
            coords[0] = Fraction(-self.minpoly[0])
        else:
            coords[1] = Fraction(1)
        return NumberFieldElement(self, coords)

    def zero(self) -> "NumberFieldElement":
        return NumberFieldElement(self, [Fraction(0)] * self.degree)

    def one(self) -> "NumberFieldElement":
        return NumberFieldElement(self, [Fraction(1)] + [Fraction(0)] * (self.degree - 1))

    def from_rational(self, q) -> "NumberFieldElement":
        coords = [parse_rational(q)] + [Fraction(0)] * (self.degree - 1)
        return NumberFieldElement(self, coords)


@lru_cache(maxsize=256)
def _field_embeddings_cached(minpoly: tuple[int, ...], precision_bits: int):
    return tuple(poly_roots([Fraction(c) for c in minpoly], precision_bits))


def _field_embeddings(minpoly, precision_bits):
    return list(_field_embeddings_cached(tuple(minpoly), precision_bits))


class NumberFieldElement:
    """Element of Q(theta), stored as coordinates on 1, theta, ..., theta^(d-1)."""

    __slots__ = ("field", "coords")

    def __init__(self, field: NumberField, coords):
        coords = tuple(parse_rational(c) for c in coords)
        if len(coords) != field.degree:
            raise PreconditionError(
                f"coords length {len(coords)} != field degree {field.degree}"
            )
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "coords", coords)

    def __setattr__(self, *_):
        raise AttributeError("NumberFieldElement is immutable")

    # -- coercion ----------------------------------------------------------------

    def _lift(self, other):
        if isinstance(other, NumberFieldElement):
            if other.field != self.field:
                raise FieldMismatchError(
                    f"elements of {other.field!r} and {self.field!r} cannot mix"
                )
            return other
        if isinstance(other, (int, Fraction)):
            return self.field.from_rational(Fraction(other))
        return None

    # -- ring/field operations -----------------------------------------------------

    def __add__(self, other):
        rhs = self._lift(other)
        if rhs is None:
            return NotImplemented
        return NumberFieldElement(
            self.field, [a + b for a, b in zip(self.coords, rhs.coords)]
        )

    __radd__ = __add__

    def __sub__(self, other):
        rhs = self._lift(other)
        if rhs is None:
            return NotImplemented
        return NumberFieldElement(
            self.field, [a - b for a, b in zip(self.coords, rhs.coords)]
        )

    def __rsub__(self, other):
        rhs = self._lift(other)
        if rhs is None:
            return NotImplemented
        return rhs - self

    def __neg__(self):
        return NumberFieldElement(self.field, [-a for a in self.coords])

    def __mul__(self, other):
        rhs = self._lift(other)
        if rhs is None:
            return NotImplemented
        deg = self.field.degree
        prod = [Fraction(0)] * (2 * deg - 1)
        for i, a in enumerate(self.coords):
            if a == 0:
                continue
            for j, b in enumerate(rhs.coords):
                if b != 0:
                    prod[i + j] += a * b
        return NumberFieldElement(self.field, _reduce_mod_minpoly(prod, self.field))

    __rmul__ = __mul__

    def inverse(self) -> "NumberFieldElement":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero number-field element")
        mp_coeffs = [Fraction(c) for c in self.field.minpoly]
        g, s, _ = _poly_xgcd(list(self.coords), mp_coeffs)
        if poly_degree(g) != 0:
            raise PreconditionError(
                "element not invertible: minimal polynomial is reducible"
            )
        inv_g = Fraction(1) / g[0]
        coords = [c * inv_g for c in s]
        coords += [Fraction(0)] * (2 * self.field.degree - 1 - len(coords))
        return NumberFieldElement(self.field, _reduce_mod_minpoly(coords, self.field))

    def __truediv__(self, other):
        rhs = self._lift(other)
        if rhs is None:
            return NotImplemented
        return self * rhs.inverse()

    def __rtruediv__(self, other):
        rhs = self._lift(other)
        if rhs is None:
            return NotImplemented
        return rhs * self.inverse()

    def __pow__(self, exponent: int):
        if not isinstance(exponent, int):
            return NotImplemented
        if exponent < 0:
            return self.inverse() ** (-exponent)
        result = self.field.one()
        base = self
        e = exponent
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    # -- predicates and views ---------------------------------------------------------

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coords)

    def is_rational(self) -> bool:
        return all(c == 0 for c in self.coords[1:])

    def as_fraction(self) -> Fraction:
        if not self.is_rational():
            raise PreconditionError(f"{self!r} is not rational")
        return self.coords[0]

    def conjugate(self) -> "NumberFieldElement":
        """Field conjugation theta -> -c1 - theta (quadratic fields only)."""
        if self.field.degree == 1:
            return self
        if self.field.degree != 2:
            raise PreconditionError("conjugate() supports degree <= 2 fields only")
        c1 = Fraction(self.field.minpoly[1])
        a, b = self.coords
        return NumberFieldElement(self.field, [a - b * c1, -b])

    def abs_squared(self) -> Fraction | None:
        """Exact |embedding|^2 when it is embedding-independent, else None.

        Rational elements: coords[0]^2. Imaginary quadratic fields: both
        embeddings are complex conjugates, so the modulus is exact.
        """
        if self.field.degree == 1 or self.is_rational():
            return self.coords[0] ** 2
        if self.field.degree == 2 and self.field.discriminant_sign() < 0:
            c0, c1 = Fraction(self.field.minpoly[0]), Fraction(self.field.minpoly[1])
            a, b = self.coords
            # theta = (-c1 + i*sqrt(4c0 - c1^2))/2
            re = a - b * c1 / 2
            im_sq = b * b * (4 * c0 - c1 * c1) / 4
            return re * re + im_sq
        return None

    def embed(self, root_choice: int, precision_bits: int) -> BigComplex:
        return nf_embed(self, root_choice, precision_bits)

    # -- comparisons --------------------------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.is_rational() and self.coords[0] == other
        if not isinstance(other, NumberFieldElement):
            return NotImplemented
        return self.field == other.field and self.coords == other.coords

    def __hash__(self):
        return hash((self.field, self.coords))

    def __repr__(self):
        return f"NumberFieldElement({list(self.field.minpoly)}, {[format_rational(c) for c in self.coords]})"

    def __str__(self):
        names = ["1", "θ"] + [f"θ^{i}" for i in range(2, self.field.degree)]
        parts = []
        for c, name in zip(self.coords, names):
            if c == 0:
                continue
            term = format_rational(c) if name == "1" else f"{format_rational(c)}·{name}"
            parts.append(term)
        return " + ".join(parts) if parts else "0"


def _reduce_mod_minpoly(coeffs, field: NumberField):
    """Reduce a dense Fraction polynomial modulo the (monic) minimal polynomial."""
    deg = field.degree
    work = list(coeffs)
    for i in range(len(work) - 1, deg - 1, -1):
        c = work[i]
        if c == 0:
            continue
        work[i] = Fraction(0)
        for j in range(deg):
            work[i - deg + j] -= c * field.minpoly[j]
    out = work[:deg]
    out += [Fraction(0)] * (deg - len(out))
    return out


def nf_arith(a: NumberFieldElement, b: NumberFieldElement, op: str) -> NumberFieldElement:
    """Field arithmetic dispatch; op is one of '+', '-', '*', '/'."""
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return a / b
    raise PreconditionError(f"unknown operation {op!r}")


def nf_embed(x: NumberFieldElement, root_choice: int, precision_bits: int) -> BigComplex:
    """Evaluate x at the root_choice-th complex root of its minimal polynomial.

    Roots are ordered lexicographically by (real, imag) at working precision,
    so branch indices are stable across calls and precisions.
    """
    if precision_bits < MIN_PRECISION_BITS:
        raise PreconditionError(f"precision_bits must be >= {MIN_PRECISION_BITS}")
    if not 0 <= root_choice < x.field.degree:
        raise PreconditionError(
            f"root_choice {root_choice} out of range for degree {x.field.degree}"
        )
    work = precision_bits + _WORK_EXTRA
    roots = x.field.embeddings(work)
    theta = roots[root_choice].to_mpc()
    with mp.workprec(work):
        acc = mpmath.mpc(0)
        for c in reversed(x.coords):
            acc = acc * theta + _fraction_to_mpf(c)
    return BigComplex.from_mpc(acc, precision_bits)


def embed_value(value, precision_bits: int, root_choice: int = 0) -> BigComplex:
    """Uniform numeric view of Fraction / NumberFieldElement / BigComplex."""
    if isinstance(value, BigComplex):
        return value
    if isinstance(value, NumberFieldElement):
        return nf_embed(value, root_choice, precision_bits)
    if isinstance(value, (int, Fraction)):
        return BigComplex(Fraction(value), 0, precision_bits)
    if isinstance(value, (float, mpmath.mpf)):
        return BigComplex(value, 0, precision_bits)
    if isinstance(value, (complex, mpmath.mpc)):
        return BigComplex.from_mpc(mpmath.mpc(value), precision_bits)
    raise PreconditionError(f"cannot embed value of type {type(value).__name__}")
