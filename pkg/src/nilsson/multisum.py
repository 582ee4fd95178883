"""Balanced multisum terms: products of factorials of integral linear forms
with signs, exact lattice-support enumeration, and exact evaluation.

A term is C0^n * prod_i C_i^(k_i) * prod_j A_j(n,k)!^(eps_j), optionally with
a sign prefactor (-1)^(A(n,k)) and polynomial prefactors A(n,k)^e. The factor
forms double as the support constraints A_j(n,k) >= 0. Linear forms carry a
constant offset; that extends the textbook definition (forms in (n,k) only)
and the offset participates in the balance sum, so shifted encodings are
reported unbalanced even when they evaluate identically to a balanced one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ParseError, PreconditionError
from .exactnum import NumberFieldElement, parse_rational
from .jsonio import load_json

SUPPORT_CAP = 10_000_000
_FM_CONSTRAINT_CAP = 20_000


@dataclass(frozen=True)
class LinearForm:
    """coeff_n * n + sum_i coeff_k[i] * k_i + constant."""

    coeff_n: int
    coeff_k: tuple[int, ...]
    constant: int = 0

    def __post_init__(self):
        object.__setattr__(self, "coeff_k", tuple(int(c) for c in self.coeff_k))

    def eval(self, n: int, k) -> int:
        return self.coeff_n * n + sum(c * ki for c, ki in zip(self.coeff_k, k)) + self.constant

    def is_zero(self) -> bool:
        return self.coeff_n == 0 and self.constant == 0 and all(c == 0 for c in self.coeff_k)

    def scaled_add(self, other: "LinearForm", factor: int) -> "LinearForm":
        return LinearForm(
            self.coeff_n + factor * other.coeff_n,
            tuple(a + factor * b for a, b in zip(self.coeff_k, other.coeff_k)),
            self.constant + factor * other.constant,
        )

    def __str__(self):
        parts = []
        if self.coeff_n:
            parts.append(f"{self.coeff_n}n" if self.coeff_n != 1 else "n")
        for i, c in enumerate(self.coeff_k):
            if c:
                name = f"k{i + 1}" if len(self.coeff_k) > 1 else "k"
                parts.append(f"{c}{name}" if c != 1 else name)
        if self.constant or not parts:
            parts.append(str(self.constant))
        return " + ".join(parts).replace("+ -", "- ")


@dataclass(frozen=True)
class BalancedTerm:
    r: int
    C0: object = Fraction(1)
    C: tuple = ()
    factors: tuple = ()           # (LinearForm, eps) with eps = +1 / -1
    sign_form: LinearForm | None = None
    prefactors: tuple = ()        # (LinearForm, integer exponent)

    def __post_init__(self):
        if self.r < 1:
            raise PreconditionError("term needs at least one summation variable")
        C = tuple(self.C) if self.C else tuple([Fraction(1)] * self.r)
        if len(C) != self.r:
            raise PreconditionError(f"expected {self.r} geometric constants, got {len(C)}")
        object.__setattr__(self, "C", C)
        for form, eps in self.factors:
            if len(form.coeff_k) != self.r:
                raise PreconditionError(f"form {form} has wrong arity")
            if eps not in (1, -1):
                raise PreconditionError(f"epsilon must be +-1, got {eps}")
        object.__setattr__(self, "factors", tuple(self.factors))
        object.__setattr__(self, "prefactors", tuple(self.prefactors))


@dataclass(frozen=True)
class SupportSet:
    n: int
    points: tuple


@dataclass(frozen=True)
class BalanceReport:
    balanced: bool
    defect: LinearForm

    def __str__(self):
        if self.balanced:
            return "balanced: sum of eps-weighted forms is identically zero"
        return f"unbalanced: residual form {self.defect}"


def check_balanced(term: BalancedTerm) -> BalanceReport:
    """Sum the eps-weighted factor forms, constants included."""
    defect = LinearForm(0, (0,) * term.r, 0)
    for form, eps in term.factors:
        defect = defect.scaled_add(form, eps)
    return BalanceReport(defect.is_zero(), defect)


# ---------------------------------------------------------------------------
# support enumeration (exact Fourier-Motzkin projection, lexicographic walk)
# ---------------------------------------------------------------------------

def _normalize_constraint(coeffs, const):
    g = 0
    for c in coeffs:
        g = math.gcd(g, abs(c))
    g = math.gcd(g, abs(const))
    if g > 1:
        coeffs = tuple(c // g for c in coeffs)
        const = const // g
    return coeffs, const


def _fm_eliminate(constraints, var: int):
    """Project out variable `var` (a >= 0 constraints as (coeffs, const))."""
    keep, lower, upper = [], [], []
    for coeffs, const in constraints:
        a = coeffs[var]
        if a == 0:
            keep.append((coeffs, const))
        elif a > 0:
            lower.append((coeffs, const))
        else:
            upper.append((coeffs, const))
    out = set(keep)
    for lc, lconst in lower:
        for uc, uconst in upper:
            a, b = lc[var], uc[var]  # a > 0, b < 0
            coeffs = tuple(-b * x + a * y for x, y in zip(lc, uc))
            const = -b * lconst + a * uconst
            out.add(_normalize_constraint(coeffs, const))
    if len(out) > _FM_CONSTRAINT_CAP:
        raise PreconditionError(
            "support enumeration: constraint blow-up during projection"
        )
    return sorted(out), bool(lower), bool(upper)


def enumerate_support(term: BalancedTerm, n: int, cap: int = SUPPORT_CAP) -> SupportSet:
    """All lattice points with every factor form nonnegative, in lexicographic
    order. Raises when the support is unbounded or the work cap is exceeded."""
    r = term.r
    constraints = set()
    for form, _ in term.factors:
        coeffs = form.coeff_k
        const = form.coeff_n * n + form.constant
        constraints.add(_normalize_constraint(coeffs, const))
    systems = [None] * r
    systems[r - 1] = sorted(constraints)
    current = sorted(constraints)
    for var in range(r - 1, 0, -1):
        projected, _, _ = _fm_eliminate(current, var)
        systems[var - 1] = projected
        current = projected

    points = []
    visited = 0

    def bounds_at(level: int, prefix: tuple[int, ...]):
        lo, hi = None, None
        for coeffs, const in systems[level]:
            a = coeffs[level]
            val = const + sum(c * x for c, x in zip(coeffs[:level], prefix))
            if a == 0:
                if val < 0:
                    return 1, 0  # infeasible prefix
            elif a > 0:
                cand = -(val // a)
                lo = cand if lo is None else max(lo, cand)
            else:
                cand = val // (-a)
                hi = cand if hi is None else min(hi, cand)
        if lo is None or hi is None:
            raise PreconditionError(
                f"support unbounded in variable k{level + 1} at n={n}: "
                "term violates the finite-support requirement"
            )
        return lo, hi

    def walk(level: int, prefix: tuple[int, ...]):
        nonlocal visited
        lo, hi = bounds_at(level, prefix)
        for x in range(lo, hi + 1):
            visited += 1
            if visited > cap:
                raise PreconditionError(
                    f"support enumeration exceeded cap of {cap} points"
                )
            if level == r - 1:
                points.append(prefix + (x,))
            else:
                walk(level + 1, prefix + (x,))

    walk(0, ())
    return SupportSet(n, tuple(points))


# ---------------------------------------------------------------------------
# exact evaluation
# ---------------------------------------------------------------------------

def _factorial(m: int, cache: dict) -> int:
    value = cache.get(m)
    if value is None:
        value = math.factorial(m)
        cache[m] = value
    return value


def _pow_exact(base, exponent: int):
    if isinstance(base, NumberFieldElement):
        return base**exponent
    base = Fraction(base)
    if exponent < 0 and base == 0:
        raise PreconditionError("zero constant raised to a negative power")
    return base**exponent


def eval_multisum(term: BalancedTerm, n: int, fact_cache: dict | None = None):
    """Exact sum of the term over its support at this n. Returns a Fraction,
    or a NumberFieldElement when any constant lives in a number field."""
    if n < 0:
        raise PreconditionError("n must be a natural number")
    support = enumerate_support(term, n)
    cache = fact_cache if fact_cache is not None else {}
    total = 0
    c0n = _pow_exact(term.C0, n)
    for point in support.points:
        num = 1
        den = 1
        for form, eps in term.factors:
            v = form.eval(n, point)
            assert v >= 0, "enumerated support point violates a factor form"
            if eps > 0:
                num *= _factorial(v, cache)
            else:
                den *= _factorial(v, cache)
        value = Fraction(num, den)
        for form, exponent in term.prefactors:
            v = form.eval(n, point)
            if exponent < 0:
                if v == 0:
                    raise PreconditionError(
                        f"prefactor {form} vanishes at {point} with negative exponent"
                    )
                value *= Fraction(1, v ** (-exponent))
            elif exponent > 0:
                value *= v**exponent
        if term.sign_form is not None and term.sign_form.eval(n, point) % 2:
            value = -value
        cpart = c0n
        for ci, ki in zip(term.C, point):
            if not (isinstance(ci, Fraction) and ci == 1):
                cpart = cpart * _pow_exact(ci, ki)
        total = total + value * cpart
    return total


def eval_multisum_range(term: BalancedTerm, n_values, progress=None) -> list:
    """Evaluate over many n sharing one factorial cache."""
    cache: dict = {}
    out = []
    for n in n_values:
        out.append(eval_multisum(term, n, fact_cache=cache))
        if progress is not None:
            progress(n)
    return out


# ---------------------------------------------------------------------------
# growth diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GFunctionReport:
    size_C: float
    denom_C: float
    size_halves: tuple
    denom_halves: tuple
    g_compatible: bool
    notes: tuple = ()

    def to_json_dict(self):
        return {
            "size_C": self.size_C,
            "denom_C": self.denom_C,
            "size_halves": list(self.size_halves),
            "denom_halves": list(self.denom_halves),
            "g_compatible": self.g_compatible,
            "notes": list(self.notes),
        }


def _log_abs_fraction(q: Fraction) -> float | None:
    if q == 0:
        return None
    return math.log(abs(q.numerator)) - math.log(q.denominator)


def gfunction_diagnostic(values, window) -> GFunctionReport:
    """Root-growth of |a_n| and of the running denominator lcm over a window.

    values[i] must be the exact rational a_i (indexed from 0). The report
    flags G-function-compatible growth when both statistics are stable across
    the window halves (ratio within 20%).
    """
    lo, hi = (window.start, window.stop - 1) if isinstance(window, range) else window
    if not (1 <= lo <= hi < len(values)):
        raise PreconditionError(f"window [{lo},{hi}] outside data range")
    values = [Fraction(v) if not isinstance(v, Fraction) else v for v in values]

    lcm = 1
    lcm_at = []
    for v in values[: hi + 1]:
        lcm = lcm * v.denominator // math.gcd(lcm, v.denominator)
        lcm_at.append(lcm)

    def size_at(nn):
        la = _log_abs_fraction(values[nn])
        return 0.0 if la is None else math.exp(la / nn)

    def denom_at(nn):
        return math.exp(math.log(lcm_at[nn]) / nn)

    mid = (lo + hi) // 2
    first = range(lo, mid + 1)
    second = range(mid + 1, hi + 1)
    size_halves = (max(map(size_at, first)), max(map(size_at, second), default=0.0))
    denom_halves = (max(map(denom_at, first)), max(map(denom_at, second), default=0.0))
    size_C = max(size_halves)
    denom_C = max(denom_halves)

    notes = []

    def stable(pair):
        a, b = pair
        if a == 0 and b == 0:
            return True
        if min(a, b) == 0:
            return False
        return abs(b / a - 1) <= 0.20

    size_ok = stable(size_halves)
    denom_ok = stable(denom_halves)
    if not size_ok:
        notes.append("|a_n|^(1/n) not stable across window halves")
    if not denom_ok:
        notes.append("denominator growth not stable across window halves")
    return GFunctionReport(
        size_C, denom_C, size_halves, denom_halves, size_ok and denom_ok, tuple(notes)
    )


# ---------------------------------------------------------------------------
# built-ins and file format
# ---------------------------------------------------------------------------

def _form1(n, k, const=0):
    return LinearForm(n, (k,), const)


def _form2(n, k, l, const=0):
    return LinearForm(n, (k, l), const)


def builtin_term(name: str) -> BalancedTerm:
    """Named terms: 'apery-like' (a double binomial sum) and 'tet6j'
    (the regular-tetrahedron / 6j evaluation)."""
    if name == "apery-like":
        factors = (
            [( _form2(1, 1, 0), 1)] * 3      # (n+k)!^3
            + [( _form2(1, 0, 1), 1)]        # (n+l)!
            + [( _form2(0, 1, 0), -1)] * 3   # k!^3
            + [( _form2(0, 0, 1), -1)]       # l!
            + [( _form2(1, 0, 0), -1)] * 2   # n!^2
            + [( _form2(0, 1, 1), -1)] * 2   # (k+l)!^2
            + [( _form2(1, -1, -1), -1)] * 2 # (n-k-l)!^2
        )
        return BalancedTerm(r=2, factors=tuple(factors))
    if name == "tet6j":
        factors = (
            [( _form1(1, 0), 1)] * 6         # n!^6
            + [( _form1(3, 0), -1)] * 2      # (3n)!^2
            + [( _form1(0, 1), 1)]           # k!
            + [( _form1(-3, 1), -1)] * 4     # (k-3n)!^4
            + [( _form1(4, -1), -1)] * 3     # (4n-k)!^3
        )
        # (3n+1)!^2 = (3n+1)^2 (3n)!^2 and (k+1)! = (k+1) k!; the polynomial
        # parts go into prefactors so the factorial forms stay balanced
        return BalancedTerm(
            r=1,
            factors=tuple(factors),
            sign_form=_form1(0, 1),
            prefactors=((_form1(0, 1, 1), 1), (_form1(3, 0, 1), -2)),
        )
    raise PreconditionError(f"unknown built-in term {name!r}")


def _form_from_json(obj) -> LinearForm:
    try:
        return LinearForm(int(obj.get("n", 0)), tuple(obj["k"]), int(obj.get("const", 0)))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad linear form {obj!r}: {exc}") from None


def term_from_json(source) -> BalancedTerm:
    obj = load_json(source) if not isinstance(source, dict) else source
    try:
        r = int(obj["r"])
        factors = tuple(
            (_form_from_json(f["form"]), int(f["eps"])) for f in obj["factors"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad term file: {exc}") from None
    C0 = parse_rational(obj.get("C0", "1"))
    C = tuple(parse_rational(c) for c in obj.get("C", ["1"] * r))
    sign_form = _form_from_json(obj["sign_form"]) if obj.get("sign_form") else None
    prefactors = tuple(
        (_form_from_json(p["form"]), int(p["exp"])) for p in obj.get("prefactors", [])
    )
    return BalancedTerm(r=r, C0=C0, C=C, factors=factors, sign_form=sign_form,
                        prefactors=prefactors)


def term_to_json(term: BalancedTerm) -> dict:
    def form_dict(f: LinearForm):
        return {"n": f.coeff_n, "k": list(f.coeff_k), "const": f.constant}

    out = {
        "r": term.r,
        "C0": str(term.C0),
        "C": [str(c) for c in term.C],
        "factors": [{"form": form_dict(f), "eps": e} for f, e in term.factors],
    }
    if term.sign_form is not None:
        out["sign_form"] = form_dict(term.sign_form)
    if term.prefactors:
        out["prefactors"] = [
            {"form": form_dict(f), "exp": e} for f, e in term.prefactors
        ]
    return out
