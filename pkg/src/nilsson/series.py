"""Nilsson-expansion data model.

Provides the well-ordered index set for monomials (log n)^beta / n^alpha,
truncated power series in 1/n over exact or numeric coefficient domains, and
the full expansion object: a set of equal-modulus growth rates with per-branch
Stokes constants and normalized g-series. Expansions flatten to a coefficient
matrix (rows = monomial indices, columns = growth rates) and back; the matrix
view is what minimality, equality, and partial sums operate on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering

import mpmath
from mpmath import mp

from .errors import PreconditionError
from .exactnum import (
    BigComplex,
    NumberField,
    NumberFieldElement,
    embed_value,
    format_rational,
    parse_rational,
)
from .jsonio import value_from_json, value_to_json

_WORK_EXTRA = 30


@total_ordering
@dataclass(frozen=True)
class OmegaIndex:
    """Index (alpha, beta) of the monomial (log n)^beta / n^alpha.

    Ordering: smaller means asymptotically dominant. alpha compares first;
    for equal alpha the *larger* log power dominates, hence compares smaller.
    """

    alpha: Fraction
    beta: int

    def __post_init__(self):
        object.__setattr__(self, "alpha", parse_rational(self.alpha))
        if not isinstance(self.beta, int) or self.beta < 0:
            raise PreconditionError(f"beta must be a natural number, got {self.beta!r}")

    @property
    def sort_key(self):
        return (self.alpha, -self.beta)

    def __lt__(self, other: "OmegaIndex"):
        return self.sort_key < other.sort_key

    def shifted(self, k: int) -> "OmegaIndex":
        return OmegaIndex(self.alpha + k, self.beta)

    def __str__(self):
        return f"({format_rational(self.alpha)},{self.beta})"


def omega_cmp(a: OmegaIndex, b: OmegaIndex) -> int:
    """-1, 0, or 1 as a precedes, equals, or follows b in the dominance order."""
    if a.sort_key < b.sort_key:
        return -1
    if a.sort_key == b.sort_key:
        return 0
    return 1


@dataclass(frozen=True)
class NilssonMonomial:
    index: OmegaIndex

    def eval(self, n: int, precision_bits: int) -> BigComplex:
        return monomial_eval(self, n, precision_bits)


def monomial_eval(m: NilssonMonomial | OmegaIndex, n: int, precision_bits: int) -> BigComplex:
    """(log n)^beta * n^(-alpha) at the requested precision; requires n >= 2."""
    idx = m.index if isinstance(m, NilssonMonomial) else m
    if n < 2:
        raise PreconditionError(f"monomial evaluation requires n >= 2, got {n}")
    with mp.workprec(precision_bits + _WORK_EXTRA):
        value = _monomial_mpf(idx.alpha, idx.beta, n)
    return BigComplex(value, 0, precision_bits)


def _monomial_mpf(alpha: Fraction, beta: int, n: int):
    """mpf value of (log n)^beta / n^alpha at ambient precision."""
    ln = mpmath.log(n)
    power = mpmath.power(
        mpmath.mpf(n), -mpmath.mpf(alpha.numerator) / alpha.denominator
    )
    return ln**beta * power


# ---------------------------------------------------------------------------
# truncated power series
# ---------------------------------------------------------------------------

class TruncatedSeries:
    """Dense power series truncated at order K, over any coefficient domain
    closed under + and * (Fraction, NumberFieldElement, BigComplex, mpf)."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        coeffs = tuple(coeffs)
        if not coeffs:
            raise PreconditionError("series needs at least the constant coefficient")
        object.__setattr__(self, "coeffs", coeffs)

    def __setattr__(self, *_):
        raise AttributeError("TruncatedSeries is immutable")

    @classmethod
    def constant(cls, value, order: int) -> "TruncatedSeries":
        return cls([value] + [0] * order)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def normalized(self) -> bool:
        return self.coeffs[0] == 1

    def __getitem__(self, k: int):
        return self.coeffs[k] if 0 <= k <= self.order else 0

    def __eq__(self, other):
        return isinstance(other, TruncatedSeries) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def _zip_order(self, other: "TruncatedSeries") -> int:
        return min(self.order, other.order)

    def __add__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        K = self._zip_order(other)
        return TruncatedSeries([self[k] + other[k] for k in range(K + 1)])

    def __sub__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        K = self._zip_order(other)
        return TruncatedSeries([self[k] - other[k] for k in range(K + 1)])

    def __neg__(self):
        return TruncatedSeries([-c for c in self.coeffs])

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            return self.scale(other)
        K = self._zip_order(other)
        out = [0] * (K + 1)
        for i in range(K + 1):
            a = self[i]
            if a == 0:
                continue
            for j in range(K + 1 - i):
                b = other[j]
                if b != 0:
                    out[i + j] = out[i + j] + a * b
        return TruncatedSeries(out)

    def __rmul__(self, other):
        return self.scale(other)

    def scale(self, factor) -> "TruncatedSeries":
        return TruncatedSeries([c * factor for c in self.coeffs])

    def shift(self, m: int) -> "TruncatedSeries":
        """Multiply by u^m, keeping the truncation order."""
        if m < 0:
            raise PreconditionError("negative shifts are not defined")
        return TruncatedSeries(([0] * m + list(self.coeffs))[: self.order + 1])

    def truncate(self, order: int) -> "TruncatedSeries":
        return TruncatedSeries([self[k] for k in range(order + 1)])

    def exp(self) -> "TruncatedSeries":
        """exp of a series with zero constant term, via E' = S'E."""
        if self.coeffs[0] != 0:
            raise PreconditionError("series exp requires zero constant term")
        K = self.order
        out = [0] * (K + 1)
        out[0] = 1
        for k in range(1, K + 1):
            acc = 0
            for j in range(1, k + 1):
                if self[j] != 0:
                    acc = acc + (Fraction(j, k) * self[j]) * out[k - j]
            out[k] = acc
        return TruncatedSeries(out)

    def binomial_power(self, alpha) -> "TruncatedSeries":
        """(1 + s)^alpha for s = self with zero constant term; alpha may live
        in any domain containing the coefficients (Fraction, field element)."""
        if self.coeffs[0] != 0:
            raise PreconditionError("binomial power requires zero constant term")
        K = self.order
        result = TruncatedSeries.constant(1, K)
        power = TruncatedSeries.constant(1, K)
        binom = 1
        for k in range(1, K + 1):
            power = power * self
            if all(c == 0 for c in power.coeffs):
                break
            binom = binom * (alpha - (k - 1)) * Fraction(1, k)
            result = result + power.scale(binom)
        return result

    def eval_at(self, x):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def map_coeffs(self, fn) -> "TruncatedSeries":
        return TruncatedSeries([fn(c) for c in self.coeffs])

    def __repr__(self):
        return f"TruncatedSeries({list(self.coeffs)!r})"


# ---------------------------------------------------------------------------
# expansions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExpansionTerm:
    lambda_index: int
    alpha: Fraction
    beta: int
    stokes: object
    g: TruncatedSeries

    def __post_init__(self):
        object.__setattr__(self, "alpha", parse_rational(self.alpha))
        if self.beta < 0:
            raise PreconditionError("beta must be a natural number")


@dataclass(frozen=True)
class CoefficientMatrix:
    """Flattened expansion: rows are Omega indices in ascending order,
    columns the growth rates, entries the coefficients c_{omega,lambda}."""

    rows: tuple
    lambdas: tuple
    entries: tuple  # entries[i][j] aligned with rows[i], lambdas[j]

    def __post_init__(self):
        for a, b in zip(self.rows, self.rows[1:]):
            if not a < b:
                raise PreconditionError("matrix rows must be strictly ascending")

    def entry(self, i: int, j: int):
        return self.entries[i][j]


def _is_zero_coeff(value) -> bool:
    if isinstance(value, NumberFieldElement):
        return value.is_zero()
    if isinstance(value, BigComplex):
        return value.real == 0 and value.imag == 0
    return value == 0


class NilssonExpansion:
    """The object a_n ~ sum over (lambda, alpha, beta) of
    lambda^n n^(-alpha) (log n)^beta * S * g(1/n), with g normalized to g(0)=1
    whenever the data allows.

    Growth rates of a genuine Nilsson-type sequence share one modulus r; the
    constructor does not enforce that (partial sums are well defined without
    it) but `equal_modulus_defect` reports the spread for diagnostics.
    """

    def __init__(self, lambdas, terms, d=None, S=None, field: NumberField | None = None,
                 r_hint=None):
        lambdas = tuple(lambdas)
        terms = tuple(
            t if isinstance(t, ExpansionTerm) else ExpansionTerm(**t) for t in terms
        )
        if not lambdas:
            raise PreconditionError("expansion needs at least one growth rate")
        for t in terms:
            if not 0 <= t.lambda_index < len(lambdas):
                raise PreconditionError(f"lambda_index {t.lambda_index} out of range")
        derived_d = max((t.beta for t in terms), default=0)
        derived_S = sorted({t.alpha for t in terms})
        self.lambdas = lambdas
        self.terms = tuple(sorted(terms, key=lambda t: (t.lambda_index, OmegaIndex(t.alpha, t.beta).sort_key)))
        self.d = derived_d if d is None else int(d)
        if self.d < derived_d:
            raise PreconditionError(f"declared d={d} below max beta {derived_d}")
        self.S = tuple(sorted(set(parse_rational(s) for s in S))) if S is not None else tuple(derived_S)
        for t in terms:
            if not self._alpha_in_omega(t.alpha):
                raise PreconditionError(
                    f"term alpha {t.alpha} not in S + N for S={self.S}"
                )
        self.field = field
        self.r_hint = r_hint

    def _alpha_in_omega(self, alpha: Fraction) -> bool:
        return any(alpha - s == int(alpha - s) and alpha >= s for s in self.S)

    def omega_contains(self, idx: OmegaIndex) -> bool:
        return idx.beta <= self.d and self._alpha_in_omega(idx.alpha)

    # -- growth-rate modulus ------------------------------------------------------

    def r_value(self, precision_bits: int = 64, root_choice: int = 0):
        """Common modulus r, computed as max |lambda| over the growth rates
        (exactly when the lambdas admit exact |.|^2, numerically otherwise)."""
        if self.r_hint is not None:
            with mp.workprec(precision_bits + _WORK_EXTRA):
                return mpmath.mpf(str(self.r_hint))
        best = None
        with mp.workprec(precision_bits + _WORK_EXTRA):
            for lam in self.lambdas:
                exact_sq = lam.abs_squared() if isinstance(lam, NumberFieldElement) else None
                if exact_sq is not None:
                    v = mpmath.sqrt(
                        mpmath.mpf(exact_sq.numerator) / exact_sq.denominator
                    )
                else:
                    v = embed_value(lam, precision_bits + _WORK_EXTRA, root_choice).abs_mpf()
                best = v if best is None else max(best, v)
        return best

    def equal_modulus_defect(self, precision_bits: int = 64, root_choice: int = 0) -> float:
        """Relative spread of |lambda| across growth rates (0 for a single one)."""
        with mp.workprec(precision_bits):
            mags = [
                embed_value(lam, precision_bits, root_choice).abs_mpf()
                for lam in self.lambdas
            ]
            lo, hi = min(mags), max(mags)
            if hi == 0:
                return 0.0
            return float((hi - lo) / hi)

    # -- flattening ----------------------------------------------------------------

    def flatten(self) -> CoefficientMatrix:
        """Coefficient matrix with c_{(alpha+k, beta), lambda} = S * g_k,
        summing contributions when shifted terms alias the same cell."""
        cells: dict[tuple[Fraction, int], dict[int, object]] = {}
        for t in self.terms:
            for k in range(t.g.order + 1):
                gk = t.g[k]
                contrib = t.stokes * gk if not _is_zero_coeff(gk) else None
                if contrib is None or _is_zero_coeff(contrib):
                    # still materialize the cell so zero rows are visible
                    cells.setdefault((t.alpha + k, t.beta), {}).setdefault(t.lambda_index, 0)
                    continue
                row = cells.setdefault((t.alpha + k, t.beta), {})
                row[t.lambda_index] = row.get(t.lambda_index, 0) + contrib
        indices = sorted(
            (OmegaIndex(a, b) for (a, b) in cells), key=lambda w: w.sort_key
        )
        entries = []
        for w in indices:
            row = cells[(w.alpha, w.beta)]
            entries.append(tuple(row.get(j, 0) for j in range(len(self.lambdas))))
        return CoefficientMatrix(tuple(indices), self.lambdas, tuple(entries))

    @classmethod
    def from_matrix(cls, matrix: CoefficientMatrix, field=None, r_hint=None) -> "NilssonExpansion":
        """Rebuild the canonical factored form: group rows by (lambda, beta,
        alpha mod 1), take the dominant row of each group as Stokes constant,
        divide the rest into a normalized g-series."""
        groups: dict[tuple[int, int, Fraction], list[tuple[Fraction, object]]] = {}
        for w, row in zip(matrix.rows, matrix.entries):
            frac_class = w.alpha - math.floor(w.alpha)
            for j, c in enumerate(row):
                if _is_zero_coeff(c):
                    continue
                groups.setdefault((j, w.beta, frac_class), []).append((w.alpha, c))
        if not groups:
            raise PreconditionError("expansion entirely zero: no canonical form")
        terms = []
        used_lambda = sorted({j for (j, _, _) in groups})
        index_map = {j: i for i, j in enumerate(used_lambda)}
        for (j, beta, _), rows in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][2], kv[0][1])):
            rows.sort(key=lambda pair: pair[0])
            alpha0, stokes = rows[0]
            span = int(rows[-1][0] - alpha0)
            coeffs = [0] * (span + 1)
            for alpha, c in rows:
                coeffs[int(alpha - alpha0)] = _divide(c, stokes)
            terms.append(
                ExpansionTerm(index_map[j], alpha0, beta, stokes, TruncatedSeries(coeffs))
            )
        lambdas = tuple(matrix.lambdas[j] for j in used_lambda)
        return cls(lambdas, terms, field=field, r_hint=r_hint)

    # -- minimality ---------------------------------------------------------------------

    def minimize(self) -> "NilssonExpansion":
        """Canonical minimal representative: growth rates with all-zero data
        and monomial rows that vanish across every growth rate are dropped."""
        matrix = self.flatten()
        keep_rows = [
            i for i, row in enumerate(matrix.entries)
            if not all(_is_zero_coeff(c) for c in row)
        ]
        if not keep_rows:
            raise PreconditionError("expansion entirely zero cannot be minimized")
        rows = tuple(matrix.rows[i] for i in keep_rows)
        entries = tuple(matrix.entries[i] for i in keep_rows)
        pruned = CoefficientMatrix(rows, matrix.lambdas, entries)
        return NilssonExpansion.from_matrix(pruned, field=self.field, r_hint=self.r_hint)

    # -- evaluation ------------------------------------------------------------------------

    def partial_sum(self, omega_cut: OmegaIndex, n: int, precision_bits: int,
                    root_choice: int = 0) -> BigComplex:
        """r^n * sum over rows omega' <= omega_cut of h_omega'(n) * sum over
        lambda of c_{omega',lambda} (lambda/r)^n."""
        if not self.omega_contains(omega_cut):
            raise PreconditionError(f"cut {omega_cut} is not in this expansion's Omega")
        if n < 2:
            raise PreconditionError("partial sums require n >= 2")
        matrix = self.flatten()
        work = precision_bits + _WORK_EXTRA
        with mp.workprec(work):
            r = self.r_value(work, root_choice)
            scaled = [
                embed_value(lam, work, root_choice).to_mpc() / r for lam in self.lambdas
            ]
            powers = [z**n for z in scaled]
            total = mpmath.mpc(0)
            for w, row in zip(matrix.rows, matrix.entries):
                if omega_cmp(w, omega_cut) > 0:
                    continue
                h = _monomial_mpf(w.alpha, w.beta, n)
                inner = mpmath.mpc(0)
                for j, c in enumerate(row):
                    if _is_zero_coeff(c):
                        continue
                    inner += embed_value(c, work, root_choice).to_mpc() * powers[j]
                total += h * inner
            total *= r**n
        return BigComplex.from_mpc(total, precision_bits)

    # -- equality -----------------------------------------------------------------------------

    def canonical_equal(self, other: "NilssonExpansion", tol: float = 1e-9,
                        precision_bits: int = 128) -> bool:
        return expansion_canonical_equal(self, other, tol, precision_bits)

    # -- serialization ---------------------------------------------------------------------------

    def to_json_dict(self) -> dict:
        out: dict = {}
        if self.field is not None:
            out["minpoly"] = list(self.field.minpoly)
        if self.r_hint is not None:
            out["r_hint"] = str(self.r_hint)
        out["d"] = self.d
        out["S"] = [format_rational(s) for s in self.S]
        out["lambdas"] = [value_to_json(lam) for lam in self.lambdas]
        out["terms"] = [
            {
                "lambda_index": t.lambda_index,
                "alpha": format_rational(t.alpha),
                "beta": t.beta,
                "stokes": value_to_json(t.stokes),
                "g": [value_to_json(c) for c in t.g.coeffs],
            }
            for t in self.terms
        ]
        return out

    @classmethod
    def from_json_dict(cls, obj: dict) -> "NilssonExpansion":
        field = NumberField(obj["minpoly"]) if obj.get("minpoly") else None
        lambdas = [value_from_json(lit, field) for lit in obj["lambdas"]]
        terms = [
            ExpansionTerm(
                int(t["lambda_index"]),
                parse_rational(t["alpha"]),
                int(t["beta"]),
                value_from_json(t["stokes"], field),
                TruncatedSeries([value_from_json(c, field) for c in t["g"]]),
            )
            for t in obj["terms"]
        ]
        return cls(
            lambdas,
            terms,
            d=obj.get("d"),
            S=obj.get("S"),
            field=field,
            r_hint=obj.get("r_hint"),
        )


def _divide(value, by):
    if isinstance(value, (int, Fraction)) and isinstance(by, (int, Fraction)):
        return Fraction(value) / Fraction(by)
    return value / by if not isinstance(by, (int, Fraction)) or by != 1 else value


def expansion_minimize(e: NilssonExpansion) -> NilssonExpansion:
    return e.minimize()


def expansion_partial_sum(e: NilssonExpansion, omega_cut: OmegaIndex, n: int,
                          precision_bits: int, root_choice: int = 0) -> BigComplex:
    return e.partial_sum(omega_cut, n, precision_bits, root_choice)


def expansion_canonical_equal(a: NilssonExpansion, b: NilssonExpansion,
                              tol: float = 1e-9, precision_bits: int = 128) -> bool:
    """True iff the minimal forms agree: same growth rates, same monomial rows,
    same coefficients. Exact data compares exactly; numeric data within tol."""
    try:
        ma = a.minimize().flatten()
        mb = b.minimize().flatten()
    except PreconditionError:
        return False
    if len(ma.rows) != len(mb.rows) or len(ma.lambdas) != len(mb.lambdas):
        return False
    if any(omega_cmp(x, y) != 0 for x, y in zip(ma.rows, mb.rows)):
        return False
    # match columns: exact equality when both sides are exact in one field,
    # otherwise nearest embedding within tol
    perm = _match_lambdas(ma.lambdas, mb.lambdas, tol, precision_bits)
    if perm is None:
        return False
    for row_a, row_b in zip(ma.entries, mb.entries):
        for j, c in enumerate(row_a):
            if not _values_close(c, row_b[perm[j]], tol, precision_bits):
                return False
    return True


def _both_exact(x, y) -> bool:
    exact = (int, Fraction, NumberFieldElement)
    return isinstance(x, exact) and isinstance(y, exact)


def _values_close(x, y, tol, precision_bits) -> bool:
    if _both_exact(x, y):
        if isinstance(x, NumberFieldElement) or isinstance(y, NumberFieldElement):
            try:
                return x == y or (x - y).is_zero()
            except Exception:
                return False
        return Fraction(x) == Fraction(y)
    with mp.workprec(precision_bits):
        zx = embed_value(x, precision_bits).to_mpc()
        zy = embed_value(y, precision_bits).to_mpc()
        scale = max(abs(zx), abs(zy), mpmath.mpf(1))
        return abs(zx - zy) <= tol * scale


def _match_lambdas(lams_a, lams_b, tol, precision_bits):
    n = len(lams_a)
    used = [False] * n
    perm = [None] * n
    for i, la in enumerate(lams_a):
        found = None
        for j, lb in enumerate(lams_b):
            if used[j]:
                continue
            if _values_close(la, lb, tol, precision_bits):
                found = j
                break
        if found is None:
            return None
        used[found] = True
        perm[i] = found
    return perm
