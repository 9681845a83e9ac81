"""
Exact symbolic core for falconerlab
Rational scalars, sparse multivariate polynomials, derivatives, substitution and determinants

Scalars are fractions.Fraction throughout. A polynomial is a map from exponent
vectors to nonzero Fractions over a sorted tuple of variable names; polynomials
over different universes are aligned by name before any operation.
"""

import re
from fractions import Fraction
from tokenize import TokenError
from types import MappingProxyType
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import sympy
from sympy.parsing.sympy_parser import (
    convert_xor,
    implicit_multiplication,
    parse_expr,
    rationalize,
    standard_transformations,
)
from sympy.polys.polyerrors import CoercionFailed, PolynomialError

from .errors import PolynomialParseError, ShapeError, UnknownVariableError

Rational = Fraction
Exponent = Tuple[int, ...]
Scalar = Union[int, Fraction]

# Exponents past this are a bug signal, not a workload.
MAX_EXPONENT = 2 ** 31

# Up to this size determinants use cofactor expansion, Bareiss above.
COFACTOR_LIMIT = 4


def as_rational(value) -> Fraction:
    """Coerce an int, Fraction or p/q string to an exact Fraction"""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not coefficients")
    if isinstance(value, (int, str)):
        return Fraction(value)
    if isinstance(value, sympy.Rational):
        return Fraction(int(value.p), int(value.q))
    raise TypeError(f"cannot use {type(value).__name__} as an exact coefficient")


def format_rational(value: Fraction) -> str:
    """Print a Fraction as 'n' or 'p/q'"""
    value = as_rational(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def _order_key(exponent: Exponent) -> Tuple[int, Exponent]:
    # graded lexicographic: total degree first, then exponents by variable order
    return (sum(exponent), exponent)


class MPoly:
    """Immutable sparse polynomial with exact rational coefficients"""

    __slots__ = ("_variables", "_terms", "_hash")

    def __init__(self, variables: Iterable[str] = (), terms: Optional[Mapping[Exponent, Scalar]] = None):
        given = tuple(variables)
        if len(set(given)) != len(given):
            raise ValueError(f"duplicate variable names in {list(given)}")
        ordered = tuple(sorted(given))
        positions = [given.index(name) for name in ordered]

        canonical: Dict[Exponent, Fraction] = {}
        for exponent, coeff in (terms or {}).items():
            if len(exponent) != len(given):
                raise ShapeError(f"exponent {exponent} does not match {len(given)} variables")
            for e in exponent:
                if e < 0 or e >= MAX_EXPONENT:
                    raise OverflowError(f"exponent {e} outside [0, 2^31)")
            value = as_rational(coeff)
            if value == 0:
                continue
            key = tuple(int(exponent[i]) for i in positions)
            canonical[key] = canonical.get(key, Fraction(0)) + value

        self._variables = ordered
        self._terms = {k: v for k, v in canonical.items() if v != 0}
        self._hash = None

    # Construction

    @classmethod
    def _raw(cls, variables: Tuple[str, ...], terms: Dict[Exponent, Fraction]) -> "MPoly":
        # trusted path: variables sorted, no zero coefficients
        poly = cls.__new__(cls)
        poly._variables = variables
        poly._terms = terms
        poly._hash = None
        return poly

    @classmethod
    def constant(cls, value: Scalar, variables: Iterable[str] = ()) -> "MPoly":
        names = tuple(sorted(variables))
        value = as_rational(value)
        if value == 0:
            return cls._raw(names, {})
        return cls._raw(names, {(0,) * len(names): value})

    @classmethod
    def var(cls, name: str, variables: Optional[Iterable[str]] = None) -> "MPoly":
        names = set(variables or ()) | {name}
        ordered = tuple(sorted(names))
        exponent = tuple(1 if v == name else 0 for v in ordered)
        return cls._raw(ordered, {exponent: Fraction(1)})

    @classmethod
    def zero(cls, variables: Iterable[str] = ()) -> "MPoly":
        return cls._raw(tuple(sorted(variables)), {})

    # Views

    @property
    def variables(self) -> Tuple[str, ...]:
        return self._variables

    @property
    def terms(self) -> Mapping[Exponent, Fraction]:
        return MappingProxyType(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(not any(exponent) for exponent in self._terms)

    def constant_value(self) -> Fraction:
        """Value of a constant polynomial; raises if the polynomial is not constant"""
        if not self.is_constant():
            raise ValueError(f"{self} is not constant")
        return next(iter(self._terms.values()), Fraction(0))

    def total_degree(self) -> int:
        return max((sum(e) for e in self._terms), default=0)

    def used_variables(self) -> Tuple[str, ...]:
        used = set()
        for exponent in self._terms:
            used.update(v for v, e in zip(self._variables, exponent) if e)
        return tuple(v for v in self._variables if v in used)

    def coefficient(self, monomial: Mapping[str, int]) -> Fraction:
        """Coefficient of the monomial given as {name: power}"""
        for name in monomial:
            if name not in self._variables and monomial[name]:
                return Fraction(0)
        exponent = tuple(monomial.get(v, 0) for v in self._variables)
        return self._terms.get(exponent, Fraction(0))

    def _sparse(self) -> frozenset:
        return frozenset(
            (tuple((v, e) for v, e in zip(self._variables, exponent) if e), coeff)
            for exponent, coeff in self._terms.items()
        )

    # Alignment

    def extend(self, variables: Iterable[str]) -> "MPoly":
        """Same polynomial over a universe enlarged by the given names"""
        universe = tuple(sorted(set(self._variables) | set(variables)))
        if universe == self._variables:
            return self
        index = [universe.index(v) for v in self._variables]
        terms = {}
        for exponent, coeff in self._terms.items():
            lifted = [0] * len(universe)
            for i, e in zip(index, exponent):
                lifted[i] = e
            terms[tuple(lifted)] = coeff
        return MPoly._raw(universe, terms)

    def _coerce(self, other) -> "MPoly":
        if isinstance(other, MPoly):
            return other
        return MPoly.constant(as_rational(other), self._variables)

    # Ring operations

    def __add__(self, other) -> "MPoly":
        return poly_arith(self, self._coerce(other), "add")

    __radd__ = __add__

    def __sub__(self, other) -> "MPoly":
        return poly_arith(self, self._coerce(other), "sub")

    def __rsub__(self, other) -> "MPoly":
        return poly_arith(self._coerce(other), self, "sub")

    def __mul__(self, other) -> "MPoly":
        return poly_arith(self, self._coerce(other), "mul")

    __rmul__ = __mul__

    def __neg__(self) -> "MPoly":
        return MPoly._raw(self._variables, {e: -c for e, c in self._terms.items()})

    def __pos__(self) -> "MPoly":
        return self

    def __pow__(self, n: int) -> "MPoly":
        if not isinstance(n, int) or n < 0:
            raise ValueError("polynomial powers must be non-negative integers")
        result = MPoly.constant(1, self._variables)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __truediv__(self, other) -> "MPoly":
        value = as_rational(other)
        if value == 0:
            raise ZeroDivisionError("division of a polynomial by zero")
        return MPoly._raw(self._variables, {e: c / value for e, c in self._terms.items()})

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            other = MPoly.constant(other)
        if not isinstance(other, MPoly):
            return NotImplemented
        return self._sparse() == other._sparse()

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self._sparse())
        return self._hash

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __repr__(self) -> str:
        return f"MPoly({to_string(self)!r})"

    def __str__(self) -> str:
        return to_string(self)


def _aligned(p: MPoly, q: MPoly) -> Tuple[MPoly, MPoly]:
    if p.variables == q.variables:
        return p, q
    universe = set(p.variables) | set(q.variables)
    return p.extend(universe), q.extend(universe)


def poly_arith(p: MPoly, q: MPoly, op: str) -> MPoly:
    """Exact p+q, p-q or p*q after aligning the two universes by name"""
    p, q = _aligned(p, q)
    variables = p.variables
    if op in ("add", "sub"):
        sign = 1 if op == "add" else -1
        out = dict(p.terms)
        for exponent, coeff in q.terms.items():
            value = out.get(exponent, Fraction(0)) + sign * coeff
            if value:
                out[exponent] = value
            else:
                out.pop(exponent, None)
        return MPoly._raw(variables, out)
    if op == "mul":
        out: Dict[Exponent, Fraction] = {}
        for ea, ca in p.terms.items():
            for eb, cb in q.terms.items():
                exponent = tuple(x + y for x, y in zip(ea, eb))
                out[exponent] = out.get(exponent, Fraction(0)) + ca * cb
        return MPoly._raw(variables, {e: c for e, c in out.items() if c})
    raise ValueError(f"unknown polynomial operation {op!r}")


def partial_derivative(p: MPoly, var: str) -> MPoly:
    """Formal partial derivative with respect to var"""
    if var not in p.variables:
        raise UnknownVariableError(var, p.variables)
    index = p.variables.index(var)
    out: Dict[Exponent, Fraction] = {}
    for exponent, coeff in p.terms.items():
        power = exponent[index]
        if power == 0:
            continue
        lowered = exponent[:index] + (power - 1,) + exponent[index + 1:]
        out[lowered] = out.get(lowered, Fraction(0)) + coeff * power
    return MPoly._raw(p.variables, {e: c for e, c in out.items() if c})


def substitute(p: MPoly, bindings: Mapping[str, Union[MPoly, Scalar]]) -> MPoly:
    """Compose p with the bindings; unbound variables pass through unchanged"""
    if not bindings:
        return p
    images = {}
    universe = set()
    for name in p.variables:
        if name in bindings:
            image = bindings[name]
            if not isinstance(image, MPoly):
                image = MPoly.constant(as_rational(image))
        else:
            image = MPoly.var(name)
        images[name] = image
        universe.update(image.variables)

    images = {name: image.extend(universe) for name, image in images.items()}
    powers: Dict[Tuple[str, int], MPoly] = {}

    def power(name: str, e: int) -> MPoly:
        key = (name, e)
        if key not in powers:
            powers[key] = images[name] ** e
        return powers[key]

    result = MPoly.zero(universe)
    for exponent, coeff in p.terms.items():
        term = MPoly.constant(coeff, universe)
        for name, e in zip(p.variables, exponent):
            if e:
                term = term * power(name, e)
        result = result + term
    return result


def rename(p: MPoly, mapping: Mapping[str, str]) -> MPoly:
    """Relabel variables; names missing from the mapping keep their name"""
    names = [mapping.get(v, v) for v in p.variables]
    if len(set(names)) != len(names):
        raise ValueError(f"renaming {dict(mapping)} merges variables of {list(p.variables)}")
    return MPoly(names, dict(p.terms))


def evaluate(p: MPoly, point: Mapping[str, Scalar]) -> Fraction:
    """Exact value of p at a point given by name; every used variable must be bound"""
    values = []
    for name in p.variables:
        if name in point:
            values.append(as_rational(point[name]))
        else:
            values.append(None)
    total = Fraction(0)
    for exponent, coeff in p.terms.items():
        term = coeff
        for name, value, e in zip(p.variables, values, exponent):
            if not e:
                continue
            if value is None:
                raise UnknownVariableError(name, point.keys())
            term *= value ** e
        total += term
    return total


# Determinants

Matrix = Sequence[Sequence[Union[MPoly, Scalar]]]


def _as_poly_matrix(m: Matrix) -> List[List[MPoly]]:
    n = len(m)
    for row in m:
        if len(row) != n:
            raise ShapeError(f"determinant needs a square matrix, got {n} rows with a row of length {len(row)}")
    universe = set()
    for row in m:
        for entry in row:
            if isinstance(entry, MPoly):
                universe.update(entry.variables)
    out = []
    for row in m:
        out.append([
            (entry if isinstance(entry, MPoly) else MPoly.constant(as_rational(entry))).extend(universe)
            for entry in row
        ])
    return out


def _cofactor(m: List[List[MPoly]]) -> MPoly:
    n = len(m)
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    total = MPoly.zero(m[0][0].variables)
    for j, entry in enumerate(m[0]):
        if entry.is_zero():
            continue
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        term = entry * _cofactor(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def _leading(p: MPoly) -> Tuple[Exponent, Fraction]:
    exponent = max(p.terms, key=_order_key)
    return exponent, p.terms[exponent]


def exact_divide(p: MPoly, q: MPoly) -> MPoly:
    """Quotient p/q when q divides p exactly; raises ArithmeticError otherwise"""
    if q.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    p, q = _aligned(p, q)
    lead_exp, lead_coeff = _leading(q)
    quotient: Dict[Exponent, Fraction] = {}
    remainder = p
    while not remainder.is_zero():
        r_exp, r_coeff = _leading(remainder)
        shift = tuple(a - b for a, b in zip(r_exp, lead_exp))
        if any(s < 0 for s in shift):
            raise ArithmeticError(f"{q} does not divide {p}")
        factor = r_coeff / lead_coeff
        quotient[shift] = quotient.get(shift, Fraction(0)) + factor
        remainder = remainder - MPoly._raw(p.variables, {shift: factor}) * q
    return MPoly._raw(p.variables, {e: c for e, c in quotient.items() if c})


def _bareiss(m: List[List[MPoly]]) -> MPoly:
    n = len(m)
    m = [list(row) for row in m]
    variables = m[0][0].variables
    sign = 1
    previous = MPoly.constant(1, variables)
    for k in range(n - 1):
        if m[k][k].is_zero():
            swap = next((i for i in range(k + 1, n) if not m[i][k].is_zero()), None)
            if swap is None:
                return MPoly.zero(variables)
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = exact_divide(m[i][j] * m[k][k] - m[i][k] * m[k][j], previous)
        previous = m[k][k]
    det = m[n - 1][n - 1]
    return det if sign > 0 else -det


def determinant(m: Matrix) -> MPoly:
    """Exact determinant: cofactor expansion up to 4x4, fraction-free Bareiss above"""
    if len(m) == 0:
        return MPoly.constant(1)
    rows = _as_poly_matrix(m)
    if len(rows) <= COFACTOR_LIMIT:
        return _cofactor(rows)
    return _bareiss(rows)


def solve_linear(matrix: Sequence[Sequence[Scalar]], rhs: Sequence[Scalar]) -> Optional[List[Fraction]]:
    """Unique solution of matrix * x = rhs over the rationals, or None if singular"""
    n = len(matrix)
    if len(rhs) != n or any(len(row) != n for row in matrix):
        raise ShapeError("solve_linear needs an n x n matrix and an n-vector")
    rows = [[as_rational(v) for v in row] + [as_rational(b)] for row, b in zip(matrix, rhs)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if rows[r][col] != 0), None)
        if pivot is None:
            return None
        rows[col], rows[pivot] = rows[pivot], rows[col]
        lead = rows[col][col]
        rows[col] = [v / lead for v in rows[col]]
        for r in range(n):
            if r != col and rows[r][col] != 0:
                factor = rows[r][col]
                rows[r] = [a - factor * b for a, b in zip(rows[r], rows[col])]
    return [row[n] for row in rows]


# Text form

def _format_monomial(variables: Sequence[str], exponent: Exponent) -> str:
    parts = []
    for name, e in zip(variables, exponent):
        if e == 1:
            parts.append(name)
        elif e > 1:
            parts.append(f"{name}^{e}")
    return "*".join(parts)


def to_string(p: MPoly) -> str:
    """Canonical text: graded-lex descending, e.g. '2*x^2*y - 3/2*z + 1'"""
    if p.is_zero():
        return "0"
    pieces = []
    for exponent in sorted(p.terms, key=_order_key, reverse=True):
        coeff = p.terms[exponent]
        monomial = _format_monomial(p.variables, exponent)
        magnitude = abs(coeff)
        if not monomial:
            body = format_rational(magnitude)
        elif magnitude == 1:
            body = monomial
        else:
            body = f"{format_rational(magnitude)}*{monomial}"
        if not pieces:
            pieces.append(body if coeff > 0 else f"-{body}")
        else:
            pieces.append(f"+ {body}" if coeff > 0 else f"- {body}")
    return " ".join(pieces)


_ALLOWED = re.compile(r"[\sA-Za-z_0-9+\-*/^().]*")
_IDENTIFIER = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_TRANSFORMATIONS = standard_transformations + (implicit_multiplication, convert_xor, rationalize)


def parse_poly(text: str, variables: Iterable[str] = ()) -> MPoly:
    """Read a polynomial with rational coefficients from text

    Every identifier becomes a variable, including names sympy would otherwise
    treat as constants (E, I, S, N). The result's universe is the identifiers in
    the text plus any extra names passed in `variables`.
    """
    if not text or not text.strip():
        raise PolynomialParseError(text, "empty input")
    if not _ALLOWED.fullmatch(text):
        bad = sorted(set(ch for ch in text if not _ALLOWED.fullmatch(ch)))
        raise PolynomialParseError(text, f"unexpected character(s) {''.join(bad)!r}")

    names = sorted(set(_IDENTIFIER.findall(text)) | set(variables))
    symbols = {name: sympy.Symbol(name) for name in names}
    try:
        expr = parse_expr(text, local_dict=dict(symbols), transformations=_TRANSFORMATIONS)
        expr = sympy.expand(expr)
    except (SyntaxError, TokenError, TypeError, ValueError, AttributeError, sympy.SympifyError) as exc:
        raise PolynomialParseError(text, str(exc) or type(exc).__name__) from exc

    gens = [symbols[name] for name in names]
    if not isinstance(expr, sympy.Expr) or not expr.free_symbols <= set(gens):
        raise PolynomialParseError(text, "expression is not a polynomial in its identifiers")
    if not gens:
        if not expr.is_Rational:
            raise PolynomialParseError(text, "constant is not rational")
        return MPoly.constant(as_rational(expr))
    if not expr.is_polynomial(*gens):
        raise PolynomialParseError(text, "expression is not a polynomial (division by a variable or a function call?)")
    try:
        poly = sympy.Poly(expr, *gens, domain=sympy.QQ)
    except (PolynomialError, CoercionFailed) as exc:
        raise PolynomialParseError(text, f"coefficients must be rational ({exc})") from exc

    terms = {}
    for monom, coeff in poly.terms():
        terms[tuple(int(e) for e in monom)] = as_rational(sympy.Rational(coeff))
    return MPoly(names, terms)
