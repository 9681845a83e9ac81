"""
Quadratic classifier for falconerlab
Decides whether a trivariate quadratic depends on every variable and whether it has the
degenerate form g(h(x)+k(y)+l(z)), producing witnesses and the lemma case for reductions
"""

from dataclasses import dataclass, fields
from enum import Enum
from fractions import Fraction
from typing import Dict, Iterable, Optional, Tuple

from .errors import ClassificationError, ValidationError
from .symbolic_core import (
    MPoly,
    Scalar,
    as_rational,
    format_rational,
    parse_poly,
    to_string,
)

VARIABLES = ("x", "y", "z")

# coefficient name -> monomial it multiplies
MONOMIALS: Dict[str, Dict[str, int]] = {
    "a": {"x": 1, "y": 1},
    "b": {"x": 1, "z": 1},
    "c": {"y": 1, "z": 1},
    "d": {"x": 2},
    "e": {"y": 2},
    "g": {"z": 2},
    "h": {"x": 1},
    "i": {"y": 1},
    "j": {"z": 1},
    "k0": {},
}

# cross-term coefficient for each unordered pair of variable indices
CROSS_PAIRS = {(0, 1): "a", (0, 2): "b", (1, 2): "c"}

PRESETS = {
    "difference-square": "(x - y)^2 + z",
    "product-sum": "x*y + z",
    "product-of-sum": "x*(y + z)",
    "square-of-sum": "(x + y + z)^2",
    "sum-of-squares": "x^2 + y^2 + z^2",
    "sum-plus-product": "x + y*z",
    "sum-plus-difference-square": "x + (y - z)^2",
}


@dataclass(frozen=True)
class Quadratic3:
    """f = axy + bxz + cyz + dx^2 + ey^2 + gz^2 + hx + iy + jz + k0"""

    a: Fraction = Fraction(0)
    b: Fraction = Fraction(0)
    c: Fraction = Fraction(0)
    d: Fraction = Fraction(0)
    e: Fraction = Fraction(0)
    g: Fraction = Fraction(0)
    h: Fraction = Fraction(0)
    i: Fraction = Fraction(0)
    j: Fraction = Fraction(0)
    k0: Fraction = Fraction(0)

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, as_rational(getattr(self, f.name)))

    @classmethod
    def from_poly(cls, poly: MPoly, names: Iterable[str] = VARIABLES) -> "Quadratic3":
        """Read coefficients of a polynomial in the given three variable names"""
        names = tuple(names)
        if len(names) != 3 or len(set(names)) != 3:
            raise ValidationError(f"need three distinct variable names, got {list(names)}")
        extra = [v for v in poly.used_variables() if v not in names]
        if extra:
            raise ValidationError(f"polynomial uses {extra} outside the variables {list(names)}")
        if poly.total_degree() > 2:
            raise ValidationError(f"degree {poly.total_degree()} polynomial is not a quadratic")
        to_name = dict(zip(VARIABLES, names))
        values = {}
        for key, monomial in MONOMIALS.items():
            values[key] = poly.coefficient({to_name[v]: power for v, power in monomial.items()})
        return cls(**values)

    @classmethod
    def parse(cls, text: str, names: Iterable[str] = VARIABLES) -> "Quadratic3":
        return cls.from_poly(parse_poly(text), names)

    @classmethod
    def preset(cls, name: str) -> "Quadratic3":
        if name not in PRESETS:
            raise ValidationError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
        return cls.parse(PRESETS[name])

    def coefficients(self) -> Dict[str, Fraction]:
        return {key: getattr(self, key) for key in MONOMIALS}

    def to_poly(self, names: Iterable[str] = VARIABLES) -> MPoly:
        names = tuple(names)
        mapping = dict(zip(VARIABLES, names))
        poly = MPoly.zero(names)
        for key, monomial in MONOMIALS.items():
            coeff = getattr(self, key)
            if not coeff:
                continue
            term = MPoly.constant(coeff, names)
            for var, power in monomial.items():
                term = term * MPoly.var(mapping[var], names) ** power
            poly = poly + term
        return poly

    # r(x), s(y), t(z) of the lemma shape
    def r(self, name: str = "x") -> MPoly:
        return self.d * MPoly.var(name) ** 2 + self.h * MPoly.var(name)

    def s(self, name: str = "y") -> MPoly:
        return self.e * MPoly.var(name) ** 2 + self.i * MPoly.var(name)

    def t(self, name: str = "z") -> MPoly:
        return self.g * MPoly.var(name) ** 2 + self.j * MPoly.var(name)

    def is_constant(self) -> bool:
        return all(getattr(self, key) == 0 for key in MONOMIALS if key != "k0")

    def cross(self, p: int, q: int) -> Fraction:
        """Coefficient of the cross term between variables p != q"""
        return getattr(self, CROSS_PAIRS[(min(p, q), max(p, q))])

    def squares(self) -> Tuple[Fraction, Fraction, Fraction]:
        return self.d, self.e, self.g

    def linears(self) -> Tuple[Fraction, Fraction, Fraction]:
        return self.h, self.i, self.j

    def permuted(self, perm: Tuple[int, int, int]) -> "Quadratic3":
        """Relabel so that new variable k is old variable perm[k]"""
        if sorted(perm) != [0, 1, 2]:
            raise ValidationError(f"{perm} is not a permutation of (0, 1, 2)")
        sq, lin = self.squares(), self.linears()
        return Quadratic3(
            a=self.cross(perm[0], perm[1]),
            b=self.cross(perm[0], perm[2]),
            c=self.cross(perm[1], perm[2]),
            d=sq[perm[0]], e=sq[perm[1]], g=sq[perm[2]],
            h=lin[perm[0]], i=lin[perm[1]], j=lin[perm[2]],
            k0=self.k0,
        )

    def scaled(self, factor: Scalar) -> "Quadratic3":
        factor = as_rational(factor)
        return Quadratic3(**{key: value * factor for key, value in self.coefficients().items()})

    def reduce_mod(self, p: int) -> Dict[str, int]:
        """Coefficients as residues mod p"""
        out = {}
        for key, value in self.coefficients().items():
            if value.denominator % p == 0:
                raise ValidationError(f"coefficient {key}={format_rational(value)} has a denominator divisible by {p}")
            out[key] = value.numerator * pow(value.denominator, -1, p) % p
        return out

    def __str__(self) -> str:
        return to_string(self.to_poly())


class Verdict(str, Enum):
    MISSING_VARIABLE = "MissingVariable"
    DEGENERATE_ADDITIVE = "DegenerateAdditive"
    DEGENERATE_SQUARE = "DegenerateSquare"
    FALCONER_TYPE = "FalconerType"


class LemmaCase(str, Enum):
    TWO_CROSS_TERMS = "TwoCrossTerms"
    ALL_CROSS_TERMS = "AllCrossTerms"


@dataclass(frozen=True)
class DegenerateWitness:
    """g(w) = alpha*w^2 + beta*w + gamma with w = h1*x + k1*y + l1*z, or the additive marker"""

    outer: Optional[Tuple[Fraction, Fraction, Fraction]] = None
    inner: Optional[Tuple[Fraction, Fraction, Fraction]] = None
    additive: bool = False

    @classmethod
    def additive_marker(cls) -> "DegenerateWitness":
        return cls(additive=True)

    def as_quadratic(self) -> Quadratic3:
        """Coefficients of alpha*w^2 + beta*w + gamma, expanded with Fraction arithmetic"""
        if self.additive:
            raise ValueError("the additive marker has no single expansion")
        alpha, beta, gamma = self.outer
        h1, k1, l1 = self.inner
        return Quadratic3(
            a=2 * alpha * h1 * k1, b=2 * alpha * h1 * l1, c=2 * alpha * k1 * l1,
            d=alpha * h1 * h1, e=alpha * k1 * k1, g=alpha * l1 * l1,
            h=beta * h1, i=beta * k1, j=beta * l1,
            k0=gamma,
        )

    def expand(self) -> MPoly:
        if self.additive:
            raise ValueError("the additive marker has no single expansion")
        alpha, beta, gamma = self.outer
        h1, k1, l1 = self.inner
        w = h1 * MPoly.var("x", VARIABLES) + k1 * MPoly.var("y", VARIABLES) + l1 * MPoly.var("z", VARIABLES)
        return alpha * w ** 2 + beta * w + gamma

    def to_dict(self) -> dict:
        if self.additive:
            return {"additive": True}
        return {
            "additive": False,
            "outer": {k: format_rational(v) for k, v in zip(("alpha", "beta", "gamma"), self.outer)},
            "inner": {k: format_rational(v) for k, v in zip(("h1", "k1", "l1"), self.inner)},
            "expansion": to_string(self.expand()),
        }


@dataclass(frozen=True)
class Classification:
    verdict: Verdict
    missing: Tuple[str, ...] = ()
    witness: Optional[DegenerateWitness] = None
    case: Optional[LemmaCase] = None
    permutation: Optional[Tuple[int, int, int]] = None

    @property
    def is_degenerate(self) -> bool:
        return self.verdict in (Verdict.DEGENERATE_ADDITIVE, Verdict.DEGENERATE_SQUARE)

    @property
    def is_falconer_type(self) -> bool:
        return self.verdict is Verdict.FALCONER_TYPE


# coefficients whose monomials contain each variable
_DEPENDS_ON = {"x": ("a", "b", "d", "h"), "y": ("a", "c", "e", "i"), "z": ("b", "c", "g", "j")}


def depends_on_all(f: Quadratic3) -> Tuple[bool, bool, bool]:
    """Per variable, whether its formal partial derivative is nonzero"""
    return tuple(any(getattr(f, key) != 0 for key in _DEPENDS_ON[v]) for v in VARIABLES)


def _square_conditions(f: Quadratic3) -> bool:
    a, b, c, d, e, g, h, i, j = f.a, f.b, f.c, f.d, f.e, f.g, f.h, f.i, f.j
    return (
        a != 0 and b != 0 and c != 0
        and 4 * d * e == a * a
        and 4 * d * g == b * b
        and 4 * e * g == c * c
        and 2 * d * c == a * b
        and h * c == j * a == i * b
    )


def _two_term_permutation(f: Quadratic3) -> Tuple[int, int, int]:
    # put a nonzero cross term in the xy slot and the zero one in yz
    active = [pair for pair, key in CROSS_PAIRS.items() if getattr(f, key) != 0]
    if len(active) == 1:
        p, q = active[0]
        r = 3 - p - q
        return (p, q, r)
    shared = (set(active[0]) & set(active[1])).pop()
    others = sorted({0, 1, 2} - {shared})
    return (shared, others[0], others[1])


def role_breaks_square_system(f: Quadratic3, role: int) -> bool:
    """With variable `role` playing x: ib != ja or 4eg != c^2 after relabelling"""
    y, z = sorted({0, 1, 2} - {role})
    sq, lin = f.squares(), f.linears()
    return (lin[y] * f.cross(role, z) != lin[z] * f.cross(role, y)
            or 4 * sq[y] * sq[z] != f.cross(y, z) ** 2)


def _all_terms_permutation(f: Quadratic3) -> Tuple[int, int, int]:
    # x is the first variable for which ib = ja and 4eg = c^2 do not both hold;
    # when none breaks them, 2dc = -ab and bc != 2ag keeps the line branch
    for role in range(3):
        if role_breaks_square_system(f, role):
            y, z = sorted({0, 1, 2} - {role})
            return (role, y, z)
    return (0, 1, 2)


def classify(f: Quadratic3) -> Classification:
    """Verdict for f: missing variable, degenerate (with witness) or Falconer type (with lemma case)"""
    if f.is_constant():
        raise ClassificationError("cannot classify a constant polynomial")

    flags = depends_on_all(f)
    if not all(flags):
        missing = tuple(v for v, used in zip(VARIABLES, flags) if not used)
        return Classification(Verdict.MISSING_VARIABLE, missing=missing)

    if f.a == 0 and f.b == 0 and f.c == 0:
        return Classification(Verdict.DEGENERATE_ADDITIVE, witness=DegenerateWitness.additive_marker())

    if _square_conditions(f):
        witness = DegenerateWitness(
            outer=(f.d, f.h, f.k0),
            inner=(Fraction(1), f.a / (2 * f.d), f.b / (2 * f.d)),
        )
        return Classification(Verdict.DEGENERATE_SQUARE, witness=witness)

    if f.a != 0 and f.b != 0 and f.c != 0:
        return Classification(
            Verdict.FALCONER_TYPE,
            case=LemmaCase.ALL_CROSS_TERMS,
            permutation=_all_terms_permutation(f),
        )
    return Classification(
        Verdict.FALCONER_TYPE,
        case=LemmaCase.TWO_CROSS_TERMS,
        permutation=_two_term_permutation(f),
    )


def verify_witness(f: Quadratic3, w: DegenerateWitness) -> bool:
    """Exact check that the witness re-expands to f"""
    if w.additive:
        return f.a == 0 and f.b == 0 and f.c == 0
    return w.as_quadratic() == f


def oracle_is_degenerate(f: Quadratic3) -> bool:
    """Independent direct solve for g(h1*x+k1*y+l1*z) with quadratic g, or additive f"""
    if f.a == 0 and f.b == 0 and f.c == 0:
        return True
    if f.a == 0 or f.b == 0 or f.c == 0:
        return False
    # h1 = 1: the x^2 slot gives alpha, the xy and xz slots give k1 and l1
    alpha = f.d
    if alpha == 0:
        return False
    k1 = f.a / (2 * alpha)
    l1 = f.b / (2 * alpha)
    if alpha * k1 * k1 != f.e:
        return False
    candidate = DegenerateWitness(outer=(alpha, f.h, f.k0), inner=(Fraction(1), k1, l1))
    return candidate.as_quadratic() == f


def classification_report(f: Quadratic3, text: Optional[str] = None) -> dict:
    result = classify(f)
    report = {
        "input": text if text is not None else str(f),
        "canonical": str(f),
        "coefficients": {k: format_rational(v) for k, v in f.coefficients().items()},
        "depends_on": dict(zip(VARIABLES, depends_on_all(f))),
        "verdict": result.verdict.value,
        "missing": list(result.missing),
        "witness": result.witness.to_dict() if result.witness else None,
        "case": result.case.value if result.case else None,
        "permutation": list(result.permutation) if result.permutation else None,
    }
    if result.permutation:
        report["lemma_shape"] = str(f.permuted(result.permutation))
    return report
