"""
Reduction builder for falconerlab
Builds Psi, the lifting maps F1/F2, the bad set S and the fiber structure for Falconer-type
quadratics, and checks the Phong-Stein rotational curvature determinant symbolically
"""

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

from .errors import ClassificationError, ShapeError, ValidationError
from .quadratic_classifier import (
    LemmaCase,
    Quadratic3,
    VARIABLES,
    classify,
)
from .symbolic_core import (
    MPoly,
    Scalar,
    as_rational,
    determinant,
    evaluate,
    format_rational,
    parse_poly,
    partial_derivative,
    rename,
    substitute,
    to_string,
)

U_SLOTS = ("u1", "u2", "u3")
V_SLOTS = ("v1", "v2", "v3")
PRIMED = ("xp", "yp", "zp")

BILINEAR_PSI = "u1*v1 - u2*v2 + u3 - v3"
DIFFERENCE_SQUARE_PSI = "(u1 - v1)^2 - (u2 - v2)^2 + u3 - v3"


def _var(name: str) -> MPoly:
    return MPoly.var(name)


@dataclass(frozen=True)
class Line:
    """p*y + q*z = r0 in the (y, z)-plane"""

    p: Fraction
    q: Fraction
    r0: Fraction

    def __post_init__(self):
        for name in ("p", "q", "r0"):
            object.__setattr__(self, name, as_rational(getattr(self, name)))
        if self.p == 0 and self.q == 0:
            raise ValidationError("a line needs (p, q) != (0, 0)")

    def contains(self, y: Scalar, z: Scalar) -> bool:
        return self.p * as_rational(y) + self.q * as_rational(z) == self.r0

    def __str__(self) -> str:
        lhs = to_string(self.p * _var("y") + self.q * _var("z"))
        return f"{lhs} = {format_rational(self.r0)}"

    def to_dict(self) -> dict:
        return {
            "p": format_rational(self.p),
            "q": format_rational(self.q),
            "r0": format_rational(self.r0),
            "equation": str(self),
        }


@dataclass(frozen=True)
class SplitSpec:
    """Which of six symbols occupy the slots (u1, u2, u3 | v1, v2, v3)"""

    u: Tuple[str, str, str] = U_SLOTS
    v: Tuple[str, str, str] = V_SLOTS

    def __post_init__(self):
        object.__setattr__(self, "u", tuple(self.u))
        object.__setattr__(self, "v", tuple(self.v))
        if len(self.u) != 3 or len(self.v) != 3:
            raise ShapeError(f"a split needs three u and three v symbols, got {list(self.u)} | {list(self.v)}")
        if len(set(self.u + self.v)) != 6:
            raise ValidationError(f"split symbols must be six distinct names, got {list(self.u + self.v)}")

    @classmethod
    def lifting(cls) -> "SplitSpec":
        """(u, v) = (x, y', z, y, x', z'), the split under which Psi = f - f'"""
        return cls(u=("x", "yp", "z"), v=("y", "xp", "zp"))

    @property
    def symbols(self) -> Tuple[str, ...]:
        return self.u + self.v

    def to_dict(self) -> dict:
        return {"u": list(self.u), "v": list(self.v)}


class BadSetBranch(str, Enum):
    REMOVE_LINE = "RemoveLine"
    NO_REMOVAL = "NoRemoval"


@dataclass(frozen=True)
class BadSetCertificate:
    """Evidence for the bc = 2ag branch: the degenerate system forces ib = ja and 4eg = c^2"""

    leading: Fraction
    slope: Fraction
    offset: Fraction
    system_holds: bool
    ib_equals_ja: bool
    eg_matches_c_squared: bool

    @property
    def consistent(self) -> bool:
        return not self.system_holds or (self.ib_equals_ja and self.eg_matches_c_squared)

    def to_dict(self) -> dict:
        return {
            "leading": format_rational(self.leading),
            "slope": format_rational(self.slope),
            "offset": format_rational(self.offset),
            "system_holds": self.system_holds,
            "ib_equals_ja": self.ib_equals_ja,
            "eg_matches_c_squared": self.eg_matches_c_squared,
        }


@dataclass(frozen=True)
class BadSet:
    branch: BadSetBranch
    line: Optional[Line] = None
    certificate: Optional[BadSetCertificate] = None

    def to_dict(self) -> dict:
        return {
            "branch": self.branch.value,
            "line": self.line.to_dict() if self.line else None,
            "certificate": self.certificate.to_dict() if self.certificate else None,
        }


@dataclass(frozen=True)
class Reduction:
    shape: Quadratic3
    case: str
    psi: MPoly
    f1: Tuple[MPoly, MPoly, MPoly]
    f2: Tuple[MPoly, MPoly, MPoly]
    f1_inputs: Tuple[str, str, str]
    f2_inputs: Tuple[str, str, str]
    ma_det: MPoly
    permutation: Tuple[int, int, int] = (0, 1, 2)
    bad_set: Optional[BadSet] = None


def antisymmetrized(f: Quadratic3) -> MPoly:
    """f(x, y, z) - f(x', y', z') over (x, y, z, xp, yp, zp)"""
    return f.to_poly(VARIABLES) - f.to_poly(PRIMED)


def split_psi(f: Quadratic3, split: SplitSpec) -> MPoly:
    """f - f' rewritten in the slot symbols u1..v3 according to the split"""
    lifted = set(VARIABLES + PRIMED)
    if set(split.symbols) != lifted:
        raise ShapeError(f"split must permute {sorted(lifted)}, got {list(split.symbols)}")
    mapping = {name: slot for name, slot in zip(split.symbols, U_SLOTS + V_SLOTS)}
    return rename(antisymmetrized(f).extend(lifted), mapping)


def monge_ampere(psi: MPoly, split: SplitSpec = SplitSpec()) -> MPoly:
    """Determinant of the bordered matrix (0, grad_u Psi; -grad_v Psi, mixed Hessian)"""
    outside = [name for name in psi.used_variables() if name not in split.symbols]
    if outside:
        raise ShapeError(f"psi uses {outside}, which are not among the slot symbols {list(split.symbols)}")
    psi = psi.extend(split.symbols)
    grad_u = [partial_derivative(psi, name) for name in split.u]
    grad_v = [partial_derivative(psi, name) for name in split.v]
    matrix = [[MPoly.zero()] + grad_u]
    for name, dv in zip(split.v, grad_v):
        matrix.append([-dv] + [partial_derivative(dv, u) for u in split.u])
    return determinant(matrix)


def _lifting_bindings(reduction: Reduction) -> dict:
    bindings = dict(zip(U_SLOTS, reduction.f1))
    bindings.update(zip(V_SLOTS, reduction.f2))
    return bindings


def verify_identity(reduction: Reduction) -> bool:
    """Psi(F1, F2) - (f - f') is exactly the zero polynomial"""
    composed = substitute(reduction.psi, _lifting_bindings(reduction))
    return (composed - antisymmetrized(reduction.shape)).is_zero()


def _two_cross_terms_maps(f: Quadratic3):
    x, y, z = (_var(n) for n in VARIABLES)
    xp, yp, zp = (_var(n) for n in PRIMED)
    f1 = (x, yp, f.b * x * z + f.r("x") + f.t("z") - f.s("yp"))
    f2 = (f.a * y, f.a * xp, f.b * xp * zp + f.r("xp") + f.t("zp") - f.s("y"))
    return f1, f2, ("x", "yp", "z"), ("xp", "y", "zp")


def _negated_tail(f: Quadratic3, x: MPoly, y: MPoly, z: MPoly) -> MPoly:
    # d x^2 - e y^2 - c y z - g z^2 + h x - i y - j z
    return (f.d * x * x - f.e * y * y - f.c * y * z - f.g * z * z
            + f.h * x - f.i * y - f.j * z)


def _all_cross_terms_maps(f: Quadratic3):
    x, y, z = (_var(n) for n in VARIABLES)
    xp, yp, zp = (_var(n) for n in PRIMED)
    f1 = (x, f.a * yp + f.b * zp, _negated_tail(f, x, yp, zp))
    f2 = (f.a * y + f.b * z, xp, _negated_tail(f, xp, y, z))
    return f1, f2, ("x", "yp", "zp"), ("xp", "y", "z")


def build_reduction(f: Quadratic3, c) -> Reduction:
    """Reduction data for f already in lemma shape (classification c, permutation applied)"""
    if not c.is_falconer_type:
        raise ClassificationError(f"no reduction for verdict {c.verdict.value}")
    if c.case is LemmaCase.TWO_CROSS_TERMS:
        if f.a == 0 or f.c != 0:
            raise ClassificationError("f is not in the shape axy + bxz + r(x) + s(y) + t(z) with a != 0; permute first")
        f1, f2, in1, in2 = _two_cross_terms_maps(f)
        bad = None
    else:
        if f.a == 0 or f.b == 0 or f.c == 0:
            raise ClassificationError("all three cross terms must be nonzero for this case")
        f1, f2, in1, in2 = _all_cross_terms_maps(f)
        bad = bad_set(f)

    psi = parse_poly(BILINEAR_PSI)
    return Reduction(
        shape=f,
        case=c.case.value,
        psi=psi,
        f1=f1,
        f2=f2,
        f1_inputs=in1,
        f2_inputs=in2,
        ma_det=monge_ampere(psi),
        permutation=c.permutation or (0, 1, 2),
        bad_set=bad,
    )


def reduce(f: Quadratic3) -> Reduction:
    """Classify, permute into lemma shape and build"""
    c = classify(f)
    if not c.is_falconer_type:
        raise ClassificationError(f"{f} is {c.verdict.value}, not Falconer type")
    return build_reduction(f.permuted(c.permutation), c)


def corollary_reduction(case: str) -> Reduction:
    """Reductions for (A-B)^2+C, AB+C and A(B+C) with their own Psi"""
    x, y, z = (_var(n) for n in VARIABLES)
    xp, yp, zp = (_var(n) for n in PRIMED)
    if case == "difference-square":
        psi = parse_poly(DIFFERENCE_SQUARE_PSI)
        f1, f2 = (x, yp, z), (y, xp, zp)
    elif case == "product-sum":
        psi = parse_poly("u1*v1 + u3 - u2*v2 - v3")
        f1, f2 = (x, yp, z), (y, xp, zp)
    elif case == "product-of-sum":
        psi = parse_poly(BILINEAR_PSI)
        f1, f2 = (x, yp, x * z), (y, xp, xp * zp)
    else:
        raise ValidationError(
            f"unknown corollary case {case!r}; choose difference-square, product-sum or product-of-sum"
        )
    return Reduction(
        shape=Quadratic3.preset(case),
        case=case,
        psi=psi,
        f1=f1,
        f2=f2,
        f1_inputs=("x", "yp", "z"),
        f2_inputs=("xp", "y", "zp"),
        ma_det=monge_ampere(psi),
    )


def square_system_certificate(f: Quadratic3) -> BadSetCertificate:
    """The degenerate system of the bc = 2ag branch evaluated on f as labelled"""
    a, b, cc, e, g, i, j = f.a, f.b, f.c, f.e, f.g, f.i, f.j
    leading = b * b * e - a * b * cc + a * a * g
    slope = b * cc - 2 * a * g
    offset = (i * b - j * a) * b
    return BadSetCertificate(
        leading=leading,
        slope=slope,
        offset=offset,
        system_holds=slope == 0 and leading == 0 and offset == 0,
        ib_equals_ja=i * b == j * a,
        eg_matches_c_squared=4 * e * g == cc * cc,
    )


def bad_set(f: Quadratic3) -> BadSet:
    """The line S removed from B x C, or the certificate that nothing needs removing"""
    c = classify(f)
    if c.case is not LemmaCase.ALL_CROSS_TERMS:
        raise ClassificationError(f"bad set is defined for AllCrossTerms, got {c.verdict.value}/{c.case}")
    a, b, i, j = f.a, f.b, f.i, f.j
    certificate = square_system_certificate(f)
    if certificate.slope != 0:
        line = Line(p=a, q=b, r0=-(i * b * b - j * a * b) / certificate.slope)
        return BadSet(BadSetBranch.REMOVE_LINE, line=line)
    if certificate.system_holds:
        # F1 has infinite fibers here; the permutation chosen by classify never lands in this case
        raise ClassificationError(
            f"{f} satisfies ib = ja and 4eg = c^2 with bc = 2ag; permute with classify(f).permutation first"
        )
    return BadSet(BadSetBranch.NO_REMOVAL, certificate=certificate)


def fiber_coefficients(f: Quadratic3, point: Sequence[Scalar]) -> Tuple[Fraction, Fraction, Fraction]:
    """Coefficients of the quadratic in y' whose roots are the F1-preimages of (u, v, w)"""
    if f.b == 0:
        raise ClassificationError("fiber analysis needs b != 0 (z' is solved from v = a y' + b z')")
    u, v, w = (as_rational(t) for t in point)
    a, b, c, d, e, g, h, i, j = f.a, f.b, f.c, f.d, f.e, f.g, f.h, f.i, f.j
    leading = b * b * e - a * b * c + a * a * g
    linear = b * c * v - 2 * a * g * v + i * b * b - j * a * b
    constant = b * b * w - b * b * d * u * u + g * v * v - b * b * h * u + b * j * v
    return leading, linear, constant


def _rational_sqrt(q: Fraction) -> Optional[Fraction]:
    if q < 0:
        return None
    num, den = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if num * num == q.numerator and den * den == q.denominator:
        return Fraction(num, den)
    return None


def fiber_solutions(f: Quadratic3, point: Sequence[Scalar]) -> Optional[List[Fraction]]:
    """Rational roots y' at (u, v, w), sorted; None when every y' solves"""
    leading, linear, constant = fiber_coefficients(f, point)
    if leading == 0:
        if linear == 0:
            return None if constant == 0 else []
        return [-constant / linear]
    root = _rational_sqrt(linear * linear - 4 * leading * constant)
    if root is None:
        return []
    return sorted({(-linear + root) / (2 * leading), (-linear - root) / (2 * leading)})


def fiber_count(f: Quadratic3, point: Sequence[Scalar]) -> Union[int, float]:
    """Number of rational y' solutions at (u, v, w): 0, 1, 2 or math.inf"""
    solutions = fiber_solutions(f, point)
    return math.inf if solutions is None else len(solutions)


def lift_point(f: Quadratic3, x: Scalar, y_prime: Scalar, z_prime: Scalar) -> Tuple[Fraction, Fraction, Fraction]:
    """F1(x, y', z') for the AllCrossTerms maps"""
    f1, _, inputs, _ = _all_cross_terms_maps(f)
    point = dict(zip(inputs, (x, y_prime, z_prime)))
    return tuple(evaluate(component, point) for component in f1)


def reduction_report(reduction: Reduction) -> dict:
    return {
        "shape": str(reduction.shape),
        "case": reduction.case,
        "permutation": list(reduction.permutation),
        "psi": to_string(reduction.psi),
        "f1": {"inputs": list(reduction.f1_inputs), "components": [to_string(p) for p in reduction.f1]},
        "f2": {"inputs": list(reduction.f2_inputs), "components": [to_string(p) for p in reduction.f2]},
        "bad_set": reduction.bad_set.to_dict() if reduction.bad_set else None,
        "determinant": to_string(reduction.ma_det),
        "identity_holds": verify_identity(reduction),
    }
