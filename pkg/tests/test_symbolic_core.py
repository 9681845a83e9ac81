# tests/test_symbolic_core.py
from fractions import Fraction
from itertools import permutations, product

import numpy as np
import pytest
import sympy

from src.errors import PolynomialParseError, ShapeError, UnknownVariableError
from src.symbolic_core import (
    MPoly,
    determinant,
    evaluate,
    exact_divide,
    format_rational,
    parse_poly,
    partial_derivative,
    poly_arith,
    rename,
    solve_linear,
    substitute,
    to_string,
)

# ---------------------------------------------------------
# Utility helpers
# ---------------------------------------------------------
def random_poly(rng, names=("x", "y", "z"), terms=4, degree=2):
    out = MPoly.zero(names)
    for _ in range(terms):
        exponent = tuple(int(e) for e in rng.integers(0, degree + 1, size=len(names)))
        coeff = Fraction(int(rng.integers(-5, 6)), int(rng.integers(1, 4)))
        out = out + MPoly(names, {exponent: coeff})
    return out


def to_sympy(p):
    symbols = {name: sympy.Symbol(name) for name in p.variables}
    expr = sympy.Integer(0)
    for exponent, coeff in p.terms.items():
        term = sympy.Rational(coeff.numerator, coeff.denominator)
        for name, e in zip(p.variables, exponent):
            term *= symbols[name] ** e
        expr += term
    return sympy.expand(expr)


# ---------------------------------------------------------
# Parsing and text form
# ---------------------------------------------------------
def test_parse_implicit_multiplication_and_rationals():
    p = parse_poly("2x*y - 3/2 z^2 + 1")
    x, y, z = (MPoly.var(n) for n in "xyz")
    assert p == 2 * x * y - Fraction(3, 2) * z ** 2 + 1
    assert to_string(p) == "2*x*y - 3/2*z^2 + 1"


def test_parse_decimals_are_exact():
    assert parse_poly("0.5*x + 0.25") == Fraction(1, 2) * MPoly.var("x") + Fraction(1, 4)


def test_parse_treats_sympy_constants_as_variables():
    p = parse_poly("E*I + S")
    assert p.used_variables() == ("E", "I", "S")
    assert p.coefficient({"E": 1, "I": 1}) == 1


def test_parse_extra_variables_extend_universe():
    p = parse_poly("x", variables=("y", "z"))
    assert p.variables == ("x", "y", "z")
    assert p.used_variables() == ("x",)


@pytest.mark.parametrize("text", ["", "   ", "x/y", "x^(1/2)", "x @ y", "x**", "(x + 1"])
def test_parse_rejects_non_polynomials(text):
    with pytest.raises(PolynomialParseError) as excinfo:
        parse_poly(text)
    assert "polynomial" in excinfo.value.hint


def test_to_string_orders_graded_lex():
    p = parse_poly("z + x^2*y + 1 - 3*x")
    assert to_string(p) == "x^2*y - 3*x + z + 1"
    assert to_string(MPoly.zero()) == "0"
    assert to_string(-MPoly.var("x")) == "-x"


def test_format_rational():
    assert format_rational(Fraction(4, 7)) == "4/7"
    assert format_rational(Fraction(-6, 3)) == "-2"


# ---------------------------------------------------------
# Ring structure
# ---------------------------------------------------------
def test_equality_ignores_unused_universe():
    assert MPoly.var("x", ("x", "y")) == MPoly.var("x")
    assert hash(MPoly.var("x", ("x", "y"))) == hash(MPoly.var("x"))
    assert MPoly.constant(3, ("a",)) == 3


def test_arithmetic_matches_sympy():
    rng = np.random.default_rng(123)
    for _ in range(25):
        p, q = random_poly(rng), random_poly(rng, names=("y", "z", "w"))
        assert to_sympy(p * q) == sympy.expand(to_sympy(p) * to_sympy(q))
        assert to_sympy(p - q) == sympy.expand(to_sympy(p) - to_sympy(q))
        assert to_sympy(p ** 2) == sympy.expand(to_sympy(p) ** 2)


def test_ring_axioms_on_random_triples():
    rng = np.random.default_rng(31)
    for _ in range(25):
        p, q, r = random_poly(rng), random_poly(rng, names=("y", "z", "w")), random_poly(rng, names=("x", "w"))
        assert (p + q) + r == p + (q + r)
        assert (p * q) * r == p * (q * r)
        assert p + q == q + p
        assert p * q == q * p
        assert p * (q + r) == p * q + p * r
        assert p - p == 0
        assert p * 0 == 0


def test_arithmetic_examples():
    x, y, z = (MPoly.var(n) for n in "xyz")
    assert (x + y) + (x - y) == 2 * x
    assert (x + y + z) * (x + y + z) == parse_poly("x^2 + y^2 + z^2 + 2x*y + 2x*z + 2y*z")
    assert poly_arith(x + y, x - y, "add") == 2 * x
    assert poly_arith(x + y, x - y, "mul") == parse_poly("x^2 - y^2")
    assert poly_arith(x, y, "sub") == x - y


def test_zero_coefficients_are_dropped():
    x = MPoly.var("x")
    assert (x - x).is_zero()
    assert not (x - x).terms


def test_negative_exponent_rejected():
    with pytest.raises(OverflowError):
        MPoly(("x",), {(-1,): 1})


# ---------------------------------------------------------
# Calculus and substitution
# ---------------------------------------------------------
def test_partial_derivative():
    p = parse_poly("x^3*y + 2*x*y^2 - y")
    assert partial_derivative(p, "x") == parse_poly("3x^2*y + 2y^2")
    assert partial_derivative(p, "y") == parse_poly("x^3 + 4x*y - 1")


def test_partial_derivative_unknown_variable():
    with pytest.raises(UnknownVariableError):
        partial_derivative(parse_poly("x + y"), "z")


def test_substitute_composes_exactly():
    p = parse_poly("u*v + w")
    image = substitute(p, {"u": parse_poly("x + 1"), "v": parse_poly("x - 1"), "w": 1})
    assert image == parse_poly("x^2")


def test_substitute_leaves_unbound_variables():
    p = parse_poly("u + t")
    assert substitute(p, {"u": parse_poly("2s")}) == parse_poly("2s + t")


def test_product_rule_on_random_pairs():
    rng = np.random.default_rng(41)
    for _ in range(25):
        p, q = random_poly(rng), random_poly(rng, names=("x", "y", "w"))
        for name in ("x", "y"):
            p_full, q_full = p.extend(("x", "y", "z", "w")), q.extend(("x", "y", "z", "w"))
            lhs = partial_derivative(p_full * q_full, name)
            rhs = p_full * partial_derivative(q_full, name) + q_full * partial_derivative(p_full, name)
            assert lhs == rhs


def test_substitute_is_a_ring_homomorphism():
    rng = np.random.default_rng(43)
    for _ in range(15):
        p, q = random_poly(rng), random_poly(rng)
        bindings = {"x": random_poly(rng, names=("s", "t"), terms=2, degree=1),
                    "y": random_poly(rng, names=("s", "t"), terms=2, degree=1),
                    "z": Fraction(int(rng.integers(-3, 4)), 2)}
        assert substitute(p + q, bindings) == substitute(p, bindings) + substitute(q, bindings)
        assert substitute(p * q, bindings) == substitute(p, bindings) * substitute(q, bindings)


def test_substitute_and_derivative_examples():
    p = parse_poly("u1*v1")
    assert substitute(p, {"u1": parse_poly("x"), "v1": parse_poly("a*y")}) == parse_poly("a*x*y")
    assert substitute(p, {}) == p
    assert partial_derivative(parse_poly("u1*v1 - u2*v2 + u3 - v3"), "u1") == parse_poly("v1")
    assert partial_derivative(parse_poly("(u1 - v1)^2 - (u2 - v2)^2 + u3 - v3"), "u1") == parse_poly("2u1 - 2v1")


def test_rename_and_evaluate():
    p = rename(parse_poly("x*y + z"), {"x": "a", "y": "b"})
    assert p == parse_poly("a*b + z")
    assert evaluate(p, {"a": Fraction(1, 2), "b": 4, "z": "1/3"}) == Fraction(7, 3)


def test_evaluate_requires_used_variables():
    with pytest.raises(UnknownVariableError):
        evaluate(parse_poly("x + y"), {"x": 1})


# ---------------------------------------------------------
# Determinants
# ---------------------------------------------------------
def leibniz_det(m):
    """Sum over permutations, an expansion independent of the library's cofactor path"""
    n = len(m)
    total = MPoly.zero()
    for perm in permutations(range(n)):
        inversions = sum(perm[i] > perm[j] for i in range(n) for j in range(i + 1, n))
        term = MPoly.constant(-1 if inversions % 2 else 1)
        for row, col in enumerate(perm):
            term = term * m[row][col]
        total = total + term
    return total


def small_entries():
    u1, v2 = MPoly.var("u1"), MPoly.var("v2")
    return [MPoly.zero(), MPoly.constant(1), MPoly.constant(-1), u1, -u1, v2, -v2]


def test_determinant_literal_bordered_matrices():
    u1, u2, v1, v2 = (MPoly.var(n) for n in ("u1", "u2", "v1", "v2"))
    identity = [[1 if i == j else 0 for j in range(4)] for i in range(4)]
    assert determinant(identity) == 1
    difference_square = [
        [0, 2 * u1 - 2 * v1, -2 * u2 + 2 * v2, 1],
        [2 * v1 - 2 * u1, -2, 0, 0],
        [-2 * v2 + 2 * u2, 0, 2, 0],
        [1, 0, 0, 0],
    ]
    assert determinant(difference_square) == 4
    bilinear = [
        [0, v1, -v2, 1],
        [u1, 1, 0, 0],
        [-u2, 0, -1, 0],
        [1, 0, 0, 0],
    ]
    assert determinant(bilinear) == 1


def test_determinant_matches_leibniz_on_small_entries():
    entries = small_entries()
    for a, b, c, d in product(entries, repeat=4):
        m = [[a, b], [c, d]]
        assert determinant(m) == leibniz_det(m)
    rng = np.random.default_rng(53)
    for n in (3, 4):
        for _ in range(150):
            m = [[entries[int(k)] for k in rng.integers(0, len(entries), size=n)] for _ in range(n)]
            assert determinant(m) == leibniz_det(m)


@pytest.mark.slow
def test_determinant_matches_leibniz_exhaustive_3x3():
    entries = [MPoly.zero(), MPoly.constant(1), MPoly.var("u1"), -MPoly.var("v2")]
    for flat in product(entries, repeat=9):
        m = [list(flat[0:3]), list(flat[3:6]), list(flat[6:9])]
        assert determinant(m) == leibniz_det(m)


def test_determinant_empty_and_scalar():
    assert determinant([]) == 1
    assert determinant([[5]]) == 5


def test_determinant_non_square():
    with pytest.raises(ShapeError):
        determinant([[1, 2], [3]])


def test_determinant_matches_sympy_integer_matrices():
    rng = np.random.default_rng(7)
    for n in range(1, 7):
        for _ in range(3):
            m = rng.integers(-4, 5, size=(n, n)).tolist()
            assert determinant(m) == int(sympy.Matrix(m).det())


def test_symbolic_determinant_bareiss_agrees_with_sympy():
    # 5x5 goes through the fraction-free path
    names = [f"t{k}" for k in range(5)]
    symbols = [sympy.Symbol(n) for n in names]
    rng = np.random.default_rng(11)
    entries = rng.integers(-2, 3, size=(5, 5)).tolist()
    m, sm = [], []
    for i in range(5):
        row, srow = [], []
        for j in range(5):
            if i == j:
                row.append(MPoly.var(names[i]) + entries[i][j])
                srow.append(symbols[i] + entries[i][j])
            else:
                row.append(entries[i][j])
                srow.append(entries[i][j])
        m.append(row)
        sm.append(srow)
    assert to_sympy(determinant(m)) == sympy.expand(sympy.Matrix(sm).det())


def test_exact_divide():
    p = parse_poly("x^2 - y^2")
    assert exact_divide(p, parse_poly("x - y")) == parse_poly("x + y")
    with pytest.raises(ArithmeticError):
        exact_divide(parse_poly("x^2 + 1"), parse_poly("x - y"))


def test_solve_linear():
    assert solve_linear([[2, 1], [1, 3]], [3, 5]) == [Fraction(4, 5), Fraction(7, 5)]
    assert solve_linear([[1, 2], [2, 4]], [1, 2]) is None
