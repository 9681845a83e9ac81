# tests/test_quadratic_classifier.py
from fractions import Fraction
import time
from itertools import permutations, product

import numpy as np
import pytest

from src.errors import ClassificationError, ValidationError
from src.quadratic_classifier import (
    DegenerateWitness,
    LemmaCase,
    Quadratic3,
    Verdict,
    classification_report,
    classify,
    depends_on_all,
    oracle_is_degenerate,
    verify_witness,
)
from src.symbolic_core import parse_poly, partial_derivative

KEYS = ("a", "b", "c", "d", "e", "g", "h", "i", "j")

# ---------------------------------------------------------
# Utility helpers
# ---------------------------------------------------------
def grid(values, linear_values=None):
    linear_values = values if linear_values is None else linear_values
    for quad in product(values, repeat=6):
        for lin in product(linear_values, repeat=3):
            f = Quadratic3(**dict(zip(KEYS, quad + lin)))
            if all(depends_on_all(f)):
                yield f


def random_quadratic(rng, low=-5, high=5):
    return Quadratic3(**{k: Fraction(int(rng.integers(low, high + 1)), int(rng.integers(1, 3))) for k in KEYS})


# ---------------------------------------------------------
# Quadratic3
# ---------------------------------------------------------
def test_parse_reads_coefficients():
    f = Quadratic3.parse("2x*y - x*z + 3y*z + x^2 - 1/2 z^2 + 4x - y + 7")
    assert (f.a, f.b, f.c, f.d, f.e, f.g) == (2, -1, 3, 1, 0, Fraction(-1, 2))
    assert (f.h, f.i, f.j, f.k0) == (4, -1, 0, 7)
    assert f.to_poly() == parse_poly("2x*y - x*z + 3y*z + x^2 - 1/2 z^2 + 4x - y + 7")


def test_parse_rejects_cubics_and_foreign_variables():
    with pytest.raises(ValidationError):
        Quadratic3.parse("x^2*y")
    with pytest.raises(ValidationError):
        Quadratic3.parse("x + w")


def test_permuted_relabels():
    f = Quadratic3.parse("x*z + y*z")
    # new x = old z, new y = old x, new z = old y
    assert Quadratic3.from_poly(f.permuted((2, 0, 1)).to_poly()) == Quadratic3.parse("x*y + x*z")


def test_reduce_mod():
    f = Quadratic3.parse("1/2 x*y + z - 3")
    residues = f.reduce_mod(5)
    assert residues["a"] == 3
    assert residues["j"] == 1
    assert residues["k0"] == 2
    with pytest.raises(ValidationError):
        Quadratic3.parse("1/5 x*y + z").reduce_mod(5)


# ---------------------------------------------------------
# depends_on_all
# ---------------------------------------------------------
@pytest.mark.parametrize("text, expected", [
    ("x*y + z", (True, True, True)),
    ("x^2 + x", (True, False, False)),
    ("(x - y)^2 + z", (True, True, True)),
])
def test_depends_on_all(text, expected):
    assert depends_on_all(Quadratic3.parse(text)) == expected


def test_depends_on_all_matches_partial_derivatives():
    rng = np.random.default_rng(17)
    for _ in range(60):
        values = {k: int(rng.integers(-1, 2)) * int(rng.integers(0, 2)) for k in KEYS}
        f = Quadratic3(**values)
        poly = f.to_poly()
        expected = tuple(not partial_derivative(poly, v).is_zero() for v in ("x", "y", "z"))
        assert depends_on_all(f) == expected, str(values)


# ---------------------------------------------------------
# classify
# ---------------------------------------------------------
def test_square_of_sum_is_degenerate_square():
    result = classify(Quadratic3.parse("(x + y + z)^2"))
    assert result.verdict is Verdict.DEGENERATE_SQUARE
    assert result.witness.outer == (1, 0, 0)
    assert result.witness.inner == (1, 1, 1)


def test_sum_of_squares_is_degenerate_additive():
    result = classify(Quadratic3.parse("x^2 + y^2 + z^2"))
    assert result.verdict is Verdict.DEGENERATE_ADDITIVE
    assert result.witness.additive


def test_product_sum_is_two_cross_terms():
    result = classify(Quadratic3.parse("x*y + z"))
    assert result.verdict is Verdict.FALCONER_TYPE
    assert result.case is LemmaCase.TWO_CROSS_TERMS
    assert result.permutation == (0, 1, 2)


def test_product_of_sum_is_two_cross_terms():
    result = classify(Quadratic3.preset("product-of-sum"))
    assert result.case is LemmaCase.TWO_CROSS_TERMS
    assert result.permutation == (0, 1, 2)


def test_two_cross_terms_permutation_reaches_lemma_shape():
    for text in ("x*z + y*z", "y*z + x", "x*y + y*z + z^2", "x*z + 3x", "y*z + x*z + x*y - x*y"):
        f = Quadratic3.parse(text)
        if not all(depends_on_all(f)):
            continue
        result = classify(f)
        shaped = f.permuted(result.permutation)
        assert shaped.a != 0 and shaped.c == 0, text


def test_all_cross_terms():
    result = classify(Quadratic3.parse("x*y + x*z + y*z"))
    assert result.verdict is Verdict.FALCONER_TYPE
    assert result.case is LemmaCase.ALL_CROSS_TERMS
    assert result.permutation == (0, 1, 2)


def test_all_cross_terms_permutation_moves_x_when_square_system_holds():
    # with x in front ib = ja and 4eg = c^2 both hold; y in front breaks 4eg = c^2
    result = classify(Quadratic3.parse("(x + y + z)^2 - x^2"))
    assert result.case is LemmaCase.ALL_CROSS_TERMS
    assert result.permutation == (1, 0, 2)
    shaped = Quadratic3.parse("(x + y + z)^2 - x^2").permuted(result.permutation)
    assert shaped == Quadratic3.parse("(x + y + z)^2 - y^2")


def test_missing_variable_reported_first():
    result = classify(Quadratic3.parse("(x + y)^2"))
    assert result.verdict is Verdict.MISSING_VARIABLE
    assert result.missing == ("z",)


def test_constant_rejected():
    with pytest.raises(ClassificationError):
        classify(Quadratic3.parse("5"))


def test_square_with_linear_part():
    f = Quadratic3.parse("2x*y + 2x*z + 2y*z + x^2 + y^2 + z^2 + x + y + z")
    result = classify(f)
    assert result.verdict is Verdict.DEGENERATE_SQUARE
    assert result.witness.expand() == parse_poly("(x + y + z)^2 + (x + y + z)")


def test_sign_inconsistent_squares_are_not_degenerate():
    # squared conditions hold but 2dc = -ab
    f = Quadratic3(a=2, b=2, c=-2, d=1, e=1, g=1)
    assert classify(f).verdict is Verdict.FALCONER_TYPE
    assert not oracle_is_degenerate(f)


# ---------------------------------------------------------
# Witnesses and the oracle
# ---------------------------------------------------------
def test_verify_witness():
    square = DegenerateWitness(outer=(1, 0, 0), inner=(1, 1, 1))
    assert verify_witness(Quadratic3.parse("(x + y + z)^2"), square)
    assert not verify_witness(Quadratic3.parse("x*y + z"), square)
    shifted = DegenerateWitness(outer=(1, 0, -5), inner=(1, 2, 3))
    assert verify_witness(Quadratic3.parse("(x + 2y + 3z)^2 - 5"), shifted)


@pytest.mark.parametrize("text, expected", [
    ("(x + y + z)^2", True),
    ("x*y + x*z + y*z", False),
    ("(2x + y - z)^2 + 7(2x + y - z)", True),
    ("x^2 + 3y - z", True),
])
def test_oracle(text, expected):
    assert oracle_is_degenerate(Quadratic3.parse(text)) is expected


def test_classifier_matches_oracle_small_grid():
    # the second grid reaches the square cases such as (x + y + z)^2 + 2(x + y + z)
    candidates = list(grid((-1, 0, 1), linear_values=(0, 1))) + list(grid((-2, 1, 2), linear_values=(0, 2)))
    assert any(classify(f).verdict is Verdict.DEGENERATE_SQUARE for f in candidates)
    for f in candidates:
        result = classify(f)
        assert result.is_degenerate == oracle_is_degenerate(f), str(f)
        if result.verdict is Verdict.DEGENERATE_SQUARE:
            assert verify_witness(f, result.witness)


@pytest.mark.slow
def test_classifier_matches_oracle_full_grid():
    started = time.perf_counter()
    checked = 0
    for f in grid((-2, -1, 0, 1, 2)):
        result = classify(f)
        assert result.is_degenerate == oracle_is_degenerate(f), str(f)
        if result.verdict is Verdict.DEGENERATE_SQUARE:
            assert verify_witness(f, result.witness)
        checked += 1
    assert checked > 10 ** 6
    assert time.perf_counter() - started < 300


def test_verdict_invariant_under_permutation_and_scaling():
    rng = np.random.default_rng(5)
    samples = [Quadratic3.parse("(x + 2y - z)^2 + x + 2y - z"), Quadratic3.parse("x*y + z")]
    samples += [random_quadratic(rng) for _ in range(20)]
    for f in samples:
        base = classify(f).is_degenerate
        for perm in permutations(range(3)):
            assert classify(f.permuted(perm)).is_degenerate == base
        for factor in (Fraction(-3), Fraction(2, 7)):
            assert classify(f.scaled(factor)).is_degenerate == base


def test_classification_report():
    report = classification_report(Quadratic3.parse("x*z + y*z"), "x*z + y*z")
    assert report["verdict"] == "FalconerType"
    assert report["case"] == "TwoCrossTerms"
    assert report["lemma_shape"] == "x*y + x*z"
    assert report["depends_on"] == {"x": True, "y": True, "z": True}

    square = classification_report(Quadratic3.parse("(x + y + z)^2"))
    assert square["witness"]["inner"] == {"h1": "1", "k1": "1", "l1": "1"}
