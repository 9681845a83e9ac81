# tests/test_finite_field_lab.py
import time
from fractions import Fraction
from itertools import product

import numpy as np
import pytest
import sympy

from src.errors import BudgetExceededError, ValidationError
from src.finite_field_lab import (
    FFSet,
    PrimeField,
    SetFamily,
    cover_check_distance,
    distance_cover_threshold,
    distance_image,
    draw_family,
    expander_census,
    growth_bound,
    image_set,
    is_prime,
    primitive_root,
)
from src.quadratic_classifier import Quadratic3
from src.symbolic_core import format_rational

# ---------------------------------------------------------
# Utility helpers
# ---------------------------------------------------------
def brute_image(f, A, B, C, p):
    residues = f.reduce_mod(p)
    poly = lambda x, y, z: (
        residues["a"] * x * y + residues["b"] * x * z + residues["c"] * y * z
        + residues["d"] * x * x + residues["e"] * y * y + residues["g"] * z * z
        + residues["h"] * x + residues["i"] * y + residues["j"] * z + residues["k0"]
    ) % p
    return sorted({poly(x, y, z) for x, y, z in product(A, B, C)})


def random_set(rng, field, n):
    return FFSet.of(rng.choice(field.p, size=n, replace=False).tolist(), field)


# ---------------------------------------------------------
# Field arithmetic
# ---------------------------------------------------------
def test_is_prime_matches_sympy():
    for n in range(-3, 2000):
        assert is_prime(n) == sympy.isprime(n), n
    for n in (2 ** 31 - 1, 2 ** 61 - 1, 1_000_000_007 * 998_244_353, 3_215_031_751):
        assert is_prime(n) == sympy.isprime(n), n


def test_primitive_root_is_the_smallest_generator():
    for p in (2, 3, 5, 7, 13, 101, 1009):
        g = primitive_root(p)
        assert {pow(g, k, p) for k in range(p - 1)} == set(range(1, p))
        for h in range(2, g):
            assert len({pow(h, k, p) for k in range(p - 1)}) < p - 1
    with pytest.raises(ValidationError):
        primitive_root(15)


def test_prime_field_rejects_composites():
    with pytest.raises(ValidationError):
        PrimeField(15)
    with pytest.raises(ValidationError):
        PrimeField(1)
    assert PrimeField(101).p == 101


def test_ffset_of_sorts_and_validates():
    field = PrimeField(7)
    s = FFSet.of([5, 1, 5, 3], field)
    assert s.elements == (1, 3, 5)
    assert 3 in s and 4 not in s
    assert s.issubset(FFSet.full(field))
    with pytest.raises(ValidationError):
        FFSet.of([7], field)


# ---------------------------------------------------------
# Image sets
# ---------------------------------------------------------
@pytest.mark.parametrize("text", ["x*y + z", "(x - y)^2 + z", "x*(y + z)", "x*y + x*z + y*z - 2x^2 + 3", "1/2 x*y + z"])
def test_image_set_matches_brute_force(text):
    field = PrimeField(13)
    f = Quadratic3.parse(text)
    rng = np.random.default_rng(1)
    for _ in range(5):
        A, B, C = (random_set(rng, field, int(rng.integers(1, 8))) for _ in range(3))
        expected = brute_image(f, A, B, C, field.p)
        assert list(image_set(f, A, B, C, field)) == expected
        assert list(image_set(f, A, B, C, field, bitmap_limit=1)) == expected
        assert list(image_set(f, A, B, C, field, threads=3)) == expected


def test_image_set_is_monotone():
    field = PrimeField(31)
    f = Quadratic3.parse("(x - y)^2 + z")
    rng = np.random.default_rng(12)
    for _ in range(10):
        A, B, C = (random_set(rng, field, 4) for _ in range(3))
        extra = [int(v) for v in rng.choice(31, size=3, replace=False)]
        bigger = FFSet.of(list(A) + extra, field)
        small = set(image_set(f, A, B, C, field))
        assert small <= set(image_set(f, bigger, B, C, field))
        assert small <= set(image_set(f, A, bigger, C, field))


def test_product_sum_image_symmetric_in_a_and_b():
    field = PrimeField(29)
    f = Quadratic3.parse("x*y + z")
    rng = np.random.default_rng(8)
    for _ in range(10):
        A, B, C = (random_set(rng, field, int(rng.integers(1, 9))) for _ in range(3))
        assert list(image_set(f, A, B, C, field)) == list(image_set(f, B, A, C, field))


def test_image_set_full_product_sum_covers_field():
    field = PrimeField(11)
    full = FFSet.full(field)
    assert len(image_set(Quadratic3.parse("x*y + z"), full, full, full, field)) == 11


def test_image_set_budget():
    field = PrimeField(101)
    full = FFSet.full(field)
    with pytest.raises(BudgetExceededError) as excinfo:
        image_set(Quadratic3.parse("x*y + z"), full, full, full, field, budget=1000)
    assert excinfo.value.required == 101 ** 3


def test_image_set_rejects_mixed_fields():
    f = Quadratic3.parse("x*y + z")
    A = FFSet.of([1, 2], PrimeField(5))
    B = FFSet.of([1, 2], PrimeField(7))
    with pytest.raises(ValidationError):
        image_set(f, A, B, B, PrimeField(7))


# ---------------------------------------------------------
# Set families and the census
# ---------------------------------------------------------
def test_growth_bound():
    assert growth_bound(127, 1009) == 1009
    assert growth_bound(4, 1009) == 8
    assert growth_bound(10, 1009) == 31
    assert growth_bound(100, 1000) == 1000


@pytest.mark.parametrize("family", list(SetFamily))
def test_draw_family_sizes(family):
    field = PrimeField(101)
    rng = np.random.default_rng(4)
    for n in (1, 10, 50):
        s = draw_family(family, n, field, rng)
        assert len(s) == n
        assert s.p == 101


def test_interval_family_is_contiguous():
    s = draw_family(SetFamily.INTERVAL, 20, PrimeField(101), np.random.default_rng(0))
    assert s.elements == tuple(range(s.elements[0], s.elements[0] + 20))


def test_geometric_family_is_a_progression():
    field = PrimeField(101)
    s = draw_family(SetFamily.GEOMETRIC, 10, field, np.random.default_rng(2))
    ratios = {y * pow(x, -1, 101) % 101 for x in s for y in s}
    # closed under the generator: some ratio maps every element but one back into the set
    assert 0 not in s
    assert any(sum((r * x) % 101 in s for x in s) == 9 for r in ratios)


def test_geometric_family_too_large():
    with pytest.raises(ValidationError):
        draw_family(SetFamily.GEOMETRIC, 101, PrimeField(101), np.random.default_rng(0))


def test_census_rows_and_ratios():
    field = PrimeField(101)
    report = expander_census(Quadratic3.parse("x*y + z"), field, n=10, trials=6,
                             family=SetFamily.UNIFORM, seed=7)
    assert len(report.rows) == 6
    assert [row.ratio for row in report.rows] == sorted(row.ratio for row in report.rows)
    bound = growth_bound(10, 101)
    for row in report.rows:
        assert row.ratio == Fraction(row.image_size, bound)
        assert 1 <= row.image_size <= 101
    assert report.to_dict()["min_ratio"] == format_rational(report.min_ratio)


def test_census_is_deterministic_across_threads():
    field = PrimeField(211)
    f = Quadratic3.parse("(x - y)^2 + z")
    one = expander_census(f, field, n=20, trials=8, family=SetFamily.UNIFORM, seed=3, threads=1)
    four = expander_census(f, field, n=20, trials=8, family=SetFamily.UNIFORM, seed=3, threads=4)
    eight = expander_census(f, field, n=20, trials=8, family=SetFamily.UNIFORM, seed=3, threads=8)
    assert one == four == eight


def test_census_validates_sizes():
    field = PrimeField(11)
    with pytest.raises(ValidationError):
        expander_census(Quadratic3.parse("x*y + z"), field, n=12, trials=1, family=SetFamily.UNIFORM, seed=0)
    with pytest.raises(ValidationError):
        expander_census(Quadratic3.parse("x*y + z"), field, n=3, trials=0, family=SetFamily.UNIFORM, seed=0)


def test_degenerate_polynomial_stays_small_on_intervals():
    # (x + y + z)^2 takes at most 3N - 2 values on intervals of length N
    field = PrimeField(1009)
    report = expander_census(Quadratic3.parse("(x + y + z)^2"), field, n=30, trials=5,
                             family=SetFamily.INTERVAL, seed=1)
    assert report.max_image_size <= 3 * 30 - 2


@pytest.mark.slow
@pytest.mark.parametrize("text", ["x*y + z", "(x - y)^2 + z", "x*y + x*z"])
def test_falconer_polynomials_expand(text):
    report = expander_census(Quadratic3.parse(text), PrimeField(1009), n=127, trials=50,
                             family=SetFamily.UNIFORM, seed=0)
    assert report.min_ratio >= Fraction(1, 2)


# ---------------------------------------------------------
# Distance sets
# ---------------------------------------------------------
def test_distance_cover_threshold():
    assert distance_cover_threshold(101) == 64
    n = distance_cover_threshold(1009)
    assert n ** 4 >= 16 * 1009 ** 3 > (n - 1) ** 4


def test_distance_image_matches_brute_force():
    field = PrimeField(23)
    A = FFSet.of([0, 3, 4, 9, 17], field)
    expected = sorted({((x - y) ** 2 + (z - t) ** 2) % 23 for x, y, z, t in product(A, repeat=4)})
    assert list(distance_image(A, field)) == expected


def test_cover_check_distance():
    field = PrimeField(101)
    assert cover_check_distance(FFSet.of(range(64), field), field)
    # A = {0, ..., 64}, |A| = 65 >= 2 * 101^(3/4)
    started = time.perf_counter()
    A = FFSet.of(range(65), field)
    assert len(A) == 65
    assert cover_check_distance(A, field)
    assert time.perf_counter() - started < 1
    assert not cover_check_distance(FFSet.of([0, 1], field), field)


def test_distance_budget():
    field = PrimeField(101)
    with pytest.raises(BudgetExceededError):
        distance_image(FFSet.full(field), field, budget=100)
