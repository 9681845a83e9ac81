"""
Finite-field laboratory for falconerlab
Brute-force image sets f(A, B, C) over F_p, the expander census against min{N^(3/2), p},
and the distance-set cover check over F_q
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from sympy.ntheory import primitive_root as sympy_primitive_root

from .errors import BudgetExceededError, ValidationError
from .logger import log_debug, log_step
from .quadratic_classifier import Quadratic3
from .symbolic_core import format_rational

DEFAULT_BUDGET = 10 ** 9
DEFAULT_BITMAP_LIMIT = 2 ** 27

# numpy path keeps every product below 2^62
INT64_SAFE_MODULUS = 2 ** 31

# rows of the B x C grid are processed in blocks of about this many cells
GRID_BLOCK = 1 << 20

_MILLER_RABIN_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for n < 3.3e24"""
    if n < 2:
        return False
    for q in _MILLER_RABIN_BASES:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for base in _MILLER_RABIN_BASES:
        x = pow(base, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def primitive_root(p: int) -> int:
    """Smallest generator of the multiplicative group of F_p"""
    if not is_prime(p):
        raise ValidationError(f"{p} is not prime; F_p needs a prime modulus")
    return int(sympy_primitive_root(p))


@dataclass(frozen=True)
class PrimeField:
    p: int

    def __post_init__(self):
        if not isinstance(self.p, int) or isinstance(self.p, bool) or not is_prime(self.p):
            raise ValidationError(f"{self.p!r} is not a prime modulus")


@dataclass(frozen=True)
class FFSet:
    """Sorted, duplicate-free residues in [0, p)"""

    elements: Tuple[int, ...]
    p: int

    def __post_init__(self):
        elements = tuple(int(v) for v in self.elements)
        if any(b <= a for a, b in zip(elements, elements[1:])):
            raise ValidationError("FFSet elements must be strictly increasing")
        if elements and (elements[0] < 0 or elements[-1] >= self.p):
            raise ValidationError(f"FFSet elements must lie in [0, {self.p})")
        object.__setattr__(self, "elements", elements)

    @classmethod
    def of(cls, values: Iterable[int], field: PrimeField) -> "FFSet":
        values = [int(v) for v in values]
        bad = [v for v in values if not 0 <= v < field.p]
        if bad:
            raise ValidationError(f"residues {bad[:5]} are outside [0, {field.p})")
        return cls(tuple(sorted(set(values))), field.p)

    @classmethod
    def full(cls, field: PrimeField) -> "FFSet":
        return cls(tuple(range(field.p)), field.p)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, value: int) -> bool:
        return value in set(self.elements)

    def issubset(self, other: "FFSet") -> bool:
        return set(self.elements) <= set(other.elements)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.elements, dtype=np.int64)


class SetFamily(str, Enum):
    UNIFORM = "uniform-random"
    INTERVAL = "interval"
    GEOMETRIC = "geometric"


def _check_budget(required: int, budget: int, what: str):
    if required > budget:
        raise BudgetExceededError(required, budget, what)


def _image_bitmap(coeffs: dict, xs: np.ndarray, ys: np.ndarray, zs: np.ndarray, p: int) -> np.ndarray:
    a, b, c, d, e, g, h, i, j, k0 = (coeffs[k] for k in ("a", "b", "c", "d", "e", "g", "h", "i", "j", "k0"))
    bitmap = np.zeros(p, dtype=bool)
    if xs.size == 0 or ys.size == 0 or zs.size == 0:
        return bitmap
    rows_per_block = max(1, GRID_BLOCK // zs.size)
    z_part = (g * zs % p * zs + j * zs) % p
    x_part = (d * xs % p * xs + h * xs) % p
    for start in range(0, ys.size, rows_per_block):
        y_block = ys[start:start + rows_per_block]
        Y = np.repeat(y_block, zs.size)
        Z = np.tile(zs, y_block.size)
        base = (c * Y % p * Z % p + (e * Y % p * Y + i * Y) % p + np.tile(z_part, y_block.size) + k0) % p
        for x, xr in zip(xs, x_part):
            ax, bx = a * int(x) % p, b * int(x) % p
            values = (base + ax * Y % p + bx * Z % p + int(xr)) % p
            bitmap[values] = True
    return bitmap


def _image_hashset(coeffs: dict, A: FFSet, B: FFSet, C: FFSet, p: int) -> set:
    a, b, c, d, e, g, h, i, j, k0 = (coeffs[k] for k in ("a", "b", "c", "d", "e", "g", "h", "i", "j", "k0"))
    out = set()
    for x in A:
        fx = d * x * x + h * x + k0
        for y in B:
            fxy = fx + a * x * y + e * y * y + i * y
            for z in C:
                out.add((fxy + b * x * z + c * y * z + g * z * z + j * z) % p)
    return out


def image_set(
    f: Quadratic3,
    A: FFSet,
    B: FFSet,
    C: FFSet,
    field: PrimeField,
    budget: int = DEFAULT_BUDGET,
    bitmap_limit: int = DEFAULT_BITMAP_LIMIT,
    threads: int = 1,
) -> FFSet:
    """{f(x, y, z) mod p : (x, y, z) in A x B x C}"""
    p = field.p
    for name, s in (("A", A), ("B", B), ("C", C)):
        if s.p != p:
            raise ValidationError(f"set {name} lives in F_{s.p}, not F_{p}")
    _check_budget(len(A) * len(B) * len(C), budget, "image_set triple loop")
    coeffs = f.reduce_mod(p)

    if p > bitmap_limit or p >= INT64_SAFE_MODULUS:
        return FFSet(tuple(sorted(_image_hashset(coeffs, A, B, C, p))), p)

    xs, ys, zs = A.as_array(), B.as_array(), C.as_array()
    workers = max(1, min(threads, xs.size))
    if workers == 1:
        bitmap = _image_bitmap(coeffs, xs, ys, zs, p)
    else:
        chunks = np.array_split(xs, workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda chunk: _image_bitmap(coeffs, chunk, ys, zs, p), chunks))
        bitmap = np.logical_or.reduce(parts)
    return FFSet(tuple(int(v) for v in np.flatnonzero(bitmap)), p)


def growth_bound(n: int, p: int) -> int:
    """min{N^(3/2), p}, with N^(3/2) rounded down to an integer when it is the smaller term"""
    if n ** 3 >= p * p:
        return p
    return max(1, math.isqrt(n ** 3))


def draw_family(family: SetFamily, n: int, field: PrimeField, rng: np.random.Generator) -> FFSet:
    """One seeded set of size n from the family"""
    p = field.p
    family = SetFamily(family)
    if n > p:
        raise ValidationError(f"set size {n} exceeds the field size {p}")
    if family is SetFamily.UNIFORM:
        if n == p:
            return FFSet.full(field)
        chosen = set()
        while len(chosen) < n:
            chosen.add(int(rng.integers(0, p)))
        return FFSet.of(chosen, field)
    if family is SetFamily.INTERVAL:
        start = int(rng.integers(0, p - n + 1))
        return FFSet.of(range(start, start + n), field)
    if n > p - 1:
        raise ValidationError(f"a geometric progression in F_{p}* has at most {p - 1} elements")
    order = p - 1
    root = primitive_root(p)
    while True:
        k = int(rng.integers(1, order + 1)) if order > 1 else 1
        if math.gcd(k, order) == 1:
            break
    g = pow(root, k, p)
    return FFSet.of((pow(g, t, p) for t in range(n)), field)


@dataclass(frozen=True)
class CensusRow:
    p: int
    n: int
    family: str
    seed: int
    trial: int
    image_size: int
    ratio: Fraction

    @property
    def ratio_float(self) -> str:
        return f"{float(self.ratio):.6f}"

    def as_csv_row(self) -> list:
        return [self.p, self.n, self.family, self.seed, self.trial, self.image_size,
                format_rational(self.ratio), self.ratio_float]


CENSUS_HEADER = ["p", "N", "family", "seed", "trial", "image_size", "ratio", "ratio_float"]


@dataclass(frozen=True)
class CensusReport:
    polynomial: str
    rows: Tuple[CensusRow, ...]

    @property
    def min_ratio(self) -> Fraction:
        return min(row.ratio for row in self.rows)

    @property
    def max_image_size(self) -> int:
        return max(row.image_size for row in self.rows)

    def to_dict(self) -> dict:
        return {
            "polynomial": self.polynomial,
            "min_ratio": format_rational(self.min_ratio),
            "rows": [dict(zip(CENSUS_HEADER, row.as_csv_row())) for row in self.rows],
        }


def expander_census(
    f: Quadratic3,
    field: PrimeField,
    n: int,
    trials: int,
    family: SetFamily,
    seed: int,
    budget: int = DEFAULT_BUDGET,
    bitmap_limit: int = DEFAULT_BITMAP_LIMIT,
    threads: int = 1,
) -> CensusReport:
    """Image sizes of f on seeded set triples and their ratio to min{N^(3/2), p}, sorted by ratio"""
    family = SetFamily(family)
    if n > field.p:
        raise ValidationError(f"N={n} exceeds p={field.p}")
    if n < 1 or trials < 1:
        raise ValidationError("census needs N >= 1 and at least one trial")
    bound = growth_bound(n, field.p)
    log_step(f"census of {f} over F_{field.p}: N={n}, {trials} {family.value} trials, bound {bound}", "FFLAB")

    def run_trial(trial: int) -> CensusRow:
        rng = np.random.default_rng([seed, trial])
        A, B, C = (draw_family(family, n, field, rng) for _ in range(3))
        size = len(image_set(f, A, B, C, field, budget=budget, bitmap_limit=bitmap_limit))
        log_debug(f"trial {trial}: |f(A,B,C)| = {size}", "FFLAB")
        return CensusRow(field.p, n, family.value, seed, trial, size, Fraction(size, bound))

    workers = max(1, min(threads, trials))
    if workers == 1:
        rows = [run_trial(t) for t in range(trials)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_trial, range(trials)))
    rows.sort(key=lambda row: (row.ratio, row.trial))
    return CensusReport(str(f), tuple(rows))


def distance_cover_threshold(q: int) -> int:
    """Smallest integer N with N >= 2 q^(3/4), i.e. N^4 >= 16 q^3"""
    target = 16 * q ** 3
    n = math.isqrt(math.isqrt(target))
    while n ** 4 < target:
        n += 1
    return n


def distance_image(A: FFSet, field: PrimeField, budget: int = DEFAULT_BUDGET) -> FFSet:
    """{(x - y)^2 + (z - t)^2 : x, y, z, t in A} via the histogram of squared differences"""
    p = field.p
    _check_budget(len(A) ** 2, budget, "distance histogram")
    values = A.as_array()
    if values.size == 0:
        return FFSet((), p)
    if p >= INT64_SAFE_MODULUS:
        squares = sorted({(x - y) ** 2 % p for x in A for y in A})
        out = {(s + t) % p for s in squares for t in squares}
        return FFSet(tuple(sorted(out)), p)

    diffs = (values[:, None] - values[None, :]) % p
    histogram = np.bincount((diffs * diffs % p).ravel(), minlength=p)
    support = np.flatnonzero(histogram)
    _check_budget(support.size * support.size, budget, "distance sumset merge")
    covered = np.zeros(p, dtype=bool)
    for s in support:
        covered[(support + s) % p] = True
        if covered.all():
            break
    return FFSet(tuple(int(v) for v in np.flatnonzero(covered)), p)


def cover_check_distance(A: FFSet, field: PrimeField, budget: int = DEFAULT_BUDGET) -> bool:
    """True iff the distance image of A is all of F_q"""
    return len(distance_image(A, field, budget)) == field.p
