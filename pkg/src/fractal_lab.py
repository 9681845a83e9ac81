"""
Continuous-side numerics for falconerlab
Cantor covers, exact interval images of quadratics, the epsilon-mass statistic,
the sharpness decay table and exact dimension-threshold chains
"""

import bisect
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from itertools import product
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import json5
import numpy as np

from .errors import BudgetExceededError, ChainError, ValidationError
from .logger import log_debug, log_step
from .quadratic_classifier import Quadratic3
from .symbolic_core import Scalar, as_rational, format_rational, solve_linear

Interval = Tuple[Fraction, Fraction]

DEFAULT_FRACTAL_BUDGET = 10 ** 8

# integer endpoints above this fall back to Fraction bisection
_INT64_HEADROOM = 2 ** 62


# ============================================================================
# Covers
# ============================================================================

@dataclass(frozen=True)
class IntervalCover:
    """Sorted closed intervals with pairwise disjoint interiors, each carrying weight 1/count when weighted"""

    intervals: Tuple[Interval, ...]
    weighted: bool = True

    def __post_init__(self):
        intervals = tuple((as_rational(lo), as_rational(hi)) for lo, hi in self.intervals)
        if not intervals:
            raise ValidationError("a cover needs at least one interval")
        for lo, hi in intervals:
            if hi < lo:
                raise ValidationError(f"interval [{lo}, {hi}] is empty")
        for (_, hi), (lo, _) in zip(intervals, intervals[1:]):
            if lo < hi:
                raise ValidationError("cover intervals must be sorted with disjoint interiors")
        object.__setattr__(self, "intervals", intervals)

    @classmethod
    def point(cls, x: Scalar) -> "IntervalCover":
        x = as_rational(x)
        return cls(((x, x),))

    @classmethod
    def full(cls, lo: Scalar = 0, hi: Scalar = 1) -> "IntervalCover":
        return cls(((as_rational(lo), as_rational(hi)),))

    def __len__(self) -> int:
        return len(self.intervals)

    @property
    def weight(self) -> Optional[Fraction]:
        return Fraction(1, len(self.intervals)) if self.weighted else None

    @property
    def total_length(self) -> Fraction:
        return sum((hi - lo for lo, hi in self.intervals), Fraction(0))

    def covers(self, other: "IntervalCover") -> bool:
        """Every interval of other lies inside some interval of self"""
        los = [lo for lo, _ in self.intervals]
        for lo, hi in other.intervals:
            k = bisect.bisect_right(los, lo) - 1
            if k < 0 or hi > self.intervals[k][1]:
                return False
        return True

    def to_dict(self) -> dict:
        return {
            "count": len(self.intervals),
            "total_length": format_rational(self.total_length),
            "weight": format_rational(self.weight) if self.weighted else None,
        }


@dataclass(frozen=True)
class CantorSpec:
    """Digit-restricted Cantor set: base b, allowed digits D, construction depth n"""

    base: int
    digits: Tuple[int, ...]
    depth: int

    def __post_init__(self):
        if not isinstance(self.base, int) or self.base < 2:
            raise ValidationError(f"Cantor base must be an integer >= 2, got {self.base!r}")
        digits = tuple(sorted(set(int(d) for d in self.digits)))
        if not digits:
            raise ValidationError("Cantor digit set is empty")
        if digits[0] < 0 or digits[-1] >= self.base:
            raise ValidationError(f"digits {list(digits)} must lie in 0..{self.base - 1}")
        if not isinstance(self.depth, int) or self.depth < 0:
            raise ValidationError(f"Cantor depth must be a non-negative integer, got {self.depth!r}")
        object.__setattr__(self, "digits", digits)

    @classmethod
    def middle_thirds(cls, depth: int) -> "CantorSpec":
        return cls(3, (0, 2), depth)

    @classmethod
    def near_full(cls, base: int, depth: int) -> "CantorSpec":
        """All digits but the middle one; dimension log(b-1)/log b approaches 1 as b grows"""
        if base < 3:
            raise ValidationError("near_full needs base >= 3")
        middle = base // 2
        return cls(base, tuple(d for d in range(base) if d != middle), depth)

    @classmethod
    def full_interval(cls, depth: int) -> "CantorSpec":
        return cls(2, (0, 1), depth)

    @property
    def dimension(self) -> float:
        if len(self.digits) == 1:
            return 0.0
        return math.log(len(self.digits)) / math.log(self.base)

    @property
    def expected_length(self) -> Fraction:
        return Fraction(len(self.digits), self.base) ** self.depth

    def to_dict(self) -> dict:
        return {
            "base": self.base,
            "digits": list(self.digits),
            "depth": self.depth,
            "dimension": f"{self.dimension:.6f}",
        }


def cantor_cover(spec: CantorSpec) -> IntervalCover:
    """The |D|^n generator intervals of length b^-n at depth n, uniformly weighted"""
    starts = [Fraction(0)]
    for level in range(1, spec.depth + 1):
        scale = Fraction(1, spec.base ** level)
        starts = [s + d * scale for s in starts for d in spec.digits]
    length = Fraction(1, spec.base ** spec.depth)
    return IntervalCover(tuple((s, s + length) for s in starts))


def union_length(intervals: Sequence[Interval]) -> Fraction:
    """Exact length of a union of closed intervals by sort-and-sweep"""
    total = Fraction(0)
    current_lo = current_hi = None
    for lo, hi in sorted(intervals):
        if current_hi is None or lo > current_hi:
            if current_hi is not None:
                total += current_hi - current_lo
            current_lo, current_hi = lo, hi
        elif hi > current_hi:
            current_hi = hi
    if current_hi is not None:
        total += current_hi - current_lo
    return total


# ============================================================================
# Exact ranges of quadratics over boxes
# ============================================================================

def _hessian(f: Quadratic3) -> Tuple[List[List[Fraction]], List[Fraction]]:
    H = [
        [2 * f.d, f.a, f.b],
        [f.a, 2 * f.e, f.c],
        [f.b, f.c, 2 * f.g],
    ]
    return H, [f.h, f.i, f.j]


def variable_groups(f: Quadratic3) -> Tuple[Tuple[int, ...], ...]:
    """Connected components of the cross-term graph on (x, y, z)"""
    parent = [0, 1, 2]

    def find(k: int) -> int:
        while parent[k] != k:
            k = parent[k]
        return k

    for (p, q), coeff in (((0, 1), f.a), ((0, 2), f.b), ((1, 2), f.c)):
        if coeff != 0:
            parent[find(q)] = find(p)
    groups: Dict[int, List[int]] = {}
    for k in range(3):
        groups.setdefault(find(k), []).append(k)
    return tuple(tuple(g) for g in sorted(groups.values()))


def _inverse(m: List[List[Fraction]]) -> Optional[List[List[Fraction]]]:
    n = len(m)
    columns = []
    for k in range(n):
        col = solve_linear(m, [1 if r == k else 0 for r in range(n)])
        if col is None:
            return None
        columns.append(col)
    return [[columns[c][r] for c in range(n)] for r in range(n)]


class RangeSolver:
    """Exact min and max of the part of f living on a group of coordinates, over boxes

    Extrema of a quadratic over a box sit at critical points of the restriction to some
    face. Faces whose restricted Hessian is singular are skipped: any critical set there
    is an affine piece on which f is constant and which reaches a smaller face.
    """

    def __init__(self, f: Quadratic3, coords: Sequence[int]):
        H, g = _hessian(f)
        self.coords = tuple(coords)
        n = len(self.coords)
        self.H = [[H[r][c] for c in self.coords] for r in self.coords]
        self.g = [g[r] for r in self.coords]
        self.faces = []
        for mask in range(2 ** n):
            free = tuple(k for k in range(n) if mask >> k & 1)
            fixed = tuple(k for k in range(n) if not mask >> k & 1)
            inverse = None
            if free:
                inverse = _inverse([[self.H[r][c] for c in free] for r in free])
                if inverse is None:
                    continue
            self.faces.append((free, fixed, inverse))

    def value(self, v: Sequence[Fraction]) -> Fraction:
        n = len(v)
        total = Fraction(0)
        for r in range(n):
            total += (self.H[r][r] / 2 * v[r] + self.g[r]) * v[r]
            for c in range(r + 1, n):
                if self.H[r][c]:
                    total += self.H[r][c] * v[r] * v[c]
        return total

    def range(self, box: Sequence[Interval]) -> Interval:
        n = len(self.coords)
        lowest = highest = None
        for free, fixed, inverse in self.faces:
            for corner in product(*(box[k] for k in fixed)):
                v: List[Optional[Fraction]] = [None] * n
                for k, val in zip(fixed, corner):
                    v[k] = val
                if free:
                    rhs = [-(self.g[r] + sum((self.H[r][k] * v[k] for k in fixed), Fraction(0))) for r in free]
                    inside = True
                    for row, k in zip(inverse, free):
                        v[k] = sum((a * b for a, b in zip(row, rhs)), Fraction(0))
                        if not box[k][0] <= v[k] <= box[k][1]:
                            inside = False
                            break
                    if not inside:
                        continue
                val = self.value(v)
                if lowest is None or val < lowest:
                    lowest = val
                if highest is None or val > highest:
                    highest = val
        return lowest, highest


@lru_cache(maxsize=64)
def _solvers(f: Quadratic3) -> Tuple[RangeSolver, ...]:
    return tuple(RangeSolver(f, group) for group in variable_groups(f))


def box_range(f: Quadratic3, box: Sequence[Interval]) -> Interval:
    """Exact [min, max] of f over the closed box [x0,x1] x [y0,y1] x [z0,z1]"""
    if len(box) != 3:
        raise ValidationError("box_range needs one interval per variable x, y, z")
    box = [(as_rational(lo), as_rational(hi)) for lo, hi in box]
    lo = hi = f.k0
    for solver in _solvers(f):
        a, b = solver.range([box[k] for k in solver.coords])
        lo, hi = lo + a, hi + b
    return lo, hi


def _box_ranges(f: Quadratic3, covers: Sequence[IntervalCover]) -> Tuple[List[Fraction], List[Fraction]]:
    """Ranges of f over every box of covers[0] x covers[1] x covers[2], in product order

    Each variable group is solved once per distinct group box and the partial ranges
    are summed, so the cost grows with the group products rather than the full product.
    """
    group_ranges = []
    for solver in _solvers(f):
        ranges = [solver.range(list(sub)) for sub in product(*(covers[k].intervals for k in solver.coords))]
        group_ranges.append((solver.coords, ranges))
    # combine the group ranges along the x, y, z product order
    counts = [len(c) for c in covers]
    total = counts[0] * counts[1] * counts[2]
    index = np.arange(total)
    digits = [index // (counts[1] * counts[2]), index // counts[2] % counts[1], index % counts[2]]
    lows = [f.k0] * total
    highs = [f.k0] * total
    for coords, ranges in group_ranges:
        flat = np.zeros(total, dtype=np.int64)
        for k in coords:
            flat = flat * counts[k] + digits[k]
        for pos, slot in enumerate(flat.tolist()):
            a, b = ranges[slot]
            lows[pos] += a
            highs[pos] += b
    return lows, highs


def _check_budget(covers: Sequence[IntervalCover], budget: int, what: str) -> int:
    required = 1
    for cover in covers:
        required *= len(cover)
    if required > budget:
        raise BudgetExceededError(required, budget, what)
    return required


def image_measure(
    f: Quadratic3,
    cover_a: IntervalCover,
    cover_b: IntervalCover,
    cover_c: IntervalCover,
    budget: int = DEFAULT_FRACTAL_BUDGET,
) -> Fraction:
    """Exact length of the union of f over all cover boxes; an upper estimate of |f(A, B, C)|"""
    covers = (cover_a, cover_b, cover_c)
    boxes = _check_budget(covers, budget, "image_measure boxes")
    log_debug(f"image of {f} over {boxes} boxes", "FRACTAL")
    lows, highs = _box_ranges(f, covers)
    return union_length(list(zip(lows, highs)))


# ============================================================================
# Epsilon mass
# ============================================================================

class _SideRanges:
    """Box ranges for one side of f(x,y,z) - f(x',y',z'), with sorted endpoints for counting"""

    def __init__(self, f: Quadratic3, covers: Sequence[IntervalCover]):
        for cover in covers:
            if not cover.weighted:
                raise ValidationError("near_zero_mass needs weighted covers")
        self.lows, self.highs = _box_ranges(f, covers)
        self.weight = covers[0].weight * covers[1].weight * covers[2].weight
        self.sorted_lows = sorted(self.lows)
        self.sorted_highs = sorted(self.highs)


def _common_scale(values: Sequence[Sequence[Fraction]]) -> Optional[int]:
    scale = 1
    bound = 0
    for group in values:
        for v in group:
            scale = math.lcm(scale, v.denominator)
            bound = max(bound, abs(v.numerator) // v.denominator + 1)
    if scale * bound * 4 >= _INT64_HEADROOM:
        return None
    return scale


def _close_pair_count(one: _SideRanges, two: _SideRanges, epsilon: Fraction) -> int:
    # pairs with lo' <= hi + 2eps minus those with hi' < lo - 2eps
    gap = 2 * epsilon
    scale = _common_scale([one.lows, one.highs, two.lows, two.highs, [gap]])
    if scale is not None:
        def scaled(xs):
            return np.array([x.numerator * (scale // x.denominator) for x in xs], dtype=np.int64)

        g = gap.numerator * (scale // gap.denominator)
        lo1, hi1 = scaled(one.lows), scaled(one.highs)
        lo2, hi2 = scaled(two.sorted_lows), scaled(two.sorted_highs)
        reach = np.searchsorted(lo2, hi1 + g, side="right")
        below = np.searchsorted(hi2, lo1 - g, side="left")
        return int((reach - below).sum())
    count = 0
    for lo, hi in zip(one.lows, one.highs):
        count += bisect.bisect_right(two.sorted_lows, hi + gap) - bisect.bisect_left(two.sorted_highs, lo - gap)
    return count


@dataclass(frozen=True)
class MassRow:
    epsilon: Fraction
    pairs: int
    mass: Fraction

    @property
    def ratio(self) -> Fraction:
        return self.mass / self.epsilon

    def as_csv_row(self) -> list:
        return [format_rational(self.epsilon), self.pairs, format_rational(self.mass),
                format_rational(self.ratio), f"{float(self.ratio):.6f}"]


MASS_HEADER = ["epsilon", "pairs", "mass", "ratio", "ratio_float"]


def decay_table(
    f: Quadratic3,
    covers: Sequence[IntervalCover],
    primed_covers: Sequence[IntervalCover],
    epsilons: Sequence[Scalar],
    budget: int = DEFAULT_FRACTAL_BUDGET,
) -> List[MassRow]:
    """Product weight of box pairs where |f - f'| <= 2*eps is possible, one row per eps"""
    if len(covers) != 3 or len(primed_covers) != 3:
        raise ValidationError("near_zero_mass needs three covers per side")
    try:
        epsilons = [as_rational(e) for e in epsilons]
    except (TypeError, ValueError, ZeroDivisionError) as e:
        raise ValidationError(f"epsilon must be a rational like 1/16: {e}") from e
    if any(e <= 0 for e in epsilons):
        raise ValidationError("epsilon must be positive")
    _check_budget(covers, budget, "near_zero_mass boxes")
    _check_budget(primed_covers, budget, "near_zero_mass boxes")

    one = _SideRanges(f, covers)
    two = one if tuple(primed_covers) == tuple(covers) else _SideRanges(f, primed_covers)
    log_step(f"epsilon mass of {f}: {len(one.lows)} x {len(two.lows)} box pairs", "FRACTAL")

    rows = []
    for epsilon in epsilons:
        pairs = _close_pair_count(one, two, epsilon)
        rows.append(MassRow(epsilon, pairs, pairs * one.weight * two.weight))
        log_debug(f"eps={format_rational(epsilon)}: {pairs} close pairs", "FRACTAL")
    return rows


def near_zero_mass(
    f: Quadratic3,
    covers: Sequence[IntervalCover],
    primed_covers: Sequence[IntervalCover],
    epsilon: Scalar,
    budget: int = DEFAULT_FRACTAL_BUDGET,
) -> Fraction:
    """mass{|f(x,y,z) - f(x',y',z')| <= 2*eps} / eps over the weighted covers"""
    return decay_table(f, covers, primed_covers, [epsilon], budget)[0].ratio


# ============================================================================
# Sharpness
# ============================================================================

@dataclass(frozen=True)
class SharpnessRow:
    depth: int
    measure: Fraction
    dimension_sum: float

    def as_csv_row(self) -> list:
        return [self.depth, format_rational(self.measure), f"{float(self.measure):.6f}", f"{self.dimension_sum:.6f}"]


SHARPNESS_HEADER = ["depth", "measure", "measure_float", "dimension_sum"]

SHARPNESS_POLYNOMIAL = "x*y + z"


def sharpness_demo(depth: int, base: int = 3, budget: int = DEFAULT_FRACTAL_BUDGET) -> List[SharpnessRow]:
    """Image measure of xy + z on {0} x [0,1] x C_k for k = 1..depth, C_k the near-full Cantor cover"""
    if depth < 1:
        raise ValidationError("sharpness depth must be at least 1")
    f = Quadratic3.parse(SHARPNESS_POLYNOMIAL)
    rows = []
    for k in range(1, depth + 1):
        spec = CantorSpec.near_full(base, k)
        measure = image_measure(f, IntervalCover.point(0), IntervalCover.full(0, 1), cantor_cover(spec), budget)
        rows.append(SharpnessRow(k, measure, 1 + spec.dimension))
    return rows


# ============================================================================
# Dimension thresholds
# ============================================================================

class BoundKind(str, Enum):
    IDENTITY = "identity"   # dim of the set itself
    TRIVIAL = "trivial"     # dim >= 0
    LIU = "liu"             # dim Delta(A^k) >= min(4/3 * k*s - 2/3, 1) when k*s > 1


LIU_SLOPE = Fraction(4, 3)
LIU_OFFSET = Fraction(2, 3)


@dataclass(frozen=True)
class Slot:
    bound: BoundKind
    power: int = 1

    def __post_init__(self):
        object.__setattr__(self, "bound", BoundKind(self.bound))
        if not isinstance(self.power, int) or self.power < 1:
            raise ChainError(f"slot power must be a positive integer, got {self.power!r}")

    def breakpoints(self) -> List[Fraction]:
        if self.bound is not BoundKind.LIU:
            return []
        return [Fraction(1, self.power), (1 + LIU_OFFSET) / (LIU_SLOPE * self.power)]

    def value(self, s: Fraction) -> Fraction:
        if self.bound is BoundKind.IDENTITY:
            return s
        if self.bound is BoundKind.TRIVIAL:
            return Fraction(0)
        ks = self.power * s
        if ks <= 1:
            return Fraction(0)
        return min(LIU_SLOPE * ks - LIU_OFFSET, Fraction(1))

    def describe(self) -> str:
        if self.bound is BoundKind.IDENTITY:
            return "s"
        if self.bound is BoundKind.TRIVIAL:
            return "0"
        k = "" if self.power == 1 else f"{self.power}*"
        return f"min(4/3*{k}s - 2/3, 1) if {k}s > 1 else 0"


@dataclass(frozen=True)
class ThresholdChain:
    """inf{s in [0, 1] : sum of slot bounds at s >= target}"""

    name: str
    slots: Tuple[Slot, ...]
    target: Fraction = Fraction(2)

    def __post_init__(self):
        if not self.slots:
            raise ChainError(f"chain {self.name!r} has no slots")
        object.__setattr__(self, "slots", tuple(self.slots))
        object.__setattr__(self, "target", as_rational(self.target))

    @classmethod
    def from_dict(cls, data: dict, default_name: str = "custom") -> "ThresholdChain":
        """{"name": ..., "target": 2, "slots": [{"bound": "liu", "power": 2}, ...]}"""
        if not isinstance(data, dict) or not isinstance(data.get("slots"), list):
            raise ChainError("a chain needs a 'slots' list")
        try:
            slots = tuple(Slot(entry["bound"], entry.get("power", 1)) for entry in data["slots"])
            target = as_rational(str(data.get("target", 2)))
        except (KeyError, TypeError, ValueError, AttributeError, ZeroDivisionError) as e:
            raise ChainError(f"malformed chain: {e}") from e
        return cls(data.get("name", default_name), slots, target)

    def total(self, s: Fraction) -> Fraction:
        return sum((slot.value(s) for slot in self.slots), Fraction(0))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "target": format_rational(self.target),
            "slots": [{"bound": slot.bound.value, "power": slot.power, "expression": slot.describe()}
                      for slot in self.slots],
        }


CHAIN_PRESETS: Dict[str, ThresholdChain] = {
    "distance-bound": ThresholdChain(
        "distance-bound",
        (Slot(BoundKind.IDENTITY), Slot(BoundKind.IDENTITY), Slot(BoundKind.LIU, 2)),
    ),
    "all-identity": ThresholdChain(
        "all-identity",
        (Slot(BoundKind.IDENTITY), Slot(BoundKind.IDENTITY), Slot(BoundKind.IDENTITY)),
    ),
    "trivial-distance": ThresholdChain(
        "trivial-distance",
        (Slot(BoundKind.IDENTITY), Slot(BoundKind.IDENTITY), Slot(BoundKind.TRIVIAL)),
    ),
}


# names the same chains are published under
CHAIN_ALIASES: Dict[str, str] = {
    "corollary-1.4": "distance-bound",
    "theorem-1.2": "all-identity",
}


def chain_names() -> List[str]:
    return sorted(set(CHAIN_PRESETS) | set(CHAIN_ALIASES))


def chain_preset(name: str) -> ThresholdChain:
    name = CHAIN_ALIASES.get(name, name)
    if name not in CHAIN_PRESETS:
        raise ChainError(f"unknown chain {name!r}; choose from {chain_names()}")
    return CHAIN_PRESETS[name]


def load_chain(path: Union[str, Path]) -> ThresholdChain:
    """Read a json5 chain file: {"name": ..., "target": 2, "slots": [{"bound": "liu", "power": 2}, ...]}"""
    path = Path(path)
    try:
        data = json5.loads(path.read_text())
    except (OSError, ValueError) as e:
        raise ChainError(f"cannot read chain file {path}: {e}") from e
    return ThresholdChain.from_dict(data, path.stem)


def dimension_threshold(chain: ThresholdChain) -> Fraction:
    """Exact infimum of the s in [0, 1] where the chained bounds reach the target"""
    points = {Fraction(0), Fraction(1)}
    for slot in chain.slots:
        points.update(b for b in slot.breakpoints() if 0 < b < 1)
    points = sorted(points)

    if chain.total(points[0]) >= chain.target:
        return points[0]
    for left, right in zip(points, points[1:]):
        # every slot is affine on the open segment; read slope and intercept off two interior points
        p1, p2 = left + (right - left) / 3, left + 2 * (right - left) / 3
        v1, v2 = chain.total(p1), chain.total(p2)
        slope = (v2 - v1) / (p2 - p1)
        intercept = v1 - slope * p1
        at_right = slope * right + intercept
        if at_right >= chain.target:
            if slope == 0:
                return left
            return max(left, (chain.target - intercept) / slope)
        if chain.total(right) >= chain.target:
            return right
    raise ChainError(
        f"chain {chain.name!r} never reaches {format_rational(chain.target)} on [0, 1] "
        f"(total at s=1 is {format_rational(chain.total(Fraction(1)))})"
    )


def eit_threshold(l: int) -> Fraction:
    """(l + 2) / (2l), the Falconer threshold for even-degree l >= 4 curvature kernels"""
    if not isinstance(l, int) or l < 4 or l % 2:
        raise ValidationError(f"l must be an even integer >= 4, got {l!r}")
    return Fraction(l + 2, 2 * l)
