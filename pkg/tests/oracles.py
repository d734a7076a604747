"""Independent oracles for the test suite: exact big-rational pmf sums,
exhaustive subset search for minimal covering cardinality, and a
one-dimensional boundary-bisection measure for k = 2 regions. These stay
deliberately separate from the library's log-space code paths."""
from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations, islice

import numpy as np

from simplexcr import SimplexPoint, member_of_covering
from simplexcr.core import iter_compositions


def exact_pmf(counts, probs: tuple[Fraction, ...]) -> Fraction:
    n = sum(counts)
    coef = math.factorial(n)
    for c in counts:
        coef //= math.factorial(c)
    val = Fraction(coef)
    for c, q in zip(counts, probs):
        if c:
            val *= Fraction(q) ** c
    return val


def exact_log_pmf(counts, probs: tuple[Fraction, ...]) -> float:
    val = exact_pmf(counts, probs)
    if val == 0:
        return float("-inf")
    return math.log(val.numerator) - math.log(val.denominator)


def exact_p_value(phat_counts, probs: tuple[Fraction, ...]) -> Fraction:
    k, n = len(phat_counts), sum(phat_counts)
    target = exact_pmf(phat_counts, probs)
    total = Fraction(0)
    for counts in iter_compositions(k, n):
        v = exact_pmf(counts, probs)
        if v <= target:
            total += v
    return total


def random_rational_point(rng: np.random.Generator, k: int, denom: int = 50):
    """A strictly positive rational simplex point with small denominators."""
    while True:
        raw = rng.integers(1, denom, size=k)
        total = int(raw.sum())
        fracs = tuple(Fraction(int(a), total) for a in raw)
        if sum(fracs) == 1:
            return fracs


def point_from_fractions(fracs) -> SimplexPoint:
    return SimplexPoint(tuple(float(f) for f in fracs), normalize=True)


def min_covering_size_bruteforce(probs, target: float, chunk: int = 200_000) -> int:
    """Smallest subset cardinality whose mass reaches the target, found by
    exhausting all subsets level by level (vectorized in chunks)."""
    probs = np.asarray(probs, dtype=float)
    n = len(probs)
    for m in range(1, n + 1):
        it = combinations(range(n), m)
        while True:
            block = list(islice(it, chunk))
            if not block:
                break
            idx = np.array(block, dtype=np.int64)
            if (probs[idx].sum(axis=1) >= target).any():
                return m
    return n


def k2_region_measure_bisection(phat, delta: float, coarse: int = 4000) -> float:
    """Lebesgue measure of {p1 : (p1, 1-p1) in the level-set region of phat},
    by coarse scanning for membership transitions and bisecting each one."""

    def inside(x: float) -> bool:
        return member_of_covering(phat, SimplexPoint((x, 1.0 - x)), delta)

    xs = np.linspace(0.0, 1.0, coarse + 1)
    flags = [inside(float(x)) for x in xs]
    measure = 0.0
    start = None
    for i, (x, flag) in enumerate(zip(xs, flags)):
        if flag and start is None:
            if i == 0:
                start = 0.0
            else:
                start = _bisect_edge(inside, xs[i - 1], x, want_inside_right=True)
        elif not flag and start is not None:
            end = _bisect_edge(inside, xs[i - 1], x, want_inside_right=False)
            measure += end - start
            start = None
    if start is not None:
        measure += 1.0 - start
    return measure


def _bisect_edge(inside, lo: float, hi: float, want_inside_right: bool) -> float:
    # invariant: inside(hi) == want_inside_right != inside(lo)
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        if inside(mid) == want_inside_right:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
