"""Simplex primitives: discrete and continuous simplex points, composition
enumeration, the multinomial log-pmf, and KL divergences.

All probability arithmetic runs in natural-log space through the log-gamma
function. Exact big-rational cross-checks live in the test suite only.
"""
from __future__ import annotations

import math
import sys
from dataclasses import InitVar, dataclass
from functools import lru_cache
from itertools import combinations
from typing import Iterator

import numpy as np
from scipy.special import gammaln

#: tolerance on |sum(probs) - 1| accepted at SimplexPoint construction
SUM_TOL = 1e-12

#: two outcomes count as equiprobable when their log-pmfs are this close
LOG_TIE_TOL = 1e-9

# Finite stand-in for log(0) in vectorized matmul paths. exp() of anything
# at this scale underflows to exactly 0.0, and 0 * _LOG_ZERO is 0.0 rather
# than the nan produced by 0 * (-inf).
_LOG_ZERO = -1e18


@dataclass(frozen=True, order=True)
class EmpiricalDistribution:
    """Per-category counts observed in a sample; an element of the discrete
    simplex. Ordering is lexicographic on the count vector."""

    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        counts = tuple(int(c) for c in self.counts)
        if len(counts) < 1:
            raise ValueError("need at least one category")
        if any(c < 0 for c in counts):
            raise ValueError(f"counts must be nonnegative, got {counts}")
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def k(self) -> int:
        return len(self.counts)

    def as_point(self) -> "SimplexPoint":
        """Rescale the counts to a point on the continuous simplex."""
        n = self.n
        if n == 0:
            raise ValueError("cannot rescale an empty sample to the simplex")
        return SimplexPoint(tuple(c / n for c in self.counts))


@dataclass(frozen=True)
class SimplexPoint:
    """A point of the probability simplex: nonnegative entries summing to 1.

    Construction rejects vectors whose sum is off by more than SUM_TOL
    unless ``normalize=True`` is passed; silent renormalization hides
    caller bugs.
    """

    probs: tuple[float, ...]
    normalize: InitVar[bool] = False

    def __post_init__(self, normalize: bool) -> None:
        probs = tuple(float(x) for x in self.probs)
        if len(probs) < 1:
            raise ValueError("need at least one category")
        if any(x < 0.0 for x in probs):
            raise ValueError(f"probabilities must be nonnegative, got {probs}")
        total = math.fsum(probs)
        if normalize:
            if total <= 0.0:
                raise ValueError("cannot normalize a zero vector")
            probs = tuple(x / total for x in probs)
            total = math.fsum(probs)
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(
                f"probabilities sum to {total!r}; pass normalize=True to rescale"
            )
        object.__setattr__(self, "probs", probs)

    @property
    def k(self) -> int:
        return len(self.probs)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)

    @classmethod
    def uniform(cls, k: int) -> "SimplexPoint":
        return cls((1.0 / k,) * k)


def simplex_size(k: int, n: int) -> int:
    """Number of count vectors of length k summing to n."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if n < 0:
        raise ValueError("n must be >= 0")
    return math.comb(n + k - 1, k - 1)


def iter_compositions(k: int, n: int) -> Iterator[tuple[int, ...]]:
    """Yield all count vectors of length k summing to n, lexicographically
    ascending. The bars-and-stars bijection keeps this allocation-light."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if n < 0:
        raise ValueError("n must be >= 0")
    if k == 1:
        yield (n,)
        return
    for bars in combinations(range(n + k - 1), k - 1):
        prev = -1
        out = []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(n + k - 2 - prev)
        yield tuple(out)


@lru_cache(maxsize=8)
def compositions_array(k: int, n: int) -> np.ndarray:
    """All count vectors of Delta_{k,n} as a read-only (size, k) int array,
    rows in lexicographic order. Cached; callers must not modify."""
    size = simplex_size(k, n)
    if k == 1:
        arr = np.array([[n]], dtype=np.int64)
        arr.setflags(write=False)
        return arr
    bars = np.fromiter(
        combinations(range(n + k - 1), k - 1),
        dtype=np.dtype((np.int64, k - 1)),
        count=size,
    ).reshape(size, k - 1)
    arr = np.empty((size, k), dtype=np.int64)
    arr[:, 0] = bars[:, 0]
    if k > 2:
        arr[:, 1 : k - 1] = bars[:, 1:] - bars[:, :-1] - 1
    arr[:, k - 1] = n + k - 2 - bars[:, -1]
    arr.setflags(write=False)
    return arr


def enumerate_simplex(k: int, n: int) -> list[EmpiricalDistribution]:
    """All empirical distributions from n samples over k categories, in
    lexicographic order. n = 0 gives the single all-zero count vector."""
    size = simplex_size(k, n)
    if size > sys.maxsize:
        raise OverflowError(
            f"enumerating Delta_({k},{n}) needs capacity for {size} elements, "
            f"beyond the platform integer range {sys.maxsize}"
        )
    return [EmpiricalDistribution(c) for c in iter_compositions(k, n)]


def log_pmf(phat: EmpiricalDistribution, p: SimplexPoint) -> float:
    """Natural log of the multinomial probability of observing ``phat``
    under parameter ``p``. Exactly -inf when some positive count sits on a
    zero-probability category; zero counts contribute nothing."""
    if phat.k != p.k:
        raise ValueError(f"dimension mismatch: {phat.k} counts vs {p.k} probabilities")
    n = phat.n
    s = math.lgamma(n + 1) - math.fsum(math.lgamma(c + 1) for c in phat.counts)
    for c, x in zip(phat.counts, p.probs):
        if c == 0:
            continue
        if x == 0.0:
            return float("-inf")
        s += c * math.log(x)
    return s


def log_pmf_array(counts: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """Vectorized multinomial log-pmf of many count rows under one p.

    Rows with a positive count on a zero-probability category come back
    as exactly -inf.
    """
    counts = np.asarray(counts)
    p = np.asarray(probs, dtype=float)
    if counts.shape[1] != p.shape[0]:
        raise ValueError("dimension mismatch between counts and probabilities")
    n = counts.sum(axis=1)
    logcoef = gammaln(n + 1) - gammaln(counts + 1).sum(axis=1)
    w = np.where(p > 0.0, np.log(np.where(p > 0.0, p, 1.0)), _LOG_ZERO)
    out = logcoef + counts @ w
    return np.where(out <= _LOG_ZERO / 2, -np.inf, out)


def kl_divergence(p: SimplexPoint, q: SimplexPoint) -> float:
    """KL(p, q) in nats with the 0 log 0 = 0 convention; +inf when p puts
    mass where q has none."""
    if p.k != q.k:
        raise ValueError(f"dimension mismatch: {p.k} vs {q.k}")
    if p.probs == q.probs:
        return 0.0
    terms = []
    for a, b in zip(p.probs, q.probs):
        if a == 0.0:
            continue
        if b == 0.0:
            return float("inf")
        terms.append(a * math.log(a / b))
    return max(0.0, math.fsum(terms))


def kl_bernoulli(a: float, b: float) -> float:
    """Two-point KL divergence between Bernoulli(a) and Bernoulli(b)."""
    if not (0.0 <= a <= 1.0) or not (0.0 <= b <= 1.0):
        raise ValueError(f"arguments must lie in [0, 1], got {a}, {b}")
    if a == b:
        return 0.0
    s = 0.0
    if a > 0.0:
        if b == 0.0:
            return float("inf")
        s += a * math.log(a / b)
    if a < 1.0:
        if b == 1.0:
            return float("inf")
        s += (1.0 - a) * math.log((1.0 - a) / (1.0 - b))
    return max(0.0, s)


def kl_to_many(p: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """KL(p, q) of one distribution p against many rows q, vectorized."""
    p = np.asarray(p, dtype=float)
    rows = np.asarray(rows, dtype=float)
    mask = p > 0.0
    pm = p[mask]
    with np.errstate(divide="ignore"):
        lq = np.log(rows[:, mask])
    return (pm * (np.log(pm) - lq)).sum(axis=1)


def kl_bernoulli_many(a: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Elementwise two-point KL of marginals a_j against rows[:, j]."""
    a = np.asarray(a, dtype=float)
    rows = np.asarray(rows, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(a > 0.0, a * (np.log(a) - np.log(rows)), 0.0)
        t2 = np.where(
            a < 1.0, (1.0 - a) * (np.log1p(-a) - np.log1p(-rows)), 0.0
        )
    return t1 + t2


def kahan_cumsum(values: np.ndarray) -> np.ndarray:
    """Running sums with Kahan compensation; the 1 - delta comparisons
    downstream must not flip on accumulated rounding."""
    out = np.empty(len(values), dtype=float)
    total = 0.0
    comp = 0.0
    for i, v in enumerate(values):
        y = float(v) - comp
        t = total + y
        comp = (t - total) - y
        total = t
        out[i] = total
    return out


@lru_cache(maxsize=8)
def _grid_points(k: int, resolution: int) -> np.ndarray:
    pts = compositions_array(k, resolution) / float(resolution)
    pts.setflags(write=False)
    return pts


@dataclass(frozen=True)
class SimplexGrid:
    """The rational grid on the simplex at a given resolution: every count
    vector summing to ``resolution``, rescaled by 1/resolution."""

    k: int
    resolution: int

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.resolution < 1:
            raise ValueError("resolution must be >= 1")

    def __len__(self) -> int:
        return simplex_size(self.k, self.resolution)

    @property
    def points(self) -> np.ndarray:
        """Read-only (len, k) array of grid points."""
        return _grid_points(self.k, self.resolution)

    def __iter__(self) -> Iterator[SimplexPoint]:
        for row in self.points:
            yield SimplexPoint(tuple(row))
