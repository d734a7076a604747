"""Confidence-region constructions on the simplex.

The central object is the probability-ordered covering collection: the
shortest prefix of outcomes, sorted by probability under p, whose mass
reaches 1 - delta. Inverting that collection gives the minimal
average-volume confidence region; KL-based Sanov and per-marginal polytope
regions are provided as baselines, together with the exact p-value, a
chi-square prefilter, and a sound KL outer bound used to accelerate
membership queries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln
from scipy.stats import chi2

from .core import (
    LOG_TIE_TOL,
    _LOG_ZERO,
    EmpiricalDistribution,
    SimplexPoint,
    compositions_array,
    kahan_cumsum,
    kl_bernoulli,
    kl_bernoulli_many,
    kl_divergence,
    kl_to_many,
    log_pmf_array,
)

KINDS = ("levelset", "sanov", "polytope")

# Entry budget per vectorized log-pmf batch; keeps transient matrices
# around 160 MB.
_BATCH_ENTRIES = 20_000_000


@dataclass(frozen=True)
class RegionSpec:
    """Which region to build: error level, construction kind, and the
    sampling regime (n draws over k categories)."""

    delta: float
    kind: str
    n: int
    k: int

    def __post_init__(self) -> None:
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.n < 0:
            raise ValueError("n must be >= 0")


@dataclass(frozen=True)
class CoveringCollection:
    """Minimal prefix of the probability-descending outcome ordering whose
    cumulative mass reaches 1 - delta. Ties in probability are ordered
    lexicographically on counts, so the collection is deterministic."""

    members: tuple[EmpiricalDistribution, ...]
    cumulative: tuple[float, ...]
    total_mass: float
    p: SimplexPoint
    delta: float

    def __post_init__(self) -> None:
        target = 1.0 - self.delta
        if self.total_mass < target:
            raise ValueError(
                f"collection mass {self.total_mass} below required {target}"
            )
        if len(self.members) > 1 and self.cumulative[-2] >= target:
            raise ValueError("prefix is not minimal: last member is redundant")

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, phat: EmpiricalDistribution) -> bool:
        return phat in self.members


def _probability_ordering(counts: np.ndarray, logp: np.ndarray) -> np.ndarray:
    """Indices sorting outcomes by probability descending; outcomes whose
    log-probabilities agree within LOG_TIE_TOL are ordered lexicographically
    ascending on their count vectors."""
    k = counts.shape[1]
    keys = [counts[:, j] for j in range(k - 1, -1, -1)] + [-logp]
    order = np.lexsort(keys)
    sorted_logp = logp[order]
    # Exact float ties are already lex-ordered by the sort keys; re-sort any
    # run of near-ties that spans distinct float values.
    start = 0
    m = len(order)
    for i in range(1, m + 1):
        boundary = i == m
        if not boundary:
            a, b = sorted_logp[i - 1], sorted_logp[i]
            boundary = not (a == b or a - b <= LOG_TIE_TOL)
        if boundary:
            if i - start > 1:
                run = order[start:i]
                sub_keys = [counts[run, j] for j in range(k - 1, -1, -1)]
                order[start:i] = run[np.lexsort(sub_keys)]
            start = i
    return order


def covering_collection(
    p: SimplexPoint, n: int, delta: float
) -> CoveringCollection:
    """Build the covering collection for p at error level delta: order the
    n-sample outcomes by probability under p and keep the shortest prefix
    with mass at least 1 - delta."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    counts = compositions_array(p.k, n)
    logp = log_pmf_array(counts, p.as_array())
    order = _probability_ordering(counts, logp)
    probs = np.exp(logp[order])
    cum = kahan_cumsum(probs)
    target = 1.0 - delta
    ell = int(np.searchsorted(cum, target, side="left"))
    if ell >= len(cum):
        ell = len(cum) - 1  # rounding guard; the full sum is always >= target
    members = tuple(
        EmpiricalDistribution(tuple(counts[i])) for i in order[: ell + 1]
    )
    return CoveringCollection(
        members=members,
        cumulative=tuple(float(c) for c in cum[: ell + 1]),
        total_mass=float(cum[ell]),
        p=p,
        delta=delta,
    )


def _composition_index(counts: np.ndarray, target: tuple[int, ...]) -> int:
    hit = np.flatnonzero((counts == np.asarray(target)).all(axis=1))
    if len(hit) != 1:
        raise ValueError(
            f"counts {target} are not an n={counts[0].sum()} outcome"
        )
    return int(hit[0])


def member_of_covering(
    phat: EmpiricalDistribution, p: SimplexPoint, delta: float
) -> bool:
    """Decide phat in S(p) without materializing the sorted ordering.

    Sums the mass G of outcomes ranked before phat (strictly more probable,
    or tied within LOG_TIE_TOL and lexicographically earlier); phat belongs
    to the prefix iff G < 1 - delta.
    """
    if phat.k != p.k:
        raise ValueError(f"dimension mismatch: {phat.k} vs {p.k}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    counts = compositions_array(p.k, phat.n)
    logp = log_pmf_array(counts, p.as_array())
    idx = _composition_index(counts, phat.counts)
    q = logp[idx]
    with np.errstate(invalid="ignore"):
        diff = logp - q  # -inf minus -inf gives nan; both comparisons reject it
    more = diff > LOG_TIE_TOL
    tie = np.abs(diff) <= LOG_TIE_TOL
    lex_earlier = np.arange(len(counts)) < idx
    sel = more | (tie & lex_earlier)
    mass = math.fsum(np.exp(logp[sel]))
    return mass < 1.0 - delta


def p_value(phat: EmpiricalDistribution, p: SimplexPoint) -> float:
    """Exact p-value of phat under p: total probability of phat and every
    outcome no more probable than it (ties resolved within LOG_TIE_TOL)."""
    if phat.k != p.k:
        raise ValueError(f"dimension mismatch: {phat.k} vs {p.k}")
    counts = compositions_array(p.k, phat.n)
    logp = log_pmf_array(counts, p.as_array())
    idx = _composition_index(counts, phat.counts)
    q = logp[idx]
    include = logp <= q + LOG_TIE_TOL
    if bool(include.all()):
        return 1.0  # no outcome is more probable; the sum is exactly total mass
    return min(1.0, math.fsum(np.exp(logp[include])))


def level_set_membership_via_pvalue(
    p: SimplexPoint, phat: EmpiricalDistribution, delta: float
) -> bool:
    """Membership through the p-value characterization: p is kept iff the
    p-value of phat under p exceeds delta.

    Differs from member_of_covering only when 1 - delta falls strictly
    inside phat's probability-tie class, where the prefix rule splits a tie
    class that the p-value rule keeps whole.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return p_value(phat, p) > delta


def outer_bound_reject(
    phat: EmpiricalDistribution, p: SimplexPoint, delta: float
) -> bool:
    """Sound rejection test: true only when the method-of-types bound
    (n+1)^(2k) exp(-n KL(phat, p)) is at most delta, which forces the exact
    p-value at or below delta. Evaluated in log space."""
    if phat.k != p.k:
        raise ValueError(f"dimension mismatch: {phat.k} vs {p.k}")
    n, k = phat.n, phat.k
    if n == 0:
        return False
    div = kl_divergence(phat.as_point(), p)
    if math.isinf(div):
        return True
    return 2.0 * k * math.log(n + 1) - n * div <= math.log(delta)


def chi2_prefilter(phat: EmpiricalDistribution, p: SimplexPoint) -> float:
    """Approximate p-value from Pearson's chi-square statistic with k - 1
    degrees of freedom. Advisory only: used to order or skip exact
    computations, never to decide membership at the boundary."""
    if phat.k != p.k:
        raise ValueError(f"dimension mismatch: {phat.k} vs {p.k}")
    if any(x <= 0.0 for x in p.probs):
        raise ValueError("chi-square prefilter needs strictly positive p")
    if phat.k == 1:
        return 1.0
    n = phat.n
    stat = math.fsum(
        (c - n * x) ** 2 / (n * x) for c, x in zip(phat.counts, p.probs)
    )
    return float(chi2.sf(stat, phat.k - 1))


def sanov_refined_valid(k: int, n: int) -> bool:
    """Whether the sharpened KL concentration constant applies at (k, n)."""
    return k <= math.e * (n / (8.0 * math.pi)) ** (1.0 / 3.0)


def sanov_threshold(k: int, n: int, delta: float, refined: bool = True) -> float:
    """KL radius of the Sanov-type region. The refined form uses the
    sharpened constant 2(k-1) exp(-nz/(k-1)); the fallback inverts the
    generic (n+1)^k exp(-nz) bound and is valid for every (k, n)."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if n < 1:
        raise ValueError("n must be >= 1")
    if refined:
        if k == 1:
            return 0.0
        return (k - 1) * math.log(2.0 * (k - 1) / delta) / n
    return (k * math.log(n + 1) - math.log(delta)) / n


def sanov_membership(
    p: SimplexPoint,
    phat: EmpiricalDistribution,
    delta: float,
    refined: bool = True,
) -> bool:
    """True iff KL(phat, p) is within the Sanov-type radius."""
    if phat.k != p.k:
        raise ValueError(f"dimension mismatch: {phat.k} vs {p.k}")
    thr = sanov_threshold(phat.k, phat.n, delta, refined=refined)
    return kl_divergence(phat.as_point(), p) <= thr


def polytope_threshold(k: int, n: int, delta: float) -> float:
    """Per-marginal KL radius after splitting delta/k across coordinates."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if n < 1:
        raise ValueError("n must be >= 1")
    return math.log(2.0 * k / delta) / n


def polytope_membership(
    p: SimplexPoint, phat: EmpiricalDistribution, delta: float
) -> bool:
    """True iff every marginal passes its two-point KL test."""
    if phat.k != p.k:
        raise ValueError(f"dimension mismatch: {phat.k} vs {p.k}")
    n = phat.n
    thr = polytope_threshold(phat.k, n, delta)
    return all(
        kl_bernoulli(c / n, x) <= thr for c, x in zip(phat.counts, p.probs)
    )


def region_membership(
    p: SimplexPoint,
    phat: EmpiricalDistribution,
    spec: RegionSpec,
    use_chi2_prefilter: bool = False,
) -> bool:
    """Does the confidence region of ``phat`` (built per ``spec``) contain p?

    For the level-set construction the sound KL outer bound is applied
    first. With ``use_chi2_prefilter`` the chi-square approximation may
    additionally shortcut points far inside the region (approximate p-value
    above 10 * delta); anything at or below that band is decided exactly,
    so rejections always rest on the exact computation or the sound bound.
    """
    if phat.n != spec.n or phat.k != spec.k or p.k != spec.k:
        raise ValueError("spec does not match the supplied phat and p")
    if spec.kind == "sanov":
        return sanov_membership(p, phat, spec.delta)
    if spec.kind == "polytope":
        return polytope_membership(p, phat, spec.delta)
    if outer_bound_reject(phat, p, spec.delta):
        return False
    if use_chi2_prefilter and all(x > 0.0 for x in p.probs):
        approx = chi2_prefilter(phat, p)
        if approx > min(1.0, 10.0 * spec.delta):
            return True
    return member_of_covering(phat, p, spec.delta)


# ---------------------------------------------------------------------------
# Vectorized membership over many candidate parameters. These back the
# volume estimates, interval scans, and the bandit harness; scans are pure
# and safe to parallelize over.


def levelset_membership_grid(
    phat: EmpiricalDistribution,
    delta: float,
    points: np.ndarray,
    use_outer_bound: bool = True,
) -> np.ndarray:
    """Level-set membership of every row of ``points``, vectorized.

    The KL outer bound prunes candidates soundly before the exact
    rank-mass computation runs in batches.
    """
    points = np.asarray(points, dtype=float)
    n, k = phat.n, phat.k
    if points.shape[1] != k:
        raise ValueError("points do not match phat's dimension")
    counts = compositions_array(k, n)
    num = len(counts)
    idx = _composition_index(counts, phat.counts)
    ns = counts.sum(axis=1)
    logcoef = gammaln(ns + 1) - gammaln(counts + 1).sum(axis=1)

    member = np.zeros(len(points), dtype=bool)
    if use_outer_bound and n >= 1:
        with np.errstate(invalid="ignore"):
            klvec = kl_to_many(phat.as_point().as_array(), points)
            keep = 2.0 * k * math.log(n + 1) - n * klvec > math.log(delta)
        cand = np.flatnonzero(keep)
    else:
        cand = np.arange(len(points))
    if len(cand) == 0:
        return member

    target = 1.0 - delta
    log_delta = math.log(delta)
    # Rows below this log-probability never tip the mass-vs-target
    # comparison: the discarded total is at most num * exp(floor), i.e.
    # delta * 1e-13, and dropping counted mass only errs toward inclusion.
    floor = log_delta - math.log(num) - 30.0
    w = np.where(points[cand] > 0.0, np.log(np.maximum(points[cand], 1e-300)), _LOG_ZERO)
    counts_f = counts.astype(float)  # int64 matmuls bypass BLAS

    batch = max(16, _BATCH_ENTRIES // (8 * num))
    for a in range(0, len(cand), batch):
        cols = cand[a : a + batch]
        wb = w[a : a + batch]
        # Candidate columns are contiguous in grid order, so they are close
        # on the simplex and the per-batch row bound prunes hard: any row
        # whose best-case log-pmf over this batch is below the floor can
        # never be counted.
        row_bound = logcoef + counts_f @ wb.max(axis=0)
        kept = row_bound > floor
        kept[idx] = True
        new_idx = int(kept[:idx].sum())
        cf = counts_f[kept]
        lex_earlier = np.arange(len(cf)) < new_idx  # rows stay in lex order
        lp = logcoef[kept][:, None] + cf @ wb.T
        q = lp[new_idx]
        # The un-counted tail always includes phat itself, so its own
        # probability exceeding delta already certifies membership.
        quick = q > log_delta
        member[cols[quick]] = True
        rest = np.flatnonzero(~quick)
        if len(rest) == 0:
            continue
        lpr = lp[:, rest]
        hi = q[rest] + LOG_TIE_TOL
        lo = q[rest] - LOG_TIE_TOL
        sel = (lpr > hi) | ((lpr <= hi) & (lpr >= lo) & lex_earlier[:, None])
        sel &= lpr > floor
        srows, scols = np.nonzero(sel)
        mass = np.bincount(
            scols, weights=np.exp(lpr[srows, scols]), minlength=len(rest)
        )
        member[cols[rest]] = mass < target
    return member


def sanov_membership_grid(
    phat: EmpiricalDistribution,
    delta: float,
    points: np.ndarray,
    refined: bool = True,
) -> np.ndarray:
    thr = sanov_threshold(phat.k, phat.n, delta, refined=refined)
    return kl_to_many(phat.as_point().as_array(), np.asarray(points, float)) <= thr


def polytope_membership_grid(
    phat: EmpiricalDistribution, delta: float, points: np.ndarray
) -> np.ndarray:
    thr = polytope_threshold(phat.k, phat.n, delta)
    divs = kl_bernoulli_many(phat.as_point().as_array(), np.asarray(points, float))
    return divs.max(axis=1) <= thr


def membership_grid(
    phat: EmpiricalDistribution, spec: RegionSpec, points: np.ndarray
) -> np.ndarray:
    """Vectorized region_membership over rows of ``points``."""
    if phat.n != spec.n or phat.k != spec.k:
        raise ValueError("spec does not match the supplied phat")
    if spec.kind == "sanov":
        return sanov_membership_grid(phat, spec.delta, points)
    if spec.kind == "polytope":
        return polytope_membership_grid(phat, spec.delta, points)
    return levelset_membership_grid(phat, spec.delta, points)


def chi2_membership_grid(
    phat: EmpiricalDistribution, delta: float, points: np.ndarray
) -> np.ndarray:
    """Approximate level-set membership from the chi-square tail; rows with
    a zero coordinate are reported as non-members (prefilter unavailable
    there). Advisory screening only."""
    points = np.asarray(points, dtype=float)
    n, k = phat.n, phat.k
    member = np.zeros(len(points), dtype=bool)
    interior = (points > 0.0).all(axis=1)
    if not interior.any():
        return member
    fr = phat.as_point().as_array()
    g = points[interior]
    stat = n * ((fr - g) ** 2 / g).sum(axis=1)
    member[interior] = stat <= chi2.isf(delta, k - 1)
    return member


def covering_sizes_grid(
    n: int, k: int, delta: float, points: np.ndarray
) -> np.ndarray:
    """Size of the covering collection at every row of ``points``; the
    integrand of the two-way volume counting identity."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    points = np.asarray(points, dtype=float)
    counts = compositions_array(k, n)
    num = len(counts)
    ns = counts.sum(axis=1)
    logcoef = gammaln(ns + 1) - gammaln(counts + 1).sum(axis=1)
    target = 1.0 - delta
    out = np.empty(len(points), dtype=np.int64)
    batch = max(1, _BATCH_ENTRIES // num)
    for a in range(0, len(points), batch):
        g = points[a : a + batch]
        w = np.where(g > 0.0, np.log(np.where(g > 0.0, g, 1.0)), _LOG_ZERO)
        lp = logcoef[:, None] + counts @ w.T
        pr = np.sort(np.exp(lp), axis=0)[::-1]
        cum = np.cumsum(pr, axis=0)
        out[a : a + len(g)] = np.minimum((cum < target).sum(axis=0) + 1, num)
    return out
