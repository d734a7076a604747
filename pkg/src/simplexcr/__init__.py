"""Exact minimal-average-volume confidence regions for categorical data,
induced intervals for linear functionals, and a best-arm bandit harness."""

from .bandit import METHODS, Arm, BanditRun, benchmark_arms, lucb_run
from .core import (
    EmpiricalDistribution,
    SimplexGrid,
    SimplexPoint,
    enumerate_simplex,
    iter_compositions,
    kl_bernoulli,
    kl_divergence,
    log_pmf,
    simplex_size,
)
from .functionals import (
    EmptyScanError,
    IntervalResult,
    LinearFunctional,
    empirical_bernstein_interval,
    functional_interval,
    hoeffding_interval,
    induced_measure_sampler,
    kl_bernoulli_interval,
    mixture_point_from_uniform,
    oracle_chernoff_interval,
)
from .regions import (
    KINDS,
    CoveringCollection,
    RegionSpec,
    chi2_prefilter,
    covering_collection,
    level_set_membership_via_pvalue,
    member_of_covering,
    outer_bound_reject,
    p_value,
    polytope_membership,
    region_membership,
    sanov_membership,
    sanov_refined_valid,
    sanov_threshold,
)
from .volume import (
    VolumeReport,
    average_volume,
    covering_size_integral,
    region_volume,
    uniform_prior_expected_volume,
)

__version__ = "0.1.0"

__all__ = [
    "Arm",
    "BanditRun",
    "CoveringCollection",
    "EmpiricalDistribution",
    "EmptyScanError",
    "IntervalResult",
    "KINDS",
    "LinearFunctional",
    "METHODS",
    "RegionSpec",
    "SimplexGrid",
    "SimplexPoint",
    "VolumeReport",
    "average_volume",
    "benchmark_arms",
    "chi2_prefilter",
    "covering_collection",
    "covering_size_integral",
    "empirical_bernstein_interval",
    "enumerate_simplex",
    "functional_interval",
    "hoeffding_interval",
    "induced_measure_sampler",
    "iter_compositions",
    "kl_bernoulli",
    "kl_bernoulli_interval",
    "kl_divergence",
    "level_set_membership_via_pvalue",
    "log_pmf",
    "lucb_run",
    "member_of_covering",
    "mixture_point_from_uniform",
    "oracle_chernoff_interval",
    "outer_bound_reject",
    "p_value",
    "polytope_membership",
    "region_membership",
    "region_volume",
    "sanov_membership",
    "sanov_refined_valid",
    "sanov_threshold",
    "simplex_size",
    "uniform_prior_expected_volume",
]
