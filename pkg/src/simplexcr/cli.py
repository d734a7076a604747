"""Command-line surface: region dumps, covering listings, exact p-values,
interval-width sweeps, volume reports, and bandit stopping-time tables.

Outputs are machine readable: CSV (with a header row) for tabular sweeps,
JSON (with a schema_version field) for structured region dumps, always
UTF-8 with LF line endings. Exit codes: 0 success, 1 computational
failure, 2 usage error. Output files are written only after the full
computation succeeds, so invalid input never leaves partial files behind.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from .bandit import METHODS, benchmark_arms, lucb_run
from .core import (
    EmpiricalDistribution,
    SimplexGrid,
    SimplexPoint,
    simplex_size,
)
from .functionals import (
    LinearFunctional,
    empirical_bernstein_interval,
    functional_interval,
    hoeffding_interval,
    kl_bernoulli_interval,
    oracle_chernoff_interval,
)
from .regions import (
    KINDS,
    RegionSpec,
    covering_collection,
    membership_grid,
    p_value,
    region_membership,
)
from .volume import average_volume

SCHEMA_VERSION = 1


@dataclass
class RunConfig:
    """Validated invocation parameters; every field satisfies downstream
    preconditions before any computation starts."""

    subcommand: str
    delta: float = 0.5
    k: int | None = None
    n: int | None = None
    phat: tuple[int, ...] | None = None
    p: tuple[float, ...] | None = None
    construction: str = "levelset"
    grid: int | None = None
    seed: int | None = None
    out: str | None = None
    fmt: str = "csv"
    mode: str = "membership"
    n_list: tuple[int, ...] = ()
    trials: int = 10
    tolerance: float = 0.0
    methods: tuple[str, ...] = field(default_factory=lambda: METHODS)


def _parse_counts(text: str) -> tuple[int, ...]:
    try:
        counts = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if any(c < 0 for c in counts):
        raise argparse.ArgumentTypeError("counts must be nonnegative")
    return counts


def _parse_probs(text: str) -> tuple[float, ...]:
    try:
        probs = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}")
    return probs


def _parse_int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _write_text(out: str | None, content: str) -> None:
    if out is None:
        sys.stdout.write(content)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(content)


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _json_text(payload: dict) -> str:
    payload = {"schema_version": SCHEMA_VERSION, **payload}
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _suffixed(out: str | None, tag: str) -> str | None:
    if out is None:
        return None
    root, dot, ext = out.rpartition(".")
    if not dot:
        return f"{out}_{tag}"
    return f"{root}_{tag}.{ext}"


def _boundary_rows(points: np.ndarray, member: np.ndarray, resolution: int) -> list:
    """Member grid points adjacent to a non-member (or to the simplex
    boundary of the scan), ordered by angle for a plottable polyline."""
    lattice = np.rint(points * resolution).astype(np.int64)
    index = {tuple(row): i for i, row in enumerate(lattice)}
    k = points.shape[1]
    boundary = []
    for i in np.flatnonzero(member):
        c = lattice[i]
        on_edge = False
        for a in range(k):
            for b in range(k):
                if a == b or c[a] == 0:
                    continue
                nb = c.copy()
                nb[a] -= 1
                nb[b] += 1
                j = index.get(tuple(nb))
                if j is None or not member[j]:
                    on_edge = True
                    break
            if on_edge:
                break
        if on_edge:
            boundary.append(i)
    if not boundary:
        return []
    pts = points[boundary]
    centroid = points[member].mean(axis=0)
    # project to the plane for angular ordering; coordinates stay barycentric
    x = pts[:, 1] + 0.5 * pts[:, 2] - (centroid[1] + 0.5 * centroid[2])
    y = (math.sqrt(3.0) / 2.0) * (pts[:, 2] - centroid[2])
    order = np.argsort(np.arctan2(y, x))
    return [[float(v) for v in pts[j]] for j in order]


def cmd_region(config: RunConfig) -> int:
    phat = EmpiricalDistribution(config.phat)
    n, k = phat.n, phat.k
    if config.p is not None:
        p = SimplexPoint(config.p)
        spec = RegionSpec(config.delta, config.construction, n, k)
        sys.stdout.write("true\n" if region_membership(p, phat, spec) else "false\n")
        return 0

    resolution = config.grid or max(10 * n, 150)
    points = SimplexGrid(k, resolution).points
    kinds = KINDS if config.construction == "all" else (config.construction,)
    outputs = []
    for kind in kinds:
        spec = RegionSpec(config.delta, kind, n, k)
        member = membership_grid(phat, spec, points)
        common = {
            "construction": kind,
            "phat_counts": list(phat.counts),
            "n": n,
            "k": k,
            "delta": config.delta,
            "grid_resolution": resolution,
        }
        if config.mode == "boundary":
            payload = dict(common, boundary=_boundary_rows(points, member, resolution))
            text = _json_text(payload)
        elif config.fmt == "json":
            payload = dict(
                common,
                points=[[float(v) for v in row] for row in points],
                member=[int(m) for m in member],
            )
            text = _json_text(payload)
        else:
            header = [f"p{i + 1}" for i in range(k)] + ["member"]
            rows = [
                [repr(float(v)) for v in row] + [int(m)]
                for row, m in zip(points, member)
            ]
            text = _csv_text(header, rows)
        target = _suffixed(config.out, kind) if len(kinds) > 1 else config.out
        outputs.append((target, text))
    for target, text in outputs:
        _write_text(target, text)
    return 0


def cmd_covering(config: RunConfig) -> int:
    p = SimplexPoint(config.p)
    collection = covering_collection(p, config.n, config.delta)
    if config.fmt == "json":
        payload = {
            "p": list(p.probs),
            "n": config.n,
            "delta": config.delta,
            "total_mass": collection.total_mass,
            "members": [list(m.counts) for m in collection.members],
            "cumulative": list(collection.cumulative),
        }
        _write_text(config.out, _json_text(payload))
        return 0
    header = ["rank"] + [f"c{i + 1}" for i in range(p.k)] + ["probability", "cumulative"]
    rows = []
    prev = 0.0
    for rank, (m, cum) in enumerate(
        zip(collection.members, collection.cumulative), start=1
    ):
        rows.append(list((rank, *m.counts)) + [repr(cum - prev), repr(cum)])
        prev = cum
    _write_text(config.out, _csv_text(header, rows))
    return 0


def cmd_pvalue(config: RunConfig) -> int:
    phat = EmpiricalDistribution(config.phat)
    p = SimplexPoint(config.p)
    sys.stdout.write(f"{p_value(phat, p)!r}\n")
    return 0


def cmd_widths(config: RunConfig) -> int:
    delta = config.delta
    values = LinearFunctional((0.0, 0.5, 1.0))
    header = ["n", "method", "lower", "upper", "width", "note"]
    rows: list[list] = []
    for n in config.n_list:
        base = int(round(n / 10.0))
        counts = (base, base, n - 2 * base)
        note = ""
        if n % 10 != 0:
            note = f"counts adjusted to {counts}"
            rows.append([n, "warning", "", "", "", note])
        phat = EmpiricalDistribution(counts)
        mean_hat = values.apply(phat.as_point())
        resolution = config.grid or max(10 * n, 150)
        spec = RegionSpec(delta, "levelset", n, 3)
        intervals = {
            "levelset": functional_interval(phat, values, delta, spec, M=resolution),
            "hoeffding": hoeffding_interval(mean_hat, n, delta),
            "oracle-chernoff": oracle_chernoff_interval(
                mean_hat, _plugin_variance(values, phat), n, delta
            ),
            "empirical-bernstein": empirical_bernstein_interval(
                _expand_samples(values, phat), delta
            ),
            "kl-bernoulli": kl_bernoulli_interval(mean_hat, n, delta),
        }
        for name, iv in intervals.items():
            rows.append([n, name, repr(iv.lower), repr(iv.upper), repr(iv.width), ""])
    _write_text(config.out, _csv_text(header, rows))
    return 0


def _plugin_variance(values: LinearFunctional, phat: EmpiricalDistribution) -> float:
    # the sweep fixes the observed proportions by design, so the plug-in
    # variance under phat stands in for the true variance
    probs = phat.as_point().probs
    mean = math.fsum(v * q for v, q in zip(values.values, probs))
    return math.fsum(q * (v - mean) ** 2 for v, q in zip(values.values, probs))


def _expand_samples(values: LinearFunctional, phat: EmpiricalDistribution) -> list[float]:
    out: list[float] = []
    for v, c in zip(values.values, phat.counts):
        out.extend([v] * c)
    return out


def cmd_volume(config: RunConfig) -> int:
    spec = RegionSpec(config.delta, config.construction, config.n, config.k)
    resolution = config.grid or 300
    report = average_volume(spec, resolution)
    if config.fmt == "csv":
        header = [f"c{i + 1}" for i in range(config.k)] + ["volume_fraction"]
        rows = [
            list(phat.counts) + [repr(vol)] for phat, vol in report.per_phat.items()
        ]
        rows.append(["total"] * config.k + [repr(report.total)])
        _write_text(config.out, _csv_text(header, rows))
        return 0
    payload = {
        "construction": report.construction,
        "n": config.n,
        "k": config.k,
        "delta": config.delta,
        "grid_resolution": report.grid_resolution,
        "total": report.total,
        "per_phat": [
            {"counts": list(phat.counts), "volume_fraction": vol}
            for phat, vol in report.per_phat.items()
        ],
    }
    _write_text(config.out, _json_text(payload))
    return 0


def cmd_bandit(config: RunConfig) -> int:
    arms = benchmark_arms()
    header = [
        "record",
        "trial",
        "method",
        "stopping_time",
        "identified_arm",
        "completed",
        "q25",
        "median",
        "q75",
    ]
    rows: list[list] = []
    any_capped = False
    for method in config.methods:
        times = []
        for trial in range(config.trials):
            run = lucb_run(
                arms,
                config.delta,
                config.tolerance,
                method,
                seed=config.seed + trial,
            )
            any_capped |= not run.completed
            times.append(run.stopping_time)
            rows.append(
                [
                    "trial",
                    trial,
                    method,
                    run.stopping_time,
                    run.identified_arm,
                    int(run.completed),
                    "",
                    "",
                    "",
                ]
            )
        q25, q50, q75 = (float(q) for q in np.percentile(times, [25, 50, 75]))
        rows.append(
            ["summary", "", method, "", "", "", repr(q25), repr(q50), repr(q75)]
        )
    _write_text(config.out, _csv_text(header, rows))
    return 1 if any_capped else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simplexcr",
        description="Exact confidence regions for categorical data.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p: argparse.ArgumentParser, *, delta_default=None) -> None:
        p.add_argument("--delta", type=float, default=delta_default, help="error level in (0,1)")
        p.add_argument("--format", dest="fmt", choices=("csv", "json"))
        p.add_argument("--out", help="output path (default: stdout)")

    p_region = sub.add_parser("region", help="region membership dump or point query")
    p_region.add_argument("--phat", type=_parse_counts, required=True)
    p_region.add_argument("--p", type=_parse_probs, help="single membership query point")
    p_region.add_argument("--construction", choices=KINDS + ("all",), default="levelset")
    p_region.add_argument("--grid", type=int)
    p_region.add_argument("--mode", choices=("membership", "boundary"), default="membership")
    common(p_region)

    p_cov = sub.add_parser("covering", help="list the covering collection of p")
    p_cov.add_argument("--p", type=_parse_probs, required=True)
    p_cov.add_argument("--n", type=int, required=True)
    common(p_cov)

    p_pv = sub.add_parser("pvalue", help="exact p-value of phat under p")
    p_pv.add_argument("--phat", type=_parse_counts, required=True)
    p_pv.add_argument("--p", type=_parse_probs, required=True)

    p_w = sub.add_parser("widths", help="interval widths against sample size")
    p_w.add_argument("--n-list", type=_parse_int_list, required=True)
    p_w.add_argument("--grid", type=int)
    common(p_w, delta_default=0.7)

    p_vol = sub.add_parser("volume", help="per-outcome region volumes and total")
    p_vol.add_argument("--k", type=int, required=True)
    p_vol.add_argument("--n", type=int, required=True)
    p_vol.add_argument("--construction", choices=KINDS, default="levelset")
    p_vol.add_argument("--grid", type=int)
    common(p_vol)

    p_b = sub.add_parser("bandit", help="LUCB stopping-time table")
    p_b.add_argument("--trials", type=int, default=10)
    p_b.add_argument("--seed", type=int, required=True)
    p_b.add_argument("--tolerance", type=float, default=0.0)
    p_b.add_argument(
        "--methods",
        type=lambda s: tuple(s.split(",")),
        default=METHODS,
        help="comma-separated subset of " + ",".join(METHODS),
    )
    common(p_b, delta_default=0.05)

    return parser


_COMMANDS = {
    "region": cmd_region,
    "covering": cmd_covering,
    "pvalue": cmd_pvalue,
    "widths": cmd_widths,
    "volume": cmd_volume,
    "bandit": cmd_bandit,
}


def _config_from_args(args: argparse.Namespace, parser: argparse.ArgumentParser) -> RunConfig:
    payload = {
        key: value
        for key, value in vars(args).items()
        if key in RunConfig.__dataclass_fields__ and value is not None
    }
    config = RunConfig(**payload)
    if config.subcommand in ("region", "covering", "widths", "volume") and not (
        0.0 < (config.delta or 0.0) < 1.0
    ):
        parser.error("--delta must lie in (0, 1)")
    if config.subcommand == "bandit":
        if not 0.0 < config.delta < 1.0:
            parser.error("--delta must lie in (0, 1)")
        if config.trials < 1:
            parser.error("--trials must be >= 1")
        unknown = set(config.methods) - set(METHODS)
        if unknown:
            parser.error(f"unknown methods: {sorted(unknown)}")
    if config.p is not None:
        try:
            SimplexPoint(config.p)
        except ValueError as exc:
            parser.error(f"--p is not a simplex point: {exc}")
    if config.subcommand == "region":
        if config.mode == "boundary" and len(config.phat) != 3:
            parser.error("boundary mode requires k = 3")
        if config.construction == "all" and config.p is not None:
            parser.error("point queries need a single --construction")
        if config.p is not None and len(config.p) != len(config.phat):
            parser.error("--p and --phat disagree on the number of categories")
    if config.grid is not None and config.grid < 1:
        parser.error("--grid must be >= 1")
    if config.subcommand == "volume":
        if config.k < 1 or config.n < 0:
            parser.error("--k must be >= 1 and --n >= 0")
        resolution = config.grid or 300
        if simplex_size(config.k, resolution) > 5_000_000:
            parser.error("grid too large; lower --grid or --k")
    if config.subcommand == "covering" and config.n < 0:
        parser.error("--n must be >= 0")
    if config.subcommand == "widths" and any(n < 10 for n in config.n_list):
        parser.error("widths sweep needs n >= 10")
    # per-subcommand default output format
    if "fmt" not in payload or payload.get("fmt") is None:
        config.fmt = "json" if config.subcommand in ("region", "volume") else "csv"
    return config


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = _config_from_args(args, parser)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[config.subcommand](config)
    except (ValueError, OverflowError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
