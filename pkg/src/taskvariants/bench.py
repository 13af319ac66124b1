"""Parameter sweeps over random instances, aggregated into CSV rows.

Each (swept value, run index) pair gets its own instance seed derived with
``numpy.random.SeedSequence(base_seed, spawn_key=(value, run, stream))``, so
adding sweep points or runs never changes the instances of existing ones.
Aggregation happens after all runs finish, in (value, run) order with
``math.fsum``, which makes the CSV independent of the worker count.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .flatten import flatten
from .generate import GenParams, generate
from .model import InvalidInputError
from .solvers import SOLVERS, OracleBudgetExceeded, run_solver, solve_exact, upper_bound

log = logging.getLogger(__name__)

SWEEPABLE = ("num_robots", "num_tasks", "max_configs_per_task")
CSV_COLUMNS = ["swept_param", "value", "solver", "mean_ratio", "std_ratio",
               "mean_utility", "mean_time_s", "empty_count"]
ORACLE_COLUMNS = ["mean_oracle_ratio", "oracle_skipped"]
ORACLE_MAX_CANDIDATES = 2000
ORACLE_BUDGET = 200_000
# Slack for float summation order when comparing utilities across solvers.
_SLACK = 1e-9


@dataclass(frozen=True)
class SweepSpec:
    swept_parameter: str
    values: tuple[int, ...]
    base: GenParams
    runs_per_point: int = 1000
    solvers: tuple[str, ...] = SOLVERS
    oracle: bool = False
    record_timing: bool = True

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        object.__setattr__(self, "solvers", tuple(self.solvers))
        if self.swept_parameter not in SWEEPABLE:
            raise InvalidInputError(f"swept_parameter must be one of {SWEEPABLE}")
        if not self.values or list(self.values) != sorted(set(self.values)):
            raise InvalidInputError("values must be non-empty and strictly ascending")
        if self.runs_per_point < 1:
            raise InvalidInputError("runs_per_point must be >= 1")
        unknown = set(self.solvers) - set(SOLVERS)
        if unknown or not self.solvers:
            raise InvalidInputError(f"solvers must be a non-empty subset of {SOLVERS}, got {sorted(unknown)}")

    @classmethod
    def from_json(cls, data: dict) -> SweepSpec:
        data = dict(data)
        base = {"num_robots": 8, "num_tasks": 10, **data.pop("base", {})}
        known = {"swept_parameter", "values", "runs_per_point", "solvers", "oracle", "record_timing"}
        unknown = set(data) - known
        if unknown:
            raise InvalidInputError(f"unknown sweep spec keys: {sorted(unknown)}")
        return cls(base=GenParams.from_dict(base), **data)

    def to_json(self) -> dict:
        out = asdict(self)
        out["base"] = asdict(self.base)
        return out


def preset(name: str, runs_per_point: int = 1000, seed: int = 0) -> SweepSpec:
    """Default sweeps: ``robots`` (|T|=10), ``tasks`` (|R|=8) and ``variants``."""
    if name == "robots":
        return SweepSpec("num_robots", (4, 6, 8, 10, 12), GenParams(8, 10, seed=seed), runs_per_point)
    if name == "tasks":
        return SweepSpec("num_tasks", (4, 8, 12, 16, 20), GenParams(8, 10, seed=seed), runs_per_point)
    if name == "variants":
        return SweepSpec("max_configs_per_task", (1, 2, 3, 4, 5), GenParams(8, 10, seed=seed), runs_per_point)
    raise InvalidInputError(f"unknown preset {name!r}")


PRESETS = ("robots", "tasks", "variants")


def child_seed(base_seed: int, value: int, run: int, stream: int = 0) -> int:
    ss = np.random.SeedSequence(base_seed, spawn_key=(value, run, stream))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class RunRecord:
    value: int
    run: int
    upper_bound: float
    utilities: dict[str, float]
    times: dict[str, float]
    prep_time: float
    optimal: float | None = None
    oracle_skipped: bool = False


def run_instance(spec: SweepSpec, value: int, run: int) -> RunRecord:
    params = spec.base.replace(**{spec.swept_parameter: value, "seed": child_seed(spec.base.seed, value, run)})
    t0 = time.perf_counter()
    problem = generate(params)
    flat = flatten(problem)
    ub = upper_bound(flat)
    prep = time.perf_counter() - t0
    config_seed = child_seed(spec.base.seed, value, run, stream=1)
    utilities, times = {}, {}
    for name in spec.solvers:
        start = time.perf_counter()
        result = run_solver(name, problem, flat, config_seed)
        times[name] = time.perf_counter() - start
        utilities[name] = result.utility
    record = RunRecord(value, run, ub, utilities, times, prep)
    if spec.oracle:
        if len(flat) > ORACLE_MAX_CANDIDATES:
            record.oracle_skipped = True
        else:
            try:
                record.optimal = solve_exact(flat, ORACLE_BUDGET).total_utility
            except OracleBudgetExceeded:
                record.oracle_skipped = True
    _check_record(record)
    return record


def _check_record(r: RunRecord) -> None:
    ceiling = r.upper_bound if r.optimal is None else r.optimal
    if r.optimal is not None and r.optimal > r.upper_bound + _SLACK:
        raise RuntimeError(f"optimal {r.optimal} exceeds upper bound {r.upper_bound} (value={r.value}, run={r.run})")
    for name, u in r.utilities.items():
        if u > ceiling + _SLACK * max(1.0, ceiling):
            raise RuntimeError(f"{name} utility {u} exceeds {ceiling} (value={r.value}, run={r.run})")


def _run_chunk(args: tuple[SweepSpec, list[tuple[int, int]]]) -> list[RunRecord]:
    spec, jobs = args
    return [run_instance(spec, v, r) for v, r in jobs]


@dataclass
class SweepRow:
    swept_param: str
    value: int
    solver: str
    mean_ratio: float
    std_ratio: float
    mean_utility: float
    mean_time_s: float | None
    empty_count: int
    mean_oracle_ratio: float | None = None
    oracle_skipped: int | None = None


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list[SweepRow]
    records: list[RunRecord] = field(repr=False, default_factory=list)

    def csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        columns = CSV_COLUMNS + (ORACLE_COLUMNS if self.spec.oracle else [])
        writer.writerow(columns)
        for row in self.rows:
            values = asdict(row)
            writer.writerow([_fmt(values[c]) for c in columns])
        return buf.getvalue()

    def prep_time_stats(self) -> tuple[float, float]:
        """Mean and max seconds spent generating, flattening and bounding an instance."""
        times = [r.prep_time for r in self.records]
        return math.fsum(times) / len(times), max(times)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _mean_std(xs: list[float]) -> tuple[float, float]:
    mean = math.fsum(xs) / len(xs)
    return mean, math.sqrt(math.fsum((x - mean) ** 2 for x in xs) / len(xs))


def aggregate(spec: SweepSpec, records: list[RunRecord]) -> list[SweepRow]:
    records = sorted(records, key=lambda r: (r.value, r.run))
    rows = []
    for value in spec.values:
        group = [r for r in records if r.value == value]
        empty = sum(1 for r in group if r.upper_bound <= 0)
        for name in spec.solvers:
            ratios = [r.utilities[name] / r.upper_bound if r.upper_bound > 0 else 1.0 for r in group]
            mean_ratio, std_ratio = _mean_std(ratios)
            mean_util = math.fsum(r.utilities[name] for r in group) / len(group)
            mean_time = math.fsum(r.times[name] for r in group) / len(group) if spec.record_timing else None
            row = SweepRow(spec.swept_parameter, value, name, mean_ratio, std_ratio, mean_util, mean_time, empty)
            if spec.oracle:
                solved = [r for r in group if r.optimal is not None]
                row.oracle_skipped = len(group) - len(solved)
                if solved:
                    row.mean_oracle_ratio = math.fsum(
                        r.utilities[name] / r.optimal if r.optimal > 0 else 1.0 for r in solved
                    ) / len(solved)
            rows.append(row)
    return rows


def run_sweep(spec: SweepSpec, out: str | Path | None = None, workers: int = 1) -> SweepResult:
    """Run every (value, run) instance through the requested solvers.

    Solver wall time excludes generation, flattening and the upper bound.
    Timings under ``workers > 1`` include scheduler noise; compare solver
    times from sequential runs only.
    """
    jobs = [(v, r) for v in spec.values for r in range(spec.runs_per_point)]
    if workers <= 1:
        records = _run_chunk((spec, jobs))
    else:
        size = max(1, math.ceil(len(jobs) / (workers * 4)))
        chunks = [(spec, jobs[i:i + size]) for i in range(0, len(jobs), size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = [rec for part in pool.map(_run_chunk, chunks) for rec in part]
    result = SweepResult(spec, aggregate(spec, records), records)
    if out is not None:
        Path(out).write_text(result.csv_text())
    mean_prep, max_prep = result.prep_time_stats()
    log.info("instance preparation: mean %.4fs, max %.4fs", mean_prep, max_prep)
    return result
