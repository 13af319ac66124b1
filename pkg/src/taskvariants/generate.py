"""Seeded random instances and built-in fixtures."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from .model import CostModel, InvalidInputError, Problem, Robot, Task, TaskConfiguration


@dataclass(frozen=True)
class GenParams:
    num_robots: int
    num_tasks: int
    max_configs_per_task: int = 5
    H: int = 7
    k: int = 5
    capability_presence_prob: float = 0.5
    capability_range: tuple[float, float] = (0.0, 8.0)
    cost_range: tuple[float, float] = (0.0, 1.0)
    reward_range: tuple[float, float] = (100.0, 200.0)
    cost_coefficient: float = 4.0
    integer_capabilities: bool = False
    fixed_configs: bool = False
    seed: int = 0

    def __post_init__(self):
        for name in ("capability_range", "cost_range", "reward_range"):
            lo, hi = getattr(self, name)
            object.__setattr__(self, name, (float(lo), float(hi)))
            if lo > hi:
                raise InvalidInputError(f"{name}: lo must be <= hi")
        if min(self.num_robots, self.num_tasks, self.max_configs_per_task, self.H, self.k) < 1:
            raise InvalidInputError("counts, H and k must be >= 1")
        if not 0.0 <= self.capability_presence_prob <= 1.0:
            raise InvalidInputError("capability_presence_prob must lie in [0, 1]")
        if self.capability_range[0] < 0 or self.cost_range[0] < 0:
            raise InvalidInputError("capability and cost ranges must be non-negative")
        if self.reward_range[0] <= 0:
            raise InvalidInputError("rewards must be positive")
        if self.cost_coefficient < 0:
            raise InvalidInputError("cost_coefficient must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise InvalidInputError("seed must be a 64-bit unsigned integer")

    def replace(self, **changes) -> GenParams:
        return GenParams(**{**asdict(self), **changes})

    @classmethod
    def from_dict(cls, data: dict) -> GenParams:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidInputError(f"unknown generator parameters: {sorted(unknown)}")
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in data.items()})


def _capabilities(rng: np.random.Generator, rows: int, p: GenParams) -> np.ndarray:
    lo, hi = p.capability_range
    present = rng.random((rows, p.H)) < p.capability_presence_prob
    if p.integer_capabilities:
        values = rng.integers(int(np.ceil(lo)), int(np.floor(hi)) + 1, size=(rows, p.H)).astype(float)
    else:
        values = rng.uniform(lo, hi, size=(rows, p.H))
    return np.where(present, values, 0.0)


def generate(params: GenParams) -> Problem:
    """Draw one instance; the same params (seed included) give the same problem."""
    p = params
    rng = np.random.default_rng(p.seed)
    W = rng.uniform(*p.cost_range, size=p.H)
    B = _capabilities(rng, p.num_robots, p)
    if p.fixed_configs:
        counts = np.full(p.num_tasks, p.max_configs_per_task)
    else:
        counts = rng.integers(1, p.max_configs_per_task + 1, size=p.num_tasks)
    P = _capabilities(rng, int(counts.sum()), p)
    V = rng.uniform(*p.reward_range, size=p.num_tasks)
    offsets = np.concatenate([[0], np.cumsum(counts)])
    tasks = tuple(
        Task(k, float(V[k]), tuple(TaskConfiguration(tuple(row)) for row in P[offsets[k]:offsets[k + 1]]))
        for k in range(p.num_tasks)
    )
    return Problem(
        robots=tuple(Robot(i, tuple(B[i])) for i in range(p.num_robots)),
        tasks=tasks,
        capability_costs=tuple(W),
        cost_model=CostModel.linear(p.cost_coefficient),
        max_coalition_size=min(p.k, p.num_robots),
    )


def motivating_example() -> Problem:
    """Two tasks whose best-utility variant starves the other task.

    Two robots carry one unit of capability 0; six more carry one unit of a
    single other capability, two per capability, enough for both tasks to be
    covered at once. Task 0 needs (2,0,0,0) or (1,1,0,1); task 1
    needs (1,1,1,0) or (1,1,0,1). Rewards 100, unit capability costs, no
    coordination cost.
    """
    robots = [(1, 0, 0, 0)] * 2 + [(0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)] * 2
    configs = [
        [(2, 0, 0, 0), (1, 1, 0, 1)],
        [(1, 1, 1, 0), (1, 1, 0, 1)],
    ]
    return Problem(
        robots=tuple(Robot(i, r) for i, r in enumerate(robots)),
        tasks=tuple(Task(k, 100.0, tuple(TaskConfiguration(c) for c in cs)) for k, cs in enumerate(configs)),
        capability_costs=(1.0, 1.0, 1.0, 1.0),
        cost_model=CostModel.zero(),
        max_coalition_size=5,
    )


FIXTURES = {"motivating": motivating_example}
