"""Problem tuple, utility semantics and candidate enumeration.

A problem is a set of robots with capability vectors, a set of tasks each
offering one or more alternative requirement vectors (configurations), a
per-capability unit cost ``W``, per-task rewards ``V``, a coalition cost
model and a cap ``k`` on coalition size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np


class InvalidInputError(ValueError):
    """Raised for malformed problems, indices or parameters."""


def _as_capabilities(values: Iterable[float], what: str) -> tuple[float, ...]:
    vec = tuple(float(v) for v in values)
    for v in vec:
        if not math.isfinite(v) or v < 0:
            raise InvalidInputError(f"{what}: capability entries must be finite and >= 0, got {v}")
    return vec


@dataclass(frozen=True)
class Robot:
    id: int
    capabilities: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "capabilities", _as_capabilities(self.capabilities, f"robot {self.id}"))


@dataclass(frozen=True, order=True)
class Coalition:
    members: tuple[int, ...]

    def __post_init__(self):
        members = tuple(sorted(int(m) for m in self.members))
        if not members:
            raise InvalidInputError("coalition must be non-empty")
        if len(set(members)) != len(members):
            raise InvalidInputError(f"duplicate coalition members: {members}")
        object.__setattr__(self, "members", members)

    @property
    def mask(self) -> int:
        return sum(1 << m for m in self.members)

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class TaskConfiguration:
    requirements: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "requirements", _as_capabilities(self.requirements, "configuration"))


@dataclass(frozen=True)
class Task:
    id: int
    reward: float
    configurations: tuple[TaskConfiguration, ...]

    def __post_init__(self):
        if not (math.isfinite(self.reward) and self.reward > 0):
            raise InvalidInputError(f"task {self.id}: reward must be > 0, got {self.reward}")
        configs = tuple(
            c if isinstance(c, TaskConfiguration) else TaskConfiguration(tuple(c))
            for c in self.configurations
        )
        if not configs:
            raise InvalidInputError(f"task {self.id}: needs at least one configuration")
        object.__setattr__(self, "reward", float(self.reward))
        object.__setattr__(self, "configurations", configs)


@dataclass(frozen=True)
class CostModel:
    """Coordination cost of putting a coalition on a configuration.

    ``kind`` is ``"linear"`` (``coefficient * |coalition|``), ``"zero"``, or
    ``"table"``, where ``table`` maps ``(coalition size, flat task id)`` to a
    cost and missing keys fall back to ``default``.
    """

    kind: str = "linear"
    coefficient: float = 4.0
    table: tuple[tuple[int, int, float], ...] = ()
    default: float = 0.0

    def __post_init__(self):
        if self.kind not in ("linear", "zero", "table"):
            raise InvalidInputError(f"unknown cost model kind {self.kind!r}")
        if self.kind == "linear" and not (math.isfinite(self.coefficient) and self.coefficient >= 0):
            raise InvalidInputError("linear cost coefficient must be >= 0")
        table = tuple((int(s), int(f), float(c)) for s, f, c in self.table)
        if any(c < 0 or not math.isfinite(c) for _, _, c in table) or self.default < 0:
            raise InvalidInputError("table costs must be >= 0")
        object.__setattr__(self, "table", table)

    @classmethod
    def zero(cls) -> CostModel:
        return cls(kind="zero", coefficient=0.0)

    @classmethod
    def linear(cls, coefficient: float = 4.0) -> CostModel:
        return cls(kind="linear", coefficient=coefficient)

    def cost(self, size: int, flat_id: int) -> float:
        if self.kind == "zero":
            return 0.0
        if self.kind == "linear":
            return self.coefficient * size
        return dict(((s, f), c) for s, f, c in self.table).get((size, flat_id), float(self.default))

    def costs(self, sizes: np.ndarray, flat_ids: np.ndarray) -> np.ndarray:
        """Vectorised :meth:`cost`; bit-identical to the scalar path."""
        sizes = np.asarray(sizes)
        if self.kind == "zero":
            return np.zeros(sizes.shape)
        if self.kind == "linear":
            return self.coefficient * sizes.astype(float)
        lookup = {(s, f): c for s, f, c in self.table}
        return np.array(
            [lookup.get((int(s), int(f)), float(self.default)) for s, f in zip(sizes, flat_ids)],
            dtype=float,
        )

    def to_json(self) -> dict:
        if self.kind == "zero":
            return {"kind": "zero"}
        if self.kind == "linear":
            return {"kind": "linear", "coefficient": self.coefficient}
        return {"kind": "table", "entries": [list(e) for e in self.table], "default": self.default}


@dataclass(frozen=True)
class Problem:
    robots: tuple[Robot, ...]
    tasks: tuple[Task, ...]
    capability_costs: tuple[float, ...]
    cost_model: CostModel = field(default_factory=CostModel)
    max_coalition_size: int = 5

    def __post_init__(self):
        object.__setattr__(self, "robots", tuple(self.robots))
        object.__setattr__(self, "tasks", tuple(self.tasks))
        object.__setattr__(self, "capability_costs", _as_capabilities(self.capability_costs, "capability_costs"))
        H = len(self.capability_costs)
        for i, r in enumerate(self.robots):
            if r.id != i:
                raise InvalidInputError(f"robot ids must be contiguous from 0; position {i} has id {r.id}")
            if len(r.capabilities) != H:
                raise InvalidInputError(f"robot {i}: expected {H} capabilities, got {len(r.capabilities)}")
        for k, t in enumerate(self.tasks):
            if t.id != k:
                raise InvalidInputError(f"task ids must be contiguous from 0; position {k} has id {t.id}")
            for c in t.configurations:
                if len(c.requirements) != H:
                    raise InvalidInputError(f"task {k}: expected {H} requirements, got {len(c.requirements)}")
        if not self.robots:
            raise InvalidInputError("problem needs at least one robot")
        if not 1 <= self.max_coalition_size <= len(self.robots):
            raise InvalidInputError(
                f"max_coalition_size must lie in [1, {len(self.robots)}], got {self.max_coalition_size}"
            )

    @property
    def H(self) -> int:
        return len(self.capability_costs)

    @property
    def num_flat_tasks(self) -> int:
        return sum(len(t.configurations) for t in self.tasks)

    def flat_id(self, task_id: int, config_index: int) -> int:
        """Index of configuration ``(task_id, config_index)`` in task-major order."""
        self._check_target(task_id, config_index)
        return sum(len(t.configurations) for t in self.tasks[:task_id]) + config_index

    def _check_target(self, task_id: int, config_index: int) -> None:
        if not 0 <= task_id < len(self.tasks):
            raise InvalidInputError(f"task id {task_id} out of range")
        if not 0 <= config_index < len(self.tasks[task_id].configurations):
            raise InvalidInputError(f"config index {config_index} out of range for task {task_id}")

    def _check_coalition(self, coalition: Coalition) -> None:
        for m in coalition.members:
            if not 0 <= m < len(self.robots):
                raise InvalidInputError(f"robot id {m} out of range")

    def capability_matrix(self) -> np.ndarray:
        return np.array([r.capabilities for r in self.robots], dtype=float).reshape(len(self.robots), self.H)

    def to_json(self) -> dict:
        return {
            "H": self.H,
            "k": self.max_coalition_size,
            "capability_costs": list(self.capability_costs),
            "robots": [{"id": r.id, "capabilities": list(r.capabilities)} for r in self.robots],
            "tasks": [
                {"id": t.id, "reward": t.reward, "configurations": [list(c.requirements) for c in t.configurations]}
                for t in self.tasks
            ],
            "cost_model": self.cost_model.to_json(),
        }

    @classmethod
    def from_json(cls, data: dict) -> Problem:
        """Build a problem from the JSON document; validate with :mod:`taskvariants.io` first."""
        cm = data.get("cost_model", {"kind": "linear", "coefficient": 4.0})
        if cm["kind"] == "table":
            cost_model = CostModel(kind="table", table=tuple(tuple(e) for e in cm["entries"]),
                                   default=float(cm.get("default", 0.0)))
        else:
            cost_model = CostModel(kind=cm["kind"], coefficient=float(cm.get("coefficient", 0.0)))
        problem = cls(
            robots=tuple(Robot(r["id"], tuple(r["capabilities"])) for r in data["robots"]),
            tasks=tuple(
                Task(t["id"], t["reward"], tuple(TaskConfiguration(tuple(c)) for c in t["configurations"]))
                for t in data["tasks"]
            ),
            capability_costs=tuple(data["capability_costs"]),
            cost_model=cost_model,
            max_coalition_size=int(data["k"]),
        )
        if problem.H != data["H"]:
            raise InvalidInputError(f"H={data['H']} disagrees with capability_costs length {problem.H}")
        return problem


@dataclass(frozen=True)
class Assignment:
    coalition: Coalition
    task_id: int
    config_index: int
    utility: float


@dataclass(frozen=True)
class Solution:
    assignments: tuple[Assignment, ...] = ()

    @property
    def total_utility(self) -> float:
        return float(sum(a.utility for a in self.assignments))

    def covered_tasks(self) -> set[int]:
        return {a.task_id for a in self.assignments}


def satisfies(coalition: Coalition, config: TaskConfiguration, problem: Problem) -> bool:
    """True when the coalition's summed capabilities meet every requirement."""
    problem._check_coalition(coalition)
    totals = _coalition_totals(problem, [coalition.members])[0]
    return all(t >= p for t, p in zip(totals, config.requirements))


def _coalition_totals(problem: Problem, members: Sequence[Sequence[int]]) -> np.ndarray:
    # Members are summed in sorted order so scalar and batched paths agree bit-for-bit.
    B = problem.capability_matrix()
    out = np.zeros((len(members), problem.H))
    by_size: dict[int, list[int]] = {}
    for idx, m in enumerate(members):
        by_size.setdefault(len(m), []).append(idx)
    for size, rows in by_size.items():
        mem = np.array([members[r] for r in rows], dtype=np.intp).reshape(len(rows), size)
        acc = np.zeros((len(rows), problem.H))
        for col in range(size):
            acc = acc + B[mem[:, col]]
        out[rows] = acc
    return out


def requirement_cost(problem: Problem, task_id: int, config_index: int) -> float:
    """``sum_h P[h] * W[h]`` for one configuration."""
    req = problem.tasks[task_id].configurations[config_index].requirements
    return math.fsum(p * w for p, w in zip(req, problem.capability_costs))


def assignment_utility(coalition: Coalition, task_id: int, config_index: int, problem: Problem) -> float:
    """Reward minus requirement cost minus coordination cost; 0 if infeasible."""
    problem._check_target(task_id, config_index)
    config = problem.tasks[task_id].configurations[config_index]
    if not satisfies(coalition, config, problem):
        return 0.0
    fid = problem.flat_id(task_id, config_index)
    base = problem.tasks[task_id].reward - requirement_cost(problem, task_id, config_index)
    return float(base - problem.cost_model.cost(len(coalition), fid))


def enumerate_coalitions(problem: Problem) -> list[Coalition]:
    """All coalitions of size 1..k, ordered by size then lexicographically."""
    return [Coalition(m) for m in coalition_members(len(problem.robots), problem.max_coalition_size)]


def coalition_members(num_robots: int, k: int) -> list[tuple[int, ...]]:
    return [m for size in range(1, k + 1) for m in combinations(range(num_robots), size)]


@dataclass(frozen=True)
class CandidateArrays:
    """Columnar form of the candidate assignment set.

    Rows are ordered by (task, configuration, coalition index).
    """

    members: list[tuple[int, ...]]
    coalition: np.ndarray
    flat_task: np.ndarray
    origin_task: np.ndarray
    config_index: np.ndarray
    utility: np.ndarray
    flat_origin: np.ndarray
    flat_config: np.ndarray

    def __len__(self) -> int:
        return len(self.utility)


def candidate_arrays(problem: Problem) -> CandidateArrays:
    members = coalition_members(len(problem.robots), problem.max_coalition_size)
    totals = _coalition_totals(problem, members)
    sizes = np.array([len(m) for m in members])
    flat_origin, flat_config, reqs, base = [], [], [], []
    for t in problem.tasks:
        for l, cfg in enumerate(t.configurations):
            flat_origin.append(t.id)
            flat_config.append(l)
            reqs.append(cfg.requirements)
            base.append(t.reward - requirement_cost(problem, t.id, l))
    F = len(flat_origin)
    reqs_arr = np.array(reqs, dtype=float).reshape(F, problem.H)
    feasible = np.all(totals[None, :, :] >= reqs_arr[:, None, :], axis=2)  # F x C
    fi, ci = np.nonzero(feasible)
    util = np.array(base, dtype=float)[fi] - problem.cost_model.costs(sizes[ci], fi)
    keep = util > 0
    fi, ci, util = fi[keep], ci[keep], util[keep]
    flat_origin_arr = np.array(flat_origin, dtype=np.intp)
    flat_config_arr = np.array(flat_config, dtype=np.intp)
    return CandidateArrays(
        members=members,
        coalition=ci.astype(np.intp),
        flat_task=fi.astype(np.intp),
        origin_task=flat_origin_arr[fi],
        config_index=flat_config_arr[fi],
        utility=util,
        flat_origin=flat_origin_arr,
        flat_config=flat_config_arr,
    )


def enumerate_assignments(problem: Problem) -> list[Assignment]:
    """Feasible (coalition, task, configuration) triples with positive utility."""
    arr = candidate_arrays(problem)
    return [
        Assignment(Coalition(arr.members[c]), int(k), int(l), float(u))
        for c, k, l, u in zip(arr.coalition, arr.origin_task, arr.config_index, arr.utility)
    ]


def validate_solution(solution: Solution, problem: Problem) -> tuple[bool, str]:
    """Check a solution against the problem; returns ``(ok, diagnostic)``."""
    used: set[int] = set()
    tasks: set[int] = set()
    for a in solution.assignments:
        try:
            problem._check_coalition(a.coalition)
            problem._check_target(a.task_id, a.config_index)
        except InvalidInputError as exc:
            return False, f"invalid assignment: {exc}"
        if used & set(a.coalition.members):
            return False, "overlapping robots"
        if a.task_id in tasks:
            return False, "duplicate task"
        used.update(a.coalition.members)
        tasks.add(a.task_id)
        config = problem.tasks[a.task_id].configurations[a.config_index]
        if not satisfies(a.coalition, config, problem):
            return False, f"infeasible assignment to task {a.task_id} config {a.config_index}"
        expected = assignment_utility(a.coalition, a.task_id, a.config_index, problem)
        if not math.isclose(expected, a.utility, rel_tol=1e-12, abs_tol=1e-9):
            return False, f"utility mismatch on task {a.task_id}: cached {a.utility}, recomputed {expected}"
    return True, "ok"
