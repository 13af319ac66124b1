"""Greedy allocation heuristics, an exact oracle and the conflict-free bound."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .flatten import FlatProblem, flatten
from .model import Assignment, Problem, Solution

# Scores within this relative distance of the best are ties; the lowest index wins.
TIE_TOL = 1e-9


class OracleBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class Step:
    index: int
    assignment: Assignment
    criterion: float


@dataclass
class SolverResult:
    solver: str
    solution: Solution
    steps: list[Step] = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def utility(self) -> float:
        return self.solution.total_utility

    def to_json(self, include_timing: bool = True) -> dict:
        def encode(a: Assignment) -> dict:
            return {"task": a.task_id, "config": a.config_index, "coalition": list(a.coalition.members)}

        out = {
            "solver": self.solver,
            "utility": self.utility,
            "assignments": [encode(a) for a in self.solution.assignments],
            "steps": [
                {"step": s.index, **encode(s.assignment), "utility": s.assignment.utility, "criterion": s.criterion}
                for s in self.steps
            ],
        }
        if include_timing:
            out["elapsed_s"] = self.elapsed
        return out


def pick(scores: np.ndarray, live: np.ndarray) -> int:
    """Index of the best live score; near-ties go to the lowest index."""
    best = scores[live].max()
    tol = TIE_TOL * max(1.0, abs(best))
    return int(np.flatnonzero(live & (scores >= best - tol))[0])


Scorer = Callable[[FlatProblem, np.ndarray], np.ndarray]


def greedy(flat: FlatProblem, scorer: Scorer, name: str, live: np.ndarray | None = None) -> SolverResult:
    """Shared greedy loop: score live candidates, take the best, prune its conflicts."""
    start = time.perf_counter()
    n = len(flat)
    live = np.ones(n, dtype=bool) if live is None else live.copy()
    oracle = flat.conflicts
    steps: list[Step] = []
    while live.any():
        scores = scorer(flat, live)
        i = pick(scores, live)
        steps.append(Step(len(steps), flat.assignment(i), float(scores[i])))
        live &= ~oracle.conflict_mask(i)
        live[i] = False
    solution = Solution(tuple(s.assignment for s in steps))
    return SolverResult(name, solution, steps, time.perf_counter() - start)


def max_util_scores(flat: FlatProblem, live: np.ndarray) -> np.ndarray:
    return flat.arrays.utility


def rc_scores(flat: FlatProblem, live: np.ndarray) -> np.ndarray:
    """Utility minus the expected loss inflicted on conflicting candidates.

    Each live conflicting neighbour ``j`` contributes ``U_j / |conflicts(j)|``
    with both conflict sets measured against the live set.
    """
    oracle = flat.conflicts
    util = flat.arrays.utility
    counts = oracle.conflict_counts(live)
    share = np.zeros_like(util)
    ok = live & (counts > 0)
    share[ok] = util[ok] / counts[ok]
    return util - oracle.conflict_sums(share)


def _robot_incidence(flat: FlatProblem) -> np.ndarray:
    """``inc[c, i] = 1.0`` when robot ``i`` belongs to coalition ``c``."""
    masks = flat.conflicts.coalition_masks
    R = len(flat.base.robots)
    return ((masks[:, None] >> np.arange(R)[None, :]) & 1).astype(float)


def rca_scores_factory(phi_domain: str = "task") -> Scorer:
    """Per-(robot, flat task) approximation of :func:`rc_scores`.

    ``beta[l, i]`` is the fraction of live candidates for flat task ``l`` that
    use robot ``i``; ``phi[l, i]`` scales it by the mean live utility of
    candidates for ``l`` that use ``i`` (``phi_domain="task"``) or of all live
    candidates that use ``i`` (``phi_domain="robot"``). A candidate is charged
    ``phi`` for each of its robots over flat tasks of other origin tasks.
    Everything is aggregated per coalition first, so a step costs
    ``O(|M| + |C| * R * F)`` rather than touching candidate pairs.
    """
    if phi_domain not in ("task", "robot"):
        raise ValueError(f"phi_domain must be 'task' or 'robot', got {phi_domain!r}")
    cache: dict[int, np.ndarray] = {}

    def score(flat: FlatProblem, live: np.ndarray) -> np.ndarray:
        key = id(flat)
        if key not in cache:
            cache.clear()
            cache[key] = _robot_incidence(flat)
        inc = cache[key]
        a = flat.arrays
        util = a.utility
        C, R = inc.shape
        F = len(flat.flat_tasks)
        T = len(flat.base.tasks)
        cell = a.coalition[live] * F + a.flat_task[live]
        count_cf = np.bincount(cell, minlength=C * F).reshape(C, F)
        util_cf = np.bincount(cell, weights=util[live], minlength=C * F).reshape(C, F)
        per_task = count_cf.sum(axis=0)
        uses = count_cf.T @ inc  # F x R
        beta = np.divide(uses, per_task[:, None], out=np.zeros((F, R)), where=per_task[:, None] > 0)
        if phi_domain == "task":
            mean = np.divide(util_cf.T @ inc, uses, out=np.zeros((F, R)), where=uses > 0)
        else:
            n_i = uses.sum(axis=0)
            tot_i = (util_cf.T @ inc).sum(axis=0)
            mean = np.broadcast_to(np.divide(tot_i, n_i, out=np.zeros(R), where=n_i > 0), (F, R))
        phi = beta * mean
        phi_origin = np.zeros((T, R))
        np.add.at(phi_origin, a.flat_origin, phi)
        # Charge every robot's loss on all tasks, then refund the candidate's own origin task.
        charge = inc @ phi_origin.T  # C x T
        return util - (charge.sum(axis=1)[a.coalition] - charge[a.coalition, a.origin_task])

    return score


def solve_flat_max_util(flat: FlatProblem) -> SolverResult:
    return greedy(flat, max_util_scores, "flat_max_util")


def solve_flat_rc(flat: FlatProblem) -> SolverResult:
    return greedy(flat, rc_scores, "flat_rc")


def solve_flat_rca(flat: FlatProblem, phi_domain: str = "task") -> SolverResult:
    return greedy(flat, rca_scores_factory(phi_domain), "flat_rca")


def draw_configurations(problem: Problem, seed: int) -> list[int]:
    rng = np.random.default_rng(seed)
    return [int(rng.integers(len(t.configurations))) for t in problem.tasks]


def solve_random_config(problem: Problem, seed: int, flat: FlatProblem | None = None) -> SolverResult:
    """Fix one uniformly drawn configuration per task, then run max-utility greedy.

    Restricting the flat candidates to the drawn configurations is the same
    as enumerating the reduced single-variant problem, and keeps table cost
    models keyed by the original flat ids.
    """
    start = time.perf_counter()
    flat = flatten(problem) if flat is None else flat
    chosen = draw_configurations(problem, seed)
    a = flat.arrays
    live = a.config_index == np.asarray(chosen, dtype=np.intp)[a.origin_task] if len(a) else np.zeros(0, bool)
    result = greedy(flat, max_util_scores, "random_config", live)
    result.elapsed = time.perf_counter() - start
    return result


def upper_bound(flat: FlatProblem) -> float:
    """Sum over origin tasks of the best candidate utility, ignoring conflicts."""
    a = flat.arrays
    best = np.zeros(len(flat.base.tasks))
    np.maximum.at(best, a.origin_task, a.utility)
    return float(best.sum())


def solve_exact(flat: FlatProblem, budget: int = 2_000_000) -> Solution:
    """Branch and bound over tasks: each task takes one disjoint candidate or none.

    The bound at a node is the incumbent value plus the best candidate of every
    undecided task with conflicts ignored. Raises :class:`OracleBudgetExceeded`
    after ``budget`` nodes rather than returning an unproven answer.
    """
    a = flat.arrays
    T = len(flat.base.tasks)
    masks = flat.conflicts.masks
    per_task: list[list[tuple[float, int, int]]] = [[] for _ in range(T)]
    for i in range(len(a)):
        per_task[a.origin_task[i]].append((float(a.utility[i]), int(masks[i]), i))
    for cands in per_task:
        cands.sort(key=lambda c: (-c[0], c[2]))
    order = [t for t in range(T) if per_task[t]]
    suffix = [0.0] * (len(order) + 1)
    for pos in range(len(order) - 1, -1, -1):
        suffix[pos] = suffix[pos + 1] + per_task[order[pos]][0][0]

    best_value = 0.0
    best_pick: list[int] = []
    chosen: list[int] = []
    nodes = 0

    def visit(pos: int, used: int, value: float) -> None:
        nonlocal best_value, best_pick, nodes
        nodes += 1
        if nodes > budget:
            raise OracleBudgetExceeded(f"oracle budget exceeded after {budget} nodes")
        if value > best_value:
            best_value, best_pick = value, list(chosen)
        if pos == len(order) or value + suffix[pos] <= best_value:
            return
        rest = suffix[pos + 1]
        for util, mask, i in per_task[order[pos]]:
            if value + util + rest <= best_value:
                break
            if mask & used:
                continue
            chosen.append(i)
            visit(pos + 1, used | mask, value + util)
            chosen.pop()
        visit(pos + 1, used, value)

    visit(0, 0, 0.0)
    return Solution(tuple(flat.assignment(i) for i in sorted(best_pick)))


def rc_bound_denominator(flat: FlatProblem, optimal: Solution) -> int:
    """``min(2k + 4, max conflict-set size over optimal assignments)`` at the first step."""
    k = flat.base.max_coalition_size
    if not optimal.assignments:
        return 1
    oracle = flat.conflicts
    sizes = [int(oracle.conflict_mask(flat.index_of(a)).sum()) for a in optimal.assignments]
    # An optimum made of conflict-free candidates is always fully recovered.
    return max(1, min(2 * k + 4, max(sizes)))


@dataclass
class BoundReport:
    upper_bound: float
    optimal: float | None
    ratios: dict[str, float]


def bound_report(flat: FlatProblem, results: dict[str, SolverResult], optimal: Solution | None = None) -> BoundReport:
    ub = upper_bound(flat)
    ratios = {name: (r.utility / ub if ub > 0 else 1.0) for name, r in results.items()}
    return BoundReport(ub, None if optimal is None else optimal.total_utility, ratios)


SOLVERS = ("flat_max_util", "flat_rc", "flat_rca", "random_config")


def run_solver(name: str, problem: Problem, flat: FlatProblem, seed: int = 0) -> SolverResult:
    if name == "flat_max_util":
        return solve_flat_max_util(flat)
    if name == "flat_rc":
        return solve_flat_rc(flat)
    if name == "flat_rca":
        return solve_flat_rca(flat)
    if name == "random_config":
        return solve_random_config(problem, seed, flat)
    if name == "exact":
        start = time.perf_counter()
        solution = solve_exact(flat)
        return SolverResult("exact", solution, [], time.perf_counter() - start)
    raise ValueError(f"unknown solver {name!r}")
