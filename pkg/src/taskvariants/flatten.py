"""Compile a problem with task variants into a flat problem.

Every configuration becomes its own flat task that remembers its origin
task. Validity is kept by the conflict relation: two candidates conflict
when their coalitions share a robot, when they target the same flat task,
or when they target sibling configurations of the same origin task.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import combinations

import numpy as np
import scipy.sparse as sp

from .model import Assignment, CandidateArrays, Coalition, InvalidInputError, Problem, candidate_arrays

DENSE_ADJACENCY_LIMIT = 20_000


@dataclass(frozen=True)
class FlatTask:
    flat_id: int
    origin_task: int
    origin_config: int
    reward: float
    requirements: tuple[float, ...]


class FlatProblem:
    """Flat tasks plus the candidate assignments keyed by flat task id."""

    def __init__(self, base: Problem, flat_tasks: list[FlatTask], arrays: CandidateArrays):
        self.base = base
        self.flat_tasks = flat_tasks
        self.arrays = arrays

    def __len__(self) -> int:
        return len(self.arrays)

    @cached_property
    def assignments(self) -> list[Assignment]:
        a = self.arrays
        return [
            Assignment(Coalition(a.members[c]), int(k), int(l), float(u))
            for c, k, l, u in zip(a.coalition, a.origin_task, a.config_index, a.utility)
        ]

    def assignment(self, index: int) -> Assignment:
        a = self.arrays
        return Assignment(
            Coalition(a.members[a.coalition[index]]),
            int(a.origin_task[index]),
            int(a.config_index[index]),
            float(a.utility[index]),
        )

    @cached_property
    def _index(self) -> dict[tuple[tuple[int, ...], int, int], int]:
        a = self.arrays
        return {
            (a.members[c], int(k), int(l)): i
            for i, (c, k, l) in enumerate(zip(a.coalition, a.origin_task, a.config_index))
        }

    def index_of(self, assignment: Assignment) -> int:
        key = (assignment.coalition.members, assignment.task_id, assignment.config_index)
        try:
            return self._index[key]
        except KeyError:
            raise InvalidInputError(f"assignment {key} is not a candidate of this problem") from None

    @cached_property
    def conflicts(self) -> ConflictOracle:
        return ConflictOracle(self)


def flatten(problem: Problem) -> FlatProblem:
    arrays = candidate_arrays(problem)
    flat_tasks = []
    for t in problem.tasks:
        for l, cfg in enumerate(t.configurations):
            flat_tasks.append(FlatTask(len(flat_tasks), t.id, l, t.reward, cfg.requirements))
    return FlatProblem(problem, flat_tasks, arrays)


@lru_cache(maxsize=16)
def _subset_operators(num_robots: int, k: int) -> tuple[np.ndarray, sp.csr_matrix, sp.csr_matrix]:
    """Coalition masks plus sparse subset operators for overlap sums.

    ``up[s, c] = 1`` when coalition ``s`` is a subset of ``c``;
    ``down[c, s] = (-1)**(|s|+1)`` for the same pairs. For a per-coalition
    weight ``g``, ``down @ (up @ g)`` sums ``g`` over every coalition that
    shares at least one robot with each row coalition (inclusion-exclusion).
    """
    if num_robots > 62:
        raise InvalidInputError("at most 62 robots are supported")
    members = [m for size in range(1, k + 1) for m in combinations(range(num_robots), size)]
    index = {m: i for i, m in enumerate(members)}
    masks = np.array([sum(1 << r for r in m) for m in members], dtype=np.int64)
    rows, cols, signs = [], [], []
    for c, m in enumerate(members):
        for size in range(1, len(m) + 1):
            sign = 1.0 if size % 2 else -1.0
            for s in combinations(m, size):
                rows.append(index[s])
                cols.append(c)
                signs.append(sign)
    n = len(members)
    up = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    down = sp.csr_matrix((signs, (cols, rows)), shape=(n, n))
    return masks, up, down


class ConflictOracle:
    """Conflict queries over the candidate indices of one flat problem."""

    def __init__(self, flat: FlatProblem):
        a = flat.arrays
        base = flat.base
        self.flat = flat
        self.num_tasks = len(base.tasks)
        masks, self._up, self._down = _subset_operators(len(base.robots), base.max_coalition_size)
        self.coalition_masks = masks
        self.masks = masks[a.coalition]
        self.coalition = a.coalition
        self.origin = a.origin_task
        self.flat_task = a.flat_task
        self._num_coalitions = len(masks)

    def conflicts(self, i: int, j: int) -> bool:
        if i == j:
            return False
        return bool(
            (self.masks[i] & self.masks[j]) != 0
            or self.flat_task[i] == self.flat_task[j]
            or self.origin[i] == self.origin[j]
        )

    def conflict_mask(self, i: int, remaining: np.ndarray | None = None) -> np.ndarray:
        """Boolean mask of candidates conflicting with ``i`` (``i`` excluded)."""
        hit = ((self.masks & self.masks[i]) != 0) | (self.flat_task == self.flat_task[i]) | (self.origin == self.origin[i])
        hit[i] = False
        if remaining is not None:
            hit &= remaining
        return hit

    def conflict_sums(self, values: np.ndarray) -> np.ndarray:
        """``out[x] = sum of values[j]`` over candidates ``j`` conflicting with ``x``.

        Candidates outside the live set should carry a zero value.
        """
        T = self.num_tasks
        if len(values) == 0:
            return np.zeros(0)
        per = np.bincount(self.coalition * T + self.origin, weights=values,
                          minlength=self._num_coalitions * T).reshape(self._num_coalitions, T)
        overlap = np.asarray(self._down @ (self._up @ per))
        overlap_all = overlap.sum(axis=1)
        task_total = per.sum(axis=0)
        return (overlap_all[self.coalition] + task_total[self.origin]
                - overlap[self.coalition, self.origin] - values)

    def conflict_counts(self, remaining: np.ndarray) -> np.ndarray:
        """Number of live candidates conflicting with each candidate."""
        return np.rint(self.conflict_sums(remaining.astype(float))).astype(np.int64)

    def adjacency(self) -> np.ndarray:
        """Dense symmetric conflict matrix with a false diagonal."""
        n = len(self.masks)
        if n > DENSE_ADJACENCY_LIMIT:
            raise InvalidInputError(f"dense adjacency limited to {DENSE_ADJACENCY_LIMIT} candidates, got {n}")
        adj = ((self.masks[:, None] & self.masks[None, :]) != 0)
        adj |= self.origin[:, None] == self.origin[None, :]
        adj |= self.flat_task[:, None] == self.flat_task[None, :]
        np.fill_diagonal(adj, False)
        return adj

    def packed_adjacency(self) -> np.ndarray:
        """Bit-packed rows of :meth:`adjacency`, built in blocks to bound memory."""
        n = len(self.masks)
        if n > DENSE_ADJACENCY_LIMIT:
            raise InvalidInputError(f"dense adjacency limited to {DENSE_ADJACENCY_LIMIT} candidates, got {n}")
        out = np.zeros((n, (n + 7) // 8), dtype=np.uint8)
        for start in range(0, n, 1024):
            stop = min(n, start + 1024)
            block = (self.masks[start:stop, None] & self.masks[None, :]) != 0
            block |= self.origin[start:stop, None] == self.origin[None, :]
            block |= self.flat_task[start:stop, None] == self.flat_task[None, :]
            block[np.arange(stop - start), np.arange(start, stop)] = False
            out[start:stop] = np.packbits(block, axis=1)
        return out


def conflicts(a: Assignment, b: Assignment, flat: FlatProblem) -> bool:
    """Whether two assignments cannot both belong to a solution."""
    return flat.conflicts.conflicts(flat.index_of(a), flat.index_of(b))


def conflict_set(a: Assignment, remaining: set[int], flat: FlatProblem) -> set[int]:
    """Indices in ``remaining`` that conflict with ``a``."""
    i = flat.index_of(a)
    oracle = flat.conflicts
    return {j for j in remaining if oracle.conflicts(i, j)}


def prune(remaining: set[int], chosen: Assignment, flat: FlatProblem) -> set[int]:
    """Drop ``chosen`` and everything conflicting with it from ``remaining``."""
    i = flat.index_of(chosen)
    if i not in remaining:
        raise InvalidInputError("chosen assignment is not in the remaining set")
    return remaining - {i} - conflict_set(chosen, remaining, flat)
