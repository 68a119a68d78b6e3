"""Plan surgery: dropping, appending and repeating flights.

Changing ``k`` flights moves every pair count by at most ``k``, hence moves
the utility by at most ``k`` in either direction.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import (
    InvalidPlanError,
    TournamentPlan,
    ValidationReport,
    Violation,
    default_mode,
    ensure_valid,
    utility,
    validate_plan,
)


@dataclass(frozen=True)
class TransformBound:
    """Utility window after adding or removing ``k`` flights.

    ``lower``/``upper`` is the nominal window ``[u, u + k]``.  Only ``upper`` is
    unconditional; the unconditional lower end is ``hard_lower = max(0, u - k)``,
    which coincides with ``lower`` when the source plan is perfect.
    """

    utility_before: int
    k: int

    @property
    def lower(self) -> int:
        return self.utility_before

    @property
    def upper(self) -> int:
        return self.utility_before + self.k

    @property
    def hard_lower(self) -> int:
        return max(0, self.utility_before - self.k)

    def contains(self, value: int) -> bool:
        return self.lower <= value <= self.upper

    def admits(self, value: int) -> bool:
        return self.hard_lower <= value <= self.upper


def transform_bound(plan: TournamentPlan, k: int) -> TransformBound:
    return TransformBound(utility(plan).utility, k)


def remove_flights(plan: TournamentPlan, indices: Iterable[int]) -> TournamentPlan:
    """Drop the flights at the given 0-based row indices."""
    drop = set(int(i) for i in indices)
    bad = sorted(i for i in drop if not 0 <= i < plan.n_flights)
    if bad:
        raise IndexError(f"flight indices {bad} out of range 0..{plan.n_flights - 1}")
    if len(drop) >= plan.n_flights:
        raise ValueError("cannot remove every flight of a plan")
    keep = [i for i in range(plan.n_flights) if i not in drop]
    return TournamentPlan(plan.params.with_flights(len(keep)), plan.grid[keep])


def add_flights(plan: TournamentPlan, new_rows: Sequence[Sequence[int]]) -> TournamentPlan:
    """Append flights; each new row must be a valid flight for the plan's mode."""
    rows = [list(r) for r in new_rows]
    if not rows:
        return plan
    for r in rows:
        if len(r) != plan.n_teams:
            raise InvalidPlanError(
                ValidationReport("strict", (Violation(0, "shape", f"row has {len(r)} entries, expected {plan.n_teams}"),))
            )
    extra = TournamentPlan(plan.params.with_flights(len(rows)), rows)
    report = validate_plan(extra, default_mode(plan))
    if not report.ok:
        raise InvalidPlanError(report)
    grid = np.vstack([plan.grid, extra.grid])
    return TournamentPlan(plan.params.with_flights(grid.shape[0]), grid)


def repeat(plan: TournamentPlan, n: int) -> TournamentPlan:
    """The plan's flights ``n`` times in sequence."""
    if n < 1:
        raise ValueError(f"repeat count must be >= 1, got {n}")
    grid = np.tile(plan.grid, (n, 1))
    return TournamentPlan(plan.params.with_flights(grid.shape[0]), grid)


def _flight_pair_tensor(plan: TournamentPlan) -> np.ndarray:
    """``(n_flights, n_pairs)`` 0/1 matrix: does pair p share a race in flight f."""
    t = plan.n_teams
    iu = np.triu_indices(t, k=1)
    g = plan.grid
    same = (g[:, iu[0]] == g[:, iu[1]]) & (g[:, iu[0]] != 0)
    return same.astype(np.int64)


def _spread(counts: np.ndarray) -> int:
    return int(counts.max() - counts.min())


def best_removal_search(
    plan: TournamentPlan,
    k: int,
    *,
    max_seconds: float | None = 10.0,
    max_iterations: int | None = None,
    restarts: int = 20,
    seed: int = 0,
) -> TournamentPlan:
    """Heuristically pick ``k`` flights to drop so the remaining utility is small.

    Steepest-descent local search over removal sets (swap one removed flight
    with one kept flight), restarted from random removal sets.  The first
    start is "drop the first k flights", so the result is never worse than
    that.  When the budget runs out the best set found so far is returned.
    Deterministic for a fixed seed and ``max_seconds=None``.
    """
    if k == 0:
        return plan
    if not 0 < k < plan.n_flights:
        raise ValueError(f"k must satisfy 0 <= k < n_flights={plan.n_flights}, got {k}")
    ensure_valid(plan)
    rng = random.Random(seed)
    m = _flight_pair_tensor(plan)
    total = m.sum(axis=0)
    n = plan.n_flights
    deadline = None if max_seconds is None else time.monotonic() + max_seconds
    iterations = 0

    def out_of_budget() -> bool:
        if max_iterations is not None and iterations >= max_iterations:
            return True
        return deadline is not None and time.monotonic() > deadline

    best_set: list[int] = list(range(k))
    best_val = _spread(total - m[best_set].sum(axis=0))
    start_sets = [list(range(k))]
    for _ in range(max(0, restarts - 1)):
        start_sets.append(sorted(rng.sample(range(n), k)))

    for removed in start_sets:
        if out_of_budget():
            break
        removed = list(removed)
        counts = total - m[removed].sum(axis=0)
        current = _spread(counts)
        while not out_of_budget():
            iterations += 1
            kept = [i for i in range(n) if i not in set(removed)]
            best_move = None
            best_move_val = current
            for a_pos, a in enumerate(removed):
                # put `a` back, take `b` out
                base = counts + m[a]
                cand = base[None, :] - m[kept]
                vals = cand.max(axis=1) - cand.min(axis=1)
                j = int(np.argmin(vals))
                if vals[j] < best_move_val:
                    best_move_val = int(vals[j])
                    best_move = (a_pos, kept[j])
            if best_move is None:
                break
            a_pos, b = best_move
            counts = counts + m[removed[a_pos]] - m[b]
            removed[a_pos] = b
            current = best_move_val
        if current < best_val:
            best_val, best_set = current, sorted(removed)
        if best_val == 0:
            break
    return remove_flights(plan, best_set)


__all__ = [
    "TransformBound",
    "add_flights",
    "best_removal_search",
    "remove_flights",
    "repeat",
    "transform_bound",
]
