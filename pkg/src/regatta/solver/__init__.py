"""Exact and heuristic search for tournament plans.

``solve_exact`` minimises the utility by branch and bound, ``probe_feasibility``
decides whether all pair counts can be kept inside a fixed window ``[a, b]``,
and ``prove_optimal_utility`` combines the two into an optimality certificate.
``brute_force`` is an independent exhaustive oracle for small instances.
"""

from __future__ import annotations

import math
import multiprocessing as mp
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from ..core import (
    LeagueParams,
    TournamentPlan,
    derive,
    ensure_valid,
    utility,
)
from .bruteforce import SearchCapExceeded, enumerate_flights, exhaustive
from .engine import Budget, BudgetExhausted, FlightSearch
from .heuristic import local_search

OPTIMAL = "optimal"
FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
UNKNOWN = "unknown"


@dataclass
class SolveOutcome:
    status: str
    best_plan: TournamentPlan | None = None
    best_utility: int | None = None
    proof: list[tuple[int, int]] = field(default_factory=list)
    nodes_explored: int = 0
    wall_time: float = 0.0
    window: tuple[int, int] | None = None
    achieved: frozenset | None = None

    def window_feasible(self, a: int, b: int) -> bool:
        """Only for brute-force outcomes, which know every achievable window."""
        if self.achieved is None:
            raise ValueError("this outcome carries no feasibility map")
        return any(a <= lo and hi <= b for lo, hi in self.achieved)

    def to_dict(self, include_timing: bool = False) -> dict:
        out = {
            "status": self.status,
            "best_utility": self.best_utility,
            "proof": [list(w) for w in self.proof],
            "nodes_explored": self.nodes_explored,
        }
        if self.window is not None:
            out["window"] = list(self.window)
        if self.best_plan is not None:
            rep = utility(self.best_plan)
            out["params"] = list(self.best_plan.params.as_tuple())
            out["lambda_min"] = rep.lambda_min
            out["lambda_max"] = rep.lambda_max
            out["plan"] = [list(r) for r in self.best_plan.rows()]
        if include_timing:
            out["wall_time"] = round(self.wall_time, 3)
        return out


def _plan(params: LeagueParams, rows) -> TournamentPlan:
    plan = TournamentPlan(params, rows)
    ensure_valid(plan, "strict")
    return plan


def _avg(params: LeagueParams) -> Fraction:
    return derive(params).lambda_avg


def straddling_windows(params: LeagueParams, width: int) -> list[tuple[int, int]]:
    """Windows ``[a, a + width]`` that can contain every pair count.

    Every plan has ``lambda_min <= avg <= lambda_max``, so only windows around
    the average matter.  Ordered by distance of their centre from the average.
    """
    avg = _avg(params)
    lo_a = max(0, math.ceil(avg) - width)
    hi_a = min(math.floor(avg), params.n_flights - width)
    wins = [(a, a + width) for a in range(lo_a, hi_a + 1)]
    return sorted(wins, key=lambda w: (abs(Fraction(w[0] + w[1], 2) - avg), w[0]))


def _narrower_windows(params: LeagueParams, u: int) -> list[tuple[int, int]]:
    return [w for width in range(u) for w in straddling_windows(params, width)]


def _trivial(params: LeagueParams) -> TournamentPlan | None:
    if params.n_inflight == 1:
        return TournamentPlan(params, [[1] * params.n_teams] * params.n_flights)
    return None


# -- parallel driver ---------------------------------------------------------

class _Shared:
    def __init__(self, value, stop_event, probe):
        self.value = value
        self.stop_event = stop_event
        self.probe = probe

    def sync(self, search: FlightSearch) -> None:
        if self.stop_event.is_set():
            search.stop = True
            raise BudgetExhausted
        v = self.value.value
        if v >= 0 and (search.best_utility is None or v < search.best_utility):
            search.best_utility = v

    def offer(self, search: FlightSearch) -> None:
        with self.value.get_lock():
            v = self.value.value
            if v < 0 or search.best_utility < v:
                self.value.value = search.best_utility
        if search.stop:
            self.stop_event.set()


_worker_shared: _Shared | None = None


def _init_worker(value, stop_event, probe):
    global _worker_shared
    _worker_shared = _Shared(value, stop_event, probe)


def _worker(params, window, incumbent, symmetry, prefix, start, max_nodes, deadline):
    search = FlightSearch(
        params, window=window, incumbent=incumbent, prefix=prefix, symmetry=symmetry,
        max_nodes=max_nodes, deadline=deadline, shared=_worker_shared,
    )
    exhausted = search.run(start)
    if window is not None and search.best_rows is not None and _worker_shared is not None:
        _worker_shared.stop_event.set()
    found = search.best_rows is not None
    return exhausted, (search.best_utility if found else None), search.full_rows(), search.nodes


def _split(search: FlightSearch, want: int, max_depth: int = 3) -> list[list[tuple[int, ...]]]:
    tasks: list[list[tuple[int, ...]]] = [[]]
    for _ in range(max_depth):
        if len(tasks) >= want:
            break
        nxt = []
        for start in tasks:
            for row in start:
                search._push(row)
            try:
                kids = search.child_rows()
            finally:
                for _row in start:
                    search._pop()
            nxt.extend(start + [k] for k in kids)
        if not nxt:
            break
        tasks = nxt
    return tasks


def _run_search(params, *, window, incumbent, symmetry, prefix, budget: Budget, threads: int):
    """Returns ``(exhausted, best_utility, rows, nodes)``."""
    deadline = budget.deadline
    if threads <= 1:
        s = FlightSearch(
            params, window=window, incumbent=incumbent, prefix=prefix, symmetry=symmetry,
            max_nodes=budget.max_nodes, deadline=deadline,
        )
        exhausted = s.run()
        found = s.best_rows is not None
        return exhausted, (s.best_utility if found else None), s.full_rows(), s.nodes

    root = FlightSearch(params, window=window, incumbent=incumbent, prefix=prefix, symmetry=symmetry)
    tasks = _split(root, want=4 * threads)
    ctx = mp.get_context("spawn")
    value = ctx.Value("i", -1 if incumbent is None else incumbent)
    stop_event = ctx.Event()
    per_task_nodes = None if budget.max_nodes is None else max(1, budget.max_nodes // len(tasks))
    exhausted_all = True
    best_u, best_rows, nodes = None, None, root.nodes
    with ProcessPoolExecutor(
        max_workers=threads, mp_context=ctx, initializer=_init_worker,
        initargs=(value, stop_event, window is not None),
    ) as pool:
        futs = [
            pool.submit(_worker, params, window, incumbent, symmetry, prefix, t, per_task_nodes, deadline)
            for t in tasks
        ]
        for fut in futs:
            exhausted, u, rows, n = fut.result()
            nodes += n
            exhausted_all &= exhausted
            if rows is not None and (best_u is None or u < best_u):
                best_u, best_rows = u, rows
    if window is not None and best_rows is not None:
        exhausted_all = True
    if window is None and best_u is not None and best_u <= root.lower_bound:
        exhausted_all = True
    return exhausted_all, best_u, best_rows, nodes


# -- public API -----------------------------------------------------------------

def _budget(budget: Budget | None) -> Budget:
    return (budget or Budget()).start()


def probe_feasibility(
    params: LeagueParams,
    a: int,
    b: int,
    budget: Budget | None = None,
    *,
    symmetry: bool = True,
    threads: int = 1,
) -> SolveOutcome:
    """Is there a plan with every pair count in ``[a, b]``?"""
    if not 0 <= a <= b <= params.n_flights:
        raise ValueError(f"need 0 <= a <= b <= n_flights={params.n_flights}, got a={a}, b={b}")
    t0 = time.monotonic()
    budget = _budget(budget)
    avg = _avg(params)
    trivial = _trivial(params)
    if not (a <= avg <= b):
        return SolveOutcome(INFEASIBLE, proof=[(a, b)], window=(a, b), wall_time=time.monotonic() - t0)
    if trivial is not None:
        return SolveOutcome(FEASIBLE, trivial, 0, window=(a, b), wall_time=time.monotonic() - t0)
    exhausted, u, rows, nodes = _run_search(
        params, window=(a, b), incumbent=None, symmetry=symmetry, prefix=(), budget=budget, threads=threads
    )
    dt = time.monotonic() - t0
    if rows is not None:
        plan = _plan(params, rows)
        return SolveOutcome(FEASIBLE, plan, utility(plan).utility, nodes_explored=nodes, wall_time=dt, window=(a, b))
    if exhausted:
        return SolveOutcome(INFEASIBLE, proof=[(a, b)], nodes_explored=nodes, wall_time=dt, window=(a, b))
    return SolveOutcome(UNKNOWN, nodes_explored=nodes, wall_time=dt, window=(a, b))


def _heuristic_plan(params: LeagueParams, seed: int, prefix=(), moves: int = 5000) -> TournamentPlan:
    rows = local_search(params, prefix=prefix, rng=random.Random(seed), max_seconds=None, max_moves=moves, restarts=2)
    return _plan(params, rows)


def solve_exact(
    params: LeagueParams,
    budget: Budget | None = None,
    *,
    symmetry: bool = True,
    threads: int = 1,
    seed: int = 0,
    warm_start: bool = True,
) -> SolveOutcome:
    """Minimise ``lambda_max - lambda_min`` by branch and bound over flights.

    A seeded local search supplies the first incumbent when ``warm_start`` is
    set.  ``optimal`` means the search space was exhausted; on budget
    exhaustion the best plan found so far is returned as ``feasible``.
    """
    t0 = time.monotonic()
    budget = _budget(budget)
    trivial = _trivial(params)
    if trivial is not None:
        return SolveOutcome(OPTIMAL, trivial, 0, wall_time=time.monotonic() - t0)
    incumbent_plan = _heuristic_plan(params, seed) if warm_start else None
    incumbent = utility(incumbent_plan).utility if incumbent_plan is not None else None
    exhausted, u, rows, nodes = _run_search(
        params, window=None, incumbent=incumbent, symmetry=symmetry, prefix=(), budget=budget, threads=threads
    )
    best_plan = _plan(params, rows) if rows is not None else incumbent_plan
    best_u = utility(best_plan).utility if best_plan is not None else None
    dt = time.monotonic() - t0
    if best_plan is None:
        return SolveOutcome(UNKNOWN, nodes_explored=nodes, wall_time=dt)
    if exhausted:
        return SolveOutcome(
            OPTIMAL, best_plan, best_u, proof=_narrower_windows(params, best_u),
            nodes_explored=nodes, wall_time=dt,
        )
    return SolveOutcome(FEASIBLE, best_plan, best_u, nodes_explored=nodes, wall_time=dt)


def prove_optimal_utility(
    params: LeagueParams,
    budget: Budget | None = None,
    *,
    seed: int = 0,
    threads: int = 1,
    symmetry: bool = True,
    incumbent: TournamentPlan | None = None,
) -> SolveOutcome:
    """Certify the optimum by probing every narrower window around the average.

    Widths are tried from the smallest possible upwards; the first feasible
    window gives the optimum, and all windows probed before it form the
    infeasibility certificate.  If some probe runs out of budget the outcome
    is ``feasible`` (a plan is known but not certified) or ``unknown``.
    A known plan passed as ``incumbent`` replaces the local-search start.
    """
    t0 = time.monotonic()
    budget = _budget(budget)
    trivial = _trivial(params)
    if trivial is not None:
        return SolveOutcome(OPTIMAL, trivial, 0, wall_time=time.monotonic() - t0)
    if incumbent is not None:
        if incumbent.params != params:
            raise ValueError(f"incumbent has parameters {incumbent.params}, expected {params}")
        ensure_valid(incumbent, "strict")
    else:
        incumbent = _heuristic_plan(params, seed)
    u0 = utility(incumbent).utility
    proof: list[tuple[int, int]] = []
    nodes = 0
    undecided = False
    avg = _avg(params)
    start_width = 0 if avg.denominator == 1 else 1
    for width in range(start_width, u0):
        for a, b in straddling_windows(params, width):
            out = probe_feasibility(params, a, b, budget, symmetry=symmetry, threads=threads)
            nodes += out.nodes_explored
            if out.status == FEASIBLE:
                if undecided:
                    return SolveOutcome(FEASIBLE, out.best_plan, out.best_utility, proof, nodes, time.monotonic() - t0)
                return SolveOutcome(OPTIMAL, out.best_plan, out.best_utility, proof, nodes, time.monotonic() - t0)
            if out.status == INFEASIBLE:
                proof.append((a, b))
            else:
                undecided = True
    status = FEASIBLE if undecided else OPTIMAL
    return SolveOutcome(status, incumbent, u0, proof, nodes, time.monotonic() - t0)


def greedy_extend(
    prefix: TournamentPlan,
    total_flights: int,
    step: int = 1,
    budget: Budget | None = None,
    *,
    seed: int = 0,
    block_nodes: int | None = 200_000,
) -> TournamentPlan:
    """Append ``step`` flights at a time, each block chosen to minimise utility.

    Each block is first filled by local search, then improved by an exact
    branch and bound over the block with the earlier flights fixed, as far
    as ``block_nodes`` and the time budget allow.  This is the natural greedy
    strategy and can end strictly worse than the optimum for the final
    number of flights.
    """
    if step < 1:
        raise ValueError(f"step must be >= 1, got {step}")
    if total_flights < prefix.n_flights:
        raise ValueError("total_flights is smaller than the prefix")
    ensure_valid(prefix, "strict")
    budget = _budget(budget)
    rng_seed = seed
    rows = prefix.rows()
    while len(rows) < total_flights:
        block = min(step, total_flights - len(rows))
        params = prefix.params.with_flights(len(rows) + block)
        heur = local_search(params, prefix=rows, rng=random.Random(rng_seed), max_seconds=None, max_moves=3000, restarts=2)
        rng_seed += 1
        best = _plan(params, heur)
        u = utility(best).utility
        remaining = budget.remaining_seconds()
        if remaining is None or remaining > 0:
            search = FlightSearch(
                params, incumbent=u, prefix=rows, max_nodes=block_nodes, deadline=budget.deadline,
            )
            search.run()
            if search.best_rows is not None:
                best = _plan(params, search.full_rows())
        rows = best.rows()
    return TournamentPlan(prefix.params.with_flights(len(rows)), rows)


def brute_force(params: LeagueParams, cap: int = 10**7) -> SolveOutcome:
    """Exhaustive optimum plus the set of achievable ``(lambda_min, lambda_max)``."""
    t0 = time.monotonic()
    rows, best, achieved = exhaustive(params, cap)
    plan = TournamentPlan(params, rows)
    proof = [w for w in _narrower_windows(params, best) if not any(w[0] <= lo and hi <= w[1] for lo, hi in achieved)]
    return SolveOutcome(OPTIMAL, plan, best, proof, 0, time.monotonic() - t0, achieved=achieved)


__all__ = [
    "Budget",
    "FEASIBLE",
    "INFEASIBLE",
    "OPTIMAL",
    "SearchCapExceeded",
    "SolveOutcome",
    "UNKNOWN",
    "brute_force",
    "enumerate_flights",
    "greedy_extend",
    "probe_feasibility",
    "prove_optimal_utility",
    "solve_exact",
    "straddling_windows",
]
