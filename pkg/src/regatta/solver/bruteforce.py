"""Exhaustive enumeration over multisets of flights, for cross-checking the search."""

from __future__ import annotations

import itertools
import math

import numpy as np

from ..core import LeagueParams, RegattaError


class SearchCapExceeded(RegattaError):
    pass


def enumerate_flights(params: LeagueParams) -> list[tuple[int, ...]]:
    """Every flight once, races labelled in order of first appearance."""
    params.require_divisible()
    T, R, G = params.n_teams, params.n_inrace, params.n_inflight
    out = []
    for row in itertools.product(range(1, G + 1), repeat=T):
        if any(row.count(v) != R for v in range(1, G + 1)):
            continue
        seen = []
        for v in row:
            if v not in seen:
                seen.append(v)
        if seen == list(range(1, G + 1)):
            out.append(row)
    return out


def search_space_size(params: LeagueParams) -> int:
    n = len(enumerate_flights(params))
    return math.comb(n + params.n_flights - 1, params.n_flights)


def exhaustive(params: LeagueParams, cap: int = 10**7):
    """Return ``(best_rows, best_utility, achieved)`` over all flight multisets.

    ``achieved`` is the set of ``(lambda_min, lambda_max)`` pairs realised by
    some plan, which determines feasibility of every window.
    """
    flights = enumerate_flights(params)
    F = params.n_flights
    size = math.comb(len(flights) + F - 1, F)
    if size > cap:
        raise SearchCapExceeded(f"{size} flight multisets for {params} exceed cap {cap}")
    T = params.n_teams
    iu = np.triu_indices(T, k=1)
    vecs = np.array(
        [[int(f[i] == f[j]) for i, j in zip(*iu)] for f in flights], dtype=np.int64
    )
    best = None
    best_combo = None
    achieved: set[tuple[int, int]] = set()
    for combo in itertools.combinations_with_replacement(range(len(flights)), F):
        counts = vecs[list(combo)].sum(axis=0)
        lo, hi = int(counts.min()), int(counts.max())
        achieved.add((lo, hi))
        if best is None or hi - lo < best:
            best, best_combo = hi - lo, combo
    rows = [flights[i] for i in best_combo]
    return rows, best, frozenset(achieved)
