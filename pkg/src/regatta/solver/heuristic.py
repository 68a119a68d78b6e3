"""Swap-based local search for good (not provably optimal) flights."""

from __future__ import annotations

import random
import time
from typing import Sequence

import numpy as np

from ..core import LeagueParams, canonical_row


def _pair_index(T: int) -> np.ndarray:
    idx = -np.ones((T, T), dtype=np.int64)
    iu = np.triu_indices(T, k=1)
    idx[iu] = np.arange(len(iu[0]))
    idx[(iu[1], iu[0])] = np.arange(len(iu[0]))
    return idx


def _score(counts: np.ndarray) -> tuple[int, int]:
    hi, lo = counts.max(), counts.min()
    return int(hi - lo), int((counts == hi).sum() + (counts == lo).sum())


def local_search(
    params: LeagueParams,
    *,
    prefix: Sequence[Sequence[int]] = (),
    rng: random.Random,
    max_seconds: float | None = 2.0,
    max_moves: int = 20_000,
    restarts: int = 4,
) -> list[tuple[int, ...]]:
    """Rows for the flights after ``prefix`` with small spread of pair counts.

    Each move swaps two teams in different races of one free flight and is
    kept if it does not worsen ``(spread, number of pairs at the extremes)``.
    Returns the full row list (prefix included).
    """
    params.require_divisible()
    T, R, G = params.n_teams, params.n_inrace, params.n_inflight
    n_free = params.n_flights - len(prefix)
    prefix = [tuple(r) for r in prefix]
    pidx = _pair_index(T)
    n_pairs = T * (T - 1) // 2
    base = np.zeros(n_pairs, dtype=np.int64)
    for row in prefix:
        base += _row_pairs(row, pidx, n_pairs)
    if n_free == 0:
        return prefix
    if n_pairs == 0 or G == 1:
        return prefix + [tuple([1] * T)] * n_free

    deadline = None if max_seconds is None else time.monotonic() + max_seconds
    best_rows = None
    best_score = None
    for _ in range(max(1, restarts)):
        rows = []
        for _f in range(n_free):
            perm = list(range(T))
            rng.shuffle(perm)
            row = [0] * T
            for pos, team in enumerate(perm):
                row[team] = pos // R + 1
            rows.append(row)
        counts = base.copy()
        for row in rows:
            counts += _row_pairs(row, pidx, n_pairs)
        score = _score(counts)
        for _m in range(max_moves):
            if score[0] == 0:
                break
            if deadline is not None and _m % 64 == 0 and time.monotonic() > deadline:
                break
            f = rng.randrange(n_free)
            row = rows[f]
            x, y = rng.randrange(T), rng.randrange(T)
            if row[x] == row[y]:
                continue
            delta = _swap_delta(row, x, y, pidx, n_pairs)
            new_counts = counts + delta
            new_score = _score(new_counts)
            if new_score <= score:
                row[x], row[y] = row[y], row[x]
                counts, score = new_counts, new_score
        if best_score is None or score < best_score:
            best_score, best_rows = score, [canonical_row(r) for r in rows]
        if deadline is not None and time.monotonic() > deadline:
            break
    return prefix + best_rows


def _row_pairs(row: Sequence[int], pidx: np.ndarray, n_pairs: int) -> np.ndarray:
    out = np.zeros(n_pairs, dtype=np.int64)
    T = len(row)
    for i in range(T):
        for j in range(i + 1, T):
            if row[i] == row[j] and row[i] != 0:
                out[pidx[i, j]] += 1
    return out


def _swap_delta(row, x, y, pidx, n_pairs) -> np.ndarray:
    delta = np.zeros(n_pairs, dtype=np.int64)
    rx, ry = row[x], row[y]
    for t, v in enumerate(row):
        if t == x or t == y:
            continue
        if v == rx:
            delta[pidx[x, t]] -= 1
            delta[pidx[y, t]] += 1
        elif v == ry:
            delta[pidx[y, t]] -= 1
            delta[pidx[x, t]] += 1
    return delta
