"""Depth-first search over flights with pair-count pruning.

Rows are generated in canonical form (races numbered by smallest member).
With symmetry breaking on, the search only visits the row-major lex-leader
of every orbit under flight permutations, race relabelling and team
permutations: appended rows are lexicographically nondecreasing and columns
that are still interchangeable are kept lexicographically nondecreasing.
All three conditions are implied by lex-minimality, so together they are
sound.  With an empty prefix this forces the first flight into block form
``1..1 2..2 ...``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

from ..core import LeagueParams, canonical_row


class BudgetExhausted(Exception):
    pass


@dataclass
class Budget:
    """Wall-clock and node caps; whichever is hit first ends the search."""

    max_seconds: float | None = None
    max_nodes: int | None = None
    _deadline: float | None = field(default=None, init=False, repr=False)

    def start(self) -> "Budget":
        if self.max_seconds is not None and self._deadline is None:
            self._deadline = time.monotonic() + self.max_seconds
        return self

    @property
    def deadline(self) -> float | None:
        return self._deadline

    def remaining_seconds(self) -> float | None:
        if self._deadline is None:
            return None
        return max(0.0, self._deadline - time.monotonic())

    def expired(self) -> bool:
        return self._deadline is not None and time.monotonic() > self._deadline


class FlightSearch:
    """One search run, either a fixed window probe or utility minimisation.

    ``window=(a, b)`` looks for a plan with every pair count in ``[a, b]``.
    ``window=None`` minimises ``lambda_max - lambda_min`` branch-and-bound style,
    starting from ``incumbent`` (a utility value already known to be reachable)
    if given.
    """

    CHECK_EVERY = 512

    def __init__(
        self,
        params: LeagueParams,
        *,
        window: tuple[int, int] | None = None,
        incumbent: int | None = None,
        prefix: Sequence[Sequence[int]] = (),
        symmetry: bool = True,
        max_nodes: int | None = None,
        deadline: float | None = None,
        shared=None,
    ):
        params.require_divisible()
        self.params = params
        self.T, self.R = params.n_teams, params.n_inrace
        self.G = params.n_inflight
        self.prefix = [canonical_row(r) for r in prefix]
        self.n_free = params.n_flights - len(self.prefix)
        if self.n_free < 0:
            raise ValueError("prefix has more flights than the parameters allow")
        self.window = window
        self.best_utility = incumbent
        self.best_rows: list[tuple[int, ...]] | None = None
        self.symmetry = symmetry
        self.max_nodes = max_nodes
        self.deadline = deadline
        self.shared = shared
        self.nodes = 0
        self.stop = False

        avg = Fraction(params.n_flights * (self.R - 1), self.T - 1)
        self.avg_floor = math.floor(avg)
        self.avg_ceil = math.ceil(avg)
        self.lower_bound = self.avg_ceil - self.avg_floor

        T = self.T
        self.C = [[0] * T for _ in range(T)]
        for row in self.prefix:
            self._count(row, 1)
        if symmetry:
            self.tie_prev = [-1] * T
            for k in range(1, T):
                col_k = [r[k] for r in self.prefix]
                for j in range(k - 1, -1, -1):
                    if [r[j] for r in self.prefix] == col_k:
                        self.tie_prev[k] = j
                        break
        else:
            self.tie_prev = [-1] * T
        self.rows: list[tuple[int, ...]] = []
        self._tie_stack: list[list[int]] = []

    # -- bookkeeping ---------------------------------------------------------

    def _count(self, row: Sequence[int], delta: int) -> None:
        C = self.C
        T = self.T
        for i in range(T):
            ri = row[i]
            Ci = C[i]
            for j in range(i + 1, T):
                if row[j] == ri:
                    Ci[j] += delta
                    C[j][i] += delta

    def _push(self, row: tuple[int, ...]) -> None:
        self._count(row, 1)
        self.rows.append(row)
        if self.symmetry:
            old = self.tie_prev
            self._tie_stack.append(old)
            self.tie_prev = [j if j >= 0 and row[j] == row[k] else -1 for k, j in enumerate(old)]

    def _pop(self) -> None:
        row = self.rows.pop()
        self._count(row, -1)
        if self.symmetry:
            self.tie_prev = self._tie_stack.pop()

    def _tick(self) -> None:
        self.nodes += 1
        if self.max_nodes is not None and self.nodes > self.max_nodes:
            raise BudgetExhausted
        if self.nodes % self.CHECK_EVERY == 0:
            if self.deadline is not None and time.monotonic() > self.deadline:
                raise BudgetExhausted
            if self.shared is not None:
                self.shared.sync(self)

    # -- pruning -------------------------------------------------------------

    def _bounds(self, r: int):
        """Pair-count window every completion must respect, or None to prune."""
        C, T = self.C, self.T
        hi_c = 0
        lo_c = None
        for i in range(T):
            Ci = C[i]
            for j in range(i + 1, T):
                c = Ci[j]
                if c > hi_c:
                    hi_c = c
                if lo_c is None or c < lo_c:
                    lo_c = c
        if self.window is not None:
            lo, hi = self.window
            if hi_c > hi or lo_c + r < lo:
                return None
        else:
            w = self.params.n_flights if self.best_utility is None else self.best_utility - 1
            if w < 0:
                return None
            a_lo = max(0, hi_c - w, self.avg_ceil - w)
            a_hi = min(lo_c + r, self.avg_floor)
            if a_lo > a_hi:
                return None
            lo, hi = a_lo, a_hi + w
        if r == 0:
            return lo, hi
        need = r * (self.R - 1)
        for k in range(T):
            s_lo = s_hi = 0
            Ck = C[k]
            for l in range(T):
                if l == k:
                    continue
                c = Ck[l]
                if c < lo:
                    s_lo += lo - c
                room = hi - c
                s_hi += r if room > r else room
            if s_lo > need or s_hi < need:
                return None
        return lo, hi

    # -- row generation --------------------------------------------------------

    def _candidate_rows(self, r: int, lo: int, hi: int) -> Iterator[tuple[int, ...]]:
        T, R, G, C = self.T, self.R, self.G, self.C
        tie_prev = self.tie_prev
        prev = self.rows[-1] if (self.symmetry and self.rows) else None
        # pairs that must share a race in this flight
        cutoff = lo - r
        forced_with: list[list[int]] = [[] for _ in range(T)]
        for k in range(T):
            Ck = C[k]
            forced_with[k] = [j for j in range(k) if Ck[j] <= cutoff]
        row = [0] * T
        fill = [0] * (G + 2)
        members: list[list[int]] = [[] for _ in range(G + 2)]

        def place(k: int, top: int, eq: bool):
            if k == T:
                yield tuple(row)
                return
            Ck = C[k]
            vmin = 1
            tp = tie_prev[k]
            if tp >= 0 and row[tp] > vmin:
                vmin = row[tp]
            if eq and prev[k] > vmin:
                vmin = prev[k]
            vmax = top + 1 if top < G else G
            fw = forced_with[k]
            if fw:
                v0 = row[fw[0]]
                for j in fw:
                    if row[j] != v0:
                        return
                if v0 < vmin:
                    return
                vmin = vmax = v0
            for v in range(vmin, vmax + 1):
                if fill[v] >= R:
                    continue
                mv = members[v]
                ok = True
                for j in mv:
                    if Ck[j] >= hi:
                        ok = False
                        break
                if not ok:
                    continue
                row[k] = v
                fill[v] += 1
                mv.append(k)
                yield from place(k + 1, v if v > top else top, eq and v == prev[k])
                mv.pop()
                fill[v] -= 1
            row[k] = 0

        yield from place(0, 0, prev is not None)

    # -- search ----------------------------------------------------------------

    def _leaf(self) -> bool:
        T, C = self.T, self.C
        vals = [C[i][j] for i in range(T) for j in range(i + 1, T)]
        u = max(vals) - min(vals)
        if self.window is not None:
            lo, hi = self.window
            if min(vals) < lo or max(vals) > hi:
                return False
            self.best_utility = u
            self.best_rows = list(self.rows)
            self.stop = True
            return True
        if self.best_utility is None or u < self.best_utility:
            self.best_utility = u
            self.best_rows = list(self.rows)
            if self.shared is not None:
                self.shared.offer(self)
            if u <= self.lower_bound:
                self.stop = True
            return True
        return False

    def _node(self) -> None:
        self._tick()
        r = self.n_free - len(self.rows)
        if r == 0:
            self._leaf()
            return
        b = self._bounds(r)
        if b is None:
            return
        lo, hi = b
        for row in self._candidate_rows(r, lo, hi):
            self._push(row)
            self._node()
            self._pop()
            if self.stop:
                return

    def run(self, start: Sequence[Sequence[int]] = ()) -> bool:
        """Search (below ``start`` rows, if given).  True iff the space was exhausted.

        Raises nothing on budget exhaustion; check the return value.
        """
        for row in start:
            self._push(tuple(row))
        try:
            if self.best_utility is not None and self.window is None and self.best_utility <= self.lower_bound:
                return True
            self._node()
            return True
        except BudgetExhausted:
            return False
        finally:
            while len(self.rows) > 0:
                self._pop()

    def child_rows(self) -> list[tuple[int, ...]]:
        """Children of the current node, used to split work between processes."""
        r = self.n_free - len(self.rows)
        if r == 0:
            return []
        b = self._bounds(r)
        if b is None:
            return []
        return list(self._candidate_rows(r, *b))

    def full_rows(self) -> list[tuple[int, ...]] | None:
        if self.best_rows is None:
            return None
        return self.prefix + self.best_rows
