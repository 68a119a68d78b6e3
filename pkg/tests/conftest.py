from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import strategies as st

from regatta.core import LeagueParams, TournamentPlan

# criterion number -> list of (test id, passed)
ACCEPTANCE: dict[int, list[tuple[str, bool]]] = {}


def naive_counts(rows) -> list[list[int]]:
    """Pair counts by direct counting, independent of the package."""
    t = len(rows[0])
    c = [[0] * t for _ in range(t)]
    for row in rows:
        for k in range(t):
            for l in range(t):
                if k != l and row[k] != 0 and row[k] == row[l]:
                    c[k][l] += 1
    return c


def naive_spread(rows) -> int:
    c = naive_counts(rows)
    t = len(c)
    vals = [c[k][l] for k in range(t) for l in range(k + 1, t)]
    return max(vals) - min(vals)


def random_flight(rng: random.Random, n_teams: int, n_inrace: int) -> list[int]:
    perm = list(range(n_teams))
    rng.shuffle(perm)
    row = [0] * n_teams
    for pos, team in enumerate(perm):
        row[team] = pos // n_inrace + 1
    return row


def random_plan(rng: random.Random, n_teams: int, n_flights: int, n_inrace: int) -> TournamentPlan:
    rows = [random_flight(rng, n_teams, n_inrace) for _ in range(n_flights)]
    return TournamentPlan(LeagueParams(n_teams, n_flights, n_inrace), rows)


SMALL_SHAPES = [(4, 2), (6, 2), (6, 3), (8, 2), (8, 4), (9, 3), (10, 5), (12, 3), (12, 4)]


@st.composite
def plans(draw, max_flights: int = 8, shapes=SMALL_SHAPES):
    t, r = draw(st.sampled_from(shapes))
    f = draw(st.integers(1, max_flights))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_plan(random.Random(seed), t, f, r)


def set_partitions_into_blocks(items: list[int], size: int):
    """All partitions of ``items`` into blocks of ``size``, by recursion."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for mates in itertools.combinations(rest, size - 1):
        remaining = [x for x in rest if x not in mates]
        for tail in set_partitions_into_blocks(remaining, size):
            yield [(first, *mates)] + tail


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        results = ACCEPTANCE[n]
        ok = all(p for _, p in results)
        names = ", ".join(f"{name}={'pass' if p else 'fail'}" for name, p in results)
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} ({names})")


@pytest.fixture
def rng():
    return random.Random(12345)
