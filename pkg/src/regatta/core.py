"""League parameters, tournament plans, pairing counts and the utility value.

A tournament plan is a ``n_flights x n_teams`` integer grid.  Entry ``(f, t)``
is the race (1-based) that team ``t`` sails in during flight ``f``.  Relaxed
plans may use ``0`` to mark a team that skips a flight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

SKIP = 0


class RegattaError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(RegattaError, ValueError):
    """League parameters are out of range or inconsistent."""


class PlanShapeError(RegattaError, ValueError):
    """Grid dimensions do not match the declared parameters."""


class InvalidPlanError(RegattaError, ValueError):
    """A plan violates the flight-partition rules."""

    def __init__(self, report: "ValidationReport"):
        self.report = report
        head = "; ".join(str(v) for v in report.violations[:5])
        more = len(report.violations) - 5
        if more > 0:
            head += f"; ... {more} more"
        super().__init__(f"invalid plan: {head}")


@dataclass(frozen=True)
class LeagueParams:
    """The triple ``(n_teams, n_flights, n_inrace)``.

    ``n_inrace`` must divide ``n_teams`` for a proper pairing list.  The
    constructor only enforces the range checks so that relaxed plans (where
    some team sits out every flight) can still carry their parameters; call
    :meth:`require_divisible` or :func:`derive` for the full check.
    """

    n_teams: int
    n_flights: int
    n_inrace: int

    def __post_init__(self):
        for name in ("n_teams", "n_flights", "n_inrace"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ParameterError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.n_teams < 2:
            raise ParameterError(f"n_teams must be >= 2, got {self.n_teams}")
        if self.n_flights < 1:
            raise ParameterError(f"n_flights must be >= 1, got {self.n_flights}")
        if self.n_inrace < 2:
            raise ParameterError(f"n_inrace must be >= 2, got {self.n_inrace}")
        if self.n_inrace > self.n_teams:
            raise ParameterError(
                f"n_inrace={self.n_inrace} exceeds n_teams={self.n_teams}"
            )

    @property
    def divisible(self) -> bool:
        return self.n_teams % self.n_inrace == 0

    @property
    def n_inflight(self) -> int:
        """Races per flight (rounded down for relaxed parameters)."""
        return self.n_teams // self.n_inrace

    def require_divisible(self) -> "LeagueParams":
        if not self.divisible:
            raise ParameterError(
                f"n_inrace={self.n_inrace} does not divide n_teams={self.n_teams}"
            )
        return self

    def with_flights(self, n_flights: int) -> "LeagueParams":
        return LeagueParams(self.n_teams, n_flights, self.n_inrace)

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.n_teams, self.n_flights, self.n_inrace)

    def __str__(self) -> str:
        return f"({self.n_teams},{self.n_flights},{self.n_inrace})"

    @classmethod
    def parse(cls, text: str) -> "LeagueParams":
        """Parse ``"T,F,R"`` (commas or whitespace)."""
        parts = text.replace(",", " ").split()
        if len(parts) != 3:
            raise ParameterError(f"expected three integers T,F,R, got {text!r}")
        try:
            return cls(*(int(p) for p in parts))
        except ValueError as exc:
            if isinstance(exc, ParameterError):
                raise
            raise ParameterError(f"expected three integers T,F,R, got {text!r}") from None


@dataclass(frozen=True)
class DerivedParams:
    n_inflight: int
    n_races: int
    lambda_avg: Fraction


def derive(params: LeagueParams) -> DerivedParams:
    """Races per flight, total races and the exact average pairing count."""
    params.require_divisible()
    t, f, r = params.as_tuple()
    return DerivedParams(
        n_inflight=t // r,
        n_races=t * f // r,
        lambda_avg=Fraction(f * (r - 1), t - 1),
    )


def all_flights_count(params: LeagueParams) -> int:
    """Number of distinct flights, i.e. partitions of the teams into equal races.

    Exact integer arithmetic; the value explodes quickly (``(18, *, 6)`` already
    gives 2,858,856).
    """
    params.require_divisible()
    g = params.n_inflight
    return math.factorial(params.n_teams) // (
        math.factorial(params.n_inrace) ** g * math.factorial(g)
    )


def canonical_row(row: Sequence[int]) -> tuple[int, ...]:
    """Relabel races in order of their smallest member; 0 stays 0."""
    mapping: dict[int, int] = {}
    out = []
    for v in row:
        v = int(v)
        if v == SKIP:
            out.append(SKIP)
            continue
        if v not in mapping:
            mapping[v] = len(mapping) + 1
        out.append(mapping[v])
    return tuple(out)


@dataclass(frozen=True, eq=False)
class TournamentPlan:
    """Flight-by-team race assignment grid together with its parameters."""

    params: LeagueParams
    grid: np.ndarray

    def __post_init__(self):
        grid = np.array(self.grid, dtype=np.int64, copy=True)
        if grid.ndim != 2:
            raise PlanShapeError(f"grid must be two-dimensional, got ndim={grid.ndim}")
        expected = (self.params.n_flights, self.params.n_teams)
        if grid.shape != expected:
            raise PlanShapeError(
                f"grid shape {grid.shape} does not match params {self.params} "
                f"(expected {expected})"
            )
        grid.setflags(write=False)
        object.__setattr__(self, "grid", grid)

    @classmethod
    def from_rows(
        cls, rows: Iterable[Sequence[int]], n_inrace: int | None = None
    ) -> "TournamentPlan":
        """Build a plan from rows, inferring ``n_inrace`` from the first row if needed."""
        grid = np.array([list(r) for r in rows], dtype=np.int64)
        if grid.ndim != 2 or grid.size == 0:
            raise PlanShapeError("a plan needs at least one non-empty row")
        if n_inrace is None:
            n_inrace = infer_n_inrace(grid)
        params = LeagueParams(grid.shape[1], grid.shape[0], n_inrace)
        return cls(params, grid)

    @property
    def n_teams(self) -> int:
        return self.params.n_teams

    @property
    def n_flights(self) -> int:
        return self.params.n_flights

    @property
    def relaxed(self) -> bool:
        return bool((self.grid == SKIP).any())

    def rows(self) -> list[tuple[int, ...]]:
        return [tuple(int(v) for v in row) for row in self.grid]

    def canonical(self) -> "TournamentPlan":
        """Same plan with each flight's races relabelled by smallest member."""
        return TournamentPlan(self.params, [canonical_row(r) for r in self.grid])

    def __eq__(self, other):
        if not isinstance(other, TournamentPlan):
            return NotImplemented
        return self.params == other.params and np.array_equal(self.grid, other.grid)

    def __hash__(self):
        return hash((self.params, self.grid.tobytes()))

    def __repr__(self):
        return f"TournamentPlan(params={self.params}, relaxed={self.relaxed})"


def infer_n_inrace(grid: np.ndarray) -> int:
    first = [int(v) for v in grid[0] if v != SKIP]
    if not first:
        raise PlanShapeError("cannot infer n_inrace from an all-skip first row")
    return first.count(first[0])


@dataclass(frozen=True)
class Violation:
    flight: int  # 1-based, 0 for plan-level problems
    kind: str
    detail: str

    def __str__(self):
        where = f"flight {self.flight}" if self.flight else "plan"
        return f"{where}: {self.kind}: {self.detail}"


@dataclass(frozen=True)
class ValidationReport:
    mode: str
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "valid": self.ok,
            "violations": [
                {"flight": v.flight, "kind": v.kind, "detail": v.detail}
                for v in self.violations
            ],
        }


def validate_plan(plan: TournamentPlan, mode: str = "strict") -> ValidationReport:
    """Check every flight; collect all violations instead of stopping at the first.

    ``strict``: every flight partitions all teams into races of ``n_inrace``.
    ``relaxed``: skip markers allowed; every race that is used has ``n_inrace`` teams.
    """
    if mode not in ("strict", "relaxed"):
        raise ValueError(f"mode must be 'strict' or 'relaxed', got {mode!r}")
    p = plan.params
    out: list[Violation] = []
    if mode == "strict" and not p.divisible:
        out.append(Violation(0, "params", f"n_inrace={p.n_inrace} does not divide n_teams={p.n_teams}"))
    g = p.n_inflight
    for f, row in enumerate(plan.grid, start=1):
        values, counts = np.unique(row, return_counts=True)
        tally = dict(zip(values.tolist(), counts.tolist()))
        bad = sorted(v for v in tally if v < 0 or v > g)
        if bad:
            out.append(Violation(f, "race-index", f"entries {bad} outside 0..{g}"))
        if SKIP in tally and mode == "strict":
            out.append(Violation(f, "skip", f"{tally[SKIP]} skip marker(s) in a strict plan"))
        for race in range(1, g + 1):
            n = tally.get(race, 0)
            if n == 0 and mode == "relaxed":
                continue
            if n != p.n_inrace:
                out.append(Violation(f, "race-size", f"race {race} has {n} teams, expected {p.n_inrace}"))
    return ValidationReport(mode, tuple(out))


def default_mode(plan: TournamentPlan) -> str:
    return "relaxed" if plan.relaxed else "strict"


def ensure_valid(plan: TournamentPlan, mode: str | None = None) -> None:
    report = validate_plan(plan, mode or default_mode(plan))
    if not report.ok:
        raise InvalidPlanError(report)


@dataclass(frozen=True, eq=False)
class PairingMatrix:
    """Symmetric team-by-team count of shared races; zero diagonal."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64, copy=True)
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def n_teams(self) -> int:
        return self.counts.shape[0]

    def off_diagonal(self) -> np.ndarray:
        """Upper-triangle entries, one per unordered pair."""
        iu = np.triu_indices(self.n_teams, k=1)
        return self.counts[iu]

    def __getitem__(self, key):
        return self.counts[key]

    def __eq__(self, other):
        if not isinstance(other, PairingMatrix):
            return NotImplemented
        return np.array_equal(self.counts, other.counts)


def _raw_pairing_counts(grid: np.ndarray) -> np.ndarray:
    same = (grid[:, :, None] == grid[:, None, :]) & (grid[:, :, None] != SKIP)
    counts = same.sum(axis=0)
    np.fill_diagonal(counts, 0)
    return counts


def pairing_matrix(plan: TournamentPlan) -> PairingMatrix:
    """How often every two teams meet in the same race."""
    return PairingMatrix(_raw_pairing_counts(plan.grid))


@dataclass(frozen=True)
class UtilityReport:
    lambda_min: int
    lambda_max: int
    lambda_avg: Fraction
    utility: int
    is_perfect: bool
    associate_classes: int
    relaxed: bool = False

    def to_dict(self) -> dict:
        return {
            "lambda_min": self.lambda_min,
            "lambda_max": self.lambda_max,
            "lambda_avg_num": self.lambda_avg.numerator,
            "lambda_avg_den": self.lambda_avg.denominator,
            "utility": self.utility,
            "is_perfect": self.is_perfect,
            "associate_classes": self.associate_classes,
            "relaxed": self.relaxed,
        }


def utility_from_counts(counts: np.ndarray, relaxed: bool = False) -> UtilityReport:
    t = counts.shape[0]
    off = counts[np.triu_indices(t, k=1)]
    lo, hi = int(off.min()), int(off.max())
    avg = Fraction(int(off.sum()), len(off))
    return UtilityReport(
        lambda_min=lo,
        lambda_max=hi,
        lambda_avg=avg,
        utility=hi - lo,
        is_perfect=hi == lo,
        associate_classes=len(np.unique(off)),
        relaxed=relaxed,
    )


def utility(plan: TournamentPlan) -> UtilityReport:
    """lambda_max - lambda_min over all team pairs, plus the related statistics.

    For relaxed plans the numbers are taken over all pairs as they stand and the
    report is flagged ``relaxed``.
    """
    ensure_valid(plan)
    return utility_from_counts(_raw_pairing_counts(plan.grid), plan.relaxed)
