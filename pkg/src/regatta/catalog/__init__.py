"""Plain-text plan files and the bundled library of published plans.

File format (UTF-8, LF line endings)::

    # name = ppl-8-7-4
    # n_teams = 8
    # n_flights = 7
    # n_inrace = 4
    # mode = strict
    1 1 1 1 2 2 2 2
    2 1 1 2 1 1 2 2
    ...

Header lines are ``# key = value`` and optional.  Each body line is one flight:
the race index of every team, separated by spaces.  ``0`` marks a skipped
flight (relaxed plans only).
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from ..core import (
    SKIP,
    LeagueParams,
    ParameterError,
    PlanShapeError,
    RegattaError,
    TournamentPlan,
    infer_n_inrace,
)

HEADER_ORDER = ("name", "description", "n_teams", "n_flights", "n_inrace", "mode")
_PARAM_KEYS = ("n_teams", "n_flights", "n_inrace")


class PlanParseError(RegattaError, ValueError):
    """Base class for malformed plan text."""


class EmptyPlanError(PlanParseError):
    pass


class RaggedRowsError(PlanParseError):
    pass


class TokenError(PlanParseError):
    pass


class RaceIndexError(PlanParseError):
    pass


class HeaderMismatchError(PlanParseError):
    pass


class UnknownPlanError(RegattaError, KeyError):
    pass


def _parse_header(lines: list[tuple[int, str]]) -> dict[str, str]:
    header: dict[str, str] = {}
    for lineno, line in lines:
        body = line[1:].strip()
        if "=" not in body:
            continue  # free comment
        key, _, value = body.partition("=")
        header[key.strip()] = value.strip()
    return header


def parse_plan_document(text: str) -> tuple[dict[str, str], TournamentPlan]:
    """Parse plan text and return ``(header, plan)``."""
    header_lines: list[tuple[int, str]] = []
    rows: list[list[int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            header_lines.append((lineno, line))
            continue
        row = []
        for tok in line.split():
            try:
                v = int(tok)
            except ValueError:
                raise TokenError(f"line {lineno}: non-integer entry {tok!r}") from None
            if v < 0:
                raise RaceIndexError(f"line {lineno}: negative race index {v}")
            row.append(v)
        if rows and len(row) != len(rows[0]):
            raise RaggedRowsError(
                f"line {lineno}: {len(row)} entries, previous rows have {len(rows[0])}"
            )
        rows.append(row)
    if not rows:
        raise EmptyPlanError("plan text contains no grid rows")

    header = _parse_header(header_lines)
    grid = np.array(rows, dtype=np.int64)
    declared = {}
    for key in _PARAM_KEYS:
        if key in header:
            try:
                declared[key] = int(header[key])
            except ValueError:
                raise HeaderMismatchError(f"header {key}={header[key]!r} is not an integer") from None

    n_teams, n_flights = grid.shape[1], grid.shape[0]
    if declared.get("n_teams", n_teams) != n_teams:
        raise HeaderMismatchError(f"header n_teams={declared['n_teams']} but rows have {n_teams} entries")
    if declared.get("n_flights", n_flights) != n_flights:
        raise HeaderMismatchError(f"header n_flights={declared['n_flights']} but there are {n_flights} rows")
    try:
        n_inrace = declared.get("n_inrace") or infer_n_inrace(grid)
        params = LeagueParams(n_teams, n_flights, n_inrace)
    except (ParameterError, PlanShapeError) as exc:
        raise HeaderMismatchError(str(exc)) from None

    top = int(grid.max())
    if top > params.n_inflight:
        raise RaceIndexError(
            f"race index {top} exceeds {params.n_inflight} races per flight for {params}"
        )
    plan = TournamentPlan(params, grid)
    mode = header.get("mode")
    if mode == "strict" and plan.relaxed:
        raise HeaderMismatchError("header says mode = strict but the grid has skip markers")
    return header, plan


def parse_plan(text: str) -> TournamentPlan:
    """Parse plan text; the plan is relaxed iff any entry is 0."""
    return parse_plan_document(text)[1]


def serialize_plan(plan: TournamentPlan, name: str | None = None, description: str | None = None) -> str:
    """Canonical text: header with parameters, right-aligned grid, final newline."""
    p = plan.params
    meta = {
        "name": name,
        "description": description,
        "n_teams": p.n_teams,
        "n_flights": p.n_flights,
        "n_inrace": p.n_inrace,
        "mode": "relaxed" if plan.relaxed else "strict",
    }
    lines = [f"# {k} = {meta[k]}" for k in HEADER_ORDER if meta[k] is not None]
    width = max(len(str(int(v))) for v in plan.grid.flat)
    lines += [" ".join(str(int(v)).rjust(width) for v in row) for row in plan.grid]
    return "\n".join(lines) + "\n"


def read_plan(path: str | Path) -> TournamentPlan:
    return parse_plan(Path(path).read_text(encoding="utf-8"))


def write_plan(plan: TournamentPlan, path: str | Path, **meta) -> None:
    Path(path).write_text(serialize_plan(plan, **meta), encoding="utf-8", newline="\n")


def _data_dir():
    return resources.files(__package__).joinpath("data")


def builtin_names() -> list[str]:
    return sorted(
        entry.name[: -len(".plan")]
        for entry in _data_dir().iterdir()
        if entry.name.endswith(".plan")
    )


def builtin_text(name: str) -> str:
    entry = _data_dir().joinpath(f"{name}.plan")
    if not entry.is_file():
        raise UnknownPlanError(f"unknown builtin plan {name!r}; choose from {', '.join(builtin_names())}")
    return entry.read_text(encoding="utf-8")


def builtin_header(name: str) -> dict[str, str]:
    return parse_plan_document(builtin_text(name))[0]


def load_builtin(name: str) -> TournamentPlan:
    """One of the bundled plans, exactly as published."""
    return parse_plan(builtin_text(name))


__all__ = [
    "EmptyPlanError",
    "HeaderMismatchError",
    "PlanParseError",
    "RaceIndexError",
    "RaggedRowsError",
    "SKIP",
    "TokenError",
    "UnknownPlanError",
    "builtin_header",
    "builtin_names",
    "builtin_text",
    "load_builtin",
    "parse_plan",
    "parse_plan_document",
    "read_plan",
    "serialize_plan",
    "write_plan",
]
