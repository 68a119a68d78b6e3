"""Map plans to variable assignments and solver output back to plans."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from ..core import LeagueParams, TournamentPlan, canonical_row, ensure_valid, utility, validate_plan
from .formulations import BQP, ILP_FLIGHT, ILP_RACE, races_of_flight, x_name, y_name, z_name
from .model import BINARY, INTEGER, ModelError, ModelSpec

TOL = 1e-6


class SolutionError(ModelError):
    pass


def _params(model: ModelSpec) -> LeagueParams:
    return LeagueParams(*model.params)


def encode_plan(model: ModelSpec, plan: TournamentPlan) -> dict[str, int]:
    """The assignment a plan induces, with ``a = lambda_min`` and ``b = lambda_max``."""
    if plan.params.as_tuple() != tuple(model.params):
        raise ModelError(f"plan parameters {plan.params.as_tuple()} do not match model {tuple(model.params)}")
    ensure_valid(plan, "strict")
    params = plan.params
    T, F, G = params.n_teams, params.n_flights, params.n_inflight
    grid = plan.grid
    rep = utility(plan)
    values: dict[str, int] = {"a": rep.lambda_min, "b": rep.lambda_max}
    if model.formulation in (BQP, ILP_RACE):
        for i in range(F):
            for g in range(1, G + 1):
                j = i * G + g
                for k in range(1, T + 1):
                    values[x_name(j, k)] = int(grid[i, k - 1] == g)
                if model.formulation == ILP_RACE:
                    for k, l in itertools.combinations(range(1, T + 1), 2):
                        values[y_name(j, k, l)] = int(grid[i, k - 1] == g and grid[i, l - 1] == g)
    else:
        for i in range(F):
            for k, l in itertools.combinations(range(1, T + 1), 2):
                values[z_name(i + 1, k, l)] = int(grid[i, k - 1] == grid[i, l - 1])
    return values


def check_assignment(model: ModelSpec, values: Mapping[str, float], tol: float = TOL) -> list[str]:
    """Names of violated constraints and bounds; empty when feasible."""
    bad = []
    for v in model.variables:
        if v.name not in values:
            bad.append(f"missing:{v.name}")
            continue
        x = values[v.name]
        if x < v.lb - tol or x > v.ub + tol:
            bad.append(f"bound:{v.name}")
        if v.kind in (BINARY, INTEGER) and abs(x - round(x)) > tol:
            bad.append(f"integrality:{v.name}")
    if bad:
        return bad
    return [c.name for c in model.rows() if not c.satisfied(values, tol)]


def symmetric_normal_form(plan: TournamentPlan) -> TournamentPlan:
    """An isomorphic plan meeting the symmetry-breaking fixings.

    Teams are renumbered so the first flight reads ``1..1 2..2 ...`` and races
    are relabelled so team 1 always sails in race 1.
    """
    ensure_valid(plan, "strict")
    first = plan.grid[0]
    order = sorted(range(plan.n_teams), key=lambda t: (first[t], t))
    grid = plan.grid[:, order]
    return TournamentPlan(plan.params, [canonical_row(r) for r in grid])


def parse_solution_text(text: str) -> dict[str, float]:
    """``name value`` lines; ``#`` starts a comment."""
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise SolutionError(f"line {lineno}: expected 'name value', got {raw!r}")
        name, val = parts
        try:
            values[name] = float(val)
        except ValueError:
            raise SolutionError(f"line {lineno}: value {val!r} of {name} is not a number") from None
    return values


@dataclass(frozen=True)
class ImportResult:
    """Either a reconstructed plan or, for fractional relaxations, a bound only."""

    objective: float
    plan: TournamentPlan | None = None
    lower_bound: int | None = None
    a: float | None = None
    b: float | None = None

    @property
    def bounds_only(self) -> bool:
        return self.plan is None

    def to_dict(self) -> dict:
        out: dict = {"objective": self.objective, "bounds_only": self.bounds_only}
        if self.plan is None:
            out["lower_bound"] = self.lower_bound
        else:
            rep = utility(self.plan)
            out["utility"] = rep.utility
            out["lambda_min"] = rep.lambda_min
            out["lambda_max"] = rep.lambda_max
            out["plan"] = [list(r) for r in self.plan.rows()]
        return out


def _rebuild_race_level(model: ModelSpec, values: Mapping[str, float]) -> TournamentPlan:
    params = _params(model)
    T, F, G = params.n_teams, params.n_flights, params.n_inflight
    rows = []
    for i in range(1, F + 1):
        row = [0] * T
        for k in range(1, T + 1):
            hits = [j for j in races_of_flight(params, i) if round(values[x_name(j, k)]) == 1]
            if len(hits) != 1:
                raise SolutionError(f"team {k} is in {len(hits)} races of flight {i}")
            row[k - 1] = hits[0] - (i - 1) * G
        rows.append(canonical_row(row))
    if model.formulation == ILP_RACE:
        for j in range(1, F * G + 1):
            for k, l in itertools.combinations(range(1, T + 1), 2):
                want = round(values[x_name(j, k)]) * round(values[x_name(j, l)])
                if round(values[y_name(j, k, l)]) != want:
                    raise SolutionError(f"{y_name(j, k, l)} disagrees with the product of its race variables")
    return TournamentPlan(params, rows)


def _rebuild_flight_level(model: ModelSpec, values: Mapping[str, float]) -> TournamentPlan:
    params = _params(model)
    T, F, R = params.n_teams, params.n_flights, params.n_inrace
    rows = []
    for i in range(1, F + 1):
        adj = np.zeros((T, T), dtype=bool)
        for k, l in itertools.combinations(range(1, T + 1), 2):
            if round(values[z_name(i, k, l)]) == 1:
                adj[k - 1, l - 1] = adj[l - 1, k - 1] = True
        row = [0] * T
        label = 0
        for t in range(T):
            if row[t]:
                continue
            label += 1
            group = [t] + [u for u in range(T) if adj[t, u]]
            for u, w in itertools.combinations(group, 2):
                if not adj[u, w]:
                    raise SolutionError(
                        f"flight {i}: teams {u + 1} and {w + 1} both race with team {t + 1} but not with each other"
                    )
            if len(group) != R:
                raise SolutionError(f"flight {i}: race of team {t + 1} has {len(group)} teams, expected {R}")
            for u in group:
                if row[u]:
                    raise SolutionError(f"flight {i}: team {u + 1} lands in two races")
                row[u] = label
        rows.append(tuple(row))
    return TournamentPlan(params, rows)


def import_solution(model: ModelSpec, solution: str | Mapping[str, float], tol: float = TOL) -> ImportResult:
    """Turn a solver's ``name value`` output into a plan or a lower bound.

    Binary variables must be within ``tol`` of 0 or 1.  If some continuous
    (relaxed) variable is fractional the result carries only the lower bound
    ``ceil(b - a)`` on the integer optimum.  Otherwise the plan is rebuilt and
    checked against the reported ``a`` and ``b``.
    """
    values = parse_solution_text(solution) if isinstance(solution, str) else dict(solution)
    missing = [v.name for v in model.variables if v.name not in values and v.name not in ("a", "b")]
    if missing:
        raise SolutionError(f"solution lacks {len(missing)} variables, first {missing[0]}")
    unknown = sorted(set(values) - {v.name for v in model.variables})
    if unknown:
        raise SolutionError(f"solution names unknown variable {unknown[0]}")
    for v in model.variables:
        if v.name not in values:
            continue
        x = values[v.name]
        if v.kind == BINARY and min(abs(x), abs(x - 1)) > tol:
            raise SolutionError(f"binary variable {v.name} has fractional value {x}")
    a, b = values.get("a"), values.get("b")
    objective = (b - a) if a is not None and b is not None else math.nan
    fractional = [
        v.name for v in model.variables
        if v.kind != BINARY and v.name not in ("a", "b") and abs(values[v.name] - round(values[v.name])) > tol
    ]
    if fractional:
        if math.isnan(objective):
            raise SolutionError("a fractional solution needs values for a and b")
        return ImportResult(objective, None, math.ceil(objective - tol), a, b)
    if model.formulation == ILP_FLIGHT:
        plan = _rebuild_flight_level(model, values)
    else:
        plan = _rebuild_race_level(model, values)
    report = validate_plan(plan, "strict")
    if not report.ok:
        raise SolutionError(f"reconstructed plan is invalid: {report.violations[0].detail}")
    rep = utility(plan)
    if a is not None and a > rep.lambda_min + tol:
        raise SolutionError(f"reported a={a} exceeds the plan's lambda_min={rep.lambda_min}")
    if b is not None and b < rep.lambda_max - tol:
        raise SolutionError(f"reported b={b} is below the plan's lambda_max={rep.lambda_max}")
    return ImportResult(objective, plan, None, a, b)
