"""The three formulations of the pairing problem.

Variable names:

* ``x_j_k``    team ``k`` sails in race ``j`` (races numbered 1..n_races, flight by flight)
* ``y_j_k_l``  teams ``k < l`` both sail in race ``j`` (race-level linearization)
* ``z_i_k_l``  teams ``k < l`` share a race in flight ``i`` (flight-level model)
* ``a``, ``b`` integer bounds on every pair count; the objective is ``b - a``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from ..core import LeagueParams
from .model import BINARY, CONTINUOUS, INTEGER, Constraint, ModelError, ModelSpec, Sandwich, bulk

BQP = "bqp"
ILP_RACE = "ilp_race"
ILP_FLIGHT = "ilp_flight"
FORMULATIONS = (BQP, ILP_RACE, ILP_FLIGHT)


class OptionsError(ModelError):
    pass


@dataclass(frozen=True)
class GenOptions:
    formulation: str = ILP_RACE
    symmetry_breaking: bool = False
    relax_linearization: bool = False
    relax_team_set: frozenset[int] = field(default_factory=frozenset)
    fixed_a: int | None = None
    fixed_b: int | None = None
    relax_one_per_equality: bool = False

    def __post_init__(self):
        object.__setattr__(self, "relax_team_set", frozenset(self.relax_team_set))
        if self.formulation not in FORMULATIONS:
            raise OptionsError(f"unknown formulation {self.formulation!r}; choose from {', '.join(FORMULATIONS)}")
        if self.relax_team_set and self.formulation != ILP_FLIGHT:
            raise OptionsError("relax_team_set requires the ilp_flight formulation")
        if self.relax_linearization and self.formulation != ILP_RACE:
            raise OptionsError("relax_linearization requires the ilp_race formulation")
        if self.relax_one_per_equality and self.formulation == ILP_FLIGHT:
            raise OptionsError("relax_one_per_equality applies to the race-level formulations only")
        if self.fixed_a is not None and self.fixed_b is not None and self.fixed_a > self.fixed_b:
            raise OptionsError(f"fixed_a={self.fixed_a} exceeds fixed_b={self.fixed_b}")

    def to_dict(self) -> dict:
        return {
            "formulation": self.formulation,
            "symmetry_breaking": self.symmetry_breaking,
            "relax_linearization": self.relax_linearization,
            "relax_team_set": sorted(self.relax_team_set),
            "fixed_a": self.fixed_a,
            "fixed_b": self.fixed_b,
            "relax_one_per_equality": self.relax_one_per_equality,
        }


def x_name(j: int, k: int) -> str:
    return f"x_{j}_{k}"


def y_name(j: int, k: int, l: int) -> str:
    return f"y_{j}_{k}_{l}"


def z_name(i: int, k: int, l: int) -> str:
    if k > l:
        k, l = l, k
    return f"z_{i}_{k}_{l}"


def races_of_flight(params: LeagueParams, i: int) -> range:
    G = params.n_inflight
    return range((i - 1) * G + 1, i * G + 1)


def _base(params: LeagueParams, opts: GenOptions, expected: str) -> ModelSpec:
    if opts.formulation != expected:
        raise OptionsError(f"options are for {opts.formulation}, not {expected}")
    params.require_divisible()
    F = params.n_flights
    for name, val in (("fixed_a", opts.fixed_a), ("fixed_b", opts.fixed_b)):
        if val is not None and not 0 <= val <= F:
            raise OptionsError(f"{name}={val} outside 0..{F}")
    return ModelSpec(expected, params.as_tuple(), options=opts.to_dict())


def _add_bounds_vars(model: ModelSpec, params: LeagueParams, opts: GenOptions) -> None:
    F = params.n_flights
    model.add_var("a", INTEGER, 0, F)
    model.add_var("b", INTEGER, 0, F)
    if opts.fixed_a is not None:
        model.fix("a", opts.fixed_a)
    if opts.fixed_b is not None:
        model.fix("b", opts.fixed_b)


def _race_level_core(model: ModelSpec, params: LeagueParams, opts: GenOptions) -> None:
    T, F, R = params.as_tuple()[0], params.n_flights, params.n_inrace
    G = params.n_inflight
    n_races = F * G
    relaxed: set[str] = set()
    if opts.relax_one_per_equality:
        # the last team of every race and every team in the last race of each flight
        relaxed |= {x_name(j, T) for j in range(1, n_races + 1)}
        relaxed |= {x_name(i * G, k) for i in range(1, F + 1) for k in range(1, T + 1)}
    for j in range(1, n_races + 1):
        for k in range(1, T + 1):
            name = x_name(j, k)
            model.add_var(name, CONTINUOUS if name in relaxed else BINARY, 0, 1)
    for j in range(1, n_races + 1):
        terms = tuple((1, x_name(j, k)) for k in range(1, T + 1))
        model.add_constraint(Constraint(f"race_{j}", terms, "=", R, "race"))
    for i in range(1, F + 1):
        for k in range(1, T + 1):
            terms = tuple((1, x_name(j, k)) for j in races_of_flight(params, i))
            model.add_constraint(Constraint(f"part_{i}_{k}", terms, "=", 1, "part"))
    if opts.symmetry_breaking:
        for k in range(1, T + 1):
            block = (k - 1) // R + 1
            for g in range(1, G + 1):
                model.fix(x_name(g, k), 1 if g == block else 0)
        for i in range(2, F + 1):
            first = races_of_flight(params, i)[0]
            for j in races_of_flight(params, i):
                model.fix(x_name(j, 1), 1 if j == first else 0)


@bulk
def gen_bqp(params: LeagueParams, opts: GenOptions | None = None) -> ModelSpec:
    """Race-level binary quadratic program with bilinear pair counts."""
    opts = opts or GenOptions(BQP)
    model = _base(params, opts, BQP)
    _race_level_core(model, params, opts)
    _add_bounds_vars(model, params, opts)
    T = params.n_teams
    n_races = params.n_flights * params.n_inflight
    for k, l in itertools.combinations(range(1, T + 1), 2):
        terms = tuple((x_name(j, k), x_name(j, l)) for j in range(1, n_races + 1))
        model.sandwiches.append(Sandwich(f"{k}_{l}", terms))
    return model


@bulk
def gen_ilp_race(params: LeagueParams, opts: GenOptions | None = None) -> ModelSpec:
    """Race-level model with the standard linearization of every product."""
    opts = opts or GenOptions(ILP_RACE)
    model = _base(params, opts, ILP_RACE)
    _race_level_core(model, params, opts)
    T = params.n_teams
    n_races = params.n_flights * params.n_inflight
    kind = CONTINUOUS if opts.relax_linearization else BINARY
    pairs = list(itertools.combinations(range(1, T + 1), 2))
    add = model.linear_constraints.append
    for j in range(1, n_races + 1):
        xs = {k: x_name(j, k) for k in range(1, T + 1)}
        for k, l in pairs:
            y = f"y_{j}_{k}_{l}"
            model.add_var(y, kind, 0, 1)
            xk, xl = xs[k], xs[l]
            add(Constraint(f"lin1_{j}_{k}_{l}", ((1, y), (-1, xk)), "<=", 0, "lin"))
            add(Constraint(f"lin2_{j}_{k}_{l}", ((1, y), (-1, xl)), "<=", 0, "lin"))
            add(Constraint(f"lin3_{j}_{k}_{l}", ((1, xk), (1, xl), (-1, y)), "<=", 1, "lin"))
    _add_bounds_vars(model, params, opts)
    for k, l in pairs:
        model.sandwiches.append(Sandwich(f"{k}_{l}", tuple(y_name(j, k, l) for j in range(1, n_races + 1))))
    return model


@bulk
def gen_ilp_flight(params: LeagueParams, opts: GenOptions | None = None) -> ModelSpec:
    """Flight-level model: one variable per flight and team pair, with triangle cuts."""
    opts = opts or GenOptions(ILP_FLIGHT)
    model = _base(params, opts, ILP_FLIGHT)
    T, F, R = params.n_teams, params.n_flights, params.n_inrace
    bad = sorted(t for t in opts.relax_team_set if not 1 <= t <= T)
    if bad:
        raise OptionsError(f"relax_team_set contains teams outside 1..{T}: {bad}")
    pairs = list(itertools.combinations(range(1, T + 1), 2))
    for i in range(1, F + 1):
        for k, l in pairs:
            kind = CONTINUOUS if l in opts.relax_team_set else BINARY
            model.add_var(z_name(i, k, l), kind, 0, 1)
    add = model.linear_constraints.append
    for i in range(1, F + 1):
        for k in range(1, T + 1):
            terms = tuple((1, z_name(i, k, l)) for l in range(1, T + 1) if l != k)
            add(Constraint(f"deg_{i}_{k}", terms, "=", R - 1, "deg"))
        zn = {(k, l): z_name(i, k, l) for k, l in pairs}
        for k, l, m in itertools.combinations(range(1, T + 1), 3):
            zkl, zkm, zlm = zn[k, l], zn[k, m], zn[l, m]
            add(Constraint(f"tri_{i}_{k}_{l}_{m}_{m}", ((1, zkm), (1, zlm), (-1, zkl)), "<=", 1, "tri"))
            add(Constraint(f"tri_{i}_{k}_{l}_{m}_{l}", ((1, zkl), (1, zlm), (-1, zkm)), "<=", 1, "tri"))
            add(Constraint(f"tri_{i}_{k}_{l}_{m}_{k}", ((1, zkl), (1, zkm), (-1, zlm)), "<=", 1, "tri"))
    if opts.symmetry_breaking:
        for k, l in pairs:
            model.fix(z_name(1, k, l), 1 if (k - 1) // R == (l - 1) // R else 0)
    _add_bounds_vars(model, params, opts)
    for k, l in pairs:
        model.sandwiches.append(Sandwich(f"{k}_{l}", tuple(z_name(i, k, l) for i in range(1, F + 1))))
    return model


GENERATORS = {BQP: gen_bqp, ILP_RACE: gen_ilp_race, ILP_FLIGHT: gen_ilp_flight}


def generate(params: LeagueParams, opts: GenOptions) -> ModelSpec:
    return GENERATORS[opts.formulation](params, opts)
