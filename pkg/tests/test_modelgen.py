import itertools
import re

import numpy as np
import pytest
from hypothesis import given, settings
from scipy.optimize import Bounds, LinearConstraint, milp

from regatta.catalog import load_builtin
from regatta.core import LeagueParams, TournamentPlan, canonical_row, utility
from regatta.modelgen import (
    BINARY,
    BQP,
    CONTINUOUS,
    FORMULATIONS,
    ILP_FLIGHT,
    ILP_RACE,
    INTEGER,
    DialectError,
    GenOptions,
    ModelError,
    OptionsError,
    SolutionError,
    check_assignment,
    encode_plan,
    export_lp,
    export_model,
    export_mps,
    gen_bqp,
    gen_ilp_flight,
    gen_ilp_race,
    generate,
    import_solution,
    model_from_lp,
    parse_lp,
    symmetric_normal_form,
)
from regatta.solver import brute_force

from .conftest import plans

P = LeagueParams


def _canon(plan):
    return [canonical_row(r) for r in plan.rows()]


# -- counts -----------------------------------------------------------------------


def test_bqp_counts_10_8_5():
    m = gen_bqp(P(10, 8, 5))
    assert len(m.vars_of_kind(BINARY, "x_")) == 160
    assert m.count("race") == 16
    assert m.count("part") == 80
    assert len(m.quadratic_constraints) == 45
    assert {v.name for v in m.vars_of_kind(INTEGER)} == {"a", "b"}


def test_bqp_smallest_instance():
    m = gen_bqp(P(2, 1, 2))
    races = [c for c in m.rows() if c.group == "race"]
    assert len(races) == 1
    assert races[0].linear == ((1, "x_1_1"), (1, "x_1_2")) and races[0].rhs == 2
    (sw,) = m.quadratic_constraints
    assert sw.terms == (("x_1_1", "x_1_2"),)


def test_bqp_symmetry_fixings():
    m = gen_bqp(P(10, 8, 5), GenOptions(BQP, symmetry_breaking=True))
    for k in range(1, 11):
        v = m.var(f"x_1_{k}")
        assert v.fixed and v.lb == (1 if k <= 5 else 0)
    for i in range(2, 9):
        first = (i - 1) * 2 + 1
        assert m.var(f"x_{first}_1").lb == 1
        assert m.var(f"x_{first + 1}_1").ub == 0


def test_ilp_race_counts():
    m = gen_ilp_race(P(10, 8, 5))
    assert len(m.vars_of_kind(BINARY, "y_")) == 720
    assert m.count("lin") == 3 * 16 * 45 == 2160
    big = gen_ilp_race(P(32, 18, 8))
    assert len([v for v in big.variables if v.name.startswith("y_")]) == 72 * 496


def test_ilp_race_relax_linearization():
    m = gen_ilp_race(P(10, 8, 5), GenOptions(ILP_RACE, relax_linearization=True))
    assert not m.vars_of_kind(BINARY, "y_")
    assert len(m.vars_of_kind(CONTINUOUS, "y_")) == 720
    assert len(m.vars_of_kind(BINARY, "x_")) == 160


def test_ilp_flight_counts():
    m = gen_ilp_flight(P(10, 16, 5), GenOptions(ILP_FLIGHT, relax_team_set={7, 8, 9, 10}))
    assert len(m.vars_of_kind(CONTINUOUS, "z_")) == 480
    assert len(m.vars_of_kind(BINARY, "z_")) == 240
    small = gen_ilp_flight(P(4, 1, 2))
    assert len(small.vars_of_kind(BINARY, "z_")) == 6
    assert small.count("tri") == 3 * 4
    assert all(c.rhs == 1 for c in small.rows() if c.group == "deg")


def test_constraint_growth_orders():
    small, big = P(8, 4, 4), P(16, 4, 4)
    tri = [gen_ilp_flight(p).count("tri") for p in (small, big)]
    lin = [gen_ilp_race(p).count("lin") for p in (small, big)]
    assert tri[1] / tri[0] == pytest.approx(3 * 4 * (16 * 15 * 14) / 6 / (3 * 4 * 8 * 7 * 6 / 6))
    assert lin[1] / lin[0] == pytest.approx((8 * 120) / (4 * 28))


def test_references_are_declared():
    for f in FORMULATIONS:
        generate(P(6, 3, 3), GenOptions(f, symmetry_breaking=True)).check_references()


def test_relax_one_per_equality():
    m = gen_bqp(P(6, 2, 3), GenOptions(BQP, relax_one_per_equality=True))
    relaxed = {v.name for v in m.vars_of_kind(CONTINUOUS)}
    races_with_relaxed = {c.name for c in m.rows() if c.group in ("race", "part") and any(v in relaxed for _, v in c.linear)}
    assert races_with_relaxed == {c.name for c in m.rows() if c.group in ("race", "part")}
    assert "x_1_6" in relaxed and "x_2_1" in relaxed and "x_1_1" not in relaxed


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(formulation="lp"),
        dict(formulation=BQP, relax_team_set={1}),
        dict(formulation=ILP_FLIGHT, relax_linearization=True),
        dict(formulation=ILP_FLIGHT, relax_one_per_equality=True),
        dict(formulation=BQP, fixed_a=3, fixed_b=2),
    ],
)
def test_incompatible_options(kwargs):
    with pytest.raises(OptionsError):
        GenOptions(**kwargs)


def test_option_value_checks():
    with pytest.raises(OptionsError):
        gen_ilp_race(P(6, 3, 3), GenOptions(BQP))
    with pytest.raises(OptionsError):
        gen_bqp(P(6, 3, 3), GenOptions(BQP, fixed_b=4))
    with pytest.raises(OptionsError):
        gen_ilp_flight(P(6, 3, 3), GenOptions(ILP_FLIGHT, relax_team_set={7}))


def test_fixed_bounds():
    m = gen_ilp_flight(P(10, 8, 5), GenOptions(ILP_FLIGHT, fixed_a=2, fixed_b=5))
    assert (m.var("a").lb, m.var("a").ub, m.var("b").lb, m.var("b").ub) == (2, 2, 5, 5)


# -- export -----------------------------------------------------------------------


def test_lp_export_round_trip_bqp_smallest():
    m = gen_bqp(P(2, 1, 2))
    parsed = parse_lp(export_lp(m))
    assert parsed.objective == ((1, "b"), (-1, "a"))
    expected = [(c.name, dict((v, k) for k, v in c.linear), c.sense, c.rhs, {(u, v): k for k, u, v in c.quadratic}) for c in m.rows()]
    got = [(c.name, dict((v, k) for k, v in c.linear), c.sense, c.rhs, {(u, v): k for k, u, v in c.quadratic}) for c in parsed.rows]
    assert got == expected
    assert {n: (v.kind, v.lb, v.ub) for n, v in parsed.variables.items()} == {v.name: (v.kind, v.lb, v.ub) for v in m.variables}


@pytest.mark.parametrize("f", FORMULATIONS)
def test_lp_round_trip_all_formulations(f):
    m = generate(P(6, 3, 3), GenOptions(f, symmetry_breaking=True, fixed_a=0))
    back = model_from_lp(export_lp(m))
    assert back.formulation == f and tuple(back.params) == (6, 3, 3)
    assert {v.name: v for v in back.variables} == {v.name: v for v in m.variables}
    assert [c[:4] + (c.quadratic,) for c in back.rows()] == [
        (c.name, tuple(c.linear), c.sense, c.rhs, c.quadratic) for c in m.rows()
    ]


def test_lp_export_linearization_rows():
    text = export_lp(gen_ilp_race(P(10, 8, 5)))
    assert len(re.findall(r"^ lin[123]_\d+_\d+_\d+:", text, flags=re.M)) == 2160


def test_lp_export_byte_stable():
    a = export_model(gen_ilp_flight(P(8, 4, 4)))
    b = export_model(gen_ilp_flight(P(8, 4, 4)))
    assert a == b
    assert a.endswith("End\n")


def test_lp_quadratic_brackets():
    text = export_lp(gen_bqp(P(4, 1, 2)))
    assert "lo_1_2: [ x_1_1 * x_1_2 + x_2_1 * x_2_2 ] - a >= 0" in text


def test_lp_lines_are_wrapped():
    text = export_lp(gen_bqp(P(10, 8, 5)))
    assert max(len(line) for line in text.splitlines()) <= 80
    assert len(parse_lp(text).rows) == sum(1 for _ in gen_bqp(P(10, 8, 5)).rows())


def test_mps_rejects_quadratic():
    with pytest.raises(DialectError):
        export_mps(gen_bqp(P(4, 1, 2)))
    with pytest.raises(DialectError):
        export_model(gen_ilp_race(P(4, 1, 2)), "gms")


def test_mps_structure():
    m = gen_ilp_race(P(4, 2, 2), GenOptions(ILP_RACE, symmetry_breaking=True))
    text = export_mps(m)
    lines = text.splitlines()
    assert lines[0].startswith("NAME") and lines[-1] == "ENDATA"
    n_rows = sum(1 for _ in m.rows())
    row_section = lines[lines.index("ROWS") + 1 : lines.index("COLUMNS")]
    assert len(row_section) == n_rows + 1
    assert text.count("'MARKER'") % 2 == 0
    assert " FX BND x_1_1 1" in text


# -- encoding and import -------------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(plans(max_flights=4, shapes=[(4, 2), (6, 2), (6, 3), (8, 4)]))
def test_encoding_soundness(plan):
    for f in FORMULATIONS:
        m = generate(plan.params, GenOptions(f))
        values = encode_plan(m, plan)
        assert check_assignment(m, values) == []
        back = import_solution(m, values)
        assert _canon(back.plan) == _canon(plan)


@settings(max_examples=25, deadline=None)
@given(plans(max_flights=4, shapes=[(4, 2), (6, 3), (8, 4)]))
def test_encoding_with_symmetry_breaking(plan):
    normal = symmetric_normal_form(plan)
    assert utility(normal).utility == utility(plan).utility
    for f in FORMULATIONS:
        m = generate(plan.params, GenOptions(f, symmetry_breaking=True))
        assert check_assignment(m, encode_plan(m, normal)) == []


def test_encoding_violates_tighter_window():
    plan = load_builtin("apcl-2021")
    m = gen_ilp_race(plan.params)
    values = encode_plan(m, plan)
    values["b"] -= 1
    assert any(n.startswith("hi_") for n in check_assignment(m, values))


def test_import_perfect_plan_round_trip():
    plan = load_builtin("ppl-8-7-4")
    m = gen_bqp(plan.params)
    text = "# solver output\n" + "".join(f"{k} {v}\n" for k, v in encode_plan(m, plan).items())
    result = import_solution(m, text)
    assert not result.bounds_only
    assert utility(result.plan).utility == 0


def test_import_flight_level_from_clique_structure():
    source = TournamentPlan(P(10, 3, 5), load_builtin("best-10-16-5").rows()[:3])
    m = gen_ilp_flight(source.params)
    values = {v.name: 0 for v in m.variables}
    for i, row in enumerate(source.rows(), 1):
        for k, l in itertools.combinations(range(1, 11), 2):
            values[f"z_{i}_{k}_{l}"] = int(row[k - 1] == row[l - 1])
    rep = utility(source)
    values.update(a=rep.lambda_min, b=rep.lambda_max)
    result = import_solution(m, values)
    assert _canon(result.plan) == _canon(source)


def test_import_rejects_fractional_binary():
    plan = load_builtin("ppl-8-7-4")
    m = gen_bqp(plan.params)
    values = encode_plan(m, plan)
    values["x_3_4"] = 0.5
    with pytest.raises(SolutionError, match="x_3_4"):
        import_solution(m, values)


def test_import_tolerates_near_integral_values():
    plan = load_builtin("ppl-9-8-3")
    m = gen_ilp_race(plan.params)
    values = {k: (v - 1e-8 if v else 1e-9) for k, v in encode_plan(m, plan).items()}
    values["a"], values["b"] = 2, 2
    assert _canon(import_solution(m, values).plan) == _canon(plan)


def test_import_rejects_broken_transitivity():
    m = gen_ilp_flight(P(4, 1, 2))
    values = {"z_1_1_2": 1, "z_1_1_3": 1, "z_1_2_3": 0, "z_1_1_4": 0, "z_1_2_4": 0, "z_1_3_4": 0, "a": 0, "b": 1}
    with pytest.raises(SolutionError, match="not with each other"):
        import_solution(m, values)


def test_import_rejects_wrong_race_size():
    m = gen_ilp_flight(P(4, 1, 2))
    values = {f"z_1_{k}_{l}": 1 for k, l in itertools.combinations(range(1, 5), 2)}
    values.update(a=1, b=1)
    with pytest.raises(SolutionError, match="expected 2"):
        import_solution(m, values)


def test_import_rejects_inconsistent_bounds():
    plan = load_builtin("apcl-2021")
    m = gen_ilp_flight(plan.params)
    values = encode_plan(m, plan)
    values["b"] = 5
    with pytest.raises(SolutionError, match="lambda_max"):
        import_solution(m, values)


def test_import_rejects_missing_and_unknown_names():
    m = gen_bqp(P(2, 1, 2))
    with pytest.raises(SolutionError):
        import_solution(m, "x_1_1 1\n")
    with pytest.raises(SolutionError):
        import_solution(m, "x_1_1 1\nx_1_2 1\nq 3\n")
    with pytest.raises(SolutionError):
        import_solution(m, "x_1_1 one\n")


def test_import_relaxed_gives_bound_only():
    m = gen_ilp_flight(P(4, 2, 2), GenOptions(ILP_FLIGHT, relax_team_set={4}))
    values = {v.name: 0.0 for v in m.variables}
    values.update({"z_1_1_2": 1, "z_1_3_4": 1, "z_2_1_3": 1, "z_2_2_4": 0.5, "z_2_1_4": 0.5, "a": 0, "b": 1.25})
    result = import_solution(m, values)
    assert result.bounds_only
    assert result.lower_bound == 2
    assert result.to_dict()["lower_bound"] == 2


def test_model_parameter_mismatch():
    with pytest.raises(ModelError):
        encode_plan(gen_bqp(P(8, 6, 4)), load_builtin("ppl-8-7-4"))


# -- formulations agree with the combinatorial oracle ---------------------------------


def _solve_linear(model):
    names = [v.name for v in model.variables]
    index = {n: i for i, n in enumerate(names)}
    rows = list(model.rows())
    A = np.zeros((len(rows), len(names)))
    lo = np.full(len(rows), -np.inf)
    hi = np.full(len(rows), np.inf)
    for r, c in enumerate(rows):
        for coef, v in c.linear:
            A[r, index[v]] += coef
        if c.sense in ("<=", "="):
            hi[r] = c.rhs
        if c.sense in (">=", "="):
            lo[r] = c.rhs
    cost = np.zeros(len(names))
    for coef, v in model.objective:
        cost[index[v]] = coef
    integrality = np.array([0 if v.kind == CONTINUOUS else 1 for v in model.variables])
    bounds = Bounds([v.lb for v in model.variables], [v.ub for v in model.variables])
    res = milp(cost, constraints=LinearConstraint(A, lo, hi), integrality=integrality, bounds=bounds)
    assert res.status == 0
    return res.fun, dict(zip(names, res.x))


def _bqp_optimum(params):
    """Minimise b - a over every assignment satisfying the equalities, via the model itself."""
    m = gen_bqp(params)
    G = params.n_inflight
    flights = [row for row in itertools.product(range(1, G + 1), repeat=params.n_teams)
               if all(row.count(g) == params.n_inrace for g in range(1, G + 1))]
    best = None
    for rows in itertools.product(flights, repeat=params.n_flights):
        values = {"a": 0, "b": 0}
        for i, row in enumerate(rows):
            for g in range(1, G + 1):
                for k in range(1, params.n_teams + 1):
                    values[f"x_{i * G + g}_{k}"] = int(row[k - 1] == g)
        sums = [sum(values[u] * values[v] for u, v in s.terms) for s in m.quadratic_constraints]
        values["a"], values["b"] = min(sums), max(sums)
        assert check_assignment(m, values) == []
        obj = m.objective_value(values)
        best = obj if best is None else min(best, obj)
    return best


@pytest.mark.parametrize("params", [P(4, 2, 2), P(4, 3, 2), P(6, 2, 3), P(6, 3, 3), P(6, 2, 2)], ids=str)
def test_formulations_share_the_optimum(params):
    expected = brute_force(params).best_utility
    for f in (ILP_RACE, ILP_FLIGHT):
        for sym in (False, True):
            obj, x = _solve_linear(generate(params, GenOptions(f, symmetry_breaking=sym)))
            assert round(obj) == expected, (f, sym)
            result = import_solution(generate(params, GenOptions(f)), {k: round(v) for k, v in x.items()})
            assert utility(result.plan).utility == expected
    if params.n_flights * params.n_teams <= 12:
        assert _bqp_optimum(params) == expected


def test_relaxation_gives_lower_bound():
    params = P(6, 3, 3)
    exact = brute_force(params).best_utility
    obj, x = _solve_linear(generate(params, GenOptions(ILP_FLIGHT, relax_team_set={5, 6})))
    assert obj <= exact + 1e-9
