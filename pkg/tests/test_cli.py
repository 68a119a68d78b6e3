import json
from pathlib import Path

import pytest

from regatta.analysis import PASSES
from regatta.catalog import builtin_text, load_builtin
from regatta.cli import EXIT_BUDGET, EXIT_NEGATIVE, EXIT_OK, EXIT_USAGE, SCHEMA_VERSION, main
from regatta.core import utility
from regatta.modelgen import encode_plan, gen_ilp_flight

GOLDEN = json.loads((Path(__file__).parent / "golden" / "cli_schemas.json").read_text())


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    doc = json.loads(out)
    assert doc["schema_version"] == SCHEMA_VERSION
    assert doc["command"] == argv[0]
    return code, doc


@pytest.fixture
def plan_file(tmp_path):
    def write(name, text=None):
        path = tmp_path / f"{name}.plan"
        path.write_text(text if text is not None else builtin_text(name))
        return str(path)

    return write


def _keys(doc):
    return sorted(set(doc) - {"schema_version", "command"})


def test_analyze_apcl_plan(capsys):
    code, doc = run_json(capsys, "analyze", "--builtin", "apcl-2021")
    assert code == EXIT_OK
    assert doc["utility"] == 7
    assert _keys(doc) == GOLDEN["analyze"]


def test_analyze_matrix(capsys):
    _, doc = run_json(capsys, "analyze", "--builtin", "apcl-2021", "--matrix")
    m = doc["pairing_matrix"]
    assert (m[5][7], m[1][5]) == (8, 1)


def test_check_params_impossible(capsys):
    code, doc = run_json(capsys, "check-params", "18", "16", "6")
    assert code == EXIT_NEGATIVE
    assert doc["perfect_possible"] == "impossible"
    assert (doc["lambda_avg_num"], doc["lambda_avg_den"]) == (80, 17)
    assert _keys(doc) == GOLDEN["check-params"]


def test_check_params_passes(capsys):
    code, doc = run_json(capsys, "check-params", "--params", "18,17,6")
    assert code == EXIT_OK and doc["perfect_possible"] == PASSES


def test_validate_ok_and_invalid(capsys, plan_file):
    code, doc = run_json(capsys, "validate", "--builtin", "ppl-8-7-4")
    assert code == EXIT_OK and doc["valid"]
    assert _keys(doc) == GOLDEN["validate"]
    text = builtin_text("ppl-8-7-4").replace("1 1 1 1 2 2 2 2", "2 1 1 1 2 2 2 2", 1)
    code, doc = run_json(capsys, "validate", plan_file("bad", text))
    assert code == EXIT_NEGATIVE and not doc["valid"] and doc["violations"]


def test_validate_relaxed_plan(capsys):
    assert run_json(capsys, "validate", "--builtin", "nr-13-13-3")[0] == EXIT_OK
    assert run_json(capsys, "validate", "--builtin", "nr-13-13-3", "--mode", "strict")[0] == EXIT_NEGATIVE


def test_validate_empty_file(capsys, plan_file):
    code, out, err = run(capsys, "validate", plan_file("empty", ""))
    assert code == EXIT_USAGE
    assert out == "" and err


@pytest.mark.parametrize(
    "argv",
    [
        ["frobnicate"],
        [],
        ["solve"],
        ["solve", "--params", "10,8"],
        ["analyze", "--builtin", "nope"],
        ["validate"],
        ["probe", "--params", "10,8,5", "--a", "4", "--b", "3"],
        ["analyze", "--builtin", "apcl-2021", "--bogus"],
        ["transform", "--builtin", "ppl-8-7-4", "--remove", "9"],
    ],
)
def test_usage_errors(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == EXIT_USAGE
    assert out == ""
    assert err


def test_scan_params(capsys):
    code, doc = run_json(capsys, "scan-params", "--base", "18,16,6", "--base", "32,18,8", "--base", "10,8,5")
    assert code == EXIT_OK
    assert _keys(doc) == GOLDEN["scan-params"]
    assert len(doc["results"]) == 13


def test_catalog_list_and_show(capsys):
    code, doc = run_json(capsys, "catalog")
    assert code == EXIT_OK and _keys(doc) == GOLDEN["catalog"]
    assert len(doc["plans"]) == 15
    _, one = run_json(capsys, "catalog", "ppl-8-7-4")
    assert one["params"] == [8, 7, 4] and len(one["plan"]) == 7


def test_transform_remove_is_one_based(capsys, tmp_path):
    out_file = tmp_path / "out.plan"
    code, doc = run_json(capsys, "transform", "--builtin", "ppl-18-17-6", "--remove", "1", "-o", str(out_file))
    assert code == EXIT_OK
    assert set(GOLDEN["transform"]) <= set(doc)
    assert (doc["utility_before"], doc["utility_after"]) == (0, 1)
    assert doc["bound"] == {"k": 1, "lower": 0, "upper": 1, "hard_lower": 0}
    assert doc["plan"][0] == list(load_builtin("ppl-18-17-6").rows()[1])
    assert out_file.exists()


def test_transform_repeat_and_add(capsys, plan_file):
    _, doc = run_json(capsys, "transform", "--builtin", "ppl-16-5-4", "--repeat", "3")
    assert doc["params"] == [16, 15, 4] and doc["utility_after"] == 0
    _, doc = run_json(capsys, "transform", "--builtin", "apcl-2021", "--add-from-file", plan_file("apcl-2021"))
    assert doc["utility_after"] == 14


def test_solve(capsys):
    code, doc = run_json(capsys, "solve", "--params", "4,3,2")
    assert code == EXIT_OK
    assert _keys(doc) == GOLDEN["solve"]
    assert doc["status"] == "optimal" and doc["best_utility"] == 0


def test_solve_node_budget_exit_code(capsys):
    code, doc = run_json(capsys, "probe", "--params", "10,8,5", "--a", "3", "--b", "5", "--max-nodes", "50")
    assert code == EXIT_BUDGET and doc["status"] == "unknown"


def test_probe_infeasible(capsys):
    code, doc = run_json(capsys, "probe", "--params", "6,4,3", "--a", "1", "--b", "2")
    assert code == EXIT_NEGATIVE and doc["status"] == "infeasible"
    assert _keys(doc) == GOLDEN["probe"]


def test_prove_optimal(capsys):
    code, doc = run_json(capsys, "prove-optimal", "--params", "6,4,3")
    assert code == EXIT_OK and doc["best_utility"] == 2
    assert _keys(doc) == GOLDEN["prove-optimal"]


def test_prove_optimal_with_incumbent(capsys, plan_file):
    code, doc = run_json(capsys, "prove-optimal", "--params", "18,17,6", "--incumbent", plan_file("ppl-18-17-6"))
    assert code == EXIT_OK and doc["best_utility"] == 0 and doc["proof"] == []


def test_greedy(capsys, plan_file):
    code, doc = run_json(capsys, "greedy", "--prefix", plan_file("ppl-8-7-4"), "--flights", "8")
    assert code == EXIT_OK
    assert _keys(doc) == GOLDEN["greedy"]
    assert doc["utility"] == 1


def test_export_and_import_round_trip(capsys, tmp_path):
    model_path = tmp_path / "m.lp"
    code, doc = run_json(capsys, "export-model", "--params", "10,8,5", "--formulation", "ilp_flight", "-o", str(model_path))
    assert code == EXIT_OK
    assert set(GOLDEN["export-model"]) <= set(doc)
    plan = load_builtin("apcl-2021")
    values = encode_plan(gen_ilp_flight(plan.params), plan)
    sol = tmp_path / "sol.txt"
    sol.write_text("".join(f"{k} {v}\n" for k, v in values.items()))
    code, doc = run_json(capsys, "import-solution", "--model", str(model_path), "--solution", str(sol))
    assert code == EXIT_OK
    assert _keys(doc) == GOLDEN["import-solution"]
    assert doc["utility"] == utility(plan).utility == 7


def test_export_counts(capsys):
    _, doc = run_json(capsys, "export-model", "--params", "10,16,5", "--formulation", "ilp_flight", "--relax-teams", "7,8,9,10")
    assert doc["variables"]["continuous"] == 480
    assert doc["variables"]["binary"] == 240
    assert doc["text"].startswith("\\")


def test_export_mps_of_quadratic_model_fails(capsys):
    code, _, err = run(capsys, "export-model", "--params", "4,1,2", "--formulation", "bqp", "--format", "mps")
    assert code == EXIT_USAGE and err


def test_import_fractional_binary_names_variable(capsys, tmp_path):
    model_path = tmp_path / "m.lp"
    run(capsys, "export-model", "--params", "4,1,2", "--formulation", "bqp", "-o", str(model_path))
    sol = tmp_path / "sol.txt"
    sol.write_text("x_1_1 1\nx_1_2 0.5\nx_1_3 0\nx_1_4 1\nx_2_1 0\nx_2_2 0.5\nx_2_3 1\nx_2_4 0\na 0\nb 1\n")
    code, out, err = run(capsys, "import-solution", "--model", str(model_path), "--solution", str(sol))
    assert code == EXIT_USAGE and "x_1_2" in err


def test_table_output_after_subcommand(capsys):
    code, out, _ = run(capsys, "analyze", "--builtin", "apcl-2021", "--table")
    assert code == EXIT_OK
    with pytest.raises(json.JSONDecodeError):
        json.loads(out)
    assert "7" in out
    code, out2, _ = run(capsys, "--table", "analyze", "--builtin", "apcl-2021")
    assert out2 == out


@pytest.mark.parametrize(
    "argv",
    [
        ["solve", "--params", "6,5,2", "--seed", "3"],
        ["transform", "--builtin", "apcl-2021", "--search-removal", "2", "--seed", "5"],
        ["scan-params", "--base", "10,8,5"],
        ["export-model", "--params", "6,3,3", "--formulation", "bqp", "--symmetry"],
    ],
)
def test_byte_identical_output(capsys, argv):
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first == second


def test_env_defaults_and_flag_precedence(capsys, monkeypatch):
    monkeypatch.setenv("REGATTA_BUDGET_SECS", "0")
    monkeypatch.setenv("REGATTA_SEED", "3")
    assert run(capsys, "solve", "--params", "6,5,2") == run(capsys, "solve", "--params", "6,5,2", "--seed", "3")
    monkeypatch.setenv("REGATTA_THREADS", "lots")
    code, _, err = run(capsys, "solve", "--params", "4,3,2")
    assert code == EXIT_USAGE and "REGATTA_THREADS" in err
    code, doc = run_json(capsys, "solve", "--params", "4,3,2", "--threads", "1")
    assert code == EXIT_OK


def test_env_budget_is_used(capsys, monkeypatch):
    monkeypatch.setenv("REGATTA_BUDGET_SECS", "0.001")
    code, doc = run_json(capsys, "probe", "--params", "10,8,5", "--a", "3", "--b", "5")
    assert code == EXIT_BUDGET and doc["status"] == "unknown"
    code, doc = run_json(capsys, "probe", "--params", "10,8,5", "--a", "3", "--b", "5", "--budget", "0.001", "--max-nodes", "10")
    assert code == EXIT_BUDGET
