"""Command-line entry point.

Every subcommand prints one JSON document (or a human-readable table with
``--table``).  Exit codes: 0 success, 1 definitive negative answer, 2 usage
or input error, 3 budget exhausted before an answer was certain.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Sequence

from . import analysis, catalog, modelgen, solver, transforms
from .core import LeagueParams, RegattaError, TournamentPlan, pairing_matrix, utility, validate_plan

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_USAGE = 2
EXIT_BUDGET = 3

DEFAULT_BUDGET_SECS = 600.0


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# -- configuration ---------------------------------------------------------------

def _env(name: str, cast, default):
    raw = os.environ.get(f"REGATTA_{name}")
    if raw is None or raw == "":
        return default
    try:
        return cast(raw)
    except ValueError:
        raise UsageError(f"REGATTA_{name}={raw!r} is not a valid {cast.__name__}") from None


def _budget_secs(args) -> float | None:
    val = args.budget if args.budget is not None else _env("BUDGET_SECS", float, DEFAULT_BUDGET_SECS)
    return None if val is not None and val <= 0 else val


def _threads(args) -> int:
    return args.threads if args.threads is not None else _env("THREADS", int, 1)


def _seed(args) -> int:
    return args.seed if args.seed is not None else _env("SEED", int, 0)


def _budget(args) -> solver.Budget:
    return solver.Budget(max_seconds=_budget_secs(args), max_nodes=getattr(args, "max_nodes", None))


# -- inputs ------------------------------------------------------------------------

def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _load_plan(args) -> tuple[TournamentPlan, str]:
    if getattr(args, "builtin", None):
        return catalog.load_builtin(args.builtin), f"builtin:{args.builtin}"
    if not getattr(args, "plan", None):
        raise UsageError("give a plan file or --builtin NAME")
    return catalog.parse_plan(_read_text(args.plan)), args.plan


def _params(text: str) -> LeagueParams:
    try:
        return LeagueParams.parse(text)
    except RegattaError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _plan_dict(plan: TournamentPlan) -> dict:
    return {"params": list(plan.params.as_tuple()), "plan": [list(r) for r in plan.rows()]}


def _grid_table(plan: TournamentPlan) -> str:
    width = max(2, len(str(plan.n_teams)), len(str(plan.n_flights)))
    head = "F\\T".rjust(width + 2) + " " + " ".join(str(t).rjust(width) for t in range(1, plan.n_teams + 1))
    lines = [head]
    for f, row in enumerate(plan.rows(), 1):
        lines.append(str(f).rjust(width + 2) + " " + " ".join(str(v).rjust(width) for v in row))
    return "\n".join(lines)


def _matrix_table(counts) -> str:
    n = counts.shape[0]
    width = max(2, len(str(int(counts.max()))), len(str(n)))
    lines = [" " * (width + 1) + " ".join(str(t).rjust(width) for t in range(1, n + 1))]
    for k in range(n):
        cells = ["-".rjust(width) if k == l else str(int(counts[k, l])).rjust(width) for l in range(n)]
        lines.append(str(k + 1).rjust(width) + " " + " ".join(cells))
    return "\n".join(lines)


def _write_plan_output(args, plan: TournamentPlan | None) -> None:
    out = getattr(args, "output", None)
    if out and plan is not None:
        catalog.write_plan(plan, out)


# -- subcommands ---------------------------------------------------------------------

def cmd_validate(args):
    plan, source = _load_plan(args)
    mode = args.mode or ("relaxed" if plan.relaxed else "strict")
    report = validate_plan(plan, mode)
    doc = {"source": source, "params": list(plan.params.as_tuple()), **report.to_dict()}
    code = EXIT_OK if report.ok else EXIT_NEGATIVE
    if args.table:
        lines = [f"{source}: {'valid' if report.ok else 'INVALID'} ({mode})"]
        lines += [f"  flight {v.flight}: {v.kind}: {v.detail}" for v in report.violations]
        return code, "\n".join(lines)
    return code, doc


def cmd_analyze(args):
    plan, source = _load_plan(args)
    rep = utility(plan)
    pm = pairing_matrix(plan)
    doc = {"source": source, "params": list(plan.params.as_tuple()), **rep.to_dict()}
    if args.matrix:
        doc["pairing_matrix"] = pm.counts.tolist()
    if args.table:
        text = [
            _grid_table(plan),
            "",
            _matrix_table(pm.counts),
            "",
            f"lambda_min={rep.lambda_min} lambda_max={rep.lambda_max} lambda_avg={rep.lambda_avg} "
            f"utility={rep.utility} associate_classes={rep.associate_classes}",
        ]
        return EXIT_OK, "\n".join(text)
    return EXIT_OK, doc


def cmd_check_params(args):
    if args.params is not None:
        if args.triple:
            raise UsageError("give either T F R or --params, not both")
        params = args.params
    elif len(args.triple) == 3:
        params = _params(",".join(args.triple))
    else:
        raise UsageError("check-params needs three integers T F R or --params T,F,R")
    verdict = analysis.check_params(params)
    doc = verdict.to_dict()
    code = EXIT_NEGATIVE if verdict.perfect_possible == analysis.IMPOSSIBLE else EXIT_OK
    if args.table:
        return code, "\n".join(f"{k}\t{v}" for k, v in doc.items())
    return code, doc


def cmd_scan_params(args):
    bases = args.base or [LeagueParams(18, 16, 6), LeagueParams(32, 18, 8), LeagueParams(10, 8, 5)]
    rows = analysis.scan_nearby(bases, args.dt, args.df, args.dr)
    if args.table:
        return EXIT_OK, analysis.format_scan_table(rows).rstrip("\n")
    doc = {
        "bases": [list(b.as_tuple()) for b in bases],
        "ranges": [args.dt, args.df, args.dr],
        "results": [{"n_teams": p.n_teams, "n_flights": p.n_flights, "n_inrace": p.n_inrace, "lambda": lam} for p, lam in rows],
    }
    return EXIT_OK, doc


def cmd_catalog(args):
    if args.name:
        if args.table:
            return EXIT_OK, catalog.builtin_text(args.name).rstrip("\n")
        plan = catalog.load_builtin(args.name)
        header = catalog.builtin_header(args.name)
        return EXIT_OK, {"name": args.name, "description": header.get("description"), "mode": header.get("mode"), **_plan_dict(plan)}
    entries = []
    for name in catalog.builtin_names():
        h = catalog.builtin_header(name)
        entries.append({
            "name": name,
            "params": [int(h["n_teams"]), int(h["n_flights"]), int(h["n_inrace"])],
            "mode": h.get("mode"),
            "description": h.get("description"),
        })
    if args.table:
        return EXIT_OK, "\n".join(f"{e['name']}\t{','.join(map(str, e['params']))}\t{e['mode']}\t{e['description']}" for e in entries)
    return EXIT_OK, {"plans": entries}


def cmd_transform(args):
    plan, source = _load_plan(args)
    before = utility(plan).utility
    ops = []
    k = 0
    if args.remove:
        idx = [i - 1 for i in args.remove]
        plan = transforms.remove_flights(plan, idx)
        ops.append({"op": "remove", "flights": args.remove})
        k += len(set(idx))
    if args.add_from_file:
        extra = catalog.parse_plan(_read_text(args.add_from_file))
        plan = transforms.add_flights(plan, extra.rows())
        ops.append({"op": "add", "count": extra.n_flights})
        k += extra.n_flights
    if args.search_removal is not None:
        plan = transforms.best_removal_search(
            plan, args.search_removal, max_seconds=_budget_secs(args), seed=_seed(args)
        )
        ops.append({"op": "search-removal", "k": args.search_removal})
        k += args.search_removal
    if args.repeat is not None:
        plan = transforms.repeat(plan, args.repeat)
        ops.append({"op": "repeat", "times": args.repeat})
    if not ops:
        raise UsageError("transform needs at least one of --remove, --add-from-file, --repeat, --search-removal")
    rep = utility(plan)
    _write_plan_output(args, plan)
    if args.table:
        return EXIT_OK, _grid_table(plan) + f"\n\nutility {before} -> {rep.utility}"
    doc = {
        "source": source,
        "operations": ops,
        "utility_before": before,
        "utility_after": rep.utility,
        "lambda_min": rep.lambda_min,
        "lambda_max": rep.lambda_max,
        **_plan_dict(plan),
    }
    if args.repeat is None:
        bound = transforms.TransformBound(before, k)
        doc["bound"] = {"k": k, "lower": bound.lower, "upper": bound.upper, "hard_lower": bound.hard_lower}
    return EXIT_OK, doc


def _outcome(args, outcome: solver.SolveOutcome, codes: dict[str, int]):
    _write_plan_output(args, outcome.best_plan)
    if args.table:
        lines = [f"status: {outcome.status}", f"utility: {outcome.best_utility}"]
        if outcome.proof:
            lines.append("infeasible windows: " + " ".join(f"[{a},{b}]" for a, b in outcome.proof))
        if outcome.best_plan is not None:
            lines += ["", _grid_table(outcome.best_plan)]
        return codes[outcome.status], "\n".join(lines)
    return codes[outcome.status], outcome.to_dict(include_timing=args.timing)


def cmd_solve(args):
    out = solver.solve_exact(
        args.params, _budget(args), symmetry=not args.no_symmetry, threads=_threads(args), seed=_seed(args)
    )
    return _outcome(args, out, {"optimal": EXIT_OK, "feasible": EXIT_BUDGET, "unknown": EXIT_BUDGET})


def cmd_probe(args):
    if not 0 <= args.a <= args.b <= args.params.n_flights:
        raise UsageError(f"need 0 <= a <= b <= n_flights={args.params.n_flights}")
    out = solver.probe_feasibility(args.params, args.a, args.b, _budget(args), symmetry=not args.no_symmetry, threads=_threads(args))
    return _outcome(args, out, {"feasible": EXIT_OK, "infeasible": EXIT_NEGATIVE, "unknown": EXIT_BUDGET})


def cmd_prove_optimal(args):
    incumbent = catalog.parse_plan(_read_text(args.incumbent)) if args.incumbent else None
    out = solver.prove_optimal_utility(
        args.params, _budget(args), seed=_seed(args), threads=_threads(args), incumbent=incumbent
    )
    return _outcome(args, out, {"optimal": EXIT_OK, "feasible": EXIT_BUDGET, "unknown": EXIT_BUDGET})


def cmd_greedy(args):
    prefix = catalog.parse_plan(_read_text(args.prefix))
    plan = solver.greedy_extend(prefix, args.flights, args.step, _budget(args), seed=_seed(args))
    rep = utility(plan)
    _write_plan_output(args, plan)
    if args.table:
        return EXIT_OK, _grid_table(plan) + f"\n\nutility {rep.utility}"
    return EXIT_OK, {"prefix_flights": prefix.n_flights, "step": args.step, "utility": rep.utility,
                     "lambda_min": rep.lambda_min, "lambda_max": rep.lambda_max, **_plan_dict(plan)}


def cmd_export_model(args):
    opts = modelgen.GenOptions(
        formulation=args.formulation,
        symmetry_breaking=args.symmetry,
        relax_linearization=args.relax_linearization,
        relax_team_set=frozenset(args.relax_teams or ()),
        fixed_a=args.fix_a,
        fixed_b=args.fix_b,
        relax_one_per_equality=args.relax_equalities,
    )
    model = modelgen.generate(args.params, opts)
    text = modelgen.export_model(model, args.format)
    kinds = {kind: len(model.vars_of_kind(kind)) for kind in (modelgen.BINARY, modelgen.INTEGER, modelgen.CONTINUOUS)}
    doc = {
        "formulation": args.formulation,
        "params": list(args.params.as_tuple()),
        "options": opts.to_dict(),
        "format": args.format,
        "variables": kinds,
        "rows": sum(1 for _ in model.rows()),
        "quadratic_rows": 2 * len(model.quadratic_constraints),
    }
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8", newline="\n")
        doc["output"] = args.output
    else:
        doc["text"] = text
    if args.table:
        return EXIT_OK, text.rstrip("\n")
    return EXIT_OK, doc


def cmd_import_solution(args):
    model = modelgen.model_from_lp(_read_text(args.model))
    result = modelgen.import_solution(model, _read_text(args.solution))
    _write_plan_output(args, result.plan)
    if args.table:
        if result.plan is None:
            return EXIT_OK, f"bounds only: objective {result.objective}, lower bound {result.lower_bound}"
        return EXIT_OK, _grid_table(result.plan) + f"\n\nutility {utility(result.plan).utility}"
    return EXIT_OK, {"formulation": model.formulation, **result.to_dict()}


# -- parser ---------------------------------------------------------------------------

def _add_plan_source(p):
    p.add_argument("plan", nargs="?", help="plan file ('-' for stdin)")
    p.add_argument("--builtin", metavar="NAME", help="use a bundled plan instead of a file")


def _add_search_opts(p, *, threads=True):
    p.add_argument("--budget", type=float, default=None, metavar="SECS", help="wall-clock budget (0 = none)")
    p.add_argument("--max-nodes", type=int, default=None, help="node budget per search")
    p.add_argument("--seed", type=int, default=None)
    if threads:
        p.add_argument("--threads", type=int, default=None)
    p.add_argument("--timing", action="store_true", help="include wall time in the JSON")
    p.add_argument("--output", "-o", help="also write the resulting plan to this file")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--table", action="store_true", default=argparse.SUPPRESS, help="human-readable output instead of JSON")
    parser = _Parser(prog="regatta", description="Pairing lists for sailing leagues.")
    parser.add_argument("--table", action="store_true", help="human-readable output instead of JSON")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    def add(name: str, **kw) -> argparse.ArgumentParser:
        return sub.add_parser(name, parents=[common], **kw)
    sub.required = True

    p = add("validate", help="check that a plan is a valid pairing list")
    _add_plan_source(p)
    p.add_argument("--mode", choices=("strict", "relaxed"))
    p.set_defaults(func=cmd_validate)

    p = add("analyze", help="pair counts and utility of a plan")
    _add_plan_source(p)
    p.add_argument("--matrix", action="store_true", help="include the pairing matrix")
    p.set_defaults(func=cmd_analyze)

    p = add("check-params", help="necessary conditions for a perfect pairing list")
    p.add_argument("triple", nargs="*", metavar="T F R")
    p.add_argument("--params", type=_params, metavar="T,F,R")
    p.set_defaults(func=cmd_check_params)

    p = add("scan-params", help="parameters near a base that pass every necessary condition")
    p.add_argument("--base", type=_params, action="append", metavar="T,F,R")
    p.add_argument("--dt", type=int, default=3)
    p.add_argument("--df", type=int, default=3)
    p.add_argument("--dr", type=int, default=2)
    p.set_defaults(func=cmd_scan_params)

    p = add("catalog", help="list bundled plans or show one")
    p.add_argument("name", nargs="?")
    p.set_defaults(func=cmd_catalog)

    p = add("transform", help="remove, add or repeat flights")
    _add_plan_source(p)
    p.add_argument("--remove", type=_int_list, metavar="F1,F2", help="1-based flight numbers to drop")
    p.add_argument("--add-from-file", metavar="FILE")
    p.add_argument("--repeat", type=int)
    p.add_argument("--search-removal", type=int, metavar="K")
    p.add_argument("--budget", type=float, default=None, metavar="SECS")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_transform)

    p = add("solve", help="minimise the utility by exact search")
    p.add_argument("--params", type=_params, required=True, metavar="T,F,R")
    p.add_argument("--no-symmetry", action="store_true")
    _add_search_opts(p)
    p.set_defaults(func=cmd_solve)

    p = add("probe", help="is there a plan with all pair counts in [a, b]?")
    p.add_argument("--params", type=_params, required=True, metavar="T,F,R")
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--b", type=int, required=True)
    p.add_argument("--no-symmetry", action="store_true")
    _add_search_opts(p)
    p.set_defaults(func=cmd_probe)

    p = add("prove-optimal", help="certify the optimal utility window by window")
    p.add_argument("--params", type=_params, required=True, metavar="T,F,R")
    p.add_argument("--incumbent", metavar="FILE", help="known plan to start from")
    _add_search_opts(p)
    p.set_defaults(func=cmd_prove_optimal)

    p = add("greedy", help="extend a plan block by block")
    p.add_argument("--prefix", required=True, metavar="FILE")
    p.add_argument("--flights", type=int, required=True, help="total number of flights wanted")
    p.add_argument("--step", type=int, default=1)
    _add_search_opts(p, threads=False)
    p.set_defaults(func=cmd_greedy)

    p = add("export-model", help="write an optimisation model as LP or MPS text")
    p.add_argument("--params", type=_params, required=True, metavar="T,F,R")
    p.add_argument("--formulation", choices=modelgen.FORMULATIONS, default=modelgen.ILP_RACE)
    p.add_argument("--symmetry", action="store_true", help="fix the first flight and team 1's races")
    p.add_argument("--relax-linearization", action="store_true")
    p.add_argument("--relax-teams", type=_int_list, metavar="T1,T2")
    p.add_argument("--relax-equalities", action="store_true", help="one continuous variable per equality row")
    p.add_argument("--fix-a", type=int)
    p.add_argument("--fix-b", type=int)
    p.add_argument("--format", choices=("lp", "mps"), default="lp")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_export_model)

    p = add("import-solution", help="read a solver's solution back into a plan")
    p.add_argument("--model", required=True, metavar="LPFILE")
    p.add_argument("--solution", required=True, metavar="FILE")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_import_solution)
    return parser


def _emit(payload, command: str) -> None:
    if isinstance(payload, str):
        sys.stdout.write(payload + "\n")
        return
    doc = {"schema_version": SCHEMA_VERSION, "command": command, **payload}
    sys.stdout.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def dispatch(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        code, payload = args.func(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except catalog.PlanParseError as exc:
        print(f"regatta: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RegattaError, modelgen.ModelError, ValueError, IndexError, KeyError) as exc:
        print(f"regatta: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit(payload, args.command)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    try:
        return dispatch(argv)
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
