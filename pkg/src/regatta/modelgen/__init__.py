"""Optimisation models of the pairing problem as solver-interchange files."""

from .formulations import (
    BQP,
    FORMULATIONS,
    ILP_FLIGHT,
    ILP_RACE,
    GenOptions,
    OptionsError,
    gen_bqp,
    gen_ilp_flight,
    gen_ilp_race,
    generate,
)
from .lpformat import (
    DialectError,
    LPParseError,
    ParsedLP,
    export_lp,
    export_model,
    export_mps,
    model_from_lp,
    parse_lp,
)
from .model import BINARY, CONTINUOUS, INTEGER, Constraint, ModelError, ModelSpec, Sandwich, Var
from .solution import (
    ImportResult,
    SolutionError,
    check_assignment,
    encode_plan,
    import_solution,
    parse_solution_text,
    symmetric_normal_form,
)

__all__ = [
    "BINARY",
    "BQP",
    "CONTINUOUS",
    "Constraint",
    "DialectError",
    "FORMULATIONS",
    "GenOptions",
    "ILP_FLIGHT",
    "ILP_RACE",
    "INTEGER",
    "ImportResult",
    "LPParseError",
    "ModelError",
    "ModelSpec",
    "OptionsError",
    "ParsedLP",
    "Sandwich",
    "SolutionError",
    "Var",
    "check_assignment",
    "encode_plan",
    "export_lp",
    "export_model",
    "export_mps",
    "gen_bqp",
    "gen_ilp_flight",
    "gen_ilp_race",
    "generate",
    "import_solution",
    "model_from_lp",
    "parse_lp",
    "parse_solution_text",
    "symmetric_normal_form",
]
