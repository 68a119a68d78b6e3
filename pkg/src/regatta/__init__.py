"""Pairing lists for sailing leagues: analysis, search and model generation."""

from .core import (
    DerivedParams,
    InvalidPlanError,
    LeagueParams,
    PairingMatrix,
    ParameterError,
    PlanShapeError,
    RegattaError,
    TournamentPlan,
    UtilityReport,
    ValidationReport,
    all_flights_count,
    derive,
    pairing_matrix,
    utility,
    validate_plan,
)

__version__ = "0.1.0"

__all__ = [
    "DerivedParams",
    "InvalidPlanError",
    "LeagueParams",
    "PairingMatrix",
    "ParameterError",
    "PlanShapeError",
    "RegattaError",
    "TournamentPlan",
    "UtilityReport",
    "ValidationReport",
    "all_flights_count",
    "derive",
    "pairing_matrix",
    "utility",
    "validate_plan",
]
