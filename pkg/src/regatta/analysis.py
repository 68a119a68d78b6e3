"""Necessary conditions for perfect pairing lists and the nearby-parameter scan.

All checks are necessary conditions only.  A passing verdict never claims that
a perfect list exists: ``(10, 9, 5)`` passes everything and still has none.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .core import LeagueParams, derive

IMPOSSIBLE = "impossible"
PASSES = "passes-necessary-conditions"


def check_integrality(params: LeagueParams) -> bool:
    """(n_teams - 1) divides n_flights * (n_inrace - 1)."""
    return (params.n_flights * (params.n_inrace - 1)) % (params.n_teams - 1) == 0


def _integral_lambda(params: LeagueParams) -> int | None:
    lam = Fraction(params.n_flights * (params.n_inrace - 1), params.n_teams - 1)
    return int(lam) if lam.denominator == 1 else None


def check_divisibility(params: LeagueParams) -> tuple[bool, bool]:
    """Block-design divisibility conditions on the (integral) average lambda.

    Returns ``(False, False)`` when the average is not an integer.
    """
    lam = _integral_lambda(params)
    if lam is None:
        return (False, False)
    t, r = params.n_teams, params.n_inrace
    first = (lam * (t - 1)) % (r - 1) == 0
    second = (lam * t * (t - 1)) % (r * (r - 1)) == 0
    return (first, second)


def check_bose(params: LeagueParams) -> bool:
    """Bose's inequality for resolvable designs: n_races >= n_teams + n_flights - 1."""
    n_races = derive(params).n_races
    return n_races >= params.n_teams + params.n_flights - 1


@dataclass(frozen=True)
class FeasibilityVerdict:
    params: LeagueParams
    lambda_avg: Fraction
    integrality_ok: bool
    divisibility1_ok: bool
    divisibility2_ok: bool
    bose_ok: bool

    @property
    def perfect_possible(self) -> str:
        if all((self.integrality_ok, self.divisibility1_ok, self.divisibility2_ok, self.bose_ok)):
            return PASSES
        return IMPOSSIBLE

    def to_dict(self) -> dict:
        return {
            "n_teams": self.params.n_teams,
            "n_flights": self.params.n_flights,
            "n_inrace": self.params.n_inrace,
            "lambda_avg_num": self.lambda_avg.numerator,
            "lambda_avg_den": self.lambda_avg.denominator,
            "integrality_ok": self.integrality_ok,
            "divisibility1_ok": self.divisibility1_ok,
            "divisibility2_ok": self.divisibility2_ok,
            "bose_ok": self.bose_ok,
            "perfect_possible": self.perfect_possible,
        }


def check_params(params: LeagueParams) -> FeasibilityVerdict:
    d1, d2 = check_divisibility(params)
    return FeasibilityVerdict(
        params=params,
        lambda_avg=derive(params).lambda_avg,
        integrality_ok=check_integrality(params),
        divisibility1_ok=d1,
        divisibility2_ok=d2,
        bose_ok=check_bose(params),
    )


def _span(centre: int, radius: int) -> range:
    if radius < 0:
        raise ValueError(f"scan radius must be nonnegative, got {radius}")
    return range(centre - radius, centre + radius + 1)


def scan_nearby(
    base: LeagueParams | Iterable[LeagueParams],
    dt: int = 3,
    df: int = 3,
    dr: int = 2,
) -> list[tuple[LeagueParams, int]]:
    """All triples within ``+-dt, +-df, +-dr`` of the base(s) passing every check.

    Triples need ``n_inrace | n_teams`` and at least two races per flight.
    Several bases may be given; the union is returned sorted and deduplicated.
    """
    bases = [base] if isinstance(base, LeagueParams) else list(base)
    found: set[tuple[int, int, int]] = set()
    for b in bases:
        for t in _span(b.n_teams, dt):
            for f in _span(b.n_flights, df):
                for r in _span(b.n_inrace, dr):
                    if t < 2 or f < 1 or r < 2 or t % r or t // r < 2:
                        continue
                    p = LeagueParams(t, f, r)
                    if check_params(p).perfect_possible == PASSES:
                        found.add(p.as_tuple())
    out = []
    for t, f, r in sorted(found):
        p = LeagueParams(t, f, r)
        out.append((p, _integral_lambda(p)))
    return out


def format_scan_table(rows: list[tuple[LeagueParams, int]]) -> str:
    """Tab-separated ``n_teams n_flights n_inrace lambda`` table with header."""
    lines = ["n_teams\tn_flights\tn_inrace\tlambda"]
    lines += [f"{p.n_teams}\t{p.n_flights}\t{p.n_inrace}\t{lam}" for p, lam in rows]
    return "\n".join(lines) + "\n"


__all__ = [
    "FeasibilityVerdict",
    "IMPOSSIBLE",
    "PASSES",
    "check_bose",
    "check_divisibility",
    "check_integrality",
    "check_params",
    "format_scan_table",
    "scan_nearby",
]
