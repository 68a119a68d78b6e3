"""Solver-neutral representation of an optimisation model."""

from __future__ import annotations

import functools
import gc
from dataclasses import dataclass, field
from typing import Iterator, Mapping, NamedTuple

BINARY = "binary"
INTEGER = "integer"
CONTINUOUS = "continuous"


class ModelError(ValueError):
    pass


def bulk(fn):
    """Pause the cyclic collector: big models are millions of acyclic tuples."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        was_enabled = gc.isenabled()
        gc.disable()
        try:
            return fn(*args, **kwargs)
        finally:
            if was_enabled:
                gc.enable()

    return wrapper


@dataclass(frozen=True)
class Var:
    name: str
    kind: str
    lb: float
    ub: float

    @property
    def fixed(self) -> bool:
        return self.lb == self.ub


class Constraint(NamedTuple):
    """``sum(coef * var) + sum(coef * v1 * v2)  sense  rhs``.

    ``group`` tags the constraint family (``race``, ``lin`` ...) for counting.
    """

    name: str
    linear: tuple[tuple[int, str], ...]
    sense: str
    rhs: int
    group: str
    quadratic: tuple[tuple[int, str, str], ...] = ()

    def activity(self, values: Mapping[str, float]) -> float:
        s = sum(c * values[v] for c, v in self.linear)
        if self.quadratic:
            s += sum(c * values[u] * values[v] for c, u, v in self.quadratic)
        return s

    def satisfied(self, values: Mapping[str, float], tol: float = 1e-6) -> bool:
        if self.quadratic:
            act = self.activity(values)
        else:
            act = 0
            for c, v in self.linear:
                act += c * values[v]
        if self.sense == "<=":
            return act <= self.rhs + tol
        if self.sense == ">=":
            return act >= self.rhs - tol
        return abs(act - self.rhs) <= tol


@dataclass(frozen=True)
class Sandwich:
    """``lower_var <= sum(terms) <= upper_var`` for one team pair.

    ``terms`` are variable names (linear) or name pairs (bilinear products).
    Exported as two rows ``lo_<tag>`` and ``hi_<tag>``.
    """

    tag: str
    terms: tuple
    lower_var: str = "a"
    upper_var: str = "b"

    @property
    def is_quadratic(self) -> bool:
        return bool(self.terms) and isinstance(self.terms[0], tuple)

    def rows(self) -> tuple[Constraint, Constraint]:
        if self.is_quadratic:
            quad = tuple((1, u, v) for u, v in self.terms)
            lo = Constraint(f"lo_{self.tag}", ((-1, self.lower_var),), ">=", 0, "sandwich", quad)
            hi = Constraint(f"hi_{self.tag}", ((-1, self.upper_var),), "<=", 0, "sandwich", quad)
        else:
            lin = tuple((1, v) for v in self.terms)
            lo = Constraint(f"lo_{self.tag}", lin + ((-1, self.lower_var),), ">=", 0, "sandwich")
            hi = Constraint(f"hi_{self.tag}", lin + ((-1, self.upper_var),), "<=", 0, "sandwich")
        return lo, hi


@dataclass
class ModelSpec:
    """Variables, constraints and the objective ``minimize b - a``."""

    formulation: str
    params: tuple[int, int, int]
    variables: list[Var] = field(default_factory=list)
    linear_constraints: list[Constraint] = field(default_factory=list)
    sandwiches: list[Sandwich] = field(default_factory=list)
    objective: tuple[tuple[int, str], ...] = ((1, "b"), (-1, "a"))
    options: dict = field(default_factory=dict)
    _index: dict[str, Var] = field(default_factory=dict, repr=False)

    def add_var(self, name: str, kind: str, lb: float = 0, ub: float = 1) -> None:
        if name in self._index:
            raise ModelError(f"duplicate variable {name}")
        v = Var(name, kind, lb, ub)
        self.variables.append(v)
        self._index[name] = v

    def fix(self, name: str, value: float) -> None:
        v = self._index[name]
        if not v.lb <= value <= v.ub:
            raise ModelError(f"cannot fix {name} to {value} outside [{v.lb}, {v.ub}]")
        fixed = Var(name, v.kind, value, value)
        self.variables[self.variables.index(v)] = fixed
        self._index[name] = fixed

    def var(self, name: str) -> Var:
        return self._index[name]

    def has_var(self, name: str) -> bool:
        return name in self._index

    def add_constraint(self, c: Constraint) -> None:
        self.linear_constraints.append(c)

    @property
    def quadratic_constraints(self) -> list[Sandwich]:
        return [s for s in self.sandwiches if s.is_quadratic]

    def rows(self) -> Iterator[Constraint]:
        """Every constraint row in export order."""
        yield from self.linear_constraints
        for s in self.sandwiches:
            yield from s.rows()

    def count(self, group: str) -> int:
        return sum(1 for c in self.rows() if c.group == group)

    def vars_of_kind(self, kind: str, prefix: str | None = None) -> list[Var]:
        return [v for v in self.variables if v.kind == kind and (prefix is None or v.name.startswith(prefix))]

    @property
    def is_linear(self) -> bool:
        return not self.quadratic_constraints

    def check_references(self) -> None:
        for c in self.rows():
            names = [v for _, v in c.linear] + [x for _, u, v in c.quadratic for x in (u, v)]
            for n in names:
                if n not in self._index:
                    raise ModelError(f"constraint {c.name} references undeclared variable {n}")

    def objective_value(self, values: Mapping[str, float]) -> float:
        return sum(c * values[v] for c, v in self.objective)
