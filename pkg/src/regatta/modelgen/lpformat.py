"""CPLEX LP and free MPS writers, plus a reader for the LP subset we write.

LP grammar emitted (one item per line, long expressions wrapped with a
leading space)::

    \\ comment lines
    Minimize
     obj: b - a
    Subject To
     <name>: <linear terms> [ + [ <v> * <w> + ... ] ] <sense> <rhs>
    Bounds
     <lb> <= <name> <= <ub>  |  <name> = <value>
    Binaries / Generals
     <names>
    End
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .model import BINARY, CONTINUOUS, INTEGER, Constraint, ModelError, ModelSpec, Var, bulk

LP = "lp"
MPS = "mps"
WRAP = 78


class DialectError(ModelError):
    pass


class LPParseError(ModelError):
    pass


def _num(x: float) -> str:
    if type(x) is int:
        return str(x)
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def _linear_line(c: Constraint) -> str:
    parts = [f" {c.name}:"]
    first = True
    for coef, v in c.linear:
        if coef == 1:
            parts.append(v if first else f"+ {v}")
        elif coef == -1:
            parts.append(f"- {v}")
        else:
            tok = f"{_num(abs(coef))} {v}"
            parts.append(f"- {tok}" if coef < 0 else (tok if first else f"+ {tok}"))
        first = False
    parts.append(c.sense)
    parts.append(_num(c.rhs))
    return " ".join(parts)


def _linear_text(terms) -> list[str]:
    out = []
    for i, (c, v) in enumerate(terms):
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        tok = v if mag == 1 else f"{_num(mag)} {v}"
        if i == 0:
            out.append(tok if sign == "+" else f"- {tok}")
        else:
            out.append(f"{sign} {tok}")
    return out


def _quad_text(terms) -> list[str]:
    out = ["["]
    for i, (c, u, v) in enumerate(terms):
        tok = f"{u} * {v}" if abs(c) == 1 else f"{_num(abs(c))} {u} * {v}"
        if i == 0:
            out.append(tok if c > 0 else f"- {tok}")
        else:
            out.append(f"{'+' if c > 0 else '-'} {tok}")
    out.append("]")
    return out


def _wrap(tokens: list[str]) -> list[str]:
    lines, cur = [], ""
    for tok in tokens:
        if cur and len(cur) + 1 + len(tok) > WRAP:
            lines.append(cur)
            cur = "   " + tok
        else:
            cur = f"{cur} {tok}" if cur else f" {tok}"
    if cur:
        lines.append(cur)
    return lines


def _row_tokens(c: Constraint) -> list[str]:
    toks = [f"{c.name}:"]
    quad = _quad_text(c.quadratic) if c.quadratic else []
    lin = _linear_text(c.linear)
    if quad:
        toks += quad
        if lin:
            first = lin[0]
            lin[0] = first if first.startswith("-") else f"+ {first}"
        toks += lin
    else:
        toks += lin
    toks += [c.sense, _num(c.rhs)]
    return toks


@bulk
def export_lp(model: ModelSpec) -> str:
    p = model.params
    out = [
        f"\\ formulation: {model.formulation}",
        f"\\ params: n_teams={p[0]} n_flights={p[1]} n_inrace={p[2]}",
        "Minimize",
    ]
    out += _wrap(["obj:"] + _linear_text(model.objective))
    out.append("Subject To")
    for c in model.rows():
        if not c.quadratic and len(c.linear) <= 4:
            line = _linear_line(c)
            if len(line) <= WRAP:
                out.append(line)
                continue
        out += _wrap(_row_tokens(c))
    out.append("Bounds")
    for v in model.variables:
        if v.fixed:
            out.append(f" {v.name} = {_num(v.lb)}")
        elif v.kind != BINARY:
            out.append(f" {_num(v.lb)} <= {v.name} <= {_num(v.ub)}")
    for kind, title in ((BINARY, "Binaries"), (INTEGER, "Generals")):
        names = [v.name for v in model.variables if v.kind == kind]
        if names:
            out.append(title)
            out += _wrap(names)
    out.append("End")
    return "\n".join(out) + "\n"


def export_mps(model: ModelSpec) -> str:
    """Free-format MPS; linear models only."""
    if not model.is_linear:
        raise DialectError("MPS output is linear only; the bqp formulation has quadratic constraints")
    rows = list(model.rows())
    sense_code = {"<=": "L", ">=": "G", "=": "E"}
    out = [f"NAME {model.formulation}_{'_'.join(map(str, model.params))}", "ROWS", " N obj"]
    out += [f" {sense_code[c.sense]} {c.name}" for c in rows]
    cols: dict[str, list[tuple[str, int]]] = {v.name: [] for v in model.variables}
    for c, v in model.objective:
        cols[v].append(("obj", c))
    for r in rows:
        for c, v in r.linear:
            cols[v].append((r.name, c))
    out.append("COLUMNS")
    in_int = False
    marker = 0
    for v in model.variables:
        is_int = v.kind != CONTINUOUS
        if is_int != in_int:
            out.append(f" MARKER{marker} 'MARKER' {'INTORG' if is_int else 'INTEND'}")
            marker += 1
            in_int = is_int
        for row, c in cols[v.name]:
            out.append(f" {v.name} {row} {_num(c)}")
    if in_int:
        out.append(f" MARKER{marker} 'MARKER' INTEND")
    out.append("RHS")
    out += [f" RHS {c.name} {_num(c.rhs)}" for c in rows if c.rhs != 0]
    out.append("BOUNDS")
    for v in model.variables:
        if v.fixed:
            out.append(f" FX BND {v.name} {_num(v.lb)}")
        elif v.kind == BINARY:
            out.append(f" BV BND {v.name}")
        else:
            if v.lb != 0:
                out.append(f" LO BND {v.name} {_num(v.lb)}")
            out.append(f" UP BND {v.name} {_num(v.ub)}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def export_model(model: ModelSpec, fmt: str = LP) -> str:
    if fmt == LP:
        return export_lp(model)
    if fmt == MPS:
        return export_mps(model)
    raise DialectError(f"unknown output format {fmt!r}; choose lp or mps")


# -- reader ---------------------------------------------------------------------

@dataclass
class ParsedLP:
    objective: tuple[tuple[float, str], ...]
    rows: list[Constraint]
    variables: dict[str, Var]


_SECTIONS = {"minimize": "obj", "subject to": "st", "bounds": "bounds", "binaries": "bin", "generals": "gen", "end": "end"}
_TOKEN = re.compile(r"\[|\]|\*|<=|>=|=|[+-]|[A-Za-z_][A-Za-z0-9_]*|\d+(?:\.\d*)?(?:[eE][+-]?\d+)?")


def _parse_expr(text: str, where: str):
    toks = _TOKEN.findall(text)
    if "".join(toks) != re.sub(r"\s+", "", text):
        raise LPParseError(f"{where}: unrecognised characters in {text!r}")
    linear: dict[str, float] = {}
    quad: dict[tuple[str, str], float] = {}
    i, n = 0, len(toks)
    in_quad = False

    def term(i, sign):
        coef = 1.0
        if i < n and re.fullmatch(r"\d.*", toks[i]):
            coef = float(toks[i])
            i += 1
        if i >= n or not re.fullmatch(r"[A-Za-z_]\w*", toks[i]):
            raise LPParseError(f"{where}: expected a variable in {text!r}")
        return i + 1, sign * coef, toks[i]

    sign = 1.0
    while i < n:
        t = toks[i]
        if t in "+-":
            sign = -1.0 if t == "-" else 1.0
            i += 1
            continue
        if t == "[":
            in_quad = True
            i += 1
            continue
        if t == "]":
            in_quad = False
            i += 1
            continue
        i, c, v = term(i, sign)
        if in_quad:
            if i >= n or toks[i] != "*":
                raise LPParseError(f"{where}: expected '*' in quadratic term")
            i, c2, w = term(i + 1, 1.0)
            quad[(v, w)] = quad.get((v, w), 0.0) + c * c2
        else:
            linear[v] = linear.get(v, 0.0) + c
        sign = 1.0
    return linear, quad


def _as_int(x: float):
    return int(x) if float(x).is_integer() else x


def parse_lp(text: str) -> ParsedLP:
    """Read back an LP file in the grammar written by :func:`export_lp`."""
    section = None
    items: dict[str, list[str]] = {k: [] for k in _SECTIONS.values()}
    for raw in text.splitlines():
        line = raw.split("\\", 1)[0].rstrip()
        if not line.strip():
            continue
        key = line.strip().lower()
        if key in _SECTIONS and not raw.startswith(" "):
            section = _SECTIONS[key]
            continue
        if section is None:
            raise LPParseError(f"content before the first section: {raw!r}")
        if raw.startswith("  "):
            if not items[section]:
                raise LPParseError(f"continuation without a statement: {raw!r}")
            items[section][-1] += " " + line.strip()
        else:
            items[section].append(line.strip())
    if len(items["obj"]) != 1:
        raise LPParseError("expected exactly one objective line")
    name, _, expr = items["obj"][0].partition(":")
    lin, _ = _parse_expr(expr, "objective")
    objective = tuple((_as_int(c), v) for v, c in lin.items())

    rows = []
    for stmt in items["st"]:
        name, sep, body = stmt.partition(":")
        if not sep:
            raise LPParseError(f"unnamed constraint: {stmt!r}")
        m = re.fullmatch(r"(.*?)(<=|>=|=)\s*(-?[\d.eE+]+)", body.strip())
        if not m:
            raise LPParseError(f"constraint {name} has no sense/rhs")
        lin, quad = _parse_expr(m.group(1), name)
        rows.append(Constraint(
            name.strip(),
            tuple((_as_int(c), v) for v, c in lin.items()),
            m.group(2),
            _as_int(float(m.group(3))),
            "",
            tuple((_as_int(c), u, v) for (u, v), c in quad.items()),
        ))

    kinds: dict[str, str] = {}
    for stmt in items["bin"]:
        for v in stmt.split():
            kinds[v] = BINARY
    for stmt in items["gen"]:
        for v in stmt.split():
            kinds[v] = INTEGER
    bounds: dict[str, tuple[float, float]] = {}
    for stmt in items["bounds"]:
        m = re.fullmatch(r"(\S+)\s*<=\s*(\S+)\s*<=\s*(\S+)", stmt)
        if m:
            bounds[m.group(2)] = (_as_int(float(m.group(1))), _as_int(float(m.group(3))))
            continue
        m = re.fullmatch(r"(\S+)\s*=\s*(\S+)", stmt)
        if m:
            val = _as_int(float(m.group(2)))
            bounds[m.group(1)] = (val, val)
            continue
        raise LPParseError(f"unsupported bound statement {stmt!r}")
    names = [v for _, v in objective]
    for r in rows:
        names += [v for _, v in r.linear] + [x for _, u, v in r.quadratic for x in (u, v)]
    names += list(bounds) + list(kinds)
    variables: dict[str, Var] = {}
    for n in names:
        if n in variables:
            continue
        kind = kinds.get(n, CONTINUOUS)
        lb, ub = bounds.get(n, (0, 1) if kind == BINARY else (0, float("inf")))
        variables[n] = Var(n, kind, lb, ub)
    return ParsedLP(objective, rows, variables)


def model_from_lp(text: str) -> ModelSpec:
    """Rebuild a model from an LP file written by :func:`export_lp`.

    The formulation and parameters come from the leading comment lines.
    Sandwich rows come back as ordinary rows, which is all solution import needs.
    """
    meta: dict[str, str] = {}
    for line in text.splitlines():
        if not line.startswith("\\"):
            break
        key, sep, val = line[1:].partition(":")
        if sep:
            meta[key.strip()] = val.strip()
    if "formulation" not in meta or "params" not in meta:
        raise LPParseError("LP file lacks the formulation/params comment header")
    fields = dict(kv.split("=", 1) for kv in meta["params"].split())
    try:
        params = tuple(int(fields[k]) for k in ("n_teams", "n_flights", "n_inrace"))
    except (KeyError, ValueError):
        raise LPParseError(f"malformed params comment {meta['params']!r}") from None
    parsed = parse_lp(text)
    model = ModelSpec(meta["formulation"], params, objective=parsed.objective)
    for v in parsed.variables.values():
        model.add_var(v.name, v.kind, v.lb, v.ub)
    for r in parsed.rows:
        model.add_constraint(r)
    return model
