"""CPLEX-style ``.lp`` text files: writer, reader and solution-file reader."""

from __future__ import annotations

import math
import re
from pathlib import Path

import numpy as np

from .model import INFEASIBLE, OPTIMAL, TIME_LIMIT, UNBOUNDED, LinExpr, Model

_BAD = re.compile(r"[^A-Za-z0-9_!\"#$%&()/,.;?@`'{}|~]")
_TERMS_PER_LINE = 6
_SENSE_TOKENS = {"<=": "<=", "=<": "<=", "<": "<=", ">=": ">=", "=>": ">=", ">": ">=", "=": "=="}


class LPFormatError(ValueError):
    pass


def sanitize_names(names: list[str]) -> list[str]:
    """Map model names to legal, unique LP-file identifiers."""
    out, seen = [], set()
    for name in names:
        s = _BAD.sub("_", name) or "v"
        if s[0].isdigit() or s[0] == ".":
            s = "_" + s
        base, k = s, 1
        while s in seen:
            s = f"{base}_{k}"
            k += 1
        seen.add(s)
        out.append(s)
    return out


def _num(v: float) -> str:
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def _terms(pairs, names) -> list[str]:
    out = []
    for k, v in pairs:
        sign = "-" if v < 0 or (v == 0 and math.copysign(1, v) < 0) else "+"
        out.append(f"{sign} {_num(abs(v))} {names[k]}")
    return out


def _wrap(head: str, parts: list[str]) -> list[str]:
    lines = []
    for i in range(0, max(len(parts), 1), _TERMS_PER_LINE):
        chunk = " ".join(parts[i:i + _TERMS_PER_LINE])
        lines.append((head if i == 0 else "   ") + (" " + chunk if chunk else ""))
    return lines


def format_lp(model: Model) -> str:
    names = sanitize_names(model.names)
    rownames = sanitize_names([r.name for r in model.rows])
    lines = [f"\\ Model {sanitize_names([model.name])[0]}",
             "Maximize" if model.sense == "max" else "Minimize"]
    obj = _terms(sorted(model.objective.terms.items()), names)
    if model.objective.const != 0.0:
        c = model.objective.const
        obj.append(f"{'-' if c < 0 else '+'} {_num(abs(c))}")
    lines += _wrap(" obj:", obj)
    lines.append("Subject To")
    for r, rn in zip(model.rows, rownames):
        parts = _terms(zip(r.index.tolist(), r.coef.tolist()), names)
        sense = "=" if r.sense == "==" else r.sense
        parts.append(f"{sense} {_num(r.rhs)}")
        lines += _wrap(f" {rn}:", parts)
    lines.append("Bounds")
    # every variable gets a bounds line, in model order, so readers can
    # recover the canonical variable ordering
    for j, name in enumerate(names):
        lb, ub = model.lb[j], model.ub[j]
        if lb == ub:
            lines.append(f" {name} = {_num(lb)}")
        elif math.isinf(lb) and math.isinf(ub):
            lines.append(f" {name} free")
        else:
            lines.append(f" {_num(lb)} <= {name} <= {_num(ub)}")
    lines.append("Binaries")
    lines += [f" {n}" for n, b in zip(names, model.binary) if b]
    lines.append("End")
    return "\n".join(lines) + "\n"


def write_lp(model: Model, path) -> Path:
    path = Path(path)
    path.write_text(format_lp(model))
    return path


# reading ------------------------------------------------------------------

_SECTIONS = {
    "minimize": "obj_min", "minimum": "obj_min", "min": "obj_min",
    "maximize": "obj_max", "maximum": "obj_max", "max": "obj_max",
    "subject to": "rows", "such that": "rows", "st": "rows", "s.t.": "rows",
    "bounds": "bounds", "bound": "bounds",
    "binaries": "bin", "binary": "bin", "bin": "bin",
    "generals": "gen", "general": "gen", "gen": "gen",
    "end": "end",
}
_TOKEN = re.compile(r"(?:\d+\.?\d*|\.\d+)[eE][+-]?\d+(?![^\s+\-<>=:])|<=|>=|=<|=>|[<>=]|[+-]"
                    r"|[^\s+\-<>=:]+:?|:")
_NUMBER = re.compile(r"^(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?$|^inf(?:inity)?$", re.I)


def _is_num(tok: str) -> bool:
    return bool(_NUMBER.match(tok))


def _parse_linear(tokens: list[str], var_of) -> LinExpr:
    expr = LinExpr()
    i, sign, coef = 0, 1.0, None
    while i < len(tokens):
        t = tokens[i]
        if t in "+-":
            sign = sign * (-1.0 if t == "-" else 1.0)
        elif _is_num(t):
            if coef is not None:
                expr.const += sign * coef
                sign = 1.0
            coef = float(t)
        else:
            expr.iadd(LinExpr.var(var_of(t), sign * (1.0 if coef is None else coef)))
            sign, coef = 1.0, None
        i += 1
    if coef is not None:
        expr.const += sign * coef
    return expr


def parse_lp(text: str) -> Model:
    """Parse the subset of the LP format produced by :func:`format_lp`."""
    model = Model("model")
    m = re.match(r"\\\s*Model\s+(\S+)", text)
    if m:
        model.name = m.group(1)
    chunks: dict[str, list[str]] = {}
    order: list[str] = []
    section = None
    for raw in text.splitlines():
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        key = _SECTIONS.get(line.lower())
        if key is not None:
            section = key
            order.append(key)
            chunks.setdefault(key, [])
            continue
        if section is None:
            raise LPFormatError(f"text before the objective section: {raw!r}")
        chunks[section].append(line)
    if "gen" in chunks and chunks["gen"]:
        raise LPFormatError("general integer variables are not supported")
    # declare every variable in first-appearance order
    index: dict[str, int] = {}

    def var_of(name: str) -> int:
        if name not in index:
            index[name] = model.add_var(name, 0.0, math.inf)
        return index[name]

    for line in chunks.get("bounds", []):
        t = line.split()
        if len(t) in (2, 3):
            var_of(t[0])
        elif len(t) == 5:
            var_of(t[2])

    obj_key = "obj_max" if "obj_max" in chunks else "obj_min"
    model.sense = "max" if obj_key == "obj_max" else "min"
    toks = _TOKEN.findall(" ".join(chunks.get(obj_key, [])))
    if toks and toks[0].endswith(":"):
        toks = toks[1:]
    model.objective = _parse_linear(toks, var_of)

    toks = _TOKEN.findall(" ".join(chunks.get("rows", [])))
    i = 0
    while i < len(toks):
        name = None
        if toks[i].endswith(":"):
            name = toks[i][:-1]
            i += 1
        j = i
        while j < len(toks) and toks[j] not in _SENSE_TOKENS:
            j += 1
        if j >= len(toks) - 1:
            raise LPFormatError(f"row {name!r} has no sense/right-hand side")
        lhs = _parse_linear(toks[i:j], var_of)
        k = j + 1
        rsign = 1.0
        while toks[k] in "+-":
            rsign *= -1.0 if toks[k] == "-" else 1.0
            k += 1
        rhs = rsign * float(toks[k])
        model.add_constr(lhs, _SENSE_TOKENS[toks[j]], rhs, name=name)
        i = k + 1

    for line in chunks.get("bounds", []):
        t = line.split()
        if len(t) == 2 and t[1].lower() == "free":
            j = var_of(t[0])
            model.lb[j], model.ub[j] = -math.inf, math.inf
        elif len(t) == 3 and t[1] == "=":
            j = var_of(t[0])
            model.lb[j] = model.ub[j] = float(t[2])
        elif len(t) == 5 and t[1] == "<=" and t[3] == "<=":
            j = var_of(t[2])
            model.lb[j], model.ub[j] = float(t[0]), float(t[4])
        elif len(t) == 3 and t[1] in ("<=", ">="):
            j = var_of(t[0])
            if t[1] == "<=":
                model.ub[j] = float(t[2])
            else:
                model.lb[j] = float(t[2])
        else:
            raise LPFormatError(f"unsupported bound line {line!r}")
    for line in chunks.get("bin", []):
        for name in line.split():
            j = var_of(name)
            model.binary[j] = True
            model.lb[j] = max(model.lb[j], 0.0)
            model.ub[j] = min(model.ub[j], 1.0)
    return model


def read_lp(path) -> Model:
    return parse_lp(Path(path).read_text())


def models_equivalent(a: Model, b: Model, names_b: list[str] | None = None) -> bool:
    """Structural equality of two models up to variable declaration order."""
    if a.sense != b.sense or a.num_rows != b.num_rows or a.num_vars != b.num_vars:
        return False
    na = sanitize_names(a.names)
    pos = {n: i for i, n in enumerate(b.names if names_b is None else names_b)}
    try:
        perm = np.array([pos[n] for n in na], dtype=np.int64)
    except KeyError:
        return False
    for j in range(a.num_vars):
        k = perm[j]
        if (a.lb[j], a.ub[j], a.binary[j]) != (b.lb[k], b.ub[k], b.binary[k]):
            return False
    ca = {perm[k]: v for k, v in a.objective.terms.items() if v != 0}
    cb = {k: v for k, v in b.objective.terms.items() if v != 0}
    if ca != cb or a.objective.const != b.objective.const:
        return False
    for ra, rb in zip(a.rows, b.rows):
        da = dict(zip(perm[ra.index].tolist(), ra.coef.tolist()))
        db = dict(zip(rb.index.tolist(), rb.coef.tolist()))
        if da != db or ra.sense != rb.sense or ra.rhs != rb.rhs:
            return False
    return True


_STATUS_WORDS = [("infeasible", INFEASIBLE), ("unbounded", UNBOUNDED),
                 ("time", TIME_LIMIT), ("optimal", OPTIMAL)]


def read_solution(path, names: list[str]) -> tuple[str | None, dict[str, float]]:
    """Read ``name value`` pairs from an external solver's solution file.

    ``names`` are the LP-file identifiers.  Lines may carry extra columns
    (index, reduced cost); the first token that is a known name and the
    first number after it are taken.  A status word on any line that does
    not hold a value is reported as the status.
    """
    known = set(names)
    values: dict[str, float] = {}
    status = None
    for raw in Path(path).read_text().splitlines():
        toks = raw.replace("=", " ").replace(":", " ").split()
        hit = None
        for i, t in enumerate(toks):
            if t in known:
                for u in toks[i + 1:]:
                    try:
                        hit = (t, float(u))
                        break
                    except ValueError:
                        continue
                break
        if hit is not None:
            values[hit[0]] = hit[1]
            continue
        low = raw.lower()
        if status is None:
            for word, st in _STATUS_WORDS:
                if word in low:
                    status = st
                    break
    return status, values
