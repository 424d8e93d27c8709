"""Rewrite parsed formulas into executable program form.

Normalization eliminates unbounded universal quantifiers (FORALL x . f
becomes NOT EXISTS x . NOT f), deletes double negations, flattens nested
conjunction heads into the right-associated spine, and renames every bound
variable to a globally unique name carrying the reserved '$' mark.  Renaming
is positional, so normalizing twice yields the same result.
"""

from __future__ import annotations

from .formulas import (
    And,
    Atom,
    Cons,
    EMPTY,
    Exists,
    ExistsBounded,
    FRESH_MARK,
    Forall,
    ForallBounded,
    Formula,
    Head,
    Implies,
    Not,
    Or,
    ProcedureDef,
    ProgramUnit,
    Var,
    concat,
    conj,
    subst_formula,
)


class FreshNames:
    """Monotone counter handing out reserved bound-variable names."""

    def __init__(self, start: int = 1):
        self.next_id = start

    def fresh(self, base: str) -> str:
        if FRESH_MARK in base:
            base = base.split(FRESH_MARK, 1)[0]
        name = f"{base}{FRESH_MARK}{self.next_id}"
        self.next_id += 1
        return name


def normalize(f: Formula, fresh: FreshNames | None = None) -> Formula:
    """Normalize a single formula; total on sort-checked input."""
    return _norm(f, fresh if fresh is not None else FreshNames())


def _norm(f: Formula, fresh: FreshNames) -> Formula:
    heads = [_norm_head(h, fresh) for h in f]
    out: Formula = EMPTY
    for part in reversed(heads):
        out = concat(part, out)
    return out


def _norm_head(h: Head, fresh: FreshNames) -> Formula:
    """Normalize one conjunct; the result is a formula (a head may dissolve
    into several conjuncts or none)."""
    if isinstance(h, Atom):
        return conj(h)
    if isinstance(h, And):
        # clause dissolves: conjunction heads flatten into the spine
        return concat(_norm(h.left, fresh), _norm(h.right, fresh))
    if isinstance(h, Or):
        return conj(Or(_norm(h.left, fresh), _norm(h.right, fresh)))
    if isinstance(h, Implies):
        return conj(Implies(_norm(h.antecedent, fresh), _norm(h.consequent, fresh)))
    if isinstance(h, Not):
        body = _norm(h.body, fresh)
        stripped = _strip_double_negation(body)
        if stripped is not None:
            return stripped
        return conj(Not(body))
    if isinstance(h, Forall):
        # FORALL x . f  ~>  NOT EXISTS x . NOT f, then renaming as usual
        rewritten = Not(conj(Exists(h.var, h.sort, conj(Not(h.body)))))
        return _norm_head(rewritten, fresh)
    if isinstance(h, Exists):
        name = fresh.fresh(h.var)
        body = _norm(subst_formula(h.body, {h.var: Var(name, h.sort)}), fresh)
        return conj(Exists(name, h.sort, body))
    if isinstance(h, (ExistsBounded, ForallBounded)):
        name = fresh.fresh(h.var)
        body = _norm(subst_formula(h.body, {h.var: Var(name)}), fresh)
        return conj(type(h)(name, h.lo, h.hi, body))
    raise TypeError(f"unknown head {h!r}")


def _strip_double_negation(body: Formula) -> Formula | None:
    """For a negation whose body is exactly one negation, return the inner
    body (NOT NOT f ~> f); otherwise None."""
    if isinstance(body, Cons) and isinstance(body.head, Not) and body.tail.is_empty():
        return body.head.body
    return None


def normalize_program(p: ProgramUnit) -> ProgramUnit:
    """Normalize procedure bodies and query with one shared name supply, so
    bound names are unique across the whole unit."""
    fresh = FreshNames()
    procs = tuple(
        ProcedureDef(proc.name, proc.params, _norm(proc.body, fresh))
        for proc in p.procedures
    )
    query = _norm(p.query, fresh)
    return ProgramUnit(
        arrays=p.arrays,
        procedures=procs,
        query=query,
        free_vars=p.free_vars,
        normalized=True,
        fresh_base=fresh.next_id,
    )


def load(source: str) -> ProgramUnit:
    """parse + normalize in one step."""
    from .parser import parse

    return normalize_program(parse(source))


def load_query(source: str) -> ProgramUnit:
    from .parser import parse_query

    return normalize_program(parse_query(source))
