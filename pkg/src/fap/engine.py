"""Backtracking execution of program-form formulas.

A query and an initial valuation span a finite computation tree: atoms test or
bind, disjunctions branch, conjunction is sequential, negation/implication
consult the status of a sub-tree, quantifiers introduce fresh variables, and
bounded quantifiers iterate over an integer range.  Leaves are success
valuations, failures, or errors; exploration is lazy, left-to-right and
depth-first, and backtracks past error leaves instead of aborting.

Negation and implication come in the strict flavour (a non-closed operand is
an error) and liberal flavours that stay sound while producing fewer errors:
a failed sub-tree justifies the negation regardless of closedness, and a
success whose valuation pins no free variable of the operand refutes it.
Implication can additionally be rewritten through its disjunctive equivalents
(NOT a OR b, NOT a OR (a AND b), or both) which trade success-finding power
against failure-proving power.

Internally the search keeps one mutable binding store with an undo trail
(bindings are cheap, backtracking pops the trail), but everything it emits is
an immutable Valuation snapshot, so solve/trace stay pure functions of
(program, initial valuation, config) including leaf order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator

from .formulas import (
    And,
    App,
    ArrayRef,
    Atom,
    Call,
    Cons,
    Empty,
    Exists,
    ExistsBounded,
    Forall,
    ForallBounded,
    Formula,
    Head,
    Implies,
    IntConst,
    Not,
    Or,
    ProgramUnit,
    Scalar,
    Term,
    Var,
    atom_terms,
    concat,
    conj,
    free_vars,
    subst_formula,
)
from .normalize import FreshNames
from .values import (
    Arrays,
    Assignment,
    Cell,
    ClosedFalse,
    ClosedTrue,
    EMPTY_VALUATION,
    EvalFault,
    NotEvaluable,
    Valuation,
    Value,
    classify_atom,
    try_eval_term,
)

# Error-leaf causes.
ATOM_NOT_EVALUABLE = "atom-not-evaluable"
NEGAND_UNDETERMINED = "negand-undetermined"
ANTECEDENT_UNDETERMINED = "antecedent-undetermined"
UNBOUNDED_RANGE = "unbounded-range"
EVALUATION_FAULT = "evaluation-fault"
STEP_BUDGET = "step-budget"


class TreeStatus(Enum):
    SUCCESSFUL = "SUCCESSFUL"
    FAILED = "FAILED"
    UNDETERMINED = "UNDETERMINED"


class NegationMode(Enum):
    STRICT = "strict"
    LIBERAL = "liberal"


class ImplicationMode(Enum):
    STRICT = "strict"
    NEG_OR = "negor"
    GUARDED = "guarded"
    COMBINED = "combined"


@dataclass(frozen=True)
class EngineConfig:
    negation: NegationMode = NegationMode.STRICT
    implication: ImplicationMode = ImplicationMode.STRICT
    # verbatim strict implication: disable the two liberal relaxations that
    # strict implication otherwise inherits
    pedantic: bool = False
    max_steps: int | None = None
    solution_limit: int | None = None
    report_internal_bindings: bool = False

    def __post_init__(self) -> None:
        if self.max_steps is not None and self.max_steps < 1:
            raise ValueError("max_steps must be positive")
        if self.solution_limit is not None and self.solution_limit < 1:
            raise ValueError("solution_limit must be positive")


@dataclass(frozen=True)
class Success:
    valuation: Valuation


@dataclass(frozen=True)
class Fail:
    pass


@dataclass(frozen=True)
class Error:
    cause: str


Leaf = Success | Fail | Error

FAIL = Fail()


def status_of(leaves: Iterator[Leaf] | list[Leaf] | tuple[Leaf, ...]) -> TreeStatus:
    saw_error = False
    for leaf in leaves:
        if isinstance(leaf, Success):
            return TreeStatus.SUCCESSFUL
        if isinstance(leaf, Error):
            saw_error = True
    return TreeStatus.UNDETERMINED if saw_error else TreeStatus.FAILED


@dataclass
class TraceNode:
    """One node of the materialized computation tree.  Internal nodes carry
    the remaining formula, the live valuation and the tag of the rule that
    fired; leaf nodes carry the leaf payload instead."""

    tag: str
    formula: Formula | None = None
    valuation: Valuation | None = None
    children: list["TraceNode"] = field(default_factory=list)
    leaf: Leaf | None = None

    def leaves(self) -> Iterator[Leaf]:
        stack = [self]
        while stack:
            node = stack.pop()
            if node.leaf is not None:
                yield node.leaf
            stack.extend(reversed(node.children))

    def node_count(self) -> int:
        return 1 + sum(c.node_count() for c in self.children)


@dataclass(frozen=True)
class SolveResult:
    leaves: tuple[Leaf, ...]
    status: TreeStatus
    steps: int

    @property
    def solutions(self) -> tuple[Valuation, ...]:
        return tuple(l.valuation for l in self.leaves if isinstance(l, Success))

    @property
    def leaf_counts(self) -> tuple[int, int, int]:
        s = sum(1 for l in self.leaves if isinstance(l, Success))
        f = sum(1 for l in self.leaves if isinstance(l, Fail))
        e = sum(1 for l in self.leaves if isinstance(l, Error))
        return (s, f, e)

    @property
    def error_causes(self) -> tuple[str, ...]:
        return tuple(sorted({l.cause for l in self.leaves if isinstance(l, Error)}))


class _BudgetExceeded(Exception):
    pass


class _State(Valuation):
    """The search's live binding store: a valuation plus an undo trail.
    Scalar keys are strings and cell keys are tuples, so the trail stores the
    bare keys.  Never leaks out of the engine; leaves carry snapshots."""

    __slots__ = ("trail",)

    def __init__(self, initial: Valuation):
        super().__init__(initial.scalars, initial.cells)
        self.trail: list[str | Cell] = []

    def mark(self) -> int:
        return len(self.trail)

    def undo_to(self, mark: int) -> None:
        trail = self.trail
        assert len(trail) >= mark
        while len(trail) > mark:
            key = trail.pop()
            if type(key) is str:
                del self.scalars[key]
            else:
                del self.cells[key]

    def push_scalar(self, name: str, value: Value) -> None:
        assert name not in self.scalars
        self.scalars[name] = value
        self.trail.append(name)

    def push_cell(self, cell: Cell, value: Value) -> None:
        assert cell not in self.cells
        self.cells[cell] = value
        self.trail.append(cell)

    def snapshot(self) -> Valuation:
        return Valuation(self.scalars, self.cells)


@dataclass(frozen=True)
class _Exp:
    """Result of expanding one node: either a leaf or ordered child formulas.
    Any binding performed by the expansion is already on the trail; children
    all start from the post-expansion state."""

    tag: str
    leaf: Leaf | None = None
    children: tuple[Formula, ...] = ()


class _Search:
    def __init__(self, program: ProgramUnit, config: EngineConfig, initial: Valuation):
        self.program = program
        self.cfg = config
        self.arrays = Arrays(program.arrays)
        self.fresh = FreshNames(program.fresh_base)
        self.steps = 0
        self.free = frozenset(program.free_var_names())
        self.state = _State(initial)

    # -- top-level enumeration ---------------------------------------------

    def run(self, f: Formula) -> Iterator[Leaf]:
        """All leaves of the tree for f under the current state, in
        left-to-right order.  On budget exhaustion a step-budget error leaf
        ends the sequence."""
        stack = [(f, self.state.mark())]
        while stack:
            f2, mark = stack.pop()
            self.state.undo_to(mark)
            try:
                exp = self.expand(f2)
            except _BudgetExceeded:
                yield Error(STEP_BUDGET)
                return
            if exp.leaf is not None:
                yield self._emit(exp.leaf)
            else:
                after = self.state.mark()
                stack.extend((g, after) for g in reversed(exp.children))

    def _emit(self, leaf: Leaf) -> Leaf:
        if isinstance(leaf, Success) and not self.cfg.report_internal_bindings:
            kept = {
                k: v for k, v in leaf.valuation.scalars.items() if k in self.free
            }
            return Success(Valuation(kept, leaf.valuation.cells))
        return leaf

    # -- single-node expansion ----------------------------------------------

    def expand(self, f: Formula) -> _Exp:
        self.steps += 1
        if self.cfg.max_steps is not None and self.steps > self.cfg.max_steps:
            raise _BudgetExceeded()
        if isinstance(f, Empty):
            return _Exp("empty", leaf=Success(self.state.snapshot()))
        assert isinstance(f, Cons)
        head, tail = f.head, f.tail
        if isinstance(head, Call):
            return self._expand_call(head, tail)
        if isinstance(head, Atom):
            return self._expand_atom(head, tail)
        if isinstance(head, Or):
            return _Exp(
                "disjunction",
                children=(concat(head.left, tail), concat(head.right, tail)),
            )
        if isinstance(head, And):
            return _Exp(
                "conjunction",
                children=(concat(head.left, concat(head.right, tail)),),
            )
        if isinstance(head, Not):
            return self._expand_not(head, tail)
        if isinstance(head, Implies):
            return self._expand_implies(head, tail)
        if isinstance(head, Exists):
            name = self.fresh.fresh(head.var)
            body = subst_formula(head.body, {head.var: Var(name, head.sort)})
            return _Exp("exists", children=(concat(body, tail),))
        if isinstance(head, (ExistsBounded, ForallBounded)):
            return self._expand_bounded(head, tail)
        if isinstance(head, Forall):
            raise ValueError("unbounded FORALL reached the engine; normalize first")
        raise TypeError(f"unknown head {head!r}")

    def _expand_atom(self, head: Atom, tail: Formula) -> _Exp:
        cls = classify_atom(head, self.state, self.arrays)
        if isinstance(cls, ClosedTrue):
            return _Exp("atom", children=(tail,))
        if isinstance(cls, ClosedFalse):
            return _Exp("atom", leaf=FAIL)
        if isinstance(cls, Assignment):
            if isinstance(cls.target, str):
                self.state.push_scalar(cls.target, cls.value)
            else:
                self.state.push_cell(cls.target, cls.value)
            return _Exp("atom", children=(tail,))
        assert isinstance(cls, NotEvaluable)
        cause = EVALUATION_FAULT if cls.fault is not None else ATOM_NOT_EVALUABLE
        return _Exp("atom", leaf=Error(cause))

    def _expand_call(self, head: Call, tail: Formula) -> _Exp:
        proc = self.program.procedure(head.name)
        if proc is None:
            raise ValueError(f"unknown procedure {head.name!r}")
        mapping = {name: arg for (name, _), arg in zip(proc.params, head.args)}
        unfolded = subst_formula(proc.body, mapping)
        return _Exp("procedure-unfold", children=(concat(unfolded, tail),))

    def _expand_not(self, head: Not, tail: Formula) -> _Exp:
        closed = self.formula_closed(head.body)
        if self.cfg.negation is NegationMode.STRICT and not closed:
            return _Exp("negation", leaf=Error(NEGAND_UNDETERMINED))
        tag = "negation" if closed else "liberal-negation"
        status, witness = self.subtree_status(head.body)
        if status is TreeStatus.FAILED:
            return _Exp(tag, children=(tail,))
        if status is TreeStatus.SUCCESSFUL:
            if closed or self._witness_clean(head.body, witness):
                return _Exp(tag, leaf=FAIL)
            return _Exp(tag, leaf=Error(NEGAND_UNDETERMINED))
        return _Exp(tag, leaf=Error(NEGAND_UNDETERMINED))

    def _expand_implies(self, head: Implies, tail: Formula) -> _Exp:
        mode = self.cfg.implication
        if mode is ImplicationMode.STRICT:
            return self._implies_strict(head, tail)
        neg_branch = conj(Not(head.antecedent))
        if mode is ImplicationMode.NEG_OR:
            rewritten = Or(neg_branch, head.consequent)
        elif mode is ImplicationMode.GUARDED:
            rewritten = Or(neg_branch, concat(head.antecedent, head.consequent))
        else:  # COMBINED
            rewritten = Or(
                neg_branch,
                conj(Or(head.consequent, concat(head.antecedent, head.consequent))),
            )
        return _Exp("implication-rewrite", children=(Cons(rewritten, tail),))

    def _implies_strict(self, head: Implies, tail: Formula) -> _Exp:
        if self.cfg.pedantic and not self.formula_closed(head.antecedent):
            return _Exp("implication", leaf=Error(ANTECEDENT_UNDETERMINED))
        status, witness = self.subtree_status(head.antecedent)
        if status is TreeStatus.FAILED:
            return _Exp("implication", children=(tail,))
        if status is TreeStatus.SUCCESSFUL:
            if self.cfg.pedantic or self._witness_clean(head.antecedent, witness):
                return _Exp("implication", children=(concat(head.consequent, tail),))
            return _Exp("implication", leaf=Error(ANTECEDENT_UNDETERMINED))
        return _Exp("implication", leaf=Error(ANTECEDENT_UNDETERMINED))

    def _expand_bounded(self, head: ExistsBounded | ForallBounded, tail: Formula) -> _Exp:
        exists = isinstance(head, ExistsBounded)
        tag = "bounded-exists" if exists else "bounded-forall"
        try:
            lo = try_eval_term(head.lo, self.state, self.arrays)
            hi = try_eval_term(head.hi, self.state, self.arrays)
        except EvalFault:
            return _Exp(tag, leaf=Error(EVALUATION_FAULT))
        if lo is None or hi is None:
            return _Exp(tag, leaf=Error(UNBOUNDED_RANGE))
        if lo > hi:
            if exists:
                return _Exp(tag, leaf=FAIL)
            return _Exp(tag, children=(tail,))
        name = self.fresh.fresh(head.var)
        body = subst_formula(head.body, {head.var: Var(name)})
        self.state.push_scalar(name, lo)
        rest = type(head)(head.var, IntConst(lo + 1), IntConst(hi), head.body)
        if exists:
            child = Cons(Or(body, conj(rest)), tail)
        else:
            child = concat(body, Cons(rest, tail))
        return _Exp(tag, children=(child,))

    # -- sub-tree status (negands, antecedents) -----------------------------

    def subtree_status(self, f: Formula) -> tuple[TreeStatus, Valuation | None]:
        """Explore the tree of f under the current state: stop at the first
        success leaf (its full valuation is the witness); otherwise exhaust
        the tree so FAILED really means only-failure-leaves.  The state is
        restored before returning."""
        base = self.state.mark()
        saw_error = False
        stack = [(f, base)]
        try:
            while stack:
                f2, mark = stack.pop()
                self.state.undo_to(mark)
                exp = self.expand(f2)  # budget propagates to the caller
                if exp.leaf is not None:
                    if isinstance(exp.leaf, Success):
                        return TreeStatus.SUCCESSFUL, exp.leaf.valuation
                    if isinstance(exp.leaf, Error):
                        saw_error = True
                else:
                    after = self.state.mark()
                    stack.extend((g, after) for g in reversed(exp.children))
            return (
                TreeStatus.UNDETERMINED if saw_error else TreeStatus.FAILED
            ), None
        finally:
            self.state.undo_to(base)

    def _witness_clean(self, operand: Formula, witness: Valuation | None) -> bool:
        """A success of the operand refutes its negation only when the witness
        pinned nothing that is still free in the operand under the current
        state: no new array-cell bindings and no new binding of a free
        variable."""
        if witness is None:
            return False
        if len(witness.cells) != len(self.state.cells):
            return False
        free = None
        for name in witness.scalars:
            if name in self.state.scalars:
                continue
            if free is None:
                free = set(free_vars(operand))
            if name in free:
                return False
        return True

    # -- formula closedness --------------------------------------------------

    def formula_closed(self, f: Formula) -> bool:
        """Every free variable has a value and every array reference denotes a
        bound cell.  References whose indices depend on quantified variables
        cannot be resolved statically and count as not closed."""
        return self._closed_formula(f, frozenset())

    def _closed_formula(self, f: Formula, bound: frozenset[str]) -> bool:
        for head in f:
            if not self._closed_head(head, bound):
                return False
        return True

    def _closed_head(self, h: Head, bound: frozenset[str]) -> bool:
        if isinstance(h, Call):
            proc = self.program.procedure(h.name)
            if proc is None:
                return False
            if not all(self._closed_term(t, bound) for t in h.args):
                return False
            mapping = {name: arg for (name, _), arg in zip(proc.params, h.args)}
            return self._closed_formula(subst_formula(proc.body, mapping), bound)
        if isinstance(h, Atom):
            return all(self._closed_term(t, bound) for t in atom_terms(h))
        if isinstance(h, Or):
            return self._closed_formula(h.left, bound) and self._closed_formula(
                h.right, bound
            )
        if isinstance(h, And):
            return self._closed_formula(h.left, bound) and self._closed_formula(
                h.right, bound
            )
        if isinstance(h, Implies):
            return self._closed_formula(h.antecedent, bound) and self._closed_formula(
                h.consequent, bound
            )
        if isinstance(h, Not):
            return self._closed_formula(h.body, bound)
        if isinstance(h, (Exists, Forall)):
            return self._closed_formula(h.body, bound | {h.var})
        if isinstance(h, (ExistsBounded, ForallBounded)):
            return (
                self._closed_term(h.lo, bound)
                and self._closed_term(h.hi, bound)
                and self._closed_formula(h.body, bound | {h.var})
            )
        raise TypeError(f"unknown head {h!r}")

    def _closed_term(self, t: Term, bound: frozenset[str]) -> bool:
        if isinstance(t, Var):
            return t.name in self.state.scalars or t.name in bound
        if isinstance(t, App):
            return all(self._closed_term(x, bound) for x in t.args)
        if isinstance(t, ArrayRef):
            for i in t.indices:
                for v in _term_vars_iter(i):
                    if v not in self.state.scalars:
                        return False
            try:
                cell_idx = tuple(
                    try_eval_term(i, self.state, self.arrays) for i in t.indices
                )
            except EvalFault:
                return False
            decl = self.arrays.decl(t.array)
            if not decl.in_range(cell_idx):
                return False
            return (t.array, cell_idx) in self.state.cells
        return True  # constants


def _term_vars_iter(t: Term) -> Iterator[str]:
    if isinstance(t, Var):
        yield t.name
    elif isinstance(t, App):
        for x in t.args:
            yield from _term_vars_iter(x)
    elif isinstance(t, ArrayRef):
        for x in t.indices:
            yield from _term_vars_iter(x)


# ---------------------------------------------------------------------------
# Public entry points


def _check_initial(program: ProgramUnit, initial: Valuation) -> None:
    free = dict(program.free_vars)
    for name, value in initial.scalars.items():
        if name not in free:
            raise ValueError(f"{name!r} is not a free variable of the query")
        want = free[name]
        if (type(value) is bool) != (want is Scalar.BOOL):
            raise ValueError(f"value for {name!r} must have sort {want}")
    for (array, idx), value in initial.cells.items():
        decl = program.array(array)
        if decl is None:
            raise ValueError(f"unknown array {array!r}")
        if not decl.in_range(idx):
            raise ValueError(f"index {list(idx)} out of range for array {array!r}")
        if (type(value) is bool) != (decl.element is Scalar.BOOL):
            raise ValueError(f"cells of {array!r} hold {decl.element} values")


def _require_normalized(program: ProgramUnit) -> None:
    if not program.normalized:
        raise ValueError("program must be normalized before execution")


def iter_leaves(
    program: ProgramUnit,
    initial: Valuation = EMPTY_VALUATION,
    config: EngineConfig = EngineConfig(),
) -> Iterator[Leaf]:
    """Lazy left-to-right leaf sequence of the query's computation tree."""
    _require_normalized(program)
    _check_initial(program, initial)
    search = _Search(program, config, initial)
    yield from search.run(program.query)


def solve(
    program: ProgramUnit,
    initial: Valuation = EMPTY_VALUATION,
    config: EngineConfig = EngineConfig(),
) -> SolveResult:
    """Explore the tree (respecting solution/step limits) and classify it:
    SUCCESSFUL with the success leaves found, FAILED when every leaf failed,
    UNDETERMINED otherwise."""
    _require_normalized(program)
    _check_initial(program, initial)
    search = _Search(program, config, initial)
    leaves: list[Leaf] = []
    successes = 0
    for leaf in search.run(program.query):
        leaves.append(leaf)
        if isinstance(leaf, Success):
            successes += 1
            if config.solution_limit is not None and successes >= config.solution_limit:
                break
    return SolveResult(tuple(leaves), status_of(leaves), search.steps)


def eval_subtree_status(
    program: ProgramUnit,
    f: Formula,
    a: Valuation = EMPTY_VALUATION,
    config: EngineConfig = EngineConfig(),
) -> tuple[TreeStatus, Valuation | None]:
    """Status of the tree of (f, a): SUCCESSFUL with the first success leaf as
    witness, FAILED only after exhaustive exploration, else UNDETERMINED."""
    _require_normalized(program)
    search = _Search(program, config, a)
    try:
        return search.subtree_status(f)
    except _BudgetExceeded:
        return TreeStatus.UNDETERMINED, None


def trace(
    program: ProgramUnit,
    initial: Valuation = EMPTY_VALUATION,
    config: EngineConfig = EngineConfig(),
) -> TraceNode:
    """Materialize the computation tree with fired-rule tags.  The in-order
    leaf sequence equals the one solve() emits under the same config."""
    _require_normalized(program)
    _check_initial(program, initial)
    search = _Search(program, config, initial)
    root: TraceNode | None = None
    successes = 0
    stack: list[tuple[Formula, int, TraceNode | None]] = [
        (program.query, search.state.mark(), None)
    ]
    while stack:
        f, mark, parent = stack.pop()
        search.state.undo_to(mark)
        snapshot = search.state.snapshot()
        try:
            exp = search.expand(f)
        except _BudgetExceeded:
            cut = TraceNode("error", leaf=Error(STEP_BUDGET))
            if parent is None:
                return cut
            parent.children.append(cut)
            return root if root is not None else cut
        node = TraceNode(exp.tag, formula=f, valuation=snapshot)
        if parent is None:
            root = node
        else:
            parent.children.append(node)
        if exp.leaf is not None:
            leaf = search._emit(exp.leaf)
            child = TraceNode(
                _leaf_tag(leaf),
                valuation=leaf.valuation if isinstance(leaf, Success) else None,
                leaf=leaf,
            )
            node.children.append(child)
            if isinstance(leaf, Success):
                successes += 1
                if (
                    config.solution_limit is not None
                    and successes >= config.solution_limit
                ):
                    break
        else:
            after = search.state.mark()
            stack.extend((g, after, node) for g in reversed(exp.children))
    assert root is not None
    return root


def _leaf_tag(leaf: Leaf) -> str:
    if isinstance(leaf, Success):
        return "success"
    if isinstance(leaf, Fail):
        return "fail"
    return "error"
