import pytest

from helpers import leaf_kinds, static_step_bound, success_sets
from fap.engine import (
    ATOM_NOT_EVALUABLE,
    EngineConfig,
    Error,
    NegationMode,
    STEP_BUDGET,
    Success,
    TreeStatus,
    UNBOUNDED_RANGE,
    eval_subtree_status,
    iter_leaves,
    solve,
    trace,
)
from fap.formulas import EMPTY, ProgramUnit
from fap.normalize import load, load_query, normalize_program
from fap.oracle import GeneratorConfig, generate
from fap.values import EMPTY_VALUATION, Valuation

LIBERAL = EngineConfig(negation=NegationMode.LIBERAL)


def statuses(src, config=EngineConfig(), initial=EMPTY_VALUATION):
    return solve(load_query(src), initial, config)


def test_formula1_leaf_sequence():
    r = statuses("(x = 2 OR x = 3) AND (y = x + 1 OR 2 = y) AND 2 * x = 3 * y")
    assert leaf_kinds(r.leaves) == ["Fail", "Fail", "Fail", "Success"]
    assert r.status is TreeStatus.SUCCESSFUL
    assert r.solutions[0] == Valuation({"x": 3, "y": 2})


def test_conjunction_order_sensitivity():
    ok = statuses("x = 0 AND x < 1")
    assert leaf_kinds(ok.leaves) == ["Success"]
    assert ok.solutions[0] == Valuation({"x": 0})
    bad = statuses("x < 1 AND x = 0")
    assert leaf_kinds(bad.leaves) == ["Error"]
    assert bad.leaves[0].cause == ATOM_NOT_EVALUABLE
    assert bad.status is TreeStatus.UNDETERMINED


def test_empty_query_succeeds_with_initial_valuation():
    program = ProgramUnit(query=EMPTY, normalized=True)
    r = solve(program)
    assert r.leaves == (Success(EMPTY_VALUATION),)


def test_initial_valuation_is_reported_back():
    p = load_query("x = 3")
    r = solve(p, Valuation({"x": 3}))
    assert r.solutions[0] == Valuation({"x": 3})


def test_exploration_backtracks_past_error_leaves():
    r = statuses("(x < 1 OR x = 2) AND x < 3")
    assert leaf_kinds(r.leaves) == ["Error", "Success"]
    assert r.status is TreeStatus.SUCCESSFUL


def test_formula1_with_full_witness():
    p = load_query("(x = 2 OR x = 3) AND (y = x + 1 OR 2 = y) AND 2 * x = 3 * y")
    r = solve(p, Valuation({"x": 3, "y": 2}))
    assert r.status is TreeStatus.SUCCESSFUL
    assert r.solutions[0] == Valuation({"x": 3, "y": 2})


def test_formula1_with_wrong_partial_binding_fails():
    p = load_query("(x = 2 OR x = 3) AND (y = x + 1 OR 2 = y) AND 2 * x = 3 * y")
    r = solve(p, Valuation({"x": 2}))
    assert r.status is TreeStatus.FAILED
    assert leaf_kinds(r.leaves) == ["Fail", "Fail", "Fail"]


def test_initial_binding_must_name_a_free_variable():
    p = load_query("x = 1")
    with pytest.raises(ValueError):
        solve(p, Valuation({"q": 1}))


def test_unnormalized_program_is_rejected():
    from fap.parser import parse_query

    with pytest.raises(ValueError):
        solve(parse_query("x = 1"))


# -- eval_subtree_status ------------------------------------------------------

def test_subtree_failed():
    p = load_query("0 = 1 AND x = y")
    status, witness = eval_subtree_status(p, p.query)
    assert status is TreeStatus.FAILED and witness is None


def test_subtree_successful_short_circuits_before_error_branch():
    p = load_query("0 = 0 OR x = y")
    status, witness = eval_subtree_status(p, p.query)
    assert status is TreeStatus.SUCCESSFUL
    assert witness == EMPTY_VALUATION


def test_subtree_undetermined():
    p = load_query("x = y")
    status, witness = eval_subtree_status(p, p.query)
    assert status is TreeStatus.UNDETERMINED and witness is None


def test_subtree_budget_exhaustion_is_undetermined():
    p = load_query("SOME k := 1 TO 1000 DO k = 0 END")
    status, witness = eval_subtree_status(p, p.query, config=EngineConfig(max_steps=20))
    assert status is TreeStatus.UNDETERMINED and witness is None


def test_bool_quantifier():
    r = statuses("EXISTS b : bool . b = TRUE AND x = 1")
    assert r.status is TreeStatus.SUCCESSFUL
    assert r.solutions[0] == Valuation({"x": 1})


def test_bool_procedure_param():
    from fap.normalize import load

    p = load("def pick(b : bool, n) := (b = TRUE AND n = 1) OR (b = FALSE AND n = 0);\n"
             "query pick(TRUE, m);")
    r = solve(p)
    assert r.solutions[0] == Valuation({"m": 1})


# -- procedures ---------------------------------------------------------------

def test_procedure_unfold_binds_through_actuals():
    r = solve(load("def p(x) := x = 3;\nquery p(y);"))
    assert r.solutions[0] == Valuation({"y": 3})


def test_procedure_call_with_closed_actual_tests():
    assert solve(load("def p(x) := x = 3;\nquery p(3);")).status is TreeStatus.SUCCESSFUL
    assert solve(load("def p(x) := x = 3;\nquery p(4);")).status is TreeStatus.FAILED


def test_procedure_with_non_evaluable_body():
    r = solve(load("def p(x) := x < 1;\nquery p(y);"))
    assert r.status is TreeStatus.UNDETERMINED
    assert r.error_causes == (ATOM_NOT_EVALUABLE,)


def test_procedure_local_quantifier_is_fresh_per_unfold():
    src = (
        "def p(x) := EXISTS t . t = x AND t < 10;\n"
        "query p(1) AND p(2) AND y = 5;"
    )
    r = solve(load(src))
    assert r.status is TreeStatus.SUCCESSFUL
    assert r.solutions[0] == Valuation({"y": 5})


def test_nested_procedure_calls():
    src = (
        "def inc(a, b) := b = a + 1;\n"
        "def twice(a, b) := EXISTS t . inc(a, t) AND inc(t, b);\n"
        "query twice(3, r);"
    )
    r = solve(load(src))
    assert r.solutions[0] == Valuation({"r": 5})


# -- budget and limits ---------------------------------------------------------

def test_step_budget_yields_error_leaf_and_undetermined():
    src = "SOME k := 1 TO 1000 DO k = 0 END"
    r = statuses(src, EngineConfig(max_steps=50))
    assert isinstance(r.leaves[-1], Error)
    assert r.leaves[-1].cause == STEP_BUDGET
    assert r.status is TreeStatus.UNDETERMINED


def test_budget_after_success_is_still_successful():
    src = "(x = 1 OR x = 2) AND SOME k := 1 TO 1000 DO k = x END"
    r = statuses(src, EngineConfig(max_steps=40, solution_limit=None))
    assert any(isinstance(l, Success) for l in r.leaves)
    assert r.status is TreeStatus.SUCCESSFUL


def test_solution_limit_stops_enumeration():
    src = "x = 1 OR x = 2 OR x = 3"
    r = statuses(src, EngineConfig(solution_limit=2))
    assert leaf_kinds(r.leaves) == ["Success", "Success"]
    r = statuses(src)  # engine default explores everything
    assert leaf_kinds(r.leaves) == ["Success", "Success", "Success"]


def test_lazy_leaf_iteration():
    p = load_query("x = 1 OR x = 2")
    it = iter_leaves(p)
    first = next(it)
    assert first == Success(Valuation({"x": 1}))


# -- internal bindings ----------------------------------------------------------

def test_existential_bindings_are_stripped_by_default():
    r = statuses("SOME x := 1 TO 3 DO x = 2 END")
    assert leaf_kinds(r.leaves) == ["Fail", "Success", "Fail", "Fail"]
    assert r.solutions[0] == EMPTY_VALUATION


def test_existential_bindings_reported_on_request():
    r = statuses(
        "SOME x := 1 TO 3 DO x = 2 END",
        EngineConfig(report_internal_bindings=True),
    )
    sol = r.solutions[0]
    assert sorted(sol.scalars.values()) == [1, 2]  # both iterations bound
    assert all("$" in name for name in sol.scalars)


def test_unbounded_exists_grounded_by_body():
    r = statuses("EXISTS v . v = 41 AND x = v + 1")
    assert r.solutions[0] == Valuation({"x": 42})


def test_unbounded_exists_without_grounding_errors():
    r = statuses("EXISTS v . v < 1")
    assert r.status is TreeStatus.UNDETERMINED


# -- arrays through the engine ---------------------------------------------------

def test_array_assignment_and_test():
    src = "array a[1..3] : int;\nquery a[1] = 5 AND a[1] = 5 AND a[2] = a[1] + 1;"
    r = solve(load(src))
    assert r.status is TreeStatus.SUCCESSFUL
    assert r.solutions[0].cells == {("a", (1,)): 5, ("a", (2,)): 6}


def test_array_out_of_range_is_an_error_leaf():
    src = "array a[1..3] : int;\nquery a[4] = 1;"
    r = solve(load(src))
    assert r.status is TreeStatus.UNDETERMINED
    assert r.error_causes == ("evaluation-fault",)


def test_array_cells_in_initial_valuation():
    src = "array a[1..3] : int;\nquery a[2] = 7;"
    p = load(src)
    r = solve(p, Valuation({}, {("a", (2,)): 7}))
    assert r.status is TreeStatus.SUCCESSFUL
    r = solve(p, Valuation({}, {("a", (2,)): 8}))
    assert r.status is TreeStatus.FAILED


def test_initial_cell_out_of_range_rejected():
    p = load("array a[1..3] : int;\nquery a[2] = 7;")
    with pytest.raises(ValueError):
        solve(p, Valuation({}, {("a", (9,)): 7}))


def test_division_fault_becomes_error_leaf():
    r = statuses("x = 1 div 0")
    assert r.error_causes == ("evaluation-fault",)


def test_unbounded_range_cause():
    r = statuses("SOME k := y TO 3 DO k = k END")
    assert r.error_causes == (UNBOUNDED_RANGE,)


# -- quantified engine properties ------------------------------------------------

def _successes_with_internals(pu, config):
    cfg = EngineConfig(
        negation=config.negation,
        implication=config.implication,
        report_internal_bindings=True,
    )
    return [l for l in solve(pu, EMPTY_VALUATION, cfg).leaves if isinstance(l, Success)]


def test_success_valuations_extend_initial_and_name_only_free_or_bound_vars():
    for seed in range(300):
        pu = normalize_program(generate(GeneratorConfig(seed=seed)))
        free = set(pu.free_var_names())
        for leaf in _successes_with_internals(pu, EngineConfig()):
            for name in leaf.valuation.scalars:
                assert name in free or "$" in name


def test_success_valuations_extend_nonempty_initial():
    pu = load_query("(x = 2 OR y = 1) AND z = x")
    initial = Valuation({"x": 2})
    for leaf in solve(pu, initial).leaves:
        if isinstance(leaf, Success):
            assert leaf.valuation.extends(initial)


def test_step_counter_never_exceeds_static_bound():
    for seed in range(300):
        pu = normalize_program(generate(GeneratorConfig(seed=seed)))
        r = solve(pu)
        assert r.steps <= static_step_bound(pu), f"seed {seed}"


def test_disjunction_commutes_on_success_sets():
    from fap.formulas import Cons, EMPTY, Or

    for seed in range(400):
        a = generate(GeneratorConfig(seed=2 * seed, allow_procedures=False))
        b = generate(GeneratorConfig(seed=2 * seed + 1, allow_procedures=False))
        ab = normalize_program(ProgramUnit(query=Cons(Or(a.query, b.query), EMPTY)))
        ba = normalize_program(ProgramUnit(query=Cons(Or(b.query, a.query), EMPTY)))
        ra, rb = solve(ab), solve(ba)
        assert success_sets(ra.leaves) == success_sets(rb.leaves)
        assert (ra.status is TreeStatus.FAILED) == (rb.status is TreeStatus.FAILED)


def test_liberal_negation_only_adds_successes():
    for seed in range(400):
        pu = normalize_program(generate(GeneratorConfig(seed=seed)))
        strict = solve(pu)
        liberal = solve(pu, config=LIBERAL)
        assert success_sets(strict.leaves) <= success_sets(liberal.leaves)


def test_leaf_order_is_deterministic():
    for seed in range(60):
        pu = normalize_program(generate(GeneratorConfig(seed=seed)))
        assert solve(pu).leaves == solve(pu).leaves


def test_trace_leaves_match_solve_leaves():
    configs = [
        EngineConfig(),
        EngineConfig(max_steps=25),
        EngineConfig(solution_limit=1),
        EngineConfig(negation=NegationMode.LIBERAL, max_steps=40, solution_limit=2),
    ]
    for seed in range(120):
        pu = normalize_program(generate(GeneratorConfig(seed=seed)))
        for config in configs:
            t = trace(pu, config=config)
            assert list(t.leaves()) == list(solve(pu, config=config).leaves)


def test_trace_shape_for_formula1():
    p = load_query("(x = 2 OR x = 3) AND (y = x + 1 OR 2 = y) AND 2 * x = 3 * y")
    t = trace(p)
    assert t.tag == "disjunction"
    assert len(t.children) == 2
    leaves = list(t.leaves())
    assert leaf_kinds(leaves) == ["Fail", "Fail", "Fail", "Success"]


def test_trace_of_empty_query_is_two_nodes():
    t = trace(ProgramUnit(query=EMPTY, normalized=True))
    assert t.node_count() == 2
    assert t.children[0].leaf == Success(EMPTY_VALUATION)


def test_trace_of_true_false_chain():
    t = trace(load_query("TRUE AND FALSE"))
    assert leaf_kinds(list(t.leaves())) == ["Fail"]
