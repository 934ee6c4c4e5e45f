import threading

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import golden_dirs
from tomtrace.engine import random_scenario
from tomtrace.pddl import (
    And,
    Atom,
    Exists,
    ForallWhen,
    LexError,
    ParseError,
    PddlError,
    SymbolTable,
    TokenKind,
    TypeTree,
    canonical_domain,
    canonical_domain_text,
    parse_domain,
    parse_effect,
    parse_formula,
    parse_plan,
    parse_problem,
    print_canonical,
    tokenize,
)

MINI_PROBLEM = """
(define (problem p) (:domain tom)
  (:objects alice - agent kitchen - room)
  (:init (at alice kitchen)))
"""


def kinds(text):
    return [(t.kind, t.value) for t in tokenize(text)]


# -- tokenizer ---------------------------------------------------------------


def test_tokenize_atom_with_variables():
    assert kinds("(at ?a ?l)") == [
        (TokenKind.LPAREN, "("),
        (TokenKind.SYMBOL, "at"),
        (TokenKind.VARIABLE, "a"),
        (TokenKind.VARIABLE, "l"),
        (TokenKind.RPAREN, ")"),
    ]


def test_comment_runs_to_end_of_line():
    assert kinds("; note\n()") == [(TokenKind.LPAREN, "("), (TokenKind.RPAREN, ")")]


def test_tokens_carry_line_and_column():
    toks = tokenize("(seen\n ?x)")
    assert [(t.line, t.col) for t in toks] == [(1, 1), (1, 2), (2, 2), (2, 4)]


def test_input_is_case_folded_and_keywords_recognised():
    toks = tokenize("(:Action MOVE ?A)")
    assert [(t.kind, t.value) for t in toks[1:4]] == [
        (TokenKind.KEYWORD, "action"),
        (TokenKind.SYMBOL, "move"),
        (TokenKind.VARIABLE, "a"),
    ]


def test_string_literal_keeps_case_and_escapes():
    (tok,) = tokenize(r'"Say \"Hi\" \\ now"')
    assert tok.kind is TokenKind.STRING
    assert tok.value == 'Say "Hi" \\ now'


@pytest.mark.parametrize("text, line, col", [("(at #x)", 1, 5), ("()\n  {", 2, 3), ('"open', 1, 1)])
def test_lex_errors_report_position(text, line, col):
    with pytest.raises(LexError) as err:
        tokenize(text)
    assert (err.value.line, err.value.col) == (line, col)


# -- symbols and types ---------------------------------------------------------


def test_symbol_table_is_case_insensitive_and_stable():
    table = SymbolTable()
    first = table.intern("Kitchen")
    assert table.intern("KITCHEN") == first
    assert table.name(first) == "kitchen"
    assert table.intern("hall") != first


def test_symbol_table_concurrent_interning_gives_one_id_per_name():
    table = SymbolTable()
    names = [f"n{i}" for i in range(200)]
    results: list[list[int]] = []

    def work():
        results.append([table.intern(n) for n in names])

    threads = [threading.Thread(target=work) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert all(r == results[0] for r in results)
    assert len(set(results[0])) == 200


def test_builtin_type_tree():
    tree = TypeTree.builtin()
    for t in ("agent", "loc", "obj", "utterance", "room", "container"):
        assert tree.is_subtype(t, "object")
    assert tree.is_subtype("container", "loc")
    assert not tree.is_subtype("loc", "container")
    assert not tree.is_subtype("agent", "obj")


# -- domains -----------------------------------------------------------------


def test_canonical_domain_has_seven_actions(domain):
    assert sorted(a.name for a in domain.actions) == sorted(
        ["move", "open", "close", "grab", "drop", "ask", "tell"]
    )
    assert len(domain.predicates) == 7


def test_empty_domain_has_only_builtin_types():
    d = parse_domain("(define (domain d))")
    assert d.predicates == () and d.actions == ()
    assert set(d.types.parents) == {"agent", "loc", "obj", "utterance", "room", "container"}


def test_type_mismatch_names_predicate_and_expected_type():
    src = """(define (domain d)
      (:predicates (at ?a - agent ?r - room))
      (:action bad :parameters (?o - obj ?l - room) :precondition (at ?o ?l) :effect (and)))"""
    with pytest.raises(ParseError, match="type mismatch: at expects agent"):
        parse_domain(src)


def _domain_error(body: str) -> ParseError:
    with pytest.raises(ParseError) as err:
        parse_domain(f"(define (domain d)\n{body})")
    return err.value


@pytest.mark.parametrize(
    "body, message, symbol",
    [
        ("(:functions (f))", "unknown section :functions", ":functions"),
        ("(:predicates (p ?x)) (:action a :parameters () :precondition (p) :effect (and))", "arity", "p"),
        ("(:predicates (p ?x - widget))", "unknown type widget", "widget"),
        ("(:predicates (p ?x)) (:action a :parameters () :precondition (p ?y) :effect (and))", "unbound variable", "?y"),
        ("(:predicates (p) (p))", "duplicate predicate p", "p"),
        ("(:predicates (p)) (:action p :parameters () :precondition (and) :effect (and))", "collides", "p"),
    ],
)
def test_domain_errors_name_the_offending_symbol(body, message, symbol):
    err = _domain_error(body)
    assert message in str(err)
    assert err.symbol == symbol


def test_error_position_points_inside_the_offending_token():
    src = "(define (domain d)\n  (:predicates (p ?x - widget)))"
    with pytest.raises(PddlError) as err:
        parse_domain(src)
    e = err.value
    line = src.splitlines()[e.line - 1]
    assert line[e.col - 1 :].startswith("widget")


def test_type_cycle_rejected():
    with pytest.raises(ParseError, match="cyclic type hierarchy"):
        parse_domain("(define (domain d) (:types a - b b - a))")


def test_declared_types_extend_the_tree():
    d = parse_domain("(define (domain d) (:types shelf - container pet - agent))")
    assert d.types.is_subtype("shelf", "loc")
    assert d.types.is_subtype("pet", "agent")


def test_nested_forall_when_effect_parses(domain):
    open_action = domain.action("open")
    (outer,) = [p for p in open_action.effect.parts if isinstance(p, ForallWhen)]
    (inner,) = outer.body
    assert isinstance(inner, ForallWhen)
    assert inner.variables == (("?x", "agent"),)


# -- problems ----------------------------------------------------------------


def test_minimal_problem(domain):
    p = parse_problem(MINI_PROBLEM, domain)
    assert p.objects == {"alice": "agent", "kitchen": "room"}
    assert p.init == frozenset({Atom("at", ("alice", "kitchen"))})


@pytest.mark.parametrize(
    "objects, init, message",
    [
        ("alice - agent kitchen - room", "(not (at alice kitchen))", "negative literal in init"),
        ("alice - agent kitchen - room", "(in ball kitchen)", "ball"),
        ("alice - agent alice - agent kitchen - room", "(at alice kitchen)", "duplicate object alice"),
        ("alice - agent kitchen - room", "(at kitchen alice)", "type mismatch"),
    ],
)
def test_problem_errors(domain, objects, init, message):
    src = f"(define (problem p) (:domain tom) (:objects {objects}) (:init {init}))"
    with pytest.raises(ParseError, match=message):
        parse_problem(src, domain)


@pytest.mark.parametrize("missing", ["objects", "init"])
def test_problem_sections_are_mandatory(domain, missing):
    sections = {"objects": "(:objects alice - agent)", "init": "(:init)"}
    del sections[missing]
    with pytest.raises(ParseError, match=f"missing :{missing}"):
        parse_problem(f"(define (problem p) {' '.join(sections.values())})", domain)


def test_utterance_texts(domain):
    src = """(define (problem p) (:domain tom)
      (:objects alice - agent u1 - utterance kitchen - room)
      (:init (at alice kitchen))
      (:utterances (u1 "Hello, Bob!")))"""
    assert parse_problem(src, domain).utterance_texts == {"u1": "Hello, Bob!"}


def test_utterance_text_key_must_be_an_utterance(domain):
    src = """(define (problem p) (:objects alice - agent) (:init)
      (:utterances (alice "hi")))"""
    with pytest.raises(ParseError, match="not an utterance"):
        parse_problem(src, domain)


def test_goal_section_is_accepted_and_ignored(domain):
    src = MINI_PROBLEM.replace("(:init", "(:goal (at alice kitchen)) (:init")
    assert parse_problem(src, domain) == parse_problem(MINI_PROBLEM, domain)


def test_problem_input_case_is_folded(domain):
    p = parse_problem(MINI_PROBLEM.replace("alice", "Alice").replace("kitchen", "KITCHEN"), domain)
    assert p == parse_problem(MINI_PROBLEM, domain)


# -- formulas, effects, plans ------------------------------------------------


def test_parse_formula_with_exists(domain):
    f = parse_formula(
        "(exists (?c - container) (and (part-of ?c kitchen) (opened ?c)))",
        domain,
        objects={"kitchen": "room"},
    )
    assert isinstance(f, Exists)
    assert isinstance(f.body, And)


def test_parse_effect_when_without_forall(domain):
    e = parse_effect("(when (opened box) (seen alice ball))", domain,
                     objects={"box": "container", "alice": "agent", "ball": "obj"})
    assert isinstance(e, ForallWhen) and e.variables == ()


def test_parse_plan():
    plan = parse_plan("(move Mary kitchen bedroom)\n; comment\n(tell mary u1 kitchen)")
    assert [str(a) for a in plan] == ["(move mary kitchen bedroom)", "(tell mary u1 kitchen)"]


@pytest.mark.parametrize("text", ["(move mary", "(move (mary))", "()", "move"])
def test_malformed_plans(text):
    with pytest.raises(PddlError):
        parse_plan(text)


# -- printing ----------------------------------------------------------------


def test_canonical_domain_round_trips(domain):
    printed = print_canonical(domain)
    assert parse_domain(printed) == domain
    assert print_canonical(parse_domain(printed)) == printed


def test_printed_domain_is_lowercase_and_keeps_parameter_order():
    src = canonical_domain_text().upper().replace('"', "")
    printed = print_canonical(parse_domain(src))
    assert printed == printed.lower()
    assert "(?a - agent ?from - room ?to - room)" in printed


def test_printed_init_is_sorted(domain):
    src = """(define (problem p) (:domain tom)
      (:objects alice bob - agent kitchen - room)
      (:init (at bob kitchen) (at alice kitchen)))"""
    printed = print_canonical(parse_problem(src, domain))
    assert printed.index("(at alice kitchen)") < printed.index("(at bob kitchen)")


@pytest.mark.parametrize("scenario", golden_dirs(), ids=lambda p: p.name)
def test_golden_problems_round_trip(domain, scenario):
    parsed = parse_problem((scenario / "problem.pddl").read_text(), domain)
    assert parse_problem(print_canonical(parsed), domain) == parsed


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=2**32))
def test_random_problems_round_trip(seed):
    domain = canonical_domain()
    problem, _ = random_scenario(seed)
    text = print_canonical(problem)
    again = parse_problem(text, domain)
    assert again == problem
    assert print_canonical(again) == text


def test_parsing_is_deterministic():
    text = canonical_domain_text()
    assert parse_domain(text) == parse_domain(text)
