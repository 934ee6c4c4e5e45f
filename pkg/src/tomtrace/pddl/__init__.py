"""PDDL subset: tokenizer, parser, canonical printer and the bundled domain."""

from functools import lru_cache
from importlib import resources

from .lexer import LexError, PddlError, Token, TokenKind, tokenize
from .model import (
    ActionSchema,
    AddAtom,
    And,
    Atom,
    Conjunction,
    DelAtom,
    DomainDef,
    Effect,
    Equality,
    Exists,
    Forall,
    ForallWhen,
    Formula,
    GroundAction,
    Not,
    Or,
    PredicateDecl,
    ProblemDef,
    SymbolTable,
    TypeTree,
    free_vars,
)
from .parser import ParseError, parse_domain, parse_effect, parse_formula, parse_plan, parse_problem
from .printer import format_atom, format_effect, format_formula, print_canonical

CANONICAL_DOMAIN_FILE = "tom_domain.pddl"


def canonical_domain_text() -> str:
    return resources.files("tomtrace.data").joinpath(CANONICAL_DOMAIN_FILE).read_text()


@lru_cache(maxsize=1)
def canonical_domain() -> DomainDef:
    return parse_domain(canonical_domain_text())


__all__ = [
    "ActionSchema",
    "AddAtom",
    "And",
    "Atom",
    "Conjunction",
    "DelAtom",
    "DomainDef",
    "Effect",
    "Equality",
    "Exists",
    "Forall",
    "ForallWhen",
    "Formula",
    "GroundAction",
    "LexError",
    "Not",
    "Or",
    "ParseError",
    "PddlError",
    "PredicateDecl",
    "ProblemDef",
    "SymbolTable",
    "Token",
    "TokenKind",
    "TypeTree",
    "canonical_domain",
    "canonical_domain_text",
    "format_atom",
    "format_effect",
    "format_formula",
    "free_vars",
    "parse_domain",
    "parse_effect",
    "parse_formula",
    "parse_plan",
    "parse_problem",
    "print_canonical",
    "tokenize",
]
