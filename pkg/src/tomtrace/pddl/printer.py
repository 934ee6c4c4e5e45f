"""Deterministic canonical rendering of domains, problems and formulas."""

from __future__ import annotations

from collections.abc import Mapping

from .model import (
    ROOT_TYPE,
    TRUE,
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
    Not,
    Or,
    ProblemDef,
    TypedVars,
)

Binding = Mapping[str, str]
_EMPTY: dict[str, str] = {}


def format_atom(atom: Atom, binding: Binding = _EMPTY) -> str:
    terms = [binding.get(t, t) for t in atom.terms]
    return "(" + " ".join((atom.predicate, *terms)) + ")"


def format_typed(variables: TypedVars) -> str:
    return "(" + " ".join(f"{v} - {t}" for v, t in variables) + ")"


def _shadow(binding: Binding, variables: TypedVars) -> Binding:
    if not binding:
        return binding
    names = {v for v, _ in variables}
    return {k: v for k, v in binding.items() if k not in names}


def format_formula(f: Formula, binding: Binding = _EMPTY) -> str:
    """Render ``f`` with free variables replaced through ``binding``."""
    match f:
        case Atom():
            return format_atom(f, binding)
        case Equality(left=l, right=r):
            return f"(= {binding.get(l, l)} {binding.get(r, r)})"
        case Not(arg=a):
            return f"(not {format_formula(a, binding)})"
        case And(args=args):
            return "(" + " ".join(["and", *(format_formula(a, binding) for a in args)]) + ")"
        case Or(args=args):
            return "(" + " ".join(["or", *(format_formula(a, binding) for a in args)]) + ")"
        case Exists(variables=vs, body=b):
            return f"(exists {format_typed(vs)} {format_formula(b, _shadow(binding, vs))})"
        case Forall(variables=vs, body=b):
            return f"(forall {format_typed(vs)} {format_formula(b, _shadow(binding, vs))})"
    raise TypeError(f"not a formula: {f!r}")


def _effect_body(body: tuple[Effect, ...], binding: Binding, bare_when_ok: bool) -> str:
    # A single element prints bare unless re-parsing would fold it differently.
    if len(body) == 1:
        only = body[0]
        folds = isinstance(only, Conjunction) or (
            not bare_when_ok and isinstance(only, ForallWhen) and not only.variables
        )
        if not folds:
            return format_effect(only, binding)
    return "(" + " ".join(["and", *(format_effect(e, binding) for e in body)]) + ")"


def format_effect(e: Effect, binding: Binding = _EMPTY) -> str:
    match e:
        case AddAtom(atom=a):
            return format_atom(a, binding)
        case DelAtom(atom=a):
            return f"(not {format_atom(a, binding)})"
        case Conjunction(parts=parts):
            return "(" + " ".join(["and", *(format_effect(p, binding) for p in parts)]) + ")"
        case ForallWhen(variables=vs, condition=cond, body=body):
            inner_binding = _shadow(binding, vs)
            if vs and cond == TRUE:
                body_txt = _effect_body(body, inner_binding, bare_when_ok=False)
                return f"(forall {format_typed(vs)} {body_txt})"
            body_txt = _effect_body(body, inner_binding, bare_when_ok=True)
            when = f"(when {format_formula(cond, inner_binding)} {body_txt})"
            return f"(forall {format_typed(vs)} {when})" if vs else when
    raise TypeError(f"not an effect: {e!r}")


def print_domain(domain: DomainDef) -> str:
    lines = [f"(define (domain {domain.name})"]
    if domain.requirements:
        lines.append("  (:requirements " + " ".join(":" + r for r in domain.requirements) + ")")
    types = [f"    {t} - {domain.types.parents[t]}" for t in domain.types.declared()]
    lines.append("  (:types" + ("\n" + "\n".join(types) if types else "") + ")")
    preds = []
    for p in domain.predicates:
        params = " ".join(f"{v} - {t}" for v, t in p.parameters)
        preds.append(f"    ({p.name}{' ' + params if params else ''})")
    lines.append("  (:predicates" + ("\n" + "\n".join(preds) if preds else "") + ")")
    for a in domain.actions:
        lines.append(f"  (:action {a.name}")
        lines.append(f"    :parameters {format_typed(a.parameters)}")
        lines.append(f"    :precondition {format_formula(a.precondition)}")
        lines.append(f"    :effect {format_effect(a.effect)})")
    lines[-1] += ")"
    return "\n".join(lines) + "\n"


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def print_problem(problem: ProblemDef) -> str:
    lines = [f"(define (problem {problem.name})", f"  (:domain {problem.domain_name})"]
    objs = [
        f"    {name} - {typ}" if typ != ROOT_TYPE else f"    {name}"
        for name, typ in problem.objects.items()
    ]
    lines.append("  (:objects" + ("\n" + "\n".join(objs) if objs else "") + ")")
    atoms = sorted(format_atom(a) for a in problem.init)
    lines.append("  (:init" + ("\n" + "\n".join("    " + a for a in atoms) if atoms else "") + ")")
    if problem.utterance_texts:
        utts = [
            f"    ({u} {_quote(problem.utterance_texts[u])})"
            for u in problem.objects
            if u in problem.utterance_texts
        ]
        lines.append("  (:utterances\n" + "\n".join(utts) + ")")
    lines[-1] += ")"
    return "\n".join(lines) + "\n"


def print_canonical(definition: DomainDef | ProblemDef) -> str:
    if isinstance(definition, DomainDef):
        return print_domain(definition)
    if isinstance(definition, ProblemDef):
        return print_problem(definition)
    raise TypeError(f"cannot print {type(definition).__name__}")

