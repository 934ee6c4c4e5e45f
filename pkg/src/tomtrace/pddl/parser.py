"""Parser for the PDDL subset: domains, problems, standalone formulas and plans.

Every error is a :class:`ParseError` positioned at the offending token.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import Union

from .lexer import PddlError, Token, TokenKind, tokenize
from .model import (
    BUILTIN_TYPES,
    ROOT_TYPE,
    TRUE,
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
    TypedVars,
    TypeTree,
)


class ParseError(PddlError):
    pass


@dataclass
class SList:
    items: list[SNode]
    open: Token
    close: Token


SNode = Union[Token, SList]


def _err(message: str, at: SNode, symbol: str | None = None) -> ParseError:
    tok = at.open if isinstance(at, SList) else at
    if symbol is None and isinstance(at, Token):
        symbol = str(at)
    return ParseError(message, tok.line, tok.col, symbol)


def read_sexprs(tokens: Iterable[Token]) -> list[SNode]:
    stack: list[list[SNode]] = [[]]
    opens: list[Token] = []
    for tok in tokens:
        if tok.kind is TokenKind.LPAREN:
            stack.append([])
            opens.append(tok)
        elif tok.kind is TokenKind.RPAREN:
            if not opens:
                raise _err("unbalanced ')'", tok)
            items = stack.pop()
            stack[-1].append(SList(items, opens.pop(), tok))
        else:
            stack[-1].append(tok)
    if opens:
        raise _err("unclosed '('", opens[-1])
    return stack[0]


def _nodes(source: str | Sequence[Token]) -> list[SNode]:
    tokens = tokenize(source) if isinstance(source, str) else source
    return read_sexprs(tokens)


def _is_sym(node: SNode, value: str | None = None) -> bool:
    return (
        isinstance(node, Token)
        and node.kind is TokenKind.SYMBOL
        and (value is None or node.value == value)
    )


def _head(node: SNode) -> str | None:
    if isinstance(node, SList) and node.items and _is_sym(node.items[0]):
        return node.items[0].value  # type: ignore[union-attr]
    return None


def _expect_list(node: SNode, what: str) -> SList:
    if not isinstance(node, SList):
        raise _err(f"expected {what}", node)
    return node


def _expect_symbol(node: SNode, what: str) -> Token:
    if not _is_sym(node) or node.value in ("-", "="):  # type: ignore[union-attr]
        raise _err(f"expected {what}", node)
    return node  # type: ignore[return-value]


def _define(source: str | Sequence[Token], kind: str) -> tuple[SList, str]:
    nodes = _nodes(source)
    if not nodes:
        raise ParseError(f"empty input, expected ({kind} definition)", 1, 1)
    top = nodes[0]
    if len(nodes) > 1:
        raise _err("unexpected trailing input", nodes[1])
    if not isinstance(top, SList) or _head(top) != "define":
        raise _err("expected (define ...)", top)
    if len(top.items) < 2:
        raise _err(f"missing ({kind} <name>) header", top)
    header = _expect_list(top.items[1], f"({kind} <name>)")
    if _head(header) != kind or len(header.items) != 2:
        raise _err(f"expected ({kind} <name>)", header)
    name = _expect_symbol(header.items[1], f"{kind} name")
    return top, name.value


def _typed_list(items: Sequence[SNode], kind: TokenKind, what: str) -> list[tuple[Token, Token | None]]:
    """Parse ``a b - t c`` style lists into (name token, type token or None)."""
    out: list[tuple[Token, Token | None]] = []
    pending: list[Token] = []
    i = 0
    while i < len(items):
        node = items[i]
        if _is_sym(node, "-"):
            if not pending:
                raise _err(f"'-' without preceding {what}", node)
            if i + 1 >= len(items):
                raise _err("missing type after '-'", node)
            typ = items[i + 1]
            if isinstance(typ, SList):
                raise _err("only simple types are supported", typ)
            typ_tok = _expect_symbol(typ, "type name")
            out.extend((p, typ_tok) for p in pending)
            pending = []
            i += 2
            continue
        if not isinstance(node, Token) or node.kind is not kind or node.value == "=":
            raise _err(f"expected {what}", node)
        pending.append(node)
        i += 1
    out.extend((p, None) for p in pending)
    return out


class _Scope:
    """Name resolution and type checking while building formulas."""

    def __init__(
        self,
        types: TypeTree,
        predicates: dict[str, PredicateDecl],
        symbols: SymbolTable,
        variables: dict[str, str] | None = None,
        objects: dict[str, str] | None = None,
    ):
        self.types = types
        self.predicates = predicates
        self.symbols = symbols
        self.variables = dict(variables or {})
        self.objects = objects

    def bind(self, typed: TypedVars) -> _Scope:
        inner = _Scope(self.types, self.predicates, self.symbols, self.variables, self.objects)
        inner.variables.update(typed)
        return inner

    def typed_vars(self, node: SNode) -> TypedVars:
        lst = _expect_list(node, "typed variable list")
        seen: set[str] = set()
        out = []
        for tok, typ in _typed_list(lst.items, TokenKind.VARIABLE, "variable"):
            name = "?" + tok.value
            if name in seen:
                raise _err(f"duplicate variable {name}", tok)
            seen.add(name)
            out.append((name, self.type_name(typ)))
        return tuple(out)

    def type_name(self, tok: Token | None) -> str:
        if tok is None:
            return ROOT_TYPE
        if tok.value not in self.types:
            raise _err(f"unknown type {tok.value}", tok)
        self.symbols.intern(tok.value)
        return tok.value

    def term(self, node: SNode) -> tuple[str, str]:
        """Resolve a term to (term, type)."""
        if isinstance(node, Token) and node.kind is TokenKind.VARIABLE:
            name = "?" + node.value
            if name not in self.variables:
                raise _err(f"unbound variable {name}", node)
            return name, self.variables[name]
        if _is_sym(node) and node.value not in ("-", "="):  # type: ignore[union-attr]
            name = node.value  # type: ignore[union-attr]
            if self.objects is None:
                raise _err(f"unexpected constant {name}", node)
            if name not in self.objects:
                raise _err(f"undeclared object {name}", node)
            self.symbols.intern(name)
            return name, self.objects[name]
        raise _err("expected a variable or object name", node)

    def atom(self, node: SList, strict: bool = False) -> Atom:
        head = _expect_symbol(node.items[0], "predicate name")
        decl = self.predicates.get(head.value)
        if decl is None:
            raise _err(f"unknown predicate {head.value}", head)
        args = node.items[1:]
        if len(args) != decl.arity:
            raise _err(
                f"arity mismatch: {decl.name} takes {decl.arity} argument(s), got {len(args)}", head
            )
        terms = []
        for arg, slot in zip(args, decl.types):
            term, typ = self.term(arg)
            ok = self.types.is_subtype(typ, slot) if strict else self.types.compatible(typ, slot)
            if not ok:
                raise _err(
                    f"type mismatch: {decl.name} expects {slot}, got {term} - {typ}", arg
                )
            terms.append(term)
        self.symbols.intern(decl.name)
        return Atom(decl.name, tuple(terms))

    def formula(self, node: SNode) -> Formula:
        lst = _expect_list(node, "formula")
        if not lst.items:
            return TRUE
        head = _head(lst)
        if head is None:
            raise _err("expected a connective or predicate name", lst.items[0])
        args = lst.items[1:]
        if head == "and":
            return And(tuple(self.formula(a) for a in args))
        if head == "or":
            return Or(tuple(self.formula(a) for a in args))
        if head == "not":
            if len(args) != 1:
                raise _err("not takes exactly one argument", lst)
            return Not(self.formula(args[0]))
        if head in ("exists", "forall"):
            if len(args) != 2:
                raise _err(f"{head} takes a variable list and one body", lst)
            typed = self.typed_vars(args[0])
            body = self.bind(typed).formula(args[1])
            return Exists(typed, body) if head == "exists" else Forall(typed, body)
        if head == "=":
            if len(args) != 2:
                raise _err("= takes exactly two arguments", lst)
            (left, _), (right, _) = self.term(args[0]), self.term(args[1])
            return Equality(left, right)
        return self.atom(lst)

    def effect(self, node: SNode) -> Effect:
        lst = _expect_list(node, "effect")
        if not lst.items:
            return Conjunction(())
        head = _head(lst)
        if head is None:
            raise _err("expected an effect", lst.items[0])
        args = lst.items[1:]
        if head == "and":
            return Conjunction(tuple(self.effect(a) for a in args))
        if head == "not":
            if len(args) != 1:
                raise _err("not takes exactly one argument", lst)
            inner = _expect_list(args[0], "atom")
            if _head(inner) in (None, "=", "and", "or", "not", "forall", "exists", "when"):
                raise _err("only atoms can be deleted", inner)
            return DelAtom(self.atom(inner))
        if head == "forall":
            if len(args) != 2:
                raise _err("forall takes a variable list and one effect", lst)
            typed = self.typed_vars(args[0])
            inner_scope = self.bind(typed)
            body = args[1]
            if _head(body) == "when":
                cond, effs = inner_scope._when_parts(body)  # type: ignore[arg-type]
                return ForallWhen(typed, cond, effs)
            return ForallWhen(typed, TRUE, inner_scope._effect_list(body))
        if head == "when":
            cond, effs = self._when_parts(lst)
            return ForallWhen((), cond, effs)
        if head in ("or", "exists", "=", "imply"):
            raise _err(f"{head} is not allowed in effects", lst)
        return AddAtom(self.atom(lst))

    def _when_parts(self, node: SList) -> tuple[Formula, tuple[Effect, ...]]:
        if len(node.items) != 3:
            raise _err("when takes a condition and one effect", node)
        return self.formula(node.items[1]), self._effect_list(node.items[2])

    def _effect_list(self, node: SNode) -> tuple[Effect, ...]:
        if _head(node) == "and":
            return tuple(self.effect(a) for a in node.items[1:])  # type: ignore[union-attr]
        return (self.effect(node),)


# -- domains ----------------------------------------------------------------

_DOMAIN_SECTIONS = ("requirements", "types", "predicates", "action")


def _parse_types(entries: list[tuple[Token, Token | None]]) -> TypeTree:
    parents = dict(BUILTIN_TYPES)
    order = [t for t, _ in BUILTIN_TYPES]
    declared_at: dict[str, Token] = {}
    explicit: dict[str, str] = {}
    for tok, typ in entries:
        name = tok.value
        parent = typ.value if typ is not None else None
        if name == ROOT_TYPE:
            raise _err("cannot redeclare the root type object", tok)
        if name in dict(BUILTIN_TYPES):
            # a bare re-declaration keeps the built-in parent
            if parent is not None and parent != parents[name]:
                raise _err(
                    f"built-in type {name} must have parent {parents[name]}, got {parent}", tok
                )
            continue
        if parent is not None:
            if explicit.get(name, parent) != parent:
                raise _err(f"conflicting parents for type {name}", tok)
            explicit[name] = parent
        if name not in declared_at:
            declared_at[name] = tok
            order.append(name)
        parents[name] = explicit.get(name, ROOT_TYPE)
    for name, tok in declared_at.items():
        parent = parents[name]
        if parent != ROOT_TYPE and parent not in parents:
            raise _err(f"unknown type {parent}", tok)
        seen = {name}
        cur = parent
        while cur != ROOT_TYPE:
            if cur in seen:
                raise _err(f"cyclic type hierarchy at {name}", tok)
            seen.add(cur)
            cur = parents[cur]
    return TypeTree(parents, tuple(order))


def parse_domain(source: str | Sequence[Token]) -> DomainDef:
    top, name = _define(source, "domain")
    symbols = SymbolTable()
    symbols.intern(name)
    requirements: list[str] = []
    type_entries: list[tuple[Token, Token | None]] = []
    pred_nodes: list[SNode] = []
    action_nodes: list[SList] = []
    seen_sections: set[str] = set()

    for node in top.items[2:]:
        sec = _expect_list(node, "domain section")
        if not sec.items or not isinstance(sec.items[0], Token) or sec.items[0].kind is not TokenKind.KEYWORD:
            raise _err("expected a section keyword", sec)
        kw = sec.items[0]
        if kw.value not in _DOMAIN_SECTIONS:
            raise _err(f"unknown section :{kw.value}", kw)
        if kw.value != "action":
            if kw.value in seen_sections:
                raise _err(f"duplicate section :{kw.value}", kw)
            seen_sections.add(kw.value)
        if kw.value == "requirements":
            for r in sec.items[1:]:
                if not isinstance(r, Token) or r.kind is not TokenKind.KEYWORD:
                    raise _err("expected requirement flag", r)
                requirements.append(r.value)
        elif kw.value == "types":
            type_entries = _typed_list(sec.items[1:], TokenKind.SYMBOL, "type name")
        elif kw.value == "predicates":
            pred_nodes = sec.items[1:]
        else:
            action_nodes.append(sec)

    types = _parse_types(type_entries)
    for t in types.declared():
        symbols.intern(t)

    predicates: dict[str, PredicateDecl] = {}
    base = _Scope(types, predicates, symbols)
    for pnode in pred_nodes:
        plist = _expect_list(pnode, "predicate declaration")
        if not plist.items:
            raise _err("empty predicate declaration", plist)
        pname = _expect_symbol(plist.items[0], "predicate name")
        if pname.value in predicates:
            raise _err(f"duplicate predicate {pname.value}", pname)
        if pname.value in ("and", "or", "not", "exists", "forall", "when", "imply"):
            raise _err(f"reserved word {pname.value} used as predicate", pname)
        params = base.typed_vars(SList(plist.items[1:], plist.open, plist.close))
        symbols.intern(pname.value)
        predicates[pname.value] = PredicateDecl(pname.value, params)

    actions: list[ActionSchema] = []
    names: set[str] = set()
    for anode in action_nodes:
        action = _parse_action(anode, base)
        if action.name in names:
            raise _err(f"duplicate action {action.name}", anode.items[1])
        if action.name in predicates:
            raise _err(f"action {action.name} collides with a predicate", anode.items[1])
        names.add(action.name)
        actions.append(action)

    return DomainDef(
        name,
        types,
        tuple(predicates.values()),
        tuple(actions),
        tuple(requirements),
        symbols,
    )


def _parse_action(sec: SList, base: _Scope) -> ActionSchema:
    if len(sec.items) < 2:
        raise _err("missing action name", sec)
    name_tok = _expect_symbol(sec.items[1], "action name")
    fields: dict[str, SNode] = {}
    rest = sec.items[2:]
    if len(rest) % 2:
        raise _err("action fields must be :keyword value pairs", rest[-1])
    for key, value in zip(rest[::2], rest[1::2]):
        if not isinstance(key, Token) or key.kind is not TokenKind.KEYWORD:
            raise _err("expected :parameters, :precondition or :effect", key)
        if key.value not in ("parameters", "precondition", "effect"):
            raise _err(f"unknown action field :{key.value}", key)
        if key.value in fields:
            raise _err(f"duplicate field :{key.value}", key)
        fields[key.value] = value
    params: TypedVars = ()
    if "parameters" in fields:
        params = base.typed_vars(fields["parameters"])
    scope = base.bind(params)
    pre = scope.formula(fields["precondition"]) if "precondition" in fields else TRUE
    eff = scope.effect(fields["effect"]) if "effect" in fields else Conjunction(())
    base.symbols.intern(name_tok.value)
    return ActionSchema(name_tok.value, params, pre, eff)


# -- problems ---------------------------------------------------------------

_PROBLEM_SECTIONS = ("domain", "requirements", "objects", "init", "goal", "utterances")


def parse_problem(source: str | Sequence[Token], domain: DomainDef) -> ProblemDef:
    top, name = _define(source, "problem")
    symbols = domain.symbols
    domain_name = domain.name
    objects: dict[str, str] | None = None
    init_node: SList | None = None
    utter_node: SList | None = None
    seen: set[str] = set()

    for node in top.items[2:]:
        sec = _expect_list(node, "problem section")
        if not sec.items or not isinstance(sec.items[0], Token) or sec.items[0].kind is not TokenKind.KEYWORD:
            raise _err("expected a section keyword", sec)
        kw = sec.items[0]
        if kw.value not in _PROBLEM_SECTIONS:
            raise _err(f"unknown section :{kw.value}", kw)
        if kw.value in seen:
            raise _err(f"duplicate section :{kw.value}", kw)
        seen.add(kw.value)
        if kw.value == "domain":
            if len(sec.items) != 2:
                raise _err("expected (:domain <name>)", sec)
            domain_name = _expect_symbol(sec.items[1], "domain name").value
        elif kw.value == "objects":
            objects = {}
            for tok, typ in _typed_list(sec.items[1:], TokenKind.SYMBOL, "object name"):
                if tok.value in objects:
                    raise _err(f"duplicate object {tok.value}", tok)
                if typ is not None and typ.value not in domain.types:
                    raise _err(f"unknown type {typ.value}", typ)
                objects[tok.value] = typ.value if typ is not None else ROOT_TYPE
                symbols.intern(tok.value)
        elif kw.value == "init":
            init_node = sec
        elif kw.value == "utterances":
            utter_node = sec
        # requirements and goal carry nothing the engine uses

    if objects is None:
        raise _err("missing :objects section", top)
    if init_node is None:
        raise _err("missing :init section", top)

    predicates = {p.name: p for p in domain.predicates}
    scope = _Scope(domain.types, predicates, symbols, objects=objects)
    init: set[Atom] = set()
    for node in init_node.items[1:]:
        lst = _expect_list(node, "ground atom")
        head = _head(lst)
        if head == "not":
            raise _err("negative literal in init", lst)
        if head is None or head in ("=", "and", "or", "exists", "forall"):
            raise _err("expected a ground atom in init", lst)
        init.add(scope.atom(lst, strict=True))

    texts: dict[str, str] = {}
    if utter_node is not None:
        for node in utter_node.items[1:]:
            lst = _expect_list(node, "(utterance \"text\")")
            if len(lst.items) != 2:
                raise _err('expected (utterance "text")', lst)
            key = _expect_symbol(lst.items[0], "utterance object")
            if key.value not in objects:
                raise _err(f"undeclared object {key.value}", key)
            if not domain.types.is_subtype(objects[key.value], "utterance"):
                raise _err(f"{key.value} is not an utterance", key)
            text = lst.items[1]
            if not isinstance(text, Token) or text.kind is not TokenKind.STRING:
                raise _err("expected a string literal", text)
            if key.value in texts:
                raise _err(f"duplicate utterance text for {key.value}", key)
            texts[key.value] = text.value

    return ProblemDef(name, domain_name, objects, frozenset(init), texts)


# -- standalone helpers -----------------------------------------------------


def parse_formula(
    source: str | Sequence[Token],
    domain: DomainDef,
    variables: dict[str, str] | None = None,
    objects: dict[str, str] | None = None,
) -> Formula:
    """Parse one formula against ``domain``; constants resolve through ``objects``."""
    nodes = _nodes(source)
    if len(nodes) != 1:
        raise ParseError("expected exactly one formula", 1, 1)
    preds = {p.name: p for p in domain.predicates}
    scope = _Scope(domain.types, preds, domain.symbols, variables, objects)
    return scope.formula(nodes[0])


def parse_effect(
    source: str | Sequence[Token],
    domain: DomainDef,
    variables: dict[str, str] | None = None,
    objects: dict[str, str] | None = None,
) -> Effect:
    nodes = _nodes(source)
    if len(nodes) != 1:
        raise ParseError("expected exactly one effect", 1, 1)
    preds = {p.name: p for p in domain.predicates}
    scope = _Scope(domain.types, preds, domain.symbols, variables, objects)
    return scope.effect(nodes[0])


def parse_plan(source: str | Sequence[Token]) -> list[GroundAction]:
    """A plan is a sequence of flat ``(name arg ...)`` lists."""
    actions = []
    for node in _nodes(source):
        lst = _expect_list(node, "(action arg ...)")
        if not lst.items:
            raise _err("empty action", lst)
        parts = []
        for item in lst.items:
            if not _is_sym(item) or item.value in ("-", "="):  # type: ignore[union-attr]
                raise _err("expected a name", item)
            parts.append(item.value)  # type: ignore[union-attr]
        actions.append(GroundAction(parts[0], tuple(parts[1:])))
    return actions
