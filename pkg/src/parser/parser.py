"""
Analisador da linguagem SLASH (gramática canônica em slash.lark)

Gera ProgramAst / QueryAst validados: aridade fixa por predicado, segurança das
regras, NPPs fora das cabeças, declarações duplicadas e marcadores de consulta.
"""

import os
from typing import Dict, Iterable, Mapping, Optional, Tuple, Union

from lark import Lark, Token, Transformer, Tree, v_args
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, UnexpectedToken, VisitError

from ..models.flavors import NppFlavor, QueryFlavor
from ..models.program import (
    Atom, BinOp, Comparison, FlavoredAtom, Integer, Literal, MarkedArg, NppDeclAst,
    ProgramAst, QueryAst, RuleAst, Symbol, Variable, unsafe_variables,
)
from ..utils.errors import (
    ArityError, DuplicateNppError, NppInHeadError, ProgramError, SafetyError, SlashError,
    SlashSyntaxError, UndeclaredNppError, UnsupportedFlavorError,
)

_GRAMMAR_FILE = os.path.join(os.path.dirname(__file__), "slash.lark")

with open(_GRAMMAR_FILE, encoding="utf-8") as _f:
    _GRAMMAR = _f.read()

# limites da entrada: o Transformer do lark é recursivo e NPPs viram regras de escolha
MAX_TERM_DEPTH = 100
MAX_OUTCOMES = 100_000

_lark_parser = Lark(
    _GRAMMAR,
    parser="lalr",
    start=["program", "query"],
    propagate_positions=True,
    maybe_placeholders=False,
)


class _Args(tuple):
    pass


class _Outcomes(tuple):
    pass


class _Body(tuple):
    pass


def _position(meta) -> Optional[Tuple[int, int]]:
    if getattr(meta, "empty", True):
        return None
    return meta.line, meta.column


class _AstBuilder(Transformer):
    """Converte a árvore do lark em nós de models.program"""

    def variable(self, children):
        return Variable(str(children[0]))

    def symbol(self, children):
        return Symbol(str(children[0]))

    def integer(self, children):
        return Integer(int(children[0]))

    def binop(self, children):
        left, op, right = children
        return BinOp(str(op), left, right)

    def args(self, children):
        return _Args(children)

    def atom(self, children):
        name = str(children[0])
        rest = list(children[1:])
        args = rest.pop(0) if rest and isinstance(rest[0], _Args) else _Args()
        outcome = None
        if rest:
            # rest = [EQ, termo]
            outcome = rest[1]
        return Atom(name, tuple(args), outcome)

    def positive(self, children):
        return Literal(children[0])

    def negative(self, children):
        return Literal(children[0], negated=True)

    def comparison(self, children):
        left, op, right = children
        return Comparison(str(op), left, right)

    def body(self, children):
        return _Body(children)

    @v_args(meta=True)
    def fact(self, meta, children):
        return RuleAst(children[0], (), _position(meta))

    @v_args(meta=True)
    def normal_rule(self, meta, children):
        head, body = children
        return RuleAst(head, tuple(body), _position(meta))

    @v_args(meta=True)
    def constraint(self, meta, children):
        return RuleAst(None, tuple(children[0]), _position(meta))

    def npp_atom(self, children):
        args = children[1] if len(children) > 1 else _Args()
        return str(children[0]), tuple(args)

    def outcome_list(self, children):
        return _Outcomes(children)

    @v_args(meta=True)
    def outcome_range(self, meta, children):
        low, high = int(children[0]), int(children[1])
        where = _position(meta) or (None, None)
        if high < low:
            raise ProgramError(f"intervalo de resultados vazio: [{low}..{high}]", *where)
        if high - low + 1 > MAX_OUTCOMES:
            raise ProgramError(f"intervalo de resultados grande demais: [{low}..{high}] (máximo {MAX_OUTCOMES})", *where)
        return _Outcomes(Integer(v) for v in range(low, high + 1))

    @v_args(meta=True)
    def npp_decl(self, meta, children):
        (name, args), outcomes = children[0], children[1]
        binding = ""
        body = _Body()
        for extra in children[2:]:
            if isinstance(extra, Token):
                binding = str(extra)
            else:
                body = extra
        return NppDeclAst(name, args, tuple(outcomes), tuple(body), binding, _position(meta))

    def program(self, children):
        rules = tuple(c for c in children if isinstance(c, RuleAst))
        npps = tuple(c for c in children if isinstance(c, NppDeclAst))
        return ProgramAst(rules, npps)

    def marked(self, children):
        return MarkedArg(str(children[0]), children[1])

    @v_args(meta=True)
    def flavored(self, meta, children):
        return FlavoredAtom(str(children[0]), tuple(children[1:]), position=_position(meta))

    def query(self, children):
        return list(children)


def _syntax_error(text: str, exc: UnexpectedInput) -> SlashSyntaxError:
    line, column = getattr(exc, "line", -1), getattr(exc, "column", -1)
    if line is None or line < 1:
        # fim de arquivo: posição logo após o último caractere
        line = text.count("\n") + 1
        column = len(text) - (text.rfind("\n") + 1) + 1
    if isinstance(exc, UnexpectedCharacters):
        expected = exc.allowed or ()
        message = f"caractere inesperado {text[exc.pos_in_stream]!r}" if exc.pos_in_stream < len(text) \
            else "caractere inesperado"
    elif isinstance(exc, UnexpectedEOF):
        expected = exc.expected or ()
        message = "fim de arquivo inesperado"
    elif isinstance(exc, UnexpectedToken):
        expected = exc.expected or ()
        message = "fim de arquivo inesperado" if exc.token.type == "$END" else f"token inesperado {str(exc.token)!r}"
    else:
        expected = ()
        message = "erro de sintaxe"
    return SlashSyntaxError(message, line, column, expected)


def _check_depth(tree: Tree) -> None:
    """Rejeita declarações cuja árvore passa de MAX_TERM_DEPTH níveis (percurso iterativo)"""
    for statement in tree.children:
        if not isinstance(statement, Tree):
            continue
        stack = [(statement, 1)]
        while stack:
            node, depth = stack.pop()
            if depth > MAX_TERM_DEPTH:
                line, column = _position(statement.meta) or (1, 1)
                raise SlashSyntaxError(f"expressão aninhada demais (mais de {MAX_TERM_DEPTH} níveis)", line, column)
            stack.extend((child, depth + 1) for child in node.children if isinstance(child, Tree))


def _parse(text: str, start: str):
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as e:
            raise SlashSyntaxError(f"texto não é UTF-8 válido (byte {e.start})", 1, e.start + 1)
    try:
        tree = _lark_parser.parse(text, start=start)
    except UnexpectedInput as e:
        raise _syntax_error(text, e) from None
    _check_depth(tree)
    try:
        return _AstBuilder().transform(tree)
    except VisitError as e:
        if isinstance(e.orig_exc, SlashError):
            raise e.orig_exc from None
        raise


def _where(item) -> Tuple[Optional[int], Optional[int]]:
    return item.position if item.position else (None, None)


def _iter_atoms(rule: RuleAst) -> Iterable[Atom]:
    if rule.head is not None:
        yield rule.head
    for element in rule.body:
        if isinstance(element, Literal):
            yield element.atom


def _check_atoms(atoms: Iterable[Atom], where, arities: Dict[str, int], npps: Mapping[str, int]) -> None:
    for atom in atoms:
        if atom.outcome is not None:
            if atom.predicate not in npps:
                raise UndeclaredNppError(f"NPP não declarada: {atom.predicate}", *where)
        elif atom.predicate in npps:
            raise ProgramError(f"átomo de NPP sem resultado: {atom} (use {atom}=V)", *where)
        known = arities.setdefault(atom.predicate, atom.arity)
        if known != atom.arity:
            raise ArityError(f"predicado {atom.predicate} usado com aridades {known} e {atom.arity}", *where)


def _check_safety(head: Optional[Atom], body, where, what: str) -> None:
    unsafe = unsafe_variables(head, body)
    if unsafe:
        raise SafetyError(f"{what} insegura: variáveis {', '.join(sorted(unsafe))} não ligadas no corpo positivo", *where)


def validate_program(program: ProgramAst) -> ProgramAst:
    """Valida os invariantes de ProgramAst; devolve o próprio programa"""
    arities: Dict[str, int] = {}
    npps: Dict[str, int] = {}
    seen = set()

    for decl in program.npps:
        where = _where(decl)
        if len(decl.outcomes) < 2:
            raise ProgramError(f"NPP {decl.name} precisa de pelo menos 2 resultados", *where)
        if len(set(decl.outcomes)) != len(decl.outcomes):
            raise ProgramError(f"NPP {decl.name} com resultados repetidos", *where)
        key = (decl.name, decl.args)
        if key in seen:
            raise DuplicateNppError(f"NPP declarada duas vezes: {decl.atom}", *where)
        seen.add(key)
        known = npps.setdefault(decl.name, len(decl.args))
        if known != len(decl.args):
            raise ArityError(f"NPP {decl.name} declarada com aridades {known} e {len(decl.args)}", *where)
        for element in decl.body:
            if isinstance(element, Literal) and (element.negated or element.atom.outcome is not None):
                raise ProgramError(f"corpo de NPP aceita apenas átomos positivos e comparações: {element}", *where)
        _check_safety(decl.atom, decl.body, where, "declaração npp")

    for decl in program.npps:
        _check_atoms((e.atom for e in decl.body if isinstance(e, Literal)), _where(decl), arities, npps)
    for name, arity in npps.items():
        if name in arities:
            raise ProgramError(f"{name} é NPP e também predicado comum", *_where(program.npp(name)))
        arities[name] = arity

    for rule in program.rules:
        where = _where(rule)
        if rule.head is not None and (rule.head.outcome is not None or rule.head.predicate in npps):
            raise NppInHeadError(f"átomo de NPP na cabeça de regra: {rule.head}", *where)
        _check_atoms(_iter_atoms(rule), where, arities, npps)
        _check_safety(rule.head, rule.body, where, "regra")

    return program


def parse_program(text: Union[str, bytes]) -> ProgramAst:
    """
    Analisa o texto de um programa SLASH

    Args:
        text: Código-fonte (UTF-8)

    Returns:
        ProgramAst validado
    """
    return validate_program(_parse(text, "program"))


def parse_query(text: Union[str, bytes], program: ProgramAst,
                flavors: Optional[Mapping[str, NppFlavor]] = None) -> QueryAst:
    """
    Analisa uma consulta: restrições ':- corpo.' e átomos com marcadores +/-

    Args:
        text: Código-fonte da consulta
        program: Programa já analisado
        flavors: Sabor de cada implementação registrada (opcional) para checar capacidade

    Returns:
        QueryAst com os sabores resolvidos
    """
    items = _parse(text, "query")
    npps = {d.name: len(d.args) for d in program.npps}
    arities: Dict[str, int] = {}
    for rule in program.rules:
        for atom in _iter_atoms(rule):
            arities.setdefault(atom.predicate, atom.arity)
    arities.update(npps)

    constraints = []
    flavored = []
    for item in items:
        if isinstance(item, RuleAst):
            where = _where(item)
            if item.head is not None:
                raise ProgramError(f"consultas aceitam apenas restrições ':- corpo.': {item}", *where)
            _check_atoms(_iter_atoms(item), where, dict(arities), npps)
            _check_safety(None, item.body, where, "restrição")
            constraints.append(item)
        else:
            flavored.append(_resolve_flavor(item, program, flavors))
    return QueryAst(tuple(constraints), tuple(flavored))


def _resolve_flavor(atom: FlavoredAtom, program: ProgramAst,
                    flavors: Optional[Mapping[str, NppFlavor]]) -> FlavoredAtom:
    where = _where(atom)
    decl = program.npp(atom.npp)
    if decl is None:
        raise UndeclaredNppError(f"consulta referencia NPP não declarada: {atom.npp}", *where)
    x_markers = {a.marker for a in atom.args[:-1]}
    if len(x_markers) > 1:
        raise UnsupportedFlavorError(f"marcadores divergentes para X em {atom}", *where)
    x_marker = x_markers.pop() if x_markers else ""
    try:
        flavor = QueryFlavor.from_markers(x_marker, atom.args[-1].marker)
    except ValueError as e:
        raise UnsupportedFlavorError(f"{e} em {atom}", *where) from None
    if flavors is not None and decl.binding in flavors and flavor not in flavors[decl.binding].supported_queries:
        raise UnsupportedFlavorError(
            f"NPP {atom.npp} ({flavors[decl.binding].value}) não responde consultas {flavor.value}", *where)
    return FlavoredAtom(atom.npp, atom.args, flavor, atom.position)
