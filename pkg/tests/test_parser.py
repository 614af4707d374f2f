import itertools
import random

import pytest

from src.models.flavors import NppFlavor, QueryFlavor
from src.models.program import Integer, ProgramAst, Symbol
from src.parser import parse_program, parse_query
from src.parser.parser import MAX_OUTCOMES, MAX_TERM_DEPTH
from src.utils.errors import (
    ArityError, DuplicateNppError, NppInHeadError, ProgramError, SafetyError, SlashError, SlashSyntaxError,
    UndeclaredNppError, UnsupportedFlavorError,
)
from tests.conftest import ADDITION_SOURCE

VARIABLES = ['X', 'Y', 'Z']
CONSTANTS = ['a', 'b', '0', '1', '2']
ARITIES = {'e': 1, 'f': 2, 'p': 1, 'q': 2, 'r': 0}


def random_term(rng: random.Random, bound, depth=0) -> str:
    roll = rng.random()
    if depth < 2 and roll < 0.2:
        op = rng.choice(['+', '-', '*'])
        return f"{random_term(rng, bound, depth + 1)}{op}{random_term(rng, bound, depth + 1)}"
    if depth < 2 and roll < 0.3:
        return f"({random_term(rng, bound, depth + 1)})"
    if bound and roll < 0.7:
        return rng.choice(sorted(bound))
    return rng.choice(CONSTANTS)


def random_atom(rng: random.Random, predicate: str, bound, simple=False) -> str:
    arity = ARITIES[predicate]
    if arity == 0:
        return predicate
    if simple:
        args = [rng.choice(VARIABLES + CONSTANTS) for _ in range(arity)]
    else:
        args = [random_term(rng, bound) for _ in range(arity)]
    return f"{predicate}({','.join(args)})"


def random_source(rng: random.Random) -> str:
    """Programa seguro gerado a partir da gramática: fatos, regras, restrições e uma NPP"""
    lines = []
    if rng.random() < 0.5:
        lines.append("npp(d(1,X),[0,1,2]) :- e(X).")
    for _ in range(rng.randint(1, 6)):
        kind = rng.random()
        if kind < 0.3:
            predicate = rng.choice(['e', 'f'])
            args = [rng.choice(CONSTANTS) for _ in range(ARITIES[predicate])]
            lines.append(f"{predicate}({','.join(args)}).")
            continue
        positives = [random_atom(rng, rng.choice(['e', 'f', 'p', 'q', 'r']), set(), simple=True)
                     for _ in range(rng.randint(1, 3))]
        bound = {v for atom in positives for v in VARIABLES if v in atom}
        body = list(positives)
        if bound and rng.random() < 0.4:
            body.append(f"not {random_atom(rng, rng.choice(['p', 'q']), bound)}")
        if bound and rng.random() < 0.4:
            body.append(f"{rng.choice(sorted(bound))} {rng.choice(['=', '!=', '<', '>='])} {random_term(rng, bound)}")
        if kind < 0.45:
            lines.append(f":- {', '.join(body)}.")
        else:
            head = random_atom(rng, rng.choice(['p', 'q', 'r']), bound)
            lines.append(f"{head} :- {', '.join(body)}.")
    return "\n".join(lines)


def mutate(rng: random.Random, text: str) -> str:
    alphabet = "()[].,:-=+*<>!% \nXYab019_npot"
    chars = list(text)
    for _ in range(rng.randint(1, 4)):
        position = rng.randint(0, len(chars))
        if chars and rng.random() < 0.5:
            del chars[min(position, len(chars) - 1)]
        else:
            chars.insert(position, rng.choice(alphabet))
    return "".join(chars)


def safety_case(rng: random.Random):
    """Regra com variáveis possivelmente soltas e a descrição usada pelo oráculo"""
    head = rng.choice(VARIABLES)
    positives = rng.sample(VARIABLES, rng.randint(0, 2))
    negated = rng.choice(VARIABLES) if rng.random() < 0.4 else None
    comparisons = []
    for _ in range(rng.randint(0, 2)):
        target, other = rng.sample(VARIABLES, 2)
        if rng.random() < 0.6:
            source = rng.choice([other, '1'])
            expression = f"{source}+1" if source in VARIABLES else source
            comparisons.append(('=', target, expression, {source} & set(VARIABLES)))
        else:
            comparisons.append(('<', target, other, {other}))
    body = [f"e({v})" for v in positives]
    if negated is not None:
        body.append(f"not g({negated})")
    body += [f"{target} {op} {expression}" for op, target, expression, _ in comparisons]
    text = f"h({head})" + (f" :- {', '.join(body)}." if body else ".")
    return text, head, set(positives), negated, comparisons


def safe_by_enumeration(head, positives, negated, comparisons) -> bool:
    """Tenta toda ordem de aplicação das atribuições V = expr e vê se alguma liga tudo"""
    needed = {head} | ({negated} if negated else set())
    for _, target, _, sources in comparisons:
        needed |= {target} | sources
    assignments = [(target, sources) for op, target, _, sources in comparisons if op == '=']
    for order in itertools.permutations(assignments):
        bound = set(positives)
        for target, sources in order:
            if target not in bound and sources <= bound:
                bound.add(target)
        if needed <= bound:
            return True
    return False


class TestParseProgram:

    def test_addition_program(self, addition_program):
        """Testa a leitura do programa de soma"""
        assert addition_program.npp_names == {'digit'}
        decl = addition_program.npp('digit')
        assert decl.outcomes == tuple(Integer(v) for v in range(10))
        assert decl.binding == 'digit'
        assert len(addition_program.rules) == 3

    def test_round_trip(self, addition_program):
        """Testa que a forma canônica reanalisada reproduz a mesma árvore"""
        source = addition_program.to_source()
        assert parse_program(source) == addition_program
        assert "[0,1,2,3,4,5,6,7,8,9]" in source

    def test_symbolic_outcomes_and_binding(self):
        program = parse_program("obj(o). npp(color(1,X),[red,blue],colors) :- obj(X).")
        decl = program.npp('color')
        assert decl.outcomes == (Symbol('red'), Symbol('blue'))
        assert decl.binding == 'colors'
        assert parse_program(program.to_source()) == program

    def test_comments_are_ignored(self):
        program = parse_program("% comentário\np(a). % outro\n")
        assert len(program.rules) == 1

    def test_syntax_error_position(self):
        with pytest.raises(SlashSyntaxError) as info:
            parse_program("p(a).\nq(X :- p(X).")
        assert info.value.line == 2
        assert info.value.expected

    def test_unexpected_eof(self):
        with pytest.raises(SlashSyntaxError) as info:
            parse_program("p(a)")
        assert info.value.line == 1

    def test_unsafe_rule(self):
        with pytest.raises(SafetyError):
            parse_program("q(a). p(X) :- not q(X).")

    def test_assignment_binds_variable(self):
        program = parse_program("n(1). m(Y) :- n(X), Y = X+1.")
        assert len(program.rules) == 2

    def test_npp_in_head(self):
        with pytest.raises(NppInHeadError):
            parse_program("img(a). npp(digit(1,X),[0,1]) :- img(X). digit(1,a) :- img(a).")

    def test_duplicate_npp(self):
        with pytest.raises(DuplicateNppError):
            parse_program("img(a). npp(d(1,X),[0,1]) :- img(X). npp(d(1,X),[0,1]) :- img(X).")

    def test_arity_mismatch(self):
        with pytest.raises(ArityError):
            parse_program("p(a). p(a,b).")

    def test_undeclared_npp(self):
        with pytest.raises(UndeclaredNppError):
            parse_program("q :- foo(1,a)=3.")


class TestParseQuery:

    def test_constraint_query(self, addition_program):
        query = parse_query(":- not addition(i1,i2,4).", addition_program)
        assert len(query.constraints) == 1
        assert query.flavor_for('digit') is QueryFlavor.CONDITIONAL

    @pytest.mark.parametrize("text,flavor", [
        ("digit(+X,-C).", QueryFlavor.CONDITIONAL),
        ("digit(-X,+C).", QueryFlavor.LIKELIHOOD),
        ("digit(-X,-C).", QueryFlavor.JOINT),
        ("digit(-C).", QueryFlavor.PRIOR),
    ])
    def test_markers(self, addition_program, text, flavor):
        """Testa o mapeamento dos marcadores +/- para o sabor da consulta"""
        query = parse_query(text, addition_program)
        assert query.flavor_for('digit') is flavor

    def test_nn_rejects_joint(self, addition_program):
        with pytest.raises(UnsupportedFlavorError):
            parse_query("digit(-X,-C).", addition_program, {'digit': NppFlavor.NN})

    def test_pc_accepts_joint(self, addition_program):
        query = parse_query("digit(-X,-C).", addition_program, {'digit': NppFlavor.PC})
        assert query.flavor_for('digit') is QueryFlavor.JOINT

    def test_unsupported_marker_pair(self, addition_program):
        with pytest.raises(UnsupportedFlavorError):
            parse_query("digit(+X,+C).", addition_program)

    def test_undeclared_flavored_npp(self, addition_program):
        with pytest.raises(UndeclaredNppError):
            parse_query("color(+X,-C).", addition_program)


class TestParserLimits:

    def test_deep_arithmetic_is_positioned_error(self):
        """Uma soma encadeada com milhares de termos vira erro de sintaxe posicionado"""
        text = "n(1).\np(X) :- n(Y), X = " + "+".join(["Y"] * 3000) + "."
        with pytest.raises(SlashSyntaxError, match="aninhada demais") as info:
            parse_program(text)
        assert (info.value.line, info.value.column) == (2, 1)

    def test_moderate_arithmetic_parses(self):
        text = "n(1). p(X) :- n(Y), X = " + "+".join(["Y"] * (MAX_TERM_DEPTH // 2)) + "."
        program = parse_program(text)
        assert parse_program(program.to_source()) == program

    def test_huge_outcome_range_rejected(self):
        with pytest.raises(ProgramError, match="grande demais") as info:
            parse_program("img(a).\nnpp(d(1,X),[0..300000000]) :- img(X).")
        assert info.value.line == 2

    def test_range_at_limit(self):
        program = parse_program(f"img(a). npp(d(1,X),[1..{MAX_OUTCOMES}]) :- img(X).")
        assert len(program.npp('d').outcomes) == MAX_OUTCOMES

    def test_npp_atom_without_outcome_is_positioned(self):
        with pytest.raises(ProgramError) as info:
            parse_program("img(a).\nnpp(d(1,X),[0,1]) :- img(X), d(X,X).")
        assert info.value.line == 2


class TestParserProperties:

    def test_generated_programs_round_trip(self):
        """Testa parse(imprime(parse(t))) == parse(t) em programas gerados pela gramática"""
        rng = random.Random(11)
        for _ in range(300):
            source = random_source(rng)
            program = parse_program(source)
            printed = program.to_source()
            assert parse_program(printed) == program, source
            assert parse_program(printed).to_source() == printed

    def test_random_input_only_raises_positioned_errors(self):
        """Bytes aleatórios e programas mutados terminam em AST ou em SlashError com posição"""
        rng = random.Random(5)
        inputs = [bytes(rng.getrandbits(8) for _ in range(rng.randint(0, 60))) for _ in range(300)]
        inputs += [mutate(rng, ADDITION_SOURCE) for _ in range(300)]
        inputs += [mutate(rng, random_source(rng)) for _ in range(300)]
        for text in inputs:
            try:
                result = parse_program(text)
            except SlashError as e:
                assert e.line is not None and e.line >= 1, (text, e)
            else:
                assert isinstance(result, ProgramAst)

    def test_safety_matches_enumeration(self):
        """Testa a checagem de segurança contra todas as ordens de atribuição"""
        rng = random.Random(3)
        verdicts = set()
        for _ in range(400):
            text, head, positives, negated, comparisons = safety_case(rng)
            expected = safe_by_enumeration(head, positives, negated, comparisons)
            verdicts.add(expected)
            try:
                parse_program(text)
                safe = True
            except SafetyError:
                safe = False
            assert safe == expected, text
        assert verdicts == {True, False}
