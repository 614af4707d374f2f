import itertools
import operator
import random

import pytest

from src.models.ground import GroundAtom, GroundRule
from src.parser import parse_program, parse_query
from src.services.grounder import Grounder, ground, ground_query, herbrand_stats
from src.utils.errors import GroundingError

DOMAIN = (0, 1, 2)
ARITIES = {'e': 1, 'f': 2, 'p': 1, 'q': 2, 'r': 0}
FILTERS = [
    ('{0} != {1}', lambda x, y: x != y),
    ('{0} < {1}', operator.lt),
    ('{0}+{1} > 1', lambda x, y: x + y > 1),
    ('{0} = {1}', operator.eq),
]


def literal_text(predicate, args) -> str:
    return f"{predicate}({','.join(str(a) for a in args)})" if args else predicate


def random_rules(rng: random.Random):
    """Fatos e regras sobre inteiros pequenos; toda variável aparece num literal positivo"""
    rules = []
    for _ in range(rng.randint(1, 4)):
        predicate = rng.choice(['e', 'f'])
        rules.append((('fact', predicate, tuple(rng.choice(DOMAIN) for _ in range(ARITIES[predicate]))), [], [], []))
    for _ in range(rng.randint(1, 5)):
        positives = []
        for _ in range(rng.randint(1, 3)):
            predicate = rng.choice(list(ARITIES))
            positives.append((predicate, tuple(rng.choice(['X', 'Y', 0, 1, 2]) for _ in range(ARITIES[predicate]))))
        bound = sorted({a for _, args in positives for a in args if isinstance(a, str)})
        terms = bound + [rng.choice(DOMAIN)]
        negatives = []
        if rng.random() < 0.4:
            predicate = rng.choice(['p', 'q', 'e'])
            negatives.append((predicate, tuple(rng.choice(terms) for _ in range(ARITIES[predicate]))))
        filters = []
        if len(bound) == 2 and rng.random() < 0.5:
            filters.append(rng.choice(FILTERS) + (tuple(bound),))
        if rng.random() < 0.2:
            head = None
        else:
            predicate = rng.choice(['p', 'q', 'r'])
            head = ('rule', predicate, tuple(rng.choice(terms) for _ in range(ARITIES[predicate])))
        rules.append((head, positives, negatives, filters))
    return rules


def rules_source(rules) -> str:
    lines = []
    for head, positives, negatives, filters in rules:
        body = [literal_text(p, args) for p, args in positives]
        body += [f"not {literal_text(p, args)}" for p, args in negatives]
        body += [template.format(*names) for template, _, names in filters]
        if head is None:
            lines.append(f":- {', '.join(body)}.")
        elif not body:
            lines.append(f"{literal_text(head[1], head[2])}.")
        else:
            lines.append(f"{literal_text(head[1], head[2])} :- {', '.join(body)}.")
    return "\n".join(lines)


def substitution_oracle(rules):
    """Produto cartesiano ingênuo das variáveis sobre o domínio, até o ponto fixo"""

    def instantiate(predicate, args, binding):
        return GroundAtom(predicate, tuple(binding[a] if isinstance(a, str) else a for a in args))

    possible, lines = set(), set()
    changed = True
    while changed:
        changed = False
        for head, positives, negatives, filters in rules:
            names = sorted({a for _, args in positives for a in args if isinstance(a, str)})
            for values in itertools.product(DOMAIN, repeat=len(names)):
                binding = dict(zip(names, values))
                body = [instantiate(p, args, binding) for p, args in positives]
                if not all(atom in possible for atom in body):
                    continue
                if not all(test(*(binding[n] for n in pair)) for _, test, pair in filters):
                    continue
                text = [str(a) for a in body] + [f"not {instantiate(p, args, binding)}" for p, args in negatives]
                if head is None:
                    lines.add(f":- {', '.join(text)}.")
                    continue
                atom = instantiate(head[1], head[2], binding)
                lines.add(f"{atom} :- {', '.join(text)}." if text else f"{atom}.")
                if atom not in possible:
                    possible.add(atom)
                    changed = True
    return lines, possible


@pytest.fixture
def addition_ground(addition_program):
    return ground(addition_program)


class TestGrounder:

    def test_addition_counts(self, addition_ground):
        """Testa as contagens exatas do programa de soma"""
        stats = herbrand_stats(addition_ground)
        assert stats.choices == 2
        assert stats.atoms == 2 + 20 + 19
        assert stats.rules == 2 + 100

    def test_addition_rules_per_pair(self, addition_ground):
        heads = [addition_ground.atoms[r.head] for r in addition_ground.rules if r.head is not None]
        assert sum(1 for h in heads if h.predicate == 'addition' and h.args[:2] == ('i1', 'i2')) == 100

    def test_choice_rules(self, addition_ground):
        first = addition_ground.choices[0]
        assert first.key == ('digit', (1, 'i1'))
        assert first.size == 10
        assert addition_ground.format_choice(first).startswith("1{digit(1,i1)=0;digit(1,i1)=1;")

    def test_dump_is_deterministic(self, addition_program):
        assert ground(addition_program).dump() == ground(addition_program).dump()

    def test_comparisons_filter(self):
        gp = ground(parse_program("n(1). n(2). n(3). n(4). p(X) :- n(X), X > 2."))
        heads = {gp.atoms[r.head] for r in gp.rules if r.head is not None}
        assert GroundAtom('p', (3,)) in heads
        assert GroundAtom('p', (4,)) in heads
        assert GroundAtom('p', (2,)) not in heads

    def test_npp_body_false_gives_no_choice(self):
        gp = ground(parse_program("img(a). npp(d(1,X),[0,1]) :- img(X), X != a."))
        assert gp.choices == []

    def test_unbounded_grounding(self):
        program = parse_program("q(0). p(X) :- q(Y), X = Y+1. q(X) :- p(X).")
        with pytest.raises(GroundingError):
            Grounder(max_atoms=200).ground(program)

    def test_npp_body_depending_on_npp(self):
        program = parse_program(
            "img(a). npp(d(1,X),[0,1]) :- img(X). sel(X) :- d(1,X)=1. npp(e(1,X),[0,1]) :- sel(X).")
        with pytest.raises(GroundingError):
            ground(program)

    def test_npp_body_depending_on_negation(self):
        program = parse_program("img(a). ok(X) :- img(X), not bad(X). bad(b). npp(d(1,X),[0,1]) :- ok(X).")
        with pytest.raises(GroundingError):
            ground(program)


class TestGroundQuery:

    def test_query_constraint(self, addition_program, addition_ground):
        query = parse_query(":- not addition(i1,i2,4).", addition_program)
        rules = ground_query(query, addition_ground)
        target = addition_ground.lookup(GroundAtom('addition', ('i1', 'i2', 4)))
        assert rules == [GroundRule(None, (), (target,))]

    def test_absent_negated_atom_is_true(self, addition_program, addition_ground):
        """Testa que um átomo fora da base torna o corpo da restrição vazio"""
        query = parse_query(":- not addition(i1,i2,19).", addition_program)
        assert ground_query(query, addition_ground) == [GroundRule(None, (), ())]

    def test_absent_positive_atom_drops_instance(self, addition_program, addition_ground):
        query = parse_query(":- addition(i1,i2,19).", addition_program)
        assert ground_query(query, addition_ground) == []


class TestGrounderOracle:

    def test_random_programs_match_substitution(self):
        """Testa as regras instanciadas contra a substituição ingênua sobre o domínio"""
        rng = random.Random(2)
        for _ in range(150):
            rules = random_rules(rng)
            source = rules_source(rules)
            gp = ground(parse_program(source))
            expected_rules, expected_heads = substitution_oracle(rules)
            assert len(gp.atoms) <= 200
            assert {gp.format_rule(r) for r in gp.rules} == expected_rules, source
            assert {gp.atoms[r.head] for r in gp.rules if r.head is not None} == expected_heads, source
