"""
Instanciação (grounding) de programas SLASH

Percorre o programa de cima para baixo, da esquerda para a direita, até o ponto fixo
dos átomos possivelmente verdadeiros; declarações npp com corpo ⊤ viram regras de
escolha 1{h(x)=v1;...;h(x)=vn}1.
"""

import operator
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import networkx as nx

from ..models.ground import ChoiceRule, Constant, GroundAtom, GroundProgram, GroundRule, HerbrandStats
from ..models.program import (
    Atom, BinOp, BodyElement, Comparison, Integer, Literal, ProgramAst, QueryAst, Symbol, Term, Variable,
)
from ..utils.errors import GroundingError
from ..utils.logger import setup_logger

logger = setup_logger()

Binding = Dict[str, Constant]

_ARITHMETIC = {'+': operator.add, '-': operator.sub, '*': operator.mul}
_ORDERING = {'<': operator.lt, '<=': operator.le, '>': operator.gt, '>=': operator.ge}

DEFAULT_MAX_ATOMS = 1_000_000


def evaluate(term: Term, binding: Binding) -> Constant:
    """Avalia um termo sob uma substituição completa"""
    if isinstance(term, Integer):
        return term.value
    if isinstance(term, Symbol):
        return term.name
    if isinstance(term, Variable):
        try:
            return binding[term.name]
        except KeyError:
            raise GroundingError(f"variável {term.name} sem valor durante o grounding") from None
    left, right = evaluate(term.left, binding), evaluate(term.right, binding)
    if not isinstance(left, int) or not isinstance(right, int):
        raise GroundingError(f"aritmética sobre não inteiros: {term}")
    return _ARITHMETIC[term.op](left, right)


def compare(op: str, left: Constant, right: Constant) -> bool:
    if op == '=':
        return left == right
    if op == '!=':
        return left != right
    if not isinstance(left, int) or not isinstance(right, int):
        raise GroundingError(f"comparação {op} entre não inteiros: {left} {op} {right}")
    return _ORDERING[op](left, right)


def _unify(pattern: Term, value: Constant, binding: Binding) -> Optional[Binding]:
    if isinstance(pattern, Variable):
        if pattern.name in binding:
            return binding if binding[pattern.name] == value else None
        extended = dict(binding)
        extended[pattern.name] = value
        return extended
    return binding if evaluate(pattern, binding) == value else None


def _match_atom(atom: Atom, ground: GroundAtom, binding: Binding) -> Optional[Binding]:
    if len(atom.args) != len(ground.args):
        return None
    for pattern, value in zip(atom.args, ground.args):
        binding = _unify(pattern, value, binding)
        if binding is None:
            return None
    if atom.outcome is not None:
        binding = _unify(atom.outcome, ground.outcome, binding)
    return binding


def _ready(atom: Atom, bound) -> bool:
    """Argumentos aritméticos só podem ser comparados com variáveis já ligadas"""
    terms = list(atom.args) + ([atom.outcome] if atom.outcome is not None else [])
    return all(not isinstance(t, BinOp) or t.variables() <= bound for t in terms)


def _resolve_comparisons(binding: Binding, pending: Tuple[Comparison, ...]):
    """Aplica comparações avaliáveis e atribuições V = expr; None se alguma for falsa"""
    changed = True
    while changed and pending:
        changed = False
        remaining = []
        for comparison in pending:
            free = comparison.variables() - binding.keys()
            if not free:
                if not compare(comparison.op, evaluate(comparison.left, binding), evaluate(comparison.right, binding)):
                    return None, ()
                changed = True
                continue
            if comparison.op == '=':
                assigned = False
                for target, source in ((comparison.left, comparison.right), (comparison.right, comparison.left)):
                    if isinstance(target, Variable) and target.name in free and source.variables() <= binding.keys():
                        binding = dict(binding)
                        binding[target.name] = evaluate(source, binding)
                        assigned = changed = True
                        break
                if assigned:
                    continue
            remaining.append(comparison)
        pending = tuple(remaining)
    return binding, pending


class _AtomIndex:
    """Átomos possivelmente verdadeiros, agrupados por assinatura e em ordem de inserção"""

    def __init__(self):
        self._by_signature: Dict[Tuple[str, int, bool], List[GroundAtom]] = {}
        self._members = set()

    def add(self, atom: GroundAtom) -> bool:
        if atom in self._members:
            return False
        self._members.add(atom)
        key = (atom.predicate, len(atom.args), atom.outcome is not None)
        self._by_signature.setdefault(key, []).append(atom)
        return True

    def candidates(self, atom: Atom) -> List[GroundAtom]:
        return list(self._by_signature.get(atom.signature, ()))

    def __len__(self) -> int:
        return len(self._members)


def solutions(body: Sequence[BodyElement], index: _AtomIndex) -> Iterator[Tuple[Binding, Tuple[GroundAtom, ...]]]:
    """
    Substituições que tornam verdadeiros os literais positivos e as comparações do corpo

    Returns:
        Iterador de (substituição, átomos positivos casados na ordem do corpo)
    """
    positives = [e.atom for e in body if isinstance(e, Literal) and not e.negated]
    comparisons = tuple(e for e in body if isinstance(e, Comparison))

    def extend(remaining: Tuple[int, ...], binding: Binding, pending, matched: Dict[int, GroundAtom]):
        binding, pending = _resolve_comparisons(binding, pending)
        if binding is None:
            return
        if not remaining:
            if pending:
                raise GroundingError(
                    f"grounding ilimitado: variáveis sem domínio em {', '.join(str(c) for c in pending)}")
            yield binding, tuple(matched[i] for i in range(len(positives)))
            return
        position = next((i for i in remaining if _ready(positives[i], binding.keys())), None)
        if position is None:
            raise GroundingError(
                f"grounding ilimitado: argumentos aritméticos sem variáveis ligadas em {positives[remaining[0]]}")
        rest = tuple(i for i in remaining if i != position)
        for candidate in index.candidates(positives[position]):
            extended = _match_atom(positives[position], candidate, binding)
            if extended is not None:
                yield from extend(rest, extended, pending, {**matched, position: candidate})

    yield from extend(tuple(range(len(positives))), {}, comparisons, {})


def ground_atom(atom: Atom, binding: Binding) -> GroundAtom:
    outcome = evaluate(atom.outcome, binding) if atom.outcome is not None else None
    return GroundAtom(atom.predicate, tuple(evaluate(a, binding) for a in atom.args), outcome)


class Grounder:
    """Instancia um ProgramAst sobre sua base de Herbrand"""

    def __init__(self, max_atoms: int = DEFAULT_MAX_ATOMS):
        self.max_atoms = max_atoms

    def ground(self, program: ProgramAst) -> GroundProgram:
        self._check_npp_bodies(program)
        gp = GroundProgram()
        index = _AtomIndex()
        seen_rules = set()
        seen_choices = set()

        changed = True
        while changed:
            changed = False
            for decl in program.npps:
                for binding, _ in solutions(decl.body, index):
                    key = (decl.name, tuple(evaluate(a, binding) for a in decl.args))
                    if key in seen_choices:
                        continue
                    seen_choices.add(key)
                    alternatives = []
                    for outcome in decl.outcomes:
                        atom = GroundAtom(decl.name, key[1], evaluate(outcome, {}))
                        alternatives.append(gp.intern(atom))
                        index.add(atom)
                    gp.npp_instances[len(gp.choices)] = key
                    gp.choices.append(ChoiceRule(key, tuple(alternatives), decl.binding))
                    changed = True

            for rule in program.rules:
                for binding, matched in solutions(rule.body, index):
                    head = gp.intern(ground_atom(rule.head, binding)) if rule.head is not None else None
                    positive = tuple(gp.intern(a) for a in matched)
                    negative = tuple(
                        gp.intern(ground_atom(e.atom, binding))
                        for e in rule.body if isinstance(e, Literal) and e.negated)
                    ground = GroundRule(head, positive, negative)
                    if ground in seen_rules:
                        continue
                    seen_rules.add(ground)
                    gp.rules.append(ground)
                    if head is not None and index.add(gp.atoms[head]):
                        changed = True
                if len(gp.atoms) > self.max_atoms:
                    raise GroundingError(f"grounding ilimitado: mais de {self.max_atoms} átomos")

        logger.debug(f"✅ Grounding concluído: {len(gp.atoms)} átomos, {len(gp.rules)} regras, "
                     f"{len(gp.choices)} escolhas")
        return gp

    def _check_npp_bodies(self, program: ProgramAst) -> None:
        """Corpos npp precisam ser decididos (⊤/⊥) no grounding: sem depender de NPPs nem de negação"""
        graph = nx.DiGraph()
        for rule in program.rules:
            if rule.head is None:
                continue
            graph.add_node(rule.head.predicate)
            for element in rule.body:
                if isinstance(element, Literal):
                    graph.add_edge(element.atom.predicate, rule.head.predicate, negative=element.negated)
        for decl in program.npps:
            for element in decl.body:
                if not isinstance(element, Literal):
                    continue
                predicate = element.atom.predicate
                if predicate not in graph:
                    logger.warning(f"⚠️  Predicado {predicate} não aparece em nenhuma cabeça; corpo de "
                                   f"{decl.atom} é ⊥")
                    continue
                upstream = nx.ancestors(graph, predicate) | {predicate}
                if upstream & program.npp_names:
                    raise GroundingError(f"corpo de npp {decl.atom} depende de resultados de NPP", *(decl.position or (None, None)))
                sub = graph.subgraph(upstream)
                if any(data.get('negative') for _, _, data in sub.edges(data=True)):
                    raise GroundingError(f"corpo de npp {decl.atom} depende de negação padrão", *(decl.position or (None, None)))


def ground(program: ProgramAst, max_atoms: int = DEFAULT_MAX_ATOMS) -> GroundProgram:
    """Instancia o programa completo, com uma regra de escolha por instância de NPP"""
    return Grounder(max_atoms).ground(program)


def ground_query(query: QueryAst, gp: GroundProgram) -> List[GroundRule]:
    """
    Instancia as restrições de uma consulta contra a tabela de átomos do programa

    Átomos fora da base de Herbrand são falsos: um literal positivo ausente elimina a
    instância, um negado ausente é verdadeiro e some do corpo.
    """
    index = _AtomIndex()
    for choice in gp.choices:
        for atom_id in choice.alternatives:
            index.add(gp.atoms[atom_id])
    for rule in gp.rules:
        if rule.head is not None:
            index.add(gp.atoms[rule.head])

    grounded: List[GroundRule] = []
    seen = set()
    for constraint in query.constraints:
        for binding, matched in solutions(constraint.body, index):
            positive = tuple(gp.atom_ids[a] for a in matched)
            negative = []
            for element in constraint.body:
                if isinstance(element, Literal) and element.negated:
                    atom_id = gp.lookup(ground_atom(element.atom, binding))
                    if atom_id is not None:
                        negative.append(atom_id)
            rule = GroundRule(None, positive, tuple(negative))
            if rule not in seen:
                seen.add(rule)
                grounded.append(rule)
    return grounded


def herbrand_stats(gp: GroundProgram) -> HerbrandStats:
    """Contagens exatas de átomos, regras e escolhas"""
    return HerbrandStats(atoms=len(gp.atoms), rules=len(gp.rules), choices=len(gp.choices))
