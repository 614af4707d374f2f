"""
Enumeração de modelos estáveis (soluções potenciais)

Percorre o produto cartesiano das regras de escolha em profundidade, calcula as
consequências por ponto fixo estratificado, filtra as restrições e confirma a
estabilidade pelo redutor de Gelfond-Lifschitz.
"""

import threading
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from math import prod
from typing import Dict, List, Optional, Sequence, Set, Tuple

import networkx as nx

from ..models.ground import GroundProgram, GroundRule
from ..models.solution import Model, ModelSet, Projection
from ..utils.errors import ModelExplosionError, NonStratifiedError
from ..utils.logger import setup_logger

logger = setup_logger()

DEFAULT_MAX_CANDIDATES = 10_000_000


def check_stratified(gp: GroundProgram) -> List[List[GroundRule]]:
    """
    Verifica que a negação padrão é estratificada e agrupa as regras por estrato

    Returns:
        Regras normais por componente fortemente conexa, em ordem topológica

    Raises:
        NonStratifiedError: com o ciclo que passa por uma aresta negativa
    """
    graph = nx.DiGraph()
    normal = [r for r in gp.rules if not r.is_constraint]
    for rule in normal:
        graph.add_node(rule.head)
        for atom in rule.positive:
            if not graph.has_edge(atom, rule.head):
                graph.add_edge(atom, rule.head, negative=False)
        for atom in rule.negative:
            graph.add_edge(atom, rule.head, negative=True)

    components = list(nx.strongly_connected_components(graph))
    component_of = {atom: i for i, members in enumerate(components) for atom in members}
    for source, target, data in graph.edges(data=True):
        if data['negative'] and component_of[source] == component_of[target]:
            if source == target:
                path = [source]
            else:
                sub = graph.subgraph(components[component_of[source]])
                path = nx.shortest_path(sub, target, source)
            cycle = [str(gp.atoms[a]) for a in path] + [str(gp.atoms[path[0]])]
            raise NonStratifiedError(
                f"negação não estratificada no ciclo {' -> '.join(cycle)}",
                list(zip(cycle, cycle[1:])))

    condensed = nx.condensation(graph, scc=components)
    by_component: Dict[int, List[GroundRule]] = {}
    for rule in normal:
        by_component.setdefault(component_of[rule.head], []).append(rule)
    return [by_component[c] for c in nx.topological_sort(condensed) if c in by_component]


def violated(constraint: GroundRule, atoms) -> bool:
    """O corpo da restrição é verdadeiro no conjunto de átomos"""
    return all(a in atoms for a in constraint.positive) and not any(a in atoms for a in constraint.negative)


def satisfies(model: Model, constraints: Sequence[GroundRule]) -> bool:
    """I ⊨ Q: nenhuma restrição da consulta tem o corpo satisfeito pelo modelo"""
    return not any(violated(c, model.atoms) for c in constraints)


def choice_space_size(gp: GroundProgram) -> int:
    return prod(c.size for c in gp.choices)


class Solver:
    """Pré-computa estratos e índices de escolha de um GroundProgram; somente leitura depois de construído"""

    def __init__(self, gp: GroundProgram, max_candidates: int = DEFAULT_MAX_CANDIDATES, threads: int = 1):
        self.gp = gp
        self.max_candidates = max_candidates
        self.threads = max(1, threads)
        self.strata = check_stratified(gp)
        self.normal_rules = [r for s in self.strata for r in s]
        self.constraints = [r for r in gp.rules if r.is_constraint]
        self.choice_of: Dict[int, Tuple[int, int]] = {
            atom: (c, alt) for c, choice in enumerate(gp.choices) for alt, atom in enumerate(choice.alternatives)
        }

    # --- consequências e estabilidade ---

    def chosen_atoms(self, projection: Projection) -> List[int]:
        return [choice.alternatives[v] for choice, v in zip(self.gp.choices, projection)]

    def consequences(self, chosen: Sequence[int]) -> Set[int]:
        """Ponto fixo estrato a estrato; átomos negados já estão decididos em estratos anteriores"""
        true = set(chosen)
        for stratum in self.strata:
            changed = True
            while changed:
                changed = False
                for rule in stratum:
                    if rule.head not in true and all(a in true for a in rule.positive) \
                            and not any(a in true for a in rule.negative):
                        true.add(rule.head)
                        changed = True
        return true

    def is_stable(self, atoms: Set[int], chosen: Sequence[int]) -> bool:
        """atoms é o menor modelo do redutor de Gelfond-Lifschitz em relação a si mesmo"""
        reduct = [r for r in self.normal_rules if not any(a in atoms for a in r.negative)]
        least = set(chosen)
        changed = True
        while changed:
            changed = False
            for rule in reduct:
                if rule.head not in least and all(a in least for a in rule.positive):
                    least.add(rule.head)
                    changed = True
        return least == atoms

    def model_for(self, projection: Projection, constraints: Sequence[GroundRule] = ()) -> Optional[Model]:
        chosen = self.chosen_atoms(projection)
        atoms = self.consequences(chosen)
        if any(violated(c, atoms) for c in self.constraints) or any(violated(c, atoms) for c in constraints):
            return None
        if not self.is_stable(atoms, chosen):
            return None
        return Model(frozenset(atoms), tuple(projection))

    def count_projection(self, projection: Projection) -> int:
        """Num(I|r^npp, Π): modelos estáveis de Π que escolhem esta projeção"""
        return 0 if self.model_for(projection) is None else 1

    # --- enumeração ---

    def _early_checks(self, constraints: Sequence[GroundRule]):
        """
        Restrições só sobre átomos de escolha, indexadas pela última escolha que tocam

        Returns:
            (impossível, {escolha: [(positivos, negativos)]}) com pares (escolha, alternativa)
        """
        buckets: Dict[int, list] = {}
        for constraint in list(self.constraints) + list(constraints):
            atoms = constraint.positive + constraint.negative
            if not atoms:
                return True, {}
            if not all(a in self.choice_of for a in atoms):
                continue
            positive = [self.choice_of[a] for a in constraint.positive]
            negative = [self.choice_of[a] for a in constraint.negative]
            last = max(c for c, _ in positive + negative)
            buckets.setdefault(last, []).append((positive, negative))
        return False, buckets

    def enumerate(self, constraints: Sequence[GroundRule] = ()) -> List[Model]:
        """Modelos estáveis de Π ∪ constraints, na ordem lexicográfica das escolhas"""
        impossible, early = self._early_checks(constraints)
        if impossible:
            return []
        sizes = [c.size for c in self.gp.choices]
        if not early and prod(sizes) > self.max_candidates:
            raise ModelExplosionError(
                f"espaço de escolhas {prod(sizes)} excede o limite de {self.max_candidates} candidatos")

        lock = threading.Lock()
        leaves = [0]

        def count_leaf():
            with lock:
                leaves[0] += 1
                if leaves[0] > self.max_candidates:
                    raise ModelExplosionError(f"mais de {self.max_candidates} atribuições candidatas")

        def pruned(level: int, assign: List[int]) -> bool:
            for positive, negative in early.get(level, ()):
                if all(assign[c] == v for c, v in positive) and not any(assign[c] == v for c, v in negative):
                    return True
            return False

        def search(level: int, assign: List[int], out: List[Model]) -> None:
            if level == len(sizes):
                count_leaf()
                model = self.model_for(tuple(assign), constraints)
                if model is not None:
                    out.append(model)
                return
            for value in range(sizes[level]):
                assign[level] = value
                if not pruned(level, assign):
                    search(level + 1, assign, out)

        def chunk(first: int) -> List[Model]:
            assign = [0] * len(sizes)
            assign[0] = first
            out: List[Model] = []
            if not pruned(0, assign):
                search(1, assign, out)
            return out

        if not sizes:
            out: List[Model] = []
            search(0, [], out)
            return out
        if self.threads == 1:
            parts = [chunk(v) for v in range(sizes[0])]
        else:
            with ThreadPoolExecutor(max_workers=self.threads) as executor:
                parts = list(executor.map(chunk, range(sizes[0])))
        return [m for part in parts for m in part]

    def model_set(self, constraints: Sequence[GroundRule] = (), num_includes_query: bool = False) -> ModelSet:
        models = self.enumerate(constraints)
        if not constraints or num_includes_query:
            counts = Counter(m.npp_projection for m in models)
        else:
            counts = {m.npp_projection: self.count_projection(m.npp_projection) for m in models}
        logger.debug(f"📊 {len(models)} modelos ({'Π ∪ Q' if constraints else 'Π'})")
        return ModelSet(models, dict(counts), query_conditioned=bool(constraints))


def enumerate_models(gp: GroundProgram, constraints: Sequence[GroundRule] = (),
                     max_candidates: int = DEFAULT_MAX_CANDIDATES, threads: int = 1,
                     num_includes_query: bool = False) -> ModelSet:
    """
    Todos os modelos estáveis do programa instanciado

    Args:
        gp: Programa instanciado (negação estratificada)
        constraints: Restrições extras (consulta); vazias para enumerar só Π
        max_candidates: Limite de atribuições completas visitadas
        threads: Trabalhadores; fatias pela primeira escolha, unidas em ordem canônica
        num_includes_query: Conta Num sobre Π ∪ Q em vez de Π

    Returns:
        ModelSet com agree_count preenchido
    """
    return Solver(gp, max_candidates, threads).model_set(constraints, num_includes_query)


def count_projection(gp: GroundProgram, projection: Projection) -> int:
    return Solver(gp).count_projection(projection)


def format_model(gp: GroundProgram, model: Model) -> str:
    """Uma linha por modelo: átomos ordenados pelo texto"""
    return " ".join(sorted(str(gp.atoms[a]) for a in model.atoms))
