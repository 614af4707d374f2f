"""
Fachada de um programa SLASH: grounding, conjuntos de modelos em cache e ligação
das NPPs aos tensores de cada exemplo
"""

from collections import OrderedDict
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from .engine import evaluate_query
from .grounder import ground, ground_query, herbrand_stats
from .solver import DEFAULT_MAX_CANDIDATES, Solver, choice_space_size
from ..models.flavors import NppFlavor, QueryFlavor
from ..models.ground import GroundRule, HerbrandStats, NppKey
from ..models.program import ProgramAst, QueryAst
from ..models.samples import BatchExample, Tensor
from ..models.solution import ModelSet, NppOutputTable, QueryResult
from ..npp.runtime import NppBank, NppInstance
from ..parser import parse_program, parse_query
from ..utils.config import load_config
from ..utils.errors import DatasetError, UsageError
from ..utils.logger import setup_logger

logger = setup_logger()

CACHE_SIZE = 4096


def data_term(key: NppKey) -> str:
    """Último argumento da instância: o termo ligado ao tensor de entrada"""
    name, args = key
    if not args:
        raise DatasetError(f"instância {name} sem argumento de dados")
    return str(args[-1])


class SlashProgram:
    """Programa instanciado mais o solver; somente leitura depois de construído"""

    def __init__(self, program: ProgramAst, config: Optional[dict] = None, threads: int = 1):
        settings = config if config is not None else load_config()
        solver_config = settings.get('solver', {})
        self.program = program
        self.max_candidates = int(solver_config.get('max_candidates', DEFAULT_MAX_CANDIDATES))
        self.num_includes_query = bool(solver_config.get('num_includes_query', False))
        self.gp = ground(program)
        self.solver = Solver(self.gp, self.max_candidates, threads)
        self._base: Optional[ModelSet] = None
        self._conditioned: "OrderedDict[Tuple[GroundRule, ...], ModelSet]" = OrderedDict()
        self._queries: "OrderedDict[str, Tuple[QueryAst, List[GroundRule]]]" = OrderedDict()

    @classmethod
    def from_file(cls, path: Union[str, Path], config: Optional[dict] = None, threads: int = 1) -> "SlashProgram":
        path = Path(path)
        if not path.exists():
            raise UsageError(f"programa não encontrado: {path}")
        return cls(parse_program(path.read_bytes()), config, threads)

    @property
    def stats(self) -> HerbrandStats:
        return herbrand_stats(self.gp)

    @property
    def outcomes(self) -> Dict[str, int]:
        """Implementação -> número de resultados declarados"""
        return {decl.binding: len(decl.outcomes) for decl in self.program.npps}

    @property
    def conditioned(self) -> bool:
        """Espaço de escolhas grande demais para enumerar Π sem a consulta"""
        return self.num_includes_query or choice_space_size(self.gp) > self.max_candidates

    # --- consultas ---

    def query(self, text: str, flavors: Optional[Mapping[str, NppFlavor]] = None) -> Tuple[QueryAst, List[GroundRule]]:
        """Analisa e instancia o texto de uma consulta (em cache)"""
        cached = self._queries.get(text)
        if cached is None:
            ast = parse_query(text, self.program, flavors)
            cached = (ast, ground_query(ast, self.gp))
            self._remember(self._queries, text, cached)
        return cached

    def models(self, constraints: Sequence[GroundRule] = ()) -> ModelSet:
        """Modelos de Π (filtrados depois por Q) ou de Π ∪ Q quando o espaço excede o limite"""
        if not constraints or not self.conditioned:
            if self._base is None:
                self._base = self.solver.model_set()
                logger.info(f"📊 {len(self._base)} modelos estáveis de Π")
            return self._base
        key = tuple(constraints)
        models = self._conditioned.get(key)
        if models is None:
            models = self.solver.model_set(constraints, self.num_includes_query)
            self._remember(self._conditioned, key, models)
        return models

    def infer(self, text: str, table: NppOutputTable, gradients: bool = False) -> QueryResult:
        _, constraints = self.query(text)
        return evaluate_query(self.models(constraints), constraints, table, text.strip(), gradients)

    @staticmethod
    def _remember(cache: OrderedDict, key, value) -> None:
        cache[key] = value
        if len(cache) > CACHE_SIZE:
            cache.popitem(last=False)

    # --- NPPs ---

    def flavors_for(self, query: QueryAst) -> Dict[NppKey, QueryFlavor]:
        """Sabor de cada instância na consulta (condicional quando não há átomo com marcadores)"""
        return {choice.key: query.flavor_for(choice.key[0]) for choice in self.gp.choices}

    def instances(self, bank: NppBank, batch: Sequence[BatchExample]) -> Dict[NppKey, NppInstance]:
        """
        Uma instância por escolha, com os tensores do lote empilhados (B, D)

        Raises:
            DatasetError: termo de dados sem tensor em algum exemplo
        """
        instances: Dict[NppKey, NppInstance] = {}
        for choice in self.gp.choices:
            term = data_term(choice.key)
            tensors = []
            for example in batch:
                if term not in example.bindings:
                    raise DatasetError(f"exemplo sem tensor para o termo {term}")
                tensors.append(example.bindings[term])
            instances[choice.key] = bank.npp(choice.binding).instance(choice.key, Tensor.stack(tensors))
        unknown = {t for example in batch for t in example.bindings} - {data_term(c.key) for c in self.gp.choices}
        if unknown:
            raise DatasetError(f"termos ligados que não aparecem no programa: {', '.join(sorted(unknown))}")
        return instances

    def tables(self, instances: Mapping[NppKey, NppInstance],
               flavors: Sequence[Mapping[NppKey, QueryFlavor]]) -> List[NppOutputTable]:
        """Tabela de saídas de cada exemplo do lote (linha b de cada instância)"""
        keys = tuple(c.key for c in self.gp.choices)
        outputs: Dict[Tuple[NppKey, QueryFlavor], object] = {}
        tables = []
        for row, example_flavors in enumerate(flavors):
            vectors = []
            for key in keys:
                flavor = example_flavors.get(key, QueryFlavor.CONDITIONAL)
                if (key, flavor) not in outputs:
                    outputs[(key, flavor)] = instances[key].forward(flavor)
                p = outputs[(key, flavor)]
                vectors.append(p[row] if p.ndim == 2 else p)
            tables.append(NppOutputTable(keys, vectors))
        return tables
