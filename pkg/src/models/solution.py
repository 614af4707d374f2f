"""Modelos estáveis, tabela de saídas das NPPs e resultado de consultas"""

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Mapping, Optional, Tuple

import numpy as np

from .ground import GroundProgram, NppKey
from ..utils.errors import ProgramError, ShapeError
from ..utils.validators import validate_probability_vector

Projection = Tuple[int, ...]  # índice do resultado escolhido por regra de escolha


@dataclass(frozen=True)
class Model:
    """Solução potencial I e sua projeção I|r^npp"""
    atoms: FrozenSet[int]
    npp_projection: Projection

    def sorted_atoms(self) -> Tuple[int, ...]:
        return tuple(sorted(self.atoms))


@dataclass
class ModelSet:
    models: List[Model] = field(default_factory=list)
    agree_count: Dict[Projection, int] = field(default_factory=dict)
    query_conditioned: bool = False  # modelos já filtrados por Q (enumeração de Π ∪ Q)

    def __len__(self) -> int:
        return len(self.models)

    def __iter__(self):
        return iter(self.models)

    def num(self, model: Model) -> int:
        """Num(I|r^npp, Π)"""
        return self.agree_count.get(model.npp_projection, 0)

    def projection_matrix(self, choices: int) -> np.ndarray:
        """Matriz (modelos × escolhas) com o índice do resultado de cada escolha"""
        if not self.models:
            return np.zeros((0, choices), dtype=np.int64)
        return np.array([m.npp_projection for m in self.models], dtype=np.int64).reshape(len(self.models), choices)

    def num_vector(self) -> np.ndarray:
        return np.array([self.num(m) for m in self.models], dtype=np.float64)


def format_key(key: NppKey) -> str:
    """digit(1,i1)"""
    name, args = key
    return f"{name}({','.join(str(a) for a in args)})" if args else name


@dataclass
class NppOutputTable:
    """Vetor p de cada instância de NPP, alinhado com gp.choices"""
    keys: Tuple[NppKey, ...]
    vectors: List[np.ndarray]

    def __post_init__(self):
        if len(self.keys) != len(self.vectors):
            raise ShapeError(f"{len(self.keys)} instâncias e {len(self.vectors)} vetores")
        self.vectors = [np.asarray(v, dtype=np.float64) for v in self.vectors]

    @classmethod
    def uniform(cls, gp: GroundProgram) -> "NppOutputTable":
        return cls(tuple(c.key for c in gp.choices), [np.full(c.size, 1.0 / c.size) for c in gp.choices])

    @classmethod
    def from_mapping(cls, gp: GroundProgram, probabilities: Mapping) -> "NppOutputTable":
        """
        Monta a tabela a partir de um dicionário instância -> vetor

        Args:
            gp: Programa instanciado
            probabilities: Chaves NppKey ou texto 'digit(1,i1)'

        Returns:
            NppOutputTable alinhada com as escolhas
        """
        vectors = []
        for choice in gp.choices:
            vector = probabilities.get(choice.key)
            if vector is None:
                vector = probabilities.get(format_key(choice.key))
            if vector is None:
                raise ProgramError(f"tabela de saídas sem entrada para {format_key(choice.key)}")
            vector = np.asarray(vector, dtype=np.float64)
            if vector.shape != (choice.size,):
                raise ShapeError(f"{format_key(choice.key)}: esperado vetor com {choice.size} entradas, "
                                 f"recebido formato {vector.shape}")
            vectors.append(vector)
        return cls(tuple(c.key for c in gp.choices), vectors)

    def vector(self, key: NppKey) -> np.ndarray:
        return self.vectors[self.keys.index(key)]

    def validate(self, tol: float = 1e-9) -> bool:
        return all(validate_probability_vector(v, normalized=True, tol=tol) for v in self.vectors)

    def to_dict(self) -> Dict[str, List[float]]:
        return {format_key(k): [float(x) for x in v] for k, v in zip(self.keys, self.vectors)}


@dataclass
class QueryResult:
    probability: float
    satisfying_models: int
    grad_p: Optional[Dict[NppKey, np.ndarray]] = None
    query: str = ""

    def to_dict(self, gradients: bool = False) -> dict:
        data = {
            'query': self.query,
            'probability': self.probability,
            'satisfying_models': self.satisfying_models,
        }
        if gradients and self.grad_p is not None:
            data['per_npp_gradients'] = {format_key(k): [float(x) for x in v] for k, v in self.grad_p.items()}
        return data
