"""
Semântica probabilística: probabilidade de soluções, de consultas e gradientes

Toda a aritmética aqui é em espaço linear com soma compensada (math.fsum); o
espaço logarítmico fica restrito aos circuitos.
"""

import math
from typing import Dict, Sequence, Tuple

import numpy as np

from ..models.ground import GroundRule, NppKey
from ..models.solution import Model, ModelSet, NppOutputTable, QueryResult
from ..utils.errors import ProgramError, ZeroQueryProbabilityError
from .solver import satisfies


def solution_probability(model: Model, table: NppOutputTable, num: int) -> float:
    """
    P(I) = Π p(c=v) / Num(I|r^npp, Π)

    Args:
        model: Solução potencial
        table: Vetores p alinhados com as escolhas
        num: Modelos que compartilham a projeção; 0 indica que não é solução

    Returns:
        Probabilidade da solução
    """
    if num < 1:
        return 0.0
    if len(model.npp_projection) != len(table.vectors):
        raise ProgramError(f"modelo com {len(model.npp_projection)} escolhas e tabela com {len(table.vectors)}")
    product = 1.0
    for vector, value in zip(table.vectors, model.npp_projection):
        product *= float(vector[value])
    return product / num


def _satisfying(models: ModelSet, constraints: Sequence[GroundRule]) -> Tuple[np.ndarray, np.ndarray]:
    """Projeções e Num dos modelos que satisfazem a consulta"""
    rows = [m for m in models.models if satisfies(m, constraints)]
    choices = len(rows[0].npp_projection) if rows else 0
    projections = np.array([m.npp_projection for m in rows], dtype=np.int64).reshape(len(rows), choices)
    nums = np.array([models.num(m) for m in rows], dtype=np.float64)
    return projections, nums


def _chosen_probabilities(projections: np.ndarray, table: NppOutputTable) -> np.ndarray:
    """Matriz (modelos × escolhas) com p do resultado escolhido"""
    columns = [table.vectors[c][projections[:, c]] for c in range(projections.shape[1])]
    if not columns:
        return np.ones((projections.shape[0], 0))
    return np.stack(columns, axis=1)


def _leave_one_out(chosen: np.ndarray) -> np.ndarray:
    """Produto das demais escolhas de cada modelo, sem dividir (evita 0/0)"""
    count, width = chosen.shape
    before = np.ones((count, width + 1))
    after = np.ones((count, width + 1))
    for c in range(width):
        before[:, c + 1] = before[:, c] * chosen[:, c]
        after[:, width - c - 1] = after[:, width - c] * chosen[:, width - c - 1]
    return before[:, :width] * after[:, 1:]


def query_probability(models: ModelSet, constraints: Sequence[GroundRule], table: NppOutputTable,
                      query: str = "") -> QueryResult:
    """P(Q) = Σ_{I ⊨ Q} P(I)"""
    projections, nums = _satisfying(models, constraints)
    chosen = _chosen_probabilities(projections, table)
    weights = np.prod(chosen, axis=1) / nums if len(nums) else np.zeros(0)
    probability = math.fsum(weights.tolist())
    return QueryResult(probability=min(max(probability, 0.0), 1.0), satisfying_models=len(nums), query=query)


def query_set_probability(results: Sequence[QueryResult]) -> float:
    """P(Q) de um conjunto de consultas independentes: produto das probabilidades"""
    probability = 1.0
    for result in results:
        probability *= result.probability
    return probability


def _accumulate(models: ModelSet, constraints: Sequence[GroundRule], table: NppOutputTable):
    """
    Somas por escolha c e resultado v: A[c][v] = Σ_{I ⊨ Q, I ⊨ c=v} P(I)/p(c=v)

    Returns:
        (P(Q), lista de vetores A)
    """
    projections, nums = _satisfying(models, constraints)
    chosen = _chosen_probabilities(projections, table)
    probability = math.fsum((np.prod(chosen, axis=1) / nums).tolist()) if len(nums) else 0.0
    if probability <= 0.0:
        raise ZeroQueryProbabilityError("P(Q) = 0: gradiente indefinido")
    others = _leave_one_out(chosen) / nums[:, None]
    sums = []
    for c, vector in enumerate(table.vectors):
        sums.append(np.bincount(projections[:, c], weights=others[:, c], minlength=len(vector)))
    return probability, sums


def grad_log_query(models: ModelSet, constraints: Sequence[GroundRule],
                   table: NppOutputTable) -> Dict[NppKey, np.ndarray]:
    """
    ∂log P(Q)/∂p(c=v) com o termo negativo das alternativas da mesma escolha

    [Σ_{I⊨Q, c=v} P(I)/p(c=v) − Σ_{I⊨Q, c=v', v'≠v} P(I)/p(c=v')] / P(Q)

    Raises:
        ZeroQueryProbabilityError: P(Q) = 0
    """
    probability, sums = _accumulate(models, constraints, table)
    gradients = {}
    for key, per_value in zip(table.keys, sums):
        total = math.fsum(per_value.tolist())
        gradients[key] = (2.0 * per_value - total) / probability
    return gradients


def partial_log_query(models: ModelSet, constraints: Sequence[GroundRule],
                      table: NppOutputTable) -> Tuple[float, Dict[NppKey, np.ndarray]]:
    """
    Derivadas parciais exatas ∂log P(Q)/∂p(c=v) com as demais entradas fixas

    É o sinal propagado para as NPPs no treino: compõe com a regra da cadeia.

    Returns:
        (P(Q), vetor de derivadas por instância)
    """
    probability, sums = _accumulate(models, constraints, table)
    return probability, {key: per_value / probability for key, per_value in zip(table.keys, sums)}


def evaluate_query(models: ModelSet, constraints: Sequence[GroundRule], table: NppOutputTable,
                   query: str = "", gradients: bool = False) -> QueryResult:
    """query_probability com gradientes opcionais (P(Q) = 0 deixa grad_p vazio)"""
    result = query_probability(models, constraints, table, query)
    if gradients and result.probability > 0.0:
        result.grad_p = grad_log_query(models, constraints, table)
    return result
