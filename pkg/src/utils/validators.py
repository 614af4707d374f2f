import re
from typing import Optional, Sequence

import numpy as np

VARIABLE_PATTERN = re.compile(r'^[A-Z][A-Za-z0-9_]*$')
CONSTANT_PATTERN = re.compile(r'^[a-z][A-Za-z0-9_]*$')


def is_variable_name(name: str) -> bool:
    """Variáveis começam com letra maiúscula"""
    return bool(VARIABLE_PATTERN.match(name))


def is_constant_name(name: str) -> bool:
    """Constantes simbólicas começam com letra minúscula"""
    return bool(CONSTANT_PATTERN.match(name))


def validate_probability_vector(p: np.ndarray, normalized: bool = True, tol: float = 1e-9) -> bool:
    """
    Valida um vetor de probabilidades de saída de uma NPP

    Args:
        p: Vetor (ou matriz com uma linha por instância)
        normalized: Exige soma 1 por linha
        tol: Tolerância da soma

    Returns:
        True se válido, False caso contrário
    """
    p = np.asarray(p, dtype=float)
    if p.size == 0 or not np.all(np.isfinite(p)):
        return False
    if np.any(p < 0):
        return False
    if normalized:
        return bool(np.all(np.abs(p.sum(axis=-1) - 1.0) <= tol))
    return True


def validate_mask(mask: Optional[np.ndarray], shape: Sequence[int]) -> bool:
    """Máscara ausente é válida; presente deve ser booleana e ter o mesmo formato dos valores"""
    if mask is None:
        return True
    mask = np.asarray(mask)
    return mask.dtype == bool and tuple(mask.shape) == tuple(shape)


def validate_unit_interval(values: np.ndarray, mask: Optional[np.ndarray] = None) -> bool:
    """Valores observados devem estar em [0,1]"""
    values = np.asarray(values, dtype=float)
    if mask is not None:
        values = values[np.asarray(mask, dtype=bool)]
    return bool(np.all((values >= 0.0) & (values <= 1.0)))
