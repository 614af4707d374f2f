"""Tensores com máscara e exemplos dos conjuntos de dados"""

from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from ..utils.errors import DatasetError, NonFiniteError, ShapeError
from ..utils.validators import validate_mask, validate_unit_interval

BACKGROUND = "bg"

ObjectAttributes = Tuple[str, str, str, str]  # (cor, tom, forma, tamanho)


@dataclass
class Tensor:
    """Valores reais densos; mask True = observado, False = ausente"""
    values: np.ndarray
    mask: Optional[np.ndarray] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.mask is not None:
            self.mask = np.asarray(self.mask)
            if not validate_mask(self.mask, self.values.shape):
                raise ShapeError(f"máscara {self.mask.shape} ({self.mask.dtype}) incompatível com valores "
                                 f"{self.values.shape}")
        observed = self.values if self.mask is None else self.values[self.mask]
        if not np.all(np.isfinite(observed)):
            raise NonFiniteError("valor não finito em posição observada")

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.values.shape)

    @property
    def missing_count(self) -> int:
        return 0 if self.mask is None else int(np.size(self.mask) - np.count_nonzero(self.mask))

    def flatten(self) -> "Tensor":
        mask = None if self.mask is None else self.mask.reshape(-1)
        return Tensor(self.values.reshape(-1), mask)

    @classmethod
    def stack(cls, tensors: Sequence["Tensor"]) -> "Tensor":
        """Empilha tensores achatados em um lote (B, D)"""
        if not tensors:
            raise ShapeError("lote vazio")
        flat = [t.flatten() for t in tensors]
        widths = {t.values.shape[0] for t in flat}
        if len(widths) != 1:
            raise ShapeError(f"tensores com larguras diferentes no lote: {sorted(widths)}")
        values = np.stack([t.values for t in flat])
        if all(t.mask is None for t in flat):
            return cls(values)
        mask = np.stack([t.mask if t.mask is not None else np.ones(t.values.shape, dtype=bool) for t in flat])
        return cls(values, mask)


@dataclass
class LabeledImage:
    pixels: Tensor
    label: int
    classes: int = 10

    def __post_init__(self):
        if not validate_unit_interval(self.pixels.values, self.pixels.mask):
            raise DatasetError("pixels fora de [0,1]")
        if not 0 <= self.label < self.classes:
            raise DatasetError(f"rótulo {self.label} fora do domínio [0,{self.classes})")


@dataclass
class AdditionExample:
    first: LabeledImage
    second: LabeledImage
    label: int

    def __post_init__(self):
        if self.label != self.first.label + self.second.label:
            raise DatasetError(f"soma {self.label} diferente de {self.first.label} + {self.second.label}")


@dataclass
class AttributeWorldSample:
    """Quatro slots; slots vazios têm bg em todas as categorias"""
    features: np.ndarray                 # (slots, d)
    slots: Tuple[ObjectAttributes, ...]
    object_count: int

    def __post_init__(self):
        for attributes in self.slots:
            empty = [a == BACKGROUND for a in attributes]
            if any(empty) and not all(empty):
                raise DatasetError(f"slot parcialmente vazio: {attributes}")
        if self.object_count != sum(1 for a in self.slots if a[0] != BACKGROUND):
            raise DatasetError("contagem de objetos não confere com os slots")

    @property
    def objects(self) -> Tuple[ObjectAttributes, ...]:
        return tuple(a for a in self.slots if a[0] != BACKGROUND)


@dataclass
class BatchExample:
    """Termo de dados -> tensor, mais o texto da consulta Q_i (sabendo que é verdadeira)"""
    bindings: Dict[str, Tensor]
    query: str
