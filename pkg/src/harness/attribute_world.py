"""
Mundo sintético de atributos: até quatro objetos por amostra, cada um com cor, tom,
forma e tamanho, observados por vetores de características com ruído
"""

from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from ..models.samples import BACKGROUND, AttributeWorldSample, BatchExample, ObjectAttributes, Tensor
from ..npp.runtime import NppBank
from ..storage.datasets import read_jsonl, write_jsonl
from ..utils.errors import DatasetError

COLORS = ('red', 'blue', 'green', 'gray', 'brown', 'magenta', 'cyan', 'yellow')
SHADES = ('bright', 'dark')
SHAPES = ('circle', 'triangle', 'square')
SIZES = ('small', 'big')

CATEGORIES: Tuple[Tuple[str, Tuple[str, ...]], ...] = (
    ('color', COLORS),
    ('shade', SHADES),
    ('shape', SHAPES),
    ('size', SIZES),
)
SLOTS = ('s1', 's2', 's3', 's4')
EMBEDDING_SEED = 1234
KIND = 'attribute_world'

Prediction = Tuple[int, ObjectAttributes, float]   # (amostra, atributos, confiança)


def outcomes(values: Sequence[str]) -> Tuple[str, ...]:
    """Domínio de uma categoria com o atributo de fundo"""
    return tuple(values) + (BACKGROUND,)


def one_hot_width() -> int:
    return sum(len(outcomes(values)) for _, values in CATEGORIES)


def embedding(feature_dim: int) -> np.ndarray:
    """Projeção linear fixa (independe da semente dos dados) dos one-hots concatenados"""
    rng = np.random.default_rng(EMBEDDING_SEED)
    return rng.normal(0.0, 1.0, size=(one_hot_width(), feature_dim))


def encode_slot(attributes: ObjectAttributes) -> np.ndarray:
    parts = []
    for (_, values), value in zip(CATEGORIES, attributes):
        domain = outcomes(values)
        vector = np.zeros(len(domain))
        vector[domain.index(value)] = 1.0
        parts.append(vector)
    return np.concatenate(parts)


def gen_attribute_world(count: int, seed: int, noise_sigma: float = 0.1,
                        feature_dim: int = 32) -> List[AttributeWorldSample]:
    """
    Gera amostras com 1 a 4 objetos em slots sorteados; slots vazios são bg em todas as categorias

    Args:
        count: Número de amostras
        seed: Semente dos atributos e do ruído
        noise_sigma: Desvio do ruído gaussiano nas características
        feature_dim: Largura d do vetor de cada slot
    """
    if noise_sigma < 0:
        raise DatasetError(f"ruído negativo: {noise_sigma}")
    rng = np.random.default_rng(seed)
    projection = embedding(feature_dim)
    empty: ObjectAttributes = (BACKGROUND,) * len(CATEGORIES)
    samples = []
    for _ in range(count):
        object_count = int(rng.integers(1, len(SLOTS) + 1))
        filled = set(rng.choice(len(SLOTS), size=object_count, replace=False).tolist())
        slots = []
        for slot in range(len(SLOTS)):
            if slot in filled:
                slots.append(tuple(values[int(rng.integers(len(values)))] for _, values in CATEGORIES))
            else:
                slots.append(empty)
        codes = np.stack([encode_slot(attributes) for attributes in slots])
        features = codes @ projection + rng.normal(0.0, 1.0, size=(len(SLOTS), feature_dim)) * noise_sigma
        samples.append(AttributeWorldSample(features, tuple(slots), object_count))
    return samples


def attribute_query(sample: AttributeWorldSample) -> str:
    """Uma restrição por slot e categoria fixando o valor observado"""
    lines = []
    for slot, attributes in zip(SLOTS, sample.slots):
        for (category, _), value in zip(CATEGORIES, attributes):
            lines.append(f":- not {category}(1,{slot})={value}.")
    return "\n".join(lines)


def to_batch_example(sample: AttributeWorldSample) -> BatchExample:
    bindings = {slot: Tensor(sample.features[k]) for k, slot in enumerate(SLOTS)}
    return BatchExample(bindings=bindings, query=attribute_query(sample))


def predict_objects(bank: NppBank, samples: Sequence[AttributeWorldSample]) -> List[Prediction]:
    """
    Previsões de conjunto: argmax por categoria em cada slot

    Slots com bg como valor mais provável em todas as categorias não geram previsão;
    a confiança é o produto das probabilidades máximas.
    """
    if not samples:
        return []
    best: Dict[str, Tuple[np.ndarray, np.ndarray]] = {}
    predictions: List[Prediction] = []
    for k, slot in enumerate(SLOTS):
        batch = Tensor.stack([Tensor(sample.features[k]) for sample in samples])
        for category, _ in CATEGORIES:
            p = bank.npp(category).instance((category, (1, slot)), batch).forward()
            best[category] = (np.argmax(p, axis=1), np.max(p, axis=1))
        for row in range(len(samples)):
            attributes = tuple(outcomes(values)[int(best[category][0][row])] for category, values in CATEGORIES)
            if all(value == BACKGROUND for value in attributes):
                continue
            confidence = float(np.prod([best[category][1][row] for category, _ in CATEGORIES]))
            predictions.append((row, attributes, confidence))
    return predictions


def save_attribute_world(path: Union[str, Path], samples: Sequence[AttributeWorldSample], **meta) -> None:
    records = [{'features': s.features.tolist(), 'slots': [list(a) for a in s.slots],
                'object_count': s.object_count} for s in samples]
    write_jsonl(path, KIND, records, **meta)


def load_attribute_world(path: Union[str, Path]) -> List[AttributeWorldSample]:
    _, records = read_jsonl(path, KIND)
    try:
        return [AttributeWorldSample(np.asarray(r['features'], dtype=np.float64),
                                     tuple(tuple(a) for a in r['slots']), int(r['object_count']))
                for r in records]
    except (KeyError, TypeError) as e:
        raise DatasetError(f"{path}: registro inválido ({e})") from None
