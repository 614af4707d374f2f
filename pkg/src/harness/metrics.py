"""Métricas de avaliação: acurácia por dígito e precisão média de conjuntos"""

from typing import List, Sequence, Tuple

import numpy as np

from ..models.samples import LabeledImage, ObjectAttributes, Tensor
from ..npp.runtime import Npp

EVAL_BATCH = 1000


def digit_accuracy(npp: Npp, images: Sequence[LabeledImage]) -> float:
    """Fração de imagens cujo argmax da distribuição condicional acerta o rótulo"""
    if not images:
        return 0.0
    correct = 0
    for start in range(0, len(images), EVAL_BATCH):
        chunk = images[start:start + EVAL_BATCH]
        batch = Tensor.stack([image.pixels for image in chunk])
        p = npp.instance((npp.name, ('eval',)), batch).forward()
        labels = np.array([image.label for image in chunk])
        correct += int(np.count_nonzero(np.argmax(p, axis=1) == labels))
    return correct / len(images)


def average_precision(predictions: Sequence[Tuple[int, ObjectAttributes, float]],
                      ground_truth: Sequence[Sequence[ObjectAttributes]]) -> float:
    """
    Precisão média com limiar de distância infinito

    Uma previsão é verdadeira positiva se os quatro atributos coincidem com um objeto
    ainda não casado da mesma amostra (casamento guloso em ordem de confiança; empates
    mantêm a ordem de entrada). A área sob a curva PR usa interpolação em todos os pontos.

    Args:
        predictions: (índice da amostra, atributos, confiança)
        ground_truth: Objetos verdadeiros por amostra
    """
    total = sum(len(objects) for objects in ground_truth)
    if total == 0:
        return 1.0 if not predictions else 0.0
    ranked = sorted(range(len(predictions)), key=lambda i: -predictions[i][2])
    unmatched: List[List[ObjectAttributes]] = [list(objects) for objects in ground_truth]
    hits = np.zeros(len(ranked))
    for rank, i in enumerate(ranked):
        sample, attributes, _ = predictions[i]
        pool = unmatched[sample]
        if tuple(attributes) in pool:
            pool.remove(tuple(attributes))
            hits[rank] = 1.0
    if not len(hits):
        return 0.0
    true_positives = np.cumsum(hits)
    recall = true_positives / total
    precision = true_positives / np.arange(1, len(hits) + 1)

    recall = np.concatenate([[0.0], recall, [1.0]])
    precision = np.concatenate([[0.0], precision, [0.0]])
    for k in range(len(precision) - 2, -1, -1):
        precision[k] = max(precision[k], precision[k + 1])
    steps = np.where(recall[1:] != recall[:-1])[0]
    return float(np.sum((recall[steps + 1] - recall[steps]) * precision[steps + 1]))
