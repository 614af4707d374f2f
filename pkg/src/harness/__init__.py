"""Conjuntos de dados, máscaras, mundo sintético de atributos e métricas"""

from .attribute_world import gen_attribute_world, load_attribute_world, predict_objects, save_attribute_world
from .metrics import average_precision, digit_accuracy
from .mnist import apply_missing, downscale, load_idx, make_addition_pairs
from .tasks import Task, load_task

__all__ = [
    'gen_attribute_world', 'load_attribute_world', 'predict_objects', 'save_attribute_world',
    'average_precision', 'digit_accuracy',
    'apply_missing', 'downscale', 'load_idx', 'make_addition_pairs',
    'Task', 'load_task',
]
