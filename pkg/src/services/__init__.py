"""
Serviços do pipeline: grounding, modelos estáveis, inferência e treino
"""

from .engine import evaluate_query, grad_log_query, query_probability, solution_probability
from .grounder import ground, ground_query, herbrand_stats
from .slash_program import SlashProgram
from .solver import enumerate_models, format_model
from .trainer import Trainer, TrainingReport

__all__ = [
    'evaluate_query', 'grad_log_query', 'query_probability', 'solution_probability',
    'ground', 'ground_query', 'herbrand_stats', 'SlashProgram', 'enumerate_models', 'format_model',
    'Trainer', 'TrainingReport',
]
