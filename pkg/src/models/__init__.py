"""Modelos de dados do sistema"""

from .flavors import NppFlavor, QueryFlavor
from .ground import ChoiceRule, GroundAtom, GroundProgram, GroundRule, HerbrandStats
from .program import ProgramAst, QueryAst
from .samples import AdditionExample, AttributeWorldSample, BatchExample, LabeledImage, Tensor
from .solution import Model, ModelSet, NppOutputTable, QueryResult
from .training import TrainConfig

__all__ = [
    'NppFlavor', 'QueryFlavor', 'ChoiceRule', 'GroundAtom', 'GroundProgram', 'GroundRule', 'HerbrandStats',
    'ProgramAst', 'QueryAst', 'AdditionExample', 'AttributeWorldSample', 'BatchExample', 'LabeledImage',
    'Tensor', 'Model', 'ModelSet', 'NppOutputTable', 'QueryResult', 'TrainConfig',
]
