"""Predicados neuro-probabilísticos: redes, circuitos e otimização"""

from .circuit import Circuit, build_pd_structure
from .network import FeedForwardNet
from .optim import Adam, AdamState, adam_step
from .runtime import Npp, NppBank, NppInstance, circuit_logjoint, npp_backward, npp_forward, npp_nll

__all__ = [
    'Circuit', 'build_pd_structure', 'FeedForwardNet', 'Adam', 'AdamState', 'adam_step',
    'Npp', 'NppBank', 'NppInstance', 'circuit_logjoint', 'npp_backward', 'npp_forward', 'npp_nll',
]
