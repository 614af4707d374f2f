"""Rede feed-forward com backpropagation manual (numpy)"""

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy.special import expit, softmax

from ..utils.errors import NonFiniteError, ShapeError

ACTIVATIONS = ('relu', 'identity', 'sigmoid')
HEADS = ('softmax', 'latent')


def _activate(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == 'relu':
        return np.maximum(z, 0.0)
    if activation == 'sigmoid':
        return expit(z)
    return z


def _activation_grad(z: np.ndarray, out: np.ndarray, activation: str) -> np.ndarray:
    if activation == 'relu':
        return (z > 0.0).astype(np.float64)
    if activation == 'sigmoid':
        return out * (1.0 - out)
    return np.ones_like(z)


@dataclass
class NetTrace:
    inputs: List[np.ndarray]       # entrada de cada camada
    preactivations: List[np.ndarray]
    outputs: List[np.ndarray]      # saída de cada camada (após a ativação)
    result: np.ndarray             # softmax ou vetor latente


class FeedForwardNet:
    """
    Camadas densas (pesos, vieses, ativação) com cabeça softmax sobre n classes
    ou vetor latente de largura d
    """

    def __init__(self, sizes: Sequence[int], activations: Sequence[str], head: str = 'softmax', seed: int = 0):
        if len(sizes) < 2 or len(activations) != len(sizes) - 1:
            raise ShapeError(f"dimensões {list(sizes)} incompatíveis com ativações {list(activations)}")
        for activation in activations:
            if activation not in ACTIVATIONS:
                raise ShapeError(f"ativação desconhecida: {activation}")
        if head not in HEADS:
            raise ShapeError(f"cabeça desconhecida: {head}")
        self.sizes = list(sizes)
        self.activations = list(activations)
        self.head = head

        rng = np.random.default_rng(seed)
        self.params: Dict[str, np.ndarray] = {}
        for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            # He
            self.params[f'layer{i}.weight'] = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))
            self.params[f'layer{i}.bias'] = np.zeros(fan_out)
        self.grads: Dict[str, np.ndarray] = {name: np.zeros_like(p) for name, p in self.params.items()}

    @property
    def layer_count(self) -> int:
        return len(self.activations)

    @property
    def input_width(self) -> int:
        return self.sizes[0]

    @property
    def output_width(self) -> int:
        return self.sizes[-1]

    def zero_grad(self) -> None:
        for grad in self.grads.values():
            grad.fill(0.0)

    def forward(self, x) -> Tuple[np.ndarray, NetTrace]:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.input_width:
            raise ShapeError(f"entrada com formato {x.shape}; rede espera (B, {self.input_width})")
        trace = NetTrace([], [], [], x)
        h = x
        for i, activation in enumerate(self.activations):
            z = h @ self.params[f'layer{i}.weight'] + self.params[f'layer{i}.bias']
            trace.inputs.append(h)
            trace.preactivations.append(z)
            h = _activate(z, activation)
            trace.outputs.append(h)
        trace.result = softmax(h, axis=1) if self.head == 'softmax' else h
        if not np.all(np.isfinite(trace.result)):
            raise NonFiniteError("saída não finita na rede")
        return trace.result, trace

    def backward(self, trace: NetTrace, grad_result: np.ndarray) -> np.ndarray:
        """Acumula gradientes a partir de ∂L/∂saída e devolve ∂L/∂entrada"""
        grad = np.asarray(grad_result, dtype=np.float64)
        if grad.shape != trace.result.shape:
            raise ShapeError(f"gradiente {grad.shape} incompatível com saída {trace.result.shape}")
        if self.head == 'softmax':
            p = trace.result
            grad = p * (grad - (grad * p).sum(axis=1, keepdims=True))
        for i in reversed(range(self.layer_count)):
            grad = grad * _activation_grad(trace.preactivations[i], trace.outputs[i], self.activations[i])
            self.grads[f'layer{i}.weight'] += trace.inputs[i].T @ grad
            self.grads[f'layer{i}.bias'] += grad.sum(axis=0)
            grad = grad @ self.params[f'layer{i}.weight'].T
        return grad
