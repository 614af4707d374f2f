"""Adam com correção de viés, determinístico"""

from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from ..models.training import OptimizerConfig
from ..utils.errors import NonFiniteError

Params = Dict[str, np.ndarray]


@dataclass
class AdamState:
    step: int = 0
    m: Params = field(default_factory=dict)
    v: Params = field(default_factory=dict)


def adam_step(params: Params, grads: Mapping[str, np.ndarray], state: AdamState, config: OptimizerConfig,
              learning_rate: Optional[float] = None) -> Tuple[Params, AdamState]:
    """
    Um passo de Adam, atualizando params e state no lugar

    Args:
        params: Nome -> array de parâmetros
        grads: Nome -> gradiente (mesmo formato)
        state: Momentos e contador de passos
        config: β1, β2, ε e taxa padrão
        learning_rate: Taxa específica do componente (opcional)

    Returns:
        (params, state) atualizados

    Raises:
        NonFiniteError: algum gradiente não finito (nada é alterado)
    """
    for name, grad in grads.items():
        if not np.all(np.isfinite(grad)):
            raise NonFiniteError(f"gradiente não finito em {name}")
    lr = learning_rate if learning_rate is not None else config.learning_rate
    state.step += 1
    correction1 = 1.0 - config.beta1 ** state.step
    correction2 = 1.0 - config.beta2 ** state.step
    for name, value in params.items():
        grad = grads[name]
        m = state.m.setdefault(name, np.zeros_like(value))
        v = state.v.setdefault(name, np.zeros_like(value))
        m *= config.beta1
        m += (1.0 - config.beta1) * grad
        v *= config.beta2
        v += (1.0 - config.beta2) * grad * grad
        value -= lr * (m / correction1) / (np.sqrt(v / correction2) + config.eps)
    return params, state


class Adam:
    """Um estado de Adam por componente (nome -> parâmetros e gradientes)"""

    def __init__(self, config: OptimizerConfig, learning_rates: Optional[Mapping[str, Optional[float]]] = None):
        self.config = config
        self.learning_rates = dict(learning_rates or {})
        self.states: Dict[str, AdamState] = {}

    def step(self, component: str, params: Params, grads: Mapping[str, np.ndarray]) -> None:
        state = self.states.setdefault(component, AdamState())
        adam_step(params, grads, state, self.config, self.learning_rates.get(component))
