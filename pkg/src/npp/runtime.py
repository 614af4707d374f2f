"""
Runtime das NPPs: sabores NN, PC e NN+PC, vinculação de tensores e consultas com sabor

O termo de dados de uma instância h(a1,...,ak) é o seu último argumento; o lote
de tensores ligados a esse termo vira a entrada x da NPP.
"""

from dataclasses import dataclass
from typing import Dict, Iterator, Optional, Tuple

import numpy as np
from scipy.special import logsumexp, softmax

from .circuit import Circuit, CircuitTrace, build_pd_structure
from .network import FeedForwardNet, NetTrace
from ..models.flavors import NppFlavor, QueryFlavor
from ..models.ground import NppKey
from ..models.samples import Tensor
from ..models.training import NppBinding
from ..utils.errors import ShapeError, UnsupportedFlavorError


@dataclass
class Npp:
    """Componentes compartilhados por todas as instâncias de uma NPP"""
    name: str
    flavor: NppFlavor
    outcomes: int
    encoder: Optional[FeedForwardNet] = None
    circuit: Optional[Circuit] = None

    def __post_init__(self):
        if self.flavor is NppFlavor.NN and self.encoder is None:
            raise ShapeError(f"NPP {self.name} (nn) sem rede")
        if self.flavor.generative and self.circuit is None:
            raise ShapeError(f"NPP {self.name} ({self.flavor.value}) sem circuito")
        if self.flavor is NppFlavor.NN_PC and self.encoder is None:
            raise ShapeError(f"NPP {self.name} (nn+pc) sem encoder")
        if self.flavor is NppFlavor.NN_PC and self.encoder.output_width != self.circuit.variable_count:
            raise ShapeError(f"NPP {self.name}: latente de largura {self.encoder.output_width} para circuito "
                             f"com {self.circuit.variable_count} variáveis")
        heads = self.circuit.class_count if self.circuit is not None else self.encoder.output_width
        if heads != self.outcomes:
            raise ShapeError(f"NPP {self.name}: {heads} saídas para {self.outcomes} resultados")

    @property
    def input_width(self) -> int:
        if self.encoder is not None:
            return self.encoder.input_width
        return self.circuit.variable_count

    def instance(self, key: NppKey, tensor: Tensor) -> "NppInstance":
        return NppInstance(self, key, tensor)


class NppInstance:
    """
    Instância ground de uma NPP com o tensor (ou lote de tensores) ligado

    Guarda os forwards já feitos; o backward acumula gradientes nos componentes
    até que sejam zerados.
    """

    def __init__(self, npp: Npp, key: NppKey, tensor: Tensor):
        self.npp = npp
        self.key = key
        self.single = tensor.values.ndim == 1
        values = tensor.values[None, :] if self.single else tensor.values
        mask = None
        if tensor.mask is not None:
            mask = tensor.mask[None, :] if self.single else tensor.mask
        if values.ndim != 2 or values.shape[1] != npp.input_width:
            raise ShapeError(f"{npp.name}: entrada {tensor.shape}, esperado largura {npp.input_width}")
        self.values = values
        self.mask = mask
        self._net: Optional[Tuple[np.ndarray, NetTrace]] = None
        self._joint: Optional[CircuitTrace] = None
        self._marginal: Optional[CircuitTrace] = None
        self._outputs: Dict[QueryFlavor, np.ndarray] = {}

    @property
    def batch_size(self) -> int:
        return self.values.shape[0]

    # --- passes de forward em cache ---

    def _encoder_input(self) -> np.ndarray:
        return self.values if self.mask is None else np.where(self.mask, self.values, 0.0)

    def _encode(self) -> Tuple[np.ndarray, NetTrace]:
        if self._net is None:
            self._net = self.npp.encoder.forward(self._encoder_input())
        return self._net

    def log_joint(self) -> np.ndarray:
        """log P(x, C=c), (B, n)"""
        if self._joint is None:
            if self.npp.flavor is NppFlavor.PC:
                self._joint = self.npp.circuit.forward(self.values, self.mask)
            else:
                latent, _ = self._encode()
                self._joint = self.npp.circuit.forward(latent)
        return self._joint.heads

    def log_prior(self) -> np.ndarray:
        """log P(C=c) com todas as variáveis marginalizadas, (1, n)"""
        if self._marginal is None:
            width = self.npp.circuit.variable_count
            self._marginal = self.npp.circuit.forward(np.zeros((1, width)), np.zeros((1, width), dtype=bool))
        return self._marginal.heads

    def _check_flavor(self, flavor: QueryFlavor) -> None:
        if flavor not in self.npp.flavor.supported_queries:
            raise UnsupportedFlavorError(
                f"NPP {self.npp.name} ({self.npp.flavor.value}) não responde consultas {flavor.value}")

    def forward(self, flavor: QueryFlavor = QueryFlavor.CONDITIONAL) -> np.ndarray:
        self._check_flavor(flavor)
        if flavor not in self._outputs:
            if self.npp.flavor is NppFlavor.NN:
                output = self._encode()[0]
            elif flavor is QueryFlavor.CONDITIONAL:
                output = softmax(self.log_joint(), axis=1)
            elif flavor is QueryFlavor.JOINT:
                output = np.exp(self.log_joint())
            elif flavor is QueryFlavor.LIKELIHOOD:
                output = np.exp(self.log_joint() - self.log_prior())
            else:
                output = np.repeat(np.exp(self.log_prior()), self.batch_size, axis=0)
            self._outputs[flavor] = output
        output = self._outputs[flavor]
        return output[0] if self.single else output

    def backward(self, upstream: np.ndarray, flavor: QueryFlavor = QueryFlavor.CONDITIONAL) -> None:
        if flavor not in self._outputs:
            raise RuntimeError(f"backward sem forward ({self.npp.name}, {flavor.value})")
        p = self._outputs[flavor]
        upstream = np.asarray(upstream, dtype=np.float64)
        if self.single and upstream.ndim == 1:
            upstream = upstream[None, :]
        if upstream.shape != p.shape:
            raise ShapeError(f"gradiente {upstream.shape} incompatível com p {p.shape}")

        if self.npp.flavor is NppFlavor.NN:
            _, trace = self._net
            self.npp.encoder.backward(trace, upstream)
            return
        if flavor is QueryFlavor.CONDITIONAL:
            self._backward_joint(p * (upstream - (upstream * p).sum(axis=1, keepdims=True)))
        elif flavor is QueryFlavor.JOINT:
            self._backward_joint(upstream * p)
        elif flavor is QueryFlavor.LIKELIHOOD:
            self._backward_joint(upstream * p)
            self.npp.circuit.backward(self._marginal, -(upstream * p).sum(axis=0, keepdims=True))
        else:
            self.npp.circuit.backward(self._marginal, (upstream * p).sum(axis=0, keepdims=True))

    def _backward_joint(self, grad_heads: np.ndarray) -> None:
        grad_x = self.npp.circuit.backward(self._joint, grad_heads)
        if self.npp.flavor is NppFlavor.NN_PC:
            _, trace = self._net
            self.npp.encoder.backward(trace, grad_x)

    # --- L_NPP ---

    def nll(self) -> np.ndarray:
        """−log Σ_v P(x, C=v) por exemplo"""
        if not self.npp.flavor.generative:
            raise UnsupportedFlavorError(f"NPP {self.npp.name} (nn) não tem verossimilhança")
        values = -logsumexp(self.log_joint(), axis=1)
        return values[0] if self.single else values

    def nll_backward(self, weights: Optional[np.ndarray] = None) -> None:
        if self._joint is None:
            raise RuntimeError(f"backward sem forward ({self.npp.name}, nll)")
        heads = self._joint.heads
        weights = np.ones(heads.shape[0]) if weights is None else np.broadcast_to(
            np.asarray(weights, dtype=np.float64), (heads.shape[0],))
        self._backward_joint(-weights[:, None] * softmax(heads, axis=1))


def circuit_logjoint(circuit: Circuit, x: Tensor) -> np.ndarray:
    """Vetor de log P(x, C=v), com as variáveis mascaradas marginalizadas"""
    heads = circuit.log_joint(x.values, x.mask)
    return heads[0] if x.values.ndim == 1 else heads


def npp_forward(inst: NppInstance, flavor: QueryFlavor = QueryFlavor.CONDITIONAL) -> np.ndarray:
    return inst.forward(flavor)


def npp_backward(inst: NppInstance, upstream: np.ndarray, flavor: QueryFlavor = QueryFlavor.CONDITIONAL) -> None:
    inst.backward(upstream, flavor)


def npp_nll(inst: NppInstance):
    return inst.nll()


class NppBank:
    """
    NPPs vinculadas às declarações do programa; encoders podem ser compartilhados
    entre NPPs do mesmo grupo
    """

    def __init__(self):
        self.npps: Dict[str, Npp] = {}
        self.encoders: Dict[str, FeedForwardNet] = {}
        self.learning_rates: Dict[str, Optional[float]] = {}

    @classmethod
    def from_bindings(cls, bindings: Dict[str, NppBinding], outcomes: Dict[str, int],
                      components: int = 8, seed: int = 0,
                      logvar_range: Tuple[float, float] = (-7.0, 2.0)) -> "NppBank":
        """
        Constrói as NPPs a partir da configuração

        Args:
            bindings: Nome da implementação -> NppBinding
            outcomes: Nome da implementação -> número de resultados declarados
            components: K padrão dos circuitos
            seed: Semente base (cada componente deriva a sua)
        """
        bank = cls()
        for index, (name, binding) in enumerate(sorted(bindings.items())):
            if name not in outcomes:
                raise UnsupportedFlavorError(f"implementação {name} não usada por nenhuma NPP do programa")
            n = outcomes[name]
            input_width = int(np.prod(binding.input_shape))
            encoder = None
            circuit = None
            if binding.flavor is NppFlavor.NN:
                encoder = bank._encoder(binding.encoder or name, [input_width] + binding.hidden + [n],
                                        ['relu'] * len(binding.hidden) + ['identity'], 'softmax', seed + index)
            else:
                grid = binding.latent_shape if binding.flavor is NppFlavor.NN_PC else binding.input_shape
                height, width = (grid[0], grid[1]) if len(grid) == 2 else (1, grid[0])
                if binding.flavor is NppFlavor.NN_PC:
                    encoder = bank._encoder(binding.encoder or name, [input_width] + binding.hidden + [width * height],
                                            ['relu'] * len(binding.hidden) + ['sigmoid'], 'latent', seed + index)
                circuit = build_pd_structure(width, height, binding.pieces, binding.components or components, n,
                                             binding.leaf, binding.states, seed + 1000 + index, logvar_range)
            bank.npps[name] = Npp(name, binding.flavor, n, encoder, circuit)
            if circuit is not None:
                bank.learning_rates[f"pc:{name}"] = binding.learning_rate
            if encoder is not None:
                bank.learning_rates.setdefault(f"net:{binding.encoder or name}", binding.learning_rate)
        return bank

    def _encoder(self, group: str, sizes, activations, head: str, seed: int) -> FeedForwardNet:
        if group in self.encoders:
            existing = self.encoders[group]
            if existing.sizes != list(sizes) or existing.head != head:
                raise ShapeError(f"encoder compartilhado {group} com formatos incompatíveis")
            return existing
        self.encoders[group] = FeedForwardNet(sizes, activations, head, seed)
        return self.encoders[group]

    def npp(self, name: str) -> Npp:
        try:
            return self.npps[name]
        except KeyError:
            raise UnsupportedFlavorError(f"nenhuma implementação registrada para {name}") from None

    @property
    def flavors(self) -> Dict[str, NppFlavor]:
        return {name: npp.flavor for name, npp in self.npps.items()}

    @property
    def generative(self) -> bool:
        return any(npp.flavor.generative for npp in self.npps.values())

    def components(self) -> Iterator[Tuple[str, Dict[str, np.ndarray], Dict[str, np.ndarray]]]:
        """(nome do componente, parâmetros, gradientes) em ordem estável"""
        for group in sorted(self.encoders):
            net = self.encoders[group]
            yield f"net:{group}", net.params, net.grads
        for name in sorted(self.npps):
            circuit = self.npps[name].circuit
            if circuit is not None:
                yield f"pc:{name}", circuit.params, circuit.grads

    def parameters(self) -> Dict[str, Dict[str, np.ndarray]]:
        return {name: params for name, params, _ in self.components()}

    def zero_grad(self) -> None:
        for _, _, grads in self.components():
            for grad in grads.values():
                grad.fill(0.0)

    def project(self) -> None:
        for npp in self.npps.values():
            if npp.circuit is not None:
                npp.circuit.project()

    def load(self, components: Dict[str, Dict[str, np.ndarray]]) -> None:
        """Copia parâmetros de um checkpoint, conferindo nomes e formatos"""
        own = self.parameters()
        if set(components) != set(own):
            raise ShapeError(f"checkpoint com componentes {sorted(components)}; esperado {sorted(own)}")
        for name, blocks in components.items():
            if set(blocks) != set(own[name]):
                raise ShapeError(f"componente {name}: blocos {sorted(blocks)} diferentes dos esperados")
            for block, value in blocks.items():
                if own[name][block].shape != value.shape:
                    raise ShapeError(f"{name}/{block}: formato {value.shape}, esperado {own[name][block].shape}")
                own[name][block][...] = value
