"""
Circuitos probabilísticos com estrutura Poon-Domingos

Regiões são retângulos do grid W×H; cada região é cortada em posições múltiplas de
cada tamanho de peça, nos dois eixos. Regiões sem corte possível são folhas (células
elementares) e particionam o grid. Cada região interna tem K somas sobre os produtos
(K×K por partição) de suas duas sub-regiões; a raiz tem uma soma por classe, com pesos
normalizados em conjunto, de modo que Σ_c ∫ P(x, C=c) dx = 1.

Tudo em espaço logarítmico e float64.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp, softmax

from ..utils.errors import NonFiniteError, ShapeError

LOG_2PI = math.log(2.0 * math.pi)
LEAF_KINDS = ('gaussian', 'categorical')


@dataclass(frozen=True, order=True)
class Region:
    """Retângulo [x0,x1) × [y0,y1)"""
    x0: int
    x1: int
    y0: int
    y1: int

    @property
    def area(self) -> int:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def variables(self, grid_width: int) -> np.ndarray:
        return np.array([y * grid_width + x for y in range(self.y0, self.y1) for x in range(self.x0, self.x1)],
                        dtype=np.int64)

    def splits(self, pieces: Sequence[int]) -> List[Tuple["Region", "Region"]]:
        cuts = set()
        for delta in pieces:
            cuts.update(('x', k) for k in range(self.x0 + 1, self.x1) if k % delta == 0)
            cuts.update(('y', k) for k in range(self.y0 + 1, self.y1) if k % delta == 0)
        result = []
        for axis, k in sorted(cuts):
            if axis == 'x':
                result.append((Region(self.x0, k, self.y0, self.y1), Region(k, self.x1, self.y0, self.y1)))
            else:
                result.append((Region(self.x0, self.x1, self.y0, k), Region(self.x0, self.x1, k, self.y1)))
        return result


@dataclass
class PdStructure:
    width: int
    height: int
    pieces: Tuple[int, ...]
    regions: List[Region] = field(default_factory=list)  # ordem crescente de área: filhos antes dos pais
    partitions: Dict[int, List[Tuple[int, int]]] = field(default_factory=dict)
    scopes: Dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def variable_count(self) -> int:
        return self.width * self.height

    @property
    def root(self) -> int:
        return len(self.regions) - 1

    @property
    def leaves(self) -> List[int]:
        return [i for i in range(len(self.regions)) if i not in self.partitions]

    @classmethod
    def build(cls, width: int, height: int, pieces: Sequence[int]) -> "PdStructure":
        if width < 1 or height < 1:
            raise ShapeError(f"grid inválido {width}×{height}")
        if not pieces:
            raise ShapeError("lista de peças vazia")
        for delta in pieces:
            if delta < 1:
                raise ShapeError(f"peça inválida: {delta}")
            if delta > max(width, height):
                raise ShapeError(f"peça {delta} maior que o eixo ({width}×{height})")

        root = Region(0, width, 0, height)
        found = {root}
        frontier = [root]
        splits: Dict[Region, List[Tuple[Region, Region]]] = {}
        while frontier:
            region = frontier.pop()
            splits[region] = region.splits(pieces)
            for pair in splits[region]:
                for child in pair:
                    if child not in found:
                        found.add(child)
                        frontier.append(child)

        ordered = sorted(found, key=lambda r: (r.area, r))
        index = {r: i for i, r in enumerate(ordered)}
        structure = cls(width, height, tuple(pieces), ordered)
        for region in ordered:
            if splits[region]:
                structure.partitions[index[region]] = [(index[a], index[b]) for a, b in splits[region]]
            structure.scopes[index[region]] = region.variables(width)
        return structure


@dataclass
class CircuitTrace:
    """Valores do forward guardados para o backward"""
    x: np.ndarray
    mask: Optional[np.ndarray]
    values: Dict[int, np.ndarray]
    inputs: Dict[int, np.ndarray]
    heads: np.ndarray


class Circuit:
    """Rede soma-produto em camadas com folhas gaussianas ou categóricas"""

    def __init__(self, structure: PdStructure, components: int, class_count: int, leaf: str = 'gaussian',
                 states: int = 2, seed: int = 0, logvar_range: Tuple[float, float] = (-7.0, 2.0)):
        if leaf not in LEAF_KINDS:
            raise ShapeError(f"tipo de folha desconhecido: {leaf}")
        if components < 1 or class_count < 1:
            raise ShapeError("K e número de classes precisam ser positivos")
        self.structure = structure
        self.components = components
        self.class_count = class_count
        self.leaf = leaf
        self.states = states
        self.logvar_range = logvar_range

        rng = np.random.default_rng(seed)
        V, K = structure.variable_count, components
        self.params: Dict[str, np.ndarray] = {}
        if leaf == 'gaussian':
            self.params['leaf.mean'] = rng.uniform(0.0, 1.0, size=(V, K))
            self.params['leaf.logvar'] = np.full((V, K), -1.0)
        else:
            self.params['leaf.logits'] = rng.normal(0.0, 0.1, size=(V, K, states))
        for region in range(len(structure.regions)):
            if region == structure.root:
                continue
            if region in structure.partitions:
                self.params[f'sum.{region}'] = rng.normal(0.0, 0.1, size=(K, self._input_width(region)))
        self.params['sum.root'] = rng.normal(0.0, 0.1, size=(class_count, self._input_width(structure.root)))
        self.grads: Dict[str, np.ndarray] = {name: np.zeros_like(p) for name, p in self.params.items()}

    # --- estrutura ---

    @property
    def variable_count(self) -> int:
        return self.structure.variable_count

    def _input_width(self, region: int) -> int:
        if region in self.structure.partitions:
            return len(self.structure.partitions[region]) * self.components ** 2
        return self.components

    def _weight_name(self, region: int) -> str:
        return 'sum.root' if region == self.structure.root else f'sum.{region}'

    def _log_weights(self, region: int) -> np.ndarray:
        theta = self.params[self._weight_name(region)]
        if region == self.structure.root:
            return theta - logsumexp(theta)
        return theta - logsumexp(theta, axis=1, keepdims=True)

    def audit(self) -> List[str]:
        """Problemas de suavidade/decomponibilidade; lista vazia quando a estrutura é válida"""
        problems = []
        s = self.structure
        for region, pairs in s.partitions.items():
            scope = set(s.scopes[region].tolist())
            for a, b in pairs:
                left, right = set(s.scopes[a].tolist()), set(s.scopes[b].tolist())
                if left & right:
                    problems.append(f"produto não decomponível em {s.regions[region]}")
                if left | right != scope:
                    problems.append(f"soma não suave em {s.regions[region]}")
        covered = [v for leaf in s.leaves for v in s.scopes[leaf].tolist()]
        if sorted(covered) != list(range(s.variable_count)):
            problems.append("folhas não particionam o grid")
        return problems

    # --- parâmetros ---

    def zero_grad(self) -> None:
        for grad in self.grads.values():
            grad.fill(0.0)

    def project(self) -> None:
        """Mantém log-variâncias dentro do intervalo permitido"""
        if 'leaf.logvar' in self.params:
            np.clip(self.params['leaf.logvar'], *self.logvar_range, out=self.params['leaf.logvar'])

    def check_finite(self) -> None:
        for name, value in self.params.items():
            if not np.all(np.isfinite(value)):
                raise NonFiniteError(f"parâmetro não finito no circuito: {name}")

    # --- inferência ---

    def _prepare(self, x, mask):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.variable_count:
            raise ShapeError(f"entrada com formato {x.shape}; circuito espera (B, {self.variable_count})")
        if mask is not None:
            mask = np.asarray(mask, dtype=bool)
            if mask.ndim == 1:
                mask = mask[None, :]
            mask = np.broadcast_to(mask, x.shape)
            x = np.where(mask, x, 0.0)
        return x, mask

    def _states(self, x: np.ndarray) -> np.ndarray:
        """Estados inteiros da folha categórica; entradas fracionárias são rejeitadas"""
        if np.any(x != np.rint(x)):
            raise ShapeError("folha categórica recebeu valores não inteiros")
        states = x.astype(np.int64)
        if np.any(states < 0) or np.any(states >= self.states):
            raise ShapeError(f"estado fora de [0, {self.states}) em folha categórica")
        return states

    def _leaf_loglik(self, x: np.ndarray, mask: Optional[np.ndarray]) -> np.ndarray:
        """(B, V, K); variável marginalizada contribui log 1 = 0"""
        if self.leaf == 'gaussian':
            mean, logvar = self.params['leaf.mean'], self.params['leaf.logvar']
            diff = x[:, :, None] - mean[None]
            ll = -0.5 * (LOG_2PI + logvar[None] + diff ** 2 * np.exp(-logvar)[None])
        else:
            logp = self.params['leaf.logits'] - logsumexp(self.params['leaf.logits'], axis=2, keepdims=True)
            states = self._states(x)
            ll = logp[np.arange(self.variable_count)[None, :], :, states]
        if mask is not None:
            ll = np.where(mask[:, :, None], ll, 0.0)
        return ll

    def forward(self, x, mask=None) -> CircuitTrace:
        """
        Avalia log P(x, C=c) para cada classe

        Args:
            x: (B, V) ou (V,)
            mask: Booleana, True = observado; None = tudo observado

        Returns:
            CircuitTrace com heads de formato (B, C)
        """
        self.check_finite()
        x, mask = self._prepare(x, mask)
        s = self.structure
        leaf_ll = self._leaf_loglik(x, mask)
        batch, K = x.shape[0], self.components

        values: Dict[int, np.ndarray] = {}
        inputs: Dict[int, np.ndarray] = {}
        for leaf in s.leaves:
            values[leaf] = leaf_ll[:, s.scopes[leaf], :].sum(axis=1)
        for region in range(len(s.regions)):
            if region in s.partitions:
                blocks = [(values[a][:, :, None] + values[b][:, None, :]).reshape(batch, K * K)
                          for a, b in s.partitions[region]]
                inputs[region] = np.concatenate(blocks, axis=1)
            elif region == s.root:
                inputs[region] = values[region]
            else:
                continue
            if region != s.root:
                values[region] = logsumexp(inputs[region][:, None, :] + self._log_weights(region)[None], axis=2)

        heads = logsumexp(inputs[s.root][:, None, :] + self._log_weights(s.root)[None], axis=2)
        if not np.all(np.isfinite(heads)):
            raise NonFiniteError("log-densidade não finita no circuito")
        return CircuitTrace(x, mask, values, inputs, heads)

    def log_joint(self, x, mask=None) -> np.ndarray:
        return self.forward(x, mask).heads

    def backward(self, trace: CircuitTrace, grad_heads: np.ndarray) -> np.ndarray:
        """
        Acumula gradientes dos parâmetros a partir de ∂L/∂heads

        Returns:
            ∂L/∂x de formato (B, V) (zero para folhas categóricas e variáveis marginalizadas)
        """
        s = self.structure
        grad_heads = np.asarray(grad_heads, dtype=np.float64)
        if grad_heads.shape != trace.heads.shape:
            raise ShapeError(f"gradiente {grad_heads.shape} incompatível com saídas {trace.heads.shape}")
        batch, K = trace.x.shape[0], self.components
        grad_values: Dict[int, np.ndarray] = {}

        def mixture(region: int, outputs: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
            log_w = self._log_weights(region)
            posterior = np.exp(log_w[None] + trace.inputs[region][:, None, :] - outputs[:, :, None])
            grad_log_w = np.einsum('bk,bkm->km', grad_out, posterior)
            theta = self.params[self._weight_name(region)]
            if region == s.root:
                grad_theta = grad_log_w - softmax(theta, axis=None) * grad_log_w.sum()
            else:
                grad_theta = grad_log_w - softmax(theta, axis=1) * grad_log_w.sum(axis=1, keepdims=True)
            self.grads[self._weight_name(region)] += grad_theta
            return np.einsum('bk,bkm->bm', grad_out, posterior)

        def distribute(region: int, grad_inputs: np.ndarray) -> None:
            if region not in s.partitions:
                grad_values[region] = grad_values.get(region, 0.0) + grad_inputs
                return
            for p, (a, b) in enumerate(s.partitions[region]):
                block = grad_inputs[:, p * K * K:(p + 1) * K * K].reshape(batch, K, K)
                grad_values[a] = grad_values.get(a, 0.0) + block.sum(axis=2)
                grad_values[b] = grad_values.get(b, 0.0) + block.sum(axis=1)

        distribute(s.root, mixture(s.root, trace.heads, grad_heads))
        for region in reversed(range(len(s.regions))):
            if region == s.root or region not in s.partitions or region not in grad_values:
                continue
            distribute(region, mixture(region, trace.values[region], grad_values[region]))

        grad_leaf = np.zeros((batch, self.variable_count, K))
        for leaf in s.leaves:
            if leaf in grad_values:
                grad_leaf[:, s.scopes[leaf], :] += np.asarray(grad_values[leaf])[:, None, :]
        if trace.mask is not None:
            grad_leaf = np.where(trace.mask[:, :, None], grad_leaf, 0.0)
        return self._leaf_backward(trace, grad_leaf)

    def _leaf_backward(self, trace: CircuitTrace, grad_leaf: np.ndarray) -> np.ndarray:
        x = trace.x
        if self.leaf == 'gaussian':
            mean, logvar = self.params['leaf.mean'], self.params['leaf.logvar']
            inv_var = np.exp(-logvar)[None]
            diff = x[:, :, None] - mean[None]
            self.grads['leaf.mean'] += (grad_leaf * diff * inv_var).sum(axis=0)
            self.grads['leaf.logvar'] += (grad_leaf * (0.5 * diff ** 2 * inv_var - 0.5)).sum(axis=0)
            return -(grad_leaf * diff * inv_var).sum(axis=2)

        logits = self.params['leaf.logits']
        probs = softmax(logits, axis=2)
        states = self._states(x)
        grad_logits = -probs * grad_leaf.sum(axis=0)[:, :, None]
        for state in range(self.states):
            grad_logits[:, :, state] += (grad_leaf * (states == state)[:, :, None]).sum(axis=0)
        self.grads['leaf.logits'] += grad_logits
        return np.zeros_like(x)


def build_pd_structure(width: int, height: int, pieces: Sequence[int], K: int, class_count: int,
                       leaf: str = 'gaussian', states: int = 2, seed: int = 0,
                       logvar_range: Tuple[float, float] = (-7.0, 2.0)) -> Circuit:
    """
    Constrói um circuito Poon-Domingos sobre um grid width × height

    Args:
        width: Largura do grid
        height: Altura do grid
        pieces: Tamanhos de peça; cortes nos múltiplos de cada um
        K: Componentes por região
        class_count: Número de cabeças na raiz
        leaf: 'gaussian' ou 'categorical'
        states: Estados das folhas categóricas
        seed: Semente da inicialização

    Returns:
        Circuit com escopo width·height variáveis
    """
    structure = PdStructure.build(width, height, pieces)
    return Circuit(structure, K, class_count, leaf, states, seed, logvar_range)
