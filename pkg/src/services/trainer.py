"""
Treino de ponta a ponta: L_SLASH = L_NPP + L_ENT com descida coordenada e Adam

Fase A atualiza as NPPs generativas em L_NPP com o caminho de vinculação congelado;
fase B atualiza em L_ENT com L_NPP congelada. Cada fase tem seu próprio estado de
Adam, então uma fase nunca move parâmetros pelo momento da outra.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import psutil

from .engine import query_probability, partial_log_query
from .slash_program import SlashProgram
from ..models.flavors import QueryFlavor
from ..models.ground import NppKey
from ..models.samples import BatchExample
from ..models.training import TrainConfig
from ..npp.optim import Adam
from ..npp.runtime import NppBank, NppInstance
from ..storage.checkpoint import atomic_write, save_checkpoint
from ..utils.errors import DatasetError, NonFiniteError, ZeroQueryProbabilityError
from ..utils.logger import setup_logger

logger = setup_logger()

METRIC_KEYS = ('epoch', 'l_npp', 'l_ent', 'l_slash', 'task_metric', 'skipped_examples')


@dataclass
class EpochMetrics:
    epoch: int
    l_npp: float
    l_ent: float
    task_metric: Optional[float]
    skipped_examples: int

    @property
    def l_slash(self) -> float:
        return self.l_npp + self.l_ent

    def to_dict(self) -> dict:
        values = {'epoch': self.epoch, 'l_npp': self.l_npp, 'l_ent': self.l_ent, 'l_slash': self.l_slash,
                  'task_metric': self.task_metric, 'skipped_examples': self.skipped_examples}
        return {k: values[k] for k in METRIC_KEYS}


@dataclass
class TrainingReport:
    epochs: List[EpochMetrics] = field(default_factory=list)
    checkpoint: Optional[str] = None
    metrics_path: Optional[str] = None

    def to_dict(self) -> dict:
        return {'epochs': [e.to_dict() for e in self.epochs], 'checkpoint': self.checkpoint,
                'metrics': self.metrics_path}


@dataclass
class EntailmentResult:
    loss: float
    used: int
    skipped: int
    gradients: Dict[Tuple[NppKey, QueryFlavor], np.ndarray]


def _finite(values) -> bool:
    return all(np.all(np.isfinite(v)) for v in values)


class Trainer:
    """Dono de todo o estado mutável dos parâmetros durante o treino"""

    def __init__(self, slash: SlashProgram, bank: NppBank, config: TrainConfig):
        self.slash = slash
        self.bank = bank
        self.config = config
        self.optimizers = {
            'npp': Adam(config.optimizer, bank.learning_rates),
            'ent': Adam(config.optimizer, bank.learning_rates),
        }
        # contador global: a alternância de fases continua entre épocas
        self.batches_seen = 0

    # --- perdas ---

    def nll_loss_and_grad(self, batch: Sequence[BatchExample],
                          instances: Optional[Dict[NppKey, NppInstance]] = None,
                          backward: bool = True) -> Tuple[float, np.ndarray]:
        """
        L_NPP: soma de −log Σ_v P(x, v) sobre NPPs generativas e itens do lote

        Returns:
            (L_NPP, log-verossimilhança por exemplo somada sobre as instâncias generativas)
        """
        if not batch:
            raise DatasetError("lote vazio")
        if instances is None:
            instances = self.slash.instances(self.bank, batch)
        per_example = np.zeros(len(batch))
        for inst in instances.values():
            if not inst.npp.flavor.generative:
                continue
            per_example += inst.nll()
            if backward:
                inst.nll_backward()
        loss = math.fsum(per_example.tolist())
        if not math.isfinite(loss):
            raise NonFiniteError("L_NPP não finita")
        return loss, -per_example

    def entailment_loss_and_grad(self, batch: Sequence[BatchExample],
                                 instances: Optional[Dict[NppKey, NppInstance]] = None,
                                 backward: bool = True) -> EntailmentResult:
        """
        L_ENT = média no lote de −w_i log P(Q_i); o gradiente em p é −w_i ∂log P(Q_i)/∂p / B

        Exemplos com P(Q) = 0 ou gradiente não finito são pulados e contados.
        """
        if not batch:
            raise DatasetError("lote vazio")
        if instances is None:
            instances = self.slash.instances(self.bank, batch)
        queries = [self.slash.query(example.query, self.bank.flavors) for example in batch]
        flavors = [self.slash.flavors_for(ast) for ast, _ in queries]
        tables = self.slash.tables(instances, flavors)

        weights = np.ones(len(batch))
        if self.config.schedule.weighting == 'likelihood' and self.bank.generative:
            _, log_likelihood = self.nll_loss_and_grad(batch, instances, backward=False)
            weights = np.where(log_likelihood != 0.0, np.abs(log_likelihood), 1.0)

        losses = []
        partials = []
        skipped = 0
        for row, ((_, constraints), table) in enumerate(zip(queries, tables)):
            models = self.slash.models(constraints)
            try:
                probability, partial = partial_log_query(models, constraints, table)
            except ZeroQueryProbabilityError:
                skipped += 1
                logger.warning(f"⚠️  P(Q) = 0, exemplo ignorado: {batch[row].query.strip()[:80]}")
                continue
            if not _finite(partial.values()):
                skipped += 1
                logger.warning("⚠️  Gradiente não finito, exemplo ignorado")
                continue
            losses.append(-weights[row] * math.log(probability))
            partials.append((row, weights[row], partial))

        used = len(losses)
        gradients: Dict[Tuple[NppKey, QueryFlavor], np.ndarray] = {}
        for row, weight, partial in partials:
            for key, grad in partial.items():
                flavor = flavors[row][key]
                upstream = gradients.setdefault((key, flavor), np.zeros((len(batch), grad.shape[0])))
                upstream[row] = -weight * grad / used
        if backward:
            for (key, flavor), upstream in gradients.items():
                instances[key].backward(upstream, flavor)
        loss = math.fsum(losses) / used if used else 0.0
        return EntailmentResult(loss, used, skipped, gradients)

    # --- otimização ---

    def _step(self, phase: str) -> bool:
        """Passo de Adam em todos os componentes; False (e nada muda) se algum gradiente não é finito"""
        components = list(self.bank.components())
        if not _finite(g for _, _, grads in components for g in grads.values()):
            logger.warning(f"⚠️  Gradiente não finito na fase {phase}; passo descartado")
            return False
        for name, params, grads in components:
            self.optimizers[phase].step(name, params, grads)
        self.bank.project()
        return True

    def _phase(self, batch_index: int) -> str:
        """Fase do lote: blocos de `period` lotes alternam A (npp) e B (ent); sem NPP generativa, só B"""
        if not self.bank.generative:
            return 'ent'
        return 'npp' if (batch_index // self.config.schedule.period) % 2 == 0 else 'ent'

    def train_epoch(self, examples: Sequence[BatchExample], epoch: int, rng: np.random.Generator,
                    evaluate: Optional[Callable[[], float]] = None) -> EpochMetrics:
        order = rng.permutation(len(examples))
        size = self.config.batch_size
        npp_losses, ent_losses = [], []
        skipped = 0
        for batch_index, start in enumerate(range(0, len(order), size)):
            batch = [examples[i] for i in order[start:start + size]]
            phase = self._phase(self.batches_seen)
            self.batches_seen += 1
            self.bank.zero_grad()
            instances = self.slash.instances(self.bank, batch)
            if phase == 'npp':
                loss, _ = self.nll_loss_and_grad(batch, instances)
                npp_losses.append(loss)
            else:
                result = self.entailment_loss_and_grad(batch, instances)
                skipped += result.skipped
                if not math.isfinite(result.loss):
                    raise NonFiniteError(f"L_ENT não finita na época {epoch}, lote {batch_index}")
                if result.used:
                    ent_losses.append(result.loss)
            if not self._step(phase):
                skipped += len(batch)

        metric = evaluate() if evaluate is not None else None
        metrics = EpochMetrics(
            epoch=epoch,
            l_npp=math.fsum(npp_losses) / len(npp_losses) if npp_losses else 0.0,
            l_ent=math.fsum(ent_losses) / len(ent_losses) if ent_losses else 0.0,
            task_metric=metric,
            skipped_examples=skipped,
        )
        logger.debug(f"📊 Memória após época {epoch}: {psutil.Process().memory_info().rss / 2 ** 20:.1f} MiB")
        return metrics

    def train(self, examples: Sequence[BatchExample], evaluate: Optional[Callable[[], float]] = None,
              seed: int = 0, output_dir: Optional[Path] = None) -> TrainingReport:
        """
        Executa as épocas, gravando métricas JSONL e checkpoint ao fim de cada uma

        Args:
            examples: Exemplos de treino (consultas verdadeiras)
            evaluate: Métrica da tarefa, chamada após cada época
            seed: Semente do embaralhamento
            output_dir: Diretório de saída (None = sem arquivos)
        """
        if not examples:
            raise DatasetError("conjunto de treino vazio")
        rng = np.random.default_rng(seed)
        report = TrainingReport()
        lines: List[str] = []
        if output_dir is not None:
            output_dir = Path(output_dir)
            report.metrics_path = str(output_dir / "metrics.jsonl")
            report.checkpoint = str(output_dir / "checkpoint.slnp")

        for epoch in range(1, self.config.epochs + 1):
            metrics = self.train_epoch(examples, epoch, rng, evaluate)
            report.epochs.append(metrics)
            logger.info(f"📊 Época {epoch}: L_NPP={metrics.l_npp:.4f} L_ENT={metrics.l_ent:.4f} "
                        f"métrica={metrics.task_metric} ignorados={metrics.skipped_examples}")
            if output_dir is not None:
                lines.append(json.dumps(metrics.to_dict()))
                with atomic_write(report.metrics_path) as handle:
                    handle.write(("\n".join(lines) + "\n").encode('utf-8'))
                save_checkpoint(report.checkpoint, self.bank.parameters())

        logger.info(f"✅ Treino concluído: {self.config.epochs} épocas")
        return report


def total_query_probability(slash: SlashProgram, example: BatchExample, bank: NppBank) -> float:
    """P(Q) de um exemplo com as NPPs atuais"""
    ast, constraints = slash.query(example.query, bank.flavors)
    instances = slash.instances(bank, [example])
    table = slash.tables(instances, [slash.flavors_for(ast)])[0]
    return query_probability(slash.models(constraints), constraints, table).probability
