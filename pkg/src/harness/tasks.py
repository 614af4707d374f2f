"""Montagem dos experimentos a partir da configuração de treino"""

from dataclasses import dataclass
from typing import Callable, List, Optional

from . import attribute_world, mnist
from .metrics import average_precision, digit_accuracy
from ..models.samples import BatchExample
from ..models.training import TrainConfig
from ..npp.runtime import NppBank
from ..utils.errors import UsageError
from ..utils.logger import setup_logger

logger = setup_logger()


@dataclass
class Task:
    """Exemplos de treino e a métrica da tarefa sobre o conjunto de teste"""
    name: str
    metric: str
    train: List[BatchExample]
    evaluate: Callable[[NppBank], float]


def mnist_task(config: TrainConfig, seed: int, test_missing: Optional[float] = None) -> Task:
    dataset = config.dataset
    if len(config.npp_bindings) != 1:
        raise UsageError("MNIST-Addition espera exatamente uma NPP de dígitos")
    npp_name = next(iter(config.npp_bindings))
    directory = mnist.mnist_directory(dataset.mnist_dir)
    train_images = mnist.prepare_images(mnist.load_split(directory, 'train', dataset.train_limit), dataset.downscale)
    test_images = mnist.load_split(directory, 'test', dataset.test_limit)
    missing = dataset.missing if test_missing is None else test_missing
    test_images = mnist.prepare_test_images(test_images, dataset.downscale, missing, seed + 1)
    _, examples = mnist.addition_dataset(train_images, seed, dataset.missing)
    logger.info(f"📊 MNIST-Addition: {len(examples)} pares de treino, {len(test_images)} imagens de teste")
    return Task('mnist_addition', 'digit_accuracy', examples,
                lambda bank: digit_accuracy(bank.npp(npp_name), test_images))


def attribute_world_task(config: TrainConfig, seed: int) -> Task:
    dataset = config.dataset
    train = attribute_world.gen_attribute_world(dataset.count, seed, dataset.noise, dataset.feature_dim)
    test = attribute_world.gen_attribute_world(dataset.test_count, seed + 1, dataset.noise, dataset.feature_dim)
    truth = [sample.objects for sample in test]
    logger.info(f"📊 Mundo de atributos: {len(train)} amostras de treino, {len(test)} de teste")
    return Task('attribute_world', 'average_precision',
                [attribute_world.to_batch_example(sample) for sample in train],
                lambda bank: average_precision(attribute_world.predict_objects(bank, test), truth))


def load_task(config: TrainConfig, seed: int, test_missing: Optional[float] = None) -> Task:
    if config.dataset.kind == 'mnist_addition':
        return mnist_task(config, seed, test_missing)
    return attribute_world_task(config, seed)
